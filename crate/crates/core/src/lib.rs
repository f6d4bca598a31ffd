//! Axisymmetric Gavrilov flows: steady Euler flows whose velocity is
//! orthogonal to the pressure gradient.

pub mod axisolver;
pub mod consistency;
pub mod contour;
pub mod error;
pub mod fields;
pub mod io;
pub mod minpoint;
pub mod ode;
pub mod profiles;
pub mod series;
pub mod sign;

pub use error::{Error, Result};
pub use profiles::{ProfileInit, ProfilePoint, ProfileTriple, Termination};
pub use series::RationalSeries;
pub use sign::Sign;
