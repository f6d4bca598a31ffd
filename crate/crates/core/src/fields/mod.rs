//! Velocity and pressure fields: reconstruction, identity checks,
//! explicit examples, localization and plane sections.

mod axisym;
mod cartesian;
mod geometry;
mod section;
mod torus;

pub use axisym::{
    bernoulli_audit, clairaut_defect, equivalence_transform, euler_residuals, reconstruct_generatrix, reconstruct_psi,
    swirl_velocity, AxisymField, AxisymResiduals, IsobarSpeed,
};
pub use cartesian::{
    cartesian_euler_residuals, localize, make_evendim_flow, sample_cartesian, speed_pressure_defect, trajectory, Bump,
    CartesianField, CartesianResiduals, EvenDimFlow, FlowEvaluator, FlowSample, LocalizedFlow, Variant,
};
pub use geometry::{verify_geometry, GeneratrixFamily, GeometryReport, GeometrySummary, CYLINDER_TOL};
pub use section::{plane_flux_integral, plane_section_integral, Plane, SectionResult};
pub use torus::{TorusFlow, CUT_CAP_FRACTION, TORUS_MIN_RADIUS};

use serde::{Deserialize, Serialize};

/// Residuals at or below this size count as exactly zero in refinement studies.
pub const EXACT_ZERO: f64 = 1e-12;

/// Max and mean of |value| over the finite entries of a residual grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl Summary {
    pub fn of<'a, I: IntoIterator<Item = &'a f64>>(values: I) -> Summary {
        let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
        for v in values.into_iter().filter(|v| v.is_finite()) {
            max = max.max(v.abs());
            sum += v.abs();
            count += 1;
        }
        Summary { max, mean: if count > 0 { sum / count as f64 } else { 0.0 }, count }
    }
}

/// Observed order log2(coarse/fine) for a halving of the step, or `None`
/// when both maxima are exactly zero (nothing left to converge).
pub fn refinement_slope(coarse: f64, fine: f64) -> Option<f64> {
    if coarse <= EXACT_ZERO && fine <= EXACT_ZERO {
        None
    } else {
        Some((coarse / fine).log2())
    }
}

/// Smallest observed order along a sequence of maxima at h, h/2, h/4, …
/// `None` when every step is exactly converged.
pub fn worst_slope(maxima: &[f64]) -> Option<f64> {
    maxima.windows(2).filter_map(|w| refinement_slope(w[0], w[1])).reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_ignores_nan() {
        let s = Summary::of(&[1.0, -3.0, f64::NAN]);
        assert_eq!((s.max, s.mean, s.count), (3.0, 2.0, 2));
    }

    #[test]
    fn slopes() {
        assert_eq!(refinement_slope(4.0, 1.0), Some(2.0));
        assert_eq!(refinement_slope(0.0, 1e-15), None);
        assert_eq!(worst_slope(&[16.0, 4.0, 2.0]), Some(1.0));
        assert_eq!(worst_slope(&[0.0, 0.0, 0.0]), None);
    }
}
