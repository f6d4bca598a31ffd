use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A sign in {+1, -1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_f64(x: f64) -> Option<Sign> {
        if x == 1.0 {
            Some(Sign::Plus)
        } else if x == -1.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i32(self.value() as i32)
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Sign::from_f64(v).ok_or_else(|| serde::de::Error::custom("sign must be +1 or -1"))
    }
}
