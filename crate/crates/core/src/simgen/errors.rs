use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::Error;

/// Unit-variance, mean-zero score distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorDist {
    #[default]
    Gaussian,
    /// `t_4 / sqrt(2)`
    T4Scaled,
    /// `(chi2_4 - 4) / (2 sqrt(2))`
    Chisq4Scaled,
}

impl std::str::FromStr for ErrorDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "t4" | "t4_scaled" => Ok(Self::T4Scaled),
            "chisq4" | "chisq4_scaled" => Ok(Self::Chisq4Scaled),
            other => Err(Error::InvalidArgument(format!("unknown error distribution `{other}`"))),
        }
    }
}

impl ErrorDist {
    pub fn label(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::T4Scaled => "t4_scaled",
            Self::Chisq4Scaled => "chisq4_scaled",
        }
    }
}

fn chisq4<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (0..4).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum()
}

pub fn error_draw<R: Rng + ?Sized>(dist: ErrorDist, rng: &mut R) -> f64 {
    match dist {
        ErrorDist::Gaussian => rng.sample(StandardNormal),
        ErrorDist::T4Scaled => {
            let z: f64 = rng.sample(StandardNormal);
            z / (chisq4(rng) / 4.0).sqrt() / std::f64::consts::SQRT_2
        }
        ErrorDist::Chisq4Scaled => (chisq4(rng) - 4.0) / (2.0 * std::f64::consts::SQRT_2),
    }
}
