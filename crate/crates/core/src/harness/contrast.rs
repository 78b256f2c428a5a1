use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The named three-group coefficient matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contrast {
    /// `[I_2, -1_2]`, the one-way comparison of all three groups.
    G1,
    /// `(1, -1, 0)`
    G2,
    /// `(1, 0, -1)`
    G3,
    /// `(0, 1, -1)`
    G4,
    /// `(1, -2, 1)`
    G5,
}

impl Contrast {
    pub fn matrix(self) -> DMatrix<f64> {
        match self {
            Self::G1 => anova_contrast(3),
            Self::G2 => DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]),
            Self::G3 => DMatrix::from_row_slice(1, 3, &[1.0, 0.0, -1.0]),
            Self::G4 => DMatrix::from_row_slice(1, 3, &[0.0, 1.0, -1.0]),
            Self::G5 => DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 1.0]),
        }
    }
}

impl std::str::FromStr for Contrast {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "G1" => Ok(Self::G1),
            "G2" => Ok(Self::G2),
            "G3" => Ok(Self::G3),
            "G4" => Ok(Self::G4),
            "G5" => Ok(Self::G5),
            other => Err(Error::InvalidHypothesis(format!("unknown contrast tag `{other}`"))),
        }
    }
}

/// `[I_{k-1}, -1_{k-1}]`.
pub fn anova_contrast(k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k - 1, k, |i, j| {
        if j == k - 1 {
            -1.0
        } else if i == j {
            1.0
        } else {
            0.0
        }
    })
}

/// Rows separated by `;`, entries by `,` (e.g. `"1,-1,0;0,1,-1"`).
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidHypothesis(format!("cannot parse `{}` in `{text}`", v.trim())))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidHypothesis(format!("rows of `{text}` have different lengths")));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), k, rows.into_iter().flatten()))
}

/// Accepts a tag `G1`..`G5`, `anova` (needs `k`), or matrix text.
pub fn resolve_hypothesis(text: &str, k: usize) -> Result<DMatrix<f64>> {
    let trimmed = text.trim();
    if trimmed.eq_ignore_ascii_case("anova") {
        if k < 2 {
            return Err(Error::InvalidHypothesis("anova contrast needs k >= 2".into()));
        }
        return Ok(anova_contrast(k));
    }
    if trimmed.len() == 2 && trimmed[..1].eq_ignore_ascii_case("g") {
        return Ok(trimmed.parse::<Contrast>()?.matrix());
    }
    parse_matrix(trimmed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_matrices() {
        assert_eq!(Contrast::G1.matrix(), DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -1.0, 0.0, 1.0, -1.0]));
        assert_eq!("g5".parse::<Contrast>().unwrap().matrix(), DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 1.0]));
        assert_eq!(anova_contrast(4).shape(), (3, 4));
        assert_eq!(anova_contrast(4)[(2, 3)], -1.0);
        assert_eq!(anova_contrast(4)[(2, 2)], 1.0);
    }

    #[test]
    fn parses_text() {
        let g = parse_matrix("1, -1, 0; 0,1,-1").unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0]));
        assert!(parse_matrix("1,-1;1").is_err());
        assert!(parse_matrix("1,x").is_err());
        assert_eq!(resolve_hypothesis("G2", 3).unwrap(), Contrast::G2.matrix());
        assert_eq!(resolve_hypothesis("anova", 4).unwrap(), anova_contrast(4));
        assert!(resolve_hypothesis("G9", 3).is_err());
    }
}
