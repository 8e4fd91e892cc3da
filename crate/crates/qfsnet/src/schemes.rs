//! Neighborhood statistics that set the effective activation phase.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    Beta,
    Chi,
    Xi,
    Nu,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [Self::Beta, Self::Chi, Self::Xi, Self::Nu];
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Beta => "beta",
            Self::Chi => "chi",
            Self::Xi => "xi",
            Self::Nu => "nu",
        };
        f.write_str(s)
    }
}

impl FromStr for SchemeId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "beta" => Ok(Self::Beta),
            "chi" => Ok(Self::Chi),
            "xi" => Ok(Self::Xi),
            "nu" => Ok(Self::Nu),
            _ => Err(Error::Config(format!("unknown scheme {s:?} (beta|chi|xi|nu)"))),
        }
    }
}

/// Scheme-adjusted neighborhood aggregate, on the raw 0..8 scale.
pub fn scheme_gamma(neigh: &[f64; 8], id: SchemeId) -> f64 {
    match id {
        SchemeId::Beta => neigh.iter().sum(),
        SchemeId::Chi => {
            let mut s = *neigh;
            s.sort_by(f64::total_cmp);
            8.0 * 0.5 * (s[3] + s[4])
        }
        SchemeId::Xi => {
            let sum: f64 = neigh.iter().sum();
            let mean = sum / 8.0;
            if mean <= 0.0 {
                return 0.0;
            }
            let var = neigh.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / 8.0;
            sum * (1.0 + var.sqrt() / mean)
        }
        SchemeId::Nu => {
            let (lo, hi) = neigh
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| (lo.min(m), hi.max(m)));
            8.0 * 0.5 * (lo + hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_neighborhoods_coincide() {
        for c in [0.0, 0.1, 0.37, 1.0] {
            for id in SchemeId::ALL {
                assert!((scheme_gamma(&[c; 8], id) - 8.0 * c).abs() < 1e-12, "{id} {c}");
            }
        }
    }

    #[test]
    fn half_split() {
        let n = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(scheme_gamma(&n, SchemeId::Beta), 4.0);
        assert_eq!(scheme_gamma(&n, SchemeId::Nu), 4.0);
        assert_eq!(scheme_gamma(&n, SchemeId::Chi), 4.0);
    }

    #[test]
    fn heterogeneity_inflates_xi() {
        let n = [0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.9];
        let beta = n.iter().sum::<f64>();
        let mean = beta / 8.0;
        let sd = (n.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / 8.0).sqrt();
        let xi = scheme_gamma(&n, SchemeId::Xi);
        assert!((xi - beta * (1.0 + sd / mean)).abs() < 1e-12);
        assert!(xi > scheme_gamma(&n, SchemeId::Beta));
    }

    #[test]
    fn parse_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.to_string().parse::<SchemeId>().unwrap(), id);
        }
        assert!("gamma".parse::<SchemeId>().is_err());
    }
}
