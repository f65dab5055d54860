//! Squashing rewards and value estimates into the unit interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizeError {
    #[error("non-finite input at index {0}")]
    NonFinite(usize),
    #[error("invalid normalization parameter: {0}")]
    Parameter(String),
    #[error("unknown normalization `{0}` (expected min-max, affine or logistic)")]
    Unknown(String),
}

/// Output value of [`Normalization::MinMax`] on constant input.
pub const CONSTANT_INPUT_VALUE: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    /// `(x - min) / (max - min)` over the whole input; constant input maps to 0.5.
    #[default]
    MinMax,
    /// `clamp(scale * x + offset, 0, 1)`.
    Affine { scale: f64, offset: f64 },
    /// `1 / (1 + exp(-slope * (x - center)))`.
    Logistic { center: f64, slope: f64 },
}

impl Normalization {
    pub fn name(&self) -> &'static str {
        match self {
            Normalization::MinMax => "min-max",
            Normalization::Affine { .. } => "affine",
            Normalization::Logistic { .. } => "logistic",
        }
    }

    fn check(&self) -> Result<(), NormalizeError> {
        let finite = match *self {
            Normalization::MinMax => true,
            Normalization::Affine { scale, offset } => scale.is_finite() && offset.is_finite(),
            Normalization::Logistic { center, slope } => center.is_finite() && slope.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(NormalizeError::Parameter(format!("{self:?}")))
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Normalization::MinMax => f.write_str("min-max"),
            Normalization::Affine { scale, offset } => write!(f, "affine(scale={scale}, offset={offset})"),
            Normalization::Logistic { center, slope } => {
                write!(f, "logistic(center={center}, slope={slope})")
            }
        }
    }
}

/// Parses the bare tag with default parameters: affine is the identity clamp,
/// logistic is the standard sigmoid.
impl FromStr for Normalization {
    type Err = NormalizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min-max" | "min_max" | "minmax" => Ok(Normalization::MinMax),
            "affine" => Ok(Normalization::Affine {
                scale: 1.0,
                offset: 0.0,
            }),
            "logistic" => Ok(Normalization::Logistic {
                center: 0.0,
                slope: 1.0,
            }),
            other => Err(NormalizeError::Unknown(other.to_string())),
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Maps `xs` into `[0, 1]` elementwise under `tag`.
pub fn normalize(xs: &[f64], tag: Normalization) -> Result<Vec<f64>, NormalizeError> {
    tag.check()?;
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(NormalizeError::NonFinite(i));
    }
    let out = match tag {
        Normalization::MinMax => {
            let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let range = max - min;
            if range > 0.0 && range.is_finite() {
                xs.iter().map(|x| ((x - min) / range).clamp(0.0, 1.0)).collect()
            } else if range > 0.0 {
                // max - min overflowed; scale both before subtracting.
                xs.iter()
                    .map(|x| ((x / 2.0 - min / 2.0) / (max / 2.0 - min / 2.0)).clamp(0.0, 1.0))
                    .collect()
            } else {
                vec![CONSTANT_INPUT_VALUE; xs.len()]
            }
        }
        Normalization::Affine { scale, offset } => xs
            .iter()
            .map(|x| {
                let y = scale * x + offset;
                if y.is_nan() {
                    0.0
                } else {
                    y.clamp(0.0, 1.0)
                }
            })
            .collect(),
        Normalization::Logistic { center, slope } => xs
            .iter()
            .map(|x| {
                let y = logistic(slope * (x - center));
                if y.is_nan() {
                    CONSTANT_INPUT_VALUE
                } else {
                    y
                }
            })
            .collect(),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn min_max_endpoints() {
        assert_eq!(normalize(&[0.0, 10.0], Normalization::MinMax).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn min_max_constant_is_half() {
        assert_eq!(
            normalize(&[3.0, 3.0, 3.0], Normalization::MinMax).unwrap(),
            vec![0.5, 0.5, 0.5]
        );
    }

    #[test]
    fn logistic_matches_sigmoid() {
        let out = normalize(
            &[-1.0, 0.0, 1.0],
            Normalization::Logistic {
                center: 0.0,
                slope: 1.0,
            },
        )
        .unwrap();
        let sigma = |x: f64| 1.0 / (1.0 + (-x).exp());
        assert_eq!(out, vec![sigma(-1.0), 0.5, sigma(1.0)]);
    }

    #[test]
    fn affine_clamps() {
        let out = normalize(
            &[-5.0, 0.25, 5.0],
            Normalization::Affine {
                scale: 1.0,
                offset: 0.0,
            },
        )
        .unwrap();
        assert_eq!(out, vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        assert_eq!(
            normalize(&[0.0, f64::NAN], Normalization::MinMax),
            Err(NormalizeError::NonFinite(1))
        );
        assert_eq!(
            normalize(&[f64::INFINITY], Normalization::MinMax),
            Err(NormalizeError::NonFinite(0))
        );
    }

    #[test]
    fn tags_parse() {
        assert_eq!("min-max".parse::<Normalization>().unwrap(), Normalization::MinMax);
        assert!("zscore".parse::<Normalization>().is_err());
    }

    fn tags() -> impl Strategy<Value = Normalization> {
        prop_oneof![
            Just(Normalization::MinMax),
            (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(scale, offset)| Normalization::Affine { scale, offset }),
            (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(center, slope)| Normalization::Logistic { center, slope }),
        ]
    }

    proptest! {
        #[test]
        fn outputs_in_unit_interval(xs in prop::collection::vec(-1e300..1e300f64, 0..20), tag in tags()) {
            for y in normalize(&xs, tag).unwrap() {
                prop_assert!((0.0..=1.0).contains(&y));
            }
        }

        #[test]
        fn min_max_and_affine_are_monotone(
            xs in prop::collection::vec(-1e6..1e6f64, 2..20),
            scale in 0.0..5.0f64,
            offset in -1.0..1.0f64,
        ) {
            for tag in [Normalization::MinMax, Normalization::Affine { scale, offset }] {
                let ys = normalize(&xs, tag).unwrap();
                for i in 0..xs.len() {
                    for j in 0..xs.len() {
                        if xs[i] <= xs[j] {
                            prop_assert!(ys[i] <= ys[j]);
                        }
                    }
                }
            }
        }
    }
}
