use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GridFunction;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::MetricMeasureSpace;

const RANDOM_BINS: usize = 16;

/// Named nonnegative test functions, sampled at the points of a space.
///
/// Coordinates are Euclidean; `indicator` and `gaussian` apply the same
/// interval or center on every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant { value: f64 },
    /// `1` on `[lo, hi)` in every coordinate.
    Indicator { lo: f64, hi: f64 },
    /// `exp(-|x - c|^2 / (2 w^2))`.
    Gaussian { center: f64, width: f64 },
    /// Uniform `[0, 1)` values, piecewise constant on 16 bins per axis.
    Random { seed: u64 },
    /// `1` at a single point.
    Cell { id: usize },
}

impl FunctionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FunctionSpec::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                Err(Error::param("constant", format!("must be finite and nonnegative, got {value}")))
            }
            FunctionSpec::Indicator { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                Err(Error::param("indicator", format!("need finite lo < hi, got [{lo}, {hi})")))
            }
            FunctionSpec::Gaussian { center, width } if !(width > 0.0 && width.is_finite() && center.is_finite()) => {
                Err(Error::param("gaussian", format!("need finite center and positive width, got {center}, {width}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<T: Real>(&self, space: &MetricMeasureSpace<T>) -> Result<GridFunction<T>> {
        self.validate()?;
        let n = space.len();
        let values: Vec<T> = match *self {
            FunctionSpec::Constant { value } => vec![T::lit(value); n],
            FunctionSpec::Indicator { lo, hi } => (0..n)
                .map(|i| {
                    let inside = space.point(i).iter().all(|c| {
                        let c = c.as_f64();
                        c >= lo && c < hi
                    });
                    if inside {
                        T::one()
                    } else {
                        T::zero()
                    }
                })
                .collect(),
            FunctionSpec::Gaussian { center, width } => {
                let scale = 2.0 * width * width;
                (0..n)
                    .map(|i| {
                        let r2: f64 = space.point(i).iter().map(|c| (c.as_f64() - center).powi(2)).sum();
                        T::lit((-r2 / scale).exp())
                    })
                    .collect()
            }
            FunctionSpec::Random { seed } => {
                let dim = space.dim();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let table: Vec<f64> = (0..RANDOM_BINS.pow(dim as u32)).map(|_| rng.random::<f64>()).collect();
                let extent = space.extent().as_f64();
                (0..n)
                    .map(|i| {
                        let bin = space.point(i).iter().fold(0usize, |acc, c| {
                            let b = ((c.as_f64() / extent) * RANDOM_BINS as f64).floor();
                            acc * RANDOM_BINS + (b.max(0.0) as usize).min(RANDOM_BINS - 1)
                        });
                        T::lit(table[bin])
                    })
                    .collect()
            }
            FunctionSpec::Cell { id } => {
                space.check_id(id)?;
                (0..n).map(|i| if i == id { T::one() } else { T::zero() }).collect()
            }
        };
        GridFunction::nonneg(values)
    }

    /// Concentrated copy `f(about + lambda (x - about))`; only the analytic
    /// families can be dilated.
    pub fn dilated(&self, lambda: f64, about: f64) -> Result<FunctionSpec> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
        }
        let pull = |v: f64| about + (v - about) / lambda;
        match *self {
            FunctionSpec::Gaussian { center, width } => {
                Ok(FunctionSpec::Gaussian { center: pull(center), width: width / lambda })
            }
            FunctionSpec::Indicator { lo, hi } => Ok(FunctionSpec::Indicator { lo: pull(lo), hi: pull(hi) }),
            FunctionSpec::Constant { .. } | FunctionSpec::Random { .. } | FunctionSpec::Cell { .. } => {
                Err(Error::param("function", format!("`{self}` has no analytic dilation")))
            }
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Constant { value } => write!(f, "constant:{value}"),
            FunctionSpec::Indicator { lo, hi } => write!(f, "indicator:{lo},{hi}"),
            FunctionSpec::Gaussian { center, width } => write!(f, "gaussian:{center},{width}"),
            FunctionSpec::Random { seed } => write!(f, "random:{seed}"),
            FunctionSpec::Cell { id } => write!(f, "cell:{id}"),
        }
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::Parse(format!("bad function spec `{s}`"));
        let floats = |want: usize| -> Result<Vec<f64>> {
            let v = args
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            if v.len() == want {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        let spec = match kind.trim() {
            "constant" => FunctionSpec::Constant { value: floats(1)?[0] },
            "indicator" => {
                let v = floats(2)?;
                FunctionSpec::Indicator { lo: v[0], hi: v[1] }
            }
            "gaussian" => {
                let v = floats(2)?;
                FunctionSpec::Gaussian { center: v[0], width: v[1] }
            }
            "random" => FunctionSpec::Random { seed: args.trim().parse().map_err(|_| bad())? },
            "cell" => FunctionSpec::Cell { id: args.trim().parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_cantor, build_euclidean_grid};

    #[test]
    fn parse_round_trip() {
        for s in ["constant:1", "indicator:0.25,0.5", "gaussian:0.5,0.1", "random:42", "cell:3"] {
            let spec: FunctionSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        for s in ["constant:-1", "indicator:0.5,0.2", "gaussian:0.5,0", "wave:1", "random:x", "constant:1,2"] {
            assert!(s.parse::<FunctionSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn samples_on_grid() {
        let s = build_euclidean_grid::<f64>(1, 8, 1.0).unwrap();
        let ind = FunctionSpec::Indicator { lo: 0.25, hi: 0.5 }.sample(&s).unwrap();
        assert_eq!(ind.values(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let cell = FunctionSpec::Cell { id: 5 }.sample(&s).unwrap();
        assert_eq!(cell.values().iter().sum::<f64>(), 1.0);
        assert!(FunctionSpec::Cell { id: 8 }.sample(&s).is_err());
        let g = FunctionSpec::Gaussian { center: 0.5, width: 0.1 }.sample(&s).unwrap();
        assert!(g.values()[3] > g.values()[0]);
        assert!((g.values()[3] - g.values()[4]).abs() < 1e-15);
    }

    #[test]
    fn random_is_seeded_and_binned() {
        let s = build_euclidean_grid::<f64>(1, 64, 1.0).unwrap();
        let a = FunctionSpec::Random { seed: 9 }.sample(&s).unwrap();
        let b = FunctionSpec::Random { seed: 9 }.sample(&s).unwrap();
        let c = FunctionSpec::Random { seed: 10 }.sample(&s).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // 64 points, 16 bins: runs of 4 equal values
        for chunk in a.values().chunks(4) {
            assert!(chunk.iter().all(|&v| v == chunk[0]));
        }
        let cantor = build_cantor::<f64>(4, 1.0 / 3.0).unwrap();
        assert!(FunctionSpec::Random { seed: 1 }.sample(&cantor).unwrap().is_nonneg());
    }

    #[test]
    fn dilation_concentrates_about_point() {
        let g = FunctionSpec::Gaussian { center: 0.6, width: 0.1 };
        assert_eq!(g.dilated(2.0, 0.5).unwrap(), FunctionSpec::Gaussian { center: 0.55, width: 0.05 });
        assert_eq!(g.dilated(1.0, 0.5).unwrap(), g);
        let i = FunctionSpec::Indicator { lo: 0.3, hi: 0.7 };
        assert_eq!(i.dilated(2.0, 0.5).unwrap(), FunctionSpec::Indicator { lo: 0.4, hi: 0.6 });
        assert!(FunctionSpec::Random { seed: 1 }.dilated(2.0, 0.5).is_err());
        assert!(g.dilated(0.0, 0.5).is_err());
    }
}
