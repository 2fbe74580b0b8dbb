use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::MetricMeasureSpace;

/// Scale ratio used for the upper constant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum LambdaChoice<T> {
    /// Minimize `lambda^(4 eta) / log lambda` over `lambda >= max(2 kappa, e^(1/(4 eta)))`.
    #[default]
    Optimal,
    Fixed(T),
}

/// `C1 S <= J(x) <= C2 S` with `S = int_0^inf phi(t) t^(2 eta - 1) dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma11Constants<T> {
    pub c1: T,
    pub c2: T,
    /// `(1 + A^2 (2 kappa)^(2 eta))^(1/(2 eta)) / a^(1/eta)`.
    pub lambda_lower: T,
    pub lambda_upper: T,
}

fn upper_factor<T: Real>(lambda: T, eta: T) -> T {
    lambda.powf(T::lit(4.0) * eta) / lambda.ln()
}

/// Upper constant `lambda^(4 eta) / log(lambda) * A^2 (2 kappa)^(2 eta)` and
/// lower constant `1 / (lambda_p^(4 eta) log lambda_p)`.
pub fn lemma11_constants<T: Real>(
    kappa: T,
    eta: T,
    lower: T,
    upper: T,
    choice: LambdaChoice<T>,
) -> Result<Lemma11Constants<T>> {
    for (name, v) in [("kappa", kappa), ("eta", eta), ("a", lower), ("A", upper)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive and finite, got {v}")));
        }
    }
    let two = T::lit(2.0);
    let spread = upper * upper * (two * kappa).powf(two * eta);
    let lambda_upper = match choice {
        // the factor is increasing past its stationary point e^(1/(4 eta))
        LambdaChoice::Optimal => (two * kappa).max((T::lit(4.0) * eta).recip().exp()),
        LambdaChoice::Fixed(l) => {
            if !(l > T::one() && l.is_finite()) {
                return Err(Error::param("lambda", format!("must exceed 1, got {l}")));
            }
            l
        }
    };
    let lambda_lower = (T::one() + spread).powf((two * eta).recip()) / lower.powf(eta.recip());
    if !(lambda_lower > T::one()) {
        return Err(Error::param("a", format!("lower scale ratio {lambda_lower} does not exceed 1")));
    }
    Ok(Lemma11Constants {
        c1: (lambda_lower.powf(T::lit(4.0) * eta) * lambda_lower.ln()).recip(),
        c2: upper_factor(lambda_upper, eta) * spread,
        lambda_lower,
        lambda_upper,
    })
}

pub fn lemma11_constants_for<T: Real>(
    space: &MetricMeasureSpace<T>,
    choice: LambdaChoice<T>,
) -> Result<Lemma11Constants<T>> {
    lemma11_constants(space.kappa(), space.eta(), space.ahlfors_lower(), space.ahlfors_upper(), choice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn line_constants() {
        let c = lemma11_constants(1.0, 1.0, 2.0, 2.0, LambdaChoice::Fixed(2.0)).unwrap();
        assert_relative_eq!(c.lambda_lower, 17f64.sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(c.lambda_lower, 2.0616, epsilon = 1e-4);
        let l: f64 = 17f64.sqrt() / 2.0;
        assert_relative_eq!(c.c1, 1.0 / (l.powi(4) * l.ln()), max_relative = 1e-14);
        assert_relative_eq!(c.c2, 16.0 / 2f64.ln() * 16.0, max_relative = 1e-14);
        assert_relative_eq!(c.c2, 369.3, epsilon = 0.05);
        assert!(c.c1 <= c.c2);
    }

    #[test]
    fn optimal_choice_is_no_worse() {
        for (kappa, eta) in [(1.0, 1.0), (1.0, 0.1), (2.0, 0.5), (1.0, 2.0)] {
            let best = lemma11_constants(kappa, eta, 1.0, 2.0, LambdaChoice::Optimal).unwrap();
            assert!(best.lambda_upper >= 2.0 * kappa);
            for l in [1.01, 1.5, 2.0 * kappa, 2.0 * kappa + 0.5, 10.0] {
                if l < best.lambda_upper {
                    continue;
                }
                let fixed = lemma11_constants(kappa, eta, 1.0, 2.0, LambdaChoice::Fixed(l)).unwrap();
                assert!(best.c2 <= fixed.c2 * (1.0 + 1e-14));
            }
            assert!(best.c1 <= best.c2);
        }
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(lemma11_constants(1.0, 1.0, 2.0, 2.0, LambdaChoice::Fixed(1.0)).is_err());
        assert!(lemma11_constants(1.0, 1.0, 2.0, 2.0, LambdaChoice::Fixed(0.5)).is_err());
        assert!(lemma11_constants(1.0, 0.0, 2.0, 2.0, LambdaChoice::Optimal).is_err());
    }
}
