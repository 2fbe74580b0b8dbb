use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nonincreasing, nonnegative profile `phi(t)` for `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelProfile<T> {
    /// `t^-alpha` on `(0, cutoff)`, zero afterwards.
    PowerCutoff { alpha: T, cutoff: T },
    /// `1` on `(0, 1)`, `t^-beta` on `[1, inf)`.
    Tail { beta: T },
    /// `exp(-t)`.
    Exponential,
    /// Indicator of `(0, radius)`.
    Indicator { radius: T },
    /// `t^-gamma` on all of `(0, inf)`.
    RawPower { gamma: T },
}

impl<T: Real> KernelProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        match *self {
            KernelProfile::PowerCutoff { alpha, cutoff } => {
                positive("alpha", alpha)?;
                positive("cutoff", cutoff)
            }
            KernelProfile::Tail { beta } => positive("beta", beta),
            KernelProfile::Exponential => Ok(()),
            KernelProfile::Indicator { radius } => positive("radius", radius),
            KernelProfile::RawPower { gamma } => positive("gamma", gamma),
        }
    }

    /// Unbounded near zero; the zero-distance pair is dropped from sums.
    pub fn is_singular(&self) -> bool {
        matches!(self, KernelProfile::PowerCutoff { .. } | KernelProfile::RawPower { .. })
    }

    /// Right end of the support, if bounded.
    pub fn support_end(&self) -> Option<T> {
        match *self {
            KernelProfile::PowerCutoff { cutoff, .. } => Some(cutoff),
            KernelProfile::Indicator { radius } => Some(radius),
            _ => None,
        }
    }

    /// Points where the profile is not smooth.
    fn breakpoints(&self) -> Vec<T> {
        match *self {
            KernelProfile::PowerCutoff { cutoff, .. } => vec![cutoff],
            KernelProfile::Indicator { radius } => vec![radius],
            KernelProfile::Tail { .. } => vec![T::one()],
            _ => Vec::new(),
        }
    }

    /// `phi(t)`; at `t = 0` bounded profiles return their limit and singular
    /// ones return `+inf`.
    #[inline]
    pub fn eval(&self, t: T) -> T {
        match *self {
            KernelProfile::PowerCutoff { alpha, cutoff } => {
                if t < cutoff {
                    t.powf(-alpha)
                } else {
                    T::zero()
                }
            }
            KernelProfile::Tail { beta } => {
                if t < T::one() {
                    T::one()
                } else {
                    t.powf(-beta)
                }
            }
            KernelProfile::Exponential => (-t).exp(),
            KernelProfile::Indicator { radius } => {
                if t < radius {
                    T::one()
                } else {
                    T::zero()
                }
            }
            KernelProfile::RawPower { gamma } => t.powf(-gamma),
        }
    }
}

/// `S = int_0^inf phi(t) t^(2 eta - 1) dt`; `+inf` signals divergence.
pub fn phi_moment<T: Real>(phi: &KernelProfile<T>, eta: T) -> Result<T> {
    phi.validate()?;
    if !(eta > T::zero()) {
        return Err(Error::param("eta", format!("must be positive, got {eta}")));
    }
    let two_eta = eta + eta;
    Ok(match *phi {
        KernelProfile::PowerCutoff { alpha, cutoff } => {
            if alpha < two_eta {
                cutoff.powf(two_eta - alpha) / (two_eta - alpha)
            } else {
                T::infinity()
            }
        }
        KernelProfile::Tail { beta } => {
            if beta > two_eta {
                two_eta.recip() + (beta - two_eta).recip()
            } else {
                T::infinity()
            }
        }
        KernelProfile::Indicator { radius } => radius.powf(two_eta) / two_eta,
        KernelProfile::RawPower { .. } => T::infinity(),
        KernelProfile::Exponential => moment_quadrature(phi, eta, T::zero(), T::infinity())?,
    })
}

/// `int_lo^hi phi(t) t^(2 eta - 1) dt` by adaptive quadrature in `log t`.
///
/// Infinite or zero ends are handled by marching unit windows in `log t`
/// outward until they stop contributing; a log-integrand that fails to decay
/// over many windows is reported as `+inf`.
pub fn moment_quadrature<T: Real>(phi: &KernelProfile<T>, eta: T, lo: T, hi: T) -> Result<T> {
    phi.validate()?;
    if !(lo >= T::zero() && hi > lo) {
        return Err(Error::param("window", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    let two_eta = eta + eta;
    let g = |s: T| {
        let t = s.exp();
        phi.eval(t) * (two_eta * s).exp()
    };
    let tol = T::lit(1e-13);

    let mut cuts: Vec<T> = phi
        .breakpoints()
        .into_iter()
        .filter(|&b| b > lo && b < hi)
        .map(|b| b.ln())
        .collect();
    let s_lo = if lo > T::zero() { Some(lo.ln()) } else { None };
    let s_hi = if hi.is_finite() { Some(hi.ln()) } else { None };
    // finite core between the outermost known points
    let core_lo = s_lo.unwrap_or_else(|| cuts.first().copied().unwrap_or(T::zero()).min(T::zero()));
    let core_hi = s_hi.unwrap_or_else(|| cuts.last().copied().unwrap_or(T::zero()).max(T::zero()));
    cuts.retain(|&c| c > core_lo && c < core_hi);
    let mut nodes = vec![core_lo];
    nodes.extend(cuts);
    nodes.push(core_hi);

    let mut total = T::zero();
    for w in nodes.windows(2) {
        if w[1] > w[0] {
            total += adaptive_simpson(&g, w[0], w[1], tol)?;
        }
    }
    if s_hi.is_none() {
        total += march(&g, core_hi, T::one(), total, tol)?;
    }
    if s_lo.is_none() {
        total += march(&g, core_lo, -T::one(), total, tol)?;
    }
    Ok(total)
}

fn march<T: Real>(g: &impl Fn(T) -> T, start: T, step: T, core: T, tol: T) -> Result<T> {
    let mut acc = T::zero();
    let mut s = start;
    let mut quiet = 0;
    let mut growing = 0;
    let mut prev = g(start);
    for _ in 0..600 {
        let next = s + step;
        let (a, b) = if step > T::zero() { (s, next) } else { (next, s) };
        let piece = adaptive_simpson(g, a, b, tol)?;
        acc += piece;
        let edge = g(next);
        if !acc.is_finite() {
            return Ok(T::infinity());
        }
        // a log-integrand that stops decaying means the moment diverges
        if edge >= prev * T::lit(1.0 - 1e-9) && edge > T::zero() {
            growing += 1;
            if growing >= 40 {
                return Ok(T::infinity());
            }
        } else {
            growing = 0;
        }
        if piece <= T::lit(1e-17) * (core + acc).max(T::min_positive_value()) && edge <= prev {
            quiet += 1;
            if quiet >= 3 {
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
        prev = edge;
        s = next;
    }
    Ok(T::infinity())
}

fn adaptive_simpson<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<T> {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    let v = simpson_step(f, a, b, fa, fm, fb, whole, tol, 60);
    if v.is_nan() {
        return Err(Error::NonFinite(format!("quadrature on [{a}, {b}]")));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let (lm, rm) = ((a + m) * half, (m + b) * half);
    let (flm, frm) = (f(lm), f(rm));
    let six = T::lit(6.0);
    let four = T::lit(4.0);
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    let scale = (left + right).abs().max(T::min_positive_value());
    if !delta.is_finite() || depth == 0 || delta.abs() <= T::lit(15.0) * tol * scale || (b - a).abs() < T::lit(1e-12) {
        return left + right + delta / T::lit(15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol, depth - 1) + simpson_step(f, m, b, fm, frm, fb, right, tol, depth - 1)
}
