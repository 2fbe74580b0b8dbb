use rayon::prelude::*;

use super::{GridFunction, KernelProfile};
use crate::error::{Error, Result};
use crate::hypermetric::RhoOracle;
use crate::scalar::Real;
use crate::space::MetricMeasureSpace;

const TILE: usize = 64;

/// Which `(y, z)` pairs are dropped from the double sum at output point `x`.
///
/// `Diagonal` drops only `(x, x)`, the single zero-`rho` pair. The other
/// variants drop exactly the pairs where one of the distance factors of the
/// matching Riesz composition bound vanishes, so that the kernel bound can be
/// compared term by term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exclusion {
    #[default]
    Diagonal,
    /// `y = x` or `z = x`: matches `(I f)(x) (I g)(x)`.
    FirstBound,
    /// `y = x` or `z = y`: matches `I(f I g)(x)`.
    SecondBound,
    /// `z = x` or `y = z`: matches `I(g I f)(x)`.
    ThirdBound,
}

impl Exclusion {
    #[inline]
    fn skips(self, x: usize, y: usize, z: usize) -> bool {
        match self {
            Exclusion::Diagonal => y == x && z == x,
            Exclusion::FirstBound => y == x || z == x,
            Exclusion::SecondBound => y == x || z == y,
            Exclusion::ThirdBound => z == x || y == z,
        }
    }
}

fn check_gamma<T: Real>(space: &MetricMeasureSpace<T>, gamma: T) -> Result<()> {
    let two_eta = space.eta() + space.eta();
    if gamma > T::zero() && gamma < two_eta {
        Ok(())
    } else {
        Err(Error::param("gamma", format!("must lie in (0, {two_eta}), got {gamma}")))
    }
}

fn weighted<T: Real>(space: &MetricMeasureSpace<T>, f: &GridFunction<T>) -> Vec<T> {
    f.values().iter().zip(space.weights()).map(|(&v, &w)| v * w).collect()
}

/// `I_alpha f(x) = sum_{y != x} f(y) d(x,y)^(alpha - eta) w_y`.
pub fn riesz_apply<T: Real>(space: &MetricMeasureSpace<T>, alpha: T, f: &GridFunction<T>) -> Result<GridFunction<T>> {
    f.check_len(space)?;
    let eta = space.eta();
    if !(alpha > T::zero() && alpha < eta) {
        return Err(Error::param("alpha", format!("must lie in (0, {eta}), got {alpha}")));
    }
    let fw = weighted(space, f);
    let power = alpha - eta;
    let values = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let mut acc = T::zero();
            for (y, &v) in fw.iter().enumerate() {
                if y != x {
                    acc += v * space.distance(x, y).powf(power);
                }
            }
            acc
        })
        .collect();
    Ok(GridFunction::from_parts(values, f.is_nonneg()))
}

/// `T_phi(f, g)(x) = sum_{y,z} phi(rho(x,y,z)) f(y) g(z) w_y w_z`.
///
/// For singular profiles the pair `(x, x)` is dropped; bounded profiles keep
/// every pair.
pub fn bilinear_phi_apply<T: Real>(
    oracle: &RhoOracle<'_, T>,
    phi: &KernelProfile<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    x: usize,
) -> Result<T> {
    let space = oracle.space();
    phi.validate()?;
    f.check_len(space)?;
    g.check_len(space)?;
    space.check_id(x)?;
    let fw = weighted(space, f);
    let gw = weighted(space, g);
    let singular = phi.is_singular();
    let mut acc = T::zero();
    for (y, &fy) in fw.iter().enumerate() {
        if fy == T::zero() {
            continue;
        }
        let mut inner = T::zero();
        for (z, &gz) in gw.iter().enumerate() {
            if singular && y == x && z == x {
                continue;
            }
            let t = oracle.rho(x, y, z);
            let k = phi.eval(t);
            if !k.is_finite() {
                return Err(Error::NonFiniteKernel { t: t.as_f64(), value: k.as_f64() });
            }
            inner += k * gz;
        }
        acc += fy * inner;
    }
    Ok(acc)
}

/// `J(x) = sum_{y,z} phi(rho(x,y,z)) w_y w_z`.
pub fn j_integral<T: Real>(oracle: &RhoOracle<'_, T>, phi: &KernelProfile<T>, x: usize) -> Result<T> {
    let ones = GridFunction::constant(oracle.space().len(), T::one());
    bilinear_phi_apply(oracle, phi, &ones, &ones, x)
}

/// Reference evaluator for `T^gamma(f, g)` at every point.
pub fn t_gamma_apply<T: Real>(
    oracle: &RhoOracle<'_, T>,
    gamma: T,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
) -> Result<GridFunction<T>> {
    t_gamma_apply_with(oracle, gamma, f, g, Exclusion::Diagonal)
}

/// Reference evaluator with an explicit exclusion rule: for each `x` a plain
/// loop over `y`, then `z`.
pub fn t_gamma_apply_with<T: Real>(
    oracle: &RhoOracle<'_, T>,
    gamma: T,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    exclusion: Exclusion,
) -> Result<GridFunction<T>> {
    let space = oracle.space();
    check_gamma(space, gamma)?;
    f.check_len(space)?;
    g.check_len(space)?;
    let fw = weighted(space, f);
    let gw = weighted(space, g);
    let n = space.len();
    let values = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut acc = T::zero();
            for y in 0..n {
                let mut inner = T::zero();
                for z in 0..n {
                    if exclusion.skips(x, y, z) {
                        continue;
                    }
                    let t = oracle.rho(x, y, z);
                    if !(t > T::zero()) {
                        return Err(Error::NonFiniteKernel { t: t.as_f64(), value: f64::INFINITY });
                    }
                    inner += gw[z] * t.powf(-gamma);
                }
                acc += fw[y] * inner;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(GridFunction::from_parts(values, f.is_nonneg() && g.is_nonneg()))
}

fn is_sorted_line<T: Real>(space: &MetricMeasureSpace<T>) -> bool {
    space.dim() == 1 && (1..space.len()).all(|i| space.point(i - 1)[0] < space.point(i)[0])
}

/// Tiled evaluator for `T^gamma(f, g)` on `workers` threads.
///
/// Uses the `(y, z)` symmetry of the kernel to visit each unordered pair
/// once, walks the upper triangle tile by tile with a fixed reduction order,
/// and parallelizes only across output points, so results do not depend on
/// the worker count. On sorted 1-D spaces `rho(x, y, z)` depends only on the
/// extreme points of the triple and the kernel is tabulated once.
pub fn t_gamma_apply_fast<T: Real>(
    oracle: &RhoOracle<'_, T>,
    gamma: T,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    workers: usize,
) -> Result<GridFunction<T>> {
    let space = oracle.space();
    check_gamma(space, gamma)?;
    f.check_len(space)?;
    g.check_len(space)?;
    if workers == 0 {
        return Err(Error::param("workers", "need at least one worker"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    let fw = weighted(space, f);
    let gw = weighted(space, g);
    let n = space.len();

    let values = pool.install(|| -> Result<Vec<T>> {
        if is_sorted_line(space) {
            let table: Vec<T> = (0..n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    (0..n).map(move |j| if j > i { oracle.rho(i, i, j).powf(-gamma) } else { T::zero() })
                })
                .collect();
            if let Some(t) = table.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFiniteKernel { t: 0.0, value: t.as_f64() });
            }
            Ok((0..n)
                .into_par_iter()
                .map(|x| {
                    tiled_sum(n, x, &fw, &gw, |y, z| {
                        let lo = x.min(y).min(z);
                        let hi = x.max(y).max(z);
                        table[lo * n + hi]
                    })
                })
                .collect())
        } else {
            (0..n)
                .into_par_iter()
                .map(|x| {
                    let mut bad = None;
                    let v = tiled_sum(n, x, &fw, &gw, |y, z| {
                        let t = oracle.rho(x, y, z);
                        if !(t > T::zero()) {
                            bad = Some(t);
                        }
                        t.powf(-gamma)
                    });
                    match bad {
                        Some(t) => Err(Error::NonFiniteKernel { t: t.as_f64(), value: f64::INFINITY }),
                        None => Ok(v),
                    }
                })
                .collect()
        }
    })?;
    Ok(GridFunction::from_parts(values, f.is_nonneg() && g.is_nonneg()))
}

/// Sum over unordered pairs `y <= z` in tile-major order, skipping `(x, x)`.
#[inline]
fn tiled_sum<T: Real>(n: usize, x: usize, fw: &[T], gw: &[T], mut kernel: impl FnMut(usize, usize) -> T) -> T {
    let tiles = n.div_ceil(TILE);
    let mut total = T::zero();
    for ti in 0..tiles {
        let (y0, y1) = (ti * TILE, ((ti + 1) * TILE).min(n));
        for tj in ti..tiles {
            let (z0, z1) = (tj * TILE, ((tj + 1) * TILE).min(n));
            let mut part = T::zero();
            for y in y0..y1 {
                let (fy, gy) = (fw[y], gw[y]);
                let start = if ti == tj { y } else { z0 };
                for z in start..z1 {
                    if z == y {
                        if y != x {
                            part += kernel(y, y) * fy * gy;
                        }
                    } else {
                        part += kernel(y, z) * (fy * gw[z] + fw[z] * gy);
                    }
                }
            }
            total += part;
        }
    }
    total
}
