use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_spec, CheckRecord, Tolerances};
use crate::error::Result;
use crate::hypermetric::{check_inclusions, RhoOracle};
use crate::operators::{
    j_integral, lemma11_constants_for, moment_quadrature, phi_moment, riesz_apply, t_gamma_apply_with, Exclusion,
    GridFunction, KernelProfile, LambdaChoice,
};
use crate::space::{MetricMeasureSpace, SpaceConfig};

type Space = MetricMeasureSpace<f64>;

fn largest_pairwise(space: &Space, x: usize, y: usize, z: usize) -> f64 {
    space.distance(x, y).max(space.distance(x, z)).max(space.distance(y, z))
}

/// `L/(2 kappa) <= rho <= L` on random triples and `d/(2 kappa) <= rho_2 <= d`
/// on random pairs.
pub fn check_sandwich(space: &Space, trials: usize, seed: u64, tol: &Tolerances) -> Result<CheckRecord> {
    let oracle = RhoOracle::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let two_kappa = 2.0 * space.kappa();
    let mut rec = CheckRecord::new(
        format!("sandwich/{}", space.config()),
        "L/(2 kappa) <= rho(x,y,z) <= L, L the largest pairwise distance",
        seed,
    );
    let (mut lo_ratio, mut hi_ratio) = (f64::INFINITY, 0.0f64);
    for k in 0..trials {
        let (x, y, z) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        let rho = oracle.rho(x, y, z);
        let big = largest_pairwise(space, x, y, z);
        let witness = || format!("seed={seed} trial={k} x={x} y={y} z={z} rho={rho:e} L={big:e}");
        if big == 0.0 {
            if rho != 0.0 {
                rec.fail(witness());
            }
            continue;
        }
        rec.observe_le(big / two_kappa, rho, tol.rel_eq, witness);
        rec.observe_le(rho, big, tol.rel_eq, witness);
        lo_ratio = lo_ratio.min(rho / big);
        hi_ratio = hi_ratio.max(rho / big);
    }
    for k in 0..trials {
        let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
        let (rho, d) = (oracle.rho_pair(x, y), space.distance(x, y));
        let witness = || format!("seed={seed} pair={k} x={x} y={y} rho2={rho:e} d={d:e}");
        rec.observe_le(d / two_kappa, rho, tol.rel_eq, witness);
        rec.observe_le(rho, d, tol.rel_eq, witness);
    }
    let x = rng.random_range(0..n);
    if oracle.rho(x, x, x) != 0.0 {
        rec.fail(format!("x=y=z={x} has nonzero rho"));
    }
    rec.measure("kappa", space.kappa());
    rec.measure("min_rho_over_L", lo_ratio);
    rec.measure("max_rho_over_L", hi_ratio);
    Ok(rec)
}

/// `count` radii spread geometrically over the valid window.
fn window_radii(space: &Space, count: usize) -> Vec<f64> {
    let (lo, hi) = space.valid_window();
    if !(lo < hi) || count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// Inclusions `B(x,r)^2 ⊂ E(x,r) ⊂ B(x,2 kappa r)^2` by enumeration, and the
/// bracket `a^2 r^(2 eta) <= mu^2(E(x,r)) <= (2 kappa)^(2 eta) A^2 r^(2 eta)`
/// with the cell slack of the discretization.
pub fn check_lemma21(space: &Space, centers: usize, radii: usize, tol: &Tolerances) -> Result<CheckRecord> {
    let oracle = RhoOracle::new(space);
    let mut rec = CheckRecord::new(
        format!("lemma21/{}", space.config()),
        "B(x,r)^2 in E(x,r) in B(x,2 kappa r)^2 and a^2 r^(2 eta) <= mu^2(E(x,r)) <= (2 kappa)^(2 eta) A^2 r^(2 eta)",
        0,
    );
    let (eta, kappa) = (space.eta(), space.kappa());
    let (a, big_a) = (space.ahlfors_lower(), space.ahlfors_upper());
    let rs = window_radii(space, radii);
    if rs.is_empty() {
        rec.measure("skipped", 1.0);
        return Ok(rec.evidence_only());
    }
    let (mut nominal_lo, mut nominal_hi) = (f64::INFINITY, 0.0f64);
    for x in space.sample_interior(centers) {
        for &r in &rs {
            let rep = check_inclusions(&oracle, x, r)?;
            if let Some(v) = rep.violation {
                rec.fail(format!("x={x} r={r:e} y={} z={} {:?}", v.y, v.z, v.layer));
            }
            let mu2 = rep.section_measure;
            let lower = space.ball_measure_bounds(r).0.powi(2);
            let upper = space.ball_measure_bounds(2.0 * kappa * r).1.powi(2);
            let witness = || format!("x={x} r={r:e} mu2={mu2:e} lower={lower:e} upper={upper:e}");
            rec.observe_le(lower, mu2, tol.rel_eq, witness);
            rec.observe_le(mu2, upper, tol.rel_eq, witness);
            let scale = r.powf(2.0 * eta);
            nominal_lo = nominal_lo.min(mu2 / (a * a * scale));
            nominal_hi = nominal_hi.max(mu2 / ((2.0 * kappa).powf(2.0 * eta) * big_a * big_a * scale));
        }
    }
    rec.measure("radii", rs.len() as f64);
    rec.measure("window_lo", rs[0]);
    rec.measure("window_hi", rs[rs.len() - 1]);
    // ratios to the unslacked bounds; >= 1 and <= 1 respectively when the
    // discretization is fine enough to need no slack
    rec.measure("min_mu2_over_lower", nominal_lo);
    rec.measure("max_mu2_over_upper", nominal_hi);
    Ok(rec)
}

fn kernel_label(phi: &KernelProfile<f64>) -> String {
    match phi {
        KernelProfile::PowerCutoff { alpha, cutoff } => format!("power-cutoff({alpha},{cutoff})"),
        KernelProfile::Tail { beta } => format!("tail({beta})"),
        KernelProfile::Exponential => "exponential".into(),
        KernelProfile::Indicator { radius } => format!("indicator({radius})"),
        KernelProfile::RawPower { gamma } => format!("raw-power({gamma})"),
    }
}

/// `C1 S <= J(x) <= C2 S` for power-cutoff, tail and indicator kernels at
/// interior centers, plus refinement growth of `J` for the borderline
/// power `alpha = 2 eta`.
///
/// Kernels supported inside the valid window use the full moment `S`; the
/// others use `S` truncated to `[min distance, diameter]`, the scales the
/// finite space can see.
pub fn check_lemma11(space: &Space, centers: usize, tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    let oracle = RhoOracle::new(space);
    let eta = space.eta();
    let consts = lemma11_constants_for(space, LambdaChoice::Optimal)?;
    let window_hi = space.valid_window().1;
    let phis = [
        KernelProfile::PowerCutoff { alpha: 0.5 * eta, cutoff: 1.0 },
        KernelProfile::PowerCutoff { alpha: eta, cutoff: 1.0 },
        KernelProfile::PowerCutoff { alpha: 1.5 * eta, cutoff: 1.0 },
        KernelProfile::Tail { beta: 3.0 * eta },
        KernelProfile::Indicator { radius: window_hi },
    ];
    let xs = space.sample_interior(centers);
    let mut records = Vec::new();
    for phi in &phis {
        let label = kernel_label(phi);
        let mut rec = CheckRecord::new(
            format!("lemma11/{}/{label}", space.config()),
            "C1 S <= J(x) <= C2 S, S = int_0^inf phi(t) t^(2 eta - 1) dt",
            0,
        );
        let inside = phi.support_end().is_some_and(|e| e <= window_hi);
        let s = if inside {
            phi_moment(phi, eta)?
        } else {
            moment_quadrature(phi, eta, space.min_distance(), space.diameter())?
        };
        let (lo, hi) = (consts.c1 * s, consts.c2 * s);
        let (mut jmin, mut jmax) = (f64::INFINITY, 0.0f64);
        for &x in &xs {
            let j = j_integral(&oracle, phi, x)?;
            let witness = || format!("{label} x={x} J={j:e} S={s:e}");
            rec.observe_le(lo, j, tol.rel_eq, witness);
            rec.observe_le(j, hi, tol.rel_eq, witness);
            jmin = jmin.min(j);
            jmax = jmax.max(j);
        }
        rec.measure("c1", consts.c1);
        rec.measure("c2", consts.c2);
        rec.measure("moment", s);
        rec.measure("truncated_moment", if inside { 0.0 } else { 1.0 });
        rec.measure("j_min", jmin);
        rec.measure("j_max", jmax);
        records.push(rec);
    }
    if space.dim() == 1 {
        records.push(check_divergence(space.config(), eta, &[128, 512])?);
    }
    Ok(records)
}

/// `J` at the center for `phi = t^(-2 eta)` on `(0, 1)` must grow by at least
/// 20% from the coarsest to the finest resolution.
fn check_divergence(config: &SpaceConfig, eta: f64, resolutions: &[usize]) -> Result<CheckRecord> {
    let phi = KernelProfile::PowerCutoff { alpha: 2.0 * eta, cutoff: 1.0 };
    let mut rec = CheckRecord::new(
        format!("lemma11-divergence/{}", config.with_resolution(resolutions[0])),
        "J(x) = inf for phi(t) = t^(-2 eta) on (0,1): growth under refinement",
        0,
    );
    let mut values = Vec::new();
    for &n in resolutions {
        let space = config.with_resolution(n).build::<f64>()?;
        let x = space.sample_interior(1)[0];
        let j = j_integral(&RhoOracle::new(&space), &phi, x)?;
        rec.measure(&format!("j_n{n}"), j);
        values.push(j);
    }
    let growth = values[values.len() - 1] / values[0];
    rec.measure("growth", growth);
    rec.observe_le(1.2, growth, 0.0, || format!("growth={growth}"));
    Ok(rec)
}

/// `rho^-gamma <= (2 kappa)^gamma min{d(x,y)^(-gamma/2) d(x,z)^(-gamma/2), ...}`
/// on random triples of distinct points.
pub fn check_prop32a(space: &Space, gamma: f64, trials: usize, seed: u64, tol: &Tolerances) -> Result<CheckRecord> {
    let oracle = RhoOracle::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let factor = (2.0 * space.kappa()).powf(gamma);
    let mut rec = CheckRecord::new(
        format!("prop32a/{}/gamma={gamma}", space.config()),
        "rho^-gamma <= (2 kappa)^gamma min of the three products d^(-gamma/2) d^(-gamma/2)",
        seed,
    );
    let mut k = 0;
    while rec.trials < trials {
        k += 1;
        let (x, y, z) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        if x == y || y == z || x == z {
            continue;
        }
        let h = -gamma / 2.0;
        let (dxy, dxz, dyz) = (space.distance(x, y), space.distance(x, z), space.distance(y, z));
        let bound = factor * (dxy.powf(h) * dxz.powf(h)).min(dxy.powf(h) * dyz.powf(h)).min(dxz.powf(h) * dyz.powf(h));
        let lhs = oracle.rho(x, y, z).powf(-gamma);
        rec.observe_le(lhs, bound, tol.rel_eq, || format!("seed={seed} draw={k} x={x} y={y} z={z} gamma={gamma}"));
    }
    rec.measure("gamma", gamma);
    rec.measure("factor", factor);
    Ok(rec)
}

/// `T^gamma(f,g) <= (2 kappa)^gamma min{(I f)(I g), I(f I g), I(g I f)}`
/// pointwise, each bound against `T^gamma` summed over the same pairs.
pub fn check_prop32b(space: &Space, gamma: f64, pairs: usize, seed: u64, tol: &Tolerances) -> Result<CheckRecord> {
    let oracle = RhoOracle::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = space.eta() - gamma / 2.0;
    let factor = (2.0 * space.kappa()).powf(gamma);
    let mut rec = CheckRecord::new(
        format!("prop32b/{}/gamma={gamma}", space.config()),
        "T^gamma(f,g) <= (2 kappa)^gamma min{(I f)(I g), I(f I g), I(g I f)}, I of order eta - gamma/2",
        seed,
    );
    let mut slack = [f64::INFINITY; 3];
    for k in 0..pairs {
        let fs = random_spec(&mut rng, k, Some(space.len()));
        let gs = random_spec(&mut rng, k / 5 + k + 1, Some(space.len()));
        let (f, g) = (fs.sample(space)?, gs.sample(space)?);
        let (i_f, i_g) = (riesz_apply(space, alpha, &f)?, riesz_apply(space, alpha, &g)?);
        let bounds: [GridFunction<f64>; 3] = [
            i_f.mul(&i_g),
            riesz_apply(space, alpha, &f.mul(&i_g))?,
            riesz_apply(space, alpha, &g.mul(&i_f))?,
        ];
        let rules = [Exclusion::FirstBound, Exclusion::SecondBound, Exclusion::ThirdBound];
        for (b, (bound, rule)) in bounds.iter().zip(rules).enumerate() {
            let t = t_gamma_apply_with(&oracle, gamma, &f, &g, rule)?;
            for (x, (&lhs, &rhs)) in t.values().iter().zip(bound.values()).enumerate() {
                let rhs = factor * rhs;
                rec.observe_le(lhs, rhs, tol.pointwise, || format!("seed={seed} pair={k} f={fs} g={gs} bound={} x={x}", b + 1));
                if rhs > 0.0 {
                    slack[b] = slack[b].min((rhs - lhs) / rhs);
                }
            }
        }
    }
    for (b, s) in slack.iter().enumerate() {
        rec.measure(&format!("min_slack_bound{}", b + 1), *s);
    }
    rec.measure("gamma", gamma);
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_cantor, build_euclidean_grid, build_snowflake_line};

    #[test]
    fn sandwich_on_small_spaces() {
        let tol = Tolerances::default();
        for space in [
            build_euclidean_grid::<f64>(1, 64, 1.0).unwrap(),
            build_euclidean_grid::<f64>(2, 8, 1.0).unwrap(),
            build_snowflake_line::<f64>(64, 2.0).unwrap(),
            build_cantor::<f64>(5, 1.0 / 3.0).unwrap(),
        ] {
            let rec = check_sandwich(&space, 500, 3, &tol).unwrap();
            assert!(rec.passed, "{rec:?}");
            assert!(rec.trials >= 1990, "{}", rec.trials);
        }
    }

    #[test]
    fn one_d_triples_sit_on_the_lower_bound() {
        // in 1-D rho is half the range, so rho / L = 1/2 for every triple
        let space = build_euclidean_grid::<f64>(1, 32, 1.0).unwrap();
        let rec = check_sandwich(&space, 200, 1, &Tolerances::default()).unwrap();
        assert!((rec.measurements["min_rho_over_L"] - 0.5).abs() < 1e-15);
        assert!((rec.measurements["max_rho_over_L"] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lemma21_small() {
        let tol = Tolerances::default();
        let space = build_euclidean_grid::<f64>(1, 128, 1.0).unwrap();
        let rec = check_lemma21(&space, 3, 4, &tol).unwrap();
        assert!(rec.passed, "{rec:?}");
        let cantor = build_cantor::<f64>(6, 1.0 / 3.0).unwrap();
        assert!(check_lemma21(&cantor, 3, 4, &tol).unwrap().passed);
    }

    #[test]
    fn prop32a_collinear_case_has_positive_margin() {
        let space = build_euclidean_grid::<f64>(1, 64, 1.0).unwrap();
        let rec = check_prop32a(&space, 1.0, 2000, 5, &Tolerances::default()).unwrap();
        assert!(rec.passed);
        assert!(rec.worst_margin > 0.0);
        assert_eq!(rec.trials, 2000);
    }

    #[test]
    fn prop32b_single_cell_is_tight() {
        // f = g = one cell: the first bound holds with equality away from it
        let space = build_euclidean_grid::<f64>(1, 32, 1.0).unwrap();
        let oracle = RhoOracle::new(&space);
        let mut f = vec![0.0; 32];
        f[10] = 1.0;
        let f = GridFunction::nonneg(f).unwrap();
        let t = t_gamma_apply_with(&oracle, 1.0, &f, &f, Exclusion::FirstBound).unwrap();
        let i_f = riesz_apply(&space, 0.5, &f).unwrap();
        let b = i_f.mul(&i_f).scaled(2.0);
        assert!((t.values()[3] - b.values()[3]).abs() <= 1e-12 * b.values()[3]);
        let rec = check_prop32b(&space, 1.0, 5, 2, &Tolerances::default()).unwrap();
        assert!(rec.passed, "{rec:?}");
    }
}
