use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CheckRecord;
use crate::error::{Error, Result};
use crate::exponents::{chain_a, chain_b, chain_c, decomposition_check, region_classify, select_chain, ChainExponents, ChainKind};

/// Lattice check of the decomposition plus area agreement to `2 / grid`.
pub fn check_decomposition(sigma: f64, grid: usize, margin: f64) -> Result<CheckRecord> {
    let report = decomposition_check(sigma, grid, margin)?;
    let mut rec = CheckRecord::new(
        format!("region/decomposition/sigma={sigma}"),
        "every lattice point of Omega lies in A, B or C and every tagged point lies in Omega",
        0,
    );
    rec.trials = report.checked;
    rec.worst_margin = if report.holds() { 0.0 } else { -1.0 };
    if !report.holds() {
        let (r, s) = report.witness.unwrap_or_default();
        rec.fail(format!("{} exceptions, first at (r, s) = ({r}, {s})", report.exceptions));
    }
    let err = report.max_area_error();
    let bound = 2.0 / grid as f64;
    rec.observe_le(err, bound, 0.0, || format!("area error {err:.3e}, bound {bound:.3e}"));
    rec.measure("exceptions", report.exceptions as f64);
    rec.measure("boundary_excluded", report.boundary_excluded as f64);
    rec.measure("overlaps", report.overlaps as f64);
    for (key, m, a) in [
        ("omega", report.areas.omega, report.analytic.omega),
        ("a", report.areas.a, report.analytic.a),
        ("b", report.areas.b, report.analytic.b),
        ("c", report.areas.c, report.analytic.c),
    ] {
        rec.measure(&format!("area_{key}"), m);
        rec.measure(&format!("area_{key}_analytic"), a);
    }
    Ok(rec)
}

const DENOM: i64 = 997;

/// Exact chain identities at `count` seeded rational points in each of A, B
/// and C, the B/C mirror symmetry, and chain coverage of every sampled point
/// of Omega.
pub fn check_chains(sigma: Rational64, count: usize, seed: u64) -> Result<CheckRecord> {
    let zero = Rational64::from_integer(0);
    let one = Rational64::from_integer(1);
    if !(sigma > zero && sigma < one) {
        return Err(Error::param("sigma", format!("must lie in (0, 1), got {sigma}")));
    }
    let two = Rational64::from_integer(2);
    let mut rec = CheckRecord::new(
        format!("region/chains/sigma={sigma}"),
        "HLS chains compose to the plane identity with exponents in range, exactly in rational arithmetic",
        seed,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = [0usize; 3];
    let mut omega = 0usize;
    let mut large_p3 = 0usize;
    let budget = count * 400;
    let mut draws = 0usize;
    while found.iter().any(|&k| k < count) {
        if draws == budget {
            return Err(Error::param("count", format!("region too thin to sample {count} points")));
        }
        draws += 1;
        let r = Rational64::new(rng.random_range(1..DENOM), DENOM);
        let s = Rational64::new(rng.random_range(1..DENOM), DENOM);
        let class = region_classify(&r, &s, &sigma, &zero);
        if !class.in_omega {
            continue;
        }
        omega += 1;
        let t = r + s - two * sigma;
        if select_chain(&r, &s, &t, &sigma).is_none() {
            rec.fail(format!("no chain at (r, s) = ({r}, {s})"));
        }
        let check = |rec: &mut CheckRecord, kind: ChainKind, chain: Result<ChainExponents<Rational64>>| {
            rec.trials += 1;
            match chain {
                Ok(c) if c.verify(&r, &s, &t, &sigma) => {}
                Ok(_) => rec.fail(format!("chain {} fails its identities at ({r}, {s})", kind.letter())),
                Err(e) => rec.fail(format!("chain {} rejected ({r}, {s}): {e}", kind.letter())),
            }
        };
        if class.tags.a && found[0] < count {
            found[0] += 1;
            check(&mut rec, ChainKind::A, chain_a(&r, &s, &sigma));
        }
        if class.tags.b && found[1] < count {
            found[1] += 1;
            check(&mut rec, ChainKind::B, chain_b(&r, &s, &t, &sigma));
        }
        if class.tags.c && found[2] < count {
            found[2] += 1;
            let c = chain_c(&r, &s, &t, &sigma);
            // C at (r, s) is B at (s, r)
            if let (Ok(c), Ok(b)) = (&c, chain_b(&s, &r, &t, &sigma)) {
                if c.first != b.first || c.second != b.second {
                    rec.fail(format!("mirror mismatch at ({r}, {s})"));
                }
            }
            check(&mut rec, ChainKind::C, c);
        }
        if t < one {
            large_p3 += 1;
        }
    }
    rec.worst_margin = if rec.passed { 0.0 } else { -1.0 };
    rec.measure("omega_points", omega as f64);
    rec.measure("points_a", found[0] as f64);
    rec.measure("points_b", found[1] as f64);
    rec.measure("points_c", found[2] as f64);
    rec.measure("p3_exceeds_one", large_p3 as f64);
    Ok(rec)
}
