use hyperfrac::exponents::{chain_b, chain_c, region_classify, select_chain, ExponentData};
use hyperfrac::hypermetric::{rho_discrete, CandidatePolicy, RhoOracle, Triple};
use hyperfrac::operators::{lp_norm, t_gamma_apply, t_gamma_apply_fast, GridFunction};
use hyperfrac::space::{build_cantor, build_euclidean_grid, build_snowflake_line};
use hyperfrac::Space;
use num_rational::Rational64;
use proptest::prelude::*;

fn q(n: i64) -> Rational64 {
    Rational64::new(n, 997)
}

fn spaces() -> Vec<Space> {
    vec![
        build_euclidean_grid(1, 64, 1.0).unwrap(),
        build_euclidean_grid(2, 8, 1.0).unwrap(),
        build_snowflake_line(64, 2.0).unwrap(),
        build_cantor(5, 1.0 / 3.0).unwrap(),
    ]
}

fn nonneg(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, len)
}

proptest! {
    #[test]
    fn omega_is_covered_by_chains(r in 1i64..997, s in 1i64..997, sn in 1i64..997) {
        let (r, s, sigma) = (q(r), q(s), q(sn));
        let zero = Rational64::from_integer(0);
        let class = region_classify(&r, &s, &sigma, &zero);
        let tagged = class.tags.a || class.tags.b || class.tags.c;
        prop_assert_eq!(class.in_omega, tagged);
        if class.in_omega {
            let data = ExponentData::from_reciprocals(r, s, sigma).unwrap();
            prop_assert_eq!(data.r + data.s - data.t, Rational64::from_integer(2) * sigma);
            let chain = select_chain(&r, &s, &data.t, &sigma).unwrap();
            prop_assert!(chain.verify(&r, &s, &data.t, &sigma));
        }
    }

    #[test]
    fn c_mirrors_b(r in 1i64..997, s in 1i64..997, sn in 1i64..997) {
        let (r, s, sigma) = (q(r), q(s), q(sn));
        let t = r + s - Rational64::from_integer(2) * sigma;
        match (chain_c(&r, &s, &t, &sigma), chain_b(&s, &r, &t, &sigma)) {
            (Ok(c), Ok(b)) => {
                prop_assert_eq!(c.first, b.first);
                prop_assert_eq!(c.second, b.second);
            }
            (Err(_), Err(_)) => {}
            (c, b) => prop_assert!(false, "mirror disagrees: {:?} vs {:?}", c.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn sandwich_and_symmetry(k in 0usize..4, a in 0usize..4096, b in 0usize..4096, c in 0usize..4096) {
        let space = &spaces()[k];
        let n = space.len();
        let (x, y, z) = (a % n, b % n, c % n);
        let oracle = RhoOracle::new(space);
        let rho = oracle.rho(x, y, z);
        let l = space.distance(x, y).max(space.distance(x, z)).max(space.distance(y, z));
        prop_assert!(rho <= l * (1.0 + 1e-12));
        prop_assert!(l / (2.0 * space.kappa()) <= rho * (1.0 + 1e-12));
        for t in Triple::new(x, y, z).permutations() {
            prop_assert_eq!(oracle.rho(t.x, t.y, t.z), rho);
        }
    }

    #[test]
    fn exact_rho_never_exceeds_discrete(a in 0usize..64, b in 0usize..64, c in 0usize..64) {
        let space = build_euclidean_grid::<f64>(1, 64, 1.0).unwrap();
        let exact = RhoOracle::new(&space).rho(a, b, c);
        let discrete = rho_discrete(&space, Triple::new(a, b, c), &CandidatePolicy::AllPoints).unwrap().value;
        prop_assert!(exact <= discrete + 1e-12);
        prop_assert!(discrete - exact <= space.cell() + 1e-12);
    }

    #[test]
    fn t_gamma_is_symmetric_and_bilinear(
        f in nonneg(24), f2 in nonneg(24), g in nonneg(24), c in 0.0f64..3.0, gamma in 0.1f64..1.9
    ) {
        let space = build_euclidean_grid::<f64>(1, 24, 1.0).unwrap();
        let oracle = RhoOracle::new(&space);
        let (f, f2, g) = (GridFunction::nonneg(f).unwrap(), GridFunction::nonneg(f2).unwrap(), GridFunction::nonneg(g).unwrap());
        let fg = t_gamma_apply(&oracle, gamma, &f, &g).unwrap();
        let gf = t_gamma_apply(&oracle, gamma, &g, &f).unwrap();
        let combo: Vec<f64> = f.values().iter().zip(f2.values()).map(|(a, b)| c * a + b).collect();
        let lhs = t_gamma_apply(&oracle, gamma, &GridFunction::nonneg(combo).unwrap(), &g).unwrap();
        let f2g = t_gamma_apply(&oracle, gamma, &f2, &g).unwrap();
        for i in 0..24 {
            let scale = fg.values()[i].abs().max(1e-300);
            prop_assert!((fg.values()[i] - gf.values()[i]).abs() <= 1e-12 * scale);
            let rhs = c * fg.values()[i] + f2g.values()[i];
            prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
        }
    }

    #[test]
    fn fast_matches_reference(f in nonneg(40), g in nonneg(40), gamma in 0.1f64..1.9, workers in 1usize..4) {
        for space in [build_euclidean_grid::<f64>(1, 40, 1.0).unwrap(), build_snowflake_line(40, 2.0).unwrap()] {
            let gamma = gamma * space.eta();
            let oracle = RhoOracle::new(&space);
            let (f, g) = (GridFunction::nonneg(f.clone()).unwrap(), GridFunction::nonneg(g.clone()).unwrap());
            let slow = t_gamma_apply(&oracle, gamma, &f, &g).unwrap();
            let fast = t_gamma_apply_fast(&oracle, gamma, &f, &g, workers).unwrap();
            for (a, b) in slow.values().iter().zip(fast.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn norms_are_homogeneous(f in nonneg(32), c in 0.01f64..100.0, p in 1.0f64..6.0) {
        let space = build_euclidean_grid::<f64>(1, 32, 1.0).unwrap();
        let f = GridFunction::nonneg(f).unwrap();
        let a = lp_norm(&space, &f.scaled(c), p).unwrap();
        let b = c * lp_norm(&space, &f, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }
}
