//! Exponent algebra for the bilinear inequality: `sigma`, the plane
//! `r + s - t = 2 sigma`, the regions `Omega`, `A`, `B`, `C` of reciprocal
//! exponents, and the Hölder/HLS chains that reach each region.
//!
//! Everything is generic over [`Field`], so identities can be checked in
//! exact rational arithmetic.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Field;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaParams<F> {
    pub eta: F,
    pub gamma: F,
    pub sigma: F,
}

impl<F: Field> SigmaParams<F> {
    /// HLS order `eta - gamma / 2 = sigma * eta`.
    pub fn alpha(&self) -> F {
        self.sigma.clone() * self.eta.clone()
    }
}

/// `sigma = (2 eta - gamma) / (2 eta)`.
pub fn sigma_of<F: Field>(eta: F, gamma: F) -> Result<SigmaParams<F>> {
    if !(eta > F::zero()) {
        return Err(Error::param("eta", format!("must be positive, got {eta}")));
    }
    let two_eta = F::two() * eta.clone();
    if !(gamma > F::zero() && gamma < two_eta) {
        return Err(Error::param("gamma", format!("must lie in (0, {two_eta}), got {gamma}")));
    }
    let sigma = (two_eta.clone() - gamma.clone()) / two_eta;
    Ok(SigmaParams { eta, gamma, sigma })
}

/// Outcome of `1/p3 = 1/p1 + 1/p2 - 2 sigma`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum P3<F> {
    Finite { p3: F, t: F },
    /// `t <= 0`: no Lebesgue exponent on the plane.
    Inadmissible { t: F },
}

impl<F: Field> P3<F> {
    pub fn t(&self) -> &F {
        match self {
            P3::Finite { t, .. } | P3::Inadmissible { t } => t,
        }
    }

    pub fn p3(&self) -> Option<&F> {
        match self {
            P3::Finite { p3, .. } => Some(p3),
            P3::Inadmissible { .. } => None,
        }
    }
}

pub fn p3_from<F: Field>(p1: F, p2: F, sigma: F) -> Result<P3<F>> {
    for (name, p) in [("p1", &p1), ("p2", &p2)] {
        if !(*p > F::one()) {
            return Err(Error::param(name, format!("must exceed 1, got {p}")));
        }
    }
    let t = p1.recip() + p2.recip() - F::two() * sigma;
    Ok(if t > F::zero() { P3::Finite { p3: t.recip(), t } } else { P3::Inadmissible { t } })
}

/// Subset of `{A, B, C}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct RegionTags {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

impl RegionTags {
    pub fn is_empty(&self) -> bool {
        !(self.a || self.b || self.c)
    }

    pub fn count(&self) -> usize {
        self.a as usize + self.b as usize + self.c as usize
    }
}

impl fmt::Display for RegionTags {
    /// `A`, `AB`, `BC`, ... or `-` for the empty set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for (on, c) in [(self.a, 'A'), (self.b, 'B'), (self.c, 'C')] {
            if on {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub tags: RegionTags,
    pub in_omega: bool,
    /// Within `margin` of some defining boundary.
    pub boundary: bool,
}

/// Tags the regions whose strict inequalities hold with slack above `margin`.
pub fn region_classify<F: Field>(r: &F, s: &F, sigma: &F, margin: &F) -> Classification {
    let one = F::one();
    let sum = r.clone() + s.clone();
    let slacks = [
        r.clone(),
        one.clone() - r.clone(),
        s.clone(),
        one.clone() - s.clone(),
        r.clone() - sigma.clone(),
        s.clone() - sigma.clone(),
        sum.clone() - F::two() * sigma.clone(),
        one + sigma.clone() - sum,
    ];
    let ok: Vec<bool> = slacks.iter().map(|v| v > margin).collect();
    let boundary = slacks.iter().any(|v| v.abs() <= *margin);
    let square = ok[0] && ok[1] && ok[2] && ok[3];
    let strip = square && ok[6] && ok[7];
    Classification {
        tags: RegionTags { a: square && ok[4] && ok[5], b: strip && ok[5], c: strip && ok[4] },
        in_omega: square && ok[6],
        boundary,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionAreas {
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Areas of the four regions inside the unit square.
pub fn analytic_areas(sigma: f64) -> RegionAreas {
    let (omega, strip) = if sigma >= 0.5 {
        (2.0 * (1.0 - sigma).powi(2), (1.0 - sigma).powi(2))
    } else {
        (1.0 - 2.0 * sigma * sigma, 0.5 - sigma * sigma)
    };
    RegionAreas { omega, a: (1.0 - sigma).powi(2), b: strip, c: strip }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub sigma: f64,
    pub grid_n: usize,
    pub margin: f64,
    pub checked: usize,
    pub boundary_excluded: usize,
    pub exceptions: usize,
    /// First lattice point where `in_omega` and "some tag" disagree.
    pub witness: Option<(f64, f64)>,
    /// Points carrying more than one tag.
    pub overlaps: usize,
    pub areas: RegionAreas,
    pub analytic: RegionAreas,
}

impl DecompositionReport {
    pub fn holds(&self) -> bool {
        self.exceptions == 0
    }

    pub fn max_area_error(&self) -> f64 {
        let (m, a) = (&self.areas, &self.analytic);
        [m.omega - a.omega, m.a - a.a, m.b - a.b, m.c - a.c].iter().fold(0.0, |acc, d| acc.max(d.abs()))
    }
}

/// Midpoint lattice of `grid_n x grid_n` cells, listed row by row in `s`.
pub fn lattice(grid_n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = 1.0 / grid_n as f64;
    (0..grid_n).flat_map(move |j| (0..grid_n).map(move |i| ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)))
}

/// Checks `Omega = A ∪ B ∪ C` on the midpoint lattice, away from boundaries,
/// and estimates region areas by lattice counting.
pub fn decomposition_check(sigma: f64, grid_n: usize, margin: f64) -> Result<DecompositionReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::param("sigma", format!("must lie in (0, 1), got {sigma}")));
    }
    if grid_n < 100 {
        return Err(Error::param("grid_n", format!("need at least 100, got {grid_n}")));
    }
    if !(margin >= 0.0) {
        return Err(Error::param("margin", format!("must be nonnegative, got {margin}")));
    }
    let mut report = DecompositionReport {
        sigma,
        grid_n,
        margin,
        checked: 0,
        boundary_excluded: 0,
        exceptions: 0,
        witness: None,
        overlaps: 0,
        areas: RegionAreas { omega: 0.0, a: 0.0, b: 0.0, c: 0.0 },
        analytic: analytic_areas(sigma),
    };
    let mut counts = [0usize; 4];
    for (r, s) in lattice(grid_n) {
        let strict = region_classify(&r, &s, &sigma, &0.0);
        for (k, on) in [strict.in_omega, strict.tags.a, strict.tags.b, strict.tags.c].into_iter().enumerate() {
            counts[k] += on as usize;
        }
        let c = region_classify(&r, &s, &sigma, &margin);
        if c.boundary {
            report.boundary_excluded += 1;
            continue;
        }
        report.checked += 1;
        if c.tags.count() > 1 {
            report.overlaps += 1;
        }
        if c.in_omega == c.tags.is_empty() {
            report.exceptions += 1;
            report.witness.get_or_insert((r, s));
        }
    }
    let cell = 1.0 / (grid_n * grid_n) as f64;
    report.areas = RegionAreas {
        omega: counts[0] as f64 * cell,
        a: counts[1] as f64 * cell,
        b: counts[2] as f64 * cell,
        c: counts[3] as f64 * cell,
    };
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChainKind {
    /// Hölder, then HLS on each factor.
    A,
    /// HLS, Hölder, HLS with the smoothing on `g`.
    B,
    /// Mirror of `B` with the smoothing on `f`.
    C,
}

impl ChainKind {
    pub fn letter(self) -> char {
        match self {
            ChainKind::A => 'A',
            ChainKind::B => 'B',
            ChainKind::C => 'C',
        }
    }
}

/// `1/output = 1/input - sigma`, stored as reciprocals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HlsPairing<F> {
    pub input: F,
    pub output: F,
}

impl<F: Field> HlsPairing<F> {
    /// Exact relation with `1 < p_in < p_out < inf`.
    pub fn holds(&self, sigma: &F) -> bool {
        self.output == self.input.clone() - sigma.clone()
            && self.output > F::zero()
            && self.output < self.input
            && self.input < F::one()
    }
}

/// Intermediate exponents, all as reciprocals: `(1/pi1, 1/pi2)` for chain A,
/// `(1/q1, 1/q2)` for chains B and C.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainExponents<F> {
    pub kind: ChainKind,
    pub first: F,
    pub second: F,
    pub hls: [HlsPairing<F>; 2],
}

impl<F: Field> ChainExponents<F> {
    /// Every identity of the chain, checked exactly.
    pub fn verify(&self, r: &F, s: &F, t: &F, sigma: &F) -> bool {
        let unit = |v: &F| *v > F::zero() && *v < F::one();
        let ranges = unit(&self.first) && unit(&self.second);
        let pairings = self.hls.iter().all(|h| h.holds(sigma));
        let identities = match self.kind {
            ChainKind::A => {
                self.first == r.clone() - sigma.clone()
                    && self.second == s.clone() - sigma.clone()
                    && self.first.clone() + self.second.clone() == *t
            }
            ChainKind::B => {
                self.first == t.clone() + sigma.clone()
                    && self.second == s.clone() - sigma.clone()
                    && self.first == r.clone() + self.second.clone()
            }
            ChainKind::C => {
                self.first == t.clone() + sigma.clone()
                    && self.second == r.clone() - sigma.clone()
                    && self.first == s.clone() + self.second.clone()
            }
        };
        ranges && pairings && identities
    }
}

fn outside<F: Field>(region: char, r: &F, s: &F, sigma: &F) -> Error {
    Error::OutsideRegion { region, r: r.to_string(), s: s.to_string(), sigma: sigma.to_string() }
}

fn on_plane<F: Field>(r: &F, s: &F, t: &F, sigma: &F) -> Result<()> {
    if r.clone() + s.clone() - t.clone() == F::two() * sigma.clone() {
        Ok(())
    } else {
        Err(Error::Inadmissible(format!("({r}, {s}, {t}) is not on the plane r + s - t = 2 * {sigma}")))
    }
}

pub fn chain_a<F: Field>(r: &F, s: &F, sigma: &F) -> Result<ChainExponents<F>> {
    if !region_classify(r, s, sigma, &F::zero()).tags.a {
        return Err(outside('A', r, s, sigma));
    }
    let first = r.clone() - sigma.clone();
    let second = s.clone() - sigma.clone();
    Ok(ChainExponents {
        kind: ChainKind::A,
        hls: [
            HlsPairing { input: r.clone(), output: first.clone() },
            HlsPairing { input: s.clone(), output: second.clone() },
        ],
        first,
        second,
    })
}

pub fn chain_b<F: Field>(r: &F, s: &F, t: &F, sigma: &F) -> Result<ChainExponents<F>> {
    if !region_classify(r, s, sigma, &F::zero()).tags.b {
        return Err(outside('B', r, s, sigma));
    }
    on_plane(r, s, t, sigma)?;
    let first = t.clone() + sigma.clone();
    let second = s.clone() - sigma.clone();
    Ok(ChainExponents {
        kind: ChainKind::B,
        hls: [
            HlsPairing { input: first.clone(), output: t.clone() },
            HlsPairing { input: s.clone(), output: second.clone() },
        ],
        first,
        second,
    })
}

pub fn chain_c<F: Field>(r: &F, s: &F, t: &F, sigma: &F) -> Result<ChainExponents<F>> {
    if !region_classify(r, s, sigma, &F::zero()).tags.c {
        return Err(outside('C', r, s, sigma));
    }
    on_plane(r, s, t, sigma)?;
    let first = t.clone() + sigma.clone();
    let second = r.clone() - sigma.clone();
    Ok(ChainExponents {
        kind: ChainKind::C,
        hls: [
            HlsPairing { input: first.clone(), output: t.clone() },
            HlsPairing { input: r.clone(), output: second.clone() },
        ],
        first,
        second,
    })
}

/// First applicable chain in the order A, B, C.
pub fn select_chain<F: Field>(r: &F, s: &F, t: &F, sigma: &F) -> Option<ChainExponents<F>> {
    chain_a(r, s, sigma)
        .or_else(|_| chain_b(r, s, t, sigma))
        .or_else(|_| chain_c(r, s, t, sigma))
        .ok()
}

/// A triple of reciprocal exponents on the plane, with its classification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentData<F> {
    pub r: F,
    pub s: F,
    pub t: F,
    pub sigma: F,
    pub classification: Classification,
    pub chain: Option<ChainExponents<F>>,
}

impl<F: Field> ExponentData<F> {
    /// `t = r + s - 2 sigma`; rejects `t <= 0` and points off the open square.
    pub fn from_reciprocals(r: F, s: F, sigma: F) -> Result<Self> {
        if !(sigma > F::zero() && sigma < F::one()) {
            return Err(Error::param("sigma", format!("must lie in (0, 1), got {sigma}")));
        }
        for (name, v) in [("r", &r), ("s", &s)] {
            if !(*v > F::zero() && *v < F::one()) {
                return Err(Error::param(name, format!("reciprocal exponent must lie in (0, 1), got {v}")));
            }
        }
        let t = r.clone() + s.clone() - F::two() * sigma.clone();
        if !(t > F::zero()) {
            return Err(Error::Inadmissible(format!("1/p3 = {t} is not positive")));
        }
        let classification = region_classify(&r, &s, &sigma, &F::zero());
        let chain = select_chain(&r, &s, &t, &sigma);
        Ok(ExponentData { r, s, t, sigma, classification, chain })
    }

    pub fn from_exponents(p1: F, p2: F, sigma: F) -> Result<Self> {
        for (name, p) in [("p1", &p1), ("p2", &p2)] {
            if !(*p > F::one()) {
                return Err(Error::param(name, format!("must exceed 1, got {p}")));
            }
        }
        Self::from_reciprocals(p1.recip(), p2.recip(), sigma)
    }

    pub fn p1(&self) -> F {
        self.r.recip()
    }

    pub fn p2(&self) -> F {
        self.s.recip()
    }

    pub fn p3(&self) -> F {
        self.t.recip()
    }

    /// Whether `p3 > 1`; not implied by the hypotheses.
    pub fn p3_exceeds_one(&self) -> bool {
        self.t < F::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_of(q(1, 1), q(1, 1)).unwrap().sigma, q(1, 2));
        assert!(sigma_of(1.0, 1e-9).unwrap().sigma > 1.0 - 1e-9);
        let s = sigma_of(0.6309f64, 0.6309).unwrap();
        assert!((s.sigma - 0.5).abs() < 1e-15);
        assert_eq!(sigma_of(q(3, 2), q(1, 1)).unwrap().alpha(), q(1, 1));
        assert!(sigma_of(q(1, 1), q(2, 1)).is_err());
        assert!(sigma_of(q(1, 1), q(0, 1)).is_err());
        assert!(sigma_of(q(0, 1), q(1, 2)).is_err());
    }

    #[test]
    fn p3_examples() {
        let half = q(1, 2);
        let p = p3_from(q(4, 3), q(4, 3), half).unwrap();
        assert_eq!(p, P3::Finite { p3: q(2, 1), t: q(1, 2) });
        let bad = p3_from(q(4, 1), q(4, 1), half).unwrap();
        assert_eq!(bad, P3::Inadmissible { t: q(-1, 2) });
        assert!(p3_from(q(1, 1), q(2, 1), half).is_err());
    }

    #[test]
    fn classify_examples() {
        let half = q(1, 2);
        let z = q(0, 1);
        let c = region_classify(&q(3, 4), &q(3, 4), &half, &z);
        assert_eq!(c.tags, RegionTags { a: true, b: false, c: false });
        assert!(c.in_omega);
        let c = region_classify(&q(2, 5), &q(4, 5), &half, &z);
        assert_eq!(c.tags, RegionTags { a: false, b: true, c: false });
        let c = region_classify(&q(3, 10), &q(3, 10), &half, &z);
        assert!(c.tags.is_empty() && !c.in_omega);
        // edges of the open square are in no region
        let c = region_classify(&q(1, 1), &q(3, 4), &half, &z);
        assert!(c.tags.is_empty() && !c.in_omega && c.boundary);
        assert_eq!(RegionTags { a: true, b: true, c: false }.to_string(), "AB");
        assert_eq!(RegionTags::default().to_string(), "-");
    }

    #[test]
    fn overlap_below_half() {
        // sigma = 1/4: (0.6, 0.5) has r, s > sigma and r + s < 1 + sigma
        let c = region_classify(&q(3, 5), &q(1, 2), &q(1, 4), &q(0, 1));
        assert_eq!(c.tags, RegionTags { a: true, b: true, c: true });
    }

    #[test]
    fn decomposition_and_areas() {
        for sigma in [0.25, 0.5, 0.75] {
            let rep = decomposition_check(sigma, 400, 1e-12).unwrap();
            assert!(rep.holds(), "{rep:?}");
            assert!(rep.max_area_error() < 2.0 / 400.0, "{rep:?}");
        }
        assert!(decomposition_check(0.5, 50, 0.0).is_err());
        assert!(decomposition_check(1.0, 200, 0.0).is_err());
    }

    #[test]
    fn analytic_area_oracle() {
        // independent fine-lattice count with the raw inequalities
        for sigma in [0.2, 0.5, 0.8] {
            let n = 1500;
            let h = 1.0 / n as f64;
            let (mut om, mut b) = (0usize, 0usize);
            for i in 0..n {
                for j in 0..n {
                    let (r, s) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                    om += (r + s > 2.0 * sigma) as usize;
                    b += (s > sigma && r + s > 2.0 * sigma && r + s < 1.0 + sigma) as usize;
                }
            }
            let areas = analytic_areas(sigma);
            assert!((om as f64 * h * h - areas.omega).abs() < 2e-3);
            assert!((b as f64 * h * h - areas.b).abs() < 2e-3);
        }
    }

    #[test]
    fn chain_a_example() {
        let half = q(1, 2);
        let d = ExponentData::from_exponents(q(4, 3), q(4, 3), half).unwrap();
        let ch = d.chain.clone().unwrap();
        assert_eq!(ch.kind, ChainKind::A);
        assert_eq!((ch.first, ch.second), (q(1, 4), q(1, 4)));
        assert_eq!(d.p3(), q(2, 1));
        assert!(d.chain.unwrap().verify(&d.r, &d.s, &d.t, &half));
    }

    #[test]
    fn chain_b_and_c_examples() {
        let half = q(1, 2);
        let (r, s, t) = (q(2, 5), q(4, 5), q(1, 5));
        let b = chain_b(&r, &s, &t, &half).unwrap();
        assert_eq!((b.first, b.second), (q(7, 10), q(3, 10)));
        assert_eq!(q(7, 10), r + q(3, 10));
        assert!(b.verify(&r, &s, &t, &half));
        let c = chain_c(&s, &r, &t, &half).unwrap();
        assert_eq!((c.first, c.second), (b.first, b.second));
        assert!(chain_a(&r, &s, &half).is_err());
        assert!(chain_c(&r, &s, &t, &half).is_err());
        // off the plane
        assert!(matches!(chain_b(&r, &s, &q(1, 10), &half), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn exponent_data_rejects() {
        let half = q(1, 2);
        assert!(ExponentData::from_exponents(q(4, 1), q(4, 1), half).is_err());
        assert!(ExponentData::from_reciprocals(q(0, 1), q(3, 4), half).is_err());
        assert!(ExponentData::from_reciprocals(q(3, 4), q(3, 4), q(1, 1)).is_err());
    }
}
