//! The third-order hypermetric: the sup-product distance from a triple
//! `(x, y, z)` to the diagonal `{(u, u, u)}`, its order-two analogue, and the
//! sections `E(x, r) = {(y, z) : rho(x, y, z) < r}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::MetricMeasureSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Triple {
    pub fn new(x: usize, y: usize, z: usize) -> Self {
        Triple { x, y, z }
    }

    pub fn ids(&self) -> [usize; 3] {
        [self.x, self.y, self.z]
    }

    /// All six orderings, identity first.
    pub fn permutations(&self) -> [Triple; 6] {
        let Triple { x, y, z } = *self;
        [
            Triple::new(x, y, z),
            Triple::new(x, z, y),
            Triple::new(y, x, z),
            Triple::new(y, z, x),
            Triple::new(z, x, y),
            Triple::new(z, y, x),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMethod {
    /// Closed-form minimum enclosing ball in the ambient Euclidean box.
    ExactEuclidean,
    /// Minimum over stored candidate centers.
    DiscreteSearch,
}

impl RhoMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RhoMethod::ExactEuclidean => "exact-euclidean",
            RhoMethod::DiscreteSearch => "discrete-search",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Witness<T> {
    /// Stored point id.
    Point(usize),
    /// Ambient coordinates.
    Coords(Vec<T>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhoResult<T> {
    pub value: T,
    pub witness: Witness<T>,
    pub method: RhoMethod,
    /// `L = max{d(x,y), d(x,z), d(y,z)}`.
    pub max_pairwise: T,
}

/// Which centers `u` the discrete search ranges over.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum CandidatePolicy {
    /// Every stored point (this includes `x`, `y`, `z`).
    #[default]
    AllPoints,
    /// Only the three points of the triple.
    TripleOnly,
    /// An explicit list, scanned in the given order.
    Subset(Vec<usize>),
}

/// `d3(a, b) = max_i d(a_i, b_i)`.
pub fn d3<T: Real>(space: &MetricMeasureSpace<T>, a: Triple, b: Triple) -> T {
    space
        .distance(a.x, b.x)
        .max(space.distance(a.y, b.y))
        .max(space.distance(a.z, b.z))
}

fn max_pairwise<T: Real>(space: &MetricMeasureSpace<T>, t: Triple) -> T {
    space
        .distance(t.x, t.y)
        .max(space.distance(t.x, t.z))
        .max(space.distance(t.y, t.z))
}

#[inline]
fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&p, &q)| acc + (p - q) * (p - q))
}

#[inline]
fn dot_diff<T: Real>(w: &[T], p: &[T], q: &[T]) -> T {
    // (w - p) . (w - q)
    let mut acc = T::zero();
    for i in 0..w.len() {
        acc += (w[i] - p[i]) * (w[i] - q[i]);
    }
    acc
}

fn lex_less<T: Real>(a: &[T], b: &[T]) -> bool {
    for (p, q) in a.iter().zip(b) {
        if p < q {
            return true;
        }
        if p > q {
            return false;
        }
    }
    false
}

/// Minimum enclosing ball radius (and center) of three Euclidean points.
///
/// If the third point lies in the closed ball whose diameter is the longest
/// side, the answer is half that side with the midpoint as center; otherwise
/// the triangle is acute and the answer is the circumradius.
pub fn rho_exact_euclidean<T: Real>(x: &[T], y: &[T], z: &[T]) -> Result<RhoResult<T>> {
    let m = x.len();
    if m == 0 || y.len() != m || z.len() != m {
        return Err(Error::param("coords", "points must share a positive dimension"));
    }
    let (value, center, longest) = enclosing_ball(x, y, z);
    Ok(RhoResult {
        value,
        witness: Witness::Coords(center),
        method: RhoMethod::ExactEuclidean,
        max_pairwise: longest,
    })
}

/// Returns `(radius, center, longest side)`; the input order does not affect
/// the result bitwise.
fn enclosing_ball<T: Real>(x: &[T], y: &[T], z: &[T]) -> (T, Vec<T>, T) {
    let mut pts = [x, y, z];
    // canonical order makes the floating-point result permutation-invariant
    if lex_less(pts[1], pts[0]) {
        pts.swap(0, 1);
    }
    if lex_less(pts[2], pts[1]) {
        pts.swap(1, 2);
    }
    if lex_less(pts[1], pts[0]) {
        pts.swap(0, 1);
    }
    let [a, b, c] = pts;
    let half = T::lit(0.5);
    let sides = [(sq_dist(a, b), a, b, c), (sq_dist(a, c), a, c, b), (sq_dist(b, c), b, c, a)];
    let mut longest = 0;
    for k in 1..3 {
        if sides[k].0 > sides[longest].0 {
            longest = k;
        }
    }
    let (l2, p, q, w) = sides[longest];
    let l = l2.sqrt();
    if dot_diff(w, p, q) <= T::zero() {
        let mid = p.iter().zip(q).map(|(&s, &t)| (s + t) * half).collect();
        return (l * half, mid, l);
    }
    // acute: circumcenter relative to vertex w
    let u: Vec<T> = p.iter().zip(w).map(|(&s, &t)| s - t).collect();
    let v: Vec<T> = q.iter().zip(w).map(|(&s, &t)| s - t).collect();
    let uu = u.iter().fold(T::zero(), |acc, &s| acc + s * s);
    let vv = v.iter().fold(T::zero(), |acc, &s| acc + s * s);
    let uv = u.iter().zip(&v).fold(T::zero(), |acc, (&s, &t)| acc + s * t);
    let gram = uu * vv - uv * uv;
    let two = T::lit(2.0);
    let alpha = vv * (uu - uv) / (two * gram);
    let beta = uu * (vv - uv) / (two * gram);
    let center = (0..w.len()).map(|i| w[i] + alpha * u[i] + beta * v[i]).collect();
    // R = abc / (4 Area), Area = sqrt(gram) / 2
    let radius = (uu * vv * sq_dist(p, q)).sqrt() / (two * gram.sqrt());
    (radius, center, l)
}

/// Minimum over candidate centers `u` of `max{d(x,u), d(y,u), d(z,u)}`.
/// Ties resolve to the first minimizer in scan order.
pub fn rho_discrete<T: Real>(
    space: &MetricMeasureSpace<T>,
    triple: Triple,
    policy: &CandidatePolicy,
) -> Result<RhoResult<T>> {
    for id in triple.ids() {
        space.check_id(id)?;
    }
    let objective = |u: usize| {
        space
            .distance(triple.x, u)
            .max(space.distance(triple.y, u))
            .max(space.distance(triple.z, u))
    };
    let (value, witness) = match policy {
        CandidatePolicy::AllPoints => argmin(0..space.len(), objective),
        CandidatePolicy::TripleOnly => argmin(triple.ids().into_iter(), objective),
        CandidatePolicy::Subset(ids) => {
            for &id in ids {
                space.check_id(id)?;
            }
            argmin(ids.iter().copied(), objective)
        }
    }
    .ok_or(Error::EmptyCandidates)?;
    Ok(RhoResult {
        value,
        witness: Witness::Point(witness),
        method: RhoMethod::DiscreteSearch,
        max_pairwise: max_pairwise(space, triple),
    })
}

fn argmin<T: Real>(ids: impl Iterator<Item = usize>, f: impl Fn(usize) -> T) -> Option<(T, usize)> {
    let mut best: Option<(T, usize)> = None;
    for u in ids {
        let v = f(u);
        match best {
            Some((b, _)) if !(v < b) => {}
            _ => best = Some((v, u)),
        }
    }
    best
}

/// Order-two hypermetric `inf_u max{d(x,u), d(y,u)}` over all stored points.
pub fn rho_pair<T: Real>(space: &MetricMeasureSpace<T>, x: usize, y: usize) -> Result<T> {
    space.check_id(x)?;
    space.check_id(y)?;
    let (value, _) = argmin(0..space.len(), |u| space.distance(x, u).max(space.distance(y, u)))
        .ok_or(Error::EmptyCandidates)?;
    Ok(value)
}

/// Evaluates `rho` on a space with a fixed method and candidate policy.
#[derive(Clone, Debug)]
pub struct RhoOracle<'a, T> {
    space: &'a MetricMeasureSpace<T>,
    method: RhoMethod,
}

impl<'a, T: Real> RhoOracle<'a, T> {
    /// Exact enclosing-ball evaluation on convex spaces, discrete search
    /// otherwise.
    pub fn new(space: &'a MetricMeasureSpace<T>) -> Self {
        let method = if space.is_convex() { RhoMethod::ExactEuclidean } else { RhoMethod::DiscreteSearch };
        RhoOracle { space, method }
    }

    pub fn with_method(space: &'a MetricMeasureSpace<T>, method: RhoMethod) -> Result<Self> {
        if method == RhoMethod::ExactEuclidean && !space.is_convex() {
            return Err(Error::param(
                "method",
                "the exact path needs a space that discretizes a convex Euclidean box",
            ));
        }
        Ok(RhoOracle { space, method })
    }

    pub fn space(&self) -> &'a MetricMeasureSpace<T> {
        self.space
    }

    pub fn method(&self) -> RhoMethod {
        self.method
    }

    /// `rho(x, y, z)` as a bare value.
    #[inline]
    pub fn rho(&self, x: usize, y: usize, z: usize) -> T {
        let s = self.space;
        match self.method {
            RhoMethod::ExactEuclidean => {
                if s.dim() == 1 {
                    let (a, b, c) = (s.point(x)[0], s.point(y)[0], s.point(z)[0]);
                    let range = a.max(b).max(c) - a.min(b).min(c);
                    s.metric().from_euclidean(range * T::lit(0.5))
                } else {
                    let (r, _, _) = enclosing_ball(s.point(x), s.point(y), s.point(z));
                    s.metric().from_euclidean(r)
                }
            }
            RhoMethod::DiscreteSearch => {
                let mut best = T::infinity();
                for u in 0..s.len() {
                    let v = s.distance(x, u).max(s.distance(y, u)).max(s.distance(z, u));
                    if v < best {
                        best = v;
                    }
                }
                best
            }
        }
    }

    /// Full result with witness.
    pub fn evaluate(&self, triple: Triple) -> Result<RhoResult<T>> {
        let s = self.space;
        match self.method {
            RhoMethod::ExactEuclidean => {
                for id in triple.ids() {
                    s.check_id(id)?;
                }
                let (r, center, _) = enclosing_ball(s.point(triple.x), s.point(triple.y), s.point(triple.z));
                Ok(RhoResult {
                    value: s.metric().from_euclidean(r),
                    witness: Witness::Coords(center),
                    method: RhoMethod::ExactEuclidean,
                    max_pairwise: max_pairwise(s, triple),
                })
            }
            RhoMethod::DiscreteSearch => rho_discrete(s, triple, &CandidatePolicy::AllPoints),
        }
    }

    /// Order-two hypermetric with the oracle's method.
    pub fn rho_pair(&self, x: usize, y: usize) -> T {
        match self.method {
            RhoMethod::ExactEuclidean => {
                let e = self.space.euclidean(self.space.point(x), self.space.point(y));
                self.space.metric().from_euclidean(e * T::lit(0.5))
            }
            RhoMethod::DiscreteSearch => {
                let s = self.space;
                (0..s.len())
                    .map(|u| s.distance(x, u).max(s.distance(y, u)))
                    .fold(T::infinity(), T::min)
            }
        }
    }

    /// Membership test for the section `E(x, r)`.
    pub fn section(&self, x: usize, r: T) -> Section<'_, 'a, T> {
        Section::new(self, x, r)
    }
}

/// Precomputed membership structure for `E(x, r)`.
///
/// For discrete search, `(y, z)` is a member iff some candidate `u` has
/// `d(x,u), d(y,u), d(z,u) < r`; the candidates with `d(x,u) < r` are packed
/// into a bitset per point so the test is a word-wise intersection.
pub struct Section<'o, 'a, T> {
    oracle: &'o RhoOracle<'a, T>,
    x: usize,
    r: T,
    words: usize,
    masks: Vec<u64>,
}

impl<'o, 'a, T: Real> Section<'o, 'a, T> {
    fn new(oracle: &'o RhoOracle<'a, T>, x: usize, r: T) -> Self {
        let s = oracle.space;
        if oracle.method == RhoMethod::ExactEuclidean {
            return Section { oracle, x, r, words: 0, masks: Vec::new() };
        }
        let near: Vec<usize> = (0..s.len()).filter(|&u| s.distance(x, u) < r).collect();
        let words = near.len().div_ceil(64).max(1);
        let mut masks = vec![0u64; words * s.len()];
        for y in 0..s.len() {
            let row = &mut masks[y * words..(y + 1) * words];
            for (k, &u) in near.iter().enumerate() {
                if s.distance(y, u) < r {
                    row[k / 64] |= 1 << (k % 64);
                }
            }
        }
        Section { oracle, x, r, words, masks }
    }

    #[inline]
    pub fn contains(&self, y: usize, z: usize) -> bool {
        match self.oracle.method {
            RhoMethod::ExactEuclidean => self.oracle.rho(self.x, y, z) < self.r,
            RhoMethod::DiscreteSearch => {
                let a = &self.masks[y * self.words..(y + 1) * self.words];
                let b = &self.masks[z * self.words..(z + 1) * self.words];
                a.iter().zip(b).any(|(p, q)| p & q != 0)
            }
        }
    }
}

/// `mu x mu` of the section `E(x, r)`.
pub fn section_measure<T: Real>(oracle: &RhoOracle<'_, T>, x: usize, r: T) -> Result<T> {
    let s = oracle.space;
    s.check_id(x)?;
    if !(r > T::zero()) {
        return Err(Error::param("r", format!("radius must be positive, got {r}")));
    }
    let section = oracle.section(x, r);
    let two = T::lit(2.0);
    let mut total = T::zero();
    for y in 0..s.len() {
        let mut row = T::zero();
        for z in (y + 1)..s.len() {
            if section.contains(y, z) {
                row += s.weight(z);
            }
        }
        let wy = s.weight(y);
        total += two * wy * row;
        if section.contains(y, y) {
            total += wy * wy;
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InclusionLayer {
    /// `(y, z)` in `B(x,r) x B(x,r)` but not in `E(x, r)`.
    InnerNotInSection,
    /// `(y, z)` in `E(x, r)` but not in `B(x,2 kappa r) x B(x,2 kappa r)`.
    SectionNotInOuter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct InclusionViolation {
    pub y: usize,
    pub z: usize,
    pub layer: InclusionLayer,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionReport<T> {
    pub x: usize,
    pub r: T,
    pub inner_count: usize,
    pub section_count: usize,
    pub outer_count: usize,
    pub inner_measure: T,
    pub section_measure: T,
    pub outer_measure: T,
    pub violation: Option<InclusionViolation>,
}

impl<T> InclusionReport<T> {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Enumerates every pair `(y, z)` and checks
/// `B(x,r)^2 ⊂ E(x,r) ⊂ B(x,2 kappa r)^2`.
pub fn check_inclusions<T: Real>(oracle: &RhoOracle<'_, T>, x: usize, r: T) -> Result<InclusionReport<T>> {
    let s = oracle.space;
    s.check_id(x)?;
    if !(r > T::zero()) {
        return Err(Error::param("r", format!("radius must be positive, got {r}")));
    }
    let outer_r = T::lit(2.0) * s.kappa() * r;
    let inner: Vec<bool> = (0..s.len()).map(|y| s.distance(x, y) < r).collect();
    let outer: Vec<bool> = (0..s.len()).map(|y| s.distance(x, y) < outer_r).collect();
    let section = oracle.section(x, r);
    let mut report = InclusionReport {
        x,
        r,
        inner_count: 0,
        section_count: 0,
        outer_count: 0,
        inner_measure: T::zero(),
        section_measure: T::zero(),
        outer_measure: T::zero(),
        violation: None,
    };
    for y in 0..s.len() {
        for z in 0..s.len() {
            let w = s.weight(y) * s.weight(z);
            let in_inner = inner[y] && inner[z];
            let in_outer = outer[y] && outer[z];
            let in_section = section.contains(y, z);
            if in_inner {
                report.inner_count += 1;
                report.inner_measure += w;
            }
            if in_section {
                report.section_count += 1;
                report.section_measure += w;
            }
            if in_outer {
                report.outer_count += 1;
                report.outer_measure += w;
            }
            if report.violation.is_none() {
                if in_inner && !in_section {
                    report.violation = Some(InclusionViolation { y, z, layer: InclusionLayer::InnerNotInSection });
                } else if in_section && !in_outer {
                    report.violation = Some(InclusionViolation { y, z, layer: InclusionLayer::SectionNotInOuter });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_cantor, build_euclidean_grid, build_snowflake_line};
    use approx::assert_relative_eq;

    /// Dense search over candidate centers in a box, used as an independent
    /// check of the closed form.
    fn grid_search_2d(pts: &[[f64; 2]; 3]) -> f64 {
        let steps = 2000;
        let (lo, hi) = (-0.5, 1.5);
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let u = [
                    lo + (hi - lo) * i as f64 / steps as f64,
                    lo + (hi - lo) * j as f64 / steps as f64,
                ];
                let v = pts
                    .iter()
                    .map(|p| ((p[0] - u[0]).powi(2) + (p[1] - u[1]).powi(2)).sqrt())
                    .fold(0.0, f64::max);
                best = best.min(v);
            }
        }
        best
    }

    #[test]
    fn d3_examples() {
        let s = build_euclidean_grid::<f64>(1, 8, 8.0).unwrap();
        // points sit at 0.5, 1.5, ...; shifts of 1, 2, 3 cells
        let a = Triple::new(0, 0, 0);
        let b = Triple::new(1, 2, 3);
        assert_eq!(d3(&s, a, a), 0.0);
        assert_relative_eq!(d3(&s, a, b), 3.0);
        assert_eq!(d3(&s, a, b), d3(&s, b, a));
    }

    #[test]
    fn exact_line() {
        let r = rho_exact_euclidean(&[0.0], &[1.0], &[2.0]).unwrap();
        assert_relative_eq!(r.value, 1.0);
        assert_eq!(r.witness, Witness::Coords(vec![1.0]));
        assert_relative_eq!(r.max_pairwise, 2.0);
    }

    #[test]
    fn exact_equilateral() {
        let h = 3f64.sqrt() / 2.0;
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, h]];
        let r = rho_exact_euclidean(&pts[0], &pts[1], &pts[2]).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(r.value, 0.57735, epsilon = 1e-5);
        let searched = grid_search_2d(&pts);
        assert!(searched >= r.value - 1e-12 && searched - r.value < 2e-3);
        match r.witness {
            Witness::Coords(c) => {
                assert_relative_eq!(c[0], 0.5, epsilon = 1e-14);
                assert_relative_eq!(c[1], h / 3.0, epsilon = 1e-14);
            }
            _ => panic!("expected coordinates"),
        }
    }

    #[test]
    fn exact_right_triangle() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = rho_exact_euclidean(&pts[0], &pts[1], &pts[2]).unwrap();
        assert_relative_eq!(r.value, 2f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_eq!(r.witness, Witness::Coords(vec![0.5, 0.5]));
        let searched = grid_search_2d(&pts);
        assert!(searched >= r.value - 1e-12 && searched - r.value < 2e-3);
    }

    #[test]
    fn exact_degenerate() {
        let r = rho_exact_euclidean(&[0.3, 0.4], &[0.3, 0.4], &[0.3, 0.4]).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.witness, Witness::Coords(vec![0.3, 0.4]));
        assert!(rho_exact_euclidean(&[0.0], &[0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn exact_3d_acute_matches_search() {
        // regular tetrahedron face lifted into 3-D
        let p: [[f64; 3]; 3] = [[0.1, 0.2, 0.3], [0.8, 0.1, 0.4], [0.4, 0.9, 0.6]];
        let r = rho_exact_euclidean(&p[0], &p[1], &p[2]).unwrap();
        let Witness::Coords(c) = &r.witness else { panic!("coords") };
        {
            for q in &p {
                let d = ((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2) + (q[2] - c[2]).powi(2)).sqrt();
                assert_relative_eq!(d, r.value, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn discrete_examples() {
        let s = build_euclidean_grid::<f64>(1, 512, 1.0).unwrap();
        let t = Triple::new(7, 7, 7);
        let r = rho_discrete(&s, t, &CandidatePolicy::AllPoints).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.witness, Witness::Point(7));

        let t = Triple::new(0, 256, 511);
        let r = rho_discrete(&s, t, &CandidatePolicy::AllPoints).unwrap();
        let exact = rho_exact_euclidean(s.point(0), s.point(256), s.point(511)).unwrap();
        assert!((r.value - 0.5).abs() <= 1.0 / 512.0);
        assert!(r.value >= exact.value - 1e-12);
        assert!(r.value <= s.distance(0, 256).max(s.distance(0, 511)));
    }

    #[test]
    fn discrete_policies() {
        let s = build_euclidean_grid::<f64>(1, 16, 1.0).unwrap();
        let t = Triple::new(2, 9, 13);
        let all = rho_discrete(&s, t, &CandidatePolicy::AllPoints).unwrap();
        let only = rho_discrete(&s, t, &CandidatePolicy::TripleOnly).unwrap();
        assert!(all.value <= only.value);
        assert_eq!(only.value, s.distance(9, 2).max(s.distance(9, 13)));
        assert_eq!(
            rho_discrete(&s, t, &CandidatePolicy::Subset(vec![])),
            Err(Error::EmptyCandidates)
        );
        assert!(rho_discrete(&s, Triple::new(0, 1, 99), &CandidatePolicy::AllPoints).is_err());
    }

    #[test]
    fn ties_pick_first_minimizer() {
        // points 0.125, 0.375, 0.625, 0.875; pair (0, 3) is centered between 1 and 2
        let s = build_euclidean_grid::<f64>(1, 4, 1.0).unwrap();
        let r = rho_discrete(&s, Triple::new(0, 3, 3), &CandidatePolicy::AllPoints).unwrap();
        assert_eq!(r.witness, Witness::Point(1));
    }

    #[test]
    fn pair_hypermetric() {
        let s = build_euclidean_grid::<f64>(1, 2, 1.0).unwrap();
        assert_eq!(rho_pair(&s, 1, 1).unwrap(), 0.0);
        let oracle = RhoOracle::new(&s);
        assert_relative_eq!(oracle.rho_pair(0, 1), 0.25);

        let line = build_euclidean_grid::<f64>(1, 2, 2.0).unwrap();
        // points 0.5 and 1.5: the exact pair value is half their distance
        assert_relative_eq!(RhoOracle::new(&line).rho_pair(0, 1), 0.5);

        let snow = build_snowflake_line::<f64>(64, 2.0).unwrap();
        for (x, y) in [(0, 63), (5, 40), (10, 11)] {
            let d = snow.distance(x, y);
            let p = rho_pair(&snow, x, y).unwrap();
            assert!(p >= d / 4.0 * (1.0 - 1e-12) && p <= d);
        }
    }

    #[test]
    fn oracle_discrete_matches_rho_discrete() {
        let s = build_cantor::<f64>(5, 1.0 / 3.0).unwrap();
        let oracle = RhoOracle::new(&s);
        assert_eq!(oracle.method(), RhoMethod::DiscreteSearch);
        for (x, y, z) in [(0, 5, 31), (3, 3, 17), (12, 20, 9)] {
            let r = rho_discrete(&s, Triple::new(x, y, z), &CandidatePolicy::AllPoints).unwrap();
            assert_eq!(oracle.rho(x, y, z), r.value);
        }
        assert!(RhoOracle::with_method(&s, RhoMethod::ExactEuclidean).is_err());
    }

    #[test]
    fn exact_is_permutation_invariant_in_2d() {
        let s = build_euclidean_grid::<f64>(2, 9, 1.0).unwrap();
        let oracle = RhoOracle::new(&s);
        let t = Triple::new(3, 40, 77);
        let v = oracle.rho(t.x, t.y, t.z);
        for p in t.permutations() {
            assert_eq!(oracle.rho(p.x, p.y, p.z), v);
        }
    }

    #[test]
    fn section_extremes() {
        let s = build_euclidean_grid::<f64>(1, 16, 1.0).unwrap();
        for method in [RhoMethod::ExactEuclidean, RhoMethod::DiscreteSearch] {
            let oracle = RhoOracle::with_method(&s, method).unwrap();
            let big = section_measure(&oracle, 5, 2.5 * s.diameter()).unwrap();
            assert_relative_eq!(big, 1.0, epsilon = 1e-12);
            // the smallest nonzero rho at x is half a cell
            let tiny = section_measure(&oracle, 5, 0.01).unwrap();
            assert_relative_eq!(tiny, s.weight(5).powi(2));
        }
    }

    #[test]
    fn section_bitset_matches_direct_search() {
        let s = build_euclidean_grid::<f64>(2, 7, 1.0).unwrap();
        let oracle = RhoOracle::with_method(&s, RhoMethod::DiscreteSearch).unwrap();
        for r in [0.1, 0.2, 0.37] {
            let section = oracle.section(24, r);
            for y in 0..s.len() {
                for z in 0..s.len() {
                    let direct = rho_discrete(&s, Triple::new(24, y, z), &CandidatePolicy::AllPoints)
                        .unwrap()
                        .value
                        < r;
                    assert_eq!(section.contains(y, z), direct, "r={r} y={y} z={z}");
                }
            }
        }
    }

    #[test]
    fn section_bracket_on_line() {
        let s = build_euclidean_grid::<f64>(1, 256, 1.0).unwrap();
        let oracle = RhoOracle::new(&s);
        let r = 0.1;
        let m = section_measure(&oracle, 128, r).unwrap();
        let (a, big_a) = (s.ahlfors_lower(), s.ahlfors_upper());
        assert!(m >= a * a * r * r && m <= 4.0 * big_a * big_a * r * r, "{m}");
    }

    #[test]
    fn inclusions_hold() {
        let s = build_snowflake_line::<f64>(64, 2.0).unwrap();
        for method in [RhoMethod::ExactEuclidean, RhoMethod::DiscreteSearch] {
            let oracle = RhoOracle::with_method(&s, method).unwrap();
            for r in [0.001, 0.01, 0.05] {
                let rep = check_inclusions(&oracle, 30, r).unwrap();
                assert!(rep.holds(), "{rep:?}");
                assert!(rep.inner_count <= rep.section_count && rep.section_count <= rep.outer_count);
                assert_relative_eq!(rep.section_measure, section_measure(&oracle, 30, r).unwrap(), epsilon = 1e-12);
            }
            let rep = check_inclusions(&oracle, 30, 3.0).unwrap();
            assert_eq!(rep.inner_count, 64 * 64);
            assert_eq!(rep.section_count, 64 * 64);
            assert_eq!(rep.outer_count, 64 * 64);
        }
    }
}
