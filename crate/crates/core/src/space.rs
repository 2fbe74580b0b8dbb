//! Finite discretizations of Ahlfors-regular quasi-metric measure spaces.
//!
//! A space is an ordered list of points (coordinates in a box), a quasi-metric
//! that is a monotone function of Euclidean distance, per-point quadrature
//! weights approximating the measure, and the nominal geometric constants
//! `kappa` (quasi-triangle), `eta` (dimension) and the regularity bounds
//! `a <= A`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Spaces with at most this many points cache the full distance matrix.
pub const DEFAULT_CACHE_THRESHOLD: usize = 2048;

/// Serializable description of a space builder invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Grid {
        dim: usize,
        n: usize,
        #[serde(default = "unit_extent")]
        extent: f64,
    },
    Snowflake {
        n: usize,
        beta: f64,
    },
    Cantor {
        level: u32,
        ratio: f64,
    },
}

fn unit_extent() -> f64 {
    1.0
}

impl SpaceConfig {
    pub fn build<T: Real>(&self) -> Result<MetricMeasureSpace<T>> {
        match *self {
            SpaceConfig::Grid { dim, n, extent } => build_euclidean_grid(dim, n, T::lit(extent)),
            SpaceConfig::Snowflake { n, beta } => build_snowflake_line(n, T::lit(beta)),
            SpaceConfig::Cantor { level, ratio } => build_cantor(level, T::lit(ratio)),
        }
    }

    /// Same family with the resolution replaced (`n` for grids and snowflakes,
    /// `level` for Cantor sets).
    pub fn with_resolution(&self, resolution: usize) -> SpaceConfig {
        match *self {
            SpaceConfig::Grid { dim, extent, .. } => SpaceConfig::Grid { dim, n: resolution, extent },
            SpaceConfig::Snowflake { beta, .. } => SpaceConfig::Snowflake { n: resolution, beta },
            SpaceConfig::Cantor { ratio, .. } => SpaceConfig::Cantor { level: resolution as u32, ratio },
        }
    }
}

impl fmt::Display for SpaceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceConfig::Grid { dim, n, extent } if *extent == 1.0 => write!(f, "grid{dim}d:{n}"),
            SpaceConfig::Grid { dim, n, extent } => write!(f, "grid:{dim},{n},{extent}"),
            SpaceConfig::Snowflake { n, beta } => write!(f, "snowflake:{n},{beta}"),
            SpaceConfig::Cantor { level, ratio } => write!(f, "cantor:{level},{ratio}"),
        }
    }
}

/// Parses `grid1d:256`, `grid2d:64`, `grid:<dim>,<n>,<extent>`,
/// `snowflake:<n>,<beta>` and `cantor:<level>,<ratio>`.
impl FromStr for SpaceConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("space `{s}` lacks `kind:params`")))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| Error::Parse(format!("space `{s}` is missing parameter {}", i + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("space `{s}`: {e}")))
        };
        let int = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(|| Error::Parse(format!("space `{s}` is missing parameter {}", i + 1)))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("space `{s}`: {e}")))
        };
        let expect_len = |len: usize| -> Result<()> {
            if args.len() == len {
                Ok(())
            } else {
                Err(Error::Parse(format!("space `{s}` expects {len} parameter(s)")))
            }
        };
        match kind {
            "grid1d" | "grid2d" | "grid3d" => {
                expect_len(1)?;
                let dim = kind[4..5].parse().expect("digit");
                Ok(SpaceConfig::Grid { dim, n: int(0)?, extent: 1.0 })
            }
            "grid" => {
                expect_len(3)?;
                Ok(SpaceConfig::Grid { dim: int(0)?, n: int(1)?, extent: num(2)? })
            }
            "snowflake" => {
                expect_len(2)?;
                Ok(SpaceConfig::Snowflake { n: int(0)?, beta: num(1)? })
            }
            "cantor" => {
                expect_len(2)?;
                Ok(SpaceConfig::Cantor { level: int(0)? as u32, ratio: num(1)? })
            }
            other => Err(Error::Parse(format!("unknown space kind `{other}`"))),
        }
    }
}

/// Quasi-metric as a function of Euclidean distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric<T> {
    Euclidean,
    /// `d(x, y) = |x - y|^beta`.
    Snowflake { beta: T },
}

impl<T: Real> Metric<T> {
    #[inline]
    pub fn from_euclidean(&self, e: T) -> T {
        match *self {
            Metric::Euclidean => e,
            Metric::Snowflake { beta } => e.powf(beta),
        }
    }

    #[inline]
    pub fn to_euclidean(&self, r: T) -> T {
        match *self {
            Metric::Euclidean => r,
            Metric::Snowflake { beta } => r.powf(beta.recip()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MetricMeasureSpace<T> {
    config: SpaceConfig,
    dim: usize,
    coords: Vec<T>,
    weights: Vec<T>,
    metric: Metric<T>,
    kappa: T,
    eta: T,
    ahlfors_lower: T,
    ahlfors_upper: T,
    /// Coordinate box `[0, extent]^dim` containing the points.
    extent: T,
    /// Cell side length in coordinates.
    cell: T,
    /// Euclidean radius slack for the ball-measure bracket.
    ball_slack: T,
    /// The points discretize the whole (convex) box rather than a subset.
    convex: bool,
    cache: Option<Vec<T>>,
}

/// Membership statistics of the open ball `B(center, radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallStats<T> {
    pub center: usize,
    pub radius: T,
    pub measure: T,
    pub count: usize,
}

/// Result of the log-log regularity fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AhlforsFit<T> {
    pub eta: T,
    pub lower: T,
    pub upper: T,
    pub centers: Vec<usize>,
    pub radii: Vec<T>,
}

pub fn build_euclidean_grid<T: Real>(dim: usize, n: usize, extent: T) -> Result<MetricMeasureSpace<T>> {
    if !(1..=3).contains(&dim) {
        return Err(Error::param("dim", format!("must be 1, 2 or 3, got {dim}")));
    }
    if n < 2 {
        return Err(Error::param("n", format!("must be at least 2, got {n}")));
    }
    if !(extent > T::zero()) || !extent.is_finite() {
        return Err(Error::param("extent", format!("must be positive and finite, got {extent}")));
    }
    let h = extent / T::lit(n as f64);
    let half = T::lit(0.5);
    let len = n.pow(dim as u32);
    let mut coords = Vec::with_capacity(len * dim);
    for idx in 0..len {
        // row-major, last axis fastest
        let mut rem = idx;
        let mut digits = [0usize; 3];
        for axis in (0..dim).rev() {
            digits[axis] = rem % n;
            rem /= n;
        }
        for &d in &digits[..dim] {
            coords.push((T::lit(d as f64) + half) * h);
        }
    }
    let volume = unit_ball_volume::<T>(dim);
    let space = MetricMeasureSpace {
        config: SpaceConfig::Grid { dim, n, extent: extent.as_f64() },
        dim,
        coords,
        weights: vec![h.powi(dim as i32); len],
        metric: Metric::Euclidean,
        kappa: T::one(),
        eta: T::lit(dim as f64),
        ahlfors_lower: volume,
        ahlfors_upper: volume,
        extent,
        cell: h,
        ball_slack: h * T::lit(dim as f64).sqrt() * half,
        convex: true,
        cache: None,
    };
    Ok(space.with_cache_threshold(DEFAULT_CACHE_THRESHOLD))
}

pub fn build_snowflake_line<T: Real>(n: usize, beta: T) -> Result<MetricMeasureSpace<T>> {
    if n < 2 {
        return Err(Error::param("n", format!("must be at least 2, got {n}")));
    }
    if !(beta > T::one()) || !beta.is_finite() {
        return Err(Error::param(
            "beta",
            format!("must exceed 1, got {beta}; use the Euclidean grid for beta = 1"),
        ));
    }
    let h = T::one() / T::lit(n as f64);
    let half = T::lit(0.5);
    let coords = (0..n).map(|i| (T::lit(i as f64) + half) * h).collect();
    let space = MetricMeasureSpace {
        config: SpaceConfig::Snowflake { n, beta: beta.as_f64() },
        dim: 1,
        coords,
        weights: vec![h; n],
        metric: Metric::Snowflake { beta },
        kappa: T::lit(2.0).powf(beta - T::one()),
        eta: beta.recip(),
        ahlfors_lower: T::lit(2.0),
        ahlfors_upper: T::lit(2.0),
        extent: T::one(),
        cell: h,
        ball_slack: h * half,
        convex: true,
        cache: None,
    };
    Ok(space.with_cache_threshold(DEFAULT_CACHE_THRESHOLD))
}

/// Middle-gap Cantor set on `[0, 1]`, one representative (the cell center)
/// per level-`level` cell.
///
/// Regularity constants: `a = 1/2`, and `A = 2m` where `m` is the largest
/// number of level-`k` cells an interval of length `2 ratio^k` can meet,
/// i.e. the largest integer below `(1 + 2 ratio) / (1 - ratio)`. Both hold
/// for radii in `[ratio^level, 1]`.
pub fn build_cantor<T: Real>(level: u32, ratio: T) -> Result<MetricMeasureSpace<T>> {
    if level < 1 {
        return Err(Error::param("level", "must be at least 1"));
    }
    if level > 24 {
        return Err(Error::param("level", format!("{level} exceeds the supported depth of 24")));
    }
    if !(ratio > T::zero() && ratio < T::lit(0.5)) {
        return Err(Error::param("ratio", format!("must lie in (0, 1/2), got {ratio}")));
    }
    let mut cells = vec![(T::zero(), T::one())];
    for _ in 0..level {
        let mut next = Vec::with_capacity(cells.len() * 2);
        for &(lo, len) in &cells {
            let child = len * ratio;
            next.push((lo, child));
            next.push((lo + len - child, child));
        }
        cells = next;
    }
    let half = T::lit(0.5);
    let coords: Vec<T> = cells.iter().map(|&(lo, len)| lo + len * half).collect();
    let count = coords.len();
    let crowd = ((T::one() + ratio + ratio) / (T::one() - ratio)).ceil() - T::one();
    let space = MetricMeasureSpace {
        config: SpaceConfig::Cantor { level, ratio: ratio.as_f64() },
        dim: 1,
        coords,
        weights: vec![T::one() / T::lit(count as f64); count],
        metric: Metric::Euclidean,
        kappa: T::one(),
        eta: T::LN_2() / ratio.recip().ln(),
        ahlfors_lower: half,
        ahlfors_upper: T::lit(2.0) * crowd.max(T::one()),
        extent: T::one(),
        cell: ratio.powi(level as i32),
        ball_slack: T::zero(),
        convex: false,
        cache: None,
    };
    Ok(space.with_cache_threshold(DEFAULT_CACHE_THRESHOLD))
}

fn unit_ball_volume<T: Real>(dim: usize) -> T {
    match dim {
        1 => T::lit(2.0),
        2 => T::PI(),
        _ => T::lit(4.0) * T::PI() / T::lit(3.0),
    }
}

impl<T: Real> MetricMeasureSpace<T> {
    /// Caches the distance matrix when the space has at most `threshold`
    /// points, otherwise drops any cache.
    pub fn with_cache_threshold(mut self, threshold: usize) -> Self {
        self.cache = None;
        let n = self.len();
        if n <= threshold {
            let mut matrix = vec![T::zero(); n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = self.distance_uncached(i, j);
                    matrix[i * n + j] = d;
                    matrix[j * n + i] = d;
                }
            }
            self.cache = Some(matrix);
        }
        self
    }

    pub fn config(&self) -> &SpaceConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric<T> {
        self.metric
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn ahlfors_lower(&self) -> T {
        self.ahlfors_lower
    }

    pub fn ahlfors_upper(&self) -> T {
        self.ahlfors_upper
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn cell(&self) -> T {
        self.cell
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    /// True when the points discretize a convex Euclidean box, so that the
    /// infimum over the underlying continuum is the enclosing-ball radius.
    pub fn is_convex(&self) -> bool {
        self.convex
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn total_measure(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, &w| acc + w)
    }

    pub fn check_id(&self, id: usize) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::PointOutOfRange { id, len: self.len() })
        }
    }

    #[inline]
    pub fn euclidean(&self, a: &[T], b: &[T]) -> T {
        let mut acc = T::zero();
        for (&p, &q) in a.iter().zip(b) {
            let t = p - q;
            acc += t * t;
        }
        acc.sqrt()
    }

    #[inline]
    fn distance_uncached(&self, i: usize, j: usize) -> T {
        if i == j {
            return T::zero();
        }
        self.metric.from_euclidean(self.euclidean(self.point(i), self.point(j)))
    }

    /// Quasi-distance between two stored points.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> T {
        match &self.cache {
            Some(m) => m[i * self.len() + j],
            None => self.distance_uncached(i, j),
        }
    }

    /// Quasi-distance between raw coordinates in the ambient box.
    pub fn distance_coords(&self, a: &[T], b: &[T]) -> T {
        self.metric.from_euclidean(self.euclidean(a, b))
    }

    /// Largest distance between stored points.
    pub fn diameter(&self) -> T {
        if self.dim == 1 {
            let (lo, hi) = self.coords.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &c| {
                (lo.min(c), hi.max(c))
            });
            return self.metric.from_euclidean(hi - lo);
        }
        // grid: opposite corners
        let n = match self.config {
            SpaceConfig::Grid { n, .. } => n,
            _ => unreachable!("only grids are multi-dimensional"),
        };
        let side = self.cell * T::lit((n - 1) as f64);
        self.metric.from_euclidean(side * T::lit(self.dim as f64).sqrt())
    }

    /// Smallest nonzero distance between stored points.
    pub fn min_distance(&self) -> T {
        if self.dim == 1 {
            let gap = self
                .coords
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(T::infinity(), T::min);
            return self.metric.from_euclidean(gap);
        }
        self.metric.from_euclidean(self.cell)
    }

    /// Points at coordinate distance at least `extent / 4` from the boundary
    /// of the ambient box.
    pub fn is_interior(&self, i: usize) -> bool {
        let margin = self.extent * T::lit(0.25);
        self.point(i)
            .iter()
            .all(|&c| c >= margin && c <= self.extent - margin)
    }

    pub fn interior_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i)).collect()
    }

    /// `count` interior points spread evenly through the interior list.
    pub fn sample_interior(&self, count: usize) -> Vec<usize> {
        let interior = self.interior_points();
        if count == 0 || interior.is_empty() {
            return Vec::new();
        }
        if count >= interior.len() {
            return interior;
        }
        (0..count)
            .map(|k| interior[(2 * k + 1) * interior.len() / (2 * count)])
            .collect()
    }

    /// Range of radii on which the stored regularity constants are asserted,
    /// in quasi-metric units.
    pub fn valid_window(&self) -> (T, T) {
        let quarter = self.extent * T::lit(0.25);
        let lo = if self.convex { self.cell * T::lit(2.0) } else { self.cell };
        (self.metric.from_euclidean(lo), self.metric.from_euclidean(quarter))
    }

    /// Radii `(lo, hi)` such that `a lo^eta <= mu(B(x, r)) <= A hi^eta` for
    /// interior `x` and `r` in the valid window, accounting for the
    /// discretization by cells.
    pub fn ball_radius_bracket(&self, r: T) -> (T, T) {
        let e = self.metric.to_euclidean(r);
        let lo = (e - self.ball_slack).max(T::zero());
        (self.metric.from_euclidean(lo), self.metric.from_euclidean(e + self.ball_slack))
    }

    /// Nominal regularity bracket `(a lo^eta, A hi^eta)` for `mu(B(x, r))`.
    pub fn ball_measure_bounds(&self, r: T) -> (T, T) {
        let (lo, hi) = self.ball_radius_bracket(r);
        (
            self.ahlfors_lower * lo.powf(self.eta),
            self.ahlfors_upper * hi.powf(self.eta),
        )
    }
}

/// Measure and member count of the open ball `B(x, r)`.
pub fn ball_stats<T: Real>(space: &MetricMeasureSpace<T>, x: usize, r: T) -> Result<BallStats<T>> {
    space.check_id(x)?;
    if !(r > T::zero()) {
        return Err(Error::param("r", format!("radius must be positive, got {r}")));
    }
    let mut measure = T::zero();
    let mut count = 0;
    for y in 0..space.len() {
        if space.distance(x, y) < r {
            measure += space.weight(y);
            count += 1;
        }
    }
    Ok(BallStats { center: x, radius: r, measure, count })
}

/// Least-squares fit of `log mu(B(x, r))` against `log r`, pooled over
/// `sample_centers` interior centers. Radii outside
/// `[min_distance, diameter / 4]` are dropped.
pub fn ahlfors_estimate<T: Real>(
    space: &MetricMeasureSpace<T>,
    sample_centers: usize,
    radii: &[T],
) -> Result<AhlforsFit<T>> {
    let lo = space.min_distance();
    let hi = space.diameter() * T::lit(0.25);
    let usable: Vec<T> = radii.iter().copied().filter(|&r| r >= lo && r <= hi).collect();
    if usable.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} usable radii in [{lo}, {hi}], need at least 3",
            usable.len()
        )));
    }
    let centers = space.sample_interior(sample_centers);
    if centers.is_empty() {
        return Err(Error::DegenerateFit("no interior centers".into()));
    }
    let mut samples = Vec::with_capacity(centers.len() * usable.len());
    for &x in &centers {
        for &r in &usable {
            let stats = ball_stats(space, x, r)?;
            samples.push((r, stats.measure));
        }
    }
    let count = T::lit(samples.len() as f64);
    let (sx, sy) = samples
        .iter()
        .fold((T::zero(), T::zero()), |(sx, sy), &(r, m)| (sx + r.ln(), sy + m.ln()));
    let (mx, my) = (sx / count, sy / count);
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for &(r, m) in &samples {
        let dx = r.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (m.ln() - my);
    }
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateFit("zero variance in log r".into()));
    }
    let eta = sxy / sxx;
    let (mut lower, mut upper) = (T::infinity(), T::neg_infinity());
    for &(r, m) in &samples {
        let ratio = m / r.powf(eta);
        lower = lower.min(ratio);
        upper = upper.max(ratio);
    }
    Ok(AhlforsFit { eta, lower, upper, centers, radii: usable })
}
