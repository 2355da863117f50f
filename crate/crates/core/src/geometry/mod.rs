//! Point configurations on the moment curve, projections of k-gons onto
//! lines, Helly's theorem on the line, and hyperplane side counts.
//!
//! Configurations carry both an exact rational copy of every point (for
//! certificates) and an `f64` copy (for search). Anything the float layer
//! reports is re-validated combinatorially by callers.

pub mod exact;

use itertools::Itertools;
use num::{BigRational, One, ToPrimitive, Zero};

use crate::error::{input, Error, Result};
use crate::kneser::{binomial, KSubset};

/// Cap on the number of point subsets a certificate sweep may visit.
pub const CERTIFICATE_CAP: u128 = 1_000_000;

/// Default absolute tolerance for "on the hyperplane".
pub const DEFAULT_ON_TOLERANCE: f64 = 1e-9;

/// `n` points in `R^d`, exact and rounded.
#[derive(Clone, Debug)]
pub struct PointConfiguration {
    dim: usize,
    params: Option<Vec<BigRational>>,
    points_exact: Vec<Vec<BigRational>>,
    points_float: Vec<Vec<f64>>,
}

impl PointConfiguration {
    /// Points `(t, t^2, .., t^d)` for strictly increasing parameters `t`.
    pub fn from_params(params: Vec<BigRational>, dim: usize) -> Result<Self> {
        if params.is_empty() || dim == 0 {
            return input("a configuration needs at least one point and dimension >= 1");
        }
        if params.windows(2).any(|w| w[0] >= w[1]) {
            return input("moment-curve parameters must be strictly increasing");
        }
        let points_exact: Vec<Vec<BigRational>> = params
            .iter()
            .map(|t| {
                let mut row = Vec::with_capacity(dim);
                let mut power = t.clone();
                for _ in 0..dim {
                    row.push(power.clone());
                    power *= t;
                }
                row
            })
            .collect();
        let mut config = Self::from_exact_points(points_exact)?;
        config.params = Some(params);
        Ok(config)
    }

    /// Arbitrary exact points; general position is not assumed.
    pub fn from_exact_points(points: Vec<Vec<BigRational>>) -> Result<Self> {
        let Some(dim) = points.first().map(Vec::len) else {
            return input("a configuration needs at least one point");
        };
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return input("all points need the same positive dimension");
        }
        let points_float = points
            .iter()
            .map(|p| p.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
            .collect();
        Ok(Self {
            dim,
            params: None,
            points_exact: points,
            points_float,
        })
    }

    pub fn n(&self) -> usize {
        self.points_exact.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> Option<&[BigRational]> {
        self.params.as_deref()
    }

    /// Exact coordinates of point `i` (0-based).
    pub fn exact_point(&self, i: usize) -> &[BigRational] {
        &self.points_exact[i]
    }

    /// Rounded coordinates of point `i` (0-based).
    pub fn float_point(&self, i: usize) -> &[f64] {
        &self.points_float[i]
    }

    pub fn float_points(&self) -> &[Vec<f64>] {
        &self.points_float
    }
}

/// Moment-curve configuration with `t_i = i / (n + 1)`.
pub fn moment_curve_config(n: usize, d: usize) -> Result<PointConfiguration> {
    if n == 0 || d == 0 {
        return input("moment curve needs n >= 1 and d >= 1");
    }
    let denom = num::BigInt::from(n + 1);
    let params = (1..=n)
        .map(|i| BigRational::new(num::BigInt::from(i), denom.clone()))
        .collect();
    PointConfiguration::from_params(params, d)
}

fn check_sweep(n: usize, r: usize, what: &'static str) -> Result<()> {
    let needed = binomial(n, r).unwrap_or(u128::MAX);
    if needed > CERTIFICATE_CAP {
        return Err(Error::Capacity {
            what,
            needed,
            cap: CERTIFICATE_CAP,
        });
    }
    Ok(())
}

/// True iff every `d + 1` points are affinely independent, decided by exact
/// determinants of `[1 | coordinates]`.
pub fn general_position_check(config: &PointConfiguration) -> Result<bool> {
    let (n, d) = (config.n(), config.dim());
    if n <= d {
        return Ok(true);
    }
    check_sweep(n, d + 1, "affine-independence sweep")?;
    let certified = (0..n).combinations(d + 1).all(|subset| {
        let matrix: Vec<Vec<BigRational>> = subset
            .iter()
            .map(|&i| {
                std::iter::once(BigRational::one())
                    .chain(config.exact_point(i).iter().cloned())
                    .collect()
            })
            .collect();
        !exact::determinant(&matrix).is_zero()
    });
    Ok(certified)
}

/// True iff the hyperplane through any `d` points contains exactly those `d`
/// points. Hyperplanes are solved exactly and every other point is tested
/// against them.
pub fn hyperplane_capacity_check(config: &PointConfiguration) -> Result<bool> {
    let (n, d) = (config.n(), config.dim());
    if n < d {
        return Ok(true);
    }
    check_sweep(n, d, "hyperplane-capacity sweep")?;
    let certified = (0..n).combinations(d).all(|subset| {
        // Unknowns (a_1..a_d, c) with <a, p> - c = 0 on each chosen point.
        let rows: Vec<Vec<BigRational>> = subset
            .iter()
            .map(|&i| {
                config
                    .exact_point(i)
                    .iter()
                    .cloned()
                    .chain(std::iter::once(-BigRational::one()))
                    .collect()
            })
            .collect();
        let Some(kernel) = exact::kernel_vector(&rows) else {
            return false;
        };
        let (normal, offset) = kernel.split_at(d);
        let on_plane = (0..n)
            .filter(|&i| {
                let value: BigRational = config
                    .exact_point(i)
                    .iter()
                    .zip(normal)
                    .map(|(p, a)| p * a)
                    .sum();
                value == offset[0]
            })
            .count();
        on_plane == d
    });
    Ok(certified)
}

/// A unit vector; spans the line that k-gons are projected onto.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    coords: Vec<f64>,
}

impl Direction {
    /// Normalizes `coords`; rejects empty, non-finite or zero vectors.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return input("direction needs finite coordinates");
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return input("direction cannot be the zero vector");
        }
        Ok(Self {
            coords: coords.into_iter().map(|c| c / norm).collect(),
        })
    }

    /// Unit vector along axis `i` of `R^dim`.
    pub fn axis(dim: usize, i: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn antipode(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    /// The representative of `{x, -x}` whose first nonzero coordinate is
    /// positive.
    pub fn canonical(&self) -> Self {
        match self.coords.iter().find(|c| **c != 0.0) {
            Some(c) if *c < 0.0 => self.antipode(),
            _ => self.clone(),
        }
    }

    pub fn dot(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.coords.len());
        self.coords.iter().zip(p).map(|(a, b)| a * b).sum()
    }

    /// Angle to the line spanned by `other`, in `[0, pi/2]`.
    pub fn line_angle(&self, other: &Direction) -> f64 {
        self.dot(&other.coords).abs().min(1.0).acos()
    }
}

/// Compact interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return input(format!("interval [{lo}, {hi}] is empty or not a number"));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn midpoint(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.lo - tol <= v && v <= self.hi + tol
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Image under `t -> -t`.
    pub fn reflected(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

/// `{p : <p, normal> = offset}`. `(-normal, -offset)` is the same plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    pub normal: Direction,
    pub offset: f64,
}

impl Hyperplane {
    pub fn flipped(&self) -> Self {
        Self {
            normal: self.normal.antipode(),
            offset: -self.offset,
        }
    }

    pub fn signed_value(&self, p: &[f64]) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Projection of the k-gon spanned by `s` onto the line along `x`: the hull
/// projects onto the interval spanned by its vertices' projections.
pub fn project_subset(config: &PointConfiguration, s: &KSubset, x: &Direction) -> Interval {
    let (lo, hi) = s
        .members()
        .iter()
        .map(|&m| x.dot(config.float_point(m - 1)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    Interval { lo, hi }
}

/// Outcome of Helly's theorem on the line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HellyOutcome {
    /// The common intersection `[max lo, min hi]`, possibly a single point.
    Intersection(Interval),
    /// Indices `(i, j)` with `intervals[i].lo > intervals[j].hi`.
    DisjointPair(usize, usize),
}

/// The family has a common point iff the largest lower end does not exceed
/// the smallest upper end; otherwise the two intervals attaining them are
/// disjoint. Ties go to the first index.
pub fn helly_1d(intervals: &[Interval]) -> Result<HellyOutcome> {
    let Some(first) = intervals.first() else {
        return input("Helly needs at least one interval");
    };
    let (mut i_star, mut lo) = (0, first.lo);
    let (mut j_star, mut hi) = (0, first.hi);
    for (idx, iv) in intervals.iter().enumerate().skip(1) {
        if iv.lo > lo {
            i_star = idx;
            lo = iv.lo;
        }
        if iv.hi < hi {
            j_star = idx;
            hi = iv.hi;
        }
    }
    Ok(if lo <= hi {
        HellyOutcome::Intersection(Interval { lo, hi })
    } else {
        HellyOutcome::DisjointPair(i_star, j_star)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SideCounts {
    pub left: usize,
    pub on: usize,
    pub right: usize,
}

/// Classifies each point by the sign of `<p, normal> - offset`; values
/// within `tol` of zero count as on the plane.
pub fn side_counts(config: &PointConfiguration, h: &Hyperplane, tol: f64) -> SideCounts {
    let mut counts = SideCounts {
        left: 0,
        on: 0,
        right: 0,
    };
    for p in config.float_points() {
        let v = h.signed_value(p);
        if v.abs() <= tol {
            counts.on += 1;
        } else if v < 0.0 {
            counts.left += 1;
        } else {
            counts.right += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kneser::KneserInstance;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn unscaled_123() -> PointConfiguration {
        PointConfiguration::from_params(vec![q(1), q(2), q(3)], 2).unwrap()
    }

    fn subset(n: usize, k: usize, m: Vec<usize>) -> KSubset {
        KSubset::new(&KneserInstance::new(n.max(2 * k), k).unwrap(), m).unwrap()
    }

    #[test]
    fn moment_curve_small() {
        let c = moment_curve_config(3, 2).unwrap();
        let expected = [[0.25, 0.0625], [0.5, 0.25], [0.75, 0.5625]];
        for (i, row) in expected.iter().enumerate() {
            assert_eq!(c.float_point(i), row);
        }
        assert_eq!(c.params().unwrap()[0], BigRational::new(1.into(), 4.into()));
        let line = moment_curve_config(5, 1).unwrap();
        let xs: Vec<f64> = line.float_points().iter().map(|p| p[0]).collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert!(xs.iter().all(|&x| 0.0 < x && x < 1.0));
        let shaped = moment_curve_config(9, 4).unwrap();
        assert_eq!((shaped.n(), shaped.dim()), (9, 4));
        assert!(moment_curve_config(0, 2).is_err());
    }

    #[test]
    fn params_must_increase() {
        assert!(PointConfiguration::from_params(vec![q(2), q(1)], 2).is_err());
        assert!(PointConfiguration::from_params(vec![q(1), q(1)], 2).is_err());
    }

    /// Vandermonde product over `t`, an independent route to the determinant.
    fn vandermonde(t: &[BigRational]) -> BigRational {
        let mut prod = BigRational::one();
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                prod *= &t[j] - &t[i];
            }
        }
        prod
    }

    #[test]
    fn general_position_unscaled() {
        let c = unscaled_123();
        let m: Vec<Vec<BigRational>> = (0..3)
            .map(|i| std::iter::once(q(1)).chain(c.exact_point(i).iter().cloned()).collect())
            .collect();
        assert_eq!(exact::determinant(&m), q(2));
        assert_eq!(vandermonde(&[q(1), q(2), q(3)]), q(2));
        assert!(general_position_check(&c).unwrap());
    }

    #[test]
    fn determinant_matches_vandermonde_on_moment_curve() {
        let c = moment_curve_config(8, 5).unwrap();
        let t = c.params().unwrap();
        for subset in (0..8).combinations(6) {
            let m: Vec<Vec<BigRational>> = subset
                .iter()
                .map(|&i| std::iter::once(q(1)).chain(c.exact_point(i).iter().cloned()).collect())
                .collect();
            let ts: Vec<BigRational> = subset.iter().map(|&i| t[i].clone()).collect();
            assert_eq!(exact::determinant(&m), vandermonde(&ts));
        }
    }

    #[test]
    fn duplicated_point_fails() {
        let pts = vec![vec![q(0), q(0)], vec![q(1), q(3)], vec![q(1), q(3)], vec![q(5), q(2)]];
        let c = PointConfiguration::from_exact_points(pts).unwrap();
        assert!(!general_position_check(&c).unwrap());
        assert!(!hyperplane_capacity_check(&c).unwrap());
    }

    #[test]
    fn collinear_triple_fails_capacity() {
        let pts = vec![vec![q(0), q(0)], vec![q(1), q(1)], vec![q(2), q(2)], vec![q(0), q(1)]];
        let c = PointConfiguration::from_exact_points(pts).unwrap();
        assert!(!general_position_check(&c).unwrap());
        assert!(!hyperplane_capacity_check(&c).unwrap());
    }

    #[test]
    fn moment_curve_twelve_five() {
        let c = moment_curve_config(12, 5).unwrap();
        assert!(general_position_check(&c).unwrap());
        assert!(hyperplane_capacity_check(&c).unwrap());
    }

    #[test]
    fn sweep_cap() {
        let c = moment_curve_config(40, 10).unwrap();
        assert!(matches!(general_position_check(&c), Err(Error::Capacity { .. })));
    }

    #[test]
    fn projections() {
        let c = unscaled_123();
        let x = Direction::new(vec![1.0, 0.0]).unwrap();
        let y = Direction::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(project_subset(&c, &subset(3, 1, vec![1]), &x), Interval::new(1.0, 1.0).unwrap());
        let s13 = KSubset::new(&KneserInstance::new(4, 2).unwrap(), vec![1, 3]).unwrap();
        let s12 = KSubset::new(&KneserInstance::new(4, 2).unwrap(), vec![1, 2]).unwrap();
        assert_eq!(project_subset(&c, &s13, &x), Interval::new(1.0, 3.0).unwrap());
        assert_eq!(project_subset(&c, &s12, &y), Interval::new(1.0, 4.0).unwrap());
        let flipped = project_subset(&c, &s13, &x.antipode());
        assert_eq!(flipped, project_subset(&c, &s13, &x).reflected());
    }

    #[test]
    fn helly_examples() {
        let iv = |a: f64, b: f64| Interval::new(a, b).unwrap();
        assert_eq!(
            helly_1d(&[iv(0.0, 2.0), iv(1.0, 3.0), iv(1.5, 2.5)]).unwrap(),
            HellyOutcome::Intersection(iv(1.5, 2.0))
        );
        assert_eq!(
            helly_1d(&[iv(0.0, 1.0), iv(2.0, 3.0), iv(0.5, 2.5)]).unwrap(),
            HellyOutcome::DisjointPair(1, 0)
        );
        assert_eq!(helly_1d(&[iv(0.3, 0.7)]).unwrap(), HellyOutcome::Intersection(iv(0.3, 0.7)));
        assert_eq!(
            helly_1d(&[iv(0.0, 1.0), iv(1.0, 2.0)]).unwrap(),
            HellyOutcome::Intersection(iv(1.0, 1.0))
        );
        assert!(helly_1d(&[]).is_err());
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn side_count_examples() {
        let c = unscaled_123();
        let h = |offset| Hyperplane {
            normal: Direction::new(vec![1.0, 0.0]).unwrap(),
            offset,
        };
        let expect = |left, on, right| SideCounts { left, on, right };
        assert_eq!(side_counts(&c, &h(2.5), 1e-9), expect(2, 0, 1));
        assert_eq!(side_counts(&c, &h(2.0), 1e-9), expect(1, 1, 1));
        assert_eq!(side_counts(&c, &h(2.5).flipped(), 1e-9), expect(1, 0, 2));
        assert_eq!(side_counts(&c, &h(2.0).flipped(), 1e-9), expect(1, 1, 1));
    }

    #[test]
    fn direction_basics() {
        let d = Direction::new(vec![3.0, -4.0]).unwrap();
        assert_eq!(d.coords(), &[0.6, -0.8]);
        assert_eq!(d.antipode().coords(), &[-0.6, 0.8]);
        assert_eq!(Direction::new(vec![-0.0, -2.0]).unwrap().canonical().coords(), &[0.0, 1.0]);
        assert!(Direction::new(vec![0.0, 0.0]).is_err());
        assert!(Direction::new(vec![]).is_err());
        assert!(Direction::new(vec![f64::INFINITY, 1.0]).is_err());
    }
}
