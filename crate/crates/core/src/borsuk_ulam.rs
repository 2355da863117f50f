//! Zero search for odd maps `S^(d-1) -> R^(d-1)`.
//!
//! Every continuous odd map of this shape has a zero. On the circle the
//! search is a bisection between antipodal points, which always succeeds. On
//! higher spheres it is a multi-start damped Gauss-Newton descent of
//! `|f|^2` with finite-difference Jacobians and steps retracted onto the
//! sphere; it may come back empty.
//!
//! The coincidence search wraps the color systems' `psi` map as an odd map.
//! A Helly failure during evaluation halts the search and is handed back to
//! the caller, since it already names a disjoint same-colored pair.

use std::convert::Infallible;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{input, Error, Result};
use crate::geometry::Direction;
use crate::systems::{offsets_with_margin, psi_with_margin, spread, ColorSystem, HellyFailure, Probe};

pub const DEFAULT_CIRCLE_BUDGET: usize = 200;
pub const DEFAULT_SPHERE_BUDGET: usize = 10_000;
pub const FD_STEP: f64 = 1e-6;
pub const MIN_STEP: f64 = 1e-10;
/// Allowed `max |f(x) + f(-x)|` in the runtime oddness spot check.
pub const ODDNESS_TOL: f64 = 1e-9;
const ODDNESS_SAMPLES: usize = 4;

/// An odd map from the unit sphere in `R^dim` to `R^(dim-1)`. Evaluation may
/// halt with a payload instead of a value.
pub trait OddMap: Sync {
    type Halt: Send;

    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> std::result::Result<Vec<f64>, Self::Halt>;
}

/// Adapter for plain closures.
pub struct FnOddMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnOddMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> OddMap for FnOddMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    type Halt = Infallible;

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> std::result::Result<Vec<f64>, Infallible> {
        Ok((self.f)(x))
    }
}

/// A map together with its evaluation budget (per start on spheres).
pub struct OddMapEval<M> {
    pub map: M,
    pub budget: usize,
}

impl<M: OddMap> OddMapEval<M> {
    pub fn new(map: M, budget: usize) -> Self {
        Self { map, budget }
    }
}

impl<F> OddMapEval<FnOddMap<F>>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn from_fn(dim: usize, budget: usize, f: F) -> Self {
        Self::new(FnOddMap::new(dim, f), budget)
    }
}

/// A direction where the map (nearly) vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroResult {
    /// Canonical representative: first nonzero coordinate positive.
    pub direction: Direction,
    /// `|f(direction)|_2`.
    pub residual: f64,
    pub calls_used: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroSearch<H> {
    Found(ZeroResult),
    /// The budget ran out above tolerance; `best` is the closest approach.
    NotFound { best: Option<ZeroResult> },
    Halted(H),
}

impl<H> ZeroSearch<H> {
    pub fn found(self) -> Option<ZeroResult> {
        match self {
            ZeroSearch::Found(z) => Some(z),
            _ => None,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|c| c / n).collect()
}

enum Eval<H> {
    Value(Vec<f64>),
    Halt(H),
}

fn evaluate<M: OddMap>(map: &M, x: &[f64]) -> Result<Eval<M::Halt>> {
    match map.eval(x) {
        Ok(v) if v.len() + 1 != map.dim() => input(format!(
            "odd map on S^{} returned {} components, expected {}",
            map.dim() - 1,
            v.len(),
            map.dim() - 1
        )),
        Ok(v) => Ok(Eval::Value(v)),
        Err(h) => Ok(Eval::Halt(h)),
    }
}

/// Compares `f(x)` with `-f(-x)` on the sample points.
fn check_oddness<M: OddMap>(map: &M, samples: &[Vec<f64>]) -> Result<Option<M::Halt>> {
    for x in samples {
        let minus: Vec<f64> = x.iter().map(|c| -c).collect();
        let plus = match evaluate(map, x)? {
            Eval::Value(v) => v,
            Eval::Halt(h) => return Ok(Some(h)),
        };
        let neg = match evaluate(map, &minus)? {
            Eval::Value(v) => v,
            Eval::Halt(h) => return Ok(Some(h)),
        };
        let defect = plus
            .iter()
            .zip(&neg)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max);
        if !(defect <= ODDNESS_TOL) {
            return input(format!("map is not odd: |f(x) + f(-x)| = {defect:e} at {x:?}"));
        }
    }
    Ok(None)
}

/// Bisection on the half circle `theta in [-pi/2, pi/2]`, whose endpoints
/// are antipodal, so the scalar map changes sign between them.
pub fn find_zero_on_circle<M: OddMap>(f: &OddMapEval<M>, tol: f64) -> Result<ZeroSearch<M::Halt>> {
    if f.map.dim() != 2 {
        return input(format!("circle search needs dimension 2, got {}", f.map.dim()));
    }
    let samples: Vec<Vec<f64>> = [0.3_f64, 1.1, 2.0, 2.9]
        .iter()
        .map(|t| vec![t.cos(), t.sin()])
        .collect();
    if let Some(h) = check_oddness(&f.map, &samples)? {
        return Ok(ZeroSearch::Halted(h));
    }

    let probe = |theta: f64| -> Result<std::result::Result<(f64, Vec<f64>), M::Halt>> {
        let x = normalized(vec![theta.cos(), theta.sin()]);
        Ok(match evaluate(&f.map, &x)? {
            Eval::Value(v) => Ok((v[0], x)),
            Eval::Halt(h) => Err(h),
        })
    };
    let finish = |x: Vec<f64>, residual: f64, calls: usize| {
        ZeroSearch::Found(ZeroResult {
            direction: Direction::new(x).expect("unit vector").canonical(),
            residual,
            calls_used: calls,
        })
    };

    let (mut lo, mut hi) = (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let (g_lo, x_lo) = match probe(lo)? {
        Ok(v) => v,
        Err(h) => return Ok(ZeroSearch::Halted(h)),
    };
    if g_lo.abs() <= tol {
        return Ok(finish(x_lo, g_lo.abs(), 1));
    }
    let mut best = g_lo.abs();
    let lo_positive = g_lo > 0.0;
    let mut used = 1;
    while used < f.budget {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (g, x) = match probe(mid)? {
            Ok(v) => v,
            Err(h) => return Ok(ZeroSearch::Halted(h)),
        };
        used += 1;
        if g.abs() <= tol {
            return Ok(finish(x, g.abs(), used));
        }
        best = best.min(g.abs());
        if (g > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Budget {
        budget: f.budget,
        best_residual: best,
    })
}

/// Orthonormal basis of the tangent space at unit `x`, from the Householder
/// reflection that maps `x` onto a coordinate axis.
fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let pivot = (0..d)
        .max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()))
        .expect("nonempty");
    let mut v = x.to_vec();
    v[pivot] += x[pivot].signum();
    let vv: f64 = v.iter().map(|c| c * c).sum();
    (0..d)
        .filter(|&j| j != pivot)
        .map(|j| {
            (0..d)
                .map(|i| f64::from(u8::from(i == j)) - 2.0 * v[i] * v[j] / vv)
                .collect()
        })
        .collect()
}

fn retract(x: &[f64], basis: &[Vec<f64>], u: &[f64], scale: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    for (b, &c) in basis.iter().zip(u) {
        for (yi, bi) in y.iter_mut().zip(b) {
            *yi += scale * c * bi;
        }
    }
    normalized(y)
}

enum Local<H> {
    Done { x: Vec<f64>, residual: f64, calls: usize },
    Halted(H),
}

fn descend<M: OddMap>(map: &M, start: Vec<f64>, tol: f64, budget: usize) -> Result<Local<M::Halt>> {
    let m = map.dim() - 1;
    let mut calls = 0;
    macro_rules! eval {
        ($x:expr) => {{
            calls += 1;
            match evaluate(map, $x)? {
                Eval::Value(v) => v,
                Eval::Halt(h) => return Ok(Local::Halted(h)),
            }
        }};
    }
    let mut x = start;
    let mut fx = eval!(&x);
    let mut value = norm(&fx);
    while value > tol && calls + 2 * m < budget {
        let basis = tangent_basis(&x);
        let mut jac = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let plus = eval!(&retract(&x, &basis, &unit(m, j), FD_STEP));
            let minus = eval!(&retract(&x, &basis, &unit(m, j), -FD_STEP));
            for i in 0..m {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * FD_STEP);
            }
        }
        let residual = DVector::from_column_slice(&fx);
        let gradient = jac.transpose() * &residual;
        let newton = jac.clone().lu().solve(&(-&residual));
        let mut step = match newton {
            Some(u) if u.iter().all(|c| c.is_finite()) && u.dot(&gradient) < 0.0 => u,
            _ => -gradient,
        };
        let length = step.norm();
        if length == 0.0 || !length.is_finite() {
            break;
        }
        if length > 1.0 {
            step /= length;
        }
        let step: Vec<f64> = step.iter().copied().collect();
        let step_len = norm(&step);

        let mut scale = 1.0;
        let mut accepted = false;
        while scale * step_len >= MIN_STEP && calls < budget {
            let candidate = retract(&x, &basis, &step, scale);
            let fc = eval!(&candidate);
            let vc = norm(&fc);
            if vc < value {
                x = candidate;
                fx = fc;
                value = vc;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(Local::Done {
        x,
        residual: value,
        calls,
    })
}

fn unit(m: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[j] = 1.0;
    e
}

/// Uniform directions (normalized Gaussians) in canonical form, with
/// antipodal duplicates dropped.
pub fn seeded_directions(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> Vec<Direction> {
    let mut out: Vec<Direction> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 4 * count + 16 {
        attempts += 1;
        let coords: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let Ok(dir) = Direction::new(coords) else {
            continue;
        };
        let dir = dir.canonical();
        if out.iter().all(|o| o.line_angle(&dir) > 1e-12) {
            out.push(dir);
        }
    }
    out
}

/// Multi-start local minimization of `|f|^2` on the sphere. Returns the
/// smallest-residual result over all starts; `Found` when it is within
/// `tol`. A halt from any start wins, lowest start index first.
pub fn find_zero_on_sphere<M: OddMap>(
    f: &OddMapEval<M>,
    tol: f64,
    starts: usize,
    seed: u64,
) -> Result<ZeroSearch<M::Halt>> {
    let dim = f.map.dim();
    if dim < 3 {
        return input(format!("sphere search needs dimension >= 3, got {dim}"));
    }
    if starts == 0 {
        return input("at least one start is required");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<f64>> = seeded_directions(&mut rng, dim, ODDNESS_SAMPLES)
        .into_iter()
        .map(|d| d.coords().to_vec())
        .collect();
    if let Some(h) = check_oddness(&f.map, &samples)? {
        return Ok(ZeroSearch::Halted(h));
    }
    let initial = seeded_directions(&mut rng, dim, starts);
    let outcomes: Vec<Result<Local<M::Halt>>> = initial
        .into_par_iter()
        .map(|x0| descend(&f.map, x0.coords().to_vec(), tol, f.budget))
        .collect();

    let mut best: Option<ZeroResult> = None;
    let mut total_calls = 0;
    let mut done = Vec::new();
    for outcome in outcomes {
        match outcome? {
            Local::Halted(h) => return Ok(ZeroSearch::Halted(h)),
            Local::Done { x, residual, calls } => {
                total_calls += calls;
                done.push((x, residual));
            }
        }
    }
    for (x, residual) in done {
        let direction = Direction::new(x).expect("unit vector").canonical();
        let better = match &best {
            None => true,
            Some(b) => {
                residual < b.residual
                    || (residual == b.residual
                        && direction.coords().partial_cmp(b.direction.coords())
                            == Some(std::cmp::Ordering::Less))
            }
        };
        if better {
            best = Some(ZeroResult {
                direction,
                residual,
                calls_used: 0,
            });
        }
    }
    let mut best = best.expect("at least one start");
    best.calls_used = total_calls;
    Ok(if best.residual <= tol {
        ZeroSearch::Found(best)
    } else {
        ZeroSearch::NotFound { best: Some(best) }
    })
}

/// A direction where the color systems' hyperplanes coincide.
#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceResult {
    pub direction: Direction,
    /// `phi` of each system at `direction`, in input order.
    pub offsets: Vec<f64>,
    /// `max - min` of `offsets`.
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoincidenceOptions {
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub circle_budget: usize,
    pub sphere_budget: usize,
    /// Separations up to this size are not reported as Helly failures.
    pub margin: f64,
}

impl Default for CoincidenceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            starts: 8,
            seed: 0,
            circle_budget: DEFAULT_CIRCLE_BUDGET,
            sphere_budget: DEFAULT_SPHERE_BUDGET,
            margin: 0.0,
        }
    }
}

/// `psi` over a list of systems as an odd map; Helly failures halt it.
pub struct PsiMap<'s, 'a> {
    systems: &'s [ColorSystem<'a>],
    margin: f64,
}

impl<'s, 'a> PsiMap<'s, 'a> {
    pub fn new(systems: &'s [ColorSystem<'a>], margin: f64) -> Result<Self> {
        let Some(first) = systems.first() else {
            return input("at least one system is required");
        };
        let d = first.instance().d();
        if systems.len() != d {
            return input(format!("coincidence needs exactly d = {d} systems, got {}", systems.len()));
        }
        if systems.iter().any(|s| s.instance() != first.instance()) {
            return input("systems belong to different instances");
        }
        Ok(Self { systems, margin })
    }
}

impl OddMap for PsiMap<'_, '_> {
    type Halt = HellyFailure;

    fn dim(&self) -> usize {
        self.systems[0].instance().d()
    }

    fn eval(&self, x: &[f64]) -> std::result::Result<Vec<f64>, HellyFailure> {
        let dir = Direction::new(x.to_vec()).expect("solver directions are unit vectors");
        match psi_with_margin(self.systems, &dir, self.margin).expect("validated systems") {
            Probe::Value(v) => Ok(v),
            Probe::Failure(f) => Err(f),
        }
    }
}

pub fn find_coincidence_direction(
    systems: &[ColorSystem<'_>],
    tol: f64,
    starts: usize,
    seed: u64,
) -> Result<Probe<CoincidenceResult>> {
    find_coincidence_with(
        systems,
        &CoincidenceOptions {
            tol,
            starts,
            seed,
            ..CoincidenceOptions::default()
        },
    )
}

/// Searches for a direction where all `d` systems pick the same hyperplane.
/// For `d = 1` the only direction is `+1`; for `d = 2` bisection is
/// guaranteed; for `d >= 3` the best approach is returned even when its gap
/// exceeds `2 * tol`.
pub fn find_coincidence_with(
    systems: &[ColorSystem<'_>],
    opts: &CoincidenceOptions,
) -> Result<Probe<CoincidenceResult>> {
    let map = PsiMap::new(systems, opts.margin)?;
    let d = map.dim();
    let direction = match d {
        1 => Direction::axis(1, 0),
        2 => match find_zero_on_circle(&OddMapEval::new(map, opts.circle_budget), opts.tol)? {
            ZeroSearch::Found(z) => z.direction,
            ZeroSearch::Halted(f) => return Ok(Probe::Failure(f)),
            ZeroSearch::NotFound { .. } => unreachable!("circle search reports budget errors"),
        },
        _ => {
            let eval = OddMapEval::new(map, opts.sphere_budget);
            match find_zero_on_sphere(&eval, opts.tol, opts.starts, opts.seed)? {
                ZeroSearch::Found(z) | ZeroSearch::NotFound { best: Some(z) } => z.direction,
                ZeroSearch::NotFound { best: None } => {
                    return Err(Error::Invariant("sphere search returned no candidate".into()))
                }
                ZeroSearch::Halted(f) => return Ok(Probe::Failure(f)),
            }
        }
    };
    Ok(match offsets_with_margin(systems, &direction, opts.margin)? {
        Probe::Value(offsets) => Probe::Value(CoincidenceResult {
            gap: spread(&offsets),
            direction,
            offsets,
        }),
        Probe::Failure(f) => Probe::Failure(f),
    })
}

/// Seeded odd maps for exercising the solvers.
pub mod synthetic {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::OddMap;

    /// `x -> A x` for a Gaussian `(dim - 1) x dim` matrix `A`.
    #[derive(Clone, Debug)]
    pub struct LinearMap {
        pub rows: Vec<Vec<f64>>,
    }

    impl LinearMap {
        pub fn random(dim: usize, seed: u64) -> Self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = (0..dim - 1)
                .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            Self { rows }
        }
    }

    impl OddMap for LinearMap {
        type Halt = std::convert::Infallible;

        fn dim(&self) -> usize {
            self.rows.len() + 1
        }

        fn eval(&self, x: &[f64]) -> Result<Vec<f64>, Self::Halt> {
            Ok(self
                .rows
                .iter()
                .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect())
        }
    }

    /// On the circle: an odd trigonometric polynomial in the angle, using
    /// odd harmonics up to a random degree in `{1, 3, 5, 7}`. On higher
    /// spheres: `A x + sin(B x)` componentwise.
    #[derive(Clone, Debug)]
    pub struct TrigMap {
        dim: usize,
        cos_coeffs: Vec<f64>,
        sin_coeffs: Vec<f64>,
        linear: Vec<Vec<f64>>,
        inner: Vec<Vec<f64>>,
    }

    impl TrigMap {
        pub fn random(dim: usize, seed: u64) -> Self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
            if dim == 2 {
                let harmonics = 1 + rng.random_range(0..4usize);
                let cos_coeffs = (0..harmonics).map(|_| gauss(&mut rng)).collect();
                let sin_coeffs = (0..harmonics).map(|_| gauss(&mut rng)).collect();
                return Self {
                    dim,
                    cos_coeffs,
                    sin_coeffs,
                    linear: Vec::new(),
                    inner: Vec::new(),
                };
            }
            let matrix = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
                (0..dim - 1)
                    .map(|_| (0..dim).map(|_| gauss(rng)).collect())
                    .collect()
            };
            let linear = matrix(&mut rng);
            let inner = matrix(&mut rng);
            Self {
                dim,
                cos_coeffs: Vec::new(),
                sin_coeffs: Vec::new(),
                linear,
                inner,
            }
        }

        /// Highest harmonic on the circle.
        pub fn degree(&self) -> usize {
            2 * self.cos_coeffs.len().max(1) - 1
        }
    }

    impl OddMap for TrigMap {
        type Halt = std::convert::Infallible;

        fn dim(&self) -> usize {
            self.dim
        }

        fn eval(&self, x: &[f64]) -> Result<Vec<f64>, Self::Halt> {
            if self.dim == 2 {
                let theta = x[1].atan2(x[0]);
                let value = self
                    .cos_coeffs
                    .iter()
                    .zip(&self.sin_coeffs)
                    .enumerate()
                    .map(|(i, (a, b))| {
                        let m = (2 * i + 1) as f64;
                        a * (m * theta).cos() + b * (m * theta).sin()
                    })
                    .sum();
                return Ok(vec![value]);
            }
            let dot = |r: &Vec<f64>| -> f64 { r.iter().zip(x).map(|(a, b)| a * b).sum() };
            Ok(self
                .linear
                .iter()
                .zip(&self.inner)
                .map(|(a, b)| dot(a) + dot(b).sin())
                .collect())
        }
    }
}
