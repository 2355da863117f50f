//! Witness search: two disjoint k-subsets with the same color.
//!
//! The geometric path scans seeded direction grids for a color class whose
//! projected intervals fail to share a point, runs the coincidence search
//! (which must run into such a failure when the coloring uses at most
//! `n - 2k + 1` colors), then refines locally around the direction where the
//! hyperplane systems came closest to coinciding. Candidates are accepted only
//! after an exact disjointness and color check. [`hybrid_witness`] falls back
//! to the exhaustive pair scan.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::borsuk_ulam::{
    find_coincidence_with, seeded_directions, CoincidenceOptions, DEFAULT_CIRCLE_BUDGET,
    DEFAULT_SPHERE_BUDGET,
};
use crate::error::{input, Error, Result};
use crate::geometry::{
    side_counts, Direction, HellyOutcome, Hyperplane, Interval, PointConfiguration, SideCounts,
    DEFAULT_ON_TOLERANCE,
};
use crate::kneser::{verify_coloring, Coloring, KSubset, KneserInstance, Provenance, WitnessPair};
use crate::systems::{phi_with_margin, spread, ColorSystem, HellyFailure, Probe};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchParams {
    /// Directions per batch.
    pub grid_size: usize,
    /// Local refinement rounds after the initial grid.
    pub max_rounds: usize,
    /// Minimum interval separation for a Helly failure; also the coincidence
    /// tolerance.
    pub gap_tol: f64,
    /// Radius factor between refinement rounds.
    pub shrink: f64,
    pub seed: u64,
    /// Starts for the sphere search when `d >= 3`.
    pub starts: usize,
    /// Evaluation budget per sphere start.
    pub budget: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            grid_size: 512,
            max_rounds: 8,
            gap_tol: 1e-9,
            shrink: 0.5,
            seed: 0,
            starts: 8,
            budget: DEFAULT_SPHERE_BUDGET,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size == 0 {
            return input("grid_size must be at least 1");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return input(format!("shrink must lie in (0, 1), got {}", self.shrink));
        }
        if !(self.gap_tol >= 0.0) {
            return input(format!("gap_tol must be non-negative, got {}", self.gap_tol));
        }
        if self.starts == 0 {
            return input("starts must be at least 1");
        }
        Ok(())
    }
}

/// Turns a Helly failure into a witness after checking it exactly.
fn accept(failure: HellyFailure, coloring: &Coloring) -> Option<WitnessPair> {
    let pair = WitnessPair {
        a: failure.a,
        b: failure.b,
        color: failure.color,
        provenance: Provenance::HellyFailure(failure.direction),
    };
    pair.is_valid_for(coloring).then_some(pair)
}

enum DirectionEval {
    Witness(WitnessPair),
    /// Spread of the selected systems' offsets.
    Gap(f64),
}

struct Searcher<'s, 'a> {
    coloring: &'a Coloring,
    systems: &'s [ColorSystem<'a>],
    selected: Vec<ColorSystem<'a>>,
    gap_tol: f64,
}

impl Searcher<'_, '_> {
    fn probe(&self, x: &Direction) -> DirectionEval {
        for system in self.systems {
            if let Probe::Failure(f) = phi_with_margin(system, x, self.gap_tol) {
                if let Some(w) = accept(f, self.coloring) {
                    return DirectionEval::Witness(w);
                }
            }
        }
        let offsets: Option<Vec<f64>> = self
            .selected
            .iter()
            .map(|s| phi_with_margin(s, x, self.gap_tol).value())
            .collect();
        DirectionEval::Gap(offsets.map_or(f64::INFINITY, |o| spread(&o)))
    }

    /// First witness in grid order, else the index and gap of the best
    /// direction (lowest index on ties).
    fn scan(&self, grid: &[Direction]) -> std::result::Result<WitnessPair, (usize, f64)> {
        let evals: Vec<DirectionEval> = grid.par_iter().map(|x| self.probe(x)).collect();
        let mut best = (0, f64::INFINITY);
        for (i, e) in evals.into_iter().enumerate() {
            match e {
                DirectionEval::Witness(w) => return Ok(w),
                DirectionEval::Gap(g) if g < best.1 => best = (i, g),
                DirectionEval::Gap(_) => {}
            }
        }
        Err(best)
    }
}

/// The `d` systems fed to the coincidence search: the first `d` colors, or
/// every color repeated cyclically when fewer are used.
fn select_systems<'a>(systems: &[ColorSystem<'a>], d: usize) -> Vec<ColorSystem<'a>> {
    (0..d).map(|i| systems[i % systems.len()].clone()).collect()
}

fn local_grid(rng: &mut ChaCha8Rng, center: &Direction, radius: f64, count: usize) -> Vec<Direction> {
    (0..count)
        .filter_map(|_| {
            let coords = center
                .coords()
                .iter()
                .map(|c| {
                    let g: f64 = StandardNormal.sample(rng);
                    c + radius * g
                })
                .collect();
            Direction::new(coords).ok().map(|d| d.canonical())
        })
        .collect()
}

/// Searches for a direction whose projections separate two same-colored
/// k-gons. Returns `None` when none was found within the rounds; this is
/// the only possible outcome for proper colorings.
pub fn geometric_witness_search(
    instance: &KneserInstance,
    config: &PointConfiguration,
    coloring: &Coloring,
    params: &SearchParams,
) -> Result<Option<WitnessPair>> {
    params.validate()?;
    if coloring.instance() != instance {
        return input(format!("coloring is over {}, expected {instance}", coloring.instance()));
    }
    let d = instance.d();
    let systems = ColorSystem::all(config, coloring)?;
    let searcher = Searcher {
        coloring,
        selected: select_systems(&systems, d),
        systems: &systems,
        gap_tol: params.gap_tol,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let grid = seeded_directions(&mut rng, d, params.grid_size);
    let (mut best_dir, mut best_gap) = match searcher.scan(&grid) {
        Ok(w) => return Ok(Some(w)),
        Err((i, gap)) => (grid[i].clone(), gap),
    };

    let opts = CoincidenceOptions {
        tol: params.gap_tol,
        starts: params.starts,
        seed: params.seed,
        circle_budget: DEFAULT_CIRCLE_BUDGET,
        sphere_budget: params.budget,
        margin: params.gap_tol,
    };
    match find_coincidence_with(&searcher.selected, &opts) {
        Ok(Probe::Failure(f)) => {
            if let Some(w) = accept(f, coloring) {
                return Ok(Some(w));
            }
        }
        Ok(Probe::Value(c)) if c.gap < best_gap => {
            best_dir = c.direction;
            best_gap = c.gap;
        }
        Ok(Probe::Value(_)) | Err(Error::Budget { .. }) => {}
        Err(e) => return Err(e),
    }

    if d == 1 {
        return Ok(None);
    }
    let mut radius = 1.0;
    for _ in 0..params.max_rounds {
        radius *= params.shrink;
        let grid = local_grid(&mut rng, &best_dir, radius, params.grid_size);
        match searcher.scan(&grid) {
            Ok(w) => return Ok(Some(w)),
            Err((i, gap)) if gap < best_gap => {
                best_dir = grid[i].clone();
                best_gap = gap;
            }
            Err(_) => {}
        }
    }
    Ok(None)
}

/// The geometric search, then the exhaustive scan. Requires at most
/// `n - 2k + 1` colors, under which a witness always exists.
pub fn hybrid_witness(
    instance: &KneserInstance,
    config: &PointConfiguration,
    coloring: &Coloring,
    params: &SearchParams,
) -> Result<WitnessPair> {
    if coloring.num_colors() as usize > instance.d() {
        return Err(Error::Precondition(format!(
            "coloring uses {} colors, more than n - 2k + 1 = {}",
            coloring.num_colors(),
            instance.d()
        )));
    }
    if let Some(w) = geometric_witness_search(instance, config, coloring, params)? {
        return Ok(w);
    }
    verify_coloring(coloring).ok_or_else(|| {
        Error::Invariant(format!(
            "no disjoint monochromatic pair in a {}-coloring of {instance}",
            coloring.num_colors()
        ))
    })
}

/// Helly status of one color class at a direction.
#[derive(Clone, Debug, PartialEq)]
pub enum ColorStatus {
    Intersection(Interval),
    Disjoint { a: KSubset, b: KSubset },
}

/// The hyperplane `Gamma` through the mean of the per-color offsets at a
/// direction, with its point counts.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticReport {
    pub direction: Direction,
    /// Indexed by color id.
    pub colors: Vec<ColorStatus>,
    pub gamma: Hyperplane,
    /// Whether `Gamma`'s offset lies in every color's intersection interval,
    /// inflated by the "on" tolerance. False when some color fails.
    pub gamma_in_all_intervals: bool,
    pub sides: SideCounts,
    pub left_below_k: bool,
    pub right_below_k: bool,
    /// `on >= n - 2k + 2`; impossible for points in general position.
    pub on_reaches_d_plus_one: bool,
}

pub fn contradiction_diagnostic(
    instance: &KneserInstance,
    config: &PointConfiguration,
    coloring: &Coloring,
    direction: &Direction,
) -> Result<DiagnosticReport> {
    if direction.dim() != instance.d() {
        return input(format!(
            "direction has dimension {}, expected {}",
            direction.dim(),
            instance.d()
        ));
    }
    let systems = ColorSystem::all(config, coloring)?;
    let colors: Vec<ColorStatus> = systems
        .iter()
        .map(|s| match s.helly(direction) {
            HellyOutcome::Intersection(iv) => ColorStatus::Intersection(iv),
            HellyOutcome::DisjointPair(i, j) => ColorStatus::Disjoint {
                a: s.subsets()[i].clone(),
                b: s.subsets()[j].clone(),
            },
        })
        .collect();
    let midpoints: Vec<f64> = colors
        .iter()
        .filter_map(|c| match c {
            ColorStatus::Intersection(iv) => Some(iv.midpoint()),
            ColorStatus::Disjoint { .. } => None,
        })
        .collect();
    let offset = if midpoints.is_empty() {
        0.0
    } else {
        midpoints.iter().sum::<f64>() / midpoints.len() as f64
    };
    let gamma_in_all_intervals = colors.iter().all(|c| match c {
        ColorStatus::Intersection(iv) => iv.contains(offset, DEFAULT_ON_TOLERANCE),
        ColorStatus::Disjoint { .. } => false,
    });
    let gamma = Hyperplane {
        normal: direction.clone(),
        offset,
    };
    let sides = side_counts(config, &gamma, DEFAULT_ON_TOLERANCE);
    let k = instance.k();
    Ok(DiagnosticReport {
        direction: direction.clone(),
        colors,
        gamma,
        gamma_in_all_intervals,
        sides,
        left_below_k: sides.left < k,
        right_below_k: sides.right < k,
        on_reaches_d_plus_one: sides.on > instance.d(),
    })
}
