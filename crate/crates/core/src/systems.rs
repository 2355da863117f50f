//! Hyperplane systems induced by color classes.
//!
//! For a color class and a direction `x`, every k-gon of the class projects
//! to an interval on the line along `x`. When those intervals pairwise meet
//! they share a common interval, and the hyperplane orthogonal to `x` through
//! its midpoint is the system's choice at `x`. Its signed offset `phi(x)` is
//! odd: projecting along `-x` reflects every interval. When the intervals do
//! not pairwise meet, the two disjoint ones name disjoint k-subsets of the
//! same color.

use crate::error::{input, Result};
use crate::geometry::{helly_1d, project_subset, Direction, HellyOutcome, Interval, PointConfiguration};
use crate::kneser::{enumerate_k_subsets, Coloring, KSubset, KneserInstance};

/// One color class over a point configuration.
#[derive(Clone, Debug)]
pub struct ColorSystem<'a> {
    config: &'a PointConfiguration,
    coloring: &'a Coloring,
    color: u32,
    ranks: Vec<usize>,
    subsets: Vec<KSubset>,
}

impl<'a> ColorSystem<'a> {
    pub fn new(config: &'a PointConfiguration, coloring: &'a Coloring, color: u32) -> Result<Self> {
        let all = enumerate_k_subsets(coloring.instance())?;
        Self::with_subsets(config, coloring, color, &all)
    }

    /// One system per color, ascending by color id.
    pub fn all(config: &'a PointConfiguration, coloring: &'a Coloring) -> Result<Vec<Self>> {
        let all = enumerate_k_subsets(coloring.instance())?;
        (0..coloring.num_colors())
            .map(|c| Self::with_subsets(config, coloring, c, &all))
            .collect()
    }

    fn with_subsets(
        config: &'a PointConfiguration,
        coloring: &'a Coloring,
        color: u32,
        all: &[KSubset],
    ) -> Result<Self> {
        let instance = coloring.instance();
        if config.n() != instance.n() || config.dim() != instance.d() {
            return input(format!(
                "configuration of {} points in R^{} does not fit {instance} (needs {} points in R^{})",
                config.n(),
                config.dim(),
                instance.n(),
                instance.d()
            ));
        }
        let ranks = coloring.class_ranks(color);
        if ranks.is_empty() {
            return input(format!("color {color} has no members"));
        }
        let subsets = ranks.iter().map(|&r| all[r].clone()).collect();
        Ok(Self {
            config,
            coloring,
            color,
            ranks,
            subsets,
        })
    }

    pub fn instance(&self) -> &KneserInstance {
        self.coloring.instance()
    }

    pub fn config(&self) -> &'a PointConfiguration {
        self.config
    }

    pub fn coloring(&self) -> &'a Coloring {
        self.coloring
    }

    pub fn color(&self) -> u32 {
        self.color
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn subsets(&self) -> &[KSubset] {
        &self.subsets
    }

    /// Projected interval of every member, in rank order.
    pub fn intervals(&self, x: &Direction) -> Vec<Interval> {
        self.subsets
            .iter()
            .map(|s| project_subset(self.config, s, x))
            .collect()
    }

    pub fn helly(&self, x: &Direction) -> HellyOutcome {
        helly_1d(&self.intervals(x)).expect("color classes are nonempty")
    }
}

/// Two same-colored k-subsets whose projections along some direction are
/// disjoint; `a` has the smaller rank.
#[derive(Clone, Debug, PartialEq)]
pub struct HellyFailure {
    pub color: u32,
    pub a: KSubset,
    pub b: KSubset,
    /// Direction whose projections separate `a` and `b`.
    pub direction: Direction,
    /// Length of the gap between the two projected intervals.
    pub separation: f64,
}

/// Either a value or the Helly failure that prevented computing it.
#[derive(Clone, Debug, PartialEq)]
pub enum Probe<T> {
    Value(T),
    Failure(HellyFailure),
}

impl<T> Probe<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Probe::Value(v) => Some(v),
            Probe::Failure(_) => None,
        }
    }

    pub fn failure(self) -> Option<HellyFailure> {
        match self {
            Probe::Value(_) => None,
            Probe::Failure(f) => Some(f),
        }
    }
}

/// Offset of the system's hyperplane at `x`: the midpoint of the common
/// intersection of the projected intervals.
pub fn phi(system: &ColorSystem<'_>, x: &Direction) -> Probe<f64> {
    phi_with_margin(system, x, 0.0)
}

/// As [`phi`], but a separation of at most `margin` is treated as touching
/// and yields the midpoint of the (inverted) bounds instead of a failure.
pub fn phi_with_margin(system: &ColorSystem<'_>, x: &Direction, margin: f64) -> Probe<f64> {
    let intervals = system.intervals(x);
    match helly_1d(&intervals).expect("color classes are nonempty") {
        HellyOutcome::Intersection(iv) => Probe::Value(iv.midpoint()),
        HellyOutcome::DisjointPair(i, j) => {
            let (lo, hi) = (intervals[i].lo(), intervals[j].hi());
            let separation = lo - hi;
            if separation <= margin {
                return Probe::Value((lo + hi) / 2.0);
            }
            let (first, second) = if system.ranks[i] < system.ranks[j] { (i, j) } else { (j, i) };
            Probe::Failure(HellyFailure {
                color: system.color,
                a: system.subsets[first].clone(),
                b: system.subsets[second].clone(),
                direction: x.clone(),
                separation,
            })
        }
    }
}

fn check_direction(systems: &[ColorSystem<'_>], x: &Direction) -> Result<()> {
    let Some(first) = systems.first() else {
        return input("at least one system is required");
    };
    if systems.iter().any(|s| s.instance() != first.instance()) {
        return input("systems belong to different instances");
    }
    if x.dim() != first.config.dim() {
        return input(format!(
            "direction has dimension {}, configuration has {}",
            x.dim(),
            first.config.dim()
        ));
    }
    Ok(())
}

/// `phi` of every system at `x`, in the order given. Systems are evaluated by
/// ascending color id and the first failure short-circuits.
pub fn offsets_with_margin(
    systems: &[ColorSystem<'_>],
    x: &Direction,
    margin: f64,
) -> Result<Probe<Vec<f64>>> {
    check_direction(systems, x)?;
    let mut order: Vec<usize> = (0..systems.len()).collect();
    order.sort_by_key(|&i| (systems[i].color, i));
    let mut values = vec![0.0; systems.len()];
    for i in order {
        match phi_with_margin(&systems[i], x, margin) {
            Probe::Value(v) => values[i] = v,
            Probe::Failure(f) => return Ok(Probe::Failure(f)),
        }
    }
    Ok(Probe::Value(values))
}

/// `(phi_1 - phi_d, .., phi_{d-1} - phi_d)` at `x`, for exactly `d` systems.
pub fn psi(systems: &[ColorSystem<'_>], x: &Direction) -> Result<Probe<Vec<f64>>> {
    psi_with_margin(systems, x, 0.0)
}

pub fn psi_with_margin(
    systems: &[ColorSystem<'_>],
    x: &Direction,
    margin: f64,
) -> Result<Probe<Vec<f64>>> {
    let d = match systems.first() {
        Some(s) => s.instance().d(),
        None => return input("psi needs d systems, got none"),
    };
    if systems.len() != d {
        return input(format!("psi needs exactly d = {d} systems, got {}", systems.len()));
    }
    Ok(match offsets_with_margin(systems, x, margin)? {
        Probe::Value(offsets) => {
            let last = offsets[d - 1];
            Probe::Value(offsets[..d - 1].iter().map(|v| v - last).collect())
        }
        Probe::Failure(f) => Probe::Failure(f),
    })
}

/// Spread `max - min` of the systems' offsets at `x`; zero when all the
/// chosen hyperplanes are one plane.
pub fn coincidence_gap(systems: &[ColorSystem<'_>], x: &Direction) -> Result<Probe<f64>> {
    Ok(match offsets_with_margin(systems, x, 0.0)? {
        Probe::Value(offsets) => Probe::Value(spread(&offsets)),
        Probe::Failure(f) => Probe::Failure(f),
    })
}

pub(crate) fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        0.0
    } else {
        max - min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::moment_curve_config;
    use crate::kneser::are_disjoint;

    fn five_two() -> KneserInstance {
        KneserInstance::new(5, 2).unwrap()
    }

    /// (5,2) coloring with `special` subsets given colors 0, 1, ..; every
    /// other subset gets the next color.
    fn coloring_with(special: &[&[usize]]) -> Coloring {
        let inst = five_two();
        let subsets = enumerate_k_subsets(&inst).unwrap();
        let rest = special.len() as u32;
        let assignment = subsets
            .iter()
            .map(|s| {
                special
                    .iter()
                    .position(|m| s.members() == *m)
                    .map_or(rest, |p| p as u32)
            })
            .collect();
        Coloring::new(inst, assignment).unwrap()
    }

    fn e1() -> Direction {
        Direction::axis(2, 0)
    }

    #[test]
    fn phi_singleton_class() {
        let config = moment_curve_config(5, 2).unwrap();
        let coloring = coloring_with(&[&[1, 2]]);
        let system = ColorSystem::new(&config, &coloring, 0).unwrap();
        // [1/6, 2/6] along e1.
        assert!((phi(&system, &e1()).value().unwrap() - 0.25).abs() < 1e-15);
        assert!((phi(&system, &e1().antipode()).value().unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn phi_failure_on_separated_pair() {
        let config = moment_curve_config(5, 2).unwrap();
        let inst = five_two();
        // Color 0 iff the subset contains 1; color 1 is every 2-subset of {2..5}.
        let assignment = enumerate_k_subsets(&inst)
            .unwrap()
            .iter()
            .map(|s| u32::from(s.members()[0] != 1))
            .collect();
        let coloring = Coloring::new(inst, assignment).unwrap();
        let system = ColorSystem::new(&config, &coloring, 1).unwrap();
        let failure = phi(&system, &e1()).failure().unwrap();
        assert_eq!(failure.a.members(), &[2, 3]);
        assert_eq!(failure.b.members(), &[4, 5]);
        assert!(are_disjoint(&failure.a, &failure.b));
        assert!((failure.separation - 1.0 / 6.0).abs() < 1e-12);
        // A margin wider than the gap hides the failure.
        assert!(phi_with_margin(&system, &e1(), 0.5).value().is_some());
    }

    #[test]
    fn psi_and_gap_for_two_singletons() {
        let config = moment_curve_config(5, 2).unwrap();
        let coloring = coloring_with(&[&[1, 2], &[4, 5]]);
        let systems = vec![
            ColorSystem::new(&config, &coloring, 0).unwrap(),
            ColorSystem::new(&config, &coloring, 1).unwrap(),
        ];
        let value = psi(&systems, &e1()).unwrap().value().unwrap();
        assert_eq!(value.len(), 1);
        assert!((value[0] + 0.5).abs() < 1e-15);
        let flipped = psi(&systems, &e1().antipode()).unwrap().value().unwrap();
        assert!((flipped[0] - 0.5).abs() < 1e-15);
        let gap = coincidence_gap(&systems, &e1()).unwrap().value().unwrap();
        assert!((gap - 0.5).abs() < 1e-15);

        assert_eq!(coincidence_gap(&systems[..1], &e1()).unwrap(), Probe::Value(0.0));
        let same = vec![systems[0].clone(), systems[0].clone()];
        assert_eq!(psi(&same, &e1()).unwrap(), Probe::Value(vec![0.0]));
        assert_eq!(coincidence_gap(&same, &e1()).unwrap(), Probe::Value(0.0));
    }

    #[test]
    fn psi_argument_errors() {
        let config = moment_curve_config(5, 2).unwrap();
        let coloring = coloring_with(&[&[1, 2], &[4, 5]]);
        let systems = ColorSystem::all(&config, &coloring).unwrap();
        assert_eq!(systems.len(), 3);
        assert!(psi(&systems, &e1()).is_err());
        assert!(psi(&[], &e1()).is_err());
        assert!(coincidence_gap(&[], &e1()).is_err());
        assert!(psi(&systems[..2], &Direction::axis(3, 0)).is_err());
    }

    #[test]
    fn failure_short_circuits_by_color() {
        let config = moment_curve_config(5, 2).unwrap();
        let inst = five_two();
        // Both colors contain a separated pair along e1: {1,2}/{3,4} and {1,3}/{4,5}.
        let assignment = enumerate_k_subsets(&inst)
            .unwrap()
            .iter()
            .map(|s| u32::from(s.members() != [1, 2] && s.members() != [3, 4]))
            .collect();
        let coloring = Coloring::new(inst, assignment).unwrap();
        let mut systems = ColorSystem::all(&config, &coloring).unwrap();
        systems.reverse();
        assert!(phi(&systems[0], &e1()).failure().is_some());
        let failure = psi(&systems, &e1()).unwrap().failure().unwrap();
        assert_eq!(failure.color, 0);
        assert_eq!(failure.a.members(), &[1, 2]);
    }

    #[test]
    fn mismatched_configuration() {
        let config = moment_curve_config(5, 3).unwrap();
        let coloring = coloring_with(&[&[1, 2]]);
        assert!(ColorSystem::new(&config, &coloring, 0).is_err());
        let config = moment_curve_config(5, 2).unwrap();
        assert!(ColorSystem::new(&config, &coloring, 7).is_err());
    }
}
