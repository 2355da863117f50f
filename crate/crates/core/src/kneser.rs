//! Subset combinatorics, colorings and exact oracles for Kneser graphs.
//!
//! Subsets of `{1..n}` are ordered lexicographically by their sorted member
//! lists, and a subset's rank is its position in that order. Colorings are
//! dense arrays indexed by rank.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Error, Result};
use crate::geometry::Direction;

/// Largest ground set representable by the `u64` subset masks.
pub const MAX_GROUND_SET: usize = 64;

/// Default cap on `C(n, k)` for enumerations and colorings.
pub const DEFAULT_SUBSET_CAP: u128 = 10_000_000;

/// Default vertex cap for [`exact_chromatic_number`].
pub const DEFAULT_CHROMATIC_CAP: usize = 40;

/// Binomial coefficient, `None` on `u128` overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// The pair `(n, k)`; the embedding dimension `n - 2k + 1` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KneserInstance {
    n: usize,
    k: usize,
}

impl KneserInstance {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return input("k must be at least 1");
        }
        if n < 2 * k {
            return input(format!("n = {n} < 2k = {}: no disjoint pairs exist", 2 * k));
        }
        if n > MAX_GROUND_SET {
            return input(format!("n = {n} exceeds the supported maximum {MAX_GROUND_SET}"));
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Embedding dimension `n - 2k + 1`, also the number of colors the
    /// theorem rules out.
    pub fn d(&self) -> usize {
        self.n - 2 * self.k + 1
    }

    /// `C(n, k)`, the number of vertices of the Kneser graph.
    pub fn subset_count(&self) -> u128 {
        binomial(self.n, self.k).expect("C(n, k) fits in u128 for n <= 64")
    }

    fn checked_count(&self, cap: u128) -> Result<usize> {
        let needed = self.subset_count();
        if needed > cap {
            return Err(Error::Capacity {
                what: "k-subsets",
                needed,
                cap,
            });
        }
        Ok(needed as usize)
    }
}

impl fmt::Display for KneserInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KG({}, {})", self.n, self.k)
    }
}

/// A k-subset of `{1..n}`, kept as sorted 1-based members plus a bitmask.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KSubset {
    members: Vec<usize>,
    mask: u64,
}

impl KSubset {
    /// Validates `members` against the instance: exactly `k` strictly
    /// increasing values in `1..=n`.
    pub fn new(instance: &KneserInstance, members: Vec<usize>) -> Result<Self> {
        if members.len() != instance.k {
            return input(format!(
                "subset {members:?} has {} members, expected k = {}",
                members.len(),
                instance.k
            ));
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return input(format!("subset {members:?} is not strictly increasing"));
        }
        if members.iter().any(|&m| m == 0 || m > instance.n) {
            return input(format!("subset {members:?} has a member outside 1..={}", instance.n));
        }
        Ok(Self::from_sorted(members))
    }

    fn from_sorted(members: Vec<usize>) -> Self {
        let mask = members.iter().fold(0u64, |acc, &m| acc | (1u64 << (m - 1)));
        Self { members, mask }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Bit `i - 1` is set iff `i` is a member.
    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Canonical key: members joined by commas, e.g. `"1,3,5"`.
    pub fn key(&self) -> String {
        let parts: Vec<String> = self.members.iter().map(|m| m.to_string()).collect();
        parts.join(",")
    }
}

impl fmt::Display for KSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

pub fn are_disjoint(a: &KSubset, b: &KSubset) -> bool {
    a.mask & b.mask == 0
}

/// All k-subsets in lexicographic order, capped at [`DEFAULT_SUBSET_CAP`].
pub fn enumerate_k_subsets(instance: &KneserInstance) -> Result<Vec<KSubset>> {
    enumerate_k_subsets_capped(instance, DEFAULT_SUBSET_CAP)
}

pub fn enumerate_k_subsets_capped(instance: &KneserInstance, cap: u128) -> Result<Vec<KSubset>> {
    let count = instance.checked_count(cap)?;
    let (n, k) = (instance.n, instance.k);
    let mut out = Vec::with_capacity(count);
    let mut current: Vec<usize> = (1..=k).collect();
    loop {
        out.push(KSubset::from_sorted(current.clone()));
        // Rightmost position that can still be incremented.
        let Some(pos) = (0..k).rev().find(|&i| current[i] < n - (k - 1 - i)) else {
            break;
        };
        current[pos] += 1;
        for i in pos + 1..k {
            current[i] = current[i - 1] + 1;
        }
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

/// Lexicographic rank of `s` among the k-subsets of `{1..n}`.
pub fn rank_subset(instance: &KneserInstance, s: &KSubset) -> Result<usize> {
    if s.members.len() != instance.k || s.members.last().is_some_and(|&m| m > instance.n) {
        return input(format!("subset {s} does not belong to {instance}"));
    }
    let (n, k) = (instance.n, instance.k);
    let mut rank: u128 = 0;
    let mut prev = 0;
    for (i, &c) in s.members.iter().enumerate() {
        for j in prev + 1..c {
            rank += binomial(n - j, k - i - 1).unwrap_or(0);
        }
        prev = c;
    }
    usize::try_from(rank).map_err(|_| Error::Input(format!("rank of {s} overflows usize")))
}

/// Inverse of [`rank_subset`].
pub fn unrank_subset(instance: &KneserInstance, rank: usize) -> Result<KSubset> {
    let total = instance.subset_count();
    if rank as u128 >= total {
        return input(format!("rank {rank} out of range 0..{total}"));
    }
    let (n, k) = (instance.n, instance.k);
    let mut r = rank as u128;
    let mut members = Vec::with_capacity(k);
    let mut j = 1;
    for i in 0..k {
        loop {
            let block = binomial(n - j, k - i - 1).unwrap_or(0);
            if r < block {
                break;
            }
            r -= block;
            j += 1;
        }
        members.push(j);
        j += 1;
    }
    Ok(KSubset::from_sorted(members))
}

/// A total assignment of color ids to the k-subsets of an instance, indexed
/// by subset rank. Color ids form the dense range `0..num_colors`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    instance: KneserInstance,
    assignment: Vec<u32>,
    num_colors: u32,
}

impl Coloring {
    /// Builds a coloring from a rank-indexed assignment. Ids must already be
    /// dense.
    pub fn new(instance: KneserInstance, assignment: Vec<u32>) -> Result<Self> {
        let expected = instance.checked_count(DEFAULT_SUBSET_CAP)?;
        if assignment.len() != expected {
            return input(format!(
                "assignment has {} entries, {instance} has {expected} subsets",
                assignment.len()
            ));
        }
        let num_colors = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; num_colors as usize];
        for &c in &assignment {
            used[c as usize] = true;
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return input(format!(
                "color ids are not dense: {missing} is unused but {} is assigned",
                num_colors - 1
            ));
        }
        Ok(Self {
            instance,
            assignment,
            num_colors,
        })
    }

    /// Re-indexes arbitrary ids onto `0..m`, preserving their relative order.
    pub fn densified(instance: KneserInstance, raw: Vec<u32>) -> Result<Self> {
        let mut ids: Vec<u32> = raw.clone();
        ids.sort_unstable();
        ids.dedup();
        let assignment = raw
            .iter()
            .map(|c| ids.binary_search(c).expect("id present") as u32)
            .collect();
        Self::new(instance, assignment)
    }

    pub fn instance(&self) -> &KneserInstance {
        &self.instance
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn num_colors(&self) -> u32 {
        self.num_colors
    }

    pub fn color_of_rank(&self, rank: usize) -> u32 {
        self.assignment[rank]
    }

    pub fn color_of(&self, s: &KSubset) -> Result<u32> {
        Ok(self.assignment[rank_subset(&self.instance, s)?])
    }

    /// Ranks of the subsets carrying `color`, ascending.
    pub fn class_ranks(&self, color: u32) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == color)
            .map(|(r, _)| r)
            .collect()
    }
}

/// How a witness was found.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    BruteForce,
    /// Same-colored k-gons whose projections onto this direction are disjoint.
    HellyFailure(Direction),
}

/// Two disjoint k-subsets carrying the same color.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessPair {
    pub a: KSubset,
    pub b: KSubset,
    pub color: u32,
    pub provenance: Provenance,
}

impl WitnessPair {
    /// Exact check against `coloring`: distinct, disjoint, same color.
    pub fn is_valid_for(&self, coloring: &Coloring) -> bool {
        let same = |s: &KSubset| coloring.color_of(s).is_ok_and(|c| c == self.color);
        self.a != self.b && are_disjoint(&self.a, &self.b) && same(&self.a) && same(&self.b)
    }
}

/// Exhaustive pair scan. Returns the first disjoint same-colored pair in
/// lexicographic order of `(rank a, rank b)` with `rank a < rank b`, or
/// `None` for a proper coloring of the Kneser graph.
pub fn verify_coloring(coloring: &Coloring) -> Option<WitnessPair> {
    let subsets = enumerate_k_subsets(&coloring.instance).ok()?;
    let masks: Vec<u64> = subsets.iter().map(KSubset::mask).collect();
    let colors = &coloring.assignment;
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            if colors[i] == colors[j] && masks[i] & masks[j] == 0 {
                return Some(WitnessPair {
                    a: subsets[i].clone(),
                    b: subsets[j].clone(),
                    color: colors[i],
                    provenance: Provenance::BruteForce,
                });
            }
        }
    }
    None
}

/// The standard proper coloring with `n - 2k + 2` colors: color `i - 1`
/// holds the subsets with minimum `i` for `i <= n - 2k + 1`, and the last
/// color holds the subsets of `{n - 2k + 2, .., n}`.
pub fn canonical_coloring(instance: &KneserInstance) -> Result<Coloring> {
    let d = instance.d();
    let assignment = enumerate_k_subsets(instance)?
        .iter()
        .map(|s| (s.members[0] - 1).min(d) as u32)
        .collect();
    Coloring::new(*instance, assignment)
}

/// Independent uniform colors from `0..colors`, seeded; ids are densified so
/// `num_colors` counts the colors actually used.
pub fn random_coloring(instance: &KneserInstance, colors: u32, seed: u64) -> Result<Coloring> {
    if colors == 0 {
        return input("number of colors must be at least 1");
    }
    let count = instance.checked_count(DEFAULT_SUBSET_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = (0..count).map(|_| rng.random_range(0..colors)).collect();
    Coloring::densified(*instance, raw)
}

/// Chromatic number of `KG(n, k)` by DSATUR branch and bound.
///
/// The upper bound starts from a greedy DSATUR coloring, the lower bound is
/// the clique formed by `floor(n / k)` pairwise disjoint subsets.
pub fn exact_chromatic_number(instance: &KneserInstance, vertex_cap: usize) -> Result<usize> {
    let count = instance.subset_count();
    if count > vertex_cap as u128 {
        return Err(Error::Capacity {
            what: "Kneser graph vertices",
            needed: count,
            cap: vertex_cap as u128,
        });
    }
    let subsets = enumerate_k_subsets(instance)?;
    let adjacency: Vec<Vec<usize>> = subsets
        .iter()
        .map(|a| {
            subsets
                .iter()
                .enumerate()
                .filter(|(_, b)| are_disjoint(a, b))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let lower = instance.n / instance.k;
    Ok(ColoringSearch::new(adjacency).solve(lower))
}

struct ColoringSearch {
    adjacency: Vec<Vec<usize>>,
    colors: Vec<Option<usize>>,
    best: usize,
    lower: usize,
}

impl ColoringSearch {
    fn new(adjacency: Vec<Vec<usize>>) -> Self {
        let n = adjacency.len();
        Self {
            adjacency,
            colors: vec![None; n],
            best: n,
            lower: 1,
        }
    }

    fn solve(mut self, lower: usize) -> usize {
        let n = self.adjacency.len();
        if n == 0 {
            return 0;
        }
        self.lower = lower.max(1);
        self.best = self.greedy();
        if self.best > self.lower {
            self.colors.iter_mut().for_each(|c| *c = None);
            self.branch(0, 0);
        }
        self.best
    }

    fn saturation(&self, v: usize) -> (usize, usize) {
        let mut seen = Vec::new();
        let mut uncolored_degree = 0;
        for &u in &self.adjacency[v] {
            match self.colors[u] {
                Some(c) if !seen.contains(&c) => seen.push(c),
                Some(_) => {}
                None => uncolored_degree += 1,
            }
        }
        (seen.len(), uncolored_degree)
    }

    fn pick_vertex(&self) -> Option<usize> {
        (0..self.adjacency.len())
            .filter(|&v| self.colors[v].is_none())
            .max_by(|&a, &b| {
                self.saturation(a)
                    .cmp(&self.saturation(b))
                    .then(b.cmp(&a))
            })
    }

    fn fits(&self, v: usize, color: usize) -> bool {
        self.adjacency[v].iter().all(|&u| self.colors[u] != Some(color))
    }

    fn greedy(&mut self) -> usize {
        let mut used = 0;
        while let Some(v) = self.pick_vertex() {
            let c = (0..).find(|&c| self.fits(v, c)).expect("some color fits");
            self.colors[v] = Some(c);
            used = used.max(c + 1);
        }
        used
    }

    /// Returns true once the lower bound is met.
    fn branch(&mut self, colored: usize, used: usize) -> bool {
        if colored == self.adjacency.len() {
            self.best = used;
            return self.best == self.lower;
        }
        let v = self.pick_vertex().expect("uncolored vertex remains");
        // Only colors that keep the total strictly below the incumbent.
        let limit = (used + 1).min(self.best - 1);
        for c in 0..limit {
            if !self.fits(v, c) {
                continue;
            }
            self.colors[v] = Some(c);
            let done = self.branch(colored + 1, used.max(c + 1));
            self.colors[v] = None;
            if done {
                return true;
            }
            if used.max(c + 1) >= self.best {
                // Incumbent improved below this branch's color count.
                break;
            }
        }
        false
    }
}
