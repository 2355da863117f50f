//! Finding two disjoint k-subsets of the same color in any coloring of the
//! k-subsets of an n-set with at most `n - 2k + 1` colors.
//!
//! The search follows a geometric route: the ground set is placed on the
//! moment curve in `R^(n-2k+1)`, each k-subset becomes a k-gon, and every
//! color class induces an odd function on the sphere (the midpoint of the
//! common intersection of the class's projected intervals). A direction where
//! those functions coincide cannot exist for an improper-free coloring, so the
//! search for one exposes a pair of same-colored k-gons with disjoint
//! projections. Every reported pair is re-validated combinatorially, and an
//! exhaustive pair scan is kept as a fallback.
//!
//! Modules:
//! - [`kneser`]: instances, subsets, colorings, brute-force oracle, chromatic numbers.
//! - [`geometry`]: moment-curve configurations, exact certificates, projections, Helly on the line.
//! - [`systems`]: per-color hyperplane systems and the coincidence map.
//! - [`borsuk_ulam`]: zero search for odd maps on circles and spheres.
//! - [`witness`]: the combined witness search and diagnostics.
//! - [`cli`]: file formats and the command-line driver.

pub mod borsuk_ulam;
pub mod cli;
mod error;
pub mod geometry;
pub mod kneser;
pub mod systems;
pub mod witness;

pub use error::{Error, Result};
pub use geometry::{Direction, Hyperplane, Interval, PointConfiguration};
pub use kneser::{Coloring, KSubset, KneserInstance, Provenance, WitnessPair};
