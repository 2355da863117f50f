//! Coloring files, witness reports and the `kneser` command-line driver.
//!
//! A coloring file is a JSON object
//!
//! ```json
//! { "n": 4, "k": 2, "assignments": { "1,2": 0, "1,3": 1, ... } }
//! ```
//!
//! with one canonical key (sorted 1-based members joined by commas, no
//! whitespace) per k-subset and dense 0-based color ids.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::borsuk_ulam::synthetic::{LinearMap, TrigMap};
use crate::borsuk_ulam::{
    find_zero_on_circle, find_zero_on_sphere, OddMap, OddMapEval, ZeroSearch, DEFAULT_CIRCLE_BUDGET,
    DEFAULT_SPHERE_BUDGET,
};
use crate::error::{input, Error, Result};
use crate::geometry::{general_position_check, hyperplane_capacity_check, moment_curve_config};
use crate::kneser::{
    canonical_coloring, enumerate_k_subsets, exact_chromatic_number, random_coloring, unrank_subset,
    verify_coloring, Coloring, KSubset, KneserInstance, Provenance, WitnessPair,
};
use crate::witness::{geometric_witness_search, hybrid_witness, SearchParams};

/// Key/color entries in file order; duplicates are kept so they can be
/// reported.
#[derive(Clone, Debug, PartialEq)]
struct Assignments(Vec<(String, i64)>);

impl Serialize for Assignments {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (key, color) in &self.0 {
            map.serialize_entry(key, color)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Assignments {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Assignments;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from subset keys to color ids")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Assignments, A::Error> {
                let mut entries = Vec::with_capacity(access.size_hint().unwrap_or(0));
                while let Some((key, color)) = access.next_entry::<String, i64>()? {
                    entries.push((key, color));
                }
                Ok(Assignments(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColoringFile {
    n: usize,
    k: usize,
    assignments: Assignments,
}

/// Parses a canonical key such as `"1,3,5"` into a subset of `instance`.
fn parse_key(instance: &KneserInstance, key: &str) -> Result<KSubset> {
    let bad = || Error::Input(format!("non-canonical subset key \"{key}\""));
    let members = key
        .split(',')
        .map(|part| {
            let canonical = !part.is_empty()
                && part.bytes().all(|b| b.is_ascii_digit())
                && !part.starts_with('0');
            if canonical {
                part.parse::<usize>().map_err(|_| bad())
            } else {
                Err(bad())
            }
        })
        .collect::<Result<Vec<usize>>>()?;
    KSubset::new(instance, members).map_err(|_| bad())
}

/// Validated coloring from coloring-file text.
pub fn parse_coloring_file(text: &str) -> Result<Coloring> {
    let file: ColoringFile = serde_json::from_str(text)
        .map_err(|e| Error::Input(format!("malformed coloring file: {e}")))?;
    let instance = KneserInstance::new(file.n, file.k)?;
    let subsets = enumerate_k_subsets(&instance)?;
    let mut assignment: Vec<Option<u32>> = vec![None; subsets.len()];
    for (key, color) in &file.assignments.0 {
        let subset = parse_key(&instance, key)?;
        let rank = crate::kneser::rank_subset(&instance, &subset)?;
        if assignment[rank].is_some() {
            return input(format!("duplicate subset key \"{key}\""));
        }
        let color = u32::try_from(*color)
            .map_err(|_| Error::Input(format!("key \"{key}\" has invalid color id {color}")))?;
        assignment[rank] = Some(color);
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(rank, c)| {
            c.ok_or_else(|| {
                let key = unrank_subset(&instance, rank).map(|s| s.key()).unwrap_or_default();
                Error::Input(format!("missing subset key \"{key}\""))
            })
        })
        .collect::<Result<Vec<u32>>>()?;
    Coloring::new(instance, assignment)
}

/// Coloring-file text with keys in rank order.
pub fn emit_coloring_file(coloring: &Coloring) -> String {
    let subsets = enumerate_k_subsets(coloring.instance()).expect("coloring sizes are capped");
    let entries = subsets
        .iter()
        .zip(coloring.assignment())
        .map(|(s, &c)| (s.key(), i64::from(c)))
        .collect();
    let file = ColoringFile {
        n: coloring.instance().n(),
        k: coloring.instance().k(),
        assignments: Assignments(entries),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("coloring files serialize");
    text.push('\n');
    text
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessBody {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub color: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMethod {
    Geometric,
    Brute,
}

/// Output of the `witness` subcommand. `witness` is null when no pair was
/// found; `direction` is present for geometric witnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub witness: Option<WitnessBody>,
    pub method: WitnessMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
    pub seed: u64,
}

impl WitnessReport {
    pub fn from_pair(pair: Option<&WitnessPair>, fallback: WitnessMethod, seed: u64) -> Self {
        let (method, direction) = match pair.map(|p| &p.provenance) {
            Some(Provenance::HellyFailure(d)) => (WitnessMethod::Geometric, Some(d.coords().to_vec())),
            Some(Provenance::BruteForce) => (WitnessMethod::Brute, None),
            None => (fallback, None),
        };
        Self {
            witness: pair.map(|p| WitnessBody {
                a: p.a.members().to_vec(),
                b: p.b.members().to_vec(),
                color: p.color,
            }),
            method,
            direction,
            elapsed_ms: None,
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("malformed witness report: {e}")))
    }
}

#[derive(Parser, Debug)]
#[command(name = "kneser", version, about = "Disjoint same-colored k-subsets in colorings of Kneser graphs")]
struct Cli {
    /// Worker threads for parallel direction and start evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Scheme {
    Canonical,
    Random,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Method {
    Geometric,
    Brute,
    Hybrid,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MapKind {
    RandomLinear,
    RandomTrig,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a coloring file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "canonical")]
        scheme: Scheme,
        /// Colors for the random scheme (default n - 2k + 1).
        #[arg(long)]
        colors: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether a coloring is proper.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Find two disjoint same-colored subsets.
    Witness {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "hybrid")]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 8)]
        rounds: usize,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        /// Leave the elapsed time out of the report.
        #[arg(long)]
        no_timing: bool,
    },
    /// Exact chromatic number of KG(n, k).
    Chromatic {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 40)]
        cap: usize,
    },
    /// Zero search on a seeded synthetic odd map.
    Lemma {
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value = "random-linear")]
        systems: MapKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 32)]
        starts: usize,
    },
    /// Exact general-position certificates for the moment-curve configuration.
    Genpos {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
}

const EXIT_OK: i32 = 0;
const EXIT_NEGATIVE: i32 = 1;
const EXIT_INPUT: i32 = 2;

fn read_coloring(path: &PathBuf) -> Result<Coloring> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_coloring_file(&text)
}

fn io_error(e: std::io::Error) -> Error {
    Error::Input(format!("write failed: {e}"))
}

#[derive(Serialize)]
struct LemmaReport {
    d: usize,
    systems: &'static str,
    seed: u64,
    found: bool,
    direction: Option<Vec<f64>>,
    residual: Option<f64>,
    calls: Option<usize>,
}

#[derive(Serialize)]
struct GenposReport {
    n: usize,
    k: usize,
    d: usize,
    general_position: bool,
    hyperplane_capacity: bool,
}

fn run_lemma<M: OddMap>(map: M, d: usize, tol: f64, starts: usize, seed: u64) -> Result<Option<crate::borsuk_ulam::ZeroResult>> {
    Ok(if d == 2 {
        find_zero_on_circle(&OddMapEval::new(map, DEFAULT_CIRCLE_BUDGET), tol)?.found()
    } else {
        match find_zero_on_sphere(&OddMapEval::new(map, DEFAULT_SPHERE_BUDGET), tol, starts, seed)? {
            ZeroSearch::Found(z) => Some(z),
            _ => None,
        }
    })
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Gen {
            n,
            k,
            scheme,
            colors,
            seed,
            out: path,
        } => {
            let instance = KneserInstance::new(n, k)?;
            let coloring = match scheme {
                Scheme::Canonical => canonical_coloring(&instance)?,
                Scheme::Random => {
                    random_coloring(&instance, colors.unwrap_or(instance.d() as u32), seed)?
                }
            };
            let text = emit_coloring_file(&coloring);
            match path {
                Some(p) => std::fs::write(&p, text)
                    .map_err(|e| Error::Input(format!("cannot write {}: {e}", p.display())))?,
                None => out.write_all(text.as_bytes()).map_err(io_error)?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify { input } => {
            let coloring = read_coloring(&input)?;
            match verify_coloring(&coloring) {
                None => {
                    writeln!(out, "proper").map_err(io_error)?;
                    Ok(EXIT_OK)
                }
                Some(w) => {
                    writeln!(out, "improper: {} and {} share color {}", w.a, w.b, w.color)
                        .map_err(io_error)?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Witness {
            input,
            method,
            seed,
            grid,
            tol,
            rounds,
            starts,
            no_timing,
        } => {
            let coloring = read_coloring(&input)?;
            let instance = *coloring.instance();
            let config = moment_curve_config(instance.n(), instance.d())?;
            let params = SearchParams {
                grid_size: grid,
                max_rounds: rounds,
                gap_tol: tol,
                seed,
                starts,
                ..SearchParams::default()
            };
            let started = Instant::now();
            let (pair, fallback) = match method {
                Method::Brute => (verify_coloring(&coloring), WitnessMethod::Brute),
                Method::Geometric => (
                    geometric_witness_search(&instance, &config, &coloring, &params)?,
                    WitnessMethod::Geometric,
                ),
                Method::Hybrid => (
                    Some(hybrid_witness(&instance, &config, &coloring, &params)?),
                    WitnessMethod::Geometric,
                ),
            };
            let mut report = WitnessReport::from_pair(pair.as_ref(), fallback, seed);
            if !no_timing {
                report.elapsed_ms = Some(started.elapsed().as_secs_f64() * 1e3);
            }
            writeln!(out, "{}", report.to_json()).map_err(io_error)?;
            Ok(if pair.is_some() { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Chromatic { n, k, cap } => {
            let chi = exact_chromatic_number(&KneserInstance::new(n, k)?, cap)?;
            writeln!(out, "{chi}").map_err(io_error)?;
            Ok(EXIT_OK)
        }
        Command::Lemma {
            d,
            systems,
            seed,
            tol,
            starts,
        } => {
            if d < 2 {
                return input(format!("lemma needs d >= 2, got {d}"));
            }
            let (name, zero) = match systems {
                MapKind::RandomLinear => ("random-linear", run_lemma(LinearMap::random(d, seed), d, tol, starts, seed)?),
                MapKind::RandomTrig => ("random-trig", run_lemma(TrigMap::random(d, seed), d, tol, starts, seed)?),
            };
            let report = LemmaReport {
                d,
                systems: name,
                seed,
                found: zero.is_some(),
                direction: zero.as_ref().map(|z| z.direction.coords().to_vec()),
                residual: zero.as_ref().map(|z| z.residual),
                calls: zero.as_ref().map(|z| z.calls_used),
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializes"))
                .map_err(io_error)?;
            Ok(if zero.is_some() { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Genpos { n, k } => {
            let instance = KneserInstance::new(n, k)?;
            let config = moment_curve_config(n, instance.d())?;
            let report = GenposReport {
                n,
                k,
                d: instance.d(),
                general_position: general_position_check(&config)?,
                hyperplane_capacity: hyperplane_capacity_check(&config)?,
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializes"))
                .map_err(io_error)?;
            Ok(if report.general_position && report.hyperplane_capacity {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            })
        }
    }
}

/// Runs one invocation; `args` includes the program name. Reports go to
/// `out`, diagnostics to standard error. Returns the exit code: 0 success,
/// 1 negative answer, 2 input error.
pub fn run_command<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            eprint!("{}", e.render());
            return EXIT_INPUT;
        }
    };
    let result = match cli.threads {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => {
                let mut buffer = Vec::new();
                let result = pool.install(|| dispatch(cli.command, &mut buffer));
                out.write_all(&buffer).map_err(io_error).and(result)
            }
            Err(e) => Err(Error::Input(format!("cannot start {threads} threads: {e}"))),
        },
        None => dispatch(cli.command, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn file_for(n: usize, k: usize, colors: &[u32]) -> String {
        let instance = KneserInstance::new(n, k).unwrap();
        emit_coloring_file(&Coloring::new(instance, colors.to_vec()).unwrap())
    }

    #[test]
    fn parse_small_file() {
        let text = r#"{"n": 4, "k": 2, "assignments": {"1,2": 0, "1,3": 1, "1,4": 0, "2,3": 1, "2,4": 0, "3,4": 1}}"#;
        let c = parse_coloring_file(text).unwrap();
        assert_eq!(c.num_colors(), 2);
        assert_eq!(c.assignment(), &[0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn parse_reports_offending_key() {
        let missing = r#"{"n": 4, "k": 2, "assignments": {"1,2": 0, "1,3": 1, "1,4": 0, "2,3": 1, "3,4": 1}}"#;
        let err = parse_coloring_file(missing).unwrap_err().to_string();
        assert!(err.contains("\"2,4\""), "{err}");

        let duplicate = r#"{"n": 4, "k": 2, "assignments": {"1,2": 0, "1,2": 1, "1,3": 1, "1,4": 0, "2,3": 1, "2,4": 0, "3,4": 1}}"#;
        let err = parse_coloring_file(duplicate).unwrap_err().to_string();
        assert!(err.contains("duplicate") && err.contains("\"1,2\""), "{err}");

        for key in ["2,1", "1, 3", " 1,3", "01,3", "1,3,", "1,5", "1", "a,b", "1,,3"] {
            let text = format!(r#"{{"n": 4, "k": 2, "assignments": {{"{key}": 0}}}}"#);
            let err = parse_coloring_file(&text).unwrap_err().to_string();
            assert!(err.contains(&format!("\"{key}\"")), "{key}: {err}");
        }
    }

    #[test]
    fn parse_rejects_bad_colors_and_instances() {
        let sparse = r#"{"n": 4, "k": 2, "assignments": {"1,2": 0, "1,3": 2, "1,4": 0, "2,3": 2, "2,4": 0, "3,4": 2}}"#;
        assert!(matches!(parse_coloring_file(sparse), Err(Error::Input(_))));
        let negative = r#"{"n": 4, "k": 2, "assignments": {"1,2": -1}}"#;
        assert!(parse_coloring_file(negative).unwrap_err().to_string().contains("\"1,2\""));
        let small = r#"{"n": 3, "k": 2, "assignments": {}}"#;
        assert!(parse_coloring_file(small).is_err());
        assert!(parse_coloring_file("not json").is_err());
        assert!(parse_coloring_file(r#"{"n": 4, "k": 2}"#).is_err());
    }

    #[test]
    fn witness_report_round_trip() {
        let report = WitnessReport {
            witness: Some(WitnessBody { a: vec![1, 2], b: vec![3, 4], color: 0 }),
            method: WitnessMethod::Geometric,
            direction: Some(vec![0.1 + 0.2, -1.0 / 3.0]),
            elapsed_ms: Some(1.25),
            seed: 7,
        };
        assert_eq!(WitnessReport::from_json(&report.to_json()).unwrap(), report);
        let bare = WitnessReport { witness: None, direction: None, elapsed_ms: None, ..report };
        let json = bare.to_json();
        assert!(!json.contains("direction") && !json.contains("elapsed_ms"));
        assert_eq!(WitnessReport::from_json(&json).unwrap(), bare);
    }

    proptest! {
        #[test]
        fn coloring_file_round_trip(colors in proptest::collection::vec(0u32..4, 10), reverse in any::<bool>()) {
            let instance = KneserInstance::new(5, 2).unwrap();
            let coloring = Coloring::densified(instance, colors).unwrap();
            let text = emit_coloring_file(&coloring);
            let parsed = parse_coloring_file(&text).unwrap();
            prop_assert_eq!(&parsed, &coloring);
            // Key order does not matter.
            let value: serde_json::Value = serde_json::from_str(&text).unwrap();
            let mut entries: Vec<(String, serde_json::Value)> = value["assignments"]
                .as_object()
                .unwrap()
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            if reverse {
                entries.reverse();
            }
            let body: Vec<String> = entries.iter().map(|(k, v)| format!("\"{k}\": {v}")).collect();
            let shuffled = format!("{{\"n\": 5, \"k\": 2, \"assignments\": {{{}}}}}", body.join(", "));
            prop_assert_eq!(emit_coloring_file(&parse_coloring_file(&shuffled).unwrap()), text);
        }
    }

    #[test]
    fn emitted_files_are_canonical() {
        let text = file_for(4, 2, &[0, 0, 0, 1, 1, 1]);
        assert!(text.contains("\"1,2\": 0"));
        assert!(text.find("\"1,2\"").unwrap() < text.find("\"3,4\"").unwrap());
    }
}
