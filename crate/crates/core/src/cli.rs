//! Command-line driver. Every command writes a JSON report (or DOT with
//! `--emit-dot`) and passes or fails.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::annulus::{
    annulus_metrics, atom_permutation, build_cover_system, check_axioms, cylinder_system, induced_crossratio,
    refine_system_step, small_separating_annulus, Annulus, AnnulusSystem, AtomMetric, SystemJson,
};
use crate::crossratio::{
    certify_hyperbolic, check_path_property, cr_ball, quasi_ultrametric_matrix, QuEntry, TableJson,
};
use crate::finite_sharp::{
    affine_group, pgl2_fq_action, translation_group, verify_sharp_transitive, FiniteField, FinitePermGroup,
    NearField, DEFAULT_CAP,
};
use crate::fit::fit_tree;
use crate::metric_tree::{MetricTree, TreeJson, TreePoint};
use crate::padic::Padic;
use crate::padic_projective::{
    bt_correspondence, classical_crossratio_valuation, fixed_points, mobius_act, solve_sharply3, FixedPoints,
    Mobius, ProjPoint,
};
use crate::quasimetric::{crossratio_from_qm, find_geodesic_segment, rho_on_triples, all_triples, QmJson, QuasimetricSpace};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::suites::run_suite;
use crate::tree_boundary::{
    approximating_subtree, boundary_crossratio, boundary_table, classify_automorphism, collapsing_limit,
    common_prefix_len, conical_witness, gerasimov_limit, interpolated_ray, median_of_ends, ray_rho,
    ray_triple_geodesic, vertex_name, BoundaryPoint, RegularTreeModel, TreeAutomorphism,
};
use crate::CrossratioTable;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}:{column}: {msg}")]
    Input {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}")]
    Failed(String),
}

fn failed(e: impl Display) -> CliError {
    CliError::Failed(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "hypercross", version, about = "Crossratios, annulus systems and tree-boundary dynamics")]
pub struct Cli {
    #[command(flatten)]
    pub cfg: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Input file (JSON, or DOT for trees).
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write trees as DOT instead of JSON.
    #[arg(long, global = true)]
    pub emit_dot: bool,
    #[arg(long, global = true, default_value_t = 6)]
    pub depth: usize,
    /// p-adic relative precision.
    #[arg(long, global = true, default_value_t = 20)]
    pub precision: u32,
    #[arg(long, global = true, default_value_t = 2)]
    pub prime: u64,
    /// Search budget (Gerasimov set size).
    #[arg(long, global = true, default_value_t = 3)]
    pub budget: usize,
    /// Base of visual metrics.
    #[arg(long, global = true, default_value = "1/2", value_parser = rational_arg)]
    pub base: Rational,
    #[arg(long, global = true, default_value_t = 1)]
    pub a3_threshold: usize,
    /// Seed for sampled commands; `HYPERCROSS_SEED` takes precedence.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finite metric trees.
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Crossratio tables.
    #[command(subcommand)]
    Crossratio(CrossratioCmd),
    /// Quasimetrics and triple spaces.
    #[command(subcommand)]
    Qm(QmCmd),
    /// Annulus systems.
    #[command(subcommand)]
    Annulus(AnnulusCmd),
    /// Ends of regular trees and their automorphisms.
    #[command(subcommand)]
    Boundary(BoundaryCmd),
    /// The p-adic projective line.
    #[command(subcommand)]
    Padic(PadicCmd),
    /// Finite sharply transitive groups.
    #[command(subcommand)]
    Finite(FiniteCmd),
    /// Seeded property suite.
    Suite { name: String },
}

#[derive(Debug, Subcommand)]
pub enum TreeCmd {
    /// Random tree with labeled leaves.
    Random {
        #[arg(long, default_value_t = 6)]
        leaves: usize,
    },
    /// Crossratio table over the leaves.
    Table,
    /// Median of three nodes.
    Median { x: String, y: String, z: String },
    /// Re-emit the input tree.
    Convert,
}

#[derive(Debug, Subcommand)]
pub enum CrossratioCmd {
    /// Least hyperbolicity constant, failing above `--bound`.
    Check {
        #[arg(long, value_parser = rational_arg)]
        bound: Option<Rational>,
    },
    /// Path property with tolerance `--p`.
    Path {
        #[arg(long, default_value = "0", value_parser = rational_arg)]
        p: Rational,
    },
    /// Best tree fit, failing above `--bound`.
    Fit {
        #[arg(long, value_parser = rational_arg)]
        bound: Option<Rational>,
    },
    /// Quasi-ultrametric seen from the pair `a`, `b`.
    Ultrametric {
        a: String,
        b: String,
        #[arg(long, default_value = "2", value_parser = rational_arg)]
        lambda: Rational,
    },
    /// Crossratio ball around `x` seen from `a`, `b`.
    Ball {
        a: String,
        b: String,
        x: String,
        #[arg(value_parser = rational_arg)]
        r: Rational,
    },
}

#[derive(Debug, Subcommand)]
pub enum QmCmd {
    /// Quasimetric defect.
    Defect,
    /// Induced crossratio table.
    Crossratio,
    /// Triple-space quasimetric of a crossratio table.
    Triples,
    /// A k-geodesic segment from `x` to `y`.
    Geodesic {
        x: String,
        y: String,
        #[arg(long, default_value = "0", value_parser = rational_arg)]
        k: Rational,
    },
}

#[derive(Debug, Subcommand)]
pub enum AnnulusCmd {
    /// Cylinder system of the binary tree at `--depth`.
    Cylinder {
        #[arg(long)]
        max_level: Option<usize>,
    },
    /// Axiom report for a system.
    Check {
        /// Sample atoms; the whole universe up to twelve atoms otherwise.
        #[arg(long, value_delimiter = ',')]
        sample: Vec<String>,
    },
    /// Induced crossratio table on sample atoms.
    Crossratio {
        #[arg(long, value_delimiter = ',', required = true)]
        sample: Vec<String>,
    },
    /// λ and μ of an annulus of binary cylinders at `--depth`.
    Metrics {
        #[arg(long, value_delimiter = ',', required = true)]
        minus: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        plus: Vec<String>,
    },
    /// Small annulus separating two binary cylinders, invariant under the
    /// root swap.
    Separate {
        x: String,
        y: String,
        #[arg(long, value_parser = rational_arg)]
        s: Rational,
    },
    /// Cover system of one triple of binary cylinders.
    Cover { x: String, y: String, z: String },
    /// One refinement step on the binary tree at `--depth`.
    Refine {
        #[arg(long)]
        n: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoundaryCmd {
    /// `(xy|zw)` of four ends.
    Crossratio {
        #[command(flatten)]
        model: ModelArg,
        x: String,
        y: String,
        z: String,
        w: String,
    },
    /// Crossratio table of ends.
    Table {
        #[command(flatten)]
        model: ModelArg,
        #[arg(required = true)]
        points: Vec<String>,
    },
    /// Median vertex of three ends.
    Median {
        #[command(flatten)]
        model: ModelArg,
        x: String,
        y: String,
        z: String,
    },
    /// `ρ` between two triples of ends.
    Rho {
        #[command(flatten)]
        model: ModelArg,
        #[arg(num_args = 6, required = true)]
        ends: Vec<String>,
    },
    /// Finite approximating tree of a set of ends.
    Approx {
        #[command(flatten)]
        model: ModelArg,
        #[arg(required = true)]
        points: Vec<String>,
    },
    /// Interpolating window between `b` and `a` through `c`, and the
    /// geodesic check of its triples.
    Interpolate {
        #[command(flatten)]
        model: ModelArg,
        a: String,
        b: String,
        c: String,
        #[arg(long, default_value_t = 3)]
        length: usize,
    },
    /// Dynamics of a Möbius map on the Bruhat–Tits tree.
    Classify {
        #[arg(long, value_parser = matrix_arg)]
        matrix: [[i64; 2]; 2],
    },
    /// Collapsing limit of the powers of a Möbius map.
    Collapse {
        #[arg(long, value_parser = matrix_arg)]
        matrix: [[i64; 2]; 2],
        #[arg(long, default_value_t = 12)]
        powers: u32,
    },
    /// Gerasimov limit of the powers with `--budget`.
    Gerasimov {
        #[arg(long, value_parser = matrix_arg)]
        matrix: [[i64; 2]; 2],
        #[arg(long, default_value_t = 12)]
        powers: u32,
    },
    /// Conical witness for an end.
    Conical {
        #[arg(long, value_parser = matrix_arg)]
        matrix: [[i64; 2]; 2],
        x: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArg {
    /// `binary`, `regular:<d>` or `bt:<p>`.
    #[arg(long, default_value = "regular:3")]
    pub model: String,
}

#[derive(Debug, Subcommand)]
pub enum PadicCmd {
    /// Image of a point.
    Act {
        #[arg(long, value_parser = matrix_arg)]
        matrix: [[i64; 2]; 2],
        x: String,
    },
    /// The map sending 0, 1, ∞ to three points.
    Solve { x1: String, x2: String, x3: String },
    /// Cross-ratio valuation and the tree crossratio of the ends.
    Crossratio { x1: String, x2: String, x3: String, x4: String },
    /// Attracting and repelling fixed points.
    Fixed {
        #[arg(long, value_parser = matrix_arg)]
        matrix: [[i64; 2]; 2],
    },
    /// End of a point in the Bruhat–Tits tree.
    End { x: String },
}

#[derive(Debug, Subcommand)]
pub enum FiniteCmd {
    /// PGL₂(F_q) on the projective line.
    Pgl2 {
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Dickson's near-field of order 9.
    Dickson,
    /// Affine group of `F_q` (or of the Dickson near-field with `--dickson`).
    Affine {
        #[arg(long, default_value_t = 9)]
        q: u32,
        #[arg(long)]
        dickson: bool,
        /// Translations only.
        #[arg(long)]
        translations: bool,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Sharp transitivity of a group read from `--in`.
    Verify {
        #[arg(long)]
        k: usize,
    },
}

fn matrix_arg(s: &str) -> Result<[[i64; 2]; 2], String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c, d] => Ok([[a, b], [c, d]]),
        _ => Err("expected four comma-separated integers a,b,c,d".into()),
    }
}

/// Result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub text: String,
}

impl Outcome {
    fn json(pass: bool, mut v: Value) -> Self {
        if let Value::Object(m) = &mut v {
            m.insert("pass".into(), Value::Bool(pass));
        }
        Outcome {
            pass,
            text: format!("{v}\n"),
        }
    }
}

/// Parses arguments and runs the command.
pub fn run<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let (cfg, cmd) = parse(args)?;
    dispatch(&cfg, &cmd)
}

/// Runs the command, writes its report and returns the exit status:
/// 0 when every check passes, 1 when one fails or errors, 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse(args).and_then(|(cfg, cmd)| {
        let out = dispatch(&cfg, &cmd)?;
        match &cfg.out {
            Some(path) => std::fs::write(path, &out.text).map_err(|e| CliError::Io(path.display().to_string(), e))?,
            None => print!("{}", out.text),
        }
        Ok(out.pass)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn parse<I, T>(args: I) -> Result<(RunConfig, Command), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut cfg = cli.cfg;
    if let Ok(s) = std::env::var("HYPERCROSS_SEED") {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("HYPERCROSS_SEED={s:?} is not an integer")))?;
    }
    Ok((cfg, cli.command))
}

pub fn dispatch(cfg: &RunConfig, cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Tree(c) => tree(cfg, c),
        Command::Crossratio(c) => crossratio(cfg, c),
        Command::Qm(c) => qm(cfg, c),
        Command::Annulus(c) => annulus(cfg, c),
        Command::Boundary(c) => boundary(cfg, c),
        Command::Padic(c) => padic(cfg, c),
        Command::Finite(c) => finite(cfg, c),
        Command::Suite { name } => {
            let report = run_suite(name, cfg.seed).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Outcome {
                pass: report.pass(),
                text: report.to_json_lines(),
            })
        }
    }
}

fn read_input(cfg: &RunConfig) -> Result<(String, String), CliError> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --in <file>".into()))?;
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(shown.clone(), e))?;
    Ok((shown, text))
}

fn parse_json<T: DeserializeOwned>(path: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

fn input_error(path: &str, e: impl Display) -> CliError {
    CliError::Input {
        path: path.to_string(),
        line: 0,
        column: 0,
        msg: e.to_string(),
    }
}

/// Parses `text` as `T`, or as a report carrying `T` under `key`.
fn parse_payload<T: DeserializeOwned>(path: &str, text: &str, key: &str) -> Result<T, CliError> {
    parse_json(path, text).or_else(|e| {
        let report: Value = parse_json(path, text)?;
        match report.get(key) {
            Some(inner) => serde_json::from_value(inner.clone()).map_err(|_| e),
            None => Err(e),
        }
    })
}

fn load_json<T: DeserializeOwned>(cfg: &RunConfig, key: &str) -> Result<(String, T), CliError> {
    let (path, text) = read_input(cfg)?;
    let v = parse_payload(&path, &text, key)?;
    Ok((path, v))
}

fn load_tree(cfg: &RunConfig) -> Result<MetricTree, CliError> {
    let (path, text) = read_input(cfg)?;
    let is_dot = Path::new(&path).extension().is_some_and(|e| e == "dot") || text.trim_start().starts_with("graph");
    if is_dot {
        MetricTree::from_dot(&text).map_err(|e| input_error(&path, e))
    } else {
        let j: TreeJson = parse_payload(&path, &text, "tree")?;
        MetricTree::from_json(&j).map_err(|e| input_error(&path, e))
    }
}

fn load_table(cfg: &RunConfig) -> Result<CrossratioTable, CliError> {
    let (path, j): (_, TableJson) = load_json(cfg, "table")?;
    CrossratioTable::from_json(&j).map_err(|e| input_error(&path, e))
}

fn load_qm(cfg: &RunConfig) -> Result<QuasimetricSpace, CliError> {
    let (path, j): (_, QmJson) = load_json(cfg, "space")?;
    QuasimetricSpace::from_json(&j).map_err(|e| input_error(&path, e))
}

fn emit_tree(cfg: &RunConfig, t: &MetricTree, extra: Value) -> Outcome {
    if cfg.emit_dot {
        Outcome {
            pass: true,
            text: t.to_dot(),
        }
    } else {
        let mut v = extra;
        v["tree"] = serde_json::to_value(t.to_json()).expect("serializable");
        Outcome::json(true, v)
    }
}

fn rat(v: Rational) -> Value {
    Value::String(format_rational(&v))
}

fn tree(cfg: &RunConfig, cmd: &TreeCmd) -> Result<Outcome, CliError> {
    match cmd {
        TreeCmd::Random { leaves } => {
            if *leaves < 2 {
                return Err(CliError::Usage("--leaves must be at least 2".into()));
            }
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
            Ok(emit_tree(cfg, &MetricTree::random(&mut rng, *leaves), json!({})))
        }
        TreeCmd::Table => {
            let t = load_tree(cfg)?;
            Ok(Outcome::json(true, json!({"table": t.leaf_table().to_json()})))
        }
        TreeCmd::Median { x, y, z } => {
            let t = load_tree(cfg)?;
            let id = |s: &str| t.node(s).map_err(failed);
            let m = t.median(id(x)?, id(y)?, id(z)?).map_err(failed)?;
            let name = match m {
                TreePoint::Node(v) => t.name(v).to_string(),
                TreePoint::OnEdge { .. } => unreachable!("tree medians are nodes"),
            };
            Ok(Outcome::json(true, json!({"median": name})))
        }
        TreeCmd::Convert => Ok(emit_tree(cfg, &load_tree(cfg)?, json!({}))),
    }
}

fn index(tbl: &CrossratioTable, s: &str) -> Result<usize, CliError> {
    tbl.index_of(s).map_err(failed)
}

fn crossratio(cfg: &RunConfig, cmd: &CrossratioCmd) -> Result<Outcome, CliError> {
    let tbl = load_table(cfg)?;
    match cmd {
        CrossratioCmd::Check { bound } => {
            let c = certify_hyperbolic(&tbl, *bound).map_err(failed)?;
            let pass = c.violation.is_none();
            Ok(Outcome::json(pass, json!({"certificate": c})))
        }
        CrossratioCmd::Path { p } => {
            let r = check_path_property(&tbl, *p).map_err(failed)?;
            Ok(Outcome::json(r.holds, json!({"report": r})))
        }
        CrossratioCmd::Fit { bound } => {
            let e = fit_tree(&tbl).map_err(failed)?;
            let pass = bound.is_none_or(|b| e.deviation <= b);
            let embedding: BTreeMap<&str, &str> = tbl
                .ground()
                .iter()
                .enumerate()
                .map(|(i, g)| (g.as_str(), e.tree.name(e.node_of(i))))
                .collect();
            let mut out = emit_tree(cfg, &e.tree, json!({"deviation": rat(e.deviation), "embedding": embedding}));
            if !cfg.emit_dot {
                out = Outcome::json(pass, serde_json::from_str(&out.text).expect("own output"));
            }
            out.pass = pass;
            Ok(out)
        }
        CrossratioCmd::Ultrametric { a, b, lambda } => {
            let q = quasi_ultrametric_matrix(&tbl, index(&tbl, a)?, index(&tbl, b)?, *lambda).map_err(failed)?;
            let g = tbl.ground();
            let rows: Vec<Vec<Value>> = (0..q.points.len())
                .map(|i| {
                    (0..q.points.len())
                        .map(|j| match q.entries[i][j] {
                            QuEntry::Zero => json!("0"),
                            QuEntry::Power(e) => {
                                q.exact(i, j).map_or_else(|| json!({"lambda_power": rat(-e)}), rat)
                            }
                        })
                        .collect()
                })
                .collect();
            let points: Vec<&str> = q.points.iter().map(|&i| g[i].as_str()).collect();
            Ok(Outcome::json(true, json!({"lambda": rat(q.lambda), "points": points, "entries": rows})))
        }
        CrossratioCmd::Ball { a, b, x, r } => {
            let s = cr_ball(&tbl, index(&tbl, a)?, index(&tbl, b)?, index(&tbl, x)?, *r).map_err(failed)?;
            let names: Vec<&str> = s.iter().map(|&i| tbl.ground()[i].as_str()).collect();
            Ok(Outcome::json(true, json!({"ball": names})))
        }
    }
}

fn qm(cfg: &RunConfig, cmd: &QmCmd) -> Result<Outcome, CliError> {
    match cmd {
        QmCmd::Defect => {
            let q = load_qm(cfg)?;
            Ok(Outcome::json(true, json!({"defect": rat(q.defect())})))
        }
        QmCmd::Crossratio => {
            let q = load_qm(cfg)?;
            let t = crossratio_from_qm(&q).map_err(failed)?;
            Ok(Outcome::json(true, json!({"table": t.to_json()})))
        }
        QmCmd::Triples => {
            let tbl = load_table(cfg)?;
            let q = rho_on_triples(&tbl, &all_triples(tbl.len())).map_err(failed)?;
            Ok(Outcome::json(true, json!({"defect": rat(q.defect()), "space": q.to_json()})))
        }
        QmCmd::Geodesic { x, y, k } => {
            let q = load_qm(cfg)?;
            let i = |s: &str| q.index_of(s).map_err(failed);
            let seg = find_geodesic_segment(&q, *k, i(x)?, i(y)?).map_err(failed)?;
            let points = seg.as_ref().map(|s| s.points.iter().map(|&p| q.points()[p].clone()).collect::<Vec<_>>());
            Ok(Outcome::json(seg.is_some(), json!({"segment": points})))
        }
    }
}

fn binary_universe(cfg: &RunConfig) -> Result<(RegularTreeModel, Vec<String>, AtomMetric), CliError> {
    let model = RegularTreeModel::binary(cfg.depth).map_err(failed)?;
    let (names, d) = AtomMetric::visual(&model, cfg.depth, cfg.base).map_err(failed)?;
    Ok((model, names, d))
}

fn atom_index(names: &[String], s: &str) -> Result<usize, CliError> {
    names
        .iter()
        .position(|n| n == s)
        .ok_or_else(|| CliError::Usage(format!("unknown atom {s:?}")))
}

fn system_json(sys: &AnnulusSystem) -> Value {
    serde_json::to_value(sys.to_json()).expect("serializable")
}

fn load_system(cfg: &RunConfig) -> Result<AnnulusSystem, CliError> {
    let (path, j): (_, SystemJson) = load_json(cfg, "system")?;
    AnnulusSystem::from_json(&j).map_err(|e| input_error(&path, e))
}

fn annulus(cfg: &RunConfig, cmd: &AnnulusCmd) -> Result<Outcome, CliError> {
    match cmd {
        AnnulusCmd::Cylinder { max_level } => {
            let model = RegularTreeModel::binary(cfg.depth).map_err(failed)?;
            let level = max_level.unwrap_or(cfg.depth.saturating_sub(1));
            let sys = cylinder_system(&model, cfg.depth, level).map_err(failed)?;
            Ok(Outcome::json(true, system_json(&sys)))
        }
        AnnulusCmd::Check { sample } => {
            let sys = load_system(cfg)?;
            let idx: Vec<usize> = if sample.is_empty() {
                crate::annulus::check_atoms(sys.universe_len())
            } else {
                sample.iter().map(|s| sys.atom(s)).collect::<Result<_, _>>().map_err(failed)?
            };
            let r = check_axioms(&sys, &idx, cfg.a3_threshold).map_err(failed)?;
            let pass = r.a3_failures.is_empty() && r.a4_failures.is_empty();
            Ok(Outcome::json(pass, json!({"report": r})))
        }
        AnnulusCmd::Crossratio { sample } => {
            let sys = load_system(cfg)?;
            let idx: Vec<usize> = sample.iter().map(|s| sys.atom(s)).collect::<Result<_, _>>().map_err(failed)?;
            let t = induced_crossratio(&sys, &idx).map_err(failed)?;
            Ok(Outcome::json(true, json!({"table": t.to_json()})))
        }
        AnnulusCmd::Metrics { minus, plus } => {
            let (_, names, d) = binary_universe(cfg)?;
            let side = |s: &[String]| s.iter().map(|a| atom_index(&names, a)).collect::<Result<Vec<_>, _>>();
            let a = Annulus::from_atoms(names.len(), &side(minus)?, &side(plus)?).map_err(failed)?;
            let (l, m) = annulus_metrics(&a, &d).map_err(failed)?;
            Ok(Outcome::json(true, json!({"lambda": rat(l), "mu": rat(m)})))
        }
        AnnulusCmd::Separate { x, y, s } => {
            let (model, names, d) = binary_universe(cfg)?;
            let swap = atom_permutation(&TreeAutomorphism::root_swap(model), cfg.depth).map_err(failed)?;
            let a = small_separating_annulus(atom_index(&names, x)?, atom_index(&names, y)?, &[swap], *s, &d)
                .map_err(failed)?;
            let sys = AnnulusSystem::new(names, vec![a]).map_err(failed)?;
            Ok(Outcome::json(true, system_json(&sys)))
        }
        AnnulusCmd::Cover { x, y, z } => {
            let (model, names, _) = binary_universe(cfg)?;
            let t = [atom_index(&names, x)?, atom_index(&names, y)?, atom_index(&names, z)?];
            let atoms = model.level(cfg.depth);
            let deepest = (0..3)
                .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
                .map(|(i, j)| common_prefix_len(&atoms[t[i]], &atoms[t[j]]))
                .max()
                .expect("three pairs");
            let k = (deepest + 1).min(cfg.depth);
            let n = names.len();
            let nb = t.map(|a| {
                let mut r = fixedbitset::FixedBitSet::with_capacity(n);
                r.extend((0..n).filter(|&b| atoms[b][..k] == atoms[a][..k]));
                r
            });
            let maps = vec![
                (0..n).collect(),
                atom_permutation(&TreeAutomorphism::root_swap(model), cfg.depth).map_err(failed)?,
            ];
            let sys = build_cover_system(names, &[t], &[nb], &maps).map_err(failed)?;
            Ok(Outcome::json(true, system_json(&sys)))
        }
        AnnulusCmd::Refine { n } => {
            let (model, names, d) = binary_universe(cfg)?;
            let sys = match cfg.input {
                Some(_) => load_system(cfg)?,
                None => AnnulusSystem::empty(names).map_err(failed)?,
            };
            let swap = atom_permutation(&TreeAutomorphism::root_swap(model), cfg.depth).map_err(failed)?;
            let next = refine_system_step(&sys, *n, &d, &[swap]).map_err(failed)?;
            Ok(Outcome::json(true, system_json(&next)))
        }
    }
}

fn parse_model(s: &str) -> Result<RegularTreeModel, CliError> {
    let bad = || CliError::Usage(format!("unknown model {s:?}; use binary, regular:<d> or bt:<p>"));
    let model = match s.split_once(':') {
        None if s == "binary" => RegularTreeModel::binary(1),
        Some(("regular", d)) => RegularTreeModel::regular(d.parse().map_err(|_| bad())?, 1),
        Some(("bt", p)) => RegularTreeModel::bruhat_tits(p.parse().map_err(|_| bad())?, 1),
        _ => return Err(bad()),
    };
    model.map_err(failed)
}

fn ends(cfg: &RunConfig, m: &ModelArg, pts: &[&String]) -> Result<(RegularTreeModel, Vec<BoundaryPoint>), CliError> {
    let t = parse_model(&m.model)?.with_depth(cfg.depth);
    let pts = pts
        .iter()
        .map(|s| {
            let x: BoundaryPoint = s.parse().map_err(failed)?;
            t.validate_point(&x).map_err(failed)?;
            Ok(x)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((t, pts))
}

fn mobius(cfg: &RunConfig, m: [[i64; 2]; 2]) -> Result<Mobius, CliError> {
    Mobius::from_i64(cfg.prime, cfg.precision, m).map_err(failed)
}

fn automorphism(cfg: &RunConfig, m: [[i64; 2]; 2]) -> Result<TreeAutomorphism, CliError> {
    Ok(TreeAutomorphism::Mobius {
        m: mobius(cfg, m)?,
        depth: cfg.depth,
    })
}

fn powers(g: &TreeAutomorphism, n: u32) -> Result<Vec<TreeAutomorphism>, CliError> {
    (1..=n).map(|i| g.pow(i).map_err(failed)).collect()
}

fn strings(v: &[BoundaryPoint]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn boundary(cfg: &RunConfig, cmd: &BoundaryCmd) -> Result<Outcome, CliError> {
    match cmd {
        BoundaryCmd::Crossratio { model, x, y, z, w } => {
            let (t, p) = ends(cfg, model, &[x, y, z, w])?;
            let v = boundary_crossratio(&t, &p[0], &p[1], &p[2], &p[3]).map_err(failed)?;
            Ok(Outcome::json(true, json!({"crossratio": v})))
        }
        BoundaryCmd::Table { model, points } => {
            let (t, p) = ends(cfg, model, &points.iter().collect::<Vec<_>>())?;
            let tbl = boundary_table(&t, &p).map_err(failed)?;
            Ok(Outcome::json(true, json!({"table": tbl.to_json()})))
        }
        BoundaryCmd::Median { model, x, y, z } => {
            let (t, p) = ends(cfg, model, &[x, y, z])?;
            let m = median_of_ends(&t, &p[0], &p[1], &p[2]).map_err(failed)?;
            Ok(Outcome::json(true, json!({"median": vertex_name(&m)})))
        }
        BoundaryCmd::Rho { model, ends: e } => {
            let (t, p) = ends(cfg, model, &e.iter().collect::<Vec<_>>())?;
            let v = ray_rho(&t, [&p[0], &p[1], &p[2]], [&p[3], &p[4], &p[5]]).map_err(failed)?;
            Ok(Outcome::json(true, json!({"rho": v})))
        }
        BoundaryCmd::Approx { model, points } => {
            let (t, p) = ends(cfg, model, &points.iter().collect::<Vec<_>>())?;
            let a = approximating_subtree(&t, &p).map_err(failed)?;
            let emb: Vec<&str> = a.embedding.iter().map(|&v| a.tree.name(v)).collect();
            Ok(emit_tree(cfg, &a.tree, json!({"embedding": emb})))
        }
        BoundaryCmd::Interpolate { model, a, b, c, length } => {
            let (t, p) = ends(cfg, model, &[a, b, c])?;
            let window = interpolated_ray(&t, &p[0], &p[1], &p[2], *length).map_err(failed)?;
            let r = ray_triple_geodesic(&t, &p[0], &p[1], &window).map_err(failed)?;
            let pass = r.rho_error == 0 && r.centre_deviation == Rational::from_integer(0);
            Ok(Outcome::json(
                pass,
                json!({"window": strings(&window), "rho_error": r.rho_error, "centre_deviation": rat(r.centre_deviation)}),
            ))
        }
        BoundaryCmd::Classify { matrix } => {
            let c = classify_automorphism(&automorphism(cfg, *matrix)?).map_err(failed)?;
            Ok(Outcome::json(true, json!({"class": c})))
        }
        BoundaryCmd::Collapse { matrix, powers: n } => {
            let seq = powers(&automorphism(cfg, *matrix)?, *n)?;
            let lim = collapsing_limit(&seq, cfg.depth, cfg.base).map_err(failed)?;
            Ok(Outcome::json(lim.is_some(), json!({"limit": lim})))
        }
        BoundaryCmd::Gerasimov { matrix, powers: n } => {
            let seq = powers(&automorphism(cfg, *matrix)?, *n)?;
            let lim = gerasimov_limit(&seq, cfg.budget, cfg.depth, cfg.base).map_err(failed)?;
            Ok(Outcome::json(true, json!({"limit": lim})))
        }
        BoundaryCmd::Conical { matrix, x } => {
            let x: BoundaryPoint = x.parse().map_err(failed)?;
            let w = conical_witness(&x, &automorphism(cfg, *matrix)?, cfg.depth).map_err(failed)?;
            Ok(Outcome::json(true, json!({"witness": w})))
        }
    }
}

/// `inf`, or a rational `a/b`.
fn point(cfg: &RunConfig, s: &str) -> Result<ProjPoint, CliError> {
    let s = s.trim();
    if s == "inf" || s == "∞" {
        return Ok(ProjPoint::infinity(cfg.prime));
    }
    let r = parse_rational(s).map_err(|e| CliError::Usage(e.to_string()))?;
    let a = Padic::from_ratio(cfg.prime, cfg.precision, *r.numer(), *r.denom()).map_err(failed)?;
    ProjPoint::from_scalar(&a).map_err(failed)
}

fn point_json(cfg: &RunConfig, x: &ProjPoint) -> Value {
    let word = x.word(cfg.depth).ok().map(|w| BoundaryPoint::truncated(w).to_string());
    json!({"point": x.to_json(), "end": word})
}

fn mobius_json(m: &Mobius) -> Value {
    json!([[m.a.to_string(), m.b.to_string()], [m.c.to_string(), m.d.to_string()]])
}

fn padic(cfg: &RunConfig, cmd: &PadicCmd) -> Result<Outcome, CliError> {
    match cmd {
        PadicCmd::Act { matrix, x } => {
            let y = mobius_act(&mobius(cfg, *matrix)?, &point(cfg, x)?).map_err(failed)?;
            Ok(Outcome::json(true, json!({"image": point_json(cfg, &y)})))
        }
        PadicCmd::Solve { x1, x2, x3 } => {
            let m = solve_sharply3(&point(cfg, x1)?, &point(cfg, x2)?, &point(cfg, x3)?).map_err(failed)?;
            Ok(Outcome::json(true, json!({"matrix": mobius_json(&m)})))
        }
        PadicCmd::Crossratio { x1, x2, x3, x4 } => {
            let p = [point(cfg, x1)?, point(cfg, x2)?, point(cfg, x3)?, point(cfg, x4)?];
            let v = classical_crossratio_valuation(&p[0], &p[1], &p[2], &p[3]).map_err(failed)?;
            let (model, map) = bt_correspondence(cfg.prime, cfg.depth, cfg.precision).map_err(failed)?;
            let e: Vec<BoundaryPoint> = p.iter().map(|x| map.to_boundary(x)).collect::<Result<_, _>>().map_err(failed)?;
            let tree = boundary_crossratio(&model, &e[0], &e[3], &e[1], &e[2]).ok();
            Ok(Outcome::json(true, json!({"valuation": v, "tree_crossratio": tree})))
        }
        PadicCmd::Fixed { matrix } => {
            let m = mobius(cfg, *matrix)?;
            let v = match fixed_points(&m).map_err(failed)? {
                FixedPoints::Attracting { attracting, repelling } => json!({
                    "attracting": point_json(cfg, &attracting),
                    "repelling": point_json(cfg, &repelling),
                    "translation_length": m.translation_length().map_err(failed)?,
                }),
                FixedPoints::Balanced => json!({"balanced": true}),
            };
            Ok(Outcome::json(true, v))
        }
        PadicCmd::End { x } => Ok(Outcome::json(true, point_json(cfg, &point(cfg, x)?))),
    }
}

fn finite(cfg: &RunConfig, cmd: &FiniteCmd) -> Result<Outcome, CliError> {
    let verify = |g: &FinitePermGroup, k: usize| -> Result<Outcome, CliError> {
        let c = verify_sharp_transitive(g, k, DEFAULT_CAP).map_err(failed)?;
        Ok(Outcome::json(c.is_sharp(), json!({"n": g.n, "k": k, "certificate": c})))
    };
    match cmd {
        FiniteCmd::Pgl2 { q, k } => verify(&pgl2_fq_action(*q).map_err(failed)?, *k),
        FiniteCmd::Dickson => {
            let nf = NearField::dickson(9).map_err(failed)?;
            let r = nf.report();
            Ok(Outcome::json(r.left_distributivity_witness.is_some(), json!({"near_field": r})))
        }
        FiniteCmd::Affine { q, dickson, translations, k } => {
            let nf = if *dickson {
                NearField::dickson(9)
            } else {
                FiniteField::new(*q).map(|f| NearField::from_field(&f))
            }
            .map_err(failed)?;
            let g = if *translations { translation_group(&nf) } else { affine_group(&nf) };
            verify(&g, *k)
        }
        FiniteCmd::Verify { k } => {
            let (path, g): (_, FinitePermGroup) = load_json(cfg, "group")?;
            let g = FinitePermGroup::new(g.n, g.generators).map_err(|e| input_error(&path, e))?;
            verify(&g, *k)
        }
    }
}
