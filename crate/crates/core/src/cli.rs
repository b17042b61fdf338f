//! Command-line front end and JSON artifact formats.
//!
//! Exit codes: 0 pass or feasible, 2 fail or infeasible, 1 error. Every
//! command is deterministic given its flags; reports embed the seed, the
//! tolerances and the tool version. Artifacts are written atomically.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agler::{adr_bound_check, generate_commuting_contractions, knese_build, schwarz_pick_slack, vonneumann_test};
use crate::corona::{corona_delta_sweep, Poly, PolyTuple};
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C64};
use crate::pick::{
    polydisk_necessary, solve_bidisk, solve_disk, PickCertificate, PickData, PolydiskPoint, SolverOptions,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::realization::{
    build_lurking_isometry_bidisk, build_lurking_isometry_disk, interpolation_residual, sample_solutions, Realization,
};
use crate::sequences::{separation_report, szego_grammian};
use crate::variety::{distinguished_check, grid_axis, spread, uniqueness_sample, MatrixInnerFunction};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// A complex number on the wire.
pub type Pair = [f64; 2];

fn to_pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn from_pair(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| to_pair(m[(i, j)])).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<Pair>]) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidData("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| from_pair(rows[i][j])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub d: usize,
    pub nodes: Vec<Vec<Pair>>,
    pub values: Vec<Pair>,
}

impl ProblemFile {
    pub fn from_data(data: &PickData) -> Self {
        Self {
            d: data.dim(),
            nodes: data.nodes().iter().map(|p| p.coords().iter().copied().map(to_pair).collect()).collect(),
            values: data.values().iter().copied().map(to_pair).collect(),
        }
    }

    pub fn to_data(&self) -> Result<PickData> {
        let nodes = self
            .nodes
            .iter()
            .map(|p| PolydiskPoint(p.iter().copied().map(from_pair).collect()))
            .collect();
        PickData::new(self.d, nodes, self.values.iter().copied().map(from_pair).collect())
    }
}

/// Node list without targets, for the sequence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodesFile {
    pub d: usize,
    pub nodes: Vec<Vec<Pair>>,
}

impl NodesFile {
    pub fn to_points(&self) -> Result<Vec<PolydiskPoint>> {
        self.nodes
            .iter()
            .map(|p| {
                if p.len() != self.d {
                    return Err(Error::DimensionMismatch(format!("node with {} coordinates, d = {}", p.len(), self.d)));
                }
                Ok(PolydiskPoint(p.iter().copied().map(from_pair).collect()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub gamma1: Vec<Vec<Pair>>,
    pub gamma2: Vec<Vec<Pair>>,
    pub residual: f64,
    pub iterations: usize,
    pub heuristic: bool,
}

impl CertificateFile {
    pub fn from_certificate(c: &PickCertificate) -> Self {
        Self {
            gamma1: matrix_to_rows(&c.gamma1),
            gamma2: matrix_to_rows(&c.gamma2),
            residual: c.residual,
            iterations: c.iterations,
            heuristic: c.heuristic,
        }
    }

    pub fn to_certificate(&self) -> Result<PickCertificate> {
        Ok(PickCertificate {
            gamma1: rows_to_matrix(&self.gamma1)?,
            gamma2: rows_to_matrix(&self.gamma2)?,
            residual: self.residual,
            iterations: self.iterations,
            heuristic: self.heuristic,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationFile {
    pub dims: Vec<usize>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<Pair>>,
}

impl RealizationFile {
    pub fn from_realization(r: &Realization) -> Self {
        Self {
            dims: r.dims().to_vec(),
            v: matrix_to_rows(r.matrix()),
        }
    }

    pub fn to_realization(&self) -> Result<Realization> {
        Realization::new(self.dims.clone(), rows_to_matrix(&self.v)?)
    }
}

/// Matrix inner function: output size `k` and the unitary `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerFile {
    pub k: usize,
    #[serde(rename = "V")]
    pub v: Vec<Vec<Pair>>,
}

impl InnerFile {
    pub fn from_inner(f: &MatrixInnerFunction) -> Self {
        Self {
            k: f.size(),
            v: matrix_to_rows(f.matrix()),
        }
    }

    pub fn to_inner(&self) -> Result<MatrixInnerFunction> {
        MatrixInnerFunction::new(self.k, rows_to_matrix(&self.v)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyEntry {
    pub coeffs: Vec<(usize, usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialFile {
    pub d: usize,
    pub polys: Vec<PolyEntry>,
}

impl PolynomialFile {
    pub fn from_tuple(t: &PolyTuple) -> Self {
        Self {
            d: t.d,
            polys: t
                .polys
                .iter()
                .map(|p| PolyEntry {
                    coeffs: p.terms().iter().map(|&(i, j, c)| (i, j, c.re, c.im)).collect(),
                })
                .collect(),
        }
    }

    pub fn to_tuple(&self) -> Result<PolyTuple> {
        let polys = self
            .polys
            .iter()
            .map(|p| Poly::new(self.d, p.coeffs.iter().map(|&(i, j, a, b)| (i, j, C64::new(a, b))).collect()))
            .collect::<Result<_>>()?;
        PolyTuple::new(self.d, polys)
    }
}

#[derive(Parser, Debug)]
#[command(name = "pickkit")]
#[command(about = "Nevanlinna-Pick interpolation on the disk and bidisk")]
#[command(version)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Solver and PSD tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Points per axis for grid-based checks.
    #[arg(long, global = true, default_value_t = 101)]
    pub grid: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, alias = "count", default_value_t = 8)]
    pub samples: usize,
    /// Where to write the JSON artifact or report (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<String>,
}

impl Common {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: None,
        }
    }

    fn meta(&self, command: &str) -> Value {
        json!({
            "tool": "pickkit",
            "version": VERSION,
            "command": command,
            "seed": self.seed,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "grid": self.grid,
            "samples": self.samples,
        })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide solvability; writes the certificate when one is found.
    Solve { problem: String },
    /// Build an interpolant as a transfer-function realization.
    Realize {
        problem: String,
        /// Certificate from `solve`; bidisk problems are solved first when absent.
        #[arg(long)]
        cert: Option<String>,
    },
    /// Evaluate a realization at a point given as `re,im[,re,im]`.
    Eval {
        realization: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Sample several interpolants and locate where they disagree.
    Sample {
        problem: String,
        #[arg(long)]
        cert: Option<String>,
    },
    /// Pass/fail diagnostics.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Subcommand, Debug)]
pub enum CheckCommand {
    /// `‖φ(T)‖ ≤ 1` over seeded commuting contractive tuples.
    Vonneumann {
        realization: String,
        /// Size of the generated matrices.
        #[arg(long, default_value_t = 4)]
        size: usize,
    },
    /// Schwarz-Pick slack on a real grid; a Knese construction when no file is given.
    Schwarzpick { realization: Option<String> },
    /// Higher-order derivative bound at one point.
    Adr {
        realization: String,
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        w: String,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
    },
    /// Weak and strong separation of a node list.
    Separation {
        nodes: String,
        #[arg(long)]
        eps: f64,
    },
    /// Normalized Szegő Grammian of a node list.
    Grammian { nodes: String },
    /// Toeplitz-corona certificate on a node list.
    Corona {
        polys: String,
        #[arg(long)]
        nodes: String,
        #[arg(long)]
        delta: f64,
        /// Also sweep δ over this many steps in [0, delta].
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Distinguished-variety test of a matrix inner function.
    Variety {
        inner: Option<String>,
        /// Random pure function instead of a file: `k,n`.
        #[arg(long)]
        random: Option<String>,
    },
    /// Agreement grid of sampled solutions.
    Uniqueness {
        problem: String,
        #[arg(long)]
        cert: Option<String>,
        #[arg(long, default_value_t = crate::variety::UNIQUENESS_TOL)]
        agree_tol: f64,
    },
}

/// Output of one command.
struct Outcome {
    code: i32,
    summary: String,
    artifact: Value,
}

pub fn read_input(path: &str) -> Result<String> {
    let mut s = String::new();
    if path == "-" {
        std::io::stdin().read_to_string(&mut s)?;
    } else {
        s = std::fs::read_to_string(path)?;
    }
    Ok(s)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &str) -> Result<T> {
    Ok(serde_json::from_str(&read_input(path)?)?)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn parse_complex(s: &str) -> Result<C64> {
    let parts = parse_reals(s)?;
    match parts.as_slice() {
        [a] => Ok(C64::new(*a, 0.0)),
        [a, b] => Ok(C64::new(*a, *b)),
        _ => Err(Error::InvalidData(format!("expected re,im but got {s:?}"))),
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidData(format!("not a number: {t:?}")))
        })
        .collect()
}

fn parse_point(s: &str) -> Result<PolydiskPoint> {
    let reals = parse_reals(s)?;
    if reals.is_empty() || reals.len() % 2 != 0 {
        return Err(Error::InvalidData(format!("point {s:?} needs re,im pairs")));
    }
    PolydiskPoint::new(reals.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
}

fn fmt_c(z: C64) -> String {
    format!("{:.12e}{:+.12e}i", z.re, z.im)
}

fn load_certificate(data: &PickData, cert: Option<&str>, common: &Common) -> Result<Option<PickCertificate>> {
    if data.dim() != 2 {
        return Ok(None);
    }
    if let Some(path) = cert {
        return Ok(Some(read_json::<CertificateFile>(path)?.to_certificate()?));
    }
    let rep = solve_bidisk(data, &common.solver())?;
    if !rep.feasible {
        return Err(Error::NotSolvable);
    }
    Ok(rep.certificate)
}

fn cmd_solve(path: &str, common: &Common) -> Result<Outcome> {
    let data = read_json::<ProblemFile>(path)?.to_data()?;
    match data.dim() {
        1 => {
            let rep = solve_disk(&data, common.tol)?;
            let min = rep.min_eigenvalue().unwrap_or(0.0);
            Ok(Outcome {
                code: if rep.feasible { EXIT_PASS } else { EXIT_FAIL },
                summary: format!(
                    "{} min_eigenvalue={min:.6e} rank={}",
                    if rep.feasible { "feasible" } else { "infeasible" },
                    rep.rank.unwrap_or(0)
                ),
                artifact: json!({
                    "meta": common.meta("solve"),
                    "feasible": rep.feasible,
                    "min_eigenvalue": min,
                    "rank": rep.rank,
                    "eigenvalues": rep.disk_eigenvalues,
                }),
            })
        }
        2 => {
            let rep = solve_bidisk(&data, &common.solver())?;
            let cert = rep.certificate.as_ref().ok_or(Error::NotSolvable)?;
            let summary = format!(
                "{} residual={:.6e} iterations={} heuristic={}",
                if rep.feasible { "feasible" } else { "infeasible" },
                cert.residual,
                cert.iterations,
                rep.heuristic
            );
            let artifact = if rep.feasible {
                serde_json::to_value(CertificateFile::from_certificate(cert))?
            } else {
                json!({
                    "meta": common.meta("solve"),
                    "feasible": false,
                    "heuristic": rep.heuristic,
                    "residual": cert.residual,
                    "iterations": cert.iterations,
                })
            };
            Ok(Outcome {
                code: if rep.feasible { EXIT_PASS } else { EXIT_FAIL },
                summary,
                artifact,
            })
        }
        _ => {
            let verdicts = polydisk_necessary(&data, &common.solver())?;
            let ok = verdicts.iter().all(|v| v.feasible);
            let worst = verdicts.iter().map(|v| v.residual).fold(0.0, f64::max);
            Ok(Outcome {
                code: if ok { EXIT_PASS } else { EXIT_FAIL },
                summary: format!(
                    "{} pairwise necessary condition over {} pairs, max residual={worst:.6e}",
                    if ok { "holds:" } else { "fails:" },
                    verdicts.len()
                ),
                artifact: json!({
                    "meta": common.meta("solve"),
                    "necessary_condition": ok,
                    "sufficient": false,
                    "pairs": verdicts.iter().map(|v| json!({
                        "p": v.p, "q": v.q, "feasible": v.feasible,
                        "residual": v.residual, "heuristic": v.heuristic,
                    })).collect::<Vec<_>>(),
                }),
            })
        }
    }
}

fn build_realization(data: &PickData, cert: Option<&PickCertificate>, seed: u64) -> Result<Realization> {
    match (data.dim(), cert) {
        (1, _) => build_lurking_isometry_disk(data, Some(seed)),
        (2, Some(c)) => build_lurking_isometry_bidisk(data, c, Some(seed)),
        (d, _) => Err(Error::Unsupported(format!("realization for d = {d}"))),
    }
}

fn cmd_realize(path: &str, cert: Option<&str>, common: &Common) -> Result<Outcome> {
    let data = read_json::<ProblemFile>(path)?.to_data()?;
    let cert = load_certificate(&data, cert, common)?;
    let r = build_realization(&data, cert.as_ref(), common.seed)?;
    let res = interpolation_residual(&r, &data)?;
    Ok(Outcome {
        code: EXIT_PASS,
        summary: format!("realized dims={:?} interpolation_residual={res:.6e}", r.dims()),
        artifact: serde_json::to_value(RealizationFile::from_realization(&r))?,
    })
}

fn cmd_eval(path: &str, point: &str, common: &Common) -> Result<Outcome> {
    let r = read_json::<RealizationFile>(path)?.to_realization()?;
    let p = parse_point(point)?;
    let v = r.evaluate(&p)?;
    Ok(Outcome {
        code: EXIT_PASS,
        summary: format!("value={}", fmt_c(v)),
        artifact: json!({
            "meta": common.meta("eval"),
            "point": p.coords().iter().copied().map(to_pair).collect::<Vec<_>>(),
            "value": to_pair(v),
        }),
    })
}

/// Real grid points `[−0.9, 0.9]^d` for `d ≤ 2`.
fn real_grid(d: usize, grid_n: usize) -> Vec<PolydiskPoint> {
    let axis = grid_axis(grid_n);
    if d == 1 {
        return axis.iter().map(|&x| PolydiskPoint(vec![C64::new(x, 0.0)])).collect();
    }
    let mut pts = Vec::with_capacity(axis.len() * axis.len());
    for &x in &axis {
        for &y in &axis {
            pts.push(PolydiskPoint(vec![C64::new(x, 0.0), C64::new(y, 0.0)]));
        }
    }
    pts
}

fn cmd_sample(path: &str, cert: Option<&str>, common: &Common) -> Result<Outcome> {
    let data = read_json::<ProblemFile>(path)?.to_data()?;
    let cert = load_certificate(&data, cert, common)?;
    let sols = sample_solutions(&data, cert.as_ref(), common.samples, common.seed)?;
    let mut worst: Option<(PolydiskPoint, f64)> = None;
    for p in real_grid(data.dim(), common.grid) {
        let vals = sols.iter().map(|s| s.evaluate(&p)).collect::<Result<Vec<_>>>()?;
        let sp = spread(&vals);
        if worst.as_ref().is_none_or(|(_, w)| sp > *w) {
            worst = Some((p, sp));
        }
    }
    let (point, max_spread) = worst.unwrap_or((PolydiskPoint(vec![]), 0.0));
    let coords: Vec<Pair> = point.coords().iter().copied().map(to_pair).collect();
    Ok(Outcome {
        code: EXIT_PASS,
        summary: format!("sampled {} solutions, max spread={max_spread:.6e} at {coords:?}", sols.len()),
        artifact: json!({
            "meta": common.meta("sample"),
            "solutions": sols.iter().map(RealizationFile::from_realization).collect::<Vec<_>>(),
            "max_spread": max_spread,
            "disagreement": { "point": coords, "spread": max_spread },
        }),
    })
}

fn pass_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_check(check: &CheckCommand, common: &Common) -> Result<Outcome> {
    match check {
        CheckCommand::Vonneumann { realization, size } => {
            let r = read_json::<RealizationFile>(realization)?.to_realization()?;
            let mut norms = Vec::with_capacity(common.samples);
            for k in 0..common.samples {
                let t = generate_commuting_contractions(r.nvars(), *size, common.seed.wrapping_add(k as u64))?;
                norms.push(vonneumann_test(&r, &t)?);
            }
            let max = norms.iter().copied().fold(0.0, f64::max);
            let pass = max <= 1.0 + 1e-8;
            Ok(Outcome {
                code: pass_code(pass),
                summary: format!("{} vonneumann max_norm={max:.12e} over {} tuples", verdict(pass), norms.len()),
                artifact: json!({
                    "meta": common.meta("check vonneumann"),
                    "pass": pass, "size": size, "max_norm": max, "norms": norms, "bound": 1.0 + 1e-8,
                }),
            })
        }
        CheckCommand::Schwarzpick { realization } => {
            let (r, knese) = match realization {
                Some(p) => (read_json::<RealizationFile>(p)?.to_realization()?, None),
                None => {
                    let k = knese_build(common.seed)?;
                    (k.realization.clone(), Some(k))
                }
            };
            let axis: Vec<f64> = (0..common.grid)
                .map(|k| -0.95 + 1.9 * k as f64 / (common.grid.max(2) - 1) as f64)
                .collect();
            let (mut min, mut max_abs) = (f64::INFINITY, 0.0f64);
            for &x in &axis {
                for &y in &axis {
                    let p = PolydiskPoint(vec![C64::new(x, 0.0), C64::new(y, 0.0)][..r.nvars().clamp(1, 2)].to_vec());
                    let s = schwarz_pick_slack(&r, &p)?;
                    min = min.min(s);
                    max_abs = max_abs.max(s.abs());
                }
            }
            let mut pass = min >= -1e-8;
            if knese.is_some() {
                pass &= max_abs <= 1e-6;
            }
            Ok(Outcome {
                code: pass_code(pass),
                summary: format!("{} schwarzpick min_slack={min:.6e} max_abs_slack={max_abs:.6e}", verdict(pass)),
                artifact: json!({
                    "meta": common.meta("check schwarzpick"),
                    "pass": pass, "min_slack": min, "max_abs_slack": max_abs,
                    "knese": knese.as_ref().map(|k| json!({
                        "realization": RealizationFile::from_realization(&k.realization),
                        "resamples": k.resamples,
                        "dependence_threshold": k.dependence_threshold,
                        "equality_tol": 1e-6,
                    })),
                }),
            })
        }
        CheckCommand::Adr { realization, z, w, n1, n2 } => {
            let r = read_json::<RealizationFile>(realization)?.to_realization()?;
            let p = PolydiskPoint::new(vec![parse_complex(z)?, parse_complex(w)?])?;
            let (lhs, rhs) = adr_bound_check(&r, &p, *n1, *n2)?;
            let pass = lhs <= rhs + 1e-6;
            Ok(Outcome {
                code: pass_code(pass),
                summary: format!("{} adr lhs={lhs:.12e} rhs={rhs:.12e}", verdict(pass)),
                artifact: json!({
                    "meta": common.meta("check adr"),
                    "pass": pass, "lhs": lhs, "rhs": rhs, "n1": n1, "n2": n2,
                    "point": p.coords().iter().copied().map(to_pair).collect::<Vec<_>>(),
                }),
            })
        }
        CheckCommand::Separation { nodes, eps } => {
            let pts = read_json::<NodesFile>(nodes)?.to_points()?;
            let rep = separation_report(&pts, *eps, &common.solver())?;
            let pass = rep.weak && rep.strong;
            Ok(Outcome {
                code: pass_code(pass),
                summary: format!(
                    "{} separation weak={} strong={} min_distance={:.6e} ({})",
                    verdict(pass),
                    rep.weak,
                    rep.strong,
                    rep.min_distance,
                    rep.label
                ),
                artifact: json!({ "meta": common.meta("check separation"), "pass": pass, "report": rep }),
            })
        }
        CheckCommand::Grammian { nodes } => {
            let file = read_json::<NodesFile>(nodes)?;
            let g = szego_grammian(&file.to_points()?, file.d)?;
            let pass = g.min_eigenvalue >= -crate::sequences::KERNEL_PSD_TOL;
            Ok(Outcome {
                code: pass_code(pass),
                summary: format!("{} grammian min_eigenvalue={:.6e} admissible={:?}", verdict(pass), g.min_eigenvalue, g.admissible),
                artifact: json!({
                    "meta": common.meta("check grammian"),
                    "pass": pass,
                    "grammian": matrix_to_rows(&g.entries),
                    "admissible": g.admissible,
                    "min_eigenvalue": g.min_eigenvalue,
                }),
            })
        }
        CheckCommand::Corona { polys, nodes, delta, sweep } => {
            let phi = read_json::<PolynomialFile>(polys)?.to_tuple()?;
            let pts = read_json::<NodesFile>(nodes)?.to_points()?;
            let v = crate::corona::toeplitz_corona(&phi, *delta, &pts, &common.solver())?;
            let sweep = sweep
                .map(|steps| corona_delta_sweep(&phi, &pts, 0.0, *delta, steps, &common.solver()))
                .transpose()?;
            let pass = v.pass && sweep.as_ref().is_none_or(|s| s.monotone);
            Ok(Outcome {
                code: pass_code(pass),
                summary: format!("{} corona delta={delta} certificate={}", verdict(pass), v.pass),
                artifact: json!({
                    "meta": common.meta("check corona"),
                    "pass": pass,
                    "label": crate::sequences::FINITE_TRUNCATION,
                    "delta": delta,
                    "certificate_found": v.pass,
                    "heuristic": v.heuristic,
                    "min_eigenvalue": v.min_eigenvalue,
                    "certificate": v.certificate.as_ref().map(CertificateFile::from_certificate),
                    "sweep": sweep,
                }),
            })
        }
        CheckCommand::Variety { inner, random } => {
            let psi = match (inner, random) {
                (Some(p), None) => read_json::<InnerFile>(p)?.to_inner()?,
                (None, Some(spec)) => {
                    let kn = parse_reals(spec)?;
                    if kn.len() != 2 {
                        return Err(Error::InvalidData("--random expects k,n".into()));
                    }
                    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(common.seed);
                    MatrixInnerFunction::random_pure(kn[0] as usize, kn[1] as usize, &mut rng)?
                }
                _ => return Err(Error::InvalidData("give exactly one of an inner-function file or --random".into())),
            };
            let rep = distinguished_check(&psi, common.grid, common.grid)?;
            Ok(Outcome {
                code: pass_code(rep.pass),
                summary: format!(
                    "{} variety max_interior_modulus={:.12e} max_boundary_deviation={:.6e}",
                    verdict(rep.pass),
                    rep.max_interior_modulus,
                    rep.max_boundary_deviation
                ),
                artifact: json!({
                    "meta": common.meta("check variety"),
                    "pass": rep.pass,
                    "inner": InnerFile::from_inner(&psi),
                    "report": rep,
                }),
            })
        }
        CheckCommand::Uniqueness { problem, cert, agree_tol } => {
            let data = read_json::<ProblemFile>(problem)?.to_data()?;
            let cert = load_certificate(&data, cert.as_deref(), common)?
                .ok_or_else(|| Error::DimensionMismatch("uniqueness sampling is for bidisk data".into()))?;
            let grid = uniqueness_sample(&data, &cert, common.samples, common.grid, *agree_tol, common.seed)?;
            let interp = grid
                .solutions
                .iter()
                .map(|s| interpolation_residual(s, &data))
                .try_fold(0.0f64, |a, r| r.map(|r| a.max(r)))?;
            let pass = interp <= 1e-6;
            let agree = grid.rows.iter().filter(|r| r.agree).count();
            Ok(Outcome {
                code: pass_code(pass),
                summary: format!(
                    "{} uniqueness agree={agree}/{} max_spread={:.6e} interpolation_residual={interp:.6e}",
                    verdict(pass),
                    grid.rows.len(),
                    grid.max_spread()
                ),
                artifact: json!({
                    "meta": common.meta("check uniqueness"),
                    "pass": pass,
                    "agree_tol": agree_tol,
                    "agree_count": agree,
                    "max_spread": grid.max_spread(),
                    "interpolation_residual": interp,
                    "rows": grid.rows,
                }),
            })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let common = &cli.common;
    match &cli.command {
        Command::Solve { problem } => cmd_solve(problem, common),
        Command::Realize { problem, cert } => cmd_realize(problem, cert.as_deref(), common),
        Command::Eval { realization, point } => cmd_eval(realization, point, common),
        Command::Sample { problem, cert } => cmd_sample(problem, cert.as_deref(), common),
        Command::Check(c) => cmd_check(c, common),
    }
}

/// Parses `args`, runs the command and returns the exit code. Summaries go
/// to `stdout`; the artifact goes to `--out`, or to `stdout` when absent.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let rendered = e.render().to_string();
            let _ = if informational {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return if informational { EXIT_PASS } else { EXIT_ERROR };
        }
    };
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let body = match serde_json::to_string_pretty(&outcome.artifact) {
        Ok(s) => s + "\n",
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let mut text = String::new();
    let _ = writeln!(text, "{}", outcome.summary);
    match &cli.common.out {
        Some(path) => {
            if let Err(e) = write_atomic(Path::new(path), &body) {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_ERROR;
            }
        }
        None => text.push_str(&body),
    }
    if stdout.write_all(text.as_bytes()).is_err() {
        return EXIT_ERROR;
    }
    outcome.code
}
