//! Interpolating-sequence diagnostics on finite prefixes.
//!
//! Every statement about an infinite sequence is checked on the nodes given,
//! so reports carry the label [`FINITE_TRUNCATION`]. Whether strong separation
//! implies interpolation on the bidisk is open; the tool reports evidence only.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lmi::TwoBlockProblem;
use crate::numerics::{hermitian_eig, CMatrix, C64};
use crate::pick::{solve_bidisk, solve_disk, PickCertificate, PickData, PolydiskPoint, SolverOptions};

pub const FINITE_TRUNCATION: &str = "finite truncation";
/// Eigenvalue tolerance for kernel PSD tests.
pub const KERNEL_PSD_TOL: f64 = 1e-9;
/// Resolution of ε and Gleason-distance bisections.
pub const EPSILON_RESOLUTION: f64 = 1e-5;
pub const M_RESOLUTION: f64 = 1e-3;
/// Upper end of the bound search in the finite conditions; hitting it is reported.
pub const M_CAP: f64 = 1e6;

/// Normalized kernel matrix on a node list with per-variable admissibility.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub nodes: Vec<PolydiskPoint>,
    pub entries: CMatrix,
    pub admissible: Vec<bool>,
    pub min_eigenvalue: f64,
}

fn check_nodes(nodes: &[PolydiskPoint], d: usize) -> Result<()> {
    for p in nodes {
        if p.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "node of dimension {} in a d = {d} problem",
                p.dim()
            )));
        }
        if p.sup_norm() >= 1.0 {
            return Err(Error::OutsideDomain);
        }
    }
    Ok(())
}

fn check_distinct(nodes: &[PolydiskPoint]) -> Result<()> {
    for i in 0..nodes.len() {
        for j in 0..i {
            if nodes[i] == nodes[j] {
                return Err(Error::InvalidData(format!("nodes {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

/// `[1 − λ_iʳ λ̄_jʳ]`
fn coordinate_weight(nodes: &[PolydiskPoint], r: usize) -> CMatrix {
    let n = nodes.len();
    CMatrix::from_fn(n, n, |i, j| {
        C64::new(1.0, 0.0) - nodes[i].coords()[r] * nodes[j].coords()[r].conj()
    })
}

/// Normalized Grammian of the Szegő kernel `Π_r (1 − ζʳ λ̄ʳ)⁻¹`.
pub fn szego_grammian(nodes: &[PolydiskPoint], d: usize) -> Result<KernelMatrix> {
    check_nodes(nodes, d)?;
    let n = nodes.len();
    let mut k = CMatrix::from_element(n, n, C64::new(1.0, 0.0));
    for r in 0..d {
        k.component_div_assign(&coordinate_weight(nodes, r));
    }
    let mut admissible = Vec::with_capacity(d);
    for r in 0..d {
        let weighted = k.component_mul(&coordinate_weight(nodes, r));
        admissible.push(n == 0 || hermitian_eig(&weighted)?.min() >= -KERNEL_PSD_TOL);
    }
    let scale: Vec<f64> = (0..n).map(|i| k[(i, i)].re.sqrt()).collect();
    let mut g = CMatrix::from_fn(n, n, |i, j| k[(i, j)] / (scale[i] * scale[j]));
    for i in 0..n {
        g[(i, i)] = C64::new(1.0, 0.0);
    }
    let min_eigenvalue = if n == 0 { 0.0 } else { hermitian_eig(&g)?.min() };
    Ok(KernelMatrix {
        nodes: nodes.to_vec(),
        entries: g,
        admissible,
        min_eigenvalue,
    })
}

/// `|a − b| / |1 − ā b|`
pub fn pseudo_hyperbolic(a: C64, b: C64) -> f64 {
    (a - b).norm() / (C64::new(1.0, 0.0) - a.conj() * b).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GleasonMode {
    /// Coordinatewise pseudo-hyperbolic maximum.
    ClosedForm,
    /// Largest `t` for which `λ ↦ 0, ζ ↦ t` is solvable, by bisection.
    Oracle,
}

fn two_point_feasible(lambda: &PolydiskPoint, zeta: &PolydiskPoint, t: f64, opts: &SolverOptions) -> Result<bool> {
    let d = lambda.dim();
    let data = PickData::new(
        d,
        vec![lambda.clone(), zeta.clone()],
        vec![C64::new(0.0, 0.0), C64::new(t, 0.0)],
    )?;
    match d {
        1 => Ok(solve_disk(&data, opts.tol)?.feasible),
        2 => Ok(solve_bidisk(&data, opts)?.feasible),
        _ => Err(Error::Unsupported(format!("Pick oracle for d = {d}"))),
    }
}

/// Gleason distance `ρ(ζ, λ)`: the sup of `|φ(ζ)|` over the unit ball
/// functions vanishing at `λ`.
pub fn gleason_distance(zeta: &PolydiskPoint, lambda: &PolydiskPoint, mode: GleasonMode) -> Result<f64> {
    if zeta.dim() != lambda.dim() {
        return Err(Error::DimensionMismatch("points of different dimension".into()));
    }
    if zeta.sup_norm() >= 1.0 || lambda.sup_norm() >= 1.0 {
        return Err(Error::OutsideDomain);
    }
    if zeta == lambda {
        return Ok(0.0);
    }
    match mode {
        GleasonMode::ClosedForm => Ok(zeta
            .coords()
            .iter()
            .zip(lambda.coords())
            .map(|(&a, &b)| pseudo_hyperbolic(a, b))
            .fold(0.0, f64::max)),
        GleasonMode::Oracle => {
            let opts = SolverOptions::default();
            bisect_sup(0.0, 1.0, EPSILON_RESOLUTION, |t| two_point_feasible(lambda, zeta, t, &opts))
        }
    }
}

/// Largest `x` in `[lo, hi]` with `feasible(x)`, assuming monotonicity and
/// feasibility at `lo`.
fn bisect_sup(mut lo: f64, mut hi: f64, resolution: f64, mut feasible: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexSeparation {
    pub index: usize,
    /// The peaking problem at height `ε` is solvable.
    pub feasible: bool,
    /// Largest solvable height, by bisection.
    pub sup_epsilon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub label: &'static str,
    pub epsilon: f64,
    pub min_distance: f64,
    pub weak: bool,
    pub strong: bool,
    pub per_index: Vec<IndexSeparation>,
}

fn peaking_feasible(nodes: &[PolydiskPoint], i: usize, eps: f64, opts: &SolverOptions) -> Result<bool> {
    let d = nodes[0].dim();
    let values = (0..nodes.len())
        .map(|j| C64::new(if j == i { eps } else { 0.0 }, 0.0))
        .collect();
    let data = PickData::new(d, nodes.to_vec(), values)?;
    match d {
        1 => Ok(solve_disk(&data, opts.tol)?.feasible),
        2 => Ok(solve_bidisk(&data, opts)?.feasible),
        _ => Err(Error::Unsupported(format!("separation for d = {d}"))),
    }
}

/// Weak separation (pairwise Gleason distance at least `ε`) and strong
/// separation (each node carries a unit-ball function of height `ε` vanishing
/// at the other nodes).
pub fn separation_report(nodes: &[PolydiskPoint], epsilon: f64, opts: &SolverOptions) -> Result<SeparationReport> {
    let d = nodes.first().map_or(1, |p| p.dim());
    check_nodes(nodes, d)?;
    check_distinct(nodes)?;
    let mut min_distance = 1.0f64;
    for i in 0..nodes.len() {
        for j in 0..i {
            min_distance = min_distance.min(gleason_distance(&nodes[i], &nodes[j], GleasonMode::ClosedForm)?);
        }
    }
    let mut per_index = Vec::with_capacity(nodes.len());
    for i in 0..nodes.len() {
        let feasible = peaking_feasible(nodes, i, epsilon, opts)?;
        let sup_epsilon = if nodes.len() == 1 {
            1.0
        } else {
            bisect_sup(0.0, 1.0, EPSILON_RESOLUTION, |e| peaking_feasible(nodes, i, e, opts))?
        };
        per_index.push(IndexSeparation {
            index: i,
            feasible,
            sup_epsilon,
        });
    }
    Ok(SeparationReport {
        label: FINITE_TRUNCATION,
        epsilon,
        min_distance,
        weak: min_distance >= epsilon,
        strong: per_index.iter().all(|v| v.feasible),
        per_index,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlesonReport {
    /// `inf_i Π_{j≠i} ρ(λ_i, λ_j)`
    pub value: f64,
    pub warning: Option<String>,
}

pub fn carleson_product(nodes: &[C64]) -> Result<CarlesonReport> {
    if nodes.iter().any(|z| z.norm() >= 1.0) {
        return Err(Error::OutsideDomain);
    }
    let mut value = 1.0f64;
    let mut warning = None;
    for (i, &a) in nodes.iter().enumerate() {
        let mut prod = 1.0;
        for (j, &b) in nodes.iter().enumerate() {
            if i != j {
                if a == b {
                    warning = Some(format!("nodes {} and {} coincide", i.min(j), i.max(j)));
                }
                prod *= pseudo_hyperbolic(a, b);
            }
        }
        value = value.min(prod);
    }
    Ok(CarlesonReport { value, warning })
}

/// Smallest bound found for a finite condition, with its certificate.
#[derive(Debug, Clone)]
pub struct FiniteCondition {
    pub label: &'static str,
    pub bound: f64,
    /// The search reached [`M_CAP`] without a feasible point.
    pub capped: bool,
    pub certificate: Option<PickCertificate>,
}

/// `[1 − λ̄_iʳ λ_jʳ]`
fn conjugate_weight(nodes: &[PolydiskPoint], r: usize) -> CMatrix {
    coordinate_weight(nodes, r).map(|z| z.conj())
}

fn finite_condition(
    nodes: &[PolydiskPoint],
    opts: &SolverOptions,
    target: impl Fn(f64, usize, usize) -> f64,
) -> Result<FiniteCondition> {
    check_nodes(nodes, 2)?;
    check_distinct(nodes)?;
    if nodes.is_empty() {
        return Err(Error::InvalidData("at least one node is required".into()));
    }
    let n = nodes.len();
    let (w1, w2) = (conjugate_weight(nodes, 0), conjugate_weight(nodes, 1));
    let attempt = |m: f64| -> Result<Option<PickCertificate>> {
        let c = CMatrix::from_fn(n, n, |i, j| C64::new(target(m, i, j), 0.0));
        let out = TwoBlockProblem::new(c, w1.clone(), w2.clone())?.solve(&opts.lmi())?;
        Ok(out.feasible.then_some(PickCertificate {
            gamma1: out.gamma1,
            gamma2: out.gamma2,
            residual: out.residual,
            iterations: out.iterations,
            heuristic: out.heuristic,
        }))
    };
    if let Some(cert) = attempt(1.0)? {
        return Ok(FiniteCondition {
            label: FINITE_TRUNCATION,
            bound: 1.0,
            capped: false,
            certificate: Some(cert),
        });
    }
    let Some(mut best) = attempt(M_CAP)? else {
        return Ok(FiniteCondition {
            label: FINITE_TRUNCATION,
            bound: M_CAP,
            capped: true,
            certificate: None,
        });
    };
    let (mut lo, mut hi) = (1.0, M_CAP);
    while hi - lo > M_RESOLUTION {
        // geometric steps while the bracket spans orders of magnitude
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        match attempt(mid)? {
            Some(cert) => {
                hi = mid;
                best = cert;
            }
            None => lo = mid,
        }
    }
    Ok(FiniteCondition {
        label: FINITE_TRUNCATION,
        bound: hi,
        capped: false,
        certificate: Some(best),
    })
}

/// Smallest `M ≥ 1` with `M δ_ij − 1 = Γ¹_ij(1 − λ̄_i¹λ_j¹) + Γ²_ij(1 − λ̄_i²λ_j²)`
/// for PSD `Γ¹, Γ²`, to within [`M_RESOLUTION`].
pub fn finite_condition_a(nodes: &[PolydiskPoint], opts: &SolverOptions) -> Result<FiniteCondition> {
    finite_condition(nodes, opts, |m, i, j| if i == j { m - 1.0 } else { -1.0 })
}

/// Smallest `N ≥ 1` with `N − δ_ij = Γ¹_ij(1 − λ̄_i¹λ_j¹) + Γ²_ij(1 − λ̄_i²λ_j²)`.
pub fn finite_condition_b(nodes: &[PolydiskPoint], opts: &SolverOptions) -> Result<FiniteCondition> {
    finite_condition(nodes, opts, |m, i, j| if i == j { m - 1.0 } else { m })
}
