//! Pick matrices and certificate feasibility on the disk, bidisk and polydisk.

use crate::error::{Error, Result};
use crate::lmi::{LmiOptions, LmiOutcome, TwoBlockProblem};
use crate::numerics::{hermitian_eig, max_abs, CMatrix, C64};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 50_000;

/// A point `(λ¹, …, λᵈ)` of the open unit polydisk.
#[derive(Debug, Clone, PartialEq)]
pub struct PolydiskPoint(pub Vec<C64>);

impl PolydiskPoint {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm() >= 1.0) {
            return Err(Error::OutsideDomain);
        }
        Ok(Self(coords))
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    /// `max_r |λʳ|`
    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }
}

/// Nodes in the polydisk together with complex target values.
#[derive(Debug, Clone, PartialEq)]
pub struct PickData {
    dim: usize,
    nodes: Vec<PolydiskPoint>,
    values: Vec<C64>,
}

impl PickData {
    pub fn new(dim: usize, nodes: Vec<PolydiskPoint>, values: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData("dimension must be at least 1".into()));
        }
        if nodes.is_empty() {
            return Err(Error::InvalidData("at least one node is required".into()));
        }
        if nodes.len() != values.len() {
            return Err(Error::InvalidData(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if let Some(bad) = nodes.iter().find(|p| p.dim() != dim) {
            return Err(Error::InvalidData(format!(
                "node of dimension {} in a {dim}-dimensional problem",
                bad.dim()
            )));
        }
        if nodes.iter().any(|p| p.sup_norm() >= 1.0) {
            return Err(Error::OutsideDomain);
        }
        for (i, a) in nodes.iter().enumerate() {
            if nodes[..i].iter().any(|b| b == a) {
                return Err(Error::InvalidData(format!("node {i} is repeated")));
            }
        }
        if values.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(Error::InvalidData("non-finite target value".into()));
        }
        Ok(Self { dim, nodes, values })
    }

    /// Convenience constructor from real coordinates and real values.
    pub fn from_real(dim: usize, nodes: &[&[f64]], values: &[f64]) -> Result<Self> {
        let nodes = nodes
            .iter()
            .map(|c| PolydiskPoint::from_real(c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, nodes, values.iter().map(|&w| C64::new(w, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[PolydiskPoint] {
        &self.nodes
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// `[1 − w_i w̄_j]`
    pub fn target_matrix(&self) -> CMatrix {
        let w = &self.values;
        CMatrix::from_fn(self.len(), self.len(), |i, j| {
            C64::new(1.0, 0.0) - w[i] * w[j].conj()
        })
    }

    /// `[1 − λ_iʳ λ̄_jʳ]` for coordinate `r` (0-based).
    pub fn weight(&self, r: usize) -> CMatrix {
        coordinate_weight(&self.nodes, r)
    }
}

pub(crate) fn coordinate_weight(nodes: &[PolydiskPoint], r: usize) -> CMatrix {
    let n = nodes.len();
    CMatrix::from_fn(n, n, |i, j| {
        C64::new(1.0, 0.0) - nodes[i].0[r] * nodes[j].0[r].conj()
    })
}

/// Solver knobs shared by every certificate search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: None,
        }
    }
}

impl SolverOptions {
    pub fn lmi(&self) -> LmiOptions {
        LmiOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            ..LmiOptions::default()
        }
    }
}

/// A PSD pair `(Γ¹, Γ²)` splitting `1 − w_i w̄_j` across the coordinate weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PickCertificate {
    pub gamma1: CMatrix,
    pub gamma2: CMatrix,
    pub residual: f64,
    pub iterations: usize,
    pub heuristic: bool,
}

impl PickCertificate {
    fn from_outcome(out: &LmiOutcome) -> Self {
        Self {
            gamma1: out.gamma1.clone(),
            gamma2: out.gamma2.clone(),
            residual: out.residual,
            iterations: out.iterations,
            heuristic: out.heuristic,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub feasible: bool,
    /// For bidisk problems: the best pair found (a certificate when `feasible`).
    pub certificate: Option<PickCertificate>,
    /// Ascending eigenvalues of the disk Pick matrix.
    pub disk_eigenvalues: Option<Vec<f64>>,
    pub rank: Option<usize>,
    /// The verdict relies on solver stagnation rather than a certificate.
    pub heuristic: bool,
}

impl SolveReport {
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.disk_eigenvalues.as_ref().and_then(|e| e.first().copied())
    }

    pub fn residual(&self) -> Option<f64> {
        self.certificate.as_ref().map(|c| c.residual)
    }
}

/// `[(1 − w_i w̄_j) / (1 − λ_i λ̄_j)]`
pub fn pick_matrix_disk(data: &PickData) -> Result<CMatrix> {
    if data.dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "disk Pick matrix needs d = 1, got d = {}",
            data.dim()
        )));
    }
    Ok(data.target_matrix().component_div(&data.weight(0)))
}

pub fn solve_disk(data: &PickData, tol: f64) -> Result<SolveReport> {
    let p = pick_matrix_disk(data)?;
    let eig = hermitian_eig(&p)?;
    let lam_max = eig.max().max(0.0);
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > tol * lam_max && l > 0.0)
        .count();
    Ok(SolveReport {
        feasible: eig.min() >= -tol,
        certificate: None,
        disk_eigenvalues: Some(eig.eigenvalues),
        rank: Some(rank),
        heuristic: false,
    })
}

pub fn solve_bidisk(data: &PickData, opts: &SolverOptions) -> Result<SolveReport> {
    if data.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "bidisk solver needs d = 2, got d = {}",
            data.dim()
        )));
    }
    let problem = TwoBlockProblem::new(data.target_matrix(), data.weight(0), data.weight(1))?;
    let out = problem.solve(&opts.lmi())?;
    Ok(SolveReport {
        feasible: out.feasible,
        certificate: Some(PickCertificate::from_outcome(&out)),
        disk_eigenvalues: None,
        rank: None,
        heuristic: out.heuristic,
    })
}

/// Verdict of the two-block condition for one coordinate pair `p < q`.
#[derive(Debug, Clone)]
pub struct PairVerdict {
    pub p: usize,
    pub q: usize,
    pub feasible: bool,
    pub residual: f64,
    pub heuristic: bool,
}

/// Pairwise necessary condition on the polydisk: for each `p < q`, PSD blocks
/// weighted by `Π_{r≠q}(1 − λ_iʳ λ̄_jʳ)` and `Π_{r≠p}(1 − λ_iʳ λ̄_jʳ)`.
/// Any infeasible pair certifies that the problem has no solution.
pub fn polydisk_necessary(data: &PickData, opts: &SolverOptions) -> Result<Vec<PairVerdict>> {
    let d = data.dim();
    if d < 2 {
        return Err(Error::DimensionMismatch(format!(
            "pairwise condition needs d >= 2, got d = {d}"
        )));
    }
    let n = data.len();
    let weights: Vec<CMatrix> = (0..d).map(|r| data.weight(r)).collect();
    let product_except = |skip: usize| {
        let mut m = CMatrix::from_element(n, n, C64::new(1.0, 0.0));
        for (r, w) in weights.iter().enumerate() {
            if r != skip {
                m.component_mul_assign(w);
            }
        }
        m
    };
    let mut verdicts = Vec::new();
    for p in 0..d {
        for q in (p + 1)..d {
            let problem =
                TwoBlockProblem::new(data.target_matrix(), product_except(q), product_except(p))?;
            let out = problem.solve(&opts.lmi())?;
            verdicts.push(PairVerdict {
                p,
                q,
                feasible: out.feasible,
                residual: out.residual,
                heuristic: out.heuristic,
            });
        }
    }
    Ok(verdicts)
}

/// `max_ij |1 − w_i w̄_j − (1 − λ_i¹λ̄_j¹)Γ¹_ij − (1 − λ_i²λ̄_j²)Γ²_ij|`
pub fn certificate_residual(cert: &PickCertificate, data: &PickData) -> Result<f64> {
    let n = data.len();
    if data.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "certificate residual needs d = 2, got d = {}",
            data.dim()
        )));
    }
    for g in [&cert.gamma1, &cert.gamma2] {
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "certificate block is {}x{}, data has {n} nodes",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    let r = data.target_matrix()
        - data.weight(0).component_mul(&cert.gamma1)
        - data.weight(1).component_mul(&cert.gamma2);
    Ok(max_abs(&r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{min_eigenvalue, re};

    fn disk(nodes: &[f64], values: &[f64]) -> PickData {
        let n: Vec<&[f64]> = nodes.iter().map(std::slice::from_ref).collect();
        PickData::from_real(1, &n, values).unwrap()
    }

    #[test]
    fn pick_matrix_examples() {
        let p = pick_matrix_disk(&disk(&[0.0, 0.5], &[0.0, 0.5])).unwrap();
        assert!(max_abs(&(p - CMatrix::from_element(2, 2, re(1.0)))) < 1e-15);

        let p = pick_matrix_disk(&disk(&[0.0], &[0.0])).unwrap();
        assert_eq!(p[(0, 0)], re(1.0));

        let p = pick_matrix_disk(&disk(&[0.0, 0.5], &[0.0, 0.9])).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(1.0), re(0.19 / 0.75)]);
        assert!(max_abs(&(p - want)) < 1e-15);
    }

    #[test]
    fn pick_matrix_rejects_bidisk() {
        let data = PickData::from_real(2, &[&[0.0, 0.0]], &[0.0]).unwrap();
        assert!(matches!(pick_matrix_disk(&data), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn disk_verdicts() {
        let r = solve_disk(&disk(&[0.0, 0.5], &[0.0, 0.5]), DEFAULT_TOL).unwrap();
        assert!(r.feasible);
        assert!(r.min_eigenvalue().unwrap().abs() < 1e-12);
        assert_eq!(r.rank, Some(1));

        let r = solve_disk(&disk(&[0.0, 0.5], &[0.0, 0.9]), DEFAULT_TOL).unwrap();
        assert!(!r.feasible);

        let r = solve_disk(&disk(&[0.0], &[2.0]), DEFAULT_TOL).unwrap();
        assert!(!r.feasible);
    }

    #[test]
    fn data_validation() {
        assert!(matches!(PickData::from_real(1, &[&[1.0]], &[0.0]), Err(Error::OutsideDomain)));
        assert!(PickData::from_real(1, &[&[0.1], &[0.1]], &[0.0, 0.0]).is_err());
        assert!(PickData::from_real(2, &[&[0.1]], &[0.0]).is_err());
        assert!(PickData::from_real(1, &[], &[]).is_err());
        assert!(PickData::from_real(1, &[&[0.1]], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn bidisk_examples() {
        let opts = SolverOptions::default();
        let data = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.5]], &[0.0, 0.5]).unwrap();
        let r = solve_bidisk(&data, &opts).unwrap();
        assert!(r.feasible && !r.heuristic);
        let cert = r.certificate.unwrap();
        assert!(cert.residual <= 1e-9);
        assert!((certificate_residual(&cert, &data).unwrap() - cert.residual).abs() < 1e-15);

        let single = PickData::from_real(2, &[&[0.0, 0.0]], &[0.0]).unwrap();
        let r = solve_bidisk(&single, &opts).unwrap();
        assert!(r.feasible);

        let bad = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.0]], &[0.0, 0.9]).unwrap();
        let r = solve_bidisk(&bad, &opts).unwrap();
        assert!(!r.feasible && r.heuristic);
    }

    #[test]
    fn certificate_blocks_are_psd() {
        let data = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.0]], &[0.0, 0.5]).unwrap();
        let cert = solve_bidisk(&data, &SolverOptions::default())
            .unwrap()
            .certificate
            .unwrap();
        for g in [&cert.gamma1, &cert.gamma2] {
            let tr: f64 = (0..g.nrows()).map(|k| g[(k, k)].re).sum();
            assert!(min_eigenvalue(g).unwrap() >= -1e-9 * (1.0 + tr));
        }
    }

    #[test]
    fn residual_examples() {
        let data = PickData::from_real(2, &[&[0.0, 0.0]], &[0.0]).unwrap();
        let zero = PickCertificate {
            gamma1: CMatrix::zeros(1, 1),
            gamma2: CMatrix::zeros(1, 1),
            residual: 0.0,
            iterations: 0,
            heuristic: false,
        };
        assert!((certificate_residual(&zero, &data).unwrap() - 1.0).abs() < 1e-15);
        let exact = PickCertificate {
            gamma1: CMatrix::from_element(1, 1, re(1.0)),
            ..zero.clone()
        };
        assert!(certificate_residual(&exact, &data).unwrap() < 1e-12);

        let data = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.0]], &[0.0, 0.5]).unwrap();
        let mut cert = solve_bidisk(&data, &SolverOptions::default())
            .unwrap()
            .certificate
            .unwrap();
        let before = certificate_residual(&cert, &data).unwrap();
        let delta = 1e-3;
        cert.gamma1[(1, 1)] += re(delta);
        let after = certificate_residual(&cert, &data).unwrap();
        assert!((after - delta * 0.75).abs() <= before + 1e-12);
    }

    #[test]
    fn wrong_size_certificate() {
        let data = PickData::from_real(2, &[&[0.0, 0.0]], &[0.0]).unwrap();
        let cert = PickCertificate {
            gamma1: CMatrix::zeros(2, 2),
            gamma2: CMatrix::zeros(2, 2),
            residual: 0.0,
            iterations: 0,
            heuristic: false,
        };
        assert!(matches!(
            certificate_residual(&cert, &data),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn polydisk_pairs_reduce_to_bidisk() {
        let data = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.0]], &[0.0, 0.9]).unwrap();
        let v = polydisk_necessary(&data, &SolverOptions::default()).unwrap();
        assert_eq!(v.len(), 1);
        assert!(!v[0].feasible);
        let one = PickData::from_real(1, &[&[0.0]], &[0.0]).unwrap();
        assert!(polydisk_necessary(&one, &SolverOptions::default()).is_err());
    }

    #[test]
    fn embedded_counterexample_fails_one_pair() {
        // third coordinate ignored: constant across nodes
        let data = PickData::from_real(3, &[&[0.0, 0.0, 0.3], &[0.5, 0.0, 0.3]], &[0.0, 0.9]).unwrap();
        let v = polydisk_necessary(&data, &SolverOptions::default()).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().any(|p| !p.feasible));
    }
}
