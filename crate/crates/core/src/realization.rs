//! Transfer-function realizations and the lurking-isometry construction.
//!
//! A realization is a square matrix `V = [[A, B], [C, D]]` acting on
//! `ℂ ⊕ H₁ ⊕ … ⊕ H_d` with `A` scalar. Its transfer function is
//!
//! ```text
//! φ(λ) = A + B E_λ (I − D E_λ)⁻¹ C,    E_λ = λ¹ I_{H₁} ⊕ … ⊕ λᵈ I_{H_d}.
//! ```
//!
//! When `V` is an isometry, `φ` lies in the closed unit ball of the
//! Schur-Agler class. Interpolants are produced by mapping the vectors
//! `(1, λ_iʳ g_iʳ)` onto `(w_i, g_iʳ)`, where the `g_iʳ` are Gram vectors of
//! a Pick certificate, and completing that partial isometry to a unitary.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{
    gram_factor, isometry_defect, isometry_extend_with_tol, max_abs, solve, CMatrix, CVector, C64,
    DEFAULT_RANK_TOL,
};
use crate::pick::{certificate_residual, pick_matrix_disk, solve_disk, PickCertificate, PickData, PolydiskPoint};

/// Isometry tolerance used for the `isometric` flag.
pub const ISOMETRY_TOL: f64 = 1e-8;
/// Certificates looser than this are refused by the bidisk builder.
pub const CERTIFICATE_TOL: f64 = 1e-7;
/// Gram agreement demanded when turning a certificate into an isometry.
pub const BIDISK_GRAM_TOL: f64 = 1e-6;
/// Relative eigenvalue cutoff when factoring certificate blocks. Small on
/// purpose: dropping a certificate direction perturbs the interpolation data.
pub const CERTIFICATE_RANK_TOL: f64 = 1e-12;
/// Radius used for boundary sampling.
pub const BOUNDARY_RADIUS: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    dims: Vec<usize>,
    v: CMatrix,
    isometric: bool,
    /// Seed of the random unitary completion, when one was drawn.
    pub seed: Option<u64>,
}

/// The diagonal block `E_λ` for a point and a realization.
#[derive(Debug, Clone)]
pub struct EvalDiag {
    pub point: PolydiskPoint,
    pub diagonal: Vec<C64>,
}

impl Realization {
    pub fn new(dims: Vec<usize>, v: CMatrix) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidData("a realization needs at least one variable".into()));
        }
        let size = 1 + dims.iter().sum::<usize>();
        if v.nrows() != size || v.ncols() != size {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} need a {size}x{size} matrix, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidData("non-finite entry in V".into()));
        }
        let isometric = isometry_defect(&v) <= ISOMETRY_TOL;
        Ok(Self {
            dims,
            v,
            isometric,
            seed: None,
        })
    }

    /// `φ(λ) = λ` on the disk: `V` swaps `ℂ` and a one-dimensional state space.
    pub fn identity_disk() -> Self {
        let v = CMatrix::from_row_slice(2, 2, &[c0(), c1(), c1(), c0()]);
        Self::new(vec![1], v).expect("swap is a valid realization")
    }

    /// `φ(λ) = λ^{var}` as a function of `nvars` variables.
    pub fn coordinate(nvars: usize, var: usize) -> Result<Self> {
        if var >= nvars {
            return Err(Error::InvalidData(format!("variable {var} out of range")));
        }
        let mut dims = vec![0; nvars];
        dims[var] = 1;
        let v = CMatrix::from_row_slice(2, 2, &[c0(), c1(), c1(), c0()]);
        Self::new(dims, v)
    }

    /// Constant function with no state space.
    pub fn constant(nvars: usize, value: C64) -> Result<Self> {
        Self::new(vec![0; nvars.max(1)], CMatrix::from_element(1, 1, value))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn nvars(&self) -> usize {
        self.dims.len()
    }

    pub fn state_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.v
    }

    pub fn is_isometric(&self) -> bool {
        self.isometric
    }

    /// Number of variables the function can actually depend on.
    pub fn effective_vars(&self) -> usize {
        self.dims
            .iter()
            .rposition(|&n| n > 0)
            .map_or(0, |k| k + 1)
    }

    pub fn a(&self) -> C64 {
        self.v[(0, 0)]
    }

    pub fn b(&self) -> CMatrix {
        let n = self.state_dim();
        self.v.view((0, 1), (1, n)).into_owned()
    }

    pub fn c(&self) -> CMatrix {
        let n = self.state_dim();
        self.v.view((1, 0), (n, 1)).into_owned()
    }

    pub fn d(&self) -> CMatrix {
        let n = self.state_dim();
        self.v.view((1, 1), (n, n)).into_owned()
    }

    fn check_point(&self, lambda: &PolydiskPoint) -> Result<()> {
        if lambda.dim() < self.effective_vars() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for a realization in {} variables",
                lambda.dim(),
                self.nvars()
            )));
        }
        if lambda.sup_norm() >= 1.0 {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    /// Diagonal of `E_λ`. Variables beyond the point's dimension must carry
    /// empty state spaces.
    pub fn eval_diag(&self, lambda: &PolydiskPoint) -> Result<EvalDiag> {
        self.check_point(lambda)?;
        let mut diagonal = Vec::with_capacity(self.state_dim());
        for (r, &n) in self.dims.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let z = lambda.coords()[r];
            diagonal.extend(std::iter::repeat_n(z, n));
        }
        Ok(EvalDiag {
            point: lambda.clone(),
            diagonal,
        })
    }

    /// `(I − D E_λ)⁻¹ C`
    pub fn state_vector(&self, lambda: &PolydiskPoint) -> Result<CVector> {
        let e = self.eval_diag(lambda)?.diagonal;
        self.resolvent_apply(&e, &self.c())
            .map(|m| m.column(0).into_owned())
    }

    fn resolvent_apply(&self, e: &[C64], rhs: &CMatrix) -> Result<CMatrix> {
        let n = self.state_dim();
        let d = self.d();
        let mut m = CMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= d[(i, j)] * e[j];
            }
        }
        solve(&m, rhs)
    }

    /// `A + B E (I − D E)⁻¹ C` for the diagonal `e` of `E`.
    fn transfer(&self, e: &[C64]) -> Result<C64> {
        let x = self.resolvent_apply(e, &self.c())?;
        let b = self.b();
        let mut acc = self.a();
        for k in 0..e.len() {
            acc += b[(0, k)] * e[k] * x[(k, 0)];
        }
        Ok(acc)
    }

    pub fn evaluate(&self, lambda: &PolydiskPoint) -> Result<C64> {
        let e = self.eval_diag(lambda)?.diagonal;
        self.transfer(&e)
    }

    /// Evaluation on the closed polydisk, for boundary values of rational
    /// inner functions. Fails where `I − D E_λ` is singular.
    pub fn evaluate_closed(&self, lambda: &PolydiskPoint) -> Result<C64> {
        if lambda.dim() < self.effective_vars() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for a realization in {} variables",
                lambda.dim(),
                self.nvars()
            )));
        }
        if lambda.sup_norm() > 1.0 + 1e-12 {
            return Err(Error::OutsideDomain);
        }
        let mut e = Vec::with_capacity(self.state_dim());
        for (r, &n) in self.dims.iter().enumerate() {
            if n > 0 {
                e.extend(std::iter::repeat_n(lambda.coords()[r], n));
            }
        }
        self.transfer(&e)
    }

    /// Evaluate a one-variable function at a scalar.
    pub fn evaluate1(&self, z: C64) -> Result<C64> {
        self.evaluate(&PolydiskPoint::new(vec![z])?)
    }

    /// Evaluate at `(z, w)`.
    pub fn evaluate2(&self, z: C64, w: C64) -> Result<C64> {
        self.evaluate(&PolydiskPoint::new(vec![z, w])?)
    }

    /// Analytic partial derivatives `∂φ/∂λʳ`:
    /// `B P_r x + B E (I − D E)⁻¹ D P_r x` with `x = (I − D E)⁻¹ C`.
    pub fn gradient(&self, lambda: &PolydiskPoint) -> Result<Vec<C64>> {
        let e = self.eval_diag(lambda)?.diagonal;
        let x = self.resolvent_apply(&e, &self.c())?;
        let b = self.b();
        let d = self.d();
        let mut out = Vec::with_capacity(self.nvars());
        let mut offset = 0;
        for &n in &self.dims {
            let mut px = CMatrix::zeros(self.state_dim(), 1);
            for k in offset..offset + n {
                px[(k, 0)] = x[(k, 0)];
            }
            offset += n;
            if n == 0 {
                out.push(C64::new(0.0, 0.0));
                continue;
            }
            let y = self.resolvent_apply(&e, &(&d * &px))?;
            let mut g = C64::new(0.0, 0.0);
            for k in 0..e.len() {
                g += b[(0, k)] * (px[(k, 0)] + e[k] * y[(k, 0)]);
            }
            out.push(g);
        }
        Ok(out)
    }

    /// Split of the state vector into the per-variable pieces `F_r(λ)`.
    pub fn state_blocks(&self, lambda: &PolydiskPoint) -> Result<Vec<CVector>> {
        let x = self.state_vector(lambda)?;
        let mut offset = 0;
        let mut out = Vec::with_capacity(self.nvars());
        for &n in &self.dims {
            out.push(x.rows(offset, n).into_owned());
            offset += n;
        }
        Ok(out)
    }
}

fn c0() -> C64 {
    C64::new(0.0, 0.0)
}

fn c1() -> C64 {
    C64::new(1.0, 0.0)
}

/// Lurking isometry for a solvable disk problem.
pub fn build_lurking_isometry_disk(data: &PickData, seed: Option<u64>) -> Result<Realization> {
    let report = solve_disk(data, crate::pick::DEFAULT_TOL)?;
    if !report.feasible {
        return Err(Error::NotSolvable);
    }
    let p = pick_matrix_disk(data)?;
    // g_i* g_j = Pᵀ_ij so that <g_i, g_j> = g_j* g_i = P_ij
    let g = gram_factor(&p.transpose(), DEFAULT_RANK_TOL)?;
    let m = g.nrows();
    let n = data.len();
    let mut x = CMatrix::zeros(1 + m, n);
    let mut y = CMatrix::zeros(1 + m, n);
    for i in 0..n {
        let lam = data.nodes()[i].coords()[0];
        x[(0, i)] = c1();
        y[(0, i)] = data.values()[i];
        for k in 0..m {
            x[(1 + k, i)] = lam * g[(k, i)];
            y[(1 + k, i)] = g[(k, i)];
        }
    }
    let v = isometry_extend_with_tol(&x, &y, 1 + m, seed, 1e-7)?;
    let mut r = Realization::new(vec![m], v)?;
    r.seed = seed;
    Ok(r)
}

/// Lurking isometry on the bidisk from a certificate `(Γ¹, Γ²)`.
pub fn build_lurking_isometry_bidisk(
    data: &PickData,
    cert: &PickCertificate,
    seed: Option<u64>,
) -> Result<Realization> {
    if data.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "bidisk builder needs d = 2, got d = {}",
            data.dim()
        )));
    }
    let residual = certificate_residual(cert, data)?;
    if residual > CERTIFICATE_TOL {
        return Err(Error::CertificateTooLoose { mismatch: residual });
    }
    let g1 = gram_factor(&cert.gamma1.transpose(), CERTIFICATE_RANK_TOL)?;
    let g2 = gram_factor(&cert.gamma2.transpose(), CERTIFICATE_RANK_TOL)?;
    let (r1, r2) = (g1.nrows(), g2.nrows());
    let n = data.len();
    let size = 1 + r1 + r2;
    let mut x = CMatrix::zeros(size, n);
    let mut y = CMatrix::zeros(size, n);
    for i in 0..n {
        let lam = data.nodes()[i].coords();
        x[(0, i)] = c1();
        y[(0, i)] = data.values()[i];
        for k in 0..r1 {
            x[(1 + k, i)] = lam[0] * g1[(k, i)];
            y[(1 + k, i)] = g1[(k, i)];
        }
        for k in 0..r2 {
            x[(1 + r1 + k, i)] = lam[1] * g2[(k, i)];
            y[(1 + r1 + k, i)] = g2[(k, i)];
        }
    }
    let v = isometry_extend_with_tol(&x, &y, size, seed, BIDISK_GRAM_TOL).map_err(|e| match e {
        Error::NotIsometric { mismatch } => Error::CertificateTooLoose { mismatch },
        other => other,
    })?;
    let mut r = Realization::new(vec![r1, r2], v)?;
    r.seed = seed;
    Ok(r)
}

/// Interpolants differing only in the random unitary completion.
///
/// Disk data ignores `cert`; bidisk data requires it.
pub fn sample_solutions(
    data: &PickData,
    cert: Option<&PickCertificate>,
    count: usize,
    seed: u64,
) -> Result<Vec<Realization>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let s: u64 = rng.random();
            match data.dim() {
                1 => build_lurking_isometry_disk(data, Some(s)),
                2 => {
                    let cert = cert.ok_or_else(|| {
                        Error::InvalidData("bidisk sampling needs a certificate".into())
                    })?;
                    build_lurking_isometry_bidisk(data, cert, Some(s))
                }
                d => Err(Error::Unsupported(format!("sampling in dimension {d}"))),
            }
        })
        .collect()
}

/// Max deviation of `[F_r(λ_j)* F_r(λ_i)]_ij` from `Γʳ`, for `r = 1, 2`.
pub fn affiliation_check(
    r: &Realization,
    data: &PickData,
    cert: &PickCertificate,
) -> Result<(f64, f64)> {
    if r.nvars() != 2 || data.dim() != 2 {
        return Err(Error::DimensionMismatch(
            "affiliation is defined for bidisk realizations and data".into(),
        ));
    }
    let n = data.len();
    if cert.gamma1.nrows() != n || cert.gamma2.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "certificate size {} for {n} nodes",
            cert.gamma1.nrows()
        )));
    }
    let blocks = data
        .nodes()
        .iter()
        .map(|p| r.state_blocks(p))
        .collect::<Result<Vec<_>>>()?;
    let mut dev = [0.0f64; 2];
    for (b, gamma) in [&cert.gamma1, &cert.gamma2].into_iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let ip = blocks[j][b].dotc(&blocks[i][b]);
                dev[b] = dev[b].max((ip - gamma[(i, j)]).norm());
            }
        }
    }
    Ok((dev[0], dev[1]))
}

/// `max |φ|` over the torus grid of radius `1 − 1e−6` with `grid_n` angles per variable.
pub fn sup_norm_estimate(r: &Realization, grid_n: usize) -> Result<f64> {
    if grid_n < 2 {
        return Err(Error::InvalidData("grid_n must be at least 2".into()));
    }
    let nv = r.effective_vars().max(1);
    let angles: Vec<C64> = (0..grid_n)
        .map(|k| C64::from_polar(BOUNDARY_RADIUS, 2.0 * PI * k as f64 / grid_n as f64))
        .collect();
    let total = grid_n.pow(nv as u32);
    let mut best = 0.0f64;
    let mut coords = vec![C64::new(0.0, 0.0); nv];
    for idx in 0..total {
        let mut rest = idx;
        for c in coords.iter_mut() {
            *c = angles[rest % grid_n];
            rest /= grid_n;
        }
        best = best.max(r.evaluate(&PolydiskPoint(coords.clone()))?.norm());
    }
    Ok(best)
}

/// Winding number of a one-variable inner transfer function along the unit circle.
pub fn blaschke_degree(r: &Realization, circle_n: usize) -> Result<usize> {
    if r.effective_vars() > 1 {
        return Err(Error::Unsupported("degree is defined for one-variable realizations".into()));
    }
    if circle_n < 3 {
        return Err(Error::InvalidData("circle_n must be at least 3".into()));
    }
    let mut values = Vec::with_capacity(circle_n);
    let mut deviation = 0.0f64;
    for k in 0..circle_n {
        let z = C64::from_polar(1.0, 2.0 * PI * k as f64 / circle_n as f64);
        // a pole of the resolvent on the circle: step just inside
        let v = match r.evaluate_closed(&PolydiskPoint(vec![z])) {
            Ok(v) => v,
            Err(Error::Singular(_)) => r.evaluate1(z * (1.0 - 1e-8))?,
            Err(e) => return Err(e),
        };
        deviation = deviation.max((v.norm() - 1.0).abs());
        values.push(v);
    }
    if deviation > 1e-6 {
        return Err(Error::NotInner { deviation });
    }
    let mut total = 0.0;
    for k in 0..circle_n {
        let a = values[k];
        let b = values[(k + 1) % circle_n];
        total += (b / a).arg();
    }
    let winding = (total / (2.0 * PI)).round();
    Ok(winding.max(0.0) as usize)
}

/// Max interpolation error `max_i |φ(λ_i) − w_i|`.
pub fn interpolation_residual(r: &Realization, data: &PickData) -> Result<f64> {
    data.nodes()
        .iter()
        .zip(data.values())
        .map(|(p, &w)| r.evaluate(p).map(|v| (v - w).norm()))
        .try_fold(0.0f64, |a, e| e.map(|e| a.max(e)))
}

/// A Haar-random unitary realization with the given state dimensions.
pub fn random_realization<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Realization {
    let size = 1 + dims.iter().sum::<usize>();
    let v = crate::numerics::random_unitary(size, rng);
    Realization::new(dims, v).expect("unitary of the right size")
}

/// Check `V* V = I` within `ISOMETRY_TOL`.
pub fn is_unitary(v: &CMatrix) -> bool {
    let n = v.nrows();
    v.nrows() == v.ncols()
        && isometry_defect(v) <= ISOMETRY_TOL
        && max_abs(&(v * v.adjoint() - CMatrix::identity(n, n))) <= ISOMETRY_TOL
}
