//! Dense complex Hermitian linear algebra.
//!
//! Everything here is a pure function over `nalgebra` matrices of
//! `Complex<f64>`. Hermitian inputs are symmetrized as `(M + M*) / 2` before
//! they are decomposed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative threshold below which eigenvalues count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Default Gram-matrix agreement required by [`isometry_extend`].
pub const DEFAULT_GRAM_TOL: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in the same order as `eigenvalues`.
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lam);
        }
        &scaled * u.adjoint()
    }
}

fn ensure_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    ensure_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEig {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        eigenvectors.set_column(j, &eig.eigenvectors.column(k));
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.min())
}

/// Frobenius-nearest positive semi-definite matrix (negative eigenvalues clipped to zero).
pub fn project_psd(m: &CMatrix) -> Result<CMatrix> {
    let mut eig = hermitian_eig(m)?;
    if eig.min() >= 0.0 {
        return Ok(hermitian_part(m));
    }
    for lam in eig.eigenvalues.iter_mut() {
        *lam = lam.max(0.0);
    }
    Ok(hermitian_part(&eig.reconstruct()))
}

/// Factor a PSD matrix as `G* G`.
///
/// The returned matrix has one row per eigenvalue above `rank_tol * lambda_max`
/// and one column per row of `gamma`; column `i` is the vector `g_i` with
/// `<g_j, g_i> = g_i* g_j = gamma[(i, j)]`. Each row is phase-normalized so that
/// its first entry of non-negligible size is real and positive.
pub fn gram_factor(gamma: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(gamma)?;
    let n = gamma.nrows();
    let lam_max = eig.max().max(0.0);
    let cutoff = rank_tol * lam_max;
    if eig.min() < -cutoff && eig.min() < -f64::EPSILON * n as f64 {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    let kept: Vec<usize> = (0..n)
        .rev()
        .filter(|&k| eig.eigenvalues[k] > cutoff && eig.eigenvalues[k] > 0.0)
        .collect();
    let mut g = CMatrix::zeros(kept.len(), n);
    for (row, &k) in kept.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        let u = eig.eigenvectors.column(k);
        let mut phase = C64::new(1.0, 0.0);
        if let Some(p) = u.iter().find(|z| z.norm() > 1e-8) {
            phase = p.conj() / p.norm();
        }
        for i in 0..n {
            g[(row, i)] = (u[i] * phase).conj() * s;
        }
    }
    Ok(g)
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// `‖V* V − I‖_F`
pub fn isometry_defect(v: &CMatrix) -> f64 {
    let n = v.ncols();
    frobenius(&(v.adjoint() * v - CMatrix::identity(n, n)))
}

pub fn standard_normal_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| standard_normal_complex(rng))
}

/// Haar-distributed unitary matrix (QR of a Ginibre matrix with phase-fixed R).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let z = random_complex_matrix(n, n, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { re(1.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

/// Build a unitary `V` of size `target_dim` with `V x_i = y_i`.
///
/// `x` and `y` hold the vectors as columns; vectors shorter than `target_dim`
/// are zero-padded. The map on `span{x_i}` is the polar factor of `Y X*`; the
/// orthogonal complement is mapped by a Haar-random unitary drawn from `seed`,
/// or by the identity pairing of singular vectors when `seed` is `None`.
pub fn isometry_extend(
    x: &CMatrix,
    y: &CMatrix,
    target_dim: usize,
    seed: Option<u64>,
) -> Result<CMatrix> {
    isometry_extend_with_tol(x, y, target_dim, seed, DEFAULT_GRAM_TOL)
}

pub fn isometry_extend_with_tol(
    x: &CMatrix,
    y: &CMatrix,
    target_dim: usize,
    seed: Option<u64>,
    gram_tol: f64,
) -> Result<CMatrix> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} source vectors but {} target vectors",
            x.ncols(),
            y.ncols()
        )));
    }
    for dim in [x.nrows(), y.nrows()] {
        if dim > target_dim {
            return Err(Error::DimensionTooLarge {
                dim,
                target: target_dim,
            });
        }
    }
    let pad = |m: &CMatrix| {
        let mut out = CMatrix::zeros(target_dim, m.ncols());
        out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        out
    };
    let (xp, yp) = (pad(x), pad(y));

    let gx = xp.adjoint() * &xp;
    let gy = yp.adjoint() * &yp;
    let mismatch = max_abs(&(&gx - &gy));
    if mismatch > gram_tol * (1.0 + max_abs(&gx)) {
        return Err(Error::NotIsometric { mismatch });
    }
    if target_dim == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }

    let cross = &yp * xp.adjoint();
    let svd = cross.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let sigma = &svd.singular_values;
    let s_max = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
    let cutoff = 1e-13 * s_max.max(f64::MIN_POSITIVE);

    let kept: Vec<usize> = (0..target_dim).filter(|&k| sigma[k] > cutoff).collect();
    let null: Vec<usize> = (0..target_dim).filter(|&k| sigma[k] <= cutoff).collect();

    let mut v = CMatrix::zeros(target_dim, target_dim);
    for &k in &kept {
        v += u.column(k) * vt.row(k);
    }
    if !null.is_empty() {
        let m = null.len();
        let q = match seed {
            Some(s) => random_unitary(m, &mut ChaCha8Rng::seed_from_u64(s)),
            None => CMatrix::identity(m, m),
        };
        for (a, &ka) in null.iter().enumerate() {
            for (b, &kb) in null.iter().enumerate() {
                if q[(a, b)] != C64::new(0.0, 0.0) {
                    v += (u.column(ka) * vt.row(kb)) * q[(a, b)];
                }
            }
        }
    }
    Ok(v)
}

/// Solve `m x = b` by LU; reports a singular system instead of returning garbage.
pub fn solve(m: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    ensure_square(m)?;
    if m.nrows() == 0 {
        return Ok(CMatrix::zeros(0, b.ncols()));
    }
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("LU solve failed".into()))
}

/// Eigenvalues of a general complex square matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    ensure_square(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Singular("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|k| t[(k, k)]).collect())
}

/// Block diagonal assembly.
pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
