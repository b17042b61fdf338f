//! Two-block linear matrix feasibility.
//!
//! Finds positive semi-definite `Γ¹, Γ²` with
//!
//! ```text
//! W¹ ∘ Γ¹ + W² ∘ Γ² = C        (entrywise products)
//! ```
//!
//! for Hermitian `C, W¹, W²`. This single shape covers the bidisk Pick
//! certificate, the pairwise polydisk condition, the finite interpolating
//! sequence conditions and the bidisk Toeplitz-corona test.
//!
//! The primary method is Dykstra's alternating projection between the affine
//! solution set and the product of PSD cones. The affine projection decouples
//! entrywise, so it is a closed-form least-squares split of `C_ij` across the
//! two weights. When the projection iterates stall short of the tolerance
//! (typical for extremal data, where the feasible set touches the cone
//! boundary and the projections converge sublinearly), the iterate is handed
//! to a Levenberg-Marquardt polish on the factored form `Γʳ = Lʳ Lʳ*`, which
//! keeps both blocks exactly PSD while driving the affine residual down.
//!
//! An infeasible verdict is always heuristic: the solver found no certificate
//! within its budget.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, hermitian_part, project_psd, random_complex_matrix, CMatrix, C64};

/// Iteration window used for stagnation detection.
pub const STAGNATION_WINDOW: usize = 500;
/// Change in residual over one window below which the projections are stagnant.
pub const STAGNATION_DELTA: f64 = 1e-12;
/// Polish steps over which the residual must drop by at least 1%.
pub const POLISH_WINDOW: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmiOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Seeds the starting point; `None` starts from zero blocks.
    pub seed: Option<u64>,
    /// Maximum Levenberg-Marquardt steps in the polish phase.
    pub polish_iter: usize,
}

impl Default for LmiOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 50_000,
            seed: None,
            polish_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoBlockProblem {
    pub target: CMatrix,
    pub weight1: CMatrix,
    pub weight2: CMatrix,
}

#[derive(Debug, Clone)]
pub struct LmiOutcome {
    pub feasible: bool,
    pub gamma1: CMatrix,
    pub gamma2: CMatrix,
    /// Max-abs entry violation of the affine identity at `(gamma1, gamma2)`.
    pub residual: f64,
    /// Projection iterations plus polish steps.
    pub iterations: usize,
    /// True when the verdict rests on stagnation or budget exhaustion.
    pub heuristic: bool,
}

impl TwoBlockProblem {
    pub fn new(target: CMatrix, weight1: CMatrix, weight2: CMatrix) -> Result<Self> {
        let n = target.nrows();
        for m in [&target, &weight1, &weight2] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "LMI data must be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self {
            target,
            weight1,
            weight2,
        })
    }

    pub fn size(&self) -> usize {
        self.target.nrows()
    }

    pub fn residual_matrix(&self, g1: &CMatrix, g2: &CMatrix) -> CMatrix {
        &self.target - self.weight1.component_mul(g1) - self.weight2.component_mul(g2)
    }

    pub fn residual(&self, g1: &CMatrix, g2: &CMatrix) -> f64 {
        self.residual_matrix(g1, g2)
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()))
    }

    /// Orthogonal projection onto the affine set, entry by entry.
    fn project_affine(&self, g1: &CMatrix, g2: &CMatrix) -> (CMatrix, CMatrix) {
        let n = self.size();
        let mut p1 = g1.clone();
        let mut p2 = g2.clone();
        for i in 0..n {
            for j in 0..n {
                let w1 = self.weight1[(i, j)];
                let w2 = self.weight2[(i, j)];
                let den = w1.norm_sqr() + w2.norm_sqr();
                if den == 0.0 {
                    continue;
                }
                let gap = (self.target[(i, j)] - w1 * g1[(i, j)] - w2 * g2[(i, j)]) / den;
                p1[(i, j)] += w1.conj() * gap;
                p2[(i, j)] += w2.conj() * gap;
            }
        }
        (p1, p2)
    }

    pub fn solve(&self, opts: &LmiOptions) -> Result<LmiOutcome> {
        let n = self.size();
        if n == 0 {
            return Err(Error::InvalidData("empty LMI".into()));
        }
        let (mut x1, mut x2) = match opts.seed {
            None => (CMatrix::zeros(n, n), CMatrix::zeros(n, n)),
            Some(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let a = random_complex_matrix(n, n, &mut rng);
                let b = random_complex_matrix(n, n, &mut rng);
                let scale = 1.0 / n as f64;
                ((&a * a.adjoint()).scale(scale), (&b * b.adjoint()).scale(scale))
            }
        };
        // Dykstra increments; the one for the affine set is kept for uniformity.
        let mut p1 = CMatrix::zeros(n, n);
        let mut p2 = CMatrix::zeros(n, n);
        let mut q1 = CMatrix::zeros(n, n);
        let mut q2 = CMatrix::zeros(n, n);

        let mut residual = self.residual(&x1, &x2);
        let mut window_start = residual;
        let mut iterations = 0;

        while iterations < opts.max_iter && residual > opts.tol {
            let (y1, y2) = self.project_affine(&(&x1 + &p1), &(&x2 + &p2));
            p1 = &x1 + &p1 - &y1;
            p2 = &x2 + &p2 - &y2;
            let z1 = &y1 + &q1;
            let z2 = &y2 + &q2;
            x1 = project_psd(&z1)?;
            x2 = project_psd(&z2)?;
            q1 = z1 - &x1;
            q2 = z2 - &x2;
            iterations += 1;
            residual = self.residual(&x1, &x2);

            if iterations % STAGNATION_WINDOW == 0 {
                let change = (window_start - residual).abs();
                if change < STAGNATION_DELTA {
                    break;
                }
                // Sublinear progress: hand over to the factored polish.
                if residual > 0.5 * window_start {
                    break;
                }
                window_start = residual;
            }
        }

        if residual <= opts.tol {
            return Ok(LmiOutcome {
                feasible: true,
                gamma1: x1,
                gamma2: x2,
                residual,
                iterations,
                heuristic: false,
            });
        }

        let polished = self.polish(&x1, &x2, opts)?;
        iterations += polished.steps;
        if polished.residual <= opts.tol {
            return Ok(LmiOutcome {
                feasible: true,
                gamma1: polished.gamma1,
                gamma2: polished.gamma2,
                residual: polished.residual,
                iterations,
                heuristic: false,
            });
        }

        let (gamma1, gamma2, residual) = if polished.residual < residual {
            (polished.gamma1, polished.gamma2, polished.residual)
        } else {
            (x1, x2, residual)
        };
        Ok(LmiOutcome {
            feasible: false,
            gamma1,
            gamma2,
            residual,
            iterations,
            heuristic: true,
        })
    }

    /// Levenberg-Marquardt on `Γʳ = Lʳ Lʳ*` starting from the PSD pair `(g1, g2)`.
    fn polish(&self, g1: &CMatrix, g2: &CMatrix, opts: &LmiOptions) -> Result<Polished> {
        let n = self.size();
        let mut factors = [psd_square_factor(g1)?, psd_square_factor(g2)?];
        // Zero columns receive no first-order update; seed them with a little mass.
        let scale = 1e-4 * (1.0 + self.target.iter().fold(0.0f64, |a, z| a.max(z.norm()))).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.unwrap_or(0) ^ 0x5eed);
        for f in factors.iter_mut() {
            *f += random_complex_matrix(n, n, &mut rng).scale(scale);
        }

        let layout = ResidualLayout::new(n);
        let mut r = layout.pack(&self.residual_of_factors(&factors));
        let mut cost = r.norm_squared();
        let mut mu = 0.0;
        let mut steps = 0;
        let mut window_start = layout.max_abs(&r);

        while steps < opts.polish_iter {
            let jac = self.jacobian(&factors, &layout);
            let mut jjt = jac.normal_matrix();
            if mu == 0.0 {
                let dmax = (0..jjt.nrows()).fold(0.0f64, |a, k| a.max(jjt[(k, k)]));
                mu = 1e-6 * dmax.max(1e-12);
            }
            let base = jjt.clone();
            let mut accepted = false;
            for _ in 0..30 {
                jjt.copy_from(&base);
                for k in 0..jjt.nrows() {
                    jjt[(k, k)] += mu;
                }
                let Some(chol) = jjt.clone().cholesky() else {
                    mu *= 10.0;
                    continue;
                };
                let y = chol.solve(&r);
                let step = jac.transpose_mul(&y);
                let trial = apply_step(&factors, &step, n);
                let r_trial = layout.pack(&self.residual_of_factors(&trial));
                let c_trial = r_trial.norm_squared();
                if c_trial < cost {
                    factors = trial;
                    r = r_trial;
                    cost = c_trial;
                    mu = (mu / 5.0).max(1e-300);
                    accepted = true;
                    break;
                }
                mu *= 8.0;
            }
            steps += 1;
            let res_max = layout.max_abs(&r);
            if res_max <= opts.tol * 1e-3 || !accepted {
                break;
            }
            // slow but steady decay is normal near singular certificates; a plateau is not
            if steps % POLISH_WINDOW == 0 {
                if res_max > 0.99 * window_start {
                    break;
                }
                window_start = res_max;
            }
        }

        let gamma1 = hermitian_part(&(&factors[0] * factors[0].adjoint()));
        let gamma2 = hermitian_part(&(&factors[1] * factors[1].adjoint()));
        let residual = self.residual(&gamma1, &gamma2);
        Ok(Polished {
            gamma1,
            gamma2,
            residual,
            steps,
        })
    }

    fn residual_of_factors(&self, f: &[CMatrix; 2]) -> CMatrix {
        let g1 = &f[0] * f[0].adjoint();
        let g2 = &f[1] * f[1].adjoint();
        self.residual_matrix(&g1, &g2)
    }

    /// Sparse Jacobian of the packed residual with respect to the real and
    /// imaginary parts of every factor entry.
    fn jacobian(&self, f: &[CMatrix; 2], layout: &ResidualLayout) -> SparseJacobian {
        let n = layout.n;
        let mut cols = Vec::with_capacity(4 * n * n);
        let units = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        for (l, w) in [(&f[0], &self.weight1), (&f[1], &self.weight2)] {
            for a in 0..n {
                for b in 0..n {
                    for e in units {
                        let mut col = Vec::with_capacity(2 * n + 1);
                        // d(LL*)_{ij} = δ_ia e conj(L_jb) + L_ib conj(e) δ_ja
                        for j in 0..n {
                            let d = if j == a {
                                let t = e * l[(a, b)].conj();
                                t + t.conj()
                            } else {
                                e * l[(j, b)].conj()
                            };
                            // residual entry (a, j) changes by -W_aj d
                            let dr = -w[(a, j)] * d;
                            layout.push(a, j, dr, &mut col);
                        }
                        cols.push(col);
                    }
                }
            }
        }
        SparseJacobian {
            rows: layout.len(),
            cols,
        }
    }
}

struct Polished {
    gamma1: CMatrix,
    gamma2: CMatrix,
    residual: f64,
    steps: usize,
}

/// Square factor `L` with `L L* = Γ` for a PSD `Γ` (eigenvalues clipped at zero).
fn psd_square_factor(g: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(g)?;
    let mut l = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        l.column_mut(j).scale_mut(lam.max(0.0).sqrt());
    }
    Ok(l)
}

fn apply_step(f: &[CMatrix; 2], step: &DVector<f64>, n: usize) -> [CMatrix; 2] {
    let mut out = f.clone();
    let mut k = 0;
    for l in out.iter_mut() {
        for a in 0..n {
            for b in 0..n {
                l[(a, b)] += C64::new(step[k], step[k + 1]);
                k += 2;
            }
        }
    }
    out
}

/// Packs the Hermitian residual into a real vector: the real diagonal, then
/// real and imaginary parts of the strict upper triangle.
struct ResidualLayout {
    n: usize,
}

impl ResidualLayout {
    fn new(n: usize) -> Self {
        Self { n }
    }

    fn len(&self) -> usize {
        self.n * self.n
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        // position of (i, j) among strict-upper entries in row-major order
        let before = i * self.n - i * (i + 1) / 2;
        self.n + 2 * (before + (j - i - 1))
    }

    /// Record the change `dr` of residual entry `(i, j)` (and implicitly its
    /// Hermitian mirror) into a sparse column.
    fn push(&self, i: usize, j: usize, dr: C64, col: &mut Vec<(usize, f64)>) {
        if i == j {
            col.push((i, dr.re));
        } else if i < j {
            let k = self.upper_index(i, j);
            col.push((k, dr.re));
            col.push((k + 1, dr.im));
        } else {
            // R_ji = conj(R_ij)
            let k = self.upper_index(j, i);
            col.push((k, dr.re));
            col.push((k + 1, -dr.im));
        }
    }

    fn pack(&self, r: &CMatrix) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(self.len());
        for i in 0..n {
            out[i] = r[(i, i)].re;
            for j in (i + 1)..n {
                let k = self.upper_index(i, j);
                // average the mirror to stay Hermitian under rounding
                let z = (r[(i, j)] + r[(j, i)].conj()) * 0.5;
                out[k] = z.re;
                out[k + 1] = z.im;
            }
        }
        out
    }

    fn max_abs(&self, v: &DVector<f64>) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for i in 0..n {
            m = m.max(v[i].abs());
        }
        let mut k = n;
        while k < v.len() {
            m = m.max(v[k].hypot(v[k + 1]));
            k += 2;
        }
        m
    }
}

struct SparseJacobian {
    rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl SparseJacobian {
    /// `J Jᵀ`
    fn normal_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.rows);
        for col in &self.cols {
            for &(p, vp) in col {
                for &(q, vq) in col {
                    m[(p, q)] += vp * vq;
                }
            }
        }
        m
    }

    /// Minimum-norm Gauss-Newton step `-Jᵀ y` where `(J Jᵀ + μ I) y = r`.
    fn transpose_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.cols.len(),
            self.cols
                .iter()
                .map(|col| -col.iter().map(|&(p, v)| v * y[p]).sum::<f64>()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{min_eigenvalue, re};

    fn ones(n: usize) -> CMatrix {
        CMatrix::from_element(n, n, re(1.0))
    }

    #[test]
    fn scalar_problem() {
        let p = TwoBlockProblem::new(ones(1), ones(1), ones(1)).unwrap();
        let out = p.solve(&LmiOptions::default()).unwrap();
        assert!(out.feasible && !out.heuristic);
        assert!(out.residual <= 1e-9);
        assert!(out.gamma1[(0, 0)].re >= -1e-12 && out.gamma2[(0, 0)].re >= -1e-12);
    }

    #[test]
    fn negative_scalar_is_infeasible() {
        let p = TwoBlockProblem::new(-ones(1), ones(1), ones(1)).unwrap();
        let out = p.solve(&LmiOptions::default()).unwrap();
        assert!(!out.feasible && out.heuristic);
        assert!(out.residual > 0.5);
    }

    #[test]
    fn packed_residual_matches_matrix_norm() {
        let n = 4;
        let layout = ResidualLayout::new(n);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = hermitian_part(&random_complex_matrix(n, n, &mut rng));
        let packed = layout.pack(&r);
        let want = r.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!((layout.max_abs(&packed) - want).abs() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w1 = hermitian_part(&random_complex_matrix(n, n, &mut rng));
        let w2 = hermitian_part(&random_complex_matrix(n, n, &mut rng));
        let t = hermitian_part(&random_complex_matrix(n, n, &mut rng));
        let p = TwoBlockProblem::new(t, w1, w2).unwrap();
        let f = [
            random_complex_matrix(n, n, &mut rng),
            random_complex_matrix(n, n, &mut rng),
        ];
        let layout = ResidualLayout::new(n);
        let jac = p.jacobian(&f, &layout);
        let base = layout.pack(&p.residual_of_factors(&f));
        let h = 1e-6;
        for (k, col) in jac.cols.iter().enumerate() {
            let mut step = DVector::zeros(4 * n * n);
            step[k] = h;
            let moved = layout.pack(&p.residual_of_factors(&apply_step(&f, &step, n)));
            let fd = (moved - &base) / h;
            let mut dense = DVector::zeros(layout.len());
            for &(row, v) in col {
                dense[row] += v;
            }
            assert!((fd - dense).amax() < 1e-4, "column {k}");
        }
    }

    #[test]
    fn extremal_problem_reaches_tolerance() {
        // Unique certificate Γ¹ = J, Γ² = 0 (nodes (0,0), (1/2,0); values 0, 1/2).
        let w1 = CMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(1.0), re(0.75)]);
        let p = TwoBlockProblem::new(w1.clone(), w1, ones(2)).unwrap();
        let out = p.solve(&LmiOptions::default()).unwrap();
        assert!(out.feasible, "residual {}", out.residual);
        assert!(min_eigenvalue(&out.gamma1).unwrap() >= -1e-9);
        assert!(min_eigenvalue(&out.gamma2).unwrap() >= -1e-9);
        assert!((out.gamma1 - ones(2)).iter().all(|z| z.norm() < 1e-4));
    }
}
