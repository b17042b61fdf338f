//! Distinguished varieties and uniqueness sets on the bidisk.
//!
//! A pure matrix inner function `Ψ` determines the variety
//! `{(z, w) : det(Ψ(z) − w I) = 0}`, which is distinguished. Only this forward
//! direction is implemented. The uniqueness set of an extremal problem is
//! probed by sampling solutions, which gives evidence rather than proof.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{eigenvalues, isometry_defect, max_abs, operator_norm, random_unitary, solve, CMatrix, C64};
use crate::pick::{PickCertificate, PickData, PolydiskPoint};
use crate::realization::{is_unitary, sample_solutions, Realization};

/// `‖A‖` must stay below `1 − PURITY_MARGIN`.
pub const PURITY_MARGIN: f64 = 1e-9;
pub const BOUNDARY_MODULUS_TOL: f64 = 1e-6;
pub const UNIQUENESS_TOL: f64 = 1e-6;
pub const UNIQUENESS_SAMPLES: usize = 8;
/// Sampling range `[−R, R]` on each real axis of the uniqueness grid.
pub const UNIQUENESS_GRID_RADIUS: f64 = 0.9;
/// Largest radius used for interior samples in [`distinguished_check`].
pub const INTERIOR_RADIUS: f64 = 0.99;
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// `Ψ(z) = A + z B (I − z D)⁻¹ C` with `V = [[A, B], [C, D]]`, `A` of size `k`.
#[derive(Debug, Clone)]
pub struct MatrixInnerFunction {
    k: usize,
    v: CMatrix,
}

impl MatrixInnerFunction {
    /// Requires `V` unitary and `‖A‖ < 1`.
    pub fn new(k: usize, v: CMatrix) -> Result<Self> {
        let f = Self::new_unchecked(k, v)?;
        if !is_unitary(&f.v) {
            return Err(Error::NotIsometric {
                mismatch: isometry_defect(&f.v),
            });
        }
        let norm = operator_norm(&f.a());
        if norm >= 1.0 - PURITY_MARGIN {
            return Err(Error::NotPure { norm });
        }
        Ok(f)
    }

    /// Skips the unitarity and purity checks, for building negative controls.
    pub fn new_unchecked(k: usize, v: CMatrix) -> Result<Self> {
        if v.nrows() != v.ncols() || v.nrows() < k || k == 0 {
            return Err(Error::DimensionMismatch(format!(
                "V is {}x{}, output size {k}",
                v.nrows(),
                v.ncols()
            )));
        }
        Ok(Self { k, v })
    }

    /// Haar-random unitary of size `k + n`, redrawn until pure.
    /// Purity needs `n ≥ k`: otherwise `C` has a kernel and `‖A‖ = 1`.
    pub fn random_pure<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<Self> {
        if n < k {
            return Err(Error::InvalidData(format!(
                "a pure {k}x{k} inner function needs state dimension >= {k}"
            )));
        }
        for _ in 0..100 {
            if let Ok(f) = Self::new(k, random_unitary(k + n, rng)) {
                return Ok(f);
            }
        }
        Err(Error::Degenerate("no pure draw in 100 attempts".into()))
    }

    /// One-variable scalar realization as a `1 × 1` inner function.
    pub fn from_scalar(r: &Realization) -> Result<Self> {
        if r.effective_vars() > 1 {
            return Err(Error::Unsupported("the realization uses two variables".into()));
        }
        Self::new(1, r.matrix().clone())
    }

    /// `Ψ₁ ⊕ Ψ₂`
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let (k1, n1) = (self.k, self.state_dim());
        let (k2, n2) = (other.k, other.state_dim());
        let size = k1 + k2 + n1 + n2;
        let mut v = CMatrix::zeros(size, size);
        // output/input order: [k1, k2, n1, n2]
        let place1 = |i: usize| if i < k1 { i } else { k1 + k2 + (i - k1) };
        let place2 = |i: usize| if i < k2 { k1 + i } else { k1 + k2 + n1 + (i - k2) };
        for i in 0..k1 + n1 {
            for j in 0..k1 + n1 {
                v[(place1(i), place1(j))] = self.v[(i, j)];
            }
        }
        for i in 0..k2 + n2 {
            for j in 0..k2 + n2 {
                v[(place2(i), place2(j))] = other.v[(i, j)];
            }
        }
        Self::new_unchecked(k1 + k2, v)
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn state_dim(&self) -> usize {
        self.v.nrows() - self.k
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.v
    }

    pub fn a(&self) -> CMatrix {
        self.v.view((0, 0), (self.k, self.k)).into_owned()
    }

    pub fn is_pure(&self) -> bool {
        operator_norm(&self.a()) < 1.0 - PURITY_MARGIN
    }

    pub fn eval(&self, z: C64) -> Result<CMatrix> {
        if z.norm() > 1.0 {
            return Err(Error::OutsideDomain);
        }
        let (k, n) = (self.k, self.state_dim());
        let a = self.a();
        if n == 0 {
            return Ok(a);
        }
        let b = self.v.view((0, k), (k, n)).into_owned();
        let c = self.v.view((k, 0), (n, k)).into_owned();
        let d = self.v.view((k, k), (n, n)).into_owned();
        let resolvent = CMatrix::identity(n, n) - d * z;
        Ok(a + b * solve(&resolvent, &c)? * z)
    }

    /// `max_θ ‖Ψ(e^{iθ})* Ψ(e^{iθ}) − I‖` over `samples` equally spaced angles.
    pub fn boundary_unitarity_defect(&self, samples: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for s in 0..samples {
            let psi = self.eval(C64::from_polar(1.0, 2.0 * PI * s as f64 / samples as f64))?;
            let id = CMatrix::identity(self.k, self.k);
            worst = worst.max(max_abs(&(psi.adjoint() * &psi - id)));
        }
        Ok(worst)
    }
}

/// The `w` with `det(Ψ(z) − w I) = 0`.
pub fn variety_points(psi: &MatrixInnerFunction, z: C64) -> Result<Vec<C64>> {
    eigenvalues(&psi.eval(z)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct DistinguishedReport {
    pub pass: bool,
    /// Largest `|w|` seen over interior `z`; must stay below 1.
    pub max_interior_modulus: f64,
    /// Largest `||w| − 1|` seen over boundary `z`.
    pub max_boundary_deviation: f64,
    pub interior_samples: usize,
    pub boundary_samples: usize,
    pub boundary_tol: f64,
}

/// Samples the variety over interior and boundary `z`: a distinguished
/// variety keeps `|w| < 1` inside the disk and `|w| = 1` on the circle.
pub fn distinguished_check(psi: &MatrixInnerFunction, interior_n: usize, boundary_n: usize) -> Result<DistinguishedReport> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut max_interior = 0.0f64;
    for s in 0..interior_n {
        let r = INTERIOR_RADIUS * ((s as f64 + 0.5) / interior_n as f64).sqrt();
        for w in variety_points(psi, C64::from_polar(r, golden * s as f64))? {
            max_interior = max_interior.max(w.norm());
        }
    }
    let mut max_boundary = 0.0f64;
    for s in 0..boundary_n {
        let z = C64::from_polar(1.0, 2.0 * PI * s as f64 / boundary_n as f64);
        for w in variety_points(psi, z)? {
            max_boundary = max_boundary.max((w.norm() - 1.0).abs());
        }
    }
    Ok(DistinguishedReport {
        pass: max_interior < 1.0 && max_boundary <= BOUNDARY_MODULUS_TOL,
        max_interior_modulus: max_interior,
        max_boundary_deviation: max_boundary,
        interior_samples: interior_n,
        boundary_samples: boundary_n,
        boundary_tol: BOUNDARY_MODULUS_TOL,
    })
}

/// `t z + (1 − t) w + t(1 − t)(z − w)² ψ / (1 − [(1 − t) z + t w] ψ)`
/// for a given value `ψ` of the free parameter.
pub fn solution_family_value(t: f64, psi: C64, z: C64, w: C64) -> Result<C64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidData(format!("t = {t} outside [0, 1]")));
    }
    if z.norm() >= 1.0 || w.norm() >= 1.0 {
        return Err(Error::OutsideDomain);
    }
    let denom = C64::new(1.0, 0.0) - ((1.0 - t) * z + t * w) * psi;
    if denom.norm() < DENOMINATOR_FLOOR {
        return Err(Error::Singular(format!("denominator {:e}", denom.norm())));
    }
    let diff = z - w;
    Ok(t * z + (1.0 - t) * w + t * (1.0 - t) * diff * diff * psi / denom)
}

/// The family member whose parameter function is the realization `psi`.
pub fn solution_family_eval(t: f64, psi: &Realization, z: C64, w: C64) -> Result<C64> {
    let value = psi.evaluate(&PolydiskPoint(vec![z, w][..psi.nvars().clamp(1, 2)].to_vec()))?;
    if value.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidData(format!("|Ψ(z, w)| = {} exceeds 1", value.norm())));
    }
    solution_family_value(t, value, z, w)
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub z: [f64; 2],
    pub w: [f64; 2],
    pub agree: bool,
    pub spread: f64,
}

/// Agreement of sampled solutions on a real grid of `[−0.9, 0.9]²`.
#[derive(Debug, Clone)]
pub struct VerdictGrid {
    pub tol: f64,
    pub seed: u64,
    pub rows: Vec<GridRow>,
    /// Solution values per row, from which every flag can be recomputed.
    pub values: Vec<Vec<C64>>,
    pub solutions: Vec<Realization>,
}

impl VerdictGrid {
    pub fn max_spread(&self) -> f64 {
        self.rows.iter().map(|r| r.spread).fold(0.0, f64::max)
    }

    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(|r| r.agree)
    }

    /// Recomputes the flags from `values`.
    pub fn recompute(&self) -> Vec<bool> {
        self.values.iter().map(|v| spread(v) <= self.tol).collect()
    }
}

/// `max_{a,b} |v_a − v_b|`
pub fn spread(values: &[C64]) -> f64 {
    let mut s = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            s = s.max((a - b).norm());
        }
    }
    s
}

/// `grid_n` equally spaced points of `[−R, R]`.
pub fn grid_axis(grid_n: usize) -> Vec<f64> {
    let r = UNIQUENESS_GRID_RADIUS;
    if grid_n == 1 {
        return vec![0.0];
    }
    (0..grid_n).map(|k| -r + 2.0 * r * k as f64 / (grid_n - 1) as f64).collect()
}

/// Samples `count` solutions of bidisk data and flags grid points where they
/// all agree within `tol`.
pub fn uniqueness_sample(
    data: &PickData,
    cert: &PickCertificate,
    count: usize,
    grid_n: usize,
    tol: f64,
    seed: u64,
) -> Result<VerdictGrid> {
    if data.dim() != 2 {
        return Err(Error::DimensionMismatch("uniqueness sampling is for bidisk data".into()));
    }
    let solutions = sample_solutions(data, Some(cert), count, seed)?;
    let axis = grid_axis(grid_n);
    let mut rows = Vec::with_capacity(axis.len() * axis.len());
    let mut values = Vec::with_capacity(rows.capacity());
    for &x in &axis {
        for &y in &axis {
            let (z, w) = (C64::new(x, 0.0), C64::new(y, 0.0));
            let v = solutions
                .iter()
                .map(|s| s.evaluate2(z, w))
                .collect::<Result<Vec<_>>>()?;
            let sp = spread(&v);
            rows.push(GridRow {
                z: [x, 0.0],
                w: [y, 0.0],
                agree: sp <= tol,
                spread: sp,
            });
            values.push(v);
        }
    }
    Ok(VerdictGrid {
        tol,
        seed,
        rows,
        values,
        solutions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agler::power_of_z;
    use crate::numerics::{c, re};
    use crate::pick::{solve_bidisk, SolverOptions};
    use crate::realization::random_realization;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z_fn() -> MatrixInnerFunction {
        MatrixInnerFunction::from_scalar(&Realization::identity_disk()).unwrap()
    }

    fn z2_fn() -> MatrixInnerFunction {
        MatrixInnerFunction::new(1, power_of_z(2).unwrap().matrix().clone()).unwrap()
    }

    #[test]
    fn diagonal_examples() {
        let zz = z_fn().direct_sum(&z_fn()).unwrap();
        let z = c(0.3, -0.2);
        let pts = variety_points(&zz, z).unwrap();
        assert!(pts.iter().all(|w| (w - z).norm() < 1e-14));

        let zq = z_fn().direct_sum(&z2_fn()).unwrap();
        assert!(is_unitary(zq.matrix()) && zq.is_pure());
        let mut pts = variety_points(&zq, z).unwrap();
        pts.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        assert!((pts[0] - z * z).norm() < 1e-14 && (pts[1] - z).norm() < 1e-14);
        let rep = distinguished_check(&zq, 200, 200).unwrap();
        assert!(rep.pass);
        assert!(rep.max_boundary_deviation < 1e-12);
        assert!(matches!(variety_points(&zq, re(1.1)), Err(Error::OutsideDomain)));
    }

    #[test]
    fn random_pure_functions_are_distinguished() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let psi = MatrixInnerFunction::random_pure(2, 3, &mut rng).unwrap();
            assert!(psi.boundary_unitarity_defect(64).unwrap() <= 1e-8);
            let rep = distinguished_check(&psi, 100, 100).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        assert!(MatrixInnerFunction::random_pure(2, 1, &mut rng).is_err());
    }

    #[test]
    fn non_inner_control_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_unitary(4, &mut rng).scale(0.95);
        let psi = MatrixInnerFunction::new_unchecked(2, v.clone()).unwrap();
        assert!(MatrixInnerFunction::new(2, v).is_err());
        assert!(!distinguished_check(&psi, 20, 50).unwrap().pass);
    }

    #[test]
    fn family_examples() {
        let (z, w) = (c(0.3, 0.1), c(-0.2, 0.4));
        let psi = c(0.5, -0.3);
        assert!((solution_family_value(1.0, psi, z, w).unwrap() - z).norm() < 1e-15);
        assert!((solution_family_value(0.0, psi, z, w).unwrap() - w).norm() < 1e-15);
        let avg = solution_family_value(0.5, re(0.0), z, w).unwrap();
        assert!((avg - (z + w) / 2.0).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in 0..6 {
            let p = random_realization(vec![1, 2], &mut rng);
            let t = k as f64 / 5.0;
            assert_eq!(solution_family_eval(t, &p, re(0.0), re(0.0)).unwrap(), re(0.0));
            let half = solution_family_eval(t, &p, re(0.5), re(0.5)).unwrap();
            assert!((half - re(0.5)).norm() < 1e-15);
            let mut sup = 0.0f64;
            for a in 0..16 {
                for b in 0..16 {
                    let zz = C64::from_polar(0.999, 2.0 * PI * a as f64 / 16.0);
                    let ww = C64::from_polar(0.999, 2.0 * PI * b as f64 / 16.0);
                    sup = sup.max(solution_family_eval(t, &p, zz, ww).unwrap().norm());
                }
            }
            assert!(sup <= 1.0 + 1e-8);
        }
    }

    fn cert_for(data: &PickData) -> PickCertificate {
        let rep = solve_bidisk(data, &SolverOptions::default()).unwrap();
        assert!(rep.feasible);
        rep.certificate.unwrap()
    }

    #[test]
    fn uniqueness_examples() {
        let d1 = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.0]], &[0.0, 0.5]).unwrap();
        let g = uniqueness_sample(&d1, &cert_for(&d1), 8, 11, UNIQUENESS_TOL, 0).unwrap();
        assert!(g.all_agree(), "max spread {}", g.max_spread());
        assert_eq!(g.recompute(), g.rows.iter().map(|r| r.agree).collect::<Vec<_>>());

        let d2 = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.5]], &[0.0, 0.5]).unwrap();
        let g = uniqueness_sample(&d2, &cert_for(&d2), 8, 11, UNIQUENESS_TOL, 0).unwrap();
        for row in &g.rows {
            if row.z == row.w {
                assert!(row.agree);
            }
        }
        assert!(g.max_spread() >= 1e-3);
        for s in &g.solutions {
            let t = 0.37;
            assert!((s.evaluate2(re(t), re(t)).unwrap() - re(t)).norm() <= 1e-6);
        }

        let d3 = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.5]], &[0.0, 0.25]).unwrap();
        let g = uniqueness_sample(&d3, &cert_for(&d3), 8, 11, UNIQUENESS_TOL, 0).unwrap();
        let diagonal_agree = g.rows.iter().filter(|r| r.z == r.w && r.agree).count();
        assert!(diagonal_agree < 11);
    }
}
