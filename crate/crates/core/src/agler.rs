//! Schur-Agler class diagnostics.
//!
//! Membership cannot be proved by sampling, only falsified: every check here
//! evaluates a necessary inequality on concrete inputs and reports the slack.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{
    kron, operator_norm, random_complex_matrix, random_unitary, solve, CMatrix, C64,
};
use crate::pick::PolydiskPoint;
use crate::realization::Realization;

/// Operator norm every generated contraction stays below.
pub const CONTRACTION_BOUND: f64 = 1.0 - 1e-6;
/// Quadrature nodes per circle for Cauchy-integral derivatives.
pub const CAUCHY_NODES: usize = 256;
/// A partial derivative smaller than this at every probe point counts as absent.
pub const DEPENDENCE_THRESHOLD: f64 = 1e-6;
pub const KNESE_MAX_RESAMPLES: usize = 100;

/// Commuting contractive matrices `(T₁, …, T_d)` of a common size.
#[derive(Debug, Clone)]
pub struct CommutingTuple {
    pub mats: Vec<CMatrix>,
}

impl CommutingTuple {
    pub fn new(mats: Vec<CMatrix>) -> Result<Self> {
        let m = mats.first().map_or(0, |t| t.nrows());
        if mats.iter().any(|t| t.nrows() != m || t.ncols() != m) {
            return Err(Error::DimensionMismatch("tuple matrices must share one square size".into()));
        }
        Ok(Self { mats })
    }

    pub fn size(&self) -> usize {
        self.mats.first().map_or(0, |t| t.nrows())
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn max_commutator(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, a) in self.mats.iter().enumerate() {
            for b in &self.mats[r + 1..] {
                worst = worst.max(operator_norm(&(a * b - b * a)));
            }
        }
        worst
    }

    pub fn max_norm(&self) -> f64 {
        self.mats.iter().map(operator_norm).fold(0.0, f64::max)
    }
}

/// Each `T_r = p_r(S)` for random cubic polynomials of one random matrix `S`,
/// scaled to operator norm `1 − 1e−6`.
pub fn generate_commuting_contractions(d: usize, m: usize, seed: u64) -> Result<CommutingTuple> {
    if m == 0 {
        return Err(Error::InvalidData("matrix size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_complex_matrix(m, m, &mut rng).scale(1.0 / (m as f64).sqrt());
    let id = CMatrix::identity(m, m);
    let mut mats = Vec::with_capacity(d);
    for _ in 0..d {
        let coeffs: Vec<C64> = (0..4)
            .map(|_| crate::numerics::standard_normal_complex(&mut rng))
            .collect();
        // Horner
        let mut t = id.scale(0.0) + &id * coeffs[3];
        for &a in coeffs[..3].iter().rev() {
            t = &t * &s + &id * a;
        }
        let norm = operator_norm(&t);
        if norm > 0.0 {
            t = t.scale(CONTRACTION_BOUND / norm);
        }
        mats.push(t);
    }
    CommutingTuple::new(mats)
}

/// `‖φ(T)‖`, substituting `E_T = ⊕_r (I_{H_r} ⊗ T_r)` into the realization.
pub fn vonneumann_test(r: &Realization, t: &CommutingTuple) -> Result<f64> {
    if t.len() < r.effective_vars() {
        return Err(Error::DimensionMismatch(format!(
            "{} matrices for a function of {} variables",
            t.len(),
            r.effective_vars()
        )));
    }
    let m = t.size();
    let n = r.state_dim();
    let id_m = CMatrix::identity(m, m);
    let mut e = CMatrix::zeros(n * m, n * m);
    let mut offset = 0;
    for (var, &nr) in r.dims().iter().enumerate() {
        for h in offset..offset + nr {
            e.view_mut((h * m, h * m), (m, m)).copy_from(&t.mats[var]);
        }
        offset += nr;
    }
    let a = id_m.clone() * r.a();
    if n == 0 {
        return Ok(operator_norm(&a));
    }
    let b = kron(&r.b(), &id_m);
    let c = kron(&r.c(), &id_m);
    let d = kron(&r.d(), &id_m);
    let resolvent = CMatrix::identity(n * m, n * m) - &d * &e;
    let sigma_min = crate::numerics::min_singular_value(&resolvent);
    if sigma_min < 1e-12 {
        return Err(Error::Singular(format!(
            "I − D E_T has smallest singular value {sigma_min:e}; tuple too close to the boundary"
        )));
    }
    let x = solve(&resolvent, &c)?;
    let value = a + b * e * x;
    Ok(operator_norm(&value))
}

/// `(1 − |φ(λ)|²) − Σ_r (1 − |λʳ|²) |∂φ/∂λʳ(λ)|`
pub fn schwarz_pick_slack(r: &Realization, lambda: &PolydiskPoint) -> Result<f64> {
    let value = r.evaluate(lambda)?;
    let grad = r.gradient(lambda)?;
    let mut rhs = 0.0;
    for (k, g) in grad.iter().enumerate() {
        let z = lambda.coords().get(k).copied().unwrap_or_default();
        rhs += (1.0 - z.norm_sqr()) * g.norm();
    }
    Ok(1.0 - value.norm_sqr() - rhs)
}

/// Knese realization plus the resampling metadata.
#[derive(Debug, Clone)]
pub struct KneseBuild {
    pub realization: Realization,
    pub resamples: usize,
    pub dependence_threshold: f64,
}

/// True when `|∂φ/∂λʳ|` exceeds the threshold somewhere on a fixed probe set,
/// for every variable `r`.
pub fn depends_on_all_variables(r: &Realization, nvars: usize) -> Result<bool> {
    let probes = [
        [C64::new(0.1, 0.2), C64::new(-0.3, 0.1)],
        [C64::new(-0.4, -0.1), C64::new(0.2, 0.5)],
        [C64::new(0.0, 0.6), C64::new(0.5, -0.3)],
    ];
    let mut seen = vec![false; nvars];
    for p in probes {
        let point = PolydiskPoint(p[..nvars.min(2)].to_vec());
        let g = r.gradient(&point)?;
        for (k, s) in seen.iter_mut().enumerate() {
            if g.get(k).is_some_and(|d| d.norm() > DEPENDENCE_THRESHOLD) {
                *s = true;
            }
        }
    }
    Ok(seen.into_iter().all(|s| s))
}

/// Random 3×3 symmetric unitary `V = U Uᵀ` with one-dimensional `H₁, H₂`.
pub fn knese_build(seed: u64) -> Result<KneseBuild> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for resamples in 0..KNESE_MAX_RESAMPLES {
        let u = random_unitary(3, &mut rng);
        let v = &u * u.transpose();
        let r = Realization::new(vec![1, 1], v)?;
        if depends_on_all_variables(&r, 2)? {
            return Ok(KneseBuild {
                realization: r,
                resamples,
                dependence_threshold: DEPENDENCE_THRESHOLD,
            });
        }
    }
    Err(Error::Degenerate(format!(
        "no symmetric unitary depending on both variables after {KNESE_MAX_RESAMPLES} draws"
    )))
}

/// Mixed partial `∂^{n1+n2} f / ∂z^{n1} ∂w^{n2}` at `(z, w)` by the trapezoid
/// rule on the circles `|ζ| = |η| = radius`, which must enclose the point.
pub fn cauchy_mixed_derivative<F>(f: F, z: C64, w: C64, n1: usize, n2: usize, radius: f64, nodes: usize) -> Result<C64>
where
    F: Fn(C64, C64) -> Result<C64>,
{
    if z.norm() >= radius || w.norm() >= radius {
        return Err(Error::InvalidData("point must lie inside the quadrature circles".into()));
    }
    let circle: Vec<C64> = (0..nodes)
        .map(|k| C64::from_polar(radius, 2.0 * PI * k as f64 / nodes as f64))
        .collect();
    let kernel = |zeta: C64, center: C64, order: usize| zeta / (zeta - center).powu(order as u32 + 1);
    let kz: Vec<C64> = circle.iter().map(|&s| kernel(s, z, n1)).collect();
    let kw: Vec<C64> = circle.iter().map(|&s| kernel(s, w, n2)).collect();
    let mut acc = C64::new(0.0, 0.0);
    for (a, &zeta) in circle.iter().enumerate() {
        for (b, &eta) in circle.iter().enumerate() {
            acc += f(zeta, eta)? * kz[a] * kw[b];
        }
    }
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    Ok(acc * (fact(n1) * fact(n2) / (nodes * nodes) as f64))
}

/// Left and right sides of the higher-order Schwarz bound
///
/// ```text
/// |∂ⁿf/∂z^{n1}∂w^{n2}| ≤ (n−2)! (1−|f|²)/(1−|λ|)^{n−1}
///     · [ (n1²−n1)/(1−|z|²) + 2 n1 n2/(√(1−|z|²)√(1−|w|²)) + (n2²−n2)/(1−|w|²) ]
/// ```
///
/// with `|λ| = max(|z|, |w|)`. The derivative is computed by Cauchy
/// quadrature on circles of radius `(1 + |λ|)/2` around the origin.
pub fn adr_bound_check(r: &Realization, lambda: &PolydiskPoint, n1: usize, n2: usize) -> Result<(f64, f64)> {
    let n = n1 + n2;
    if n < 2 {
        return Err(Error::Unsupported(format!(
            "derivative order {n}: the bound needs n1 + n2 >= 2"
        )));
    }
    if lambda.dim() != 2 {
        return Err(Error::DimensionMismatch("the bound is stated on the bidisk".into()));
    }
    let (z, w) = (lambda.coords()[0], lambda.coords()[1]);
    let size = lambda.sup_norm();
    if size >= 1.0 {
        return Err(Error::OutsideDomain);
    }
    let radius = (1.0 + size) / 2.0;
    let lhs = cauchy_mixed_derivative(|a, b| r.evaluate2(a, b), z, w, n1, n2, radius, CAUCHY_NODES)?.norm();
    let f = r.evaluate(lambda)?;
    let (sz, sw) = (1.0 - z.norm_sqr(), 1.0 - w.norm_sqr());
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let bracket = (n1f * n1f - n1f) / sz + 2.0 * n1f * n2f / (sz.sqrt() * sw.sqrt()) + (n2f * n2f - n2f) / sw;
    let fact: f64 = (1..=n - 2).map(|k| k as f64).product();
    let rhs = fact * (1.0 - f.norm_sqr()) / (1.0 - size).powi(n as i32 - 1) * bracket;
    Ok((lhs, rhs))
}

/// Realization of `z^k` in two variables (`k ≥ 1`): a cyclic shift on `ℂ ⊕ ℂ^k`.
pub fn power_of_z(k: usize) -> Result<Realization> {
    if k == 0 {
        return Realization::constant(2, C64::new(1.0, 0.0));
    }
    let size = k + 1;
    let mut v = CMatrix::zeros(size, size);
    // ℂ → e_1, e_j → e_{j+1}, e_k → ℂ
    v[(1, 0)] = C64::new(1.0, 0.0);
    for j in 1..k {
        v[(j + 1, j)] = C64::new(1.0, 0.0);
    }
    v[(0, k)] = C64::new(1.0, 0.0);
    Realization::new(vec![k, 0], v)
}

/// Realization of the product `λ¹ λ²`.
pub fn product_zw() -> Realization {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    // A = 0, B = e₁ᵀ, C = e₂, D: H₂ → H₁
    let v = CMatrix::from_row_slice(3, 3, &[zero, one, zero, zero, zero, one, one, zero, zero]);
    Realization::new(vec![1, 1], v).expect("permutation matrix")
}

/// Contractive realization of `(λ¹ + λ²)/2`.
///
/// No 3×3 unitary colligation realizes it, so `V` is a contraction with
/// `D = 0` and `B = Cᵀ = (1/√2, 1/√2)`.
pub fn average_zw() -> Realization {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    let v = CMatrix::from_row_slice(3, 3, &[zero, h, h, h, zero, zero, h, zero, zero]);
    Realization::new(vec![1, 1], v).expect("valid size")
}

/// A pseudo-random point of the open bidisk with `max |λʳ| ≤ rmax`.
pub fn random_bidisk_point<R: Rng + ?Sized>(rng: &mut R, rmax: f64) -> PolydiskPoint {
    let mut coord = || C64::from_polar(rmax * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>());
    PolydiskPoint(vec![coord(), coord()])
}
