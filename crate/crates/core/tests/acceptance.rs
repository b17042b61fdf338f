//! Acceptance criteria. Each prints one PASS/FAIL line with the measured
//! quantities; the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pickkit::agler::{
    adr_bound_check, generate_commuting_contractions, knese_build, power_of_z, random_bidisk_point,
    schwarz_pick_slack, vonneumann_test, CommutingTuple,
};
use pickkit::corona::{corona_delta_sweep, toeplitz_corona_disk, Poly, PolyTuple};
use pickkit::numerics::{CMatrix, C64};
use pickkit::pick::{solve_bidisk, solve_disk, PickData, PolydiskPoint, SolverOptions};
use pickkit::realization::{
    affiliation_check, blaschke_degree, build_lurking_isometry_bidisk, build_lurking_isometry_disk,
    interpolation_residual, random_realization, sup_norm_estimate, Realization,
};
use pickkit::sequences::{gleason_distance, GleasonMode};
use pickkit::variety::{distinguished_check, grid_axis, uniqueness_sample, MatrixInnerFunction, UNIQUENESS_TOL};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn point(z: C64, w: C64) -> PolydiskPoint {
    PolydiskPoint(vec![z, w])
}

fn disk_point<R: Rng>(rng: &mut R, rmax: f64) -> C64 {
    C64::from_polar(rmax * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>())
}

/// Bidisk data `λ_i ↦ φ(λ_i)` for a random unitary realization `φ`.
fn realization_problem(seed: u64, n: usize) -> Result<PickData, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = vec![rng.random_range(1..=2), rng.random_range(1..=2)];
    let phi = random_realization(dims, &mut rng);
    let nodes: Vec<PolydiskPoint> = (0..n).map(|_| random_bidisk_point(&mut rng, 0.8)).collect();
    let values = nodes.iter().map(|p| phi.evaluate(p)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    PickData::new(2, nodes, values).map_err(|e| e.to_string())
}

fn uniqueness_case(x: f64, y: f64) -> Result<(PickData, pickkit::pick::PickCertificate), String> {
    let data = PickData::from_real(2, &[&[0.0, 0.0], &[x, y]], &[0.0, 0.5]).map_err(|e| e.to_string())?;
    let rep = solve_bidisk(&data, &SolverOptions::default()).map_err(|e| e.to_string())?;
    if !rep.feasible {
        return Err("solver reported infeasible".into());
    }
    Ok((data, rep.certificate.ok_or("no certificate")?))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (data, cert) = uniqueness_case(0.5, 0.0)?;
    let grid = uniqueness_sample(&data, &cert, 8, 51, UNIQUENESS_TOL, 0).map_err(|e| e.to_string())?;
    let mut dev = 0.0f64;
    for row in &grid.rows {
        let z = C64::new(row.z[0], row.z[1]);
        let w = C64::new(row.w[0], row.w[1]);
        for s in &grid.solutions {
            dev = dev.max((s.evaluate2(z, w).map_err(|e| e.to_string())? - z).norm());
        }
    }
    let elapsed = start.elapsed();
    let pass = grid.max_spread() <= 1e-6 && dev <= 1e-5 && elapsed < Duration::from_secs(10);
    Ok((pass, format!("max spread {:.3e}, max |phi - z| {dev:.3e}, {elapsed:.2?}", grid.max_spread())))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (data, cert) = uniqueness_case(0.5, 0.5)?;
    let grid = uniqueness_sample(&data, &cert, 8, 51, UNIQUENESS_TOL, 0).map_err(|e| e.to_string())?;
    let mut diag = 0.0f64;
    for t in grid_axis(25) {
        for s in &grid.solutions {
            diag = diag.max((s.evaluate2(re(t), re(t)).map_err(|e| e.to_string())? - re(t)).norm());
        }
    }
    let off = grid
        .rows
        .iter()
        .filter(|r| r.z != r.w)
        .map(|r| r.spread)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = diag <= 1e-6 && off >= 1e-3 && elapsed < Duration::from_secs(10);
    Ok((pass, format!("diagonal error {diag:.3e}, max off-diagonal spread {off:.3e}, {elapsed:.2?}")))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (mut worst_cert, mut worst_interp, mut worst_sup) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = 0;
    for seed in 0..100u64 {
        let n = 1 + (seed as usize % 10);
        let data = realization_problem(1000 + seed, n)?;
        let rep = solve_bidisk(&data, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let cert = rep.certificate.ok_or("no certificate")?;
        worst_cert = worst_cert.max(cert.residual);
        if !rep.feasible || cert.residual > 1e-7 {
            failures += 1;
            continue;
        }
        let r = match build_lurking_isometry_bidisk(&data, &cert, Some(seed)) {
            Ok(r) => r,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        worst_interp = worst_interp.max(interpolation_residual(&r, &data).map_err(|e| e.to_string())?);
        worst_sup = worst_sup.max(sup_norm_estimate(&r, 24).map_err(|e| e.to_string())?);
    }
    let elapsed = start.elapsed();
    let pass = failures == 0
        && worst_cert <= 1e-7
        && worst_interp <= 1e-6
        && worst_sup <= 1.0 + 1e-8
        && elapsed < Duration::from_secs(120);
    Ok((
        pass,
        format!(
            "{failures} failures, certificate residual {worst_cert:.3e}, interpolation {worst_interp:.3e}, sup {worst_sup:.12}, {elapsed:.2?}"
        ),
    ))
}

fn criterion_4() -> Outcome {
    let e = |e: pickkit::Error| e.to_string();
    let data = PickData::from_real(1, &[&[0.0], &[0.5]], &[0.0, 0.5]).map_err(e)?;
    let rep = solve_disk(&data, 1e-9).map_err(e)?;
    let min = rep.min_eigenvalue().ok_or("no eigenvalues")?;
    let rank = rep.rank.ok_or("no rank")?;
    let r = build_lurking_isometry_disk(&data, Some(0)).map_err(e)?;
    let mut dev = 0.0f64;
    for a in 1..=40 {
        for b in 0..64 {
            let z = C64::from_polar(0.99 * a as f64 / 40.0, 2.0 * PI * b as f64 / 64.0);
            dev = dev.max((r.evaluate1(z).map_err(e)? - z).norm());
        }
    }
    let bad = PickData::from_real(1, &[&[0.0], &[0.5]], &[0.0, 0.9]).map_err(e)?;
    let disk_rejects = !solve_disk(&bad, 1e-9).map_err(e)?.feasible;
    let bad2 = PickData::from_real(2, &[&[0.0, 0.0], &[0.5, 0.0]], &[0.0, 0.9]).map_err(e)?;
    let bidisk_rejects = !solve_bidisk(&bad2, &SolverOptions::default()).map_err(e)?.feasible;
    let pass = min.abs() <= 1e-9 && rank == 1 && dev <= 1e-8 && disk_rejects && bidisk_rejects;
    Ok((
        pass,
        format!("min eigenvalue {min:.3e}, rank {rank}, max |phi - z| {dev:.3e}, witness rejected: disk {disk_rejects}, bidisk {bidisk_rejects}"),
    ))
}

fn criterion_5() -> Outcome {
    let e = |e: pickkit::Error| e.to_string();
    let mut worst = 0.0f64;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let dims = vec![rng.random_range(1..=3), rng.random_range(0..=3)];
        let r = random_realization(dims, &mut rng);
        let t = generate_commuting_contractions(2, rng.random_range(1..=6), seed).map_err(e)?;
        worst = worst.max(vonneumann_test(&r, &t).map_err(e)?);
    }
    let mut scalar = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let r = random_realization(vec![rng.random_range(1..=3), rng.random_range(1..=3)], &mut rng);
        let (t1, t2) = (disk_point(&mut rng, 0.999), disk_point(&mut rng, 0.999));
        let tuple = CommutingTuple::new(vec![CMatrix::from_element(1, 1, t1), CMatrix::from_element(1, 1, t2)]).map_err(e)?;
        let diff = (vonneumann_test(&r, &tuple).map_err(e)? - r.evaluate2(t1, t2).map_err(e)?.norm()).abs();
        scalar = scalar.max(diff);
    }
    let pass = worst <= 1.0 + 1e-8 && scalar <= 1e-10;
    Ok((pass, format!("max norm {worst:.12}, scalar mismatch {scalar:.3e}")))
}

fn criterion_6() -> Outcome {
    let e = |e: pickkit::Error| e.to_string();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for seed in 0..50u64 {
        let data = realization_problem(3000 + seed, 2 + seed as usize % 5)?;
        let rep = solve_bidisk(&data, &SolverOptions::default()).map_err(e)?;
        let cert = rep.certificate.ok_or("no certificate")?;
        if !rep.feasible {
            failures += 1;
            continue;
        }
        let r = build_lurking_isometry_bidisk(&data, &cert, Some(seed)).map_err(e)?;
        let (a, b) = affiliation_check(&r, &data, &cert).map_err(e)?;
        worst = worst.max(a).max(b);
    }
    Ok((failures == 0 && worst <= 1e-7, format!("{failures} failures, max Grammian mismatch {worst:.3e}")))
}

fn criterion_7() -> Outcome {
    let e = |e: pickkit::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = point(disk_point(&mut rng, 0.7), disk_point(&mut rng, 0.7));
        let b = point(disk_point(&mut rng, 0.7), disk_point(&mut rng, 0.7));
        let exact = gleason_distance(&a, &b, GleasonMode::ClosedForm).map_err(e)?;
        let oracle = gleason_distance(&a, &b, GleasonMode::Oracle).map_err(e)?;
        worst = worst.max((exact - oracle).abs());
    }
    let o = point(re(0.0), re(0.0));
    let mut named = 0.0f64;
    for other in [point(re(0.5), re(0.0)), point(re(0.5), re(0.5))] {
        for mode in [GleasonMode::ClosedForm, GleasonMode::Oracle] {
            named = named.max((gleason_distance(&o, &other, mode).map_err(e)? - 0.5).abs());
        }
    }
    Ok((worst <= 1e-4 && named <= 1e-4, format!("max mode disagreement {worst:.3e}, named pairs off by {named:.3e}")))
}

fn criterion_8() -> Outcome {
    let e = |e: pickkit::Error| e.to_string();
    let mut min_slack = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(8000 + seed);
        let r = random_realization(vec![rng.random_range(1..=3), rng.random_range(1..=3)], &mut rng);
        for _ in 0..500 {
            let p = random_bidisk_point(&mut rng, 0.99);
            min_slack = min_slack.min(schwarz_pick_slack(&r, &p).map_err(e)?);
        }
    }
    let mut knese = 0.0f64;
    for seed in 0..5u64 {
        let k = knese_build(seed).map_err(e)?;
        for a in 0..21 {
            for b in 0..21 {
                let p = point(re(-0.95 + 0.095 * a as f64), re(-0.95 + 0.095 * b as f64));
                knese = knese.max(schwarz_pick_slack(&k.realization, &p).map_err(e)?.abs());
            }
        }
    }
    let z2: Realization = power_of_z(2).map_err(e)?;
    let (lhs, rhs) = adr_bound_check(&z2, &point(re(0.0), re(0.0)), 2, 0).map_err(e)?;
    let adr = (lhs - 2.0).abs().max((rhs - 2.0).abs());
    let pass = min_slack >= -1e-8 && knese <= 1e-6 && adr <= 1e-6;
    Ok((pass, format!("min slack {min_slack:.3e} over 10000 points, Knese |slack| {knese:.3e}, ADR equality off by {adr:.3e}")))
}

fn criterion_9() -> Outcome {
    let e = |e: pickkit::Error| e.to_string();
    let mut inner_dev = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let r = random_realization(vec![rng.random_range(1..=5)], &mut rng);
        for k in 0..512 {
            let z = C64::from_polar(1.0, 2.0 * PI * k as f64 / 512.0);
            let v = r.evaluate_closed(&PolydiskPoint(vec![z])).map_err(e)?;
            inner_dev = inner_dev.max((v.norm() - 1.0).abs());
        }
    }
    // full rank: draws whose Pick matrix is well conditioned enough that the
    // rank is unambiguous; others are skipped
    let mut mismatches = Vec::new();
    let (mut accepted, mut draw) = (0, 0u64);
    while accepted < 20 {
        let mut rng = ChaCha8Rng::seed_from_u64(9500 + draw);
        draw += 1;
        let n = 1 + accepted % 5;
        let pts: Vec<PolydiskPoint> = (0..n).map(|_| PolydiskPoint(vec![disk_point(&mut rng, 0.8)])).collect();
        let values: Vec<C64> = (0..n).map(|_| disk_point(&mut rng, 0.3)).collect();
        let data = PickData::new(1, pts, values).map_err(e)?;
        let rep = solve_disk(&data, 1e-9).map_err(e)?;
        let eig = rep.disk_eigenvalues.clone().ok_or("no eigenvalues")?;
        if eig[0] < 1e-6 * eig[n - 1] {
            continue;
        }
        accepted += 1;
        let rank = rep.rank.ok_or("no rank")?;
        let r = build_lurking_isometry_disk(&data, Some(draw)).map_err(e)?;
        let degree = blaschke_degree(&r, 4096).map_err(e)?;
        if degree != rank || rank != n {
            mismatches.push(format!("draw {draw}: degree {degree}, rank {rank}, nodes {n}"));
        }
    }
    let pass = inner_dev <= 1e-6 && mismatches.is_empty();
    Ok((pass, format!("max ||phi| - 1| {inner_dev:.3e}, degree/rank mismatches {mismatches:?}")))
}

fn criterion_10() -> Outcome {
    let e = |e: pickkit::Error| e.to_string();
    let mut failures = 0;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let psi = MatrixInnerFunction::random_pure(2, 2 + seed as usize % 3, &mut rng).map_err(e)?;
        let rep = distinguished_check(&psi, 200, 200).map_err(e)?;
        worst = worst.max(rep.max_boundary_deviation);
        if !rep.pass {
            failures += 1;
        }
    }
    let z = MatrixInnerFunction::from_scalar(&Realization::identity_disk()).map_err(e)?;
    let z2 = MatrixInnerFunction::new(1, power_of_z(2).map_err(e)?.matrix().clone()).map_err(e)?;
    let diag = distinguished_check(&z.direct_sum(&z2).map_err(e)?, 200, 200).map_err(e)?;
    let pass = failures == 0 && diag.pass && diag.max_boundary_deviation <= 1e-14;
    Ok((
        pass,
        format!(
            "{failures} random failures, max boundary deviation {worst:.3e}, diag(z, z^2) deviation {:.3e}",
            diag.max_boundary_deviation
        ),
    ))
}

fn criterion_11() -> Outcome {
    let e = |e: pickkit::Error| e.to_string();
    let nodes = [re(0.0), re(0.5)];
    let z_half = PolyTuple::univariate(&[&[re(0.0), re(1.0)], &[re(0.5)]]).map_err(e)?;
    let z_only = PolyTuple::univariate(&[&[re(0.0), re(1.0)]]).map_err(e)?;
    let pass_half = toeplitz_corona_disk(&z_half, 0.25, &nodes).map_err(e)?.pass;
    let fail_z = !toeplitz_corona_disk(&z_only, 0.1, &nodes).map_err(e)?.pass;

    let zw = PolyTuple::new(
        2,
        vec![
            Poly::new(2, vec![(1, 0, re(1.0))]).map_err(e)?,
            Poly::new(2, vec![(0, 1, re(1.0))]).map_err(e)?,
        ],
    )
    .map_err(e)?;
    let pts = [point(re(0.5), re(0.4)), point(re(-0.4), re(0.6)), point(C64::new(0.3, 0.3), re(-0.5))];
    let min_energy = pts.iter().map(|p| zw.energy(p)).collect::<Result<Vec<_>, _>>().map_err(e)?;
    let top = 1.2 * min_energy.iter().copied().fold(f64::INFINITY, f64::min);
    let sweep = corona_delta_sweep(&zw, &pts, 0.0, top, 20, &SolverOptions::default()).map_err(e)?;
    let switches = sweep.points.windows(2).filter(|w| w[0].pass != w[1].pass).count();
    let pass = pass_half && fail_z && sweep.monotone && sweep.points[0].pass && !sweep.points[19].pass;
    Ok((
        pass,
        format!("disk (z,1/2) passes {pass_half}, (z) fails {fail_z}, bidisk sweep monotone {} with {switches} switch", sweep.monotone),
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("uniqueness example 1", criterion_1),
        ("uniqueness example 2", criterion_2),
        ("round-trip feasibility", criterion_3),
        ("disk oracle consistency", criterion_4),
        ("Ando property suite", criterion_5),
        ("affiliation identity", criterion_6),
        ("Gleason distance cross-validation", criterion_7),
        ("Schwarz-Pick and ADR", criterion_8),
        ("inner functions and degree", criterion_9),
        ("distinguished varieties", criterion_10),
        ("corona certificates", criterion_11),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} [{:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
