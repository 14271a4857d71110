//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured quantity (visible with `-- --nocapture`).
//!
//! Tolerances are pinned here, not configurable; a red test is a real
//! regression. Random inputs are seeded, so every run measures the same
//! quantities.

use std::f64::consts::PI;
use std::time::Instant;

use calderon_core::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn unit_grid(n: usize) -> Grid {
    Grid::new(n, n, Rect::unit_square()).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_boundary(g: Grid, rng: &mut ChaCha8Rng) -> BoundaryFunction<f64> {
    let values: Vec<f64> = (0..g.num_boundary()).map(|_| rng.sample(StandardNormal)).collect();
    BoundaryFunction::from_values(g, values).unwrap()
}

/// Smooth random boundary data scaled to a given sup norm.
fn smooth_boundary(g: Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> BoundaryFunction<f64> {
    let c: Vec<f64> = (0..6).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let raw = BoundaryFunction::from_fn(g, |x, y| {
        c[0] + c[1] * (PI * x).cos()
            + c[2] * (PI * y).sin()
            + c[3] * (2.0 * PI * x).sin()
            + c[4] * (2.0 * PI * y).cos()
            + c[5] * x * y
    });
    let sup = raw.sup_norm();
    raw.scale(amplitude / sup)
}

fn gaussian_bump(g: Grid) -> GridFunction<f64> {
    GridFunction::from_fn(g, |x, y| (-50.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp())
}

/// Criterion 1: the integral identity
/// ∮ (DᵐΛ_q)₀(f₁…f_m)·f_{m+1} dS = −m!·∬ q·v_{f₁}⋯v_{f_{m+1}} dV
/// on 33×33 for m ∈ {2, 3}, five random data tuples, relative residual
/// at most 1e-9, in under 10 seconds.
#[test]
fn criterion_01_integral_identity() {
    let start = Instant::now();
    let g = unit_grid(33);
    let op = LaplaceOperator::new(g).unwrap();
    let q = GridFunction::from_fn(g, |x, y| 1.0 + 0.5 * (3.0 * x).sin() * (1.0 - y));
    let mut r = rng(1001);
    let mut worst: f64 = 0.0;
    for m in [2u32, 3] {
        let p = SemilinearProblem::new(q.clone(), m).unwrap();
        let mfact: f64 = (1..=m as u64).product::<u64>() as f64;
        for _ in 0..5 {
            let data: Vec<BoundaryFunction<f64>> =
                (0..=m).map(|_| normal_boundary(g, &mut r)).collect();
            let flux = mth_linearization_direct(&p, &op, &data[..m as usize]).unwrap();
            let lhs = flux.pointwise_mul(&data[m as usize]).boundary_integral();
            let mut prod = q.clone();
            for f in &data {
                prod = prod.pointwise_mul(&op.solve_dirichlet(f).unwrap());
            }
            let rhs = -mfact * prod.interior_integral();
            let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
            worst = worst.max(rel);
            assert!(rel <= 1e-9, "m = {m}: relative residual {rel:e}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("PASS criterion 1: integral identity, worst relative residual {worst:.3e} in {elapsed:?}");
}

/// Criterion 2: the first linearization of the nonlinear DN map is the
/// Laplace DN map: relative sup error ≤ 1e-5 at ε = 1e-3 and a log-log
/// slope in ε within [1.8, 2.2].
#[test]
fn criterion_02_first_linearization_is_laplace_dn() {
    let g = unit_grid(33);
    let p = SemilinearProblem::new(GridFunction::constant(g, 1.0), 2).unwrap();
    let op = LaplaceOperator::new(g).unwrap();
    let f = BoundaryFunction::from_fn(g, |x, y| (2.0 * x).sin() + 0.5 * y * y);
    let lin = op.linear_dn(&f).unwrap();
    let scale = lin.sup_norm();

    let mut errs = Vec::new();
    for eps in [4e-3, 2e-3, 1e-3] {
        let req = LinearizationRequest::new(&p, vec![f.clone()], eps).unwrap();
        let fd = mixed_fd_dn(&req).unwrap();
        errs.push(fd.sub(&lin).sup_norm() / scale);
    }
    let rel = errs[2];
    assert!(rel <= 1e-5, "relative error {rel:e} at eps = 1e-3");
    let slope = (errs[0] / errs[2]).ln() / 4.0f64.ln();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}");
    println!("PASS criterion 2: first linearization, rel err {rel:.3e}, slope {slope:.3}");
}

/// Criterion 3: the intermediate linearizations 2 ≤ j ≤ m−1 vanish
/// identically; their FD sup norms stay below 1e-4 of the first-order
/// scale for m = 3 and m = 4 on 33×33.
#[test]
fn criterion_03_vanishing_orders() {
    let g = unit_grid(33);
    let op = LaplaceOperator::new(g).unwrap();
    let data: Vec<BoundaryFunction<f64>> = (0..3)
        .map(|i| {
            BoundaryFunction::from_fn(g, move |x, y| {
                ((1.0 + i as f64) * x).cos() + 0.3 * (i as f64) * y
            })
        })
        .collect();
    let scale = op.linear_dn(&data[0]).unwrap().sup_norm();
    let mut measured = Vec::new();
    for m in [3u32, 4] {
        let p = SemilinearProblem::new(GridFunction::constant(g, 1.0), m).unwrap();
        let sups = verify_vanishing_orders(&p, &data, 1e-3).unwrap();
        assert_eq!(sups.len(), m as usize - 2);
        for (j, sup) in sups.iter().enumerate() {
            assert!(
                *sup <= 1e-4 * scale,
                "m = {m}, order {}: sup {sup:e} vs scale {scale:e}",
                j + 2
            );
            measured.push(sup / scale);
        }
    }
    let shown: Vec<String> = measured.iter().map(|v| format!("{v:.3e}")).collect();
    println!("PASS criterion 3: vanishing orders, relative sups {shown:?}");
}

/// Criterion 4: FD and direct m-th linearization agree to 5e-3 relative
/// sup at ε = 1e-3, m = 2, 33×33.
#[test]
fn criterion_04_fd_vs_direct() {
    let g = unit_grid(33);
    let p = SemilinearProblem::new(GridFunction::constant(g, 1.0), 2).unwrap();
    let op = LaplaceOperator::new(g).unwrap();
    let f1 = BoundaryFunction::from_fn(g, |x, y| x * y + 0.5);
    let f2 = BoundaryFunction::from_fn(g, |x, y| (x + 2.0 * y).sin());
    let direct = mth_linearization_direct(&p, &op, &[f1.clone(), f2.clone()]).unwrap();
    let req = LinearizationRequest::new(&p, vec![f1, f2], 1e-3).unwrap();
    let fd = mixed_fd_dn(&req).unwrap();
    let rel = fd.sub(&direct).sup_norm() / direct.sup_norm();
    assert!(rel <= 5e-3, "relative sup difference {rel:e}");
    println!("PASS criterion 4: FD vs direct second linearization, rel {rel:.3e}");
}

/// Criterion 5: Fourier sample correctness on a Gaussian bump at
/// ξ = (π, 0): dn_direct vs the quadrature oracle within 2% at 65×65,
/// with the error shrinking like h² through 33 → 65 → 129.
#[test]
fn criterion_05_fourier_sample() {
    let xi = [PI, 0.0];
    let mut errs = Vec::new();
    for n in [33usize, 65, 129] {
        let g = unit_grid(n);
        let q = gaussian_bump(g);
        let p = SemilinearProblem::new(q, 2).unwrap();
        let op = LaplaceOperator::new(g).unwrap();
        let s = recover_fourier_sample(&p, &op, xi, SampleMethod::DnDirect, 1e-3).unwrap();
        let o = recover_fourier_sample(&p, &op, xi, SampleMethod::QuadratureOracle, 1e-3).unwrap();
        errs.push((s.value - o.value).norm() / o.value.norm());
    }
    assert!(errs[1] <= 0.02, "65×65 relative error {:e}", errs[1]);
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "refinement ratio {ratio}");
    }
    println!(
        "PASS criterion 5: Fourier sample rel err {:.3e} at 65×65, refinement ratios {:.2}, {:.2}",
        errs[1],
        errs[0] / errs[1],
        errs[1] / errs[2]
    );
}

/// Criterion 6: end-to-end reconstruction. `q = cos(2πx₁)` on the unit
/// square, box side 1, radius 2π: L² relative error ≤ 5%. Gaussian bump
/// with radius sweep {π, 2π, 4π}: error strictly decreasing. Under five
/// minutes at 65×65.
#[test]
fn criterion_06_end_to_end_reconstruction() {
    let start = Instant::now();
    let g = unit_grid(65);
    let op = LaplaceOperator::new(g).unwrap();

    let q = GridFunction::from_fn(g, |x, _| (2.0 * PI * x).cos());
    let p = SemilinearProblem::new(q.clone(), 2).unwrap();
    let lat = FreqLattice::new(1.0, 2.0 * PI).unwrap();
    let r = reconstruct_potential(&p, &op, &lat, SampleMethod::DnDirect, 1e-3, Some(&q)).unwrap();
    let cos_err = r.l2_rel_error.unwrap();
    assert!(cos_err <= 0.05, "cosine reconstruction error {cos_err}");

    let qb = gaussian_bump(g);
    let pb = SemilinearProblem::new(qb.clone(), 2).unwrap();
    let mut sweep = Vec::new();
    for radius in [PI, 2.0 * PI, 4.0 * PI] {
        let lat = FreqLattice::new(1.0, radius).unwrap();
        let r =
            reconstruct_potential(&pb, &op, &lat, SampleMethod::DnDirect, 1e-3, Some(&qb)).unwrap();
        sweep.push(r.l2_rel_error.unwrap());
    }
    assert!(sweep[0] > sweep[1] && sweep[1] > sweep[2], "sweep not decreasing: {sweep:?}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "PASS criterion 6: reconstruction, cosine err {cos_err:.3e}, bump sweep {:?} in {elapsed:?}",
        sweep.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
    );
}

/// Criterion 7: gauge symmetry of the DN map under conformal rescaling
/// with σ = 1 on the boundary: sup difference ≤ 1e-10 over 10 random
/// admissible (σ, f) pairs.
#[test]
fn criterion_07_gauge_symmetry() {
    let g = unit_grid(33);
    let q = GridFunction::from_fn(g, |x, y| 1.0 + 0.3 * (3.0 * x).cos() * y);
    let p = SemilinearProblem::new(q, 2).unwrap();
    let mut r = rng(7001);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        // positive factor built from polynomial bubbles, exactly 1 on ∂
        let c: Vec<f64> = (0..3).map(|_| rng_uniform(&mut r, -0.3, 0.3)).collect();
        let sigma = ConformalFactor::new(GridFunction::from_fn(g, |x, y| {
            let bx = 4.0 * x * (1.0 - x);
            let by = 4.0 * y * (1.0 - y);
            1.0 + c[0] * bx * by + c[1] * bx * bx * by + c[2] * bx * by * by
        }))
        .unwrap();
        assert!(sigma.boundary_is_one());
        let f = smooth_boundary(g, &mut r, 0.01);
        let diff = gauge_check(&p, &sigma, &f).unwrap();
        worst = worst.max(diff);
        assert!(diff <= 1e-10, "gauge difference {diff:e}");
    }
    println!("PASS criterion 7: gauge symmetry, worst sup difference {worst:.3e}");
}

fn rng_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

/// Criterion 8: well-posedness. At the 33×33, q ≡ 1, m = 2 baseline:
/// Newton converges in ≤ 8 iterations with quadratic residual decay for
/// ‖f‖∞ = δ̂/2; f ≡ 10·δ̂ raises NonConvergence; and the smallness radius
/// obeys the exact scaling δ̂(λq) = δ̂(q)/λ within 5% for λ ∈ {2, 4}.
///
/// The convergence runs use a tolerance sitting just above the rounding
/// floor of the residual evaluation at that amplitude (the default 1e-12
/// is below the reachable floor at amplitudes of order one on this grid).
#[test]
fn criterion_08_well_posedness() {
    let g = unit_grid(33);
    let p = SemilinearProblem::new(GridFunction::constant(g, 1.0), 2).unwrap();
    let delta = estimate_delta(&p).unwrap();
    // Frozen baseline for the 33×33 configuration (regression guard).
    let baseline = 2.374813;
    assert!(
        (delta - baseline).abs() <= 1e-6 * baseline,
        "delta {delta} drifted from recorded baseline {baseline}"
    );

    let a = delta / 2.0;
    let h2 = g.spacing() * g.spacing();
    let tol = (100.0 * f64::EPSILON * (4.0 * a / h2 + a * a)).max(1e-12);
    let mut r = rng(8001);
    let mut fs = vec![
        BoundaryFunction::constant(g, a),
        BoundaryFunction::constant(g, -a),
    ];
    for _ in 0..3 {
        fs.push(smooth_boundary(g, &mut r, a));
    }
    let mut worst_iters = 0;
    for f in &fs {
        let (_, rep) = solve_semilinear(&p, f, tol).unwrap();
        assert!(rep.converged && rep.iterations <= 8, "iterations {}", rep.iterations);
        worst_iters = worst_iters.max(rep.iterations);
        // Quadratic decay over the last three informative residuals: the
        // log-reduction of the later step at least 1.5× the earlier one.
        let usable: Vec<f64> = rep
            .residuals
            .iter()
            .copied()
            .filter(|&x| x >= 10.0 * rep.residual_floor && x > 0.0)
            .collect();
        if usable.len() >= 3 {
            let n = usable.len();
            let first = (usable[n - 3] / usable[n - 2]).ln();
            let second = (usable[n - 2] / usable[n - 1]).ln();
            assert!(second >= 1.5 * first, "decay ratios {first:.2} then {second:.2}");
        }
    }

    match solve_semilinear(&p, &BoundaryFunction::constant(g, 10.0 * delta), 1e-12) {
        Err(Error::NonConvergence { .. }) => {}
        other => panic!("expected NonConvergence at 10·delta, got {other:?}"),
    }

    for lam in [2.0f64, 4.0] {
        let pl = SemilinearProblem::new(GridFunction::constant(g, lam), 2).unwrap();
        let dl = estimate_delta(&pl).unwrap();
        let dev = (dl - delta / lam).abs() / (delta / lam);
        assert!(dev <= 0.05, "scaling law deviation {dev} at lambda = {lam}");
    }
    println!(
        "PASS criterion 8: well-posedness, delta {delta:.6}, worst iterations {worst_iters}, scaling law within 5%"
    );
}

/// Criterion 9: discrete completeness of products of harmonic functions:
/// 12×12 grid, m = 4, 5× oversampled random products, seed 7 — full rank
/// and a bit-identical smallest singular value across reruns.
#[test]
fn criterion_09_completeness() {
    let g = Grid::new(12, 12, Rect::unit_square()).unwrap();
    let n = 5 * g.num_interior();
    let (smin, deficit) = completeness_smin(g, 4, n, 7).unwrap();
    assert_eq!(deficit, 0, "rank deficit {deficit}");
    let (smin2, _) = completeness_smin(g, 4, n, 7).unwrap();
    assert_eq!(smin.to_bits(), smin2.to_bits(), "rerun not bit-identical");
    // Recorded value for this configuration.
    assert_eq!(smin.to_bits(), 0x3e843659b3c2491f, "smin {smin:e} drifted");
    println!("PASS criterion 9: completeness, smin {smin:.6e}, rank deficit 0, bit-stable");
}

/// Criterion 10: stability probe. A high-frequency perturbation moves the
/// second linearization strictly less than a low-frequency one of equal
/// L² norm, and both distances scale linearly (within 1%) under
/// amplitude halving.
#[test]
fn criterion_10_stability_probe() {
    let g = unit_grid(33);
    let base = GridFunction::constant(g, 1.0);
    let bump = gaussian_bump(g);
    let high = GridFunction::from_fn(g, |x, y| {
        (8.0 * PI * x).cos() * (-50.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp()
    });
    let low = bump.scale(high.l2_norm() / bump.l2_norm());
    assert!((high.l2_norm() - low.l2_norm()).abs() <= 1e-12 * high.l2_norm());

    let rows = stability_probe(
        &base,
        &[high.clone(), low, high.scale(0.5), high.scale(0.25)],
    )
    .unwrap();
    assert!(
        rows[0].dn_distance < rows[1].dn_distance,
        "ordering violated: high {:e} vs low {:e}",
        rows[0].dn_distance,
        rows[1].dn_distance
    );
    for (num, den) in [(0usize, 2usize), (2, 3)] {
        let dn_ratio = rows[num].dn_distance / rows[den].dn_distance;
        let l2_ratio = rows[num].l2_distance / rows[den].l2_distance;
        assert!((dn_ratio - 2.0).abs() <= 0.02, "dn ratio {dn_ratio}");
        assert!((l2_ratio - 2.0).abs() <= 0.02, "l2 ratio {l2_ratio}");
    }
    println!(
        "PASS criterion 10: stability probe, dn(high) {:.3e} < dn(low) {:.3e}, linear scaling",
        rows[0].dn_distance, rows[1].dn_distance
    );
}
