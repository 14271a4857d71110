//! Subcommand implementations. Each run validates the configuration,
//! computes its artifacts in memory, and writes them in one atomic
//! directory swap — a failed run leaves no partial output.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use calderon_core::{
    completeness_smin, estimate_delta, gauge_check, mixed_fd_dn, mth_linearization_direct,
    reconstruct_potential, solve_semilinear_with, suggest_eps, verify_vanishing_orders,
    BoundaryFunction, ConformalFactor, FreqLattice, Grid, GridFunction, InitialGuess,
    LaplaceOperator, LinearizationRequest, SampleMethod, SemilinearProblem,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::config::{self, DataConfig, Resolved};
use crate::io;
use crate::manifest::{input_hash, now_unix, Manifest};

/// Failure classes mapped to exit codes: configuration errors exit 2,
/// everything after validation exits 3.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Run(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "configuration error: {msg}"),
            RunError::Run(msg) => write!(f, "run failed: {msg}"),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Run(_) => 3,
        }
    }
}

fn run_err(e: calderon_core::Error) -> RunError {
    RunError::Run(e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Forward,
    Dn,
    Linearize,
    Reconstruct,
    Verify,
    ProbeStability,
}

impl Subcommand {
    fn name(self) -> &'static str {
        match self {
            Subcommand::Forward => "forward",
            Subcommand::Dn => "dn",
            Subcommand::Linearize => "linearize",
            Subcommand::Reconstruct => "reconstruct",
            Subcommand::Verify => "verify",
            Subcommand::ProbeStability => "probe-stability",
        }
    }
}

pub fn run(
    subcommand: Subcommand,
    config_path: &Path,
    output_override: Option<PathBuf>,
) -> Result<PathBuf, RunError> {
    let bytes = fs::read(config_path)
        .map_err(|e| RunError::Config(format!("{}: {e}", config_path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| RunError::Config("config is not UTF-8".to_string()))?;
    let parsed = config::parse(&text).map_err(RunError::Config)?;
    let config_dir = config_path.parent().unwrap_or(Path::new("."));
    let mut resolved = config::resolve(parsed, config_dir).map_err(RunError::Config)?;
    if let Some(out) = output_override {
        resolved.output_dir = out;
    }

    let files = match subcommand {
        Subcommand::Forward => forward(&resolved)?,
        Subcommand::Dn => dn(&resolved)?,
        Subcommand::Linearize => linearize(&resolved)?,
        Subcommand::Reconstruct => reconstruct(&resolved)?,
        Subcommand::Verify => verify(&resolved)?,
        Subcommand::ProbeStability => probe_stability(&resolved)?,
    };

    let manifest = Manifest {
        subcommand: subcommand.name(),
        config: &resolved.config,
        input_sha256: input_hash(&bytes, resolved.potential_file.as_deref()),
        artifacts: files.iter().map(|(name, _)| name.clone()).collect(),
        timestamp_unix: now_unix(),
    };
    let mut files = files;
    files.push(("manifest.json".to_string(), to_json(&manifest)?));

    write_atomic(&resolved.output_dir, &files)?;
    Ok(resolved.output_dir.clone())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, RunError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| RunError::Run(e.to_string()))
}

fn write_atomic(output_dir: &Path, files: &[(String, String)]) -> Result<(), RunError> {
    let io_err = |e: std::io::Error| RunError::Run(format!("writing artifacts: {e}"));
    let parent = match output_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err)?;
    let name = output_dir
        .file_name()
        .ok_or_else(|| RunError::Config("output_dir has no final component".to_string()))?;
    let tmp = parent.join(format!("{}.partial", name.to_string_lossy()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(io_err)?;
    }
    fs::create_dir_all(&tmp).map_err(io_err)?;
    for (file, contents) in files {
        fs::write(tmp.join(file), contents).map_err(io_err)?;
    }
    if output_dir.exists() {
        fs::remove_dir_all(output_dir).map_err(io_err)?;
    }
    fs::rename(&tmp, output_dir).map_err(io_err)?;
    Ok(())
}

/// Smooth seeded boundary data used by the random data kind and the
/// verify probes.
fn smooth_random_boundary(g: Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> BoundaryFunction<f64> {
    let c: Vec<f64> = (0..6).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let rect = g.rect();
    let raw = BoundaryFunction::from_fn(g, move |x, y| {
        let xn = (x - rect.x0) / rect.lx;
        let yn = (y - rect.y0) / rect.ly;
        c[0] + c[1] * (PI * xn).cos()
            + c[2] * (PI * yn).sin()
            + c[3] * (2.0 * PI * xn).sin()
            + c[4] * (2.0 * PI * yn).cos()
            + c[5] * xn * yn
    });
    let sup = raw.sup_norm();
    raw.scale(amplitude / sup)
}

fn boundary_data(r: &Resolved) -> BoundaryFunction<f64> {
    let g = r.grid;
    match &r.config.data {
        DataConfig::Constant { amplitude } => BoundaryFunction::constant(g, *amplitude),
        DataConfig::TraceX { amplitude } => {
            let a = *amplitude;
            BoundaryFunction::from_fn(g, move |x, _| a * x)
        }
        DataConfig::Cosine { amplitude, mode } => {
            let perimeter = g.perimeter();
            let (a, k) = (*amplitude, *mode as f64);
            let mut values = Vec::with_capacity(g.num_boundary());
            for b in 0..g.num_boundary() {
                let (ix, iy) = g.boundary_node(b);
                let s = g.arclength(ix, iy);
                values.push(a * (2.0 * PI * k * s / perimeter).cos());
            }
            BoundaryFunction::from_values(g, values).expect("cosine data is finite")
        }
        DataConfig::Random { amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(r.config.seed);
            smooth_random_boundary(g, &mut rng, *amplitude)
        }
    }
}

fn problem(r: &Resolved) -> Result<SemilinearProblem, RunError> {
    SemilinearProblem::new(r.q.clone(), r.config.m).map_err(run_err)
}

fn report_json(rep: &calderon_core::SolveReport) -> serde_json::Value {
    json!({
        "converged": rep.converged,
        "iterations": rep.iterations,
        "final_residual": rep.final_residual,
        "norm_ratio": rep.norm_ratio,
    })
}

fn forward(r: &Resolved) -> Result<Vec<(String, String)>, RunError> {
    let p = problem(r)?;
    let f = boundary_data(r);
    let (u, rep) = solve_semilinear_with(
        &p,
        &f,
        r.config.solver.tol,
        InitialGuess::HarmonicExtension,
        r.config.solver.max_iter,
    )
    .map_err(run_err)?;
    Ok(vec![
        ("u.csv".to_string(), io::write_grid_function_real(&u)),
        ("f.csv".to_string(), io::write_boundary_function_real(&f)),
        ("report.json".to_string(), to_json(&report_json(&rep))?),
    ])
}

fn dn(r: &Resolved) -> Result<Vec<(String, String)>, RunError> {
    let p = problem(r)?;
    let f = boundary_data(r);
    let (u, rep) = solve_semilinear_with(
        &p,
        &f,
        r.config.solver.tol,
        InitialGuess::HarmonicExtension,
        r.config.solver.max_iter,
    )
    .map_err(run_err)?;
    let flux = u.normal_derivative_with_laplacian(&p.laplacian_of_solution(&u));
    Ok(vec![
        ("dn.csv".to_string(), io::write_boundary_function_real(&flux)),
        ("f.csv".to_string(), io::write_boundary_function_real(&f)),
        ("report.json".to_string(), to_json(&report_json(&rep))?),
    ])
}

fn linearize(r: &Resolved) -> Result<Vec<(String, String)>, RunError> {
    let p = problem(r)?;
    let op = LaplaceOperator::new(r.grid).map_err(run_err)?;
    let m = r.config.m as usize;
    let mut data = vec![boundary_data(r)];
    let amplitude = data[0].sup_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(r.config.seed ^ 0x11B);
    while data.len() < m {
        data.push(smooth_random_boundary(r.grid, &mut rng, amplitude));
    }
    let direct = mth_linearization_direct(&p, &op, &data).map_err(run_err)?;
    let eps = fd_eps(r, m);
    let req = LinearizationRequest::new(&p, data, eps).map_err(run_err)?;
    let fd = mixed_fd_dn(&req).map_err(run_err)?;
    let sup_diff = fd.sub(&direct).sup_norm();
    let comparison = json!({
        "order": m,
        "eps": eps,
        "sup_direct": direct.sup_norm(),
        "sup_diff": sup_diff,
        "rel_sup_diff": sup_diff / direct.sup_norm(),
    });
    Ok(vec![
        ("direct.csv".to_string(), io::write_boundary_function_real(&direct)),
        ("fd.csv".to_string(), io::write_boundary_function_real(&fd)),
        ("comparison.json".to_string(), to_json(&comparison)?),
    ])
}

/// Step for an order-k difference: the configured value, or the tuned one
/// when `auto_eps` is set.
fn fd_eps(r: &Resolved, order: usize) -> f64 {
    if r.config.linearization.auto_eps {
        suggest_eps(order, r.config.solver.tol)
    } else {
        r.config.linearization.eps
    }
}

fn sample_method(r: &Resolved) -> SampleMethod {
    match r.config.linearization.method.as_str() {
        "fd" => SampleMethod::DnFd,
        _ => SampleMethod::DnDirect,
    }
}

fn reconstruct(r: &Resolved) -> Result<Vec<(String, String)>, RunError> {
    if r.config.m != 2 {
        return Err(RunError::Config("reconstruct requires m = 2".to_string()));
    }
    let p = problem(r)?;
    let op = LaplaceOperator::new(r.grid).map_err(run_err)?;
    let lattice = FreqLattice::new(r.l_box, r.config.lattice.radius).map_err(run_err)?;
    let result = reconstruct_potential(
        &p,
        &op,
        &lattice,
        sample_method(r),
        fd_eps(r, 2),
        Some(&r.q),
    )
    .map_err(run_err)?;
    let summary = json!({
        "l2_rel_error": result.l2_rel_error,
        "sup_error": result.sup_error,
        "imag_residue": result.imag_residue,
        "radius": r.config.lattice.radius,
        "L_box": r.l_box,
    });
    Ok(vec![
        ("q_rec.csv".to_string(), io::write_grid_function_real(&result.q_rec)),
        ("q_true.csv".to_string(), io::write_grid_function_real(&r.q)),
        ("samples.csv".to_string(), io::write_samples(&result.samples)),
        ("summary.json".to_string(), to_json(&summary)?),
    ])
}

fn verify(r: &Resolved) -> Result<Vec<(String, String)>, RunError> {
    let p = problem(r)?;
    let g = r.grid;
    let op = LaplaceOperator::new(g).map_err(run_err)?;
    let m = r.config.m;
    let mfact: f64 = (1..=m as u64).product::<u64>() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(r.config.seed ^ 0x1D);

    // Integral identity on random tuples.
    let tuples = 5;
    let mut max_rel: f64 = 0.0;
    for _ in 0..tuples {
        let data: Vec<BoundaryFunction<f64>> = (0..=m)
            .map(|_| {
                let values: Vec<f64> =
                    (0..g.num_boundary()).map(|_| rng.sample(StandardNormal)).collect();
                BoundaryFunction::from_values(g, values).expect("normal draws are finite")
            })
            .collect();
        let flux = mth_linearization_direct(&p, &op, &data[..m as usize]).map_err(run_err)?;
        let lhs = flux.pointwise_mul(&data[m as usize]).boundary_integral();
        let mut prod = r.q.clone();
        for f in &data {
            prod = prod.pointwise_mul(&op.solve_dirichlet(f).map_err(run_err)?);
        }
        let rhs = -mfact * prod.interior_integral();
        max_rel = max_rel.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    let identity = json!({
        "max_rel_residual": max_rel,
        "tuples": tuples,
        "seed": r.config.seed,
    });

    // Gauge symmetry on random admissible pairs.
    let pairs = 3;
    let mut max_gauge: f64 = 0.0;
    for _ in 0..pairs {
        let c: Vec<f64> = (0..3).map(|_| 0.6 * rng.random::<f64>() - 0.3).collect();
        let rect = g.rect();
        let sigma = ConformalFactor::new(GridFunction::from_fn(g, move |x, y| {
            let bx = 4.0 * (x - rect.x0) / rect.lx * (1.0 - (x - rect.x0) / rect.lx);
            let by = 4.0 * (y - rect.y0) / rect.ly * (1.0 - (y - rect.y0) / rect.ly);
            1.0 + c[0] * bx * by + c[1] * bx * bx * by + c[2] * bx * by * by
        }))
        .map_err(run_err)?;
        let f = smooth_random_boundary(g, &mut rng, 0.01);
        max_gauge = max_gauge.max(gauge_check(&p, &sigma, &f).map_err(run_err)?);
    }
    let gauge = json!({
        "sup_dn_difference": max_gauge,
        "pairs": pairs,
        "seed": r.config.seed,
    });

    // Vanishing intermediate orders (empty for m = 2).
    let vdata: Vec<BoundaryFunction<f64>> = (0..(m as usize).max(3) - 1)
        .map(|_| smooth_random_boundary(g, &mut rng, 1.0))
        .collect();
    let veps = fd_eps(r, (m as usize).saturating_sub(1).max(2));
    let sups = verify_vanishing_orders(&p, &vdata, veps).map_err(run_err)?;
    let first_order_scale = op.linear_dn(&vdata[0]).map_err(run_err)?.sup_norm();
    let vanishing = json!({
        "orders": (2..m).collect::<Vec<u32>>(),
        "sup_norms": sups,
        "first_order_scale": first_order_scale,
        "eps": veps,
    });

    // Completeness on a fixed small 12×12 grid (the SVD cost grows
    // quickly with the interior count).
    let g12 = Grid::new(12, 12, calderon_core::Rect::unit_square()).map_err(run_err)?;
    let n_products = 5 * g12.num_interior();
    let (smin, rank_deficit) =
        completeness_smin(g12, m, n_products, r.config.seed).map_err(run_err)?;
    let completeness = json!({
        "smin": smin,
        "rank_deficit": rank_deficit,
        "n_products": n_products,
        "seed": r.config.seed,
    });

    // Well-posedness: the operational smallness radius and the agreement
    // of the two Newton starts at half that radius.
    let delta = estimate_delta(&p).map_err(run_err)?;
    let a = delta.min(1e3) / 2.0;
    let h2 = g.spacing() * g.spacing();
    let tol =
        (100.0 * f64::EPSILON * (4.0 * a / h2 + r.q.sup_norm() * a * a)).max(r.config.solver.tol);
    let f = BoundaryFunction::constant(g, a);
    let (u1, _) = solve_semilinear_with(&p, &f, tol, InitialGuess::HarmonicExtension, 50)
        .map_err(run_err)?;
    let (u2, _) =
        solve_semilinear_with(&p, &f, tol, InitialGuess::Zero, 50).map_err(run_err)?;
    let wellposed = json!({
        "delta_estimate": delta,
        "uniqueness_sup_diff": u1.sub(&u2).sup_norm(),
        "probe_amplitude": a,
    });

    Ok(vec![
        ("identity_residual.json".to_string(), to_json(&identity)?),
        ("gauge.json".to_string(), to_json(&gauge)?),
        ("vanishing.json".to_string(), to_json(&vanishing)?),
        ("completeness.json".to_string(), to_json(&completeness)?),
        ("wellposed.json".to_string(), to_json(&wellposed)?),
    ])
}

fn probe_stability(r: &Resolved) -> Result<Vec<(String, String)>, RunError> {
    if r.config.m != 2 {
        return Err(RunError::Config("probe-stability requires m = 2".to_string()));
    }
    let g = r.grid;
    let rect = g.rect();
    let bump = GridFunction::from_fn(g, move |x, y| {
        let xn = (x - rect.x0) / rect.lx;
        let yn = (y - rect.y0) / rect.ly;
        (-50.0 * ((xn - 0.5).powi(2) + (yn - 0.5).powi(2))).exp()
    });
    let high = GridFunction::from_fn(g, move |x, y| {
        let xn = (x - rect.x0) / rect.lx;
        let yn = (y - rect.y0) / rect.ly;
        (8.0 * PI * xn).cos() * (-50.0 * ((xn - 0.5).powi(2) + (yn - 0.5).powi(2))).exp()
    });
    let low = bump.scale(high.l2_norm() / bump.l2_norm());
    let labels = ["high_freq", "low_freq", "high_freq_half", "high_freq_quarter"];
    let perts = vec![high.clone(), low, high.scale(0.5), high.scale(0.25)];
    let rows = calderon_core::stability_probe(&r.q, &perts).map_err(run_err)?;

    let mut csv = String::from("label,dn_distance,l2_distance\n");
    for (label, row) in labels.iter().zip(rows.iter()) {
        use std::fmt::Write;
        let _ = writeln!(csv, "{label},{:e},{:e}", row.dn_distance, row.l2_distance);
    }
    let table = json!({
        "rows": labels
            .iter()
            .zip(rows.iter())
            .map(|(label, row)| {
                json!({
                    "label": label,
                    "dn_distance": row.dn_distance,
                    "l2_distance": row.l2_distance,
                })
            })
            .collect::<Vec<_>>(),
        "probe_pairs": calderon_core::reconstruction::STABILITY_PROBE_PAIRS,
    });
    Ok(vec![
        ("stability.csv".to_string(), csv),
        ("stability.json".to_string(), to_json(&table)?),
    ])
}
