//! Recovery of the potential from DN data for the quadratic nonlinearity:
//! Fourier samples `q̂(−2ξ)` from second linearizations on Calderón pairs,
//! full reconstruction by truncated Fourier series on an embedding box,
//! and the qualitative stability probe behind the logarithmic modulus.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::Error;
use crate::grid::{BoundaryFunction, GridFunction};
use crate::harmonic::{ExtensionMode, LaplaceOperator};
use crate::linearization::{mixed_fd_dn, mth_linearization_direct, LinearizationRequest};
use crate::semilinear::SemilinearProblem;
use crate::Result;

/// Frequency lattice for the sweep. Samples estimate `q̂(κ)` at
/// `κ = −2ξ`; for the inversion on a periodic box of side `l_box` the κ's
/// must cover the box's dual lattice `(2π/l_box)·ℤ²`, so the ξ nodes live
/// at half that spacing, `(π/l_box)·ℤ²`, truncated to `|ξ| ≤ radius`.
#[derive(Clone, Debug)]
pub struct FreqLattice {
    /// κ spacing `2π/l_box` of the recovered Fourier modes.
    pub step: f64,
    /// Max `|ξ|` included.
    pub radius: f64,
    /// Side of the periodic embedding box.
    pub l_box: f64,
    /// ξ nodes in deterministic (row-major integer) order; symmetric under
    /// `ξ ↦ −ξ` and containing 0.
    pub nodes: Vec<[f64; 2]>,
}

impl FreqLattice {
    pub fn new(l_box: f64, radius: f64) -> Result<Self> {
        if !(l_box > 0.0 && l_box.is_finite()) {
            return Err(Error::InvalidInput("box side must be positive and finite"));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput("lattice radius must be nonnegative"));
        }
        let xi_step = core::f64::consts::PI / l_box;
        let amax = libm::floor(radius / xi_step * (1.0 + 1e-12)) as i64;
        let cutoff = radius * (1.0 + 1e-12);
        let mut nodes = Vec::new();
        for b in -amax..=amax {
            for a in -amax..=amax {
                let xi = [a as f64 * xi_step, b as f64 * xi_step];
                if libm::hypot(xi[0], xi[1]) <= cutoff {
                    nodes.push(xi);
                }
            }
        }
        Ok(FreqLattice { step: 2.0 * core::f64::consts::PI / l_box, radius, l_box, nodes })
    }
}

/// How a Fourier sample is produced: differencing the nonlinear DN map,
/// solving the linearized equations directly, or bypassing boundary data
/// entirely with the volume quadrature (the discretization oracle).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMethod {
    DnFd,
    DnDirect,
    QuadratureOracle,
}

impl SampleMethod {
    pub fn name(self) -> &'static str {
        match self {
            SampleMethod::DnFd => "dn_fd",
            SampleMethod::DnDirect => "dn_direct",
            SampleMethod::QuadratureOracle => "quadrature_oracle",
        }
    }
}

/// One recovered value of `q̂(−2ξ)`.
#[derive(Clone, Debug)]
pub struct FourierSample {
    pub xi: [f64; 2],
    pub value: Complex64,
    pub method: SampleMethod,
}

/// Output of [`reconstruct_potential`].
#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub q_true: Option<GridFunction<f64>>,
    pub q_rec: GridFunction<f64>,
    pub samples: Vec<FourierSample>,
    pub l2_rel_error: Option<f64>,
    pub sup_error: Option<f64>,
    /// Sup norm of the imaginary part discarded from the inverted series;
    /// recorded rather than silently dropped.
    pub imag_residue: f64,
}

/// Second linearization of the DN map on real boundary data, by the
/// selected route. For the FD route the data is normalized to unit sup
/// norm and rescaled by bilinearity, so exponentially large Calderón
/// traces stay inside the smallness regime.
fn second_linearization(
    p: &SemilinearProblem,
    op: &LaplaceOperator,
    fa: &BoundaryFunction<f64>,
    fb: &BoundaryFunction<f64>,
    method: SampleMethod,
    eps: f64,
) -> Result<BoundaryFunction<f64>> {
    match method {
        SampleMethod::DnDirect => mth_linearization_direct(p, op, &[fa.clone(), fb.clone()]),
        SampleMethod::DnFd => {
            let na = fa.sup_norm();
            let nb = fb.sup_norm();
            if na == 0.0 || nb == 0.0 {
                return Ok(BoundaryFunction::zeros(p.grid()));
            }
            let req = LinearizationRequest::new(
                p,
                alloc::vec![fa.scale(1.0 / na), fb.scale(1.0 / nb)],
                eps,
            )?;
            Ok(mixed_fd_dn(&req)?.scale(na * nb))
        }
        SampleMethod::QuadratureOracle => {
            Err(Error::InvalidInput("quadrature oracle is not a DN-map route"))
        }
    }
}

/// Estimate of `q̂(−2ξ) = −½·∮ (D²Λ_q)₀(f₁, f₂) dS` on the Calderón pair
/// with frequency `ξ`. DN routes use the discrete-harmonic pair; the
/// quadrature oracle integrates `q·v₁·v₂` with the sampled continuum
/// exponentials. Complex boundary data is handled by real bilinearity:
/// four real evaluations on (Re f₁, Im f₁) × (Re f₂, Im f₂).
pub fn recover_fourier_sample(
    p: &SemilinearProblem,
    op: &LaplaceOperator,
    xi: [f64; 2],
    method: SampleMethod,
    eps: f64,
) -> Result<FourierSample> {
    if p.exponent() != 2 {
        return Err(Error::InvalidInput("Fourier recovery needs the quadratic nonlinearity m = 2"));
    }
    if op.grid() != p.grid() {
        return Err(Error::InvalidInput("operator grid does not match problem grid"));
    }
    if let SampleMethod::QuadratureOracle = method {
        let pair = op.calderon_pair(xi, ExtensionMode::Sampled)?;
        let prod = pair.v1.pointwise_mul(&pair.v2);
        let weighted = prod.zip_map(p.potential(), |c, r| c.scale(r));
        return Ok(FourierSample { xi, value: weighted.interior_integral(), method });
    }

    let pair = op.calderon_pair(xi, ExtensionMode::Discrete)?;
    let f1 = pair.v1.trace();
    let f2 = pair.v2.trace();
    let d_rr = second_linearization(p, op, &f1.re_part(), &f2.re_part(), method, eps)?;
    let d_ii = second_linearization(p, op, &f1.im_part(), &f2.im_part(), method, eps)?;
    let d_ri = second_linearization(p, op, &f1.re_part(), &f2.im_part(), method, eps)?;
    let d_ir = second_linearization(p, op, &f1.im_part(), &f2.re_part(), method, eps)?;
    let flux = d_rr.sub(&d_ii).with_imaginary(&d_ri.add(&d_ir));
    let value = flux.boundary_integral().scale(-0.5);
    Ok(FourierSample { xi, value, method })
}

/// Sweeps the lattice (computing one representative of each `±ξ` pair and
/// mirroring by conjugate symmetry), inverts the truncated Fourier series
/// `Σ q̂(κ)·e^{iκ·x}/l_box²` on the embedding box, and restricts to the
/// grid. The imaginary residue of the inversion is recorded and dropped.
pub fn reconstruct_potential(
    p: &SemilinearProblem,
    op: &LaplaceOperator,
    lattice: &FreqLattice,
    method: SampleMethod,
    eps: f64,
    q_true: Option<&GridFunction<f64>>,
) -> Result<ReconstructionResult> {
    let g = p.grid();
    let rect = g.rect();
    let side = if rect.lx > rect.ly { rect.lx } else { rect.ly };
    if lattice.l_box < side * (1.0 - 1e-12) {
        return Err(Error::InvalidInput("embedding box must cover the domain extent"));
    }
    let xi_step = core::f64::consts::PI / lattice.l_box;
    let key = |xi: [f64; 2]| -> (i64, i64) {
        (libm::round(xi[0] / xi_step) as i64, libm::round(xi[1] / xi_step) as i64)
    };

    let mut computed: BTreeMap<(i64, i64), Complex64> = BTreeMap::new();
    for &xi in &lattice.nodes {
        let (a, b) = key(xi);
        let canonical = a > 0 || (a == 0 && b >= 0);
        if canonical {
            let s = recover_fourier_sample(p, op, xi, method, eps)?;
            computed.insert((a, b), s.value);
        }
    }

    let mut samples = Vec::with_capacity(lattice.nodes.len());
    for &xi in &lattice.nodes {
        let (a, b) = key(xi);
        let value = match computed.get(&(a, b)) {
            Some(v) => *v,
            None => computed
                .get(&(-a, -b))
                .expect("lattice is symmetric under negation")
                .conj(),
        };
        samples.push(FourierSample { xi, value, method });
    }

    // Direct inverse series; the mode count is small enough that no FFT is
    // warranted.
    let inv_area = 1.0 / (lattice.l_box * lattice.l_box);
    let mut rec = GridFunction::<Complex64>::zeros(g);
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            let (x, y) = (g.x(ix), g.y(iy));
            let mut acc = Complex64::new(0.0, 0.0);
            for s in &samples {
                let phase = -2.0 * (s.xi[0] * x + s.xi[1] * y);
                acc += s.value * Complex64::new(libm::cos(phase), libm::sin(phase));
            }
            let node = g.node(ix, iy);
            rec.values_mut()[node] = acc.scale(inv_area);
        }
    }
    let imag_residue = rec.im_part().sup_norm();
    let q_rec = rec.re_part();

    let (l2_rel_error, sup_error) = match q_true {
        Some(qt) => {
            let diff = q_rec.sub(qt);
            let denom = qt.l2_norm();
            let l2 = if denom > 0.0 { Some(diff.l2_norm() / denom) } else { None };
            (l2, Some(diff.sup_norm()))
        }
        None => (None, None),
    };

    Ok(ReconstructionResult {
        q_true: q_true.cloned(),
        q_rec,
        samples,
        l2_rel_error,
        sup_error,
        imag_residue,
    })
}

/// One row of the stability table: the operational surrogate of
/// `‖D²(Λ_{q₁}−Λ_{q₂})₀‖_*` against the L² distance of the potentials.
#[derive(Clone, Copy, Debug)]
pub struct StabilityRow {
    pub dn_distance: f64,
    pub l2_distance: f64,
}

/// Number of probe pairs in the fixed operator-norm surrogate.
pub const STABILITY_PROBE_PAIRS: usize = 16;

/// For each perturbation `pᵢ`, compares the direct second linearizations
/// of `q_base` and `q_base + pᵢ` over a fixed set of 16 unit boundary-data
/// pairs (all ordered pairs of `1, cos θ, sin θ, cos 2θ` in the perimeter
/// coordinate `θ`) and reports the worst sup-norm difference together
/// with `‖pᵢ‖_{L²}`. A fixed probe set is an operational surrogate for
/// the operator norm, not the norm itself.
pub fn stability_probe(
    q_base: &GridFunction<f64>,
    perturbations: &[GridFunction<f64>],
) -> Result<Vec<StabilityRow>> {
    let g = q_base.grid();
    let op = LaplaceOperator::new(g)?;
    let perimeter = g.perimeter();
    let mut probes = Vec::with_capacity(4);
    for k in 0..4 {
        let mut values = Vec::with_capacity(g.num_boundary());
        for b in 0..g.num_boundary() {
            let (ix, iy) = g.boundary_node(b);
            let theta = 2.0 * core::f64::consts::PI * g.arclength(ix, iy) / perimeter;
            values.push(match k {
                0 => 1.0,
                1 => libm::cos(theta),
                2 => libm::sin(theta),
                _ => libm::cos(2.0 * theta),
            });
        }
        probes.push(BoundaryFunction::from_values(g, values)?);
    }

    let harmonics: Vec<GridFunction<f64>> =
        probes.iter().map(|f| op.solve_dirichlet(f)).collect::<Result<_>>()?;

    // Direct second linearization with precomputed harmonic factors.
    let d2 = |q: &GridFunction<f64>, a: usize, b: usize| -> Result<BoundaryFunction<f64>> {
        let source = q.pointwise_mul(&harmonics[a]).pointwise_mul(&harmonics[b]).scale(-2.0);
        let w = op.solve_poisson(&source, &BoundaryFunction::zeros(g))?;
        Ok(w.normal_derivative_with_laplacian(&source))
    };

    let mut base_fluxes = Vec::with_capacity(STABILITY_PROBE_PAIRS);
    for a in 0..4 {
        for b in 0..4 {
            base_fluxes.push(d2(q_base, a, b)?);
        }
    }

    let mut rows = Vec::with_capacity(perturbations.len());
    for pert in perturbations {
        if pert.grid() != g {
            return Err(Error::InvalidInput("perturbation grid does not match base grid"));
        }
        let q2 = q_base.add(pert);
        let mut worst: f64 = 0.0;
        let mut idx = 0;
        for a in 0..4 {
            for b in 0..4 {
                let flux = d2(&q2, a, b)?;
                let diff = flux.sub(&base_fluxes[idx]).sup_norm();
                if diff > worst {
                    worst = diff;
                }
                idx += 1;
            }
        }
        rows.push(StabilityRow { dn_distance: worst, l2_distance: q2.sub(q_base).l2_norm() });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Rect};
    use core::f64::consts::PI;

    fn unit_grid(n: usize) -> Grid {
        Grid::new(n, n, Rect::unit_square()).unwrap()
    }

    fn problem(q: GridFunction<f64>) -> SemilinearProblem {
        SemilinearProblem::new(q, 2).unwrap()
    }

    #[test]
    fn lattice_is_symmetric_and_counts_match() {
        let lat = FreqLattice::new(1.0, 2.0 * PI).unwrap();
        assert_eq!(lat.nodes.len(), 13);
        assert!(lat.nodes.iter().any(|xi| xi[0] == 0.0 && xi[1] == 0.0));
        for xi in &lat.nodes {
            assert!(lat.nodes.iter().any(|o| o[0] == -xi[0] && o[1] == -xi[1]));
        }
        assert!((lat.step - 2.0 * PI).abs() < 1e-14);
        // radius π keeps only the five |ξ| ≤ π nodes
        assert_eq!(FreqLattice::new(1.0, PI).unwrap().nodes.len(), 5);
    }

    #[test]
    fn zero_frequency_sample_is_the_mean_of_q() {
        let g = unit_grid(17);
        let op = LaplaceOperator::new(g).unwrap();
        let p = problem(GridFunction::constant(g, 1.0));
        let s = recover_fourier_sample(&p, &op, [0.0, 0.0], SampleMethod::DnDirect, 1e-3).unwrap();
        assert!((s.value.re - 1.0).abs() < 1e-8, "re {}", s.value.re);
        assert!(s.value.im.abs() < 1e-10);
    }

    #[test]
    fn zero_potential_samples_vanish() {
        let g = unit_grid(17);
        let op = LaplaceOperator::new(g).unwrap();
        let p = problem(GridFunction::zeros(g));
        for method in [SampleMethod::DnDirect, SampleMethod::DnFd] {
            let s = recover_fourier_sample(&p, &op, [PI, 0.0], method, 1e-3).unwrap();
            assert!(s.value.norm() < 1e-9, "{method:?}: {}", s.value.norm());
        }
    }

    #[test]
    fn direct_sample_equals_discrete_quadrature_exactly() {
        let g = unit_grid(17);
        let op = LaplaceOperator::new(g).unwrap();
        let q = GridFunction::from_fn(g, |x, y| {
            libm::exp(-30.0 * ((x - 0.4) * (x - 0.4) + (y - 0.6) * (y - 0.6)))
        });
        let p = problem(q.clone());
        let xi = [PI, 0.0];
        let s = recover_fourier_sample(&p, &op, xi, SampleMethod::DnDirect, 1e-3).unwrap();
        let pair = op.calderon_pair(xi, ExtensionMode::Discrete).unwrap();
        let oracle = pair
            .v1
            .pointwise_mul(&pair.v2)
            .zip_map(&q, |c, r| c.scale(r))
            .interior_integral();
        assert!((s.value - oracle).norm() <= 1e-10 * oracle.norm().max(1.0));
    }

    #[test]
    fn conjugate_symmetry_of_independent_samples() {
        let g = unit_grid(17);
        let op = LaplaceOperator::new(g).unwrap();
        let q = GridFunction::from_fn(g, |x, y| 1.0 + 0.3 * libm::sin(2.0 * x + y));
        let p = problem(q);
        let xi = [PI, PI];
        let a = recover_fourier_sample(&p, &op, xi, SampleMethod::DnDirect, 1e-3).unwrap();
        let b = recover_fourier_sample(&p, &op, [-xi[0], -xi[1]], SampleMethod::DnDirect, 1e-3)
            .unwrap();
        let rel = (a.value - b.value.conj()).norm() / a.value.norm();
        assert!(rel <= 1e-8, "rel {rel}");
    }

    #[test]
    fn sample_is_linear_in_the_potential() {
        let g = unit_grid(17);
        let op = LaplaceOperator::new(g).unwrap();
        let qa = GridFunction::from_fn(g, |x, _| libm::cos(2.0 * PI * x));
        let qb = GridFunction::from_fn(g, |x, y| 0.5 * x * y);
        let xi = [PI, 0.0];
        let sa = recover_fourier_sample(&problem(qa.clone()), &op, xi, SampleMethod::DnDirect, 1e-3)
            .unwrap();
        let sb = recover_fourier_sample(&problem(qb.clone()), &op, xi, SampleMethod::DnDirect, 1e-3)
            .unwrap();
        let sab =
            recover_fourier_sample(&problem(qa.add(&qb)), &op, xi, SampleMethod::DnDirect, 1e-3)
                .unwrap();
        assert!((sab.value - sa.value - sb.value).norm() <= 1e-10);
    }

    #[test]
    fn fd_and_direct_samples_agree_within_noise_budget() {
        let g = unit_grid(17);
        let op = LaplaceOperator::new(g).unwrap();
        let q = GridFunction::from_fn(g, |x, y| 1.0 + 0.4 * libm::cos(2.0 * x) * y);
        let p = problem(q);
        let eps = 1e-3;
        for xi in [[0.0, 0.0], [PI, 0.0], [PI, PI]] {
            let d = recover_fourier_sample(&p, &op, xi, SampleMethod::DnDirect, eps).unwrap();
            let f = recover_fourier_sample(&p, &op, xi, SampleMethod::DnFd, eps).unwrap();
            // truncation O(ε²) with an O(1) constant, plus solver noise
            let budget = 100.0 * eps * eps + 1e-9;
            assert!((d.value - f.value).norm() <= budget, "xi {xi:?}: {:e}", (d.value - f.value).norm());
        }
    }

    #[test]
    fn zero_potential_reconstructs_to_noise() {
        let g = unit_grid(17);
        let op = LaplaceOperator::new(g).unwrap();
        let p = problem(GridFunction::zeros(g));
        let lat = FreqLattice::new(1.0, 2.0 * PI).unwrap();
        let r = reconstruct_potential(&p, &op, &lat, SampleMethod::DnDirect, 1e-3, None).unwrap();
        assert!(r.q_rec.sup_norm() < 1e-9);
        assert!(r.imag_residue < 1e-9);
        assert_eq!(r.samples.len(), lat.nodes.len());
    }

    #[test]
    fn embedding_box_must_cover_domain() {
        let g = unit_grid(9);
        let op = LaplaceOperator::new(g).unwrap();
        let p = problem(GridFunction::zeros(g));
        let lat = FreqLattice::new(0.5, PI).unwrap();
        assert!(matches!(
            reconstruct_potential(&p, &op, &lat, SampleMethod::DnDirect, 1e-3, None),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn stability_rows_scale_linearly() {
        let g = unit_grid(17);
        let base = GridFunction::constant(g, 1.0);
        let bump = GridFunction::from_fn(g, |x, y| {
            libm::exp(-40.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)))
        });
        let perts = alloc::vec![bump.clone(), bump.scale(0.5), bump.scale(0.25)];
        let rows = stability_probe(&base, &perts).unwrap();
        assert!((rows[0].dn_distance / rows[1].dn_distance - 2.0).abs() < 0.01);
        assert!((rows[1].dn_distance / rows[2].dn_distance - 2.0).abs() < 0.01);
        assert!((rows[0].l2_distance / rows[1].l2_distance - 2.0).abs() < 0.01);
    }

    #[test]
    fn zero_perturbation_probes_to_zero() {
        let g = unit_grid(13);
        let base = GridFunction::constant(g, 0.5);
        let rows = stability_probe(&base, &[GridFunction::zeros(g)]).unwrap();
        assert!(rows[0].dn_distance <= 1e-11);
        assert_eq!(rows[0].l2_distance, 0.0);
    }
}
