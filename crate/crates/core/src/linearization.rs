//! Higher-order linearizations of the nonlinear DN map at `f = 0`: by
//! multi-parameter central differencing of the full nonlinear map, and by
//! directly solving the linearized equations (the exact discrete route).
//!
//! The direct route is the reference: for boundary data `f₁ … f_m` it
//! solves `Δ_h w = −m!·q·v_{f₁}⋯v_{f_m}` with zero trace and returns the
//! Green-compatible flux of `w`. The finite-difference route is kept
//! because it exercises the actual nonlinear DN map end to end.

use alloc::vec::Vec;

use crate::error::Error;
use crate::grid::{BoundaryFunction, GridFunction};
use crate::harmonic::LaplaceOperator;
use crate::semilinear::{nonlinear_dn_with, SemilinearProblem};
use crate::Result;

/// Tolerance of the nonlinear solves inside the FD stencil.
const FD_SOLVE_TOL: f64 = 1e-12;
/// `ε^k` below this would push the stencil under the solver noise floor.
const EPS_POW_GUARD: f64 = 1e-9;

/// A mixed finite-difference request: boundary data `f₁ … f_k` and a
/// per-parameter step `ε` for the stencil at
/// `f = ε(s₁f₁ + … + s_kf_k)`, `s ∈ {−1, +1}^k`.
pub struct LinearizationRequest<'a> {
    problem: &'a SemilinearProblem,
    data: Vec<BoundaryFunction<f64>>,
    eps: f64,
}

impl<'a> LinearizationRequest<'a> {
    pub fn new(
        problem: &'a SemilinearProblem,
        data: Vec<BoundaryFunction<f64>>,
        eps: f64,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidInput("linearization order must be at least 1"));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidInput("finite-difference step must be positive"));
        }
        if data.iter().any(|f| f.grid() != problem.grid()) {
            return Err(Error::InvalidInput("boundary data grid does not match problem grid"));
        }
        Ok(LinearizationRequest { problem, data, eps })
    }

    pub fn order(&self) -> usize {
        self.data.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// `k`-th mixed central difference of the nonlinear DN map at `f = 0`:
///
/// ```text
/// (2ε)^{-k} · Σ_{s ∈ {−1,1}^k} (∏ sᵢ) · Λ_q(Σ sᵢ ε fᵢ)
/// ```
///
/// All `2^k` solves run at tolerance 1e-12. Terms are reduced per sign
/// class in a fixed order, so the result is deterministic and exactly
/// symmetric under swapping the two slots at order 2.
pub fn mixed_fd_dn(req: &LinearizationRequest) -> Result<BoundaryFunction<f64>> {
    let k = req.order();
    let eps = req.eps;
    if libm::pow(eps, k as f64) < EPS_POW_GUARD {
        return Err(Error::StepTooSmall { eps, order: k });
    }
    let p = req.problem;
    let grid = p.grid();
    let op = LaplaceOperator::new(grid)?;

    // class_sums[c] accumulates the Λ values whose sign pattern has c plus
    // signs; the stencil sign (−1)^(k−c) is constant on each class.
    let mut class_sums: Vec<BoundaryFunction<f64>> =
        (0..=k).map(|_| BoundaryFunction::zeros(grid)).collect();
    for s in 0u32..(1u32 << k) {
        let mut combo = BoundaryFunction::zeros(grid);
        for (i, f) in req.data.iter().enumerate() {
            let sign = if s >> i & 1 == 1 { 1.0 } else { -1.0 };
            combo = combo.add(&f.scale(sign * eps));
        }
        let lam = nonlinear_dn_with(p, &op, &combo, FD_SOLVE_TOL)?;
        let c = s.count_ones() as usize;
        class_sums[c] = class_sums[c].add(&lam);
    }

    let scale = 1.0 / libm::pow(2.0 * eps, k as f64);
    let mut acc = BoundaryFunction::zeros(grid);
    for (c, sum) in class_sums.iter().enumerate() {
        let sign = if (k - c) % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc.add(&sum.scale(sign * scale));
    }
    Ok(acc)
}

/// The `m`-th linearization of the DN map computed exactly at the discrete
/// level: harmonic extensions `v_{fᵢ}`, one Poisson solve for
/// `Δ_h w = −m!·q·∏ v_{fᵢ}` with zero trace, and the flux of `w` with the
/// stencil closed by that same right-hand side. No ε error enters.
pub fn mth_linearization_direct(
    p: &SemilinearProblem,
    op: &LaplaceOperator,
    data: &[BoundaryFunction<f64>],
) -> Result<BoundaryFunction<f64>> {
    let m = p.exponent() as usize;
    if data.len() != m {
        return Err(Error::InvalidInput("need exactly m boundary data for the m-th linearization"));
    }
    if op.grid() != p.grid() {
        return Err(Error::InvalidInput("operator grid does not match problem grid"));
    }
    let mut prod = GridFunction::constant(p.grid(), 1.0);
    for f in data {
        let v = op.solve_dirichlet(f)?;
        prod = prod.pointwise_mul(&v);
    }
    let mfact: f64 = (1..=m as u64).product::<u64>() as f64;
    let source = p.potential().pointwise_mul(&prod).scale(-mfact);
    let w = op.solve_poisson(&source, &BoundaryFunction::zeros(p.grid()))?;
    Ok(w.normal_derivative_with_laplacian(&source))
}

/// Sup norms of the mixed FD linearizations at the orders `2 ≤ j ≤ m−1`
/// that the structure of `q·uᵐ` forces to vanish identically. Each entry
/// should sit at the FD noise floor. Empty for `m = 2`.
pub fn verify_vanishing_orders(
    p: &SemilinearProblem,
    data: &[BoundaryFunction<f64>],
    eps: f64,
) -> Result<Vec<f64>> {
    let m = p.exponent() as usize;
    if m == 2 {
        return Ok(Vec::new());
    }
    if data.len() < m - 1 {
        return Err(Error::InvalidInput("need at least m−1 boundary data"));
    }
    let mut sups = Vec::new();
    for j in 2..=m - 1 {
        let req = LinearizationRequest::new(p, data[..j].to_vec(), eps)?;
        sups.push(mixed_fd_dn(&req)?.sup_norm());
    }
    Ok(sups)
}

/// Step minimizing the model error `ε² + tol/(2ε)^k` of the order-`k`
/// central stencil: `ε* = ((k/2)·tol/2^k)^{1/(k+2)}`.
pub fn suggest_eps(k: usize, tol: f64) -> f64 {
    let kf = k as f64;
    libm::pow(0.5 * kf * tol / libm::pow(2.0, kf), 1.0 / (kf + 2.0))
}
