//! Standalone checks of structural claims: the two-dimensional conformal
//! gauge symmetry of the DN map (flat metric, identity boundary
//! diffeomorphism), and discrete completeness of products of harmonic
//! functions on small grids.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::grid::{BoundaryFunction, Grid, GridFunction};
use crate::harmonic::LaplaceOperator;
use crate::linalg::singular_values;
use crate::semilinear::{newton, InitialGuess, SemilinearProblem};
use crate::Result;

/// Positive conformal factor; admissible for the gauge identity only when
/// it equals one on the boundary (to 1e-14).
#[derive(Clone, Debug)]
pub struct ConformalFactor {
    sigma: GridFunction<f64>,
    boundary_is_one: bool,
}

impl ConformalFactor {
    pub fn new(sigma: GridFunction<f64>) -> Result<Self> {
        if sigma.values().iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidInput("conformal factor must be positive everywhere"));
        }
        let g = sigma.grid();
        let mut boundary_is_one = true;
        for b in 0..g.num_boundary() {
            let (ix, iy) = g.boundary_node(b);
            if libm::fabs(sigma.at(ix, iy) - 1.0) > 1e-14 {
                boundary_is_one = false;
                break;
            }
        }
        Ok(ConformalFactor { sigma, boundary_is_one })
    }

    pub fn sigma(&self) -> &GridFunction<f64> {
        &self.sigma
    }

    pub fn boundary_is_one(&self) -> bool {
        self.boundary_is_one
    }
}

/// Solves the conformally rescaled problem
/// `σ⁻¹·Δ_h u + (σ⁻¹ q)·uᵐ = 0`, assembled as its own operator (residual
/// and Jacobian rows multiplied by `σ⁻¹`, not algebraically cancelled),
/// takes its DN flux with the same Green-compatible convention, and
/// returns the sup difference against the untransformed DN map. In two
/// dimensions the flat conformal rescaling multiplies the operator
/// pointwise, so the difference is a solver-precision zero.
pub fn gauge_check(
    p: &SemilinearProblem,
    sigma: &ConformalFactor,
    f: &BoundaryFunction<f64>,
) -> Result<f64> {
    if !sigma.boundary_is_one {
        return Err(Error::GaugeViolation);
    }
    let g = p.grid();
    if sigma.sigma.grid() != g || f.grid() != g {
        return Err(Error::InvalidInput("conformal factor grid does not match problem grid"));
    }
    // Tight tolerance: the comparison target is 1e-10 in the flux, and the
    // flux divides by h.
    let tol = 1e-13;
    let op = LaplaceOperator::new(g)?;

    let (u1, _) = newton(p, &op, f, tol, InitialGuess::HarmonicExtension, None)?;
    let flux1 = u1.normal_derivative_with_laplacian(&p.laplacian_of_solution(&u1));

    let mut scale = Vec::with_capacity(g.num_interior());
    for k in 0..g.num_interior() {
        let (ix, iy) = g.interior_node(k);
        scale.push(1.0 / sigma.sigma.at(ix, iy));
    }
    let (u2, _) = newton(p, &op, f, tol, InitialGuess::HarmonicExtension, Some(&scale))?;
    // σ = 1 on the boundary, so the rescaled equation closes the boundary
    // stencil with the same Laplacian trace −q·uᵐ.
    let flux2 = u2.normal_derivative_with_laplacian(&p.laplacian_of_solution(&u2));

    Ok(flux2.sub(&flux1).sup_norm())
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(row as u64).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// Draws `n_products` tuples of `m` discretely harmonic functions with
/// independent standard-normal boundary data (per-row seeds derived from
/// `(seed, row)`), forms the matrix of quadrature-weighted pointwise
/// products on the interior nodes, and returns its smallest singular value
/// together with the rank deficit. Full rank means no nonzero interior
/// field is discretely orthogonal to all sampled products.
pub fn completeness_smin(
    grid: Grid,
    m: u32,
    n_products: usize,
    seed: u64,
) -> Result<(f64, usize)> {
    if m == 0 {
        return Err(Error::InvalidInput("product order must be at least 1"));
    }
    if n_products == 0 {
        return Err(Error::InvalidInput("need at least one product row"));
    }
    let op = LaplaceOperator::new(grid)?;
    let rows = n_products;
    let cols = grid.num_interior();
    let h2 = grid.spacing() * grid.spacing();
    let mut data = alloc::vec![0.0; rows * cols];
    for r in 0..rows {
        let mut rng = row_rng(seed, r);
        let mut prod = GridFunction::constant(grid, 1.0);
        for _ in 0..m {
            let mut values = Vec::with_capacity(grid.num_boundary());
            for _ in 0..grid.num_boundary() {
                values.push(rng.sample::<f64, _>(StandardNormal));
            }
            let f = BoundaryFunction::from_values(grid, values)?;
            prod = prod.pointwise_mul(&op.solve_dirichlet(&f)?);
        }
        for c in 0..cols {
            let (ix, iy) = grid.interior_node(c);
            data[c * rows + r] = h2 * prod.at(ix, iy);
        }
    }
    let sv = singular_values(&mut data, rows, cols);
    let smax = sv[0];
    let smin = sv[cols - 1];
    let cutoff = smax * (rows.max(cols) as f64) * f64::EPSILON;
    let deficit = sv.iter().filter(|&&s| s <= cutoff).count();
    Ok((smin, deficit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;
    use crate::semilinear::solve_semilinear;

    fn unit_grid(n: usize) -> Grid {
        Grid::new(n, n, Rect::unit_square()).unwrap()
    }

    fn bubble_sigma(g: Grid, amp: f64) -> ConformalFactor {
        let s = GridFunction::from_fn(g, |x, y| 1.0 + amp * 4.0 * x * (1.0 - x) * y * (1.0 - y));
        ConformalFactor::new(s).unwrap()
    }

    #[test]
    fn identity_factor_gives_bitwise_identical_dn() {
        let g = unit_grid(17);
        let p = SemilinearProblem::new(GridFunction::constant(g, 1.0), 2).unwrap();
        let sigma = ConformalFactor::new(GridFunction::constant(g, 1.0)).unwrap();
        let f = BoundaryFunction::constant(g, 0.01);
        let diff = gauge_check(&p, &sigma, &f).unwrap();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn gauge_symmetry_holds_for_bubble_factor() {
        let g = unit_grid(17);
        let p = SemilinearProblem::new(GridFunction::constant(g, 1.0), 2).unwrap();
        let sigma = bubble_sigma(g, 1.0);
        let f = BoundaryFunction::constant(g, 0.01);
        let diff = gauge_check(&p, &sigma, &f).unwrap();
        assert!(diff <= 1e-10, "diff {diff}");
    }

    #[test]
    fn non_unit_boundary_factor_is_rejected() {
        let g = unit_grid(9);
        let p = SemilinearProblem::new(GridFunction::constant(g, 1.0), 2).unwrap();
        let sigma = ConformalFactor::new(GridFunction::from_fn(g, |x, _| 1.0 + x)).unwrap();
        assert!(!sigma.boundary_is_one());
        let f = BoundaryFunction::constant(g, 0.01);
        assert!(matches!(gauge_check(&p, &sigma, &f), Err(Error::GaugeViolation)));
    }

    #[test]
    fn nonpositive_factor_is_rejected() {
        let g = unit_grid(9);
        let s = GridFunction::from_fn(g, |x, y| 4.0 * x * (1.0 - x) * y * (1.0 - y));
        assert!(matches!(ConformalFactor::new(s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gauge_check_respects_solution_scale() {
        // The transformed solve is a genuinely different linear system, so
        // the test would catch an implementation that cancels σ.
        let g = unit_grid(17);
        let q = GridFunction::from_fn(g, |x, y| 1.0 + 0.3 * libm::cos(3.0 * x) * y);
        let p = SemilinearProblem::new(q, 2).unwrap();
        let sigma = bubble_sigma(g, 0.8);
        let f = BoundaryFunction::from_fn(g, |x, y| 0.01 * libm::sin(2.0 * x) + 0.005 * y);
        let (u, _) = solve_semilinear(&p, &f, 1e-13).unwrap();
        assert!(u.sup_norm() > 1e-3);
        let diff = gauge_check(&p, &sigma, &f).unwrap();
        assert!(diff <= 1e-10, "diff {diff}");
    }

    #[test]
    fn single_interior_node_is_full_rank() {
        let g = unit_grid(3);
        let (smin, deficit) = completeness_smin(g, 2, 1, 42).unwrap();
        assert!(smin > 0.0);
        assert_eq!(deficit, 0);
    }

    #[test]
    fn completeness_is_deterministic() {
        let g = unit_grid(8);
        let a = completeness_smin(g, 3, 2 * g.num_interior(), 7).unwrap();
        let b = completeness_smin(g, 3, 2 * g.num_interior(), 7).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, b.1);
        let c = completeness_smin(g, 3, 2 * g.num_interior(), 8).unwrap();
        assert_ne!(a.0.to_bits(), c.0.to_bits());
    }

    #[test]
    fn undersampling_reports_guaranteed_deficit() {
        let g = unit_grid(8);
        let n_int = g.num_interior();
        let (_, deficit) = completeness_smin(g, 2, n_int / 2, 3).unwrap();
        assert!(deficit >= n_int - n_int / 2);
    }

    #[test]
    fn smin_is_monotone_in_row_count() {
        // Rows are seeded per index, so smaller runs are prefixes of
        // larger ones and appending rows cannot shrink the Gram spectrum.
        let g = unit_grid(7);
        let n_int = g.num_interior();
        let mut last = 0.0;
        for factor in [1usize, 2, 4] {
            let (smin, _) = completeness_smin(g, 2, factor * n_int, 11).unwrap();
            assert!(smin >= last - 1e-12 * smin.max(1.0), "smin {smin} < {last}");
            last = smin;
        }
    }

    // Independent oracle: eigenvalues of the Gram matrix AᵀA via a local
    // symmetric Jacobi sweep must match the squared singular values.
    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let g = unit_grid(6);
        let op = LaplaceOperator::new(g).unwrap();
        let rows = 3 * g.num_interior();
        let cols = g.num_interior();
        let h2 = g.spacing() * g.spacing();
        let mut data = alloc::vec![0.0; rows * cols];
        for r in 0..rows {
            let mut rng = row_rng(19, r);
            let mut values = Vec::with_capacity(g.num_boundary());
            for _ in 0..g.num_boundary() {
                values.push(rng.sample::<f64, _>(StandardNormal));
            }
            let f = BoundaryFunction::from_values(g, values).unwrap();
            let v = op.solve_dirichlet(&f).unwrap();
            let w = v.pointwise_mul(&v);
            for c in 0..cols {
                let (ix, iy) = g.interior_node(c);
                data[c * rows + r] = h2 * w.at(ix, iy);
            }
        }
        // Gram matrix
        let mut gram = alloc::vec![0.0; cols * cols];
        for i in 0..cols {
            for j in 0..cols {
                let mut s = 0.0;
                for r in 0..rows {
                    s += data[i * rows + r] * data[j * rows + r];
                }
                gram[i * cols + j] = s;
            }
        }
        // symmetric Jacobi eigenvalues
        let n = cols;
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += gram[p * n + q] * gram[p * n + q];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = gram[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let app = gram[p * n + p];
                    let aqq = gram[q * n + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for k in 0..n {
                        let akp = gram[k * n + p];
                        let akq = gram[k * n + q];
                        gram[k * n + p] = c * akp - s * akq;
                        gram[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = gram[p * n + k];
                        let aqk = gram[q * n + k];
                        gram[p * n + k] = c * apk - s * aqk;
                        gram[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| gram[i * n + i]).collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());

        let sv = singular_values(&mut data, rows, cols);
        for (s, e) in sv.iter().zip(eig.iter()) {
            let expected = e.max(0.0).sqrt();
            assert!((s - expected).abs() <= 1e-8 * sv[0], "{s} vs {expected}");
        }
    }
}
