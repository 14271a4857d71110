//! Discrete Laplace solves, the linear DN map (first linearization of the
//! nonlinear one), and Calderón exponential harmonic pairs.

use alloc::vec;

use num_complex::Complex64;

use crate::error::Error;
use crate::grid::{BoundaryFunction, Grid, GridFunction};
use crate::linalg::{BandLu, BandMatrix};
use crate::Result;

/// Natural log of the exponential overflow guard 1e12.
const EXP_GUARD_LOG: f64 = 27.631021115928547;

/// Assembled and factored 5-point Laplacian on the interior unknowns.
///
/// The matrix is `A = −h²·Δ_h` restricted to interior nodes (symmetric
/// positive definite, row sums over the full stencil zero, so constants
/// are discretely harmonic). The factorization is computed once and
/// reused across right-hand sides; solves take `&self` and are pure, so
/// concurrent solves against one factorization give results identical to
/// sequential execution.
pub struct LaplaceOperator {
    grid: Grid,
    lu: BandLu,
}

impl LaplaceOperator {
    pub fn new(grid: Grid) -> Result<Self> {
        let band = assemble_shifted(grid, None, None);
        let lu = band.factor()?;
        Ok(LaplaceOperator { grid, lu })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Discrete harmonic extension: `Δ_h v = 0` on the interior,
    /// `v|∂ = f` exactly.
    pub fn solve_dirichlet(&self, f: &BoundaryFunction<f64>) -> Result<GridFunction<f64>> {
        self.solve_poisson_interior(None, f)
    }

    /// Solves `Δ_h u = source` on interior nodes with `u|∂ = f`. Only the
    /// interior values of `source` are read.
    pub fn solve_poisson(
        &self,
        source: &GridFunction<f64>,
        f: &BoundaryFunction<f64>,
    ) -> Result<GridFunction<f64>> {
        self.solve_poisson_interior(Some(source), f)
    }

    fn solve_poisson_interior(
        &self,
        source: Option<&GridFunction<f64>>,
        f: &BoundaryFunction<f64>,
    ) -> Result<GridFunction<f64>> {
        let g = self.grid;
        if f.grid() != g || source.map_or(false, |s| s.grid() != g) {
            return Err(Error::InvalidInput("operand grid does not match operator grid"));
        }
        let h2 = g.spacing() * g.spacing();
        let n = g.num_interior();
        let mut rhs = vec![0.0; n];
        for k in 0..n {
            let (ix, iy) = g.interior_node(k);
            let mut b = match source {
                Some(s) => -h2 * s.at(ix, iy),
                None => 0.0,
            };
            for (jx, jy) in [(ix - 1, iy), (ix + 1, iy), (ix, iy - 1), (ix, iy + 1)] {
                if let Some(bi) = g.boundary_index(jx, jy) {
                    b += f.at(bi);
                }
            }
            rhs[k] = b;
        }
        self.lu.solve_in_place(&mut rhs);
        let mut values = vec![0.0; g.num_nodes()];
        for k in 0..n {
            let (ix, iy) = g.interior_node(k);
            values[g.node(ix, iy)] = rhs[k];
        }
        for b in 0..g.num_boundary() {
            let (ix, iy) = g.boundary_node(b);
            values[g.node(ix, iy)] = f.at(b);
        }
        GridFunction::from_values(g, values)
    }

    /// Complex data is solved per real and imaginary part.
    pub fn solve_dirichlet_complex(
        &self,
        f: &BoundaryFunction<Complex64>,
    ) -> Result<GridFunction<Complex64>> {
        let re = self.solve_dirichlet(&f.re_part())?;
        let im = self.solve_dirichlet(&f.im_part())?;
        Ok(re.with_imaginary(&im))
    }

    pub fn solve_poisson_complex(
        &self,
        source: &GridFunction<Complex64>,
        f: &BoundaryFunction<Complex64>,
    ) -> Result<GridFunction<Complex64>> {
        let re = self.solve_poisson(&source.re_part(), &f.re_part())?;
        let im = self.solve_poisson(&source.im_part(), &f.im_part())?;
        Ok(re.with_imaginary(&im))
    }

    /// DN map of the Laplace equation: `f ↦ ∂_ν v_f|∂`, the first
    /// linearization of every nonlinear DN map in this crate.
    pub fn linear_dn(&self, f: &BoundaryFunction<f64>) -> Result<BoundaryFunction<f64>> {
        Ok(self.solve_dirichlet(f)?.normal_derivative())
    }

    /// Harmonic pair `v₁ = exp((k+iξ)·x)`, `v₂ = exp((−k+iξ)·x)` with
    /// `k ⊥ ξ`, `|k| = |ξ|`; the product is the pure oscillation
    /// `exp(2iξ·x)`. `k` is `ξ` rotated by +90° (fixed convention).
    pub fn calderon_pair(&self, xi: [f64; 2], mode: ExtensionMode) -> Result<CalderonPair> {
        let g = self.grid;
        let diam = g.rect().diameter();
        let xi_norm = libm::hypot(xi[0], xi[1]);
        if !xi_norm.is_finite() {
            return Err(Error::InvalidInput("xi must be finite"));
        }
        if xi_norm * diam > EXP_GUARD_LOG {
            return Err(Error::FrequencyTooLarge { xi_norm, max_norm: EXP_GUARD_LOG / diam });
        }
        let k = [-xi[1], xi[0]];
        let sample = |sign: f64| {
            GridFunction::from_fn(g, move |x, y| {
                let growth = libm::exp(sign * (k[0] * x + k[1] * y));
                let phase = xi[0] * x + xi[1] * y;
                Complex64::new(growth * libm::cos(phase), growth * libm::sin(phase))
            })
        };
        let v1s = sample(1.0);
        let v2s = sample(-1.0);
        let (v1, v2) = match mode {
            ExtensionMode::Sampled => (v1s, v2s),
            ExtensionMode::Discrete => (
                self.solve_dirichlet_complex(&v1s.trace())?,
                self.solve_dirichlet_complex(&v2s.trace())?,
            ),
        };
        Ok(CalderonPair { xi, k, v1, v2 })
    }
}

/// Assembles `diag(scale)·(−h²Δ_h − h²·diag(shift))` on interior unknowns.
/// `scale` and `shift` default to one and zero; the plain Laplacian is the
/// `(None, None)` case. Used both here and by the Newton solver.
pub(crate) fn assemble_shifted(
    grid: Grid,
    shift: Option<&[f64]>,
    scale: Option<&[f64]>,
) -> BandMatrix {
    let n = grid.num_interior();
    let kw = grid.nx() - 2;
    let h2 = grid.spacing() * grid.spacing();
    let mut band = BandMatrix::new(n, kw, kw);
    for k in 0..n {
        let s = scale.map_or(1.0, |s| s[k]);
        let d = shift.map_or(0.0, |d| d[k]);
        band.set(k, k, s * (4.0 - h2 * d));
        let (ix, iy) = grid.interior_node(k);
        for (jx, jy) in [(ix - 1, iy), (ix + 1, iy), (ix, iy - 1), (ix, iy + 1)] {
            if let Some(kn) = grid.interior_index(jx, jy) {
                band.set(k, kn, -s);
            }
        }
    }
    band
}

/// One-shot discrete harmonic extension (assembles and factors; prefer a
/// [`LaplaceOperator`] when solving repeatedly on one grid).
pub fn solve_laplace_dirichlet(grid: Grid, f: &BoundaryFunction<f64>) -> Result<GridFunction<f64>> {
    LaplaceOperator::new(grid)?.solve_dirichlet(f)
}

/// One-shot linear DN map.
pub fn linear_dn(grid: Grid, f: &BoundaryFunction<f64>) -> Result<BoundaryFunction<f64>> {
    LaplaceOperator::new(grid)?.linear_dn(f)
}

/// How Calderón exponentials are placed on the grid: pointwise samples of
/// the continuum exponentials, or discrete-harmonic extensions of their
/// boundary traces. Identity tests use `Discrete` so the exact discrete
/// identities hold to solver precision; the sampled mode serves as the
/// discretization diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionMode {
    Sampled,
    Discrete,
}

/// Calderón exponential pair.
pub struct CalderonPair {
    pub xi: [f64; 2],
    pub k: [f64; 2],
    pub v1: GridFunction<Complex64>,
    pub v2: GridFunction<Complex64>,
}
