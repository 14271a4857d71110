//! Uniform square-cell grid on a rectangle, trapezoid quadrature, and the
//! Green-compatible discrete boundary flux.
//!
//! Node ordering is row-major: node `(ix, iy)` has flat index `iy·nx + ix`.
//! Interior and boundary nodes are indexed in the same row-major order,
//! restricted to their subsets, so all artifacts are reproducible.
//!
//! The boundary flux is obtained by ghost elimination: the 5-point stencil
//! is extended to a boundary node with a ghost neighbor outside the
//! rectangle, the stencil is closed by prescribing the Laplacian value `λ`
//! at that node, and the ghost is eliminated from the centered difference
//! for the normal derivative. At a non-corner node on, say, the left edge
//! this gives
//!
//! ```text
//! φ = (u_b − u_in)/h + (h/2)·(λ_b − δ²_tangential u / h²)
//! ```
//!
//! and at a corner (two ghosts, one per axis, value shared)
//!
//! ```text
//! φ = [(u_c − u_E) + (u_c − u_N)]/(2h) + (h/4)·λ_c .
//! ```
//!
//! With `λ = 0` this is the flux of a discretely harmonic extension;
//! [`GridFunction::normal_derivative_with_laplacian`] closes the stencil
//! with the equation actually satisfied by the field. Either way the
//! discrete Green identity
//!
//! ```text
//! ∮ φ·v = ∬ (Δ_h u)·v + ∬ ⟨∇_h u, ∇_h v⟩
//! ```
//!
//! holds exactly (to rounding) for *all* grid functions `u, v`, where the
//! volume terms are trapezoid sums of [`GridFunction::laplacian_interior`]
//! (with the same closure on the ring) and of
//! [`GridFunction::gradient_product`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::field::Field;
use crate::Result;

/// Axis-aligned rectangle `[x0, x0+lx] × [y0, y0+ly]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub lx: f64,
    pub ly: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, lx: f64, ly: f64) -> Self {
        Rect { x0, y0, lx, ly }
    }

    pub fn unit_square() -> Self {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    /// Diameter (diagonal length), used by the exponential overflow guard.
    pub fn diameter(&self) -> f64 {
        libm::hypot(self.lx, self.ly)
    }
}

/// Boundary edge of the rectangle, named from the rectangle's own frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    /// Outward unit normal of the edge.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Edge::Bottom => [0.0, -1.0],
            Edge::Right => [1.0, 0.0],
            Edge::Top => [0.0, 1.0],
            Edge::Left => [-1.0, 0.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Edge::Bottom => "bottom",
            Edge::Right => "right",
            Edge::Top => "top",
            Edge::Left => "left",
        }
    }
}

/// Uniform grid with square cells on a rectangle.
///
/// The struct is small and `Copy`; index maps are arithmetic, so sharing a
/// grid is free and all containers store a copy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    h: f64,
}

impl Grid {
    /// Builds a grid with `nx × ny` nodes over `rect`.
    ///
    /// Fails with `TooSmall` for fewer than 3 nodes per axis and with
    /// `NonSquareCells` when the two axis spacings differ beyond 1e-12
    /// relative.
    pub fn new(nx: usize, ny: usize, rect: Rect) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::TooSmall { nx, ny });
        }
        if !(rect.lx > 0.0 && rect.ly > 0.0 && rect.lx.is_finite() && rect.ly.is_finite()) {
            return Err(Error::InvalidInput("rectangle sides must be positive and finite"));
        }
        let hx = rect.lx / (nx - 1) as f64;
        let hy = rect.ly / (ny - 1) as f64;
        let scale = if hx > hy { hx } else { hy };
        if libm::fabs(hx - hy) > 1e-12 * scale {
            return Err(Error::NonSquareCells { hx, hy });
        }
        Ok(Grid { nx, ny, x0: rect.x0, y0: rect.y0, h: hx })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x0, self.y0, self.h * (self.nx - 1) as f64, self.h * (self.ny - 1) as f64)
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_interior(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    pub fn num_boundary(&self) -> usize {
        2 * (self.nx + self.ny) - 4
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + self.h * ix as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y0 + self.h * iy as f64
    }

    /// Flat row-major node index.
    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }

    #[inline]
    pub fn node_coords(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    #[inline]
    pub fn is_boundary(&self, ix: usize, iy: usize) -> bool {
        ix == 0 || iy == 0 || ix == self.nx - 1 || iy == self.ny - 1
    }

    /// Row-major index among interior nodes, if `(ix, iy)` is interior.
    #[inline]
    pub fn interior_index(&self, ix: usize, iy: usize) -> Option<usize> {
        if ix >= 1 && ix <= self.nx - 2 && iy >= 1 && iy <= self.ny - 2 {
            Some((iy - 1) * (self.nx - 2) + (ix - 1))
        } else {
            None
        }
    }

    /// Inverse of [`Grid::interior_index`].
    #[inline]
    pub fn interior_node(&self, k: usize) -> (usize, usize) {
        debug_assert!(k < self.num_interior());
        (k % (self.nx - 2) + 1, k / (self.nx - 2) + 1)
    }

    /// Row-major index among boundary nodes, if `(ix, iy)` is a boundary node.
    #[inline]
    pub fn boundary_index(&self, ix: usize, iy: usize) -> Option<usize> {
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        if iy == 0 {
            Some(ix)
        } else if iy == self.ny - 1 {
            Some(self.nx + 2 * (self.ny - 2) + ix)
        } else if ix == 0 {
            Some(self.nx + 2 * (iy - 1))
        } else if ix == self.nx - 1 {
            Some(self.nx + 2 * (iy - 1) + 1)
        } else {
            None
        }
    }

    /// Inverse of [`Grid::boundary_index`].
    #[inline]
    pub fn boundary_node(&self, b: usize) -> (usize, usize) {
        debug_assert!(b < self.num_boundary());
        if b < self.nx {
            (b, 0)
        } else if b < self.nx + 2 * (self.ny - 2) {
            let r = b - self.nx;
            let iy = r / 2 + 1;
            let ix = if r % 2 == 0 { 0 } else { self.nx - 1 };
            (ix, iy)
        } else {
            (b - self.nx - 2 * (self.ny - 2), self.ny - 1)
        }
    }

    /// Edge membership(s) of a boundary node; corners carry two.
    pub fn edge_memberships(&self, ix: usize, iy: usize) -> (Edge, Option<Edge>) {
        debug_assert!(self.is_boundary(ix, iy));
        let on_bottom = iy == 0;
        let on_top = iy == self.ny - 1;
        let on_left = ix == 0;
        let on_right = ix == self.nx - 1;
        match (on_bottom, on_right, on_top, on_left) {
            (true, false, false, true) => (Edge::Bottom, Some(Edge::Left)),
            (true, true, false, false) => (Edge::Bottom, Some(Edge::Right)),
            (false, true, true, false) => (Edge::Top, Some(Edge::Right)),
            (false, false, true, true) => (Edge::Top, Some(Edge::Left)),
            (true, _, _, _) => (Edge::Bottom, None),
            (_, true, _, _) => (Edge::Right, None),
            (_, _, true, _) => (Edge::Top, None),
            _ => (Edge::Left, None),
        }
    }

    /// Counterclockwise perimeter coordinate of a boundary node, measured
    /// from the origin corner along bottom, right, top, left. The value is
    /// continuous at corners.
    pub fn arclength(&self, ix: usize, iy: usize) -> f64 {
        debug_assert!(self.is_boundary(ix, iy));
        let rect = self.rect();
        let (lx, ly) = (rect.lx, rect.ly);
        if iy == 0 {
            self.h * ix as f64
        } else if ix == self.nx - 1 {
            lx + self.h * iy as f64
        } else if iy == self.ny - 1 {
            lx + ly + self.h * (self.nx - 1 - ix) as f64
        } else {
            2.0 * lx + ly + self.h * (self.ny - 1 - iy) as f64
        }
    }

    pub fn perimeter(&self) -> f64 {
        let rect = self.rect();
        2.0 * (rect.lx + rect.ly)
    }

    /// Trapezoid quadrature weight of a node (h² interior, h²/2 edge,
    /// h²/4 corner).
    #[inline]
    pub fn area_weight(&self, ix: usize, iy: usize) -> f64 {
        let wx = if ix == 0 || ix == self.nx - 1 { 0.5 } else { 1.0 };
        let wy = if iy == 0 || iy == self.ny - 1 { 0.5 } else { 1.0 };
        wx * wy * self.h * self.h
    }

    /// Perimeter trapezoid weight of a boundary node: `h`, with a corner
    /// receiving `h/2` from each incident edge for a total of `h`.
    #[inline]
    pub fn boundary_weight(&self, _ix: usize, _iy: usize) -> f64 {
        self.h
    }
}

/// Scalar field on every grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T: Field = f64> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Field> GridFunction<T> {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: vec![T::ZERO; grid.num_nodes()] }
    }

    pub fn constant(grid: Grid, c: T) -> Self {
        GridFunction { grid, values: vec![c; grid.num_nodes()] }
    }

    /// Samples a closure at the node coordinates. Panics on non-finite
    /// values; guard against overflow before sampling.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.num_nodes());
        for iy in 0..grid.ny() {
            for ix in 0..grid.nx() {
                let v = f(grid.x(ix), grid.y(iy));
                assert!(v.is_finite(), "grid function sample is not finite");
                values.push(v);
            }
        }
        GridFunction { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidInput("value count does not match grid node count"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid function contains non-finite values"));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> T {
        self.values[self.grid.node(ix, iy)]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| {
            let a = v.modulus();
            if a > m {
                a
            } else {
                m
            }
        })
    }

    /// Trapezoid L² norm over the rectangle.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for iy in 0..self.grid.ny() {
            for ix in 0..self.grid.nx() {
                let v = self.at(ix, iy).modulus();
                acc += self.grid.area_weight(ix, iy) * v * v;
            }
        }
        libm::sqrt(acc)
    }

    pub fn map<U: Field>(&self, f: impl Fn(T) -> U) -> GridFunction<U> {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Field, V: Field>(
        &self,
        other: &GridFunction<U>,
        f: impl Fn(T, U) -> V,
    ) -> GridFunction<V> {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(other.values.iter()).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| v.scale(a))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn pointwise_mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    /// Restriction to the boundary nodes.
    pub fn trace(&self) -> BoundaryFunction<T> {
        let grid = self.grid;
        let mut values = Vec::with_capacity(grid.num_boundary());
        for b in 0..grid.num_boundary() {
            let (ix, iy) = grid.boundary_node(b);
            values.push(self.at(ix, iy));
        }
        BoundaryFunction { grid, values }
    }

    /// Composite trapezoid integral over the rectangle (tensor-product
    /// weights: 1 interior, 1/2 edge, 1/4 corner, scaled by h²). Exact for
    /// fields that are linear per cell.
    pub fn interior_integral(&self) -> T {
        let mut acc = T::ZERO;
        for iy in 0..self.grid.ny() {
            for ix in 0..self.grid.nx() {
                acc = acc + self.at(ix, iy).scale(self.grid.area_weight(ix, iy));
            }
        }
        acc
    }

    /// Centered 5-point Laplacian on interior nodes; zero on the boundary
    /// ring. This is the volume field matching the zero-closure flux of
    /// [`GridFunction::normal_derivative`] in the discrete Green identity.
    pub fn laplacian_interior(&self) -> GridFunction<T> {
        let g = self.grid;
        let inv_h2 = 1.0 / (g.h * g.h);
        let mut out = GridFunction::zeros(g);
        for iy in 1..g.ny() - 1 {
            for ix in 1..g.nx() - 1 {
                let s = self.at(ix + 1, iy) + self.at(ix - 1, iy) + self.at(ix, iy + 1)
                    + self.at(ix, iy - 1)
                    - self.at(ix, iy).scale(4.0);
                out.values[g.node(ix, iy)] = s.scale(inv_h2);
            }
        }
        out
    }

    /// Nodal `⟨∇_h u, ∇_h v⟩`: per axis, the average of the two adjacent
    /// cell-difference products (one-sided at the boundary). Its trapezoid
    /// integral equals the discrete Dirichlet energy pairing exactly.
    pub fn gradient_product(&self, other: &Self) -> GridFunction<T> {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let g = self.grid;
        let inv_h2 = 1.0 / (g.h * g.h);
        let nx = g.nx();
        let ny = g.ny();
        let cell_x = |ix: usize, iy: usize| {
            (self.at(ix + 1, iy) - self.at(ix, iy)) * (other.at(ix + 1, iy) - other.at(ix, iy))
        };
        let cell_y = |ix: usize, iy: usize| {
            (self.at(ix, iy + 1) - self.at(ix, iy)) * (other.at(ix, iy + 1) - other.at(ix, iy))
        };
        let mut out = GridFunction::zeros(g);
        for iy in 0..ny {
            for ix in 0..nx {
                let gx = if ix == 0 {
                    cell_x(0, iy)
                } else if ix == nx - 1 {
                    cell_x(nx - 2, iy)
                } else {
                    (cell_x(ix - 1, iy) + cell_x(ix, iy)).scale(0.5)
                };
                let gy = if iy == 0 {
                    cell_y(ix, 0)
                } else if iy == ny - 1 {
                    cell_y(ix, ny - 2)
                } else {
                    (cell_y(ix, iy - 1) + cell_y(ix, iy)).scale(0.5)
                };
                out.values[g.node(ix, iy)] = (gx + gy).scale(inv_h2);
            }
        }
        out
    }

    /// Green-compatible outward flux with the stencil closed by `Δu = 0`
    /// on the boundary ring. This is the exact discrete DN flux of a
    /// discretely harmonic field; see the module docs for the formulas.
    pub fn normal_derivative(&self) -> BoundaryFunction<T> {
        self.flux_with_closure(|_, _| T::ZERO)
    }

    /// Green-compatible outward flux with the stencil closed by the
    /// prescribed Laplacian values on the boundary ring (only ring values
    /// of `laplacian` are read). Use this when the field solves
    /// `Δ_h u = F` and `F` is known up to the boundary.
    pub fn normal_derivative_with_laplacian(&self, laplacian: &GridFunction<T>) -> BoundaryFunction<T> {
        assert_eq!(self.grid, laplacian.grid, "grid mismatch");
        self.flux_with_closure(|ix, iy| laplacian.at(ix, iy))
    }

    fn flux_with_closure(&self, lap: impl Fn(usize, usize) -> T) -> BoundaryFunction<T> {
        let g = self.grid;
        let h = g.h;
        let nx = g.nx();
        let ny = g.ny();
        let mut values = Vec::with_capacity(g.num_boundary());
        for b in 0..g.num_boundary() {
            let (ix, iy) = g.boundary_node(b);
            let u = self.at(ix, iy);
            let lam = lap(ix, iy);
            let (_, second) = g.edge_memberships(ix, iy);
            let flux = if second.is_some() {
                // Corner: average of the two per-axis ghost fluxes.
                let inx = if ix == 0 { 1 } else { nx - 2 };
                let iny = if iy == 0 { 1 } else { ny - 2 };
                let d = (u - self.at(inx, iy)) + (u - self.at(ix, iny));
                d.scale(1.0 / (2.0 * h)) + lam.scale(h / 4.0)
            } else if ix == 0 || ix == nx - 1 {
                let inx = if ix == 0 { 1 } else { nx - 2 };
                let tang = self.at(ix, iy + 1) - u.scale(2.0) + self.at(ix, iy - 1);
                (u - self.at(inx, iy)).scale(1.0 / h) + lam.scale(h / 2.0)
                    - tang.scale(0.5 / h)
            } else {
                let iny = if iy == 0 { 1 } else { ny - 2 };
                let tang = self.at(ix + 1, iy) - u.scale(2.0) + self.at(ix - 1, iy);
                (u - self.at(ix, iny)).scale(1.0 / h) + lam.scale(h / 2.0)
                    - tang.scale(0.5 / h)
            };
            values.push(flux);
        }
        BoundaryFunction { grid: g, values }
    }
}

impl GridFunction<num_complex::Complex64> {
    pub fn re_part(&self) -> GridFunction<f64> {
        self.map(|v| v.re)
    }

    pub fn im_part(&self) -> GridFunction<f64> {
        self.map(|v| v.im)
    }
}

impl GridFunction<f64> {
    /// Assembles `re + i·im` into a complex field.
    pub fn with_imaginary(&self, im: &GridFunction<f64>) -> GridFunction<num_complex::Complex64> {
        self.zip_map(im, num_complex::Complex64::new)
    }
}

/// Scalar field on the boundary nodes only.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFunction<T: Field = f64> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Field> BoundaryFunction<T> {
    pub fn zeros(grid: Grid) -> Self {
        BoundaryFunction { grid, values: vec![T::ZERO; grid.num_boundary()] }
    }

    pub fn constant(grid: Grid, c: T) -> Self {
        BoundaryFunction { grid, values: vec![c; grid.num_boundary()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.num_boundary());
        for b in 0..grid.num_boundary() {
            let (ix, iy) = grid.boundary_node(b);
            let v = f(grid.x(ix), grid.y(iy));
            assert!(v.is_finite(), "boundary function sample is not finite");
            values.push(v);
        }
        BoundaryFunction { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.num_boundary() {
            return Err(Error::InvalidInput("value count does not match boundary node count"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("boundary function contains non-finite values"));
        }
        Ok(BoundaryFunction { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn at(&self, b: usize) -> T {
        self.values[b]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| {
            let a = v.modulus();
            if a > m {
                a
            } else {
                m
            }
        })
    }

    pub fn map<U: Field>(&self, f: impl Fn(T) -> U) -> BoundaryFunction<U> {
        BoundaryFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Field, V: Field>(
        &self,
        other: &BoundaryFunction<U>,
        f: impl Fn(T, U) -> V,
    ) -> BoundaryFunction<V> {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        BoundaryFunction {
            grid: self.grid,
            values: self.values.iter().zip(other.values.iter()).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| v.scale(a))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn pointwise_mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    /// Perimeter trapezoid integral; each corner receives h/2 from each of
    /// its two incident edges (total weight h). Exact for per-edge linears.
    pub fn boundary_integral(&self) -> T {
        let g = self.grid;
        let mut acc = T::ZERO;
        for b in 0..g.num_boundary() {
            let (ix, iy) = g.boundary_node(b);
            acc = acc + self.values[b].scale(g.boundary_weight(ix, iy));
        }
        acc
    }
}

impl BoundaryFunction<num_complex::Complex64> {
    pub fn re_part(&self) -> BoundaryFunction<f64> {
        self.map(|v| v.re)
    }

    pub fn im_part(&self) -> BoundaryFunction<f64> {
        self.map(|v| v.im)
    }
}

impl BoundaryFunction<f64> {
    pub fn with_imaginary(&self, im: &BoundaryFunction<f64>) -> BoundaryFunction<num_complex::Complex64> {
        self.zip_map(im, num_complex::Complex64::new)
    }
}
