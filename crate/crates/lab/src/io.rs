//! File formats. All floating-point values are written in shortest
//! round-trip scientific notation, so identical runs produce identical
//! bytes and files parse back to the exact same numbers.
//!
//! * Grid functions: CSV `x,y,re,im`, rows in row-major node order.
//! * Boundary functions: CSV `edge,arclength,x,y,re,im`, rows in boundary
//!   node order; corners carry both edge memberships as `a+b`.
//! * Fourier samples: CSV `xi_x,xi_y,re,im,method`.

use std::fmt::Write as _;

use calderon_core::{BoundaryFunction, FourierSample, Grid, GridFunction};
use num_complex::Complex64;

fn push_f64(out: &mut String, v: f64) {
    // `{:e}` is the shortest scientific form that round-trips through
    // `str::parse::<f64>()`.
    let _ = write!(out, "{v:e}");
}

pub fn write_grid_function(u: &GridFunction<Complex64>) -> String {
    let g = u.grid();
    let mut out = String::from("x,y,re,im\n");
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            push_f64(&mut out, g.x(ix));
            out.push(',');
            push_f64(&mut out, g.y(iy));
            out.push(',');
            let v = u.at(ix, iy);
            push_f64(&mut out, v.re);
            out.push(',');
            push_f64(&mut out, v.im);
            out.push('\n');
        }
    }
    out
}

pub fn write_grid_function_real(u: &GridFunction<f64>) -> String {
    write_grid_function(&u.map(|v| Complex64::new(v, 0.0)))
}

pub fn write_boundary_function(f: &BoundaryFunction<Complex64>) -> String {
    let g = f.grid();
    let mut out = String::from("edge,arclength,x,y,re,im\n");
    for b in 0..g.num_boundary() {
        let (ix, iy) = g.boundary_node(b);
        let (first, second) = g.edge_memberships(ix, iy);
        match second {
            Some(e) => {
                let _ = write!(out, "{}+{}", first.name(), e.name());
            }
            None => out.push_str(first.name()),
        }
        out.push(',');
        push_f64(&mut out, g.arclength(ix, iy));
        out.push(',');
        push_f64(&mut out, g.x(ix));
        out.push(',');
        push_f64(&mut out, g.y(iy));
        out.push(',');
        let v = f.at(b);
        push_f64(&mut out, v.re);
        out.push(',');
        push_f64(&mut out, v.im);
        out.push('\n');
    }
    out
}

pub fn write_boundary_function_real(f: &BoundaryFunction<f64>) -> String {
    write_boundary_function(&f.map(|v| Complex64::new(v, 0.0)))
}

pub fn write_samples(samples: &[FourierSample]) -> String {
    let mut out = String::from("xi_x,xi_y,re,im,method\n");
    for s in samples {
        push_f64(&mut out, s.xi[0]);
        out.push(',');
        push_f64(&mut out, s.xi[1]);
        out.push(',');
        push_f64(&mut out, s.value.re);
        out.push(',');
        push_f64(&mut out, s.value.im);
        out.push(',');
        out.push_str(s.method.name());
        out.push('\n');
    }
    out
}

/// Parses a grid-function CSV back onto `grid`, checking the header, the
/// row count, and that node coordinates match to 1e-9 of the spacing.
/// The imaginary column must vanish (potentials are real).
pub fn read_grid_function(grid: Grid, text: &str) -> Result<GridFunction<f64>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some("x,y,re,im") => {}
        other => return Err(format!("bad grid CSV header: {other:?}")),
    }
    let mut values = Vec::with_capacity(grid.num_nodes());
    let tol = 1e-9 * grid.spacing();
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut next = |name: &str| -> Result<f64, String> {
            cols.next()
                .ok_or_else(|| format!("row {row}: missing column {name}"))?
                .parse::<f64>()
                .map_err(|e| format!("row {row}: column {name}: {e}"))
        };
        let x = next("x")?;
        let y = next("y")?;
        let re = next("re")?;
        let im = next("im")?;
        if row >= grid.num_nodes() {
            return Err("grid CSV has more rows than grid nodes".to_string());
        }
        let (ix, iy) = grid.node_coords(row);
        if (x - grid.x(ix)).abs() > tol || (y - grid.y(iy)).abs() > tol {
            return Err(format!("row {row}: coordinates ({x}, {y}) do not match the grid"));
        }
        if im.abs() > 1e-9 {
            return Err(format!("row {row}: potential has a nonzero imaginary part {im:e}"));
        }
        values.push(re);
    }
    GridFunction::from_values(grid, values).map_err(|e| e.to_string())
}
