//! Experiment configuration: a single TOML file with nested sections.
//! Unknown keys are rejected, and every parameter is validated against
//! the module preconditions before any solve starts.

use std::path::{Path, PathBuf};

use calderon_core::{Grid, GridFunction, Rect};
use serde::{Deserialize, Serialize};

use crate::io;

/// Raw configuration as parsed from TOML. Field names are the file schema.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    /// Nonlinearity exponent m ≥ 2.
    pub m: u32,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub linearization: LinearizationConfig,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "out".to_string()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// `[x0, y0, lx, ly]`
    pub rect: [f64; 4],
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum PotentialConfig {
    /// `q ≡ value`
    Constant { value: f64 },
    /// `q = amplitude·exp(−((x−cx)² + (y−cy)²)/width²)`
    Bump { amplitude: f64, center: [f64; 2], width: f64 },
    /// `q = amplitude·cos(kx·x + ky·y)` with `angular = [kx, ky]`
    Cosine { amplitude: f64, angular: [f64; 2] },
    /// Grid-function CSV (the format this tool writes), closing the loop
    /// from a reconstructed potential back into simulation.
    File { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    50
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: default_tol(), max_iter: default_max_iter() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizationConfig {
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// `direct` or `fd`
    #[serde(default = "default_method")]
    pub method: String,
    /// Replace `eps` by the step minimizing the modeled truncation-plus-
    /// noise error at the order being differenced.
    #[serde(default)]
    pub auto_eps: bool,
}

fn default_eps() -> f64 {
    1e-3
}

fn default_method() -> String {
    "direct".to_string()
}

impl Default for LinearizationConfig {
    fn default() -> Self {
        LinearizationConfig { eps: default_eps(), method: default_method(), auto_eps: false }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Side of the periodic embedding box; defaults to the longer side of
    /// the domain rectangle.
    #[serde(default)]
    pub l_box: Option<f64>,
    /// Max |ξ| in the sweep; defaults to 4π.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    4.0 * std::f64::consts::PI
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { l_box: None, radius: default_radius() }
    }
}

/// Boundary data used by `forward`, `dn`, and `linearize`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum DataConfig {
    Constant { amplitude: f64 },
    /// `amplitude·x` restricted to the boundary.
    TraceX { amplitude: f64 },
    /// `amplitude·cos(2π·mode·s/P)` in the perimeter coordinate `s`.
    Cosine { amplitude: f64, mode: u32 },
    /// Seeded smooth random combination scaled to `‖f‖∞ = amplitude`.
    Random { amplitude: f64 },
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Constant { amplitude: 0.01 }
    }
}

/// Configuration after validation: concrete grid, potential samples, and
/// resolved defaults. Any failure here is a configuration error (exit 2).
pub struct Resolved {
    pub config: ExperimentConfig,
    pub grid: Grid,
    pub q: GridFunction<f64>,
    /// Bytes of the potential file when `kind = "file"` (hashed into the
    /// manifest).
    pub potential_file: Option<Vec<u8>>,
    pub l_box: f64,
    pub output_dir: PathBuf,
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn resolve(config: ExperimentConfig, config_dir: &Path) -> Result<Resolved, String> {
    let [x0, y0, lx, ly] = config.grid.rect;
    let grid = Grid::new(config.grid.nx, config.grid.ny, Rect::new(x0, y0, lx, ly))
        .map_err(|e| format!("grid: {e}"))?;

    if config.m < 2 {
        return Err("m must be at least 2".to_string());
    }
    if !(config.solver.tol > 0.0) {
        return Err("solver.tol must be positive".to_string());
    }
    if config.solver.max_iter == 0 {
        return Err("solver.max_iter must be positive".to_string());
    }
    if !(config.linearization.eps > 0.0) {
        return Err("linearization.eps must be positive".to_string());
    }
    match config.linearization.method.as_str() {
        "direct" | "fd" => {}
        other => return Err(format!("linearization.method must be 'direct' or 'fd', got '{other}'")),
    }
    if !(config.lattice.radius >= 0.0) {
        return Err("lattice.radius must be nonnegative".to_string());
    }
    let side = if lx > ly { lx } else { ly };
    let l_box = config.lattice.l_box.unwrap_or(side);
    if l_box < side * (1.0 - 1e-12) {
        return Err("lattice.l_box must cover the domain extent".to_string());
    }

    let (q, potential_file) = match &config.potential {
        PotentialConfig::Constant { value } => {
            if !value.is_finite() {
                return Err("potential.value must be finite".to_string());
            }
            (GridFunction::constant(grid, *value), None)
        }
        PotentialConfig::Bump { amplitude, center, width } => {
            if !(*width > 0.0) {
                return Err("potential.width must be positive".to_string());
            }
            let (a, cx, cy, w) = (*amplitude, center[0], center[1], *width);
            let q = GridFunction::from_fn(grid, move |x, y| {
                a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (w * w)).exp()
            });
            (q, None)
        }
        PotentialConfig::Cosine { amplitude, angular } => {
            let (a, kx, ky) = (*amplitude, angular[0], angular[1]);
            if !(kx.is_finite() && ky.is_finite()) {
                return Err("potential.angular must be finite".to_string());
            }
            (GridFunction::from_fn(grid, move |x, y| a * (kx * x + ky * y).cos()), None)
        }
        PotentialConfig::File { path } => {
            let full = if path.is_absolute() { path.clone() } else { config_dir.join(path) };
            let bytes = std::fs::read(&full)
                .map_err(|e| format!("potential.path {}: {e}", full.display()))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| "potential file is not UTF-8".to_string())?;
            let q = io::read_grid_function(grid, &text)?;
            (q, Some(bytes))
        }
    };

    let output_dir = PathBuf::from(&config.output_dir);
    Ok(Resolved { config, grid, q, potential_file, l_box, output_dir })
}
