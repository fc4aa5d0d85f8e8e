//! JSON configuration documents, one per subcommand.

use std::path::Path;

use mcac_core::analysis::DtRule;
use mcac_core::spectrum::SweepGeometry;
use mcac_core::{DoubleWell, GridSpec, Shape};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Reads a config file, returning the parsed value and the raw JSON value
/// used for the digest.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<(T, serde_json::Value)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let parsed = T::deserialize(&value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((parsed, value))
}

fn default_well() -> String {
    "cubic".into()
}

pub fn well(name: &str) -> CliResult<DoubleWell> {
    DoubleWell::by_name(name).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    Circle {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Square {
        side: f64,
    },
    RoundedSquare {
        side: f64,
        corner: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Line {
        #[serde(default)]
        offset: f64,
    },
}

impl ShapeConfig {
    pub fn build(&self) -> CliResult<Shape> {
        let shape = match self.clone() {
            ShapeConfig::Circle { radius, center } => Shape::Circle { center, radius },
            ShapeConfig::Ellipse { a, b, center } => Shape::Ellipse { center, a, b },
            ShapeConfig::Polygon { vertices } => Shape::polygon(vertices),
            ShapeConfig::Square { side } => Shape::square(side),
            ShapeConfig::RoundedSquare { side, corner, center } => Shape::RoundedSquare { center, side, corner },
            ShapeConfig::Line { offset } => Shape::Line { offset },
        };
        shape.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(shape)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default = "default_well")]
    pub well: String,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default = "default_points")]
    pub n_points: usize,
}

fn default_rho_max() -> f64 {
    mcac_core::profile::DEFAULT_RHO_MAX
}

fn default_points() -> usize {
    mcac_core::profile::DEFAULT_POINTS
}

impl ProfileConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.n_points.is_multiple_of(2) {
            return Err(CliError::Config(format!("n_points must be odd so that ρ = 0 is a node, got {}", self.n_points)));
        }
        if !(self.rho_max > 0.0 && self.rho_max.is_finite()) {
            return Err(CliError::Config(format!("rho_max must be positive, got {}", self.rho_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    #[serde(default = "one")]
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly", default)]
    pub ly: Option<f64>,
}

fn one() -> usize {
    1
}

impl GridConfig {
    pub fn build(&self) -> CliResult<GridSpec> {
        GridSpec::new(self.nx, self.ny, self.lx, self.ly.unwrap_or(self.lx)).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum SolverName {
    #[default]
    Dct,
    Cg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub eps: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub grid: GridConfig,
    #[serde(default = "default_well")]
    pub well: String,
    pub shape: ShapeConfig,
    #[serde(default)]
    pub order: u8,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub solver: SolverName,
    /// Write the field at every record, not only the final one.
    #[serde(default)]
    pub snapshot_fields: bool,
}

fn default_record_every() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontConfig {
    pub shape: ShapeConfig,
    #[serde(default = "default_markers")]
    pub markers: usize,
    #[serde(rename = "T")]
    pub t_end: f64,
    /// Defaults to `0.2 h²` with `h` the smallest marker spacing.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Number of evenly spaced snapshot intervals in `[0, T]`; the initial
    /// and final fronts are always written.
    #[serde(default = "one")]
    pub snapshots: usize,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_markers() -> usize {
    256
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialConfig {
    pub n: usize,
    pub radii: Vec<f64>,
    /// Defaults to alternating signs starting with −1 (innermost ring
    /// bounds Ω⁻).
    #[serde(default)]
    pub signs: Option<Vec<i8>>,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default = "default_radial_dt")]
    pub dt: f64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_radial_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Bubble { radius: f64 },
    Interface,
}

impl GeometryConfig {
    pub fn build(self) -> SweepGeometry {
        match self {
            GeometryConfig::Bubble { radius } => SweepGeometry::Bubble { radius },
            GeometryConfig::Interface => SweepGeometry::Interface,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub p_eps: f64,
    #[serde(default = "default_h_ratio")]
    pub h_ratio: f64,
    #[serde(default)]
    pub h1: f64,
    #[serde(default)]
    pub geometry: Option<GeometryConfig>,
    #[serde(default = "default_well")]
    pub well: String,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_h_ratio() -> f64 {
    0.25
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IneqConfig {
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_trials() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DtRuleConfig {
    Quadratic(f64),
    Cubic(f64),
}

impl DtRuleConfig {
    pub fn build(self) -> DtRule {
        match self {
            DtRuleConfig::Quadratic(c) => DtRule::Quadratic(c),
            DtRuleConfig::Cubic(c) => DtRule::Cubic(c),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub shape: ShapeConfig,
    pub eps_list: Vec<f64>,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default = "default_order")]
    pub order: u8,
    #[serde(default)]
    pub h_ratio: Option<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub markers: Option<usize>,
    #[serde(default)]
    pub records: Option<usize>,
    #[serde(default)]
    pub dt_rule: Option<DtRuleConfig>,
    #[serde(default = "default_well")]
    pub well: String,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_order() -> u8 {
    1
}
