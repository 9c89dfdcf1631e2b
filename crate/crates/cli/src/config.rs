//! Run configuration: a JSON document naming the weight, the map, and the
//! grids and tolerances every subcommand draws on.

use copop_core::quadrature::QuadratureRule;
use copop_core::selfmaps::{validate_selfmap, MapDescriptor, SelfMap};
use copop_core::weights::{Weight, WeightDescriptor};
use copop_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HsMode {
    DerivativeOnly,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmissibilityConfig {
    pub grid_size: usize,
    /// Start of the interval on which W4 is certified.
    pub r0: f64,
    pub l1_kmax: usize,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        Self {
            grid_size: copop_core::weights::DEFAULT_GRID_SIZE,
            r0: 0.6,
            l1_kmax: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsConfig {
    pub nmax: usize,
    pub radial_nodes: usize,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        Self {
            nmax: 200,
            radial_nodes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridsConfig {
    /// Circles of the essential-norm profile and the counting grid.
    pub radii: Vec<f64>,
    pub angles: usize,
    pub counting_angles: usize,
    pub r_sequence: Vec<f64>,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl Default for GridsConfig {
    fn default() -> Self {
        Self {
            radii: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999, 0.9999],
            angles: 512,
            counting_angles: 32,
            r_sequence: vec![0.9, 0.99, 0.999],
            radial_nodes: 96,
            angular_nodes: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub compact_tol: f64,
    pub notcompact_tol: f64,
    pub hs_gap_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            compact_tol: copop_core::diagnostics::DEFAULT_COMPACT_TOL,
            notcompact_tol: copop_core::diagnostics::DEFAULT_NOTCOMPACT_TOL,
            hs_gap_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorConfig {
    /// Basis terms in the Hilbert-Schmidt sum.
    pub nmax: usize,
    pub mode: HsMode,
    pub matrix_size: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            nmax: 200,
            mode: HsMode::DerivativeOnly,
            matrix_size: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchattenConfig {
    pub p: Vec<f64>,
    pub berezin_r: f64,
}

impl Default for SchattenConfig {
    fn default() -> Self {
        Self {
            p: vec![1.0, 2.0, 4.0],
            berezin_r: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClosedRangeConfig {
    pub nmax_monomials: usize,
    pub a_grid: Vec<[f64; 2]>,
    /// Exponent shift of the kernel test functions; the W2 witness if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub normalize_origin: bool,
}

impl Default for ClosedRangeConfig {
    fn default() -> Self {
        Self {
            nmax_monomials: 20,
            a_grid: vec![[0.5, 0.0], [0.0, 0.9], [-0.99, 0.0]],
            delta: None,
            normalize_origin: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "copop-out".into(),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub weight: WeightDescriptor,
    pub map: MapDescriptor,
    #[serde(default)]
    pub admissibility: AdmissibilityConfig,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default)]
    pub grids: GridsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub schatten: SchattenConfig,
    #[serde(default)]
    pub closed_range: ClosedRangeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn check_radii(path: &str, radii: &[f64]) -> Result<(), ConfigError> {
    if radii.is_empty() {
        return Err(invalid(path, "radii must not be empty"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(invalid(path, format!("radius {r} is outside (0, 1)")));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(path, "radii not increasing"));
    }
    Ok(())
}

fn check_positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build_weight()?;
        self.build_map()?;

        let a = &self.admissibility;
        if a.grid_size < 100 {
            return Err(invalid("admissibility.grid_size", "must be at least 100"));
        }
        if !(0.0..1.0).contains(&a.r0) {
            return Err(invalid("admissibility.r0", "must lie in [0, 1)"));
        }
        if !(10..=51).contains(&a.l1_kmax) {
            return Err(invalid("admissibility.l1_kmax", "must lie in [10, 51]"));
        }
        if self.moments.nmax < 1 {
            return Err(invalid("moments.nmax", "must be at least 1"));
        }
        if self.moments.radial_nodes < 8 {
            return Err(invalid("moments.radial_nodes", "must be at least 8"));
        }

        let g = &self.grids;
        check_radii("grids.radii", &g.radii)?;
        check_radii("grids.r_sequence", &g.r_sequence)?;
        if g.angles < 4 {
            return Err(invalid("grids.angles", "must be at least 4"));
        }
        if g.counting_angles < 1 {
            return Err(invalid("grids.counting_angles", "must be at least 1"));
        }
        self.rule()?;

        let t = &self.tolerances;
        check_positive("tolerances.compact_tol", t.compact_tol)?;
        check_positive("tolerances.notcompact_tol", t.notcompact_tol)?;
        check_positive("tolerances.hs_gap_tol", t.hs_gap_tol)?;
        if t.compact_tol >= t.notcompact_tol {
            return Err(invalid("tolerances.compact_tol", "must be below notcompact_tol"));
        }

        if self.operator.nmax < 10 {
            return Err(invalid("operator.nmax", "must be at least 10"));
        }
        if self.operator.matrix_size < 1 {
            return Err(invalid("operator.matrix_size", "must be at least 1"));
        }

        if self.schatten.p.is_empty() {
            return Err(invalid("schatten.p", "must not be empty"));
        }
        for (i, p) in self.schatten.p.iter().enumerate() {
            check_positive(&format!("schatten.p[{i}]"), *p)?;
        }
        if !(self.schatten.berezin_r > 0.0 && self.schatten.berezin_r < 1.0) {
            return Err(invalid("schatten.berezin_r", "must lie in (0, 1)"));
        }

        let c = &self.closed_range;
        for (i, a) in c.a_grid.iter().enumerate() {
            if !(C64::new(a[0], a[1]).norm() < 1.0) {
                return Err(invalid(&format!("closed_range.a_grid[{i}]"), "point is outside the disk"));
            }
        }
        if let Some(d) = c.delta {
            check_positive("closed_range.delta", d)?;
        }
        if c.nmax_monomials == 0 && c.a_grid.iter().all(|a| a[0] == 0.0 && a[1] == 0.0) {
            return Err(invalid("closed_range", "test family is empty"));
        }

        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "must not be empty"));
        }
        Ok(())
    }

    pub fn build_weight(&self) -> Result<Weight, ConfigError> {
        Weight::from_descriptor(&self.weight).map_err(|e| invalid("weight", e.to_string()))
    }

    pub fn build_map(&self) -> Result<SelfMap, ConfigError> {
        let phi = SelfMap::from_descriptor(&self.map).map_err(|e| invalid("map", e.to_string()))?;
        if phi.is_constant() {
            return Err(invalid("map", "constant maps are not supported"));
        }
        validate_selfmap(&phi).map_err(|e| invalid("map", e.to_string()))?;
        Ok(phi)
    }

    pub fn rule(&self) -> Result<QuadratureRule, ConfigError> {
        QuadratureRule::new(self.grids.radial_nodes, self.grids.angular_nodes)
            .map_err(|e| invalid("grids.radial_nodes", e.to_string()))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    /// SHA-256 of the canonical JSON form, output section excluded.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
