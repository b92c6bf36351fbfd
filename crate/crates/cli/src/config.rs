//! JSON experiment configuration with an explicit schema version.

use nlslab::grid::{GridScheme, RadialGrid};
use nlslab::params::ProblemParams;
use nlslab::profile::SuiteManifest;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentTag {
    #[serde(rename = "ground-state")]
    GroundState,
    #[serde(rename = "gn-sweep")]
    GnSweep,
    #[serde(rename = "evolve")]
    Evolve,
    #[serde(rename = "minimal-mass-blowup")]
    MinimalMassBlowup,
    #[serde(rename = "profile-demo")]
    ProfileDemo,
    #[serde(rename = "virial-check")]
    VirialCheck,
}

impl ExperimentTag {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentTag::GroundState => "ground-state",
            ExperimentTag::GnSweep => "gn-sweep",
            ExperimentTag::Evolve => "evolve",
            ExperimentTag::MinimalMassBlowup => "minimal-mass-blowup",
            ExperimentTag::ProfileDemo => "profile-demo",
            ExperimentTag::VirialCheck => "virial-check",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub r_max: f64,
    pub n: usize,
    /// "uniform-shifted" or "graded"
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmin_ratio: Option<f64>,
}

impl GridConfig {
    pub fn build(&self, params: ProblemParams) -> Result<Arc<RadialGrid>, String> {
        let scheme = match self.scheme.as_str() {
            "uniform-shifted" => GridScheme::UniformShifted,
            "graded" => GridScheme::Graded {
                rmin_ratio: self.rmin_ratio.unwrap_or(1e-6),
            },
            other => return Err(format!("grid.scheme: unknown scheme '{other}'")),
        };
        RadialGrid::build(params, self.r_max, self.n, scheme).map_err(|e| format!("grid: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardyProbeConfig {
    pub epsilons: Vec<f64>,
    pub r_max: f64,
    pub n: usize,
    pub rmin_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonAttainmentConfig {
    pub box_half_extent: f64,
    pub box_n: usize,
    pub shifts: Vec<f64>,
    /// grid for the c = 0 reference profile
    pub reference_grid: GridConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub blowup_threshold: f64,
    pub snapshot_stride: usize,
    #[serde(default)]
    pub allow_dt_above_rule: bool,
    #[serde(default = "default_focus_cells")]
    pub min_focus_cells: f64,
    /// write per-snapshot field files
    #[serde(default)]
    pub dump_fields: bool,
}

fn default_focus_cells() -> f64 {
    5.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupConfig {
    pub t_blowup: f64,
    pub theta: f64,
    pub lambda: f64,
    /// evolve to this fraction of the blow-up time
    pub t_end_fraction: f64,
    /// grid used to compute the ground state entering S
    pub ground_grid: GridConfig,
    /// weight-family scales for the momentum bound matrix
    #[serde(default)]
    pub momentum_bound_scales: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentTag,
    pub d: u32,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub seed: u64,
    /// "shooting" or "gradient-flow" (ground-state / gn-sweep)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_tol: Option<f64>,
    /// pinned check tolerance on the elliptic defect
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardy_probe: Option<HardyProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonattainment: Option<NonAttainmentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteManifest>,
    /// gn-sweep: coupling values, one run per value
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<f64>>,
}

fn default_residual_tol() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| format!("config parse error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<ProblemParams, String> {
        ProblemParams::new(self.d, self.c).map_err(|e| format!("c: {e}"))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        self.params()?;
        if self.residual_tol <= 0.0 {
            return Err("residual_tol: must be positive".into());
        }
        if let Some(tol) = self.solver_tol {
            if tol <= 0.0 {
                return Err("solver_tol: must be positive".into());
            }
        }
        match self.experiment {
            ExperimentTag::GroundState => {
                self.grid
                    .as_ref()
                    .ok_or("grid: required for ground-state runs")?;
            }
            ExperimentTag::GnSweep => {
                self.grid.as_ref().ok_or("grid: required for gn-sweep runs")?;
                let values = self
                    .sweep_values
                    .as_ref()
                    .ok_or("sweep_values: required for gn-sweep runs")?;
                for &v in values {
                    ProblemParams::new(self.d, v).map_err(|e| format!("sweep_values: {e}"))?;
                }
            }
            ExperimentTag::Evolve => {
                self.grid.as_ref().ok_or("grid: required for evolve runs")?;
                let e = self.evolve.as_ref().ok_or("evolve: required for evolve runs")?;
                if !(e.dt > 0.0 && e.t_end > 0.0) {
                    return Err("evolve.dt / evolve.t_end: must be positive".into());
                }
            }
            ExperimentTag::MinimalMassBlowup => {
                self.grid
                    .as_ref()
                    .ok_or("grid: required for minimal-mass-blowup runs")?;
                self.evolve
                    .as_ref()
                    .ok_or("evolve: required for minimal-mass-blowup runs")?;
                let b = self
                    .blowup
                    .as_ref()
                    .ok_or("blowup: required for minimal-mass-blowup runs")?;
                if !(b.t_blowup > 0.0 && b.lambda > 0.0) {
                    return Err("blowup.t_blowup / blowup.lambda: must be positive".into());
                }
                if !(b.t_end_fraction > 0.0 && b.t_end_fraction < 1.0) {
                    return Err("blowup.t_end_fraction: must lie in (0, 1)".into());
                }
            }
            ExperimentTag::ProfileDemo => {
                self.suite
                    .as_ref()
                    .ok_or("suite: required for profile-demo runs")?;
            }
            ExperimentTag::VirialCheck => {
                self.blowup
                    .as_ref()
                    .ok_or("blowup: required for virial-check runs")?;
                self.grid
                    .as_ref()
                    .ok_or("grid: required for virial-check runs")?;
            }
        }
        Ok(())
    }
}
