//! Flat JSON run configuration shared by all subcommands.
//!
//! Every knob lives in one flat object so a run is fully described by a
//! single small file plus a seed. Unknown keys are rejected to catch typos
//! early. The seed has no default: reproducibility must be an explicit
//! choice, on the command line or in the file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use superext::domain::{Grid, GridSpec, Variogram};
use superext::ppp::{BrownResnickSampler, DegenerateSampler, SpectralSampler};

use crate::error::{CliError, Result};

/// Which side of the limit construction `simulate` should realize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Only the Poisson point-measure limit.
    Limit,
    /// Only the log-normal triangular array.
    Prelimit,
    /// Both sides on the same time grid.
    Both,
}

impl Side {
    /// Whether the limit process is simulated.
    pub fn includes_limit(self) -> bool {
        matches!(self, Side::Limit | Side::Both)
    }

    /// Whether the triangular array is simulated.
    pub fn includes_prelimit(self) -> bool {
        matches!(self, Side::Prelimit | Side::Both)
    }
}

/// Spectral profile law used for the limit process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralModel {
    /// Log-normal profiles driven by the variogram.
    BrownResnick,
    /// Constant profiles (complete spatial dependence).
    Degenerate,
}

/// One exceedance set for the `convergence` command: sites and one positive
/// threshold per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSet {
    /// Grid sites the thresholds refer to.
    pub sites: Vec<usize>,
    /// One positive threshold per site.
    pub thresholds: Vec<f64>,
}

fn default_grid_dimension() -> usize {
    1
}
fn default_grid_extent() -> f64 {
    1.0
}
fn default_grid_resolution() -> usize {
    5
}
fn default_grid_origin() -> usize {
    0
}
fn default_grid_site_cap() -> usize {
    superext::domain::DEFAULT_SITE_CAP
}
fn default_variogram_scale() -> f64 {
    1.0
}
fn default_variogram_exponent() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_spectral_model() -> SpectralModel {
    SpectralModel::BrownResnick
}
fn default_truncation_atoms() -> usize {
    1000
}
fn default_realizations() -> usize {
    100
}
fn default_prelimit_n() -> u64 {
    100
}
fn default_simulate_side() -> Side {
    Side::Limit
}
fn default_time_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
fn default_test_samples() -> usize {
    10_000
}
fn default_measure_draws() -> usize {
    100_000
}
fn default_prelimit_draws() -> usize {
    200_000
}
fn default_n_list() -> Vec<u64> {
    vec![100, 1000, 10_000]
}
fn default_convergence_sets() -> Vec<ThresholdSet> {
    vec![ThresholdSet {
        sites: vec![0],
        thresholds: vec![1.0],
    }]
}
fn default_order_ranks() -> Vec<usize> {
    vec![2, 3]
}
fn default_out_dir() -> String {
    "out".to_string()
}

/// Complete, flat run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Random seed; required (here or via `--seed`) so every run is
    /// reproducible by construction.
    #[serde(default)]
    pub seed: Option<u64>,

    /// Spatial dimension of the site grid (1 or 2).
    #[serde(default = "default_grid_dimension")]
    pub grid_dimension: usize,
    /// Extent of the grid along each axis.
    #[serde(default = "default_grid_extent")]
    pub grid_extent: f64,
    /// Sites per axis.
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: usize,
    /// Index of the anchor site.
    #[serde(default = "default_grid_origin")]
    pub grid_origin: usize,
    /// Refusal threshold on the total number of sites.
    #[serde(default = "default_grid_site_cap")]
    pub grid_site_cap: usize,

    /// Variogram scale coefficient.
    #[serde(default = "default_variogram_scale")]
    pub variogram_scale: f64,
    /// Variogram exponent in (0, 2].
    #[serde(default = "default_variogram_exponent")]
    pub variogram_exponent: f64,

    /// Radial tail exponent of the limit process.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Time horizon of the study window.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Spectral profile law of the limit process.
    #[serde(default = "default_spectral_model")]
    pub spectral_model: SpectralModel,
    /// Atoms kept per realized point measure.
    #[serde(default = "default_truncation_atoms")]
    pub truncation_atoms: usize,

    /// Realized paths per simulation command.
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Array size of the simulated triangular array.
    #[serde(default = "default_prelimit_n")]
    pub prelimit_n: u64,
    /// Which side(s) `simulate` realizes.
    #[serde(default = "default_simulate_side")]
    pub simulate_side: Side,
    /// Times at which paths are recorded.
    #[serde(default = "default_time_grid")]
    pub time_grid: Vec<f64>,

    /// Sample count per statistical test.
    #[serde(default = "default_test_samples")]
    pub test_samples: usize,
    /// Monte Carlo draws for exponent-measure estimates.
    #[serde(default = "default_measure_draws")]
    pub measure_draws: usize,
    /// Draws per array size for the convergence comparison.
    #[serde(default = "default_prelimit_draws")]
    pub prelimit_draws: usize,
    /// Array sizes for convergence studies, strictly increasing.
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u64>,
    /// Exceedance sets compared by `convergence`.
    #[serde(default = "default_convergence_sets")]
    pub convergence_sets: Vec<ThresholdSet>,
    /// Order-statistic ranks tested by `test`.
    #[serde(default = "default_order_ranks")]
    pub order_ranks: Vec<usize>,

    /// Output directory; a runtime concern, so it is accepted from config
    /// files and `--out` but never written back into resolved output.
    #[serde(default = "default_out_dir", skip_serializing)]
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        serde_json::from_str("{}").expect("empty object must deserialize to defaults")
    }
}

impl RunConfig {
    /// Load from a JSON file, or start from defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| {
                    CliError::config(format!("cannot read config {}: {e}", p.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::config(format!("cannot parse config {}: {e}", p.display()))
                })
            }
        }
    }

    /// Fold command-line overrides into the configuration.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<&Path>) {
        if let Some(s) = seed {
            self.seed = Some(s);
        }
        if let Some(o) = out {
            self.out_dir = o.display().to_string();
        }
    }

    /// The seed, which every command requires.
    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            CliError::config("no seed given: set \"seed\" in the config file or pass --seed")
        })
    }

    /// Validate the parts every command relies on.
    pub fn validate_common(&self) -> Result<()> {
        self.seed()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(CliError::config(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(CliError::config(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        if self.truncation_atoms == 0 {
            return Err(CliError::config("truncation_atoms must be at least 1"));
        }
        if self.realizations == 0 {
            return Err(CliError::config("realizations must be at least 1"));
        }
        if self.prelimit_n < 2 {
            return Err(CliError::config(format!(
                "prelimit_n must be at least 2, got {}",
                self.prelimit_n
            )));
        }
        if self.time_grid.is_empty() {
            return Err(CliError::config("time_grid must be nonempty"));
        }
        let mut last = f64::NEG_INFINITY;
        for &u in &self.time_grid {
            if !(u.is_finite() && u >= 0.0 && u > last) {
                return Err(CliError::config(format!(
                    "time_grid must be nonnegative and strictly increasing, got {u} after {last}"
                )));
            }
            last = u;
        }
        if last > self.horizon {
            return Err(CliError::config(format!(
                "time_grid reaches {last}, beyond the horizon {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Require the unit tail exponent needed whenever the triangular array
    /// is involved; `context` names the feature for the error message.
    pub fn require_unit_alpha(&self, context: &str) -> Result<()> {
        if self.alpha != 1.0 {
            return Err(CliError::config(format!(
                "{context} requires alpha = 1 (the array's normalization), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Build the site grid.
    pub fn build_grid(&self) -> Result<Grid> {
        Ok(Grid::build(&GridSpec {
            dimension: self.grid_dimension,
            extent: self.grid_extent,
            resolution: self.grid_resolution,
            origin: self.grid_origin,
            site_cap: self.grid_site_cap,
        })?)
    }

    /// Build the variogram model.
    pub fn build_variogram(&self) -> Result<Variogram> {
        Ok(Variogram::fractional(
            self.variogram_scale,
            self.variogram_exponent,
        )?)
    }

    /// Build the configured spectral sampler on `grid`.
    pub fn build_sampler(&self, grid: &Grid) -> Result<Box<dyn SpectralSampler>> {
        Ok(match self.spectral_model {
            SpectralModel::BrownResnick => Box::new(BrownResnickSampler::new(
                grid,
                &self.build_variogram()?,
                self.alpha,
            )?),
            SpectralModel::Degenerate => {
                Box::new(DegenerateSampler::new(grid.len(), self.alpha)?)
            }
        })
    }
}
