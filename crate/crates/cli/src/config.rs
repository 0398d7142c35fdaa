//! Run configuration: a TOML file with one table per command, every key
//! optional. Command-line flags are applied on top of the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tmdisk::{PolarGrid, RadialGrid, Tolerances};

use crate::error::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub grid: GridSection,
    pub verify: VerifySection,
    pub probe: ProbeSection,
    pub cover: CoverSection,
    pub maximize: MaximizeSection,
    pub profiles: ProfilesSection,
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; `TMDISK_THREADS` takes precedence.
    pub threads: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 7,
            out: PathBuf::from("tmdisk-out"),
            threads: None,
        }
    }
}

/// Unset entries fall back to the command's default grid.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_rho: Option<usize>,
    pub n_theta: Option<usize>,
    pub rho_max: Option<f64>,
}

impl GridSection {
    pub fn is_set(&self) -> bool {
        self.n_rho.is_some() || self.n_theta.is_some() || self.rho_max.is_some()
    }

    pub fn polar(&self, default: &PolarGrid) -> Result<Arc<PolarGrid>, CliError> {
        if !self.is_set() {
            return Ok(Arc::new(default.clone()));
        }
        let g = PolarGrid::uniform(
            self.n_rho.unwrap_or(default.n_rho()),
            self.n_theta.unwrap_or(default.n_theta),
            self.rho_max.unwrap_or(default.rho_max()),
        )?;
        Ok(Arc::new(g))
    }

    pub fn radial(&self, default_n: usize, default_rho_max: f64) -> Result<Arc<RadialGrid>, CliError> {
        let g = RadialGrid::uniform(self.n_rho.unwrap_or(default_n), self.rho_max.unwrap_or(default_rho_max))?;
        Ok(Arc::new(g))
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Repeat the invariance suite on a grid refined twice in each direction.
    pub refine: bool,
    /// Requested `‖u‖²_W` for the local-bound suite; replaces the test range.
    pub norm: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub p_over_4pi: f64,
    pub k_max: u64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            p_over_4pi: 1.0,
            k_max: 1024,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverSection {
    pub eps: f64,
    pub cover_factor: f64,
    pub lattice_step: f64,
    pub rho_max: f64,
    /// Coverage samples; defaults to `tolerances.cover_samples`.
    pub samples: Option<usize>,
}

impl Default for CoverSection {
    fn default() -> Self {
        CoverSection {
            eps: 0.5,
            cover_factor: 3.0,
            lattice_step: 0.5,
            rho_max: 4.0,
            samples: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximizeSection {
    pub t: f64,
    pub nonlinearity: String,
    pub step: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub recenter_every: usize,
    pub recenter_min_shift: f64,
    /// Field file to start from; the default seed is a unit-energy bump.
    pub seed_field: Option<PathBuf>,
}

impl Default for MaximizeSection {
    fn default() -> Self {
        MaximizeSection {
            t: 1.0,
            nonlinearity: "quartic".into(),
            step: 0.5,
            max_iters: 500,
            grad_tol: 1e-7,
            recenter_every: 10,
            recenter_min_shift: 0.01,
            seed_field: None,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilesSection {
    pub scenario: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Parses `NRxNT`, e.g. `512x256`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NRxNT, got {s:?}"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((n(a)?, n(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.run.seed, 7);
        assert_eq!(c.probe.k_max, 1024);
        assert_eq!(c.tolerances, Tolerances::default());
        assert!(!c.grid.is_set());
    }

    #[test]
    fn sections_override_and_unknown_keys_fail() {
        let c = RunConfig::parse("[cover]\neps = 0.25\n[tolerances]\nhardy_slack = 0.01\n").unwrap();
        assert_eq!(c.cover.eps, 0.25);
        assert_eq!(c.cover.cover_factor, 3.0);
        assert_eq!(c.tolerances.hardy_slack, 0.01);
        assert!(RunConfig::parse("[cover]\nepsilon = 0.25\n").is_err());
        assert!(RunConfig::parse("[nonsense]\n").is_err());
    }

    #[test]
    fn grid_strings() {
        assert_eq!(parse_grid("512x256"), Ok((512, 256)));
        assert_eq!(parse_grid("64X32"), Ok((64, 32)));
        assert!(parse_grid("512").is_err());
        assert!(parse_grid("ax3").is_err());
    }
}
