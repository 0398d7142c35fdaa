//! Moser probes, constrained maximization and profile decomposition.

pub mod ascent;
pub mod moser;
pub mod profiles;
pub mod recenter;

pub use crate::poisson::riesz_gradient;
pub use ascent::{maximize, OptimizerConfig, OptimizerTrace, RecenterEvent, Status};
pub use moser::{blowup_probe, moser_field, moser_grid, ProbeEntry, ProbeReport, Verdict};
pub use profiles::{profile_extract, vanishing_check, ProfileOptions, ProfileReport, VanishingReport};
pub use recenter::{recenter, Recentered};
