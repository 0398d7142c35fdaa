//! Defaults for every quantitative check made by the acceptance suite and the
//! `verify`/`probe`/`cover`/`maximize`/`profiles` commands. A run overrides
//! individual entries through the `[tolerances]` table of its config file.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Möbius isometry and round-trip identities.
    pub geometry_identity: f64,
    /// `d(0, r) = artanh r`.
    pub distance_reference: f64,
    /// `μ(V_ρ) = π sinh²ρ` against quadrature.
    pub ball_area: f64,

    /// Hardy ratios must reach `hardy_floor − hardy_slack`.
    pub hardy_floor: f64,
    pub hardy_slack: f64,
    /// `u = 1 − r²` has Hardy ratio exactly 2.
    pub hardy_analytic: f64,
    pub hardy_min_family: usize,

    /// Relative Dirichlet-energy defect under shifts with `d(0, ζ) ≤ invariance_max_shift`.
    pub invariance_energy: f64,
    /// Relative `∫F(u) dμ` defect under the same shifts.
    pub invariance_f: f64,
    pub invariance_max_shift: f64,
    /// Minimum observed convergence order of the defects under refinement.
    pub invariance_min_order: f64,

    /// Energy and weighted sup-norm under radial dilation.
    pub dilation: f64,
    /// Moser weighted sup-norm against `(2π)^{-1/2}`.
    pub moser_sup: f64,

    /// `max/min` of the critical probe must stay below this.
    pub probe_critical_spread: f64,
    /// Required growth `value(k_max)/value(2)` of the supercritical probe.
    pub probe_supercritical_growth: f64,

    /// Calibration of the local constant uses `‖u‖²_W` up to this level.
    pub local_calibration_max: f64,
    pub local_test_min: f64,
    pub local_test_max: f64,
    pub local_test_fields: usize,

    pub cover_samples: usize,
    /// Allowed spread of the empirical multiplicity over the `ρ_max` sweep.
    pub cover_multiplicity_variation: u64,

    /// The defect at distance 8 must be this many times smaller than at distance 2.
    pub brezis_lieb_ratio: f64,

    pub ascent_constraint_drift: f64,
    pub ascent_residual: f64,
    /// Relative objective difference between centred and shifted seeds.
    pub ascent_shifted_seed: f64,
    /// Riesz gradient against central finite differences.
    pub riesz_fd: f64,

    /// Recentering recovers a planted centre within this geodesic distance.
    pub recenter_distance: f64,

    pub profile_energy_floor: f64,
    /// Relative energy error per recovered profile in the pair scenario.
    pub profile_energy: f64,
    /// Relative energy error in the single-profile scenario.
    pub profile_single_energy: f64,
    /// Slack on `Σ profile energies ≤ max input energy`.
    pub profile_energy_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            geometry_identity: 1e-12,
            distance_reference: 1e-10,
            ball_area: 1e-6,
            hardy_floor: 0.25,
            hardy_slack: 1e-3,
            hardy_analytic: 1e-4,
            hardy_min_family: 20,
            invariance_energy: 1e-3,
            invariance_f: 1e-2,
            invariance_max_shift: 2.0,
            invariance_min_order: 1.0,
            dilation: 1e-3,
            moser_sup: 1e-6,
            probe_critical_spread: 3.0,
            probe_supercritical_growth: 10.0,
            local_calibration_max: 0.2,
            local_test_min: 0.3,
            local_test_max: 0.9,
            local_test_fields: 100,
            cover_samples: 100_000,
            cover_multiplicity_variation: 1,
            brezis_lieb_ratio: 10.0,
            ascent_constraint_drift: 1e-8,
            ascent_residual: 1e-6,
            ascent_shifted_seed: 1e-3,
            riesz_fd: 1e-5,
            recenter_distance: 0.1,
            profile_energy_floor: 0.01,
            profile_energy: 0.05,
            profile_single_energy: 0.02,
            profile_energy_slack: 0.05,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override_keeps_defaults() {
        let t: Tolerances = serde_json::from_str(r#"{"hardy_slack": 0.01}"#).unwrap();
        assert_eq!(t.hardy_slack, 0.01);
        assert_eq!(t.ball_area, Tolerances::default().ball_area);
        assert!(serde_json::from_str::<Tolerances>(r#"{"bogus": 1}"#).is_err());
    }
}
