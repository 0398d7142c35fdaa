//! Moser functions and the exponent probe along them.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::functionals::tm_invariant;
use crate::geom::log_tanh;
use crate::grid::{RadialGrid, DEFAULT_RHO_MAX};

/// Growth factor separating a bounded probe from a growing one.
pub const GROWTH_FACTOR: f64 = 10.0;

/// Geodesic radius of the kink `r = 1/k`.
pub fn moser_kink(k: f64) -> f64 {
    (1.0 / k).atanh()
}

/// `m_k(r)`: `√(ln k / 2π)` for `r ≤ 1/k`, `ln(1/r)/√(2π ln k)` outside.
pub fn moser_value(k: f64, rho: f64) -> f64 {
    let lk = k.ln();
    let lr = -log_tanh(rho);
    if lr >= lk {
        (lk / TAU).sqrt()
    } else {
        lr / (TAU * lk).sqrt()
    }
}

/// `k = 2, 4, …, k_max` (powers of two).
pub fn dyadic_ks(k_max: u64) -> Vec<u64> {
    let mut ks = Vec::new();
    let mut k = 2u64;
    while k <= k_max {
        ks.push(k);
        k = match k.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }
    ks
}

/// Graded radial grid resolving every kink of `m_k`, `k ∈ ks`: the first node
/// sits a factor 4 inside the smallest kink, steps grow by 3% up to 0.02, and
/// each kink is a node.
pub fn moser_grid(ks: &[u64]) -> Result<RadialGrid> {
    moser_grid_with(ks, DEFAULT_RHO_MAX)
}

pub fn moser_grid_with(ks: &[u64], rho_max: f64) -> Result<RadialGrid> {
    if ks.iter().any(|&k| k < 2) {
        return Err(Error::InvalidParameter("Moser index k must be at least 2".into()));
    }
    let k_max = ks.iter().copied().max().unwrap_or(2) as f64;
    let first = (0.25 * moser_kink(k_max)).min(1e-3);
    let kinks: Vec<f64> = ks.iter().map(|&k| moser_kink(k as f64)).collect();
    RadialGrid::graded(first, 1.03, 0.02, rho_max)?.with_breakpoints(&kinks)
}

/// `m_k` on `grid`. Energy is 1 up to truncation when the kink is a node.
pub fn moser_field(grid: &Arc<RadialGrid>, k: u64) -> Result<RadialField> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "Moser index must be at least 2, got {k}"
        )));
    }
    let kink = moser_kink(k as f64);
    if kink < grid.finest() {
        return Err(Error::Unresolved {
            k,
            kink_rho: kink,
            finest: grid.finest(),
        });
    }
    RadialField::from_fn(grid.clone(), |rho| moser_value(k as f64, rho))
}

/// Plateau height `√(ln k / 2π)`.
pub fn moser_plateau(k: u64) -> f64 {
    ((k as f64).ln() / TAU).sqrt()
}

/// Continuum contribution of the plateau to `∫(e^{p m_k²} − 1) dμ`:
/// `(k^{p/2π} − 1) π / (k² − 1)`.
pub fn plateau_contribution(p: f64, k: u64) -> f64 {
    let k = k as f64;
    let lk = k.ln();
    (p * lk / TAU).exp_m1() * PI / (k * k - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeEntry {
    pub k: u64,
    pub value: f64,
    pub saturated: bool,
    pub tail_warning: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Growing,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub p: f64,
    pub entries: Vec<ProbeEntry>,
    /// `max / min` of the values over the list.
    pub spread: f64,
    /// `value(k_last) / value(k_first)`.
    pub growth: f64,
    pub any_saturated: bool,
    pub verdict: Verdict,
}

/// `∫(e^{p m_k²} − 1) dμ` for each `k` on a shared graded grid.
pub fn blowup_probe(p: f64, ks: &[u64]) -> Result<ProbeReport> {
    let grid = Arc::new(moser_grid(ks)?);
    blowup_probe_on(&grid, p, ks)
}

pub fn blowup_probe_on(grid: &Arc<RadialGrid>, p: f64, ks: &[u64]) -> Result<ProbeReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p must be positive, got {p}")));
    }
    if ks.is_empty() {
        return Err(Error::InvalidParameter("empty k list".into()));
    }
    let mut entries = Vec::with_capacity(ks.len());
    for &k in ks {
        let m = moser_field(grid, k)?;
        let r = tm_invariant(&m, p)?;
        entries.push(ProbeEntry {
            k,
            value: r.value,
            saturated: r.saturated,
            tail_warning: r.tail_warning,
        });
    }
    Ok(summarize(p, entries))
}

/// The verdict is `Growing` iff `max/min ≥ 10` and the maximum is the last entry.
pub fn summarize(p: f64, entries: Vec<ProbeEntry>) -> ProbeReport {
    let max = entries.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    let min = entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let spread = max / min;
    let growth = entries[entries.len() - 1].value / entries[0].value;
    let last_is_max = entries[entries.len() - 1].value >= max;
    let verdict = if spread >= GROWTH_FACTOR && last_is_max {
        Verdict::Growing
    } else {
        Verdict::Bounded
    };
    ProbeReport {
        p,
        any_saturated: entries.iter().any(|e| e.saturated),
        entries,
        spread,
        growth,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridFunction;
    use crate::transform::weighted_sup_norm;

    #[test]
    fn energy_is_one() {
        let ks = [4, 16, 64, 256];
        let g = Arc::new(moser_grid(&ks).unwrap());
        for k in ks {
            let e = moser_field(&g, k).unwrap().dirichlet_energy();
            assert!((e - 1.0).abs() < 1e-3, "k={k} E={e}");
        }
    }

    #[test]
    fn plateau_and_weighted_sup() {
        let g = Arc::new(moser_grid(&[64]).unwrap());
        let m = moser_field(&g, 64).unwrap();
        let kink = moser_kink(64.0);
        let i = g.nodes().iter().position(|&x| x == kink).unwrap();
        assert!((m.values()[i] - moser_plateau(64)).abs() < 1e-14);
        assert!((weighted_sup_norm(&m) - TAU.powf(-0.5)).abs() < 1e-6);
    }

    #[test]
    fn rejects_unresolved_kink() {
        let g = Arc::new(RadialGrid::uniform(512, 12.0).unwrap());
        assert!(moser_field(&g, 16).is_ok());
        assert!(matches!(moser_field(&g, 1024), Err(Error::Unresolved { k: 1024, .. })));
    }

    #[test]
    fn plateau_contribution_matches_quadrature_inside_kink() {
        // the integrand is constant on the plateau and the cells are exact annuli
        let k = 32;
        let g = Arc::new(moser_grid(&[k]).unwrap());
        let m = moser_field(&g, k).unwrap();
        let p = 4.0 * PI;
        let kink = moser_kink(k as f64);
        let w = g.dmu_weights();
        let inside: f64 = g
            .nodes()
            .iter()
            .zip(m.values())
            .zip(w)
            .filter(|((&r, _), _)| r < kink)
            .map(|((_, &v), &wi)| TAU * wi * (p * v * v).exp_m1())
            .sum();
        // node cells below the kink cover V_{ρ*} with ρ* the flux point below it
        let i = g.nodes().iter().position(|&x| x == kink).unwrap();
        let upper = {
            let a = g.nodes()[i - 1].tanh();
            let b = kink.tanh();
            ((b * b - a * a) / (2.0 * (b / a).ln())).sqrt().atanh()
        };
        let exact = (p * moser_plateau(k).powi(2)).exp_m1() * PI * upper.sinh().powi(2);
        assert!((inside - exact).abs() < 1e-9 * exact, "{inside} {exact}");
        assert!(plateau_contribution(p, k) > 0.9 * PI);
    }

    #[test]
    fn dyadic_list() {
        assert_eq!(dyadic_ks(16), vec![2, 4, 8, 16]);
        assert_eq!(dyadic_ks(1), Vec::<u64>::new());
    }

    #[test]
    fn verdict_rule() {
        let mk = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(i, &value)| ProbeEntry {
                    k: 2 << i,
                    value,
                    saturated: false,
                    tail_warning: false,
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(summarize(1.0, mk(&[1.0, 2.0, 3.0])).verdict, Verdict::Bounded);
        assert_eq!(summarize(1.0, mk(&[1.0, 5.0, 12.0])).verdict, Verdict::Growing);
        assert_eq!(summarize(1.0, mk(&[1.0, 12.0, 11.0])).verdict, Verdict::Bounded);
    }
}
