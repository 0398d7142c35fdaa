//! Profile extraction from a sequence of fields, the vanishing check, and
//! planted test sequences with known decompositions.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{poly_bump, with_energy};
use crate::field::{Field, GridFunction, Measure};
use crate::functionals::{f_integral, Nonlinearity};
use crate::geom::{geodesic_distance, DiskPoint};
use crate::grid::PolarGrid;
use crate::transform::pullback;

use super::recenter::{concentration, recenter_refined};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileOptions {
    /// The averaged recentered tail is kept on `ρ ≤ mask_inner` and tapered
    /// to zero at `mask_outer`.
    pub mask_inner: f64,
    pub mask_outer: f64,
    pub max_profiles: usize,
    /// A profile may exceed its predecessor's energy by this fraction before
    /// the extraction is declared non-convergent.
    pub energy_slack: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            mask_inner: 1.5,
            mask_outer: 2.0,
            max_profiles: 6,
            energy_slack: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionStatus {
    /// The last candidate profile fell below the energy floor.
    Exhausted,
    ProfileLimit,
    /// A profile carried more energy than its predecessor.
    NonConvergent,
}

#[derive(Clone, Debug)]
pub struct ProfileReport {
    /// Centred profiles `w⁽ⁿ⁾`.
    pub profiles: Vec<Field>,
    pub profile_energies: Vec<f64>,
    /// `centers_per_step[n][k]`: the shift `ζ_k⁽ⁿ⁾` placing profile `n` in field `k`.
    pub centers_per_step: Vec<Vec<DiskPoint>>,
    pub energy_sum: f64,
    pub max_input_energy: f64,
    /// `‖u_k − Σ_n w⁽ⁿ⁾ ∘ η_{ζ_k⁽ⁿ⁾}‖_{L²(dμ)}` per field.
    pub residual_dmu_norms: Vec<f64>,
    /// Energy of the candidate that stopped the extraction.
    pub rejected_energy: f64,
    pub ambiguous_recenterings: usize,
    pub status: ExtractionStatus,
}

impl ProfileReport {
    /// `Σ E(w⁽ⁿ⁾) ≤ (1 + slack) · max_k E(u_k)`.
    pub fn energy_inequality_holds(&self, slack: f64) -> bool {
        self.energy_sum <= (1.0 + slack) * self.max_input_energy + 1e-15
    }

    /// Geodesic distances `d(ζ_k⁽ᵃ⁾, ζ_k⁽ᵇ⁾)` along the sequence.
    pub fn separations(&self, a: usize, b: usize) -> Vec<f64> {
        match (self.centers_per_step.get(a), self.centers_per_step.get(b)) {
            (Some(ca), Some(cb)) => ca.iter().zip(cb).map(|(&x, &y)| geodesic_distance(x, y)).collect(),
            _ => Vec::new(),
        }
    }
}

fn mask(rho: f64, inner: f64, outer: f64) -> f64 {
    if rho <= inner {
        1.0
    } else if rho >= outer {
        0.0
    } else {
        let s = (rho - inner) / (outer - inner);
        (0.5 * PI * s).cos().powi(2)
    }
}

fn l2_dmu(u: &Field) -> f64 {
    u.integrate(Measure::Hyperbolic, |v| v * v).value.sqrt()
}

pub fn profile_extract(seq: &[Field], energy_floor: f64) -> Result<ProfileReport> {
    profile_extract_with(seq, energy_floor, &ProfileOptions::default())
}

/// Repeatedly recenters every remainder at its mass peak, averages the last
/// third of the recentered remainders on a ball, and subtracts the shifted
/// average from each remainder.
pub fn profile_extract_with(seq: &[Field], energy_floor: f64, opts: &ProfileOptions) -> Result<ProfileReport> {
    if seq.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "profile extraction needs at least 3 fields, got {}",
            seq.len()
        )));
    }
    if seq.iter().any(|u| !u.same_grid(&seq[0])) {
        return Err(Error::GridMismatch);
    }
    if !(energy_floor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "energy floor must be positive, got {energy_floor}"
        )));
    }
    if !(opts.mask_inner > 0.0 && opts.mask_outer > opts.mask_inner) {
        return Err(Error::InvalidParameter(
            "mask radii must satisfy 0 < inner < outer".into(),
        ));
    }
    let grid = seq[0].grid().clone();
    let n = seq.len();
    let tail_start = n - n.div_ceil(3);
    let max_input_energy = seq.iter().map(|u| u.dirichlet_energy()).fold(0.0, f64::max);

    let mut rem: Vec<Field> = seq.to_vec();
    let mut report = ProfileReport {
        profiles: Vec::new(),
        profile_energies: Vec::new(),
        centers_per_step: Vec::new(),
        energy_sum: 0.0,
        max_input_energy,
        residual_dmu_norms: Vec::new(),
        rejected_energy: 0.0,
        ambiguous_recenterings: 0,
        status: ExtractionStatus::ProfileLimit,
    };
    for _ in 0..opts.max_profiles {
        let centred: Vec<(Field, DiskPoint, bool)> = rem
            .par_iter()
            .map(|r| {
                if r.is_zero() {
                    Ok((r.clone(), DiskPoint::ORIGIN, false))
                } else {
                    recenter_refined(r).map(|x| (x.field, x.zeta, x.rival.is_some()))
                }
            })
            .collect::<Result<_>>()?;
        let mut acc = vec![0.0; grid.len()];
        for (f, _, _) in &centred[tail_start..] {
            for (a, v) in acc.iter_mut().zip(f.values()) {
                *a += v;
            }
        }
        let count = (n - tail_start) as f64;
        let nt = grid.n_theta;
        for (idx, a) in acc.iter_mut().enumerate() {
            *a *= mask(grid.rho(idx / nt), opts.mask_inner, opts.mask_outer) / count;
        }
        let w = Field::from_values(grid.clone(), acc)?;
        let e = w.dirichlet_energy();
        if e < energy_floor {
            report.rejected_energy = e;
            report.status = ExtractionStatus::Exhausted;
            break;
        }
        if let Some(&prev) = report.profile_energies.last() {
            if e > prev * (1.0 + opts.energy_slack) {
                report.rejected_energy = e;
                report.status = ExtractionStatus::NonConvergent;
                break;
            }
        }
        report.ambiguous_recenterings += centred.iter().filter(|c| c.2).count();
        let zetas: Vec<DiskPoint> = centred.iter().map(|c| c.1).collect();
        rem = rem
            .par_iter()
            .zip(&zetas)
            .map(|(r, &z)| r.sub(&pullback(&w, z).field))
            .collect::<Result<_>>()?;
        report.profile_energies.push(e);
        report.profiles.push(w);
        report.centers_per_step.push(zetas);
    }
    report.energy_sum = report.profile_energies.iter().sum();
    report.residual_dmu_norms = rem.par_iter().map(l2_dmu).collect();
    Ok(report)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VanishingEntry {
    pub energy: f64,
    /// Largest mass of `u² dμ` in a unit geodesic ball.
    pub concentration: f64,
    pub f_integral: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VanishingReport {
    pub entries: Vec<VanishingEntry>,
    pub concentration_ratio: f64,
    pub f_ratio: f64,
    pub concentration_decreasing: bool,
    pub f_decreasing: bool,
    /// Decay of the concentration is accompanied by decay of `∫F(u) dμ`.
    pub consistent: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn vanishing_check(seq: &[Field], f: &Nonlinearity) -> Result<VanishingReport> {
    if seq.is_empty() {
        return Err(Error::InvalidParameter("empty sequence".into()));
    }
    let entries: Vec<VanishingEntry> = seq
        .iter()
        .map(|u| VanishingEntry {
            energy: u.dirichlet_energy(),
            concentration: concentration(u),
            f_integral: f_integral(u, f).value,
        })
        .collect();
    let c: Vec<f64> = entries.iter().map(|e| e.concentration).collect();
    let fv: Vec<f64> = entries.iter().map(|e| e.f_integral).collect();
    let ratio = |v: &[f64]| v[v.len() - 1] / v[0];
    let concentration_decreasing = strictly_decreasing(&c);
    let f_decreasing = strictly_decreasing(&fv);
    Ok(VanishingReport {
        concentration_ratio: ratio(&c),
        f_ratio: ratio(&fv),
        concentration_decreasing,
        f_decreasing,
        consistent: !concentration_decreasing || f_decreasing,
        entries,
    })
}

/// A sequence with known profiles and shifts.
#[derive(Clone, Debug)]
pub struct PlantedSequence {
    pub fields: Vec<Field>,
    pub energies: Vec<f64>,
    /// `centers[n][k]`
    pub centers: Vec<Vec<DiskPoint>>,
}

/// Geodesic radius of the planted bumps.
pub const PLANTED_RADIUS: f64 = 1.0;

/// Centred profile: a bump of radius [`PLANTED_RADIUS`] with the given energy.
pub fn planted_profile(grid: &Arc<PolarGrid>, energy: f64) -> Result<Field> {
    with_energy(
        &poly_bump(grid.clone(), DiskPoint::ORIGIN, PLANTED_RADIUS, 1.0)?,
        energy,
    )
}

/// `len` copies of `w ∘ η_c` for a centred profile `w` of the given energy.
pub fn planted_single(grid: &Arc<PolarGrid>, len: usize, center: DiskPoint, energy: f64) -> Result<PlantedSequence> {
    let u = pullback(&planted_profile(grid, energy)?, center).field;
    Ok(PlantedSequence {
        fields: vec![u; len],
        energies: vec![energy],
        centers: vec![vec![center; len]],
    })
}

/// Two profiles of energies `energies` placed at `(s_k/2, π)` and
/// `(s_k/2, 0)`, plus a vanishing remainder of energy `remainder / (k+1)²`
/// away from both.
pub fn planted_pair(
    grid: &Arc<PolarGrid>,
    separations: &[f64],
    energies: [f64; 2],
    remainder: f64,
) -> Result<PlantedSequence> {
    let w = [planted_profile(grid, energies[0])?, planted_profile(grid, energies[1])?];
    let spot = DiskPoint::from_polar(1.2, 0.5 * PI)?;
    let v = poly_bump(grid.clone(), spot, 0.8, 1.0)?;
    let mut fields = Vec::with_capacity(separations.len());
    let mut centers = vec![Vec::new(), Vec::new()];
    for (k, &s) in separations.iter().enumerate() {
        let a = DiskPoint::from_polar(0.5 * s, PI)?;
        let b = DiskPoint::from_polar(0.5 * s, 0.0)?;
        let mut u = pullback(&w[0], a).field.add(&pullback(&w[1], b).field)?;
        if remainder > 0.0 {
            u = u.add(&with_energy(&v, remainder / ((k + 1) * (k + 1)) as f64)?)?;
        }
        fields.push(u);
        centers[0].push(a);
        centers[1].push(b);
    }
    Ok(PlantedSequence {
        fields,
        energies: energies.to_vec(),
        centers,
    })
}

/// `k` bumps of total energy 1 evenly spaced on the circle of radius `ring`.
pub fn spreading_field(grid: &Arc<PolarGrid>, k: usize, ring: f64) -> Result<Field> {
    let mut u = Field::zeros(grid.clone());
    for j in 0..k {
        let c = DiskPoint::from_polar(ring, TAU * j as f64 / k as f64)?;
        u = u.add(&poly_bump(grid.clone(), c, PLANTED_RADIUS, 1.0)?)?;
    }
    with_energy(&u, 1.0)
}
