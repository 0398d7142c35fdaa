//! Test fields: compact polynomial bumps, `sech`-power bumps, truncated
//! logarithms and seeded random superpositions.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Field, GridFunction, RadialField};
use crate::geom::{polar_distance, DiskPoint};
use crate::grid::{PolarGrid, RadialGrid};

/// Deterministic generator used by every randomized experiment.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(1 − (d/R)²)⁴` for `d < R`, else 0. A `C³` bump of geodesic radius `R`.
#[inline]
pub fn poly_bump_profile(d: f64, radius: f64) -> f64 {
    let x = d / radius;
    if x < 1.0 {
        let y = 1.0 - x * x;
        let y2 = y * y;
        y2 * y2
    } else {
        0.0
    }
}

/// Polynomial bump of geodesic radius `radius` centred at `center`.
pub fn poly_bump(grid: Arc<PolarGrid>, center: DiskPoint, radius: f64, amplitude: f64) -> Result<Field> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bump radius must be positive, got {radius}"
        )));
    }
    let (rc, tc) = center.to_polar();
    Field::from_fn(grid, |rho, th| {
        amplitude * poly_bump_profile(polar_distance(rho, th, rc, tc), radius)
    })
}

/// `sech^{2a}(d(z, c)) = (1 − |η_c(z)|²)^a`; `a = 1` is `1 − r²` moved to `c`.
pub fn sech_bump(grid: Arc<PolarGrid>, center: DiskPoint, a: f64, amplitude: f64) -> Result<Field> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("sech power must be positive, got {a}")));
    }
    let (rc, tc) = center.to_polar();
    Field::from_fn(grid, |rho, th| {
        let d = polar_distance(rho, th, rc, tc);
        amplitude * (1.0 / d.cosh()).powf(2.0 * a)
    })
}

/// `u / sqrt(E(u))`.
pub fn unit_energy(u: &Field) -> Result<Field> {
    let e = u.dirichlet_energy();
    if !(e > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(u.scale(1.0 / e.sqrt()))
}

/// `√t · u / ‖∇u‖₂`.
pub fn with_energy(u: &Field, t: f64) -> Result<Field> {
    Ok(unit_energy(u)?.scale(t.sqrt()))
}

/// `log(1/max(r, e^{−level}))`, energy `2π/level` in the continuum.
pub fn truncated_log(grid: Arc<RadialGrid>, level: f64) -> Result<RadialField> {
    if !(level > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log level must be positive, got {level}"
        )));
    }
    RadialField::from_fn(grid, |rho| -crate::geom::log_tanh(rho).max(-level))
}

/// Geodesic radius of the kink of [`truncated_log`].
pub fn truncated_log_kink(level: f64) -> f64 {
    (-level).exp().atanh()
}

/// A smooth random field: one to four polynomial bumps with centres in
/// `V_{region}(0)`, radii in `[0.6, 1.5]` and amplitudes of either sign.
pub fn random_smooth_field<R: Rng>(grid: Arc<PolarGrid>, rng: &mut R, region: f64) -> Result<Field> {
    let n = rng.gen_range(1..=4);
    let mut parts = Vec::with_capacity(n);
    for _ in 0..n {
        // uniform in hyperbolic area
        let u: f64 = rng.gen();
        let rho = (region.sinh() * u.sqrt()).asinh();
        let theta = rng.gen_range(0.0..TAU);
        let radius = rng.gen_range(0.6..1.5);
        let amp = rng.gen_range(0.3..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        parts.push((rho, theta, radius, amp));
    }
    Field::from_fn(grid, |rho, th| {
        parts
            .iter()
            .map(|&(rc, tc, rad, amp)| amp * poly_bump_profile(polar_distance(rho, th, rc, tc), rad))
            .sum()
    })
}
