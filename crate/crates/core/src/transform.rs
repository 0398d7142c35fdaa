//! Möbius pullback of fields and the radial dilations `h_s`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, GridFunction, RadialField};
use crate::geom::{geodesic_distance, log_tanh, rho_from_log_r, DiskPoint, MobiusMap, MAX_LIFT_RHO};
use crate::grid::{PolarGrid, RadialGrid};

/// Values below this fraction of `max|u|` do not count as support.
pub const SUPPORT_REL_TOL: f64 = 1e-10;

/// The shifted support `V_{ρ_s + d(0,ζ)}` does not fit inside the output grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupportLeak {
    pub support_radius: f64,
    pub shift_distance: f64,
    pub rho_max: f64,
}

impl SupportLeak {
    pub fn excess(&self) -> f64 {
        self.support_radius + self.shift_distance - self.rho_max
    }
}

#[derive(Clone, Debug)]
pub struct Pullback {
    pub field: Field,
    pub leak: Option<SupportLeak>,
}

/// `u ∘ η_ζ` on the grid of `u`.
pub fn pullback(u: &Field, zeta: DiskPoint) -> Pullback {
    pullback_onto(u, zeta, u.grid().clone())
}

/// `u ∘ η_ζ` sampled on `out`. Every output node is mapped through `η_ζ`
/// and `u` is interpolated there (see [`Field::sample`]).
pub fn pullback_onto(u: &Field, zeta: DiskPoint, out: Arc<PolarGrid>) -> Pullback {
    let shift = geodesic_distance(DiskPoint::ORIGIN, zeta);
    let support = u.support_radius(SUPPORT_REL_TOL);
    let leak = if !u.is_zero() && support + shift > out.rho_max() + 1e-9 {
        Some(SupportLeak {
            support_radius: support,
            shift_distance: shift,
            rho_max: out.rho_max(),
        })
    } else {
        None
    };
    if zeta == DiskPoint::ORIGIN && (Arc::ptr_eq(u.grid(), &out) || **u.grid() == *out) {
        return Pullback { field: u.clone(), leak };
    }
    let m = MobiusMap::new(zeta);
    let field = Field::from_fn(out, |rho, theta| {
        let (r2, t2) = m.apply_polar(rho, theta);
        u.sample(r2, t2)
    })
    .expect("interpolated values of a finite field are finite");
    Pullback { field, leak }
}

/// `h_s u` with `(h_s u)(r) = s^{−1/2} u(r^s)`, carried on the transported
/// grid `ln r'_i = ln r_i / s`. On that grid energy and the weighted sup-norm
/// are preserved exactly; the output `ρ_max` moves accordingly.
pub fn dilate_radial(u: &RadialField, s: f64) -> Result<RadialField> {
    check_s(s)?;
    if s == 1.0 {
        return Ok(u.clone());
    }
    let nodes: Vec<f64> = u.grid().log_r().iter().map(|&lr| rho_from_log_r(lr / s)).collect();
    if nodes[nodes.len() - 1] > MAX_LIFT_RHO {
        return Err(Error::InvalidParameter(format!(
            "dilation s={s} pushes rho_max past {MAX_LIFT_RHO}"
        )));
    }
    let grid = RadialGrid::from_nodes(nodes)?;
    let c = s.powf(-0.5);
    RadialField::from_values(Arc::new(grid), u.values().iter().map(|v| c * v).collect())
}

/// `h_s u` resampled onto the grid of `u` (interpolation linear in `ln r`).
pub fn dilate_radial_onto(u: &RadialField, s: f64) -> Result<RadialField> {
    check_s(s)?;
    let c = s.powf(-0.5);
    RadialField::from_fn(u.grid().clone(), |rho| c * u.sample(rho_from_log_r(s * log_tanh(rho))))
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dilation parameter must be positive, got {s}"
        )));
    }
    Ok(())
}

/// `max_i |u(r_i)| / sqrt(ln(1/r_i))`; a lower bound for the supremum over `(0, 1)`.
pub fn weighted_sup_norm(u: &RadialField) -> f64 {
    u.values()
        .iter()
        .zip(u.grid().log_r())
        .map(|(v, lr)| v.abs() / (-lr).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(g: Arc<PolarGrid>, c: DiskPoint, radius: f64) -> Field {
        Field::from_point_fn(g, |z| {
            let d = geodesic_distance(z, c) / radius;
            if d < 1.0 {
                (1.0 - d * d).powi(4)
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let g = Arc::new(PolarGrid::uniform(64, 32, 6.0).unwrap());
        let u = bump(g, DiskPoint::ORIGIN, 1.0);
        let p = pullback(&u, DiskPoint::ORIGIN);
        assert_eq!(p.field, u);
        assert!(p.leak.is_none());
    }

    #[test]
    fn pullback_moves_bump_center_and_reports_leaks() {
        let g = Arc::new(PolarGrid::uniform(256, 128, 6.0).unwrap());
        let u = bump(g.clone(), DiskPoint::ORIGIN, 1.0);
        let zeta = DiskPoint::from_polar(1.0, 0.0).unwrap();
        let p = pullback(&u, zeta);
        assert!(p.leak.is_none());
        // (u ∘ η_ζ)(ζ) = u(0) = 1
        let (r, t) = zeta.to_polar();
        assert!((p.field.sample(r, t) - 1.0).abs() < 1e-3);
        let far = DiskPoint::from_polar(5.5, 0.0).unwrap();
        assert!(pullback(&u, far).leak.is_some());
    }

    #[test]
    fn dilation_preserves_energy_and_sup_norm_exactly() {
        let rg = Arc::new(RadialGrid::uniform(512, 12.0).unwrap());
        let u = RadialField::from_fn(rg, |rho| (-rho * rho).exp() * (1.0 + rho)).unwrap();
        for s in [0.25, 0.5, 2.0, 4.0] {
            let h = dilate_radial(&u, s).unwrap();
            let de = (h.dirichlet_energy() - u.dirichlet_energy()).abs() / u.dirichlet_energy();
            assert!(de < 1e-12, "s={s} {de}");
            assert!((weighted_sup_norm(&h) - weighted_sup_norm(&u)).abs() < 1e-12);
        }
        assert_eq!(dilate_radial(&u, 1.0).unwrap(), u);
        assert!(dilate_radial(&u, 0.0).is_err());
    }

    #[test]
    fn sup_norm_of_log_root_is_one() {
        let rg = Arc::new(RadialGrid::uniform(128, 6.0).unwrap());
        let u = RadialField::from_fn(rg, |rho| (-log_tanh(rho)).sqrt()).unwrap();
        assert!((weighted_sup_norm(&u) - 1.0).abs() < 1e-12);
    }
}
