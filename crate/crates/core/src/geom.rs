//! Closed-form geometry of the Poincaré disk.
//!
//! **Metric normalization.** Everything in this crate uses the metric
//! `g = δ / (1 − |x|²)²`, *without* the factor 4 that is common in the
//! literature. Under this convention
//!
//! * `d(0, r) = artanh r`, so hyperbolic polar coordinates are `r = tanh ρ`;
//! * the Riemannian measure is `dμ = dx / (1 − |x|²)² = ½ sinh(2ρ) dρ dθ`;
//! * geodesic balls have area `μ(V_ρ) = π sinh²ρ` and circles have
//!   circumference `π sinh(2ρ)`;
//! * the Hardy constant `∫|∇u|² dx ≥ c ∫u² dμ` is `c = 1/4`.
//!
//! The file tag `paper-metric-no-4` written by [`crate::io`] refers to this
//! convention.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances are reported saturated at this value.
pub const DISTANCE_CAP: f64 = 50.0;

/// Largest hyperbolic radius accepted by [`DiskPoint::from_polar`].
/// `tanh(19)` already rounds to `1.0` in double precision.
pub const MAX_LIFT_RHO: f64 = 18.0;

/// A point of the open unit disk, `z = re + i·im` with `|z| < 1`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct DiskPoint {
    re: f64,
    im: f64,
}

impl fmt::Debug for DiskPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiskPoint({}, {})", self.re, self.im)
    }
}

impl TryFrom<[f64; 2]> for DiskPoint {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        DiskPoint::new(v[0], v[1])
    }
}

impl From<DiskPoint> for [f64; 2] {
    fn from(p: DiskPoint) -> Self {
        [p.re, p.im]
    }
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(re.is_finite() && im.is_finite()) || re * re + im * im >= 1.0 {
            return Err(Error::OutsideDisk { re, im });
        }
        Ok(DiskPoint { re, im })
    }

    /// Lift hyperbolic polar coordinates `(ρ, θ)` to the disk: `r = tanh ρ`.
    pub fn from_polar(rho: f64, theta: f64) -> Result<Self> {
        Self::from_polar_capped(rho, theta, MAX_LIFT_RHO)
    }

    pub fn from_polar_capped(rho: f64, theta: f64, rho_max: f64) -> Result<Self> {
        if !(rho.is_finite() && theta.is_finite()) || rho < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "polar lift needs rho >= 0 and finite theta, got ({rho}, {theta})"
            )));
        }
        if rho > rho_max {
            return Err(Error::RhoTooLarge { rho, max: rho_max });
        }
        let r = rho.tanh();
        DiskPoint::new(r * theta.cos(), r * theta.sin())
    }

    /// Hyperbolic polar coordinates `(ρ, θ)` with `θ ∈ [0, 2π)`.
    pub fn to_polar(self) -> (f64, f64) {
        (self.rho(), self.theta())
    }

    pub fn re(self) -> f64 {
        self.re
    }

    pub fn im(self) -> f64 {
        self.im
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Hyperbolic distance to the origin, `artanh |z|`.
    pub fn rho(self) -> f64 {
        self.abs().atanh()
    }

    pub fn theta(self) -> f64 {
        let t = self.im.atan2(self.re);
        if t < 0.0 {
            t + TAU
        } else {
            t
        }
    }

    pub fn neg(self) -> DiskPoint {
        DiskPoint {
            re: -self.re,
            im: -self.im,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// Builds a point from a complex number that is mathematically inside the
    /// disk but may have been rounded onto (or past) the unit circle.
    pub(crate) fn from_complex_clamped(z: Complex64) -> DiskPoint {
        let n = z.norm();
        if n < 1.0 {
            return DiskPoint { re: z.re, im: z.im };
        }
        let s = (1.0 - f64::EPSILON) / n;
        DiskPoint {
            re: z.re * s,
            im: z.im * s,
        }
    }
}

/// Stable `ln(tanh ρ)`, accurate also where `tanh ρ` rounds to 1.
pub fn log_tanh(rho: f64) -> f64 {
    if rho < 0.5 {
        rho.tanh().ln()
    } else {
        let e = (-2.0 * rho).exp();
        (-e).ln_1p() - e.ln_1p()
    }
}

/// Inverse of [`log_tanh`]: the hyperbolic radius whose Euclidean radius is
/// `exp(log_r)`, for `log_r < 0`.
pub fn rho_from_log_r(log_r: f64) -> f64 {
    if log_r < -0.7 {
        log_r.exp().atanh()
    } else {
        // 1 - r = -expm1(log_r); artanh r = ½ ln((1 + r)/(1 - r))
        let one_minus_r = -log_r.exp_m1();
        0.5 * ((2.0 - one_minus_r) / one_minus_r).ln()
    }
}

/// `artanh` of a modulus `m = |w|` given also `s = 1 − m²`, which is often
/// known far more accurately than `m` itself near the boundary.
pub(crate) fn artanh_from_parts(m: f64, s: f64) -> f64 {
    if m < 0.5 {
        m.atanh()
    } else {
        0.5 * ((1.0 + m) * (1.0 + m) / s).ln()
    }
}

/// Möbius shift `η_ζ(z) = (z − ζ) / (1 − ζ̄ z)`.
///
/// The family has no rotation factor. `η_ζ` sends `ζ` to the origin and the
/// origin to `−ζ`; its inverse is `η_{−ζ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub center: DiskPoint,
}

impl MobiusMap {
    pub fn new(center: DiskPoint) -> Self {
        MobiusMap { center }
    }

    pub fn identity() -> Self {
        MobiusMap {
            center: DiskPoint::ORIGIN,
        }
    }

    pub fn inverse(self) -> MobiusMap {
        MobiusMap {
            center: self.center.neg(),
        }
    }

    pub fn apply(self, z: DiskPoint) -> DiskPoint {
        let zeta = self.center.to_complex();
        let zc = z.to_complex();
        let w = (zc - zeta) / (Complex64::new(1.0, 0.0) - zeta.conj() * zc);
        DiskPoint::from_complex_clamped(w)
    }

    /// Image of the point with hyperbolic polar coordinates `(ρ, θ)`, returned
    /// in the same coordinates. Uses `1 − |η(z)|² = (1−|ζ|²)(1−|z|²)/|1−ζ̄z|²`
    /// with `1 − |z|² = sech²ρ` so that large radii keep full precision.
    pub fn apply_polar(self, rho: f64, theta: f64) -> (f64, f64) {
        let r = rho.tanh();
        let z = Complex64::from_polar(r, theta);
        let zeta = self.center.to_complex();
        let den = Complex64::new(1.0, 0.0) - zeta.conj() * z;
        let w = (z - zeta) / den;
        let sech = 1.0 / rho.cosh();
        let s = (1.0 - self.center.norm_sqr()) * sech * sech / den.norm_sqr();
        let m = w.norm();
        let rho_w = artanh_from_parts(m.min(1.0), s);
        let mut th = w.im.atan2(w.re);
        if th < 0.0 {
            th += TAU;
        }
        (rho_w, th)
    }

    /// `|det Dη_ζ(z)| = ((1 − |ζ|²) / |1 − ζ̄z|²)²` (the map is conformal).
    pub fn jacobian_det(self, z: DiskPoint) -> f64 {
        let zeta = self.center.to_complex();
        let den = (Complex64::new(1.0, 0.0) - zeta.conj() * z.to_complex()).norm_sqr();
        let k = (1.0 - self.center.norm_sqr()) / den;
        k * k
    }
}

/// Geodesic distance with an explicit saturation flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeodesicDistance {
    pub value: f64,
    pub saturated: bool,
}

/// `d(a, b) = artanh |η_a(b)|`, saturated at [`DISTANCE_CAP`].
pub fn geodesic_distance_flagged(a: DiskPoint, b: DiskPoint) -> GeodesicDistance {
    let ac = a.to_complex();
    let bc = b.to_complex();
    let den = Complex64::new(1.0, 0.0) - ac.conj() * bc;
    let num = bc - ac;
    let den_sq = den.norm_sqr();
    let m = (num.norm_sqr() / den_sq).sqrt();
    let s = (1.0 - a.norm_sqr()) * (1.0 - b.norm_sqr()) / den_sq;
    let d = if s <= 0.0 {
        f64::INFINITY
    } else {
        artanh_from_parts(m.min(1.0), s)
    };
    if d.is_finite() && d < DISTANCE_CAP {
        GeodesicDistance {
            value: d,
            saturated: false,
        }
    } else {
        GeodesicDistance {
            value: DISTANCE_CAP,
            saturated: true,
        }
    }
}

pub fn geodesic_distance(a: DiskPoint, b: DiskPoint) -> f64 {
    geodesic_distance_flagged(a, b).value
}

/// Hyperbolic distance between points given in hyperbolic polar coordinates,
/// via the law of cosines for curvature −4.
pub fn polar_distance(rho_a: f64, theta_a: f64, rho_b: f64, theta_b: f64) -> f64 {
    // cosh 2d = cosh 2a cosh 2b − sinh 2a sinh 2b cos Δθ, in the
    // cancellation-free form sinh²d = sinh²(a−b) + sinh 2a sinh 2b sin²(Δθ/2).
    let half = ((theta_a - theta_b) * 0.5).sin();
    let sab = (rho_a - rho_b).sinh();
    let x = sab * sab + (2.0 * rho_a).sinh() * (2.0 * rho_b).sinh() * half * half;
    x.sqrt().asinh()
}

/// Density of `dμ` with respect to Lebesgue measure, `1/(1 − |z|²)²`.
pub fn measure_weight(z: DiskPoint) -> f64 {
    let s = 1.0 - z.norm_sqr();
    1.0 / (s * s)
}

/// `μ(V_ρ) = π sinh²ρ`.
pub fn ball_area(rho: f64) -> f64 {
    let s = rho.sinh();
    PI * s * s
}

/// Length of the geodesic circle of radius `ρ`, `π sinh(2ρ)`.
pub fn circle_length(rho: f64) -> f64 {
    PI * (2.0 * rho).sinh()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(re, im).unwrap()
    }

    #[test]
    fn rejects_points_on_or_outside_circle() {
        assert!(DiskPoint::new(1.0, 0.0).is_err());
        assert!(DiskPoint::new(0.8, 0.6).is_err());
        assert!(DiskPoint::new(f64::NAN, 0.0).is_err());
        assert!(DiskPoint::new(0.6, 0.6).is_ok());
    }

    #[test]
    fn mobius_examples() {
        let z = p(0.3, 0.4);
        assert_eq!(MobiusMap::identity().apply(z), z);
        let m = MobiusMap::new(p(0.5, 0.0));
        let w = m.apply(p(0.5, 0.0));
        assert!(w.abs() < 1e-16);
        let w = m.apply(DiskPoint::ORIGIN);
        assert!((w.re() + 0.5).abs() < 1e-16 && w.im().abs() < 1e-16);
    }

    #[test]
    fn inverse_round_trip() {
        let m = MobiusMap::new(p(0.5, 0.0));
        assert_eq!(MobiusMap::identity().inverse().center, DiskPoint::ORIGIN);
        let z = p(0.2, -0.1);
        let back = m.inverse().apply(m.apply(z));
        assert!((back.re() - 0.2).abs() < 1e-15 && (back.im() + 0.1).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let a = p(0.1, 0.2);
        assert_eq!(geodesic_distance(a, a), 0.0);
        let d = geodesic_distance(DiskPoint::ORIGIN, p(0.5, 0.0));
        assert!((d - 0.5f64.atanh()).abs() < 1e-15);
        assert!((d - 0.549306).abs() < 1e-6);
    }

    #[test]
    fn distance_saturates_near_boundary() {
        let a = DiskPoint::from_polar(17.0, 0.0).unwrap();
        let b = DiskPoint::from_polar(17.0, PI).unwrap();
        let d = geodesic_distance_flagged(a, b);
        assert!(!d.saturated);
        assert!((d.value - 34.0).abs() < 0.1);
        let far = DiskPoint::from_complex_clamped(Complex64::new(1.0, 0.0));
        let d = geodesic_distance_flagged(far, far.neg());
        assert!(d.value <= DISTANCE_CAP);
    }

    #[test]
    fn polar_lift_examples() {
        assert_eq!(DiskPoint::from_polar(0.0, 1.3).unwrap(), DiskPoint::ORIGIN);
        let z = DiskPoint::from_polar(0.5f64.atanh(), 0.0).unwrap();
        assert!((z.re() - 0.5).abs() < 1e-15 && z.im() == 0.0);
        assert!(matches!(
            DiskPoint::from_polar(MAX_LIFT_RHO + 1.0, 0.0),
            Err(Error::RhoTooLarge { .. })
        ));
        let (rho, th) = DiskPoint::from_polar(1.25, 2.0).unwrap().to_polar();
        assert!((rho - 1.25).abs() < 1e-14 && (th - 2.0).abs() < 1e-14);
    }

    #[test]
    fn measure_weight_examples() {
        assert_eq!(measure_weight(DiskPoint::ORIGIN), 1.0);
        let h = 0.5f64.sqrt();
        let z = p(h * 0.6, h * 0.8);
        assert!((measure_weight(z) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn log_tanh_and_inverse_agree() {
        for &rho in &[1e-8, 0.01, 0.3, 0.7, 2.0, 8.0, 12.0, 17.5] {
            let l = log_tanh(rho);
            assert!((rho_from_log_r(l) - rho).abs() <= 1e-12 * rho.max(1.0), "{rho}");
        }
        // where tanh rounds to 1 the naive formula would return 0
        assert!(log_tanh(20.0) < 0.0);
    }

    #[test]
    fn polar_distance_matches_complex_formula() {
        let a = DiskPoint::from_polar(1.3, 0.4).unwrap();
        let b = DiskPoint::from_polar(2.1, 2.9).unwrap();
        let d1 = geodesic_distance(a, b);
        let d2 = polar_distance(1.3, 0.4, 2.1, 2.9);
        assert!((d1 - d2).abs() < 1e-12);
        assert!((polar_distance(1.0, 0.3, 3.0, 0.3) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn apply_polar_matches_apply() {
        let m = MobiusMap::new(p(0.3, -0.6));
        let (rho, th) = (1.7, 4.0);
        let z = DiskPoint::from_polar(rho, th).unwrap();
        let (r2, t2) = m.apply(z).to_polar();
        let (r1, t1) = m.apply_polar(rho, th);
        assert!((r1 - r2).abs() < 1e-12 && (t1 - t2).abs() < 1e-12);
    }
}
