//! Trudinger-Moser type integrals, general `F`-integrals, the local bound on
//! a Euclidean window and the Brezis-Lieb defect.
//!
//! All exponential integrals use the normalized integrand `e^{pu²} − 1`.
//! Exponent arguments above [`EXP_ARG_CAP`] are capped and flagged.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, GridFunction, Measure, Quadrature};
use crate::geom::DiskPoint;
use crate::spectral;

pub const EXP_ARG_CAP: f64 = 700.0;

/// Integrals whose tail band carries more than this fraction are flagged.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// A nonlinearity `F` with growth `|F(s)| ≤ C |s|^r e^{p s²}`.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub growth_c: f64,
    pub growth_r: f64,
    pub growth_p: f64,
    /// Asserts `F(√(ta² + (1−t)b²)) > F(√t a) + F(√(1−t) b)` for `t ∈ (0, 1)`
    /// and `ab ≠ 0`; spot-checked by [`Nonlinearity::validate`].
    pub convexity_claim: bool,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("growth_c", &self.growth_c)
            .field("growth_r", &self.growth_r)
            .field("growth_p", &self.growth_p)
            .field("convexity_claim", &self.convexity_claim)
            .finish()
    }
}

/// Names accepted by [`Nonlinearity::by_name`].
pub const NONLINEARITY_NAMES: [&str; 3] = ["quartic", "sextic", "tm-subcritical"];

impl Nonlinearity {
    /// Builds and validates a nonlinearity (see [`Nonlinearity::validate`]).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        growth_c: f64,
        growth_r: f64,
        growth_p: f64,
        convexity_claim: bool,
    ) -> Result<Self> {
        let f = Nonlinearity {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            growth_c,
            growth_r,
            growth_p,
            convexity_claim,
        };
        f.validate()?;
        Ok(f)
    }

    /// `F(s) = s⁴`.
    pub fn quartic() -> Self {
        Self::new("quartic", |s| s * s * s * s, |s| 4.0 * s * s * s, 1.0, 4.0, 0.0, true).expect("s^4 is admissible")
    }

    /// `F(s) = s⁶`.
    pub fn sextic() -> Self {
        Self::new("sextic", |s| s.powi(6), |s| 6.0 * s.powi(5), 1.0, 6.0, 0.0, true).expect("s^6 is admissible")
    }

    /// `F(s) = e^{p s²} − 1 − p s²` for `0 ≤ p < 4π`; `|F| ≤ (p²/2) s⁴ e^{p s²}`.
    pub fn tm_subcritical(p: f64) -> Result<Self> {
        Self::new(
            "tm-subcritical",
            move |s| {
                let x = p * s * s;
                x.exp_m1() - x
            },
            move |s| 2.0 * p * s * (p * s * s).exp_m1(),
            (0.5 * p * p).max(f64::MIN_POSITIVE),
            4.0,
            p,
            false,
        )
    }

    /// `quartic`, `sextic` or `tm-subcritical` (with `p = 2π`).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "quartic" | "s4" => Ok(Self::quartic()),
            "sextic" | "s6" => Ok(Self::sextic()),
            "tm-subcritical" => Self::tm_subcritical(TAU),
            other => Err(Error::Nonlinearity(format!(
                "unknown nonlinearity `{other}` (expected one of {})",
                NONLINEARITY_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    #[inline]
    pub fn deriv(&self, s: f64) -> f64 {
        (self.deriv)(s)
    }

    /// Checks the growth constants, `F(0) = 0`, the growth bound on a sample
    /// grid of `[−3, 3]` and `F'` against fourth-order central differences of `F`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Nonlinearity(format!("{}: {msg}", self.name)));
        if !(self.growth_c > 0.0 && self.growth_c.is_finite()) {
            return bad(format!("growth C must be positive, got {}", self.growth_c));
        }
        if !(self.growth_r > 2.0) {
            return bad(format!("growth r must exceed 2, got {}", self.growth_r));
        }
        if !(self.growth_p >= 0.0 && self.growth_p < 4.0 * PI) {
            return bad(format!("growth p must lie in [0, 4π), got {}", self.growth_p));
        }
        if self.eval(0.0) != 0.0 {
            return bad(format!("F(0) = {} but must vanish", self.eval(0.0)));
        }
        for k in -300..=300 {
            let s = k as f64 * 0.01;
            let f = self.eval(s);
            let bound = self.growth_c * s.abs().powf(self.growth_r) * (self.growth_p * s * s).exp();
            if !(f.abs() <= bound * (1.0 + 1e-12) + 1e-300) {
                return bad(format!("growth bound violated at s = {s}: |F| = {f}, bound = {bound}"));
            }
            let h = 1e-3 * s.abs().clamp(1e-3, 1.0);
            let fd = (8.0 * (self.eval(s + h) - self.eval(s - h)) - (self.eval(s + 2.0 * h) - self.eval(s - 2.0 * h)))
                / (12.0 * h);
            let d = self.deriv(s);
            let scale = d.abs().max(fd.abs()).max(1e-8);
            if (fd - d).abs() / scale > 1e-6 {
                return bad(format!(
                    "derivative mismatch at s = {s}: F' = {d}, finite difference = {fd}"
                ));
            }
        }
        if self.convexity_claim {
            self.check_convexity()?;
        }
        Ok(())
    }

    /// Spot check of the strict convexity condition on a sample grid of
    /// `(t, a, b)` with `ab ≠ 0`. At `ab = 0` the two sides agree for every
    /// power nonlinearity, so those points are excluded.
    pub fn check_convexity(&self) -> Result<()> {
        const AB: [f64; 8] = [-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0];
        for k in 1..10 {
            let t = k as f64 / 10.0;
            for &a in &AB {
                for &b in &AB {
                    let lhs = self.eval((t * a * a + (1.0 - t) * b * b).sqrt());
                    let rhs = self.eval(t.sqrt() * a) + self.eval((1.0 - t).sqrt() * b);
                    if !(lhs > rhs) {
                        return Err(Error::Nonlinearity(format!(
                            "{}: convexity fails at t = {t}, a = {a}, b = {b} ({lhs} <= {rhs})",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Value of an integral with its saturation and truncation diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralReport {
    pub value: f64,
    /// Some exponent was capped at [`EXP_ARG_CAP`] or an integrand was not finite.
    pub saturated: bool,
    pub tail_fraction: f64,
    /// `tail_fraction > TAIL_TOLERANCE`: the truncation at `ρ_max` is suspect.
    pub tail_warning: bool,
}

impl IntegralReport {
    fn from_quadrature(q: Quadrature, saturated: bool) -> Self {
        let tail_fraction = q.tail_fraction();
        IntegralReport {
            value: q.value,
            saturated,
            tail_fraction,
            tail_warning: tail_fraction > TAIL_TOLERANCE,
        }
    }
}

/// `e^x − 1` with `x` capped at [`EXP_ARG_CAP`].
#[inline]
fn capped_expm1(x: f64) -> f64 {
    x.min(EXP_ARG_CAP).exp_m1()
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p must be positive, got {p}")));
    }
    Ok(())
}

fn tm_integral<G: GridFunction>(u: &G, p: f64, measure: Measure) -> Result<IntegralReport> {
    check_p(p)?;
    let m = u.max_abs();
    let saturated = p * m * m > EXP_ARG_CAP;
    let q = u.integrate(measure, |v| capped_expm1(p * v * v));
    Ok(IntegralReport::from_quadrature(q, saturated))
}

/// `∫_B (e^{pu²} − 1) dx`.
pub fn tm_euclidean<G: GridFunction>(u: &G, p: f64) -> Result<IntegralReport> {
    tm_integral(u, p, Measure::Euclidean)
}

/// `∫_B (e^{pu²} − 1) dμ`.
pub fn tm_invariant<G: GridFunction>(u: &G, p: f64) -> Result<IntegralReport> {
    tm_integral(u, p, Measure::Hyperbolic)
}

/// `∫_B F(u) dμ`.
pub fn f_integral<G: GridFunction>(u: &G, f: &Nonlinearity) -> IntegralReport {
    let q = u.integrate(Measure::Hyperbolic, |v| f.eval(v));
    let saturated = !q.value.is_finite();
    IntegralReport::from_quadrature(q, saturated)
}

/// `∫ (F(u_k) − F(u_k − u) − F(u)) dμ`.
pub fn brezis_lieb_defect(u_k: &Field, u: &Field, f: &Nonlinearity) -> Result<IntegralReport> {
    let q = u_k.integrate_pair(u, Measure::Hyperbolic, |a, b| f.eval(a) - f.eval(a - b) - f.eval(b))?;
    let saturated = !q.value.is_finite();
    Ok(IntegralReport::from_quadrature(q, saturated))
}

/// The Euclidean disk `W = {|x − c| < ½}` with `|c| < ½`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub center: DiskPoint,
    pub n_r: usize,
    pub n_theta: usize,
}

pub const WINDOW_RADIUS: f64 = 0.5;

impl Window {
    pub fn new(center: DiskPoint) -> Result<Self> {
        if center.abs() + WINDOW_RADIUS >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "window centred at |c| = {} is not compactly inside the disk",
                center.abs()
            )));
        }
        Ok(Window {
            center,
            n_r: 128,
            n_theta: 128,
        })
    }

    pub fn with_resolution(mut self, n_r: usize, n_theta: usize) -> Result<Self> {
        if n_r < 4 || n_theta < 8 || n_theta % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "window grid {n_r}x{n_theta}: need n_r >= 4 and even n_theta >= 8"
            )));
        }
        self.n_r = n_r;
        self.n_theta = n_theta;
        Ok(self)
    }

    /// Samples `u` on a local Euclidean polar grid `c + s e^{iφ}`,
    /// `s_i = i/(2 n_r)`, `i = 1..=n_r`.
    pub fn restrict(&self, u: &Field) -> Result<WindowSample> {
        let (n_r, n_t) = (self.n_r, self.n_theta);
        let h = WINDOW_RADIUS / n_r as f64;
        let c = self.center.to_complex();
        let mut values = Vec::with_capacity(n_r * n_t);
        for i in 1..=n_r {
            let s = i as f64 * h;
            for j in 0..n_t {
                let phi = TAU * j as f64 / n_t as f64;
                let z = c + rustfft::num_complex::Complex64::from_polar(s, phi);
                let p = DiskPoint::new(z.re, z.im)?;
                let (rho, th) = p.to_polar();
                values.push(u.sample(rho, th));
            }
        }
        Ok(WindowSample {
            n_r,
            n_theta: n_t,
            values,
        })
    }
}

/// Values of a field on the local polar grid of a [`Window`].
#[derive(Clone, Debug)]
pub struct WindowSample {
    n_r: usize,
    n_theta: usize,
    values: Vec<f64>,
}

impl WindowSample {
    fn h(&self) -> f64 {
        WINDOW_RADIUS / self.n_r as f64
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_theta..(i + 1) * self.n_theta]
    }

    /// Trapezoid weight of ring `i` for `dx` (phantom centre node).
    fn cell_weight(&self, i: usize) -> f64 {
        let h = self.h();
        let s = (i + 1) as f64 * h;
        let half = if i + 1 == self.n_r { 0.5 * h } else { h };
        s * half
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let dphi = TAU / self.n_theta as f64;
        (0..self.n_r)
            .map(|i| self.cell_weight(i) * self.row(i).iter().map(|&v| f(v)).sum::<f64>() * dphi)
            .sum()
    }

    /// `∫_W |∇u|² dx`, same edge/spectral form as the disk fields with `A = s`.
    pub fn dirichlet_energy(&self) -> f64 {
        let h = self.h();
        let nt = self.n_theta;
        let dphi = TAU / nt as f64;
        let mut e = 0.0;
        for i in 0..self.n_r {
            let s = (i + 1) as f64 * h;
            let r = self.row(i);
            if r.iter().any(|&x| x != 0.0) {
                e += self.cell_weight(i) / (s * s) * spectral::angular_inner(r, r);
            }
            if i + 1 < self.n_r {
                let k = 1.0 / (((i + 2) as f64) / ((i + 1) as f64)).ln();
                let next = self.row(i + 1);
                e += k * dphi * r.iter().zip(next).map(|(a, b)| (b - a) * (b - a)).sum::<f64>();
            }
        }
        e
    }

    pub fn scale(&self, c: f64) -> WindowSample {
        WindowSample {
            n_r: self.n_r,
            n_theta: self.n_theta,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// `‖u‖²_W = ∫_W (|∇u|² + λu²) dx`.
pub fn window_norm_sq(w: &WindowSample, lambda: f64) -> f64 {
    w.dirichlet_energy() + lambda * w.integrate(|v| v * v)
}

/// `∫_W (e^{qu²} − 1) dx`.
pub fn window_tm(w: &WindowSample, q: f64) -> f64 {
    w.integrate(|v| capped_expm1(q * v * v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalBoundParams {
    pub q: f64,
    pub lambda: f64,
}

impl Default for LocalBoundParams {
    fn default() -> Self {
        LocalBoundParams {
            q: PI / 4.0,
            lambda: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub norm_sq: f64,
    pub constant: f64,
    pub q: f64,
    pub lambda: f64,
    pub ok: bool,
}

/// Checks `∫_W (e^{qu²} − 1) dx ≤ C ‖u‖²_W / (1 − ‖u‖²_W)`; rejects `‖u‖²_W ≥ 1`.
pub fn local_tm_bound_check(
    u: &Field,
    window: &Window,
    params: LocalBoundParams,
    constant: f64,
) -> Result<LocalBoundCheck> {
    let w = window.restrict(u)?;
    check_local(&w, params, constant)
}

pub fn check_local(w: &WindowSample, params: LocalBoundParams, constant: f64) -> Result<LocalBoundCheck> {
    let norm_sq = window_norm_sq(w, params.lambda);
    if norm_sq >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "local bound needs ||u||_W^2 < 1, got {norm_sq}"
        )));
    }
    let lhs = window_tm(w, params.q);
    let rhs = constant * norm_sq / (1.0 - norm_sq);
    Ok(LocalBoundCheck {
        lhs,
        rhs,
        norm_sq,
        constant,
        q: params.q,
        lambda: params.lambda,
        ok: lhs <= rhs,
    })
}

/// Norm levels used to calibrate the local constant.
pub const CALIBRATION_LEVELS: [f64; 4] = [0.05, 0.1, 0.15, 0.2];

/// `C = max lhs·(1 − s)/s` over the seed samples rescaled to `‖u‖²_W = s`
/// for each calibration level `s`. The constant function is always included.
pub fn calibrate_local_constant(seeds: &[WindowSample], params: LocalBoundParams, levels: &[f64]) -> Result<f64> {
    let mut best: f64 = 0.0;
    let mut consider = |w: &WindowSample| -> Result<()> {
        let n = window_norm_sq(w, params.lambda);
        if !(n > 0.0) {
            return Ok(());
        }
        for &s in levels {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidParameter(format!("calibration level {s} outside (0, 1)")));
            }
            let ws = w.scale((s / n).sqrt());
            best = best.max(window_tm(&ws, params.q) * (1.0 - s) / s);
        }
        Ok(())
    };
    if let Some(first) = seeds.first() {
        consider(&WindowSample {
            n_r: first.n_r,
            n_theta: first.n_theta,
            values: vec![1.0; first.values.len()],
        })?;
    }
    for w in seeds {
        consider(w)?;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::poly_bump;
    use crate::grid::PolarGrid;

    fn grid() -> Arc<PolarGrid> {
        Arc::new(PolarGrid::uniform(256, 64, 8.0).unwrap())
    }

    #[test]
    fn builtin_nonlinearities_validate() {
        for name in NONLINEARITY_NAMES {
            Nonlinearity::by_name(name).unwrap().validate().unwrap();
        }
        assert!(Nonlinearity::by_name("cubic").is_err());
    }

    #[test]
    fn invalid_nonlinearities_are_rejected() {
        assert!(Nonlinearity::new("c", |s| s * s + 1.0, |s| 2.0 * s, 2.0, 3.0, 0.0, false).is_err());
        assert!(Nonlinearity::new("r2", |s| s * s, |s| 2.0 * s, 1.0, 2.0, 0.0, false).is_err());
        assert!(Nonlinearity::new("d", |s| s.powi(4), |s| s.powi(3), 1.0, 4.0, 0.0, false).is_err());
        assert!(Nonlinearity::new("g", |s| 2.0 * s.powi(4), |s| 8.0 * s.powi(3), 1.0, 4.0, 0.0, false).is_err());
        // |s|^3 is not superadditive in the required sense for all (a, b)
        let neg = Nonlinearity::new("n", |s| -s.powi(4), |s| -4.0 * s.powi(3), 1.0, 4.0, 0.0, true);
        assert!(neg.is_err());
    }

    #[test]
    fn zero_field_integrals_vanish() {
        let u = Field::zeros(grid());
        assert_eq!(tm_euclidean(&u, 4.0 * PI).unwrap().value, 0.0);
        assert_eq!(tm_invariant(&u, 4.0 * PI).unwrap().value, 0.0);
        assert_eq!(f_integral(&u, &Nonlinearity::quartic()).value, 0.0);
        assert!(tm_invariant(&u, 0.0).is_err());
    }

    #[test]
    fn saturation_is_flagged() {
        let u = poly_bump(grid(), DiskPoint::ORIGIN, 1.0, 10.0).unwrap();
        let r = tm_invariant(&u, 4.0 * PI).unwrap();
        assert!(r.saturated && r.value.is_finite());
        assert!(!tm_invariant(&u.scale(0.1), 4.0 * PI).unwrap().saturated);
    }

    #[test]
    fn brezis_lieb_trivial_cases_are_exact() {
        let u = poly_bump(grid(), DiskPoint::ORIGIN, 1.0, 0.7).unwrap();
        let f = Nonlinearity::quartic();
        assert_eq!(brezis_lieb_defect(&u, &u, &f).unwrap().value, 0.0);
        assert_eq!(brezis_lieb_defect(&u, &Field::zeros(grid()), &f).unwrap().value, 0.0);
    }

    #[test]
    fn window_quantities_for_a_linear_function() {
        // u = x on W centred at 0: ∫|∇u|² = π/4, ∫u² = ∫ s² cos²φ s ds dφ = π/64
        let g = Arc::new(PolarGrid::uniform(512, 128, 4.0).unwrap());
        let u = Field::from_fn(g, |rho, th| rho.tanh() * th.cos()).unwrap();
        let w = Window::new(DiskPoint::ORIGIN).unwrap().restrict(&u).unwrap();
        assert!((w.dirichlet_energy() - PI / 4.0).abs() < 1e-4);
        assert!((w.integrate(|v| v * v) - PI / 64.0).abs() < 1e-5);
        assert!(Window::new(DiskPoint::new(0.6, 0.0).unwrap()).is_err());
    }

    #[test]
    fn local_bound_rejects_large_norms() {
        let u = poly_bump(grid(), DiskPoint::ORIGIN, 1.0, 3.0).unwrap();
        let w = Window::new(DiskPoint::ORIGIN).unwrap();
        let r = local_tm_bound_check(&u, &w, LocalBoundParams::default(), 1.0);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
        let z = local_tm_bound_check(&Field::zeros(grid()), &w, LocalBoundParams::default(), 1.0).unwrap();
        assert_eq!((z.lhs, z.rhs, z.ok), (0.0, 0.0, true));
    }
}
