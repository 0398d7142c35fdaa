//! Cached FFT plans and the angular symbol of the Dirichlet form.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanCache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>;

fn cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
}

pub(crate) fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    let (planner, plans) = &mut *guard;
    plans
        .entry((n, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// `m²` for the FFT bin `k` of an `n`-point transform (`m = min(k, n − k)`).
#[inline]
pub(crate) fn wavenumber_sq(n: usize, k: usize) -> f64 {
    let m = k.min(n - k) as f64;
    m * m
}

/// Unnormalised forward transform of a real row.
pub(crate) fn spectrum(row: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = row.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plan(row.len(), false).process(&mut buf);
    buf
}

/// `∫₀^{2π} u_θ v_θ dθ` for trigonometric interpolants of two rows.
pub(crate) fn angular_inner(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let su = spectrum(u);
    let same = std::ptr::eq(u, v);
    let sv = if same { Vec::new() } else { spectrum(v) };
    let mut acc = 0.0;
    for k in 1..n {
        let b = if same { su[k] } else { sv[k] };
        acc += wavenumber_sq(n, k) * (su[k] * b.conj()).re;
    }
    acc * std::f64::consts::TAU / (n * n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn angular_inner_of_trig_polynomials_is_exact() {
        let n = 32;
        let th = |j: usize| TAU * j as f64 / n as f64;
        let u: Vec<f64> = (0..n).map(|j| (3.0 * th(j)).sin() + 0.5).collect();
        let v: Vec<f64> = (0..n).map(|j| (3.0 * th(j)).sin() + (2.0 * th(j)).cos()).collect();
        // ∫ (3 cos 3θ)² = 9π
        assert!((angular_inner(&u, &u) - 9.0 * PI).abs() < 1e-12);
        assert!((angular_inner(&u, &v) - 9.0 * PI).abs() < 1e-12);
    }
}
