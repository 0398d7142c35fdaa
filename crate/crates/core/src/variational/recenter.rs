//! Mass-peak recentering: the centre is the node maximizing the mass of
//! `u² dμ` in the geodesic ball of radius [`RECENTER_RADIUS`].

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, GridFunction};
use crate::geom::{geodesic_distance, DiskPoint, MobiusMap};
use crate::grid::PolarGrid;
use crate::transform::pullback;

pub const RECENTER_RADIUS: f64 = 1.0;
/// A second peak this close to the maximum makes the choice ambiguous.
pub const AMBIGUITY_RATIO: f64 = 0.95;

/// Ball masses `M(x) = ∫_{V_ε(x)} u² dμ` at the origin and at every node with
/// `ρ ≤ ρ_max − ε`. Cells count when their node lies in the ball.
#[derive(Clone, Debug)]
pub struct MassMap {
    pub eps: f64,
    pub origin: f64,
    /// Row-major over the admissible rows `0..rows`.
    pub nodes: Vec<f64>,
    pub rows: usize,
    pub n_theta: usize,
}

fn row_prefix(grid: &PolarGrid, u: &Field) -> Vec<Vec<f64>> {
    let w = grid.radial.dmu_weights();
    let dth = grid.dtheta();
    (0..grid.n_rho())
        .into_par_iter()
        .map(|i| {
            let mut p = Vec::with_capacity(grid.n_theta + 1);
            let mut acc = 0.0;
            p.push(0.0);
            for &v in u.row(i) {
                acc += v * v * w[i] * dth;
                p.push(acc);
            }
            p
        })
        .collect()
}

/// Sum of a row over the circular index window `[j − m, j + m]`.
fn window_sum(prefix: &[f64], j: usize, m: usize) -> f64 {
    let n = prefix.len() - 1;
    if 2 * m + 1 >= n {
        return prefix[n];
    }
    let lo = j as isize - m as isize;
    let hi = j + m + 1;
    if lo < 0 {
        let lo = (lo + n as isize) as usize;
        prefix[hi] + prefix[n] - prefix[lo]
    } else if hi > n {
        prefix[n] - prefix[lo as usize] + prefix[hi - n]
    } else {
        prefix[hi] - prefix[lo as usize]
    }
}

/// Largest `Δθ` with `d((a, 0), (b, Δθ)) ≤ ε`, or `None` if no angle works.
fn half_width(a: f64, b: f64, eps: f64) -> Option<f64> {
    // cosh 2d = cosh 2a cosh 2b − sinh 2a sinh 2b cos Δθ
    if (a - b).abs() > eps {
        return None;
    }
    if a + b <= eps {
        return Some(std::f64::consts::PI);
    }
    let num = (2.0 * a).cosh() * (2.0 * b).cosh() - (2.0 * eps).cosh();
    let den = (2.0 * a).sinh() * (2.0 * b).sinh();
    Some((num / den).clamp(-1.0, 1.0).acos())
}

pub fn mass_map(u: &Field, eps: f64) -> MassMap {
    let g = &**u.grid();
    let prefix = row_prefix(g, u);
    let nt = g.n_theta;
    let nodes = g.radial.nodes();
    let dth = g.dtheta();
    let origin = nodes
        .iter()
        .zip(&prefix)
        .take_while(|(&r, _)| r <= eps)
        .map(|(_, p)| p[nt])
        .sum();
    let rows = nodes.partition_point(|&r| r <= g.rho_max() - eps).max(1);
    let masses: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|i0| {
            let a = nodes[i0];
            let band: Vec<(usize, usize)> = (0..g.n_rho())
                .filter_map(|i| half_width(a, nodes[i], eps).map(|w| (i, (w / dth + 1e-9).floor() as usize)))
                .collect();
            (0..nt)
                .map(|j0| band.iter().map(|&(i, m)| window_sum(&prefix[i], j0, m)).sum())
                .collect()
        })
        .collect();
    MassMap {
        eps,
        origin,
        nodes: masses.concat(),
        rows,
        n_theta: nt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassPeak {
    pub center: DiskPoint,
    pub mass: f64,
}

impl MassMap {
    /// The maximum in grid order (origin first, then row-major); later nodes
    /// win only with a strictly larger mass.
    pub fn peak(&self, grid: &PolarGrid) -> MassPeak {
        let mut best = MassPeak {
            center: DiskPoint::ORIGIN,
            mass: self.origin,
        };
        for (idx, &m) in self.nodes.iter().enumerate() {
            if m > best.mass {
                best = MassPeak {
                    center: self.point(grid, idx),
                    mass: m,
                };
            }
        }
        best
    }

    fn point(&self, grid: &PolarGrid, idx: usize) -> DiskPoint {
        let (i, j) = (idx / self.n_theta, idx % self.n_theta);
        DiskPoint::from_polar(grid.rho(i), grid.theta(j)).expect("grid nodes lie in the disk")
    }

    /// Best node farther than `2ε` from `peak` with mass at least
    /// [`AMBIGUITY_RATIO`] of the peak mass.
    pub fn rival(&self, grid: &PolarGrid, peak: &MassPeak) -> Option<MassPeak> {
        let floor = AMBIGUITY_RATIO * peak.mass;
        let mut best: Option<MassPeak> = None;
        let mut consider = |center: DiskPoint, mass: f64| {
            if mass >= floor
                && mass > best.map_or(f64::NEG_INFINITY, |b| b.mass)
                && geodesic_distance(center, peak.center) > 2.0 * self.eps
            {
                best = Some(MassPeak { center, mass });
            }
        };
        consider(DiskPoint::ORIGIN, self.origin);
        for (idx, &m) in self.nodes.iter().enumerate() {
            if m >= floor {
                consider(self.point(grid, idx), m);
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.nodes.iter().fold(self.origin, |a, &b| a.max(b))
    }
}

#[derive(Clone, Debug)]
pub struct Recentered {
    /// `u ∘ η_{−ζ}`: the mass peak moved to the origin.
    pub field: Field,
    pub zeta: DiskPoint,
    pub mass: f64,
    /// A well separated second peak of almost equal mass, if any.
    pub rival: Option<MassPeak>,
}

/// Moves the mass peak of `u` to the origin.
pub fn recenter(u: &Field) -> Result<Recentered> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let map = mass_map(u, RECENTER_RADIUS);
    let peak = map.peak(u.grid());
    let rival = map.rival(u.grid(), &peak);
    let field = if peak.center == DiskPoint::ORIGIN {
        u.clone()
    } else {
        pullback(u, peak.center.neg()).field
    };
    Ok(Recentered {
        field,
        zeta: peak.center,
        mass: peak.mass,
        rival,
    })
}

/// `∫ u² (1 − sinh²d(·, ζ) / sinh²(2ε))⁴₊ dμ`: a smooth, compactly
/// supported version of the ball mass.
pub fn smooth_mass(u: &Field, zeta: DiskPoint, eps: f64) -> f64 {
    let g = &**u.grid();
    let (rc, tc) = zeta.to_polar();
    let reach = 2.0 * eps;
    let inv_s2 = 1.0 / reach.sinh().powi(2);
    let (cb, sb) = ((2.0 * rc).cosh(), (2.0 * rc).sinh());
    let (ct, st) = (tc.cos(), tc.sin());
    let w = g.radial.dmu_weights();
    let dth = g.dtheta();
    let nt = g.n_theta as isize;
    let trig: Vec<(f64, f64)> = (0..g.n_theta).map(|j| (g.theta(j).cos(), g.theta(j).sin())).collect();
    let rows: Vec<f64> = (0..g.n_rho())
        .into_par_iter()
        .map(|i| {
            let rho = g.rho(i);
            let Some(hw) = half_width(rho, rc, reach) else {
                return 0.0;
            };
            let (lo, hi) = if hw >= std::f64::consts::PI {
                (0, nt - 1)
            } else {
                let c = tc / dth;
                ((c - hw / dth).floor() as isize, (c + hw / dth).ceil() as isize)
            };
            let (ca, sa) = ((2.0 * rho).cosh(), (2.0 * rho).sinh());
            let row = u.row(i);
            (lo..=hi.min(lo + nt - 1))
                .map(|jj| {
                    let j = jj.rem_euclid(nt) as usize;
                    let cos_d = trig[j].0 * ct + trig[j].1 * st;
                    // sinh² d = (cosh 2d − 1) / 2
                    let sh2 = 0.5 * (ca * cb - sa * sb * cos_d - 1.0);
                    let x = 1.0 - sh2 * inv_s2;
                    if x <= 0.0 {
                        return 0.0;
                    }
                    let x2 = x * x;
                    row[j] * row[j] * x2 * x2
                })
                .sum::<f64>()
                * w[i]
                * dth
        })
        .collect();
    rows.iter().sum()
}

/// Newton ascent of [`smooth_mass`] from `start` in the chart
/// `v ↦ η_{−start}(v)`, with finite-difference derivatives.
pub fn refine_center(u: &Field, start: DiskPoint, eps: f64) -> DiskPoint {
    let chart = MobiusMap::new(start.neg());
    let at = |x: f64, y: f64| -> f64 {
        match DiskPoint::new(x, y) {
            Ok(v) => smooth_mass(u, chart.apply(v), eps),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let h = 0.1 * u.grid().radial.finest().max(1e-3).min(0.05);
    let (mut x, mut y) = (0.0, 0.0);
    for _ in 0..6 {
        let f0 = at(x, y);
        let (fxp, fxm, fyp, fym) = (at(x + h, y), at(x - h, y), at(x, y + h), at(x, y - h));
        let fxy = at(x + h, y + h) - at(x + h, y - h) - at(x - h, y + h) + at(x - h, y - h);
        let gx = (fxp - fxm) / (2.0 * h);
        let gy = (fyp - fym) / (2.0 * h);
        let hxx = (fxp - 2.0 * f0 + fxm) / (h * h);
        let hyy = (fyp - 2.0 * f0 + fym) / (h * h);
        let hxy = fxy / (4.0 * h * h);
        let det = hxx * hyy - hxy * hxy;
        if !(hxx < 0.0 && det > 0.0) {
            break;
        }
        let dx = -(hyy * gx - hxy * gy) / det;
        let dy = -(hxx * gy - hxy * gx) / det;
        let len = dx.hypot(dy);
        // stay within a few grid cells of the node
        let cap = 0.1;
        let c = if len > cap { cap / len } else { 1.0 };
        let (nx, ny) = (x + c * dx, y + c * dy);
        if !(at(nx, ny) >= f0) {
            break;
        }
        x = nx;
        y = ny;
        if c * len < 1e-7 {
            break;
        }
    }
    DiskPoint::new(x, y).map(|v| chart.apply(v)).unwrap_or(start)
}

/// [`recenter`] with the node-level peak refined by [`refine_center`].
pub fn recenter_refined(u: &Field) -> Result<Recentered> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let map = mass_map(u, RECENTER_RADIUS);
    let peak = map.peak(u.grid());
    let rival = map.rival(u.grid(), &peak);
    let zeta = refine_center(u, peak.center, RECENTER_RADIUS);
    Ok(Recentered {
        field: pullback(u, zeta.neg()).field,
        zeta,
        mass: peak.mass,
        rival,
    })
}

/// Largest ball mass of `u² dμ` over the nodes (the concentration function).
pub fn concentration(u: &Field) -> f64 {
    mass_map(u, RECENTER_RADIUS).max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::poly_bump;
    use crate::geom::polar_distance;
    use std::sync::Arc;

    #[test]
    fn window_sum_wraps() {
        let p = [0.0, 1.0, 3.0, 6.0, 10.0]; // row 1 2 3 4
        assert_eq!(window_sum(&p, 0, 1), 1.0 + 2.0 + 4.0);
        assert_eq!(window_sum(&p, 3, 1), 3.0 + 4.0 + 1.0);
        assert_eq!(window_sum(&p, 2, 0), 3.0);
        assert_eq!(window_sum(&p, 1, 2), 10.0);
    }

    #[test]
    fn half_width_is_on_the_ball_boundary() {
        for &(a, b) in &[(0.5, 0.9), (2.0, 2.3), (1.0, 1.0), (3.0, 2.2)] {
            let w = half_width(a, b, 1.0).unwrap();
            let d = polar_distance(a, 0.0, b, w);
            assert!((d - 1.0).abs() < 1e-9, "{a} {b} {d}");
        }
        assert!(half_width(0.2, 1.5, 1.0).is_none());
        assert_eq!(half_width(0.3, 0.4, 1.0), Some(std::f64::consts::PI));
    }

    #[test]
    fn mass_map_matches_brute_force() {
        let g = Arc::new(PolarGrid::uniform(64, 32, 5.0).unwrap());
        let u = poly_bump(g.clone(), DiskPoint::from_polar(1.0, 0.5).unwrap(), 1.2, 1.0).unwrap();
        let map = mass_map(&u, 1.0);
        let w = g.radial.dmu_weights();
        for &(i0, j0) in &[(10usize, 3usize), (25, 31), (0, 0), (5, 16)] {
            let (a, t) = (g.rho(i0), g.theta(j0));
            let mut brute = 0.0;
            for i in 0..g.n_rho() {
                for j in 0..g.n_theta {
                    if polar_distance(a, t, g.rho(i), g.theta(j)) <= 1.0 + 1e-12 {
                        brute += u.get(i, j).powi(2) * w[i] * g.dtheta();
                    }
                }
            }
            // nodes exactly on the sphere may round either way
            let m = map.nodes[i0 * g.n_theta + j0];
            assert!((m - brute).abs() <= 1e-6 * brute, "{i0},{j0}: {m} vs {brute}");
        }
    }

    #[test]
    fn centred_bump_stays_put() {
        let g = Arc::new(PolarGrid::uniform(256, 64, 8.0).unwrap());
        let u = poly_bump(g.clone(), DiskPoint::ORIGIN, 1.0, 1.0).unwrap();
        let r = recenter(&u).unwrap();
        assert!(r.zeta.rho() <= g.rho(0) + 1e-12);
        assert!(r.rival.is_none());
    }

    #[test]
    fn twin_peaks_are_ambiguous() {
        let g = Arc::new(PolarGrid::uniform(256, 64, 8.0).unwrap());
        let a = poly_bump(g.clone(), DiskPoint::from_polar(1.5, 0.0).unwrap(), 0.8, 1.0).unwrap();
        let b = poly_bump(
            g.clone(),
            DiskPoint::from_polar(1.5, std::f64::consts::PI).unwrap(),
            0.8,
            1.0,
        )
        .unwrap();
        let r = recenter(&a.add(&b).unwrap()).unwrap();
        assert!(r.rival.is_some());
        assert!(recenter(&Field::zeros(g)).is_err());
    }

    #[test]
    fn refinement_finds_off_node_centre() {
        let g = Arc::new(PolarGrid::uniform(256, 128, 8.0).unwrap());
        let c = DiskPoint::from_polar(0.537, 0.0123).unwrap();
        let u = poly_bump(g, c, 1.0, 1.0).unwrap();
        let r = recenter_refined(&u).unwrap();
        assert!(geodesic_distance(r.zeta, c) < 2e-3, "{:?}", r.zeta);
    }
}
