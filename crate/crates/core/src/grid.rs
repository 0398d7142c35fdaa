//! Hyperbolic-polar tensor grids and their quadrature / stiffness weights.
//!
//! A radial grid is a strictly increasing list of nodes `ρ_1 < … < ρ_N` in
//! `(0, ρ_max]` with `ρ_N = ρ_max`. The origin is not a node; it enters the
//! formulas below as a phantom endpoint `ρ_0 = 0` where the measure density
//! vanishes. The outermost ring is the Dirichlet boundary (values are zero).
//!
//! In coordinates `(ρ, θ)` both the measure density and the conformal factor
//! of the Dirichlet form equal `A(ρ) = sinh ρ cosh ρ`:
//!
//! ```text
//! dμ = A dρ dθ          ∫|∇u|² dx = ∫ (A u_ρ² + u_θ² / A) dρ dθ
//! ```
//!
//! Discretisation (all second order on smooth data):
//!
//! * radial stiffness on the edge `[ρ_i, ρ_{i+1}]`: `1 / ∫ dρ/A =
//!   1 / ln(r_{i+1}/r_i)`, which makes the form exact for functions that are
//!   piecewise linear in `ln r` (radial harmonic functions, Moser profiles);
//! * quadrature: node `i` owns the dual cell between the flux points of its
//!   two edges (the origin and `ρ_max` close the first and last cell) and gets
//!   the exact measure of that annulus; periodic trapezoid in `θ`. The flux
//!   point is where the edge flux is exact for a constant source, which keeps
//!   the Poisson scheme second order up to the origin;
//! * angular stiffness at ring `i`: dual cell width divided by `A(ρ_i)`.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{log_tanh, rho_from_log_r};

/// Default truncation radius (`r ≈ 1 − 7.6e−11`).
pub const DEFAULT_RHO_MAX: f64 = 12.0;
pub const DEFAULT_N_RHO: usize = 512;
pub const DEFAULT_N_THETA: usize = 256;

/// `A(ρ) = sinh ρ cosh ρ`.
#[inline]
pub fn conformal_factor(rho: f64) -> f64 {
    0.5 * (2.0 * rho).sinh()
}

/// Euclidean area density in hyperbolic polar coordinates: `r dr = tanh ρ sech²ρ dρ`.
#[inline]
pub fn euclidean_density(rho: f64) -> f64 {
    let c = rho.cosh();
    rho.tanh() / (c * c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    #[serde(skip)]
    cell: Vec<f64>,
    #[serde(skip)]
    dmu: Vec<f64>,
    #[serde(skip)]
    dx: Vec<f64>,
    #[serde(skip)]
    radial_stiffness: Vec<f64>,
    #[serde(skip)]
    angular_stiffness: Vec<f64>,
    #[serde(skip)]
    log_r: Vec<f64>,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid("need at least 3 radial nodes".into()));
        }
        if !(nodes[0] > 0.0) {
            return Err(Error::InvalidGrid("first radial node must be positive".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("radial nodes must be finite".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("radial nodes must increase strictly".into()));
        }
        let n = nodes.len();
        let log_r: Vec<f64> = nodes.iter().map(|&x| log_tanh(x)).collect();
        // dual-cell boundaries: 0, the flux points of the n − 1 edges, ρ_max
        let mut bounds = Vec::with_capacity(n + 1);
        bounds.push(0.0);
        for i in 0..n - 1 {
            bounds.push(flux_point(nodes[i], nodes[i + 1], log_r[i], log_r[i + 1]));
        }
        bounds.push(nodes[n - 1]);
        let cell: Vec<f64> = bounds.windows(2).map(|b| b[1] - b[0]).collect();
        let dmu = bounds
            .windows(2)
            .map(|b| 0.5 * (b[1].sinh().powi(2) - b[0].sinh().powi(2)))
            .collect();
        let dx = bounds
            .windows(2)
            .map(|b| 0.5 * (b[1].tanh().powi(2) - b[0].tanh().powi(2)))
            .collect();
        let radial_stiffness = (0..n - 1).map(|i| 1.0 / (log_r[i + 1] - log_r[i])).collect();
        let angular_stiffness = (0..n).map(|i| cell[i] / conformal_factor(nodes[i])).collect();
        Ok(RadialGrid {
            nodes,
            cell,
            dmu,
            dx,
            radial_stiffness,
            angular_stiffness,
            log_r,
        })
    }

    /// `ρ_i = i·ρ_max/n` for `i = 1..=n`.
    pub fn uniform(n: usize, rho_max: f64) -> Result<Self> {
        check_rho_max(rho_max)?;
        let h = rho_max / n as f64;
        let mut nodes: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        if let Some(last) = nodes.last_mut() {
            *last = rho_max;
        }
        Self::from_nodes(nodes)
    }

    /// Geometric spacing from `first` with ratio `ratio` until the step
    /// reaches `max_step`, uniform afterwards; the last step is stretched so
    /// the grid ends exactly at `rho_max`.
    pub fn graded(first: f64, ratio: f64, max_step: f64, rho_max: f64) -> Result<Self> {
        check_rho_max(rho_max)?;
        if !(first > 0.0 && first < rho_max && ratio > 1.0 && max_step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "graded grid needs 0 < first < rho_max, ratio > 1, max_step > 0 \
                 (first={first}, ratio={ratio}, max_step={max_step})"
            )));
        }
        let mut nodes = vec![first];
        let mut step = first * (ratio - 1.0);
        loop {
            step = (step * ratio).min(max_step);
            let next = nodes[nodes.len() - 1] + step;
            if next >= rho_max - 0.5 * step {
                break;
            }
            nodes.push(next);
        }
        nodes.push(rho_max);
        Self::from_nodes(nodes)
    }

    /// Moves the node nearest to each breakpoint onto it (node count is kept);
    /// a breakpoint whose nearest node is already taken is inserted instead.
    pub fn with_breakpoints(&self, breakpoints: &[f64]) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        let mut pinned = vec![false; nodes.len()];
        let mut sorted: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < self.rho_max())
            .collect();
        sorted.sort_by(|a, b| a.total_cmp(b));
        sorted.dedup();
        for b in sorted {
            let n = nodes.len();
            let idx = nodes.partition_point(|&x| x < b);
            let cand = if idx == 0 {
                0
            } else if idx >= n {
                n - 1
            } else if (nodes[idx] - b).abs() < (b - nodes[idx - 1]).abs() {
                idx
            } else {
                idx - 1
            };
            if nodes[cand] == b {
                pinned[cand] = true;
            } else if cand + 1 < n && !pinned[cand] {
                nodes[cand] = b;
                pinned[cand] = true;
            } else {
                let pos = nodes.partition_point(|&x| x < b);
                nodes.insert(pos, b);
                pinned.insert(pos, true);
            }
        }
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn rho_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn finest(&self) -> f64 {
        self.nodes[0]
    }

    /// Dual cell widths in `ρ`.
    pub fn cell_widths(&self) -> &[f64] {
        &self.cell
    }

    /// Radial quadrature weights for `dμ` (without the `dθ` factor).
    pub fn dmu_weights(&self) -> &[f64] {
        &self.dmu
    }

    /// Radial quadrature weights for Euclidean `dx` (without `dθ`).
    pub fn dx_weights(&self) -> &[f64] {
        &self.dx
    }

    /// Edge coefficients `1/ln(r_{i+1}/r_i)`, one per edge `[ρ_i, ρ_{i+1}]`.
    pub fn radial_stiffness(&self) -> &[f64] {
        &self.radial_stiffness
    }

    pub fn angular_stiffness(&self) -> &[f64] {
        &self.angular_stiffness
    }

    /// `ln r_i = ln tanh ρ_i`.
    pub fn log_r(&self) -> &[f64] {
        &self.log_r
    }

    /// Index of the node with `ρ_i` closest to `rho`.
    pub fn nearest(&self, rho: f64) -> usize {
        let idx = self.nodes.partition_point(|&x| x < rho);
        if idx == 0 {
            0
        } else if idx >= self.nodes.len() {
            self.nodes.len() - 1
        } else if self.nodes[idx] - rho < rho - self.nodes[idx - 1] {
            idx
        } else {
            idx - 1
        }
    }
}

/// Radius `ρ*` in the edge `[a, b]` where the edge flux `k (u_b − u_a)` equals
/// the exact flux for a constant Euclidean source:
/// `r*² = (r_b² − r_a²) / (2 ln(r_b/r_a))`.
fn flux_point(a: f64, b: f64, log_ra: f64, log_rb: f64) -> f64 {
    // r_b² − r_a² = r_a² (e^{2δ} − 1), δ = ln(r_b/r_a)
    let delta = log_rb - log_ra;
    let log_r_sq = 2.0 * log_ra + (2.0 * delta).exp_m1().ln() - (2.0 * delta).ln();
    let rho = rho_from_log_r(0.5 * log_r_sq);
    // guards the rounding regime near ρ_max where tanh saturates
    if rho > a && rho < b {
        rho
    } else {
        0.5 * (a + b)
    }
}

fn check_rho_max(rho_max: f64) -> Result<()> {
    if !(rho_max > 0.0 && rho_max <= crate::geom::MAX_LIFT_RHO) {
        return Err(Error::InvalidGrid(format!(
            "rho_max must lie in (0, {}], got {rho_max}",
            crate::geom::MAX_LIFT_RHO
        )));
    }
    Ok(())
}

/// Tensor grid: a radial grid times `n_theta` equally spaced angles
/// `θ_j = 2πj/n_theta`. `n_theta` is even so that `θ + π` is a grid angle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolarGrid {
    pub radial: RadialGrid,
    pub n_theta: usize,
}

impl PolarGrid {
    pub fn new(radial: RadialGrid, n_theta: usize) -> Result<Self> {
        if n_theta < 8 || n_theta % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_theta must be even and at least 8, got {n_theta}"
            )));
        }
        Ok(PolarGrid { radial, n_theta })
    }

    pub fn uniform(n_rho: usize, n_theta: usize, rho_max: f64) -> Result<Self> {
        Self::new(RadialGrid::uniform(n_rho, rho_max)?, n_theta)
    }

    /// 512 × 256 nodes on `ρ ≤ 12`.
    pub fn default_grid() -> Self {
        Self::uniform(DEFAULT_N_RHO, DEFAULT_N_THETA, DEFAULT_RHO_MAX).expect("default grid parameters are valid")
    }

    pub fn n_rho(&self) -> usize {
        self.radial.len()
    }

    pub fn len(&self) -> usize {
        self.n_rho() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rho_max(&self) -> f64 {
        self.radial.rho_max()
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn rho(&self, i: usize) -> f64 {
        self.radial.nodes()[i]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn uniform_grid_ends_at_rho_max() {
        let g = RadialGrid::uniform(10, 3.0).unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g.rho_max(), 3.0);
        assert!((g.finest() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(RadialGrid::from_nodes(vec![0.0, 1.0, 2.0]).is_err());
        assert!(RadialGrid::from_nodes(vec![0.5, 0.5, 2.0]).is_err());
        assert!(RadialGrid::from_nodes(vec![0.5, 1.0]).is_err());
        assert!(PolarGrid::uniform(10, 7, 3.0).is_err());
    }

    #[test]
    fn graded_grid_is_increasing_and_bounded() {
        let g = RadialGrid::graded(1e-6, 1.05, 0.05, 12.0).unwrap();
        assert_eq!(g.rho_max(), 12.0);
        assert_eq!(g.finest(), 1e-6);
        let max_step = g.nodes().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(max_step < 0.076);
    }

    #[test]
    fn breakpoints_are_snapped_without_changing_count() {
        let g = RadialGrid::uniform(100, 10.0).unwrap();
        let b = g.with_breakpoints(&[0.333, 5.55]).unwrap();
        assert_eq!(b.len(), 100);
        assert!(b.nodes().contains(&0.333));
        assert!(b.nodes().contains(&5.55));
        // two breakpoints competing for one node force an insertion
        let c = g.with_breakpoints(&[0.31, 0.32]).unwrap();
        assert_eq!(c.len(), 101);
    }

    #[test]
    fn dmu_weights_integrate_ball_area() {
        let g = RadialGrid::uniform(4000, 2.0).unwrap();
        let area: f64 = g.dmu_weights().iter().sum::<f64>() * 2.0 * PI;
        let exact = PI * 2.0f64.sinh().powi(2);
        assert!((area - exact).abs() / exact < 1e-6);
    }
}
