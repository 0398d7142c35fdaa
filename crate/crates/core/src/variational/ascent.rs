//! Maximization of `∫F(u) dμ` on the sphere `‖∇u‖₂² = t` by projected
//! Riesz-gradient ascent with backtracking and mass-peak recentering.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, GridFunction};
use crate::functionals::{f_integral, Nonlinearity};
use crate::geom::DiskPoint;
use crate::poisson::riesz_gradient;

use super::recenter::recenter_refined;

/// Sufficient-increase factor of the Armijo test.
pub const ARMIJO: f64 = 1e-4;
pub const MAX_HALVINGS: usize = 30;

#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    /// Energy level of the constraint `‖∇u‖₂² = t`, in `(0, 1]`.
    pub t: f64,
    /// Initial step, measured as an angle on the constraint sphere.
    pub step: f64,
    pub max_iters: usize,
    /// Stop once `‖g‖_E / ‖v‖_E` falls below this (`v` the Riesz gradient,
    /// `g` its component tangent to the sphere).
    pub grad_tol: f64,
    /// Recenter every this many iterations; 0 disables recentering.
    pub recenter_every: usize,
    /// Shifts shorter than this are not applied.
    pub recenter_min_shift: f64,
    pub seed_field: Field,
}

impl OptimizerConfig {
    pub fn new(seed_field: Field, t: f64) -> Self {
        OptimizerConfig {
            t,
            step: 0.5,
            max_iters: 500,
            grad_tol: 1e-7,
            recenter_every: 10,
            recenter_min_shift: 0.01,
            seed_field,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "energy level t must lie in (0, 1], got {}",
                self.t
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(self.recenter_min_shift >= 0.0) {
            return Err(Error::InvalidParameter("recenter_min_shift must be nonnegative".into()));
        }
        if !(self.seed_field.dirichlet_energy() > 0.0) {
            return Err(Error::ZeroField);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    /// No step passed the line search.
    Stagnated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecenterEvent {
    /// Index into `objective_history` of the first value after the shift.
    pub at: usize,
    pub shift: DiskPoint,
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizerTrace {
    /// Objective of the seed and after every accepted step or recentering.
    pub objective_history: Vec<f64>,
    /// Relative tangent residual at each visited iterate.
    pub residual_history: Vec<f64>,
    /// `|‖∇u‖₂² − t|` after each projection.
    pub constraint_drift: Vec<f64>,
    pub step_history: Vec<f64>,
    pub recenter_shifts: Vec<RecenterEvent>,
    pub status: Status,
    pub iterations: usize,
    pub final_field: Field,
}

impl OptimizerTrace {
    pub fn final_objective(&self) -> f64 {
        self.objective_history[self.objective_history.len() - 1]
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history[self.residual_history.len() - 1]
    }

    /// Every ascent step increased the objective (recentering excluded).
    pub fn is_monotone(&self) -> bool {
        self.objective_history
            .windows(2)
            .enumerate()
            .all(|(i, w)| w[1] >= w[0] || self.recenter_shifts.iter().any(|e| e.at == i + 1))
    }

    pub fn max_constraint_drift(&self) -> f64 {
        self.constraint_drift.iter().fold(0.0, |a, &b| a.max(b))
    }
}

fn project(u: &Field, t: f64) -> Result<(Field, f64)> {
    let e = u.dirichlet_energy();
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::ZeroField);
    }
    let p = u.scale((t / e).sqrt());
    let drift = (p.dirichlet_energy() - t).abs();
    Ok((p, drift))
}

fn objective(u: &Field, f: &Nonlinearity) -> Result<f64> {
    let r = f_integral(u, f);
    if r.saturated {
        return Err(Error::InvalidParameter("objective is not finite".into()));
    }
    Ok(r.value)
}

struct Gradient {
    tangent: Field,
    norm: f64,
    residual: f64,
}

fn tangent_gradient(u: &Field, f: &Nonlinearity) -> Result<Gradient> {
    let v = riesz_gradient(u, f)?.field;
    let uu = u.dirichlet_energy();
    let vu = v.energy_inner(u)?;
    let tangent = v.axpy(-vu / uu, u)?;
    let norm = tangent.dirichlet_energy().max(0.0).sqrt();
    let vnorm = v.dirichlet_energy().sqrt();
    let residual = if vnorm > 0.0 { norm / vnorm } else { 0.0 };
    Ok(Gradient {
        tangent,
        norm,
        residual,
    })
}

/// Projected ascent from `config.seed_field`.
pub fn maximize(config: &OptimizerConfig, f: &Nonlinearity) -> Result<OptimizerTrace> {
    config.validate()?;
    let t = config.t;
    let (mut u, drift) = project(&config.seed_field, t)?;
    let mut j = objective(&u, f)?;
    let mut trace = OptimizerTrace {
        objective_history: vec![j],
        residual_history: Vec::new(),
        constraint_drift: vec![drift],
        step_history: Vec::new(),
        recenter_shifts: Vec::new(),
        status: Status::MaxIters,
        iterations: 0,
        final_field: u.clone(),
    };
    let mut step = config.step;
    for iter in 0..config.max_iters {
        if config.recenter_every > 0 && iter > 0 && iter % config.recenter_every == 0 {
            let rc = recenter_refined(&u)?;
            if rc.zeta.rho() > config.recenter_min_shift {
                let (moved, drift) = project(&rc.field, t)?;
                let j_new = objective(&moved, f)?;
                trace.recenter_shifts.push(RecenterEvent {
                    at: trace.objective_history.len(),
                    shift: rc.zeta,
                    objective_before: j,
                    objective_after: j_new,
                });
                u = moved;
                j = j_new;
                trace.objective_history.push(j);
                trace.constraint_drift.push(drift);
            }
        }
        let g = tangent_gradient(&u, f)?;
        trace.residual_history.push(g.residual);
        trace.iterations = iter;
        if g.residual < config.grad_tol {
            trace.status = Status::Converged;
            break;
        }
        // step along the sphere by an angle ~ step
        let unorm = t.sqrt();
        let slope = unorm * g.norm;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = u.axpy(step * unorm / g.norm, &g.tangent)?;
            let (trial, drift) = project(&trial, t)?;
            let jt = objective(&trial, f)?;
            if jt >= j + ARMIJO * step * slope {
                accepted = Some((trial, jt, drift));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, jt, drift)) => {
                u = trial;
                j = jt;
                trace.objective_history.push(j);
                trace.constraint_drift.push(drift);
                trace.step_history.push(step);
                step = (2.0 * step).min(config.step.max(1.0));
            }
            None => {
                trace.status = Status::Stagnated;
                break;
            }
        }
        trace.iterations = iter + 1;
    }
    if trace.status == Status::MaxIters {
        // residual of the final iterate
        let g = tangent_gradient(&u, f)?;
        trace.residual_history.push(g.residual);
        if g.residual < config.grad_tol {
            trace.status = Status::Converged;
        }
    }
    trace.final_field = u;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::poly_bump;
    use crate::grid::PolarGrid;
    use std::sync::Arc;

    fn small_grid() -> Arc<PolarGrid> {
        Arc::new(PolarGrid::uniform(128, 32, 8.0).unwrap())
    }

    #[test]
    fn ascent_is_monotone_and_feasible() {
        let g = small_grid();
        let seed = poly_bump(g, DiskPoint::ORIGIN, 1.0, 1.0).unwrap();
        let mut cfg = OptimizerConfig::new(seed, 1.0);
        cfg.max_iters = 40;
        let tr = maximize(&cfg, &Nonlinearity::quartic()).unwrap();
        assert!(tr.is_monotone());
        assert!(tr.max_constraint_drift() < 1e-8);
        assert!(tr.final_objective() > tr.objective_history[0]);
        assert!(tr.final_residual() < tr.residual_history[0]);
    }

    #[test]
    fn rejects_bad_config() {
        let g = small_grid();
        let seed = poly_bump(g.clone(), DiskPoint::ORIGIN, 1.0, 1.0).unwrap();
        let mut cfg = OptimizerConfig::new(seed, 1.5);
        assert!(maximize(&cfg, &Nonlinearity::quartic()).is_err());
        cfg.t = 0.5;
        cfg.seed_field = Field::zeros(g);
        assert!(matches!(
            maximize(&cfg, &Nonlinearity::quartic()),
            Err(Error::ZeroField)
        ));
    }

    #[test]
    fn objective_scales_like_t_squared_for_quartic() {
        let g = small_grid();
        let seed = poly_bump(g, DiskPoint::ORIGIN, 1.0, 1.0).unwrap();
        let mut cfg = OptimizerConfig::new(seed, 1e-4);
        cfg.max_iters = 0;
        let small = maximize(&cfg, &Nonlinearity::quartic()).unwrap().final_objective();
        cfg.t = 1.0;
        let big = maximize(&cfg, &Nonlinearity::quartic()).unwrap().final_objective();
        assert!((small / big - 1e-8).abs() < 1e-20);
    }
}
