//! The subcommands. Each returns its report and exit code; CSV and field files
//! are written as it goes.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use tmdisk::checks::{self, CheckReport, LocalBoundSetup, Scenario};
use tmdisk::covering::{build_covering, CoveringSpec};
use tmdisk::families::{poly_bump, unit_energy};
use tmdisk::functionals::Nonlinearity;
use tmdisk::io::{read_field, write_field, write_field_csv};
use tmdisk::variational::ascent::{maximize as ascend, OptimizerConfig, Status};
use tmdisk::variational::moser::{blowup_probe, blowup_probe_on, dyadic_ks, moser_grid, Verdict};
use tmdisk::{DiskPoint, PolarGrid};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutDir;
use crate::VerifyKind;

pub struct Outcome {
    pub command: String,
    pub report: Value,
    pub summary: String,
    pub exit_code: u8,
}

impl Outcome {
    fn from_checks(command: String, checks: &CheckReport, mut report: Value) -> Self {
        report["command"] = json!(command);
        report["passed"] = json!(checks.passed());
        report["checks"] = json!(checks);
        let mut summary = format!("{command}: {}", checks.summary());
        for f in checks.failures() {
            summary.push_str(&format!(
                "\n  failed: {} = {:e} (limit {:e})",
                f.label, f.value, f.limit
            ));
        }
        Outcome {
            command,
            report,
            summary,
            exit_code: if checks.passed() { 0 } else { 1 },
        }
    }
}

fn grid_json(g: &PolarGrid) -> Value {
    json!({ "n_rho": g.n_rho(), "n_theta": g.n_theta, "rho_max": g.rho_max() })
}

fn checks_csv(out: &OutDir, rep: &CheckReport) -> Result<(), CliError> {
    out.csv("checks.csv", &rep.entries)
}

pub fn verify(cfg: &RunConfig, kind: VerifyKind, out: &OutDir) -> Result<Outcome, CliError> {
    let tol = &cfg.tolerances;
    let seed = cfg.run.seed;
    let grid = cfg.grid.polar(&PolarGrid::default_grid())?;
    let mut params = json!({ "seed": seed });
    let rep = match kind {
        VerifyKind::Hardy => checks::hardy(&grid, tol, seed)?,
        VerifyKind::Invariance => {
            params["refine"] = json!(cfg.verify.refine);
            checks::invariance(&grid, tol, cfg.verify.refine)?
        }
        VerifyKind::Dilation => checks::dilation(tol)?,
        VerifyKind::LocalBound => {
            let mut tol = tol.clone();
            if let Some(n) = cfg.verify.norm {
                if !(n > 0.0 && n < 1.0) {
                    return Err(CliError::Config(format!(
                        "local bound hypothesis violated: requested ||u||_W^2 = {n}, but the bound needs 0 < ||u||_W^2 < 1"
                    )));
                }
                tol.local_test_min = n;
                tol.local_test_max = n;
            }
            params["norm_range"] = json!([tol.local_test_min, tol.local_test_max]);
            checks::local_bound(&grid, &tol, &LocalBoundSetup::new(&tol, seed))?
        }
        VerifyKind::BrezisLieb => {
            params["distances"] = json!(checks::BREZIS_LIEB_DISTANCES);
            let defects = checks::brezis_lieb_defects(&grid, &checks::BREZIS_LIEB_DISTANCES)?;
            let rows: Vec<_> = checks::BREZIS_LIEB_DISTANCES
                .iter()
                .zip(&defects)
                .map(|(&distance, &defect)| DefectRow { distance, defect })
                .collect();
            out.csv("defects.csv", &rows)?;
            checks::brezis_lieb(&grid, tol)?
        }
    };
    checks_csv(out, &rep)?;
    let grid_info = match kind {
        VerifyKind::Dilation => json!("graded radial grid"),
        _ => grid_json(&grid),
    };
    let report = json!({ "kind": kind.name(), "parameters": params, "grid": grid_info });
    Ok(Outcome::from_checks(format!("verify {}", kind.name()), &rep, report))
}

#[derive(Serialize)]
struct DefectRow {
    distance: f64,
    defect: f64,
}

pub fn probe(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let pc = &cfg.probe;
    if !(pc.p_over_4pi > 0.0 && pc.p_over_4pi.is_finite()) {
        return Err(CliError::Config(format!(
            "p_over_4pi must be positive, got {}",
            pc.p_over_4pi
        )));
    }
    if pc.k_max < 4 {
        return Err(CliError::Config(format!("k_max must be at least 4, got {}", pc.k_max)));
    }
    let ks = dyadic_ks(pc.k_max);
    let p = pc.p_over_4pi * 4.0 * PI;
    // an explicit grid is used as given and must resolve every plateau
    let (r, grid_info) = if cfg.grid.is_set() {
        let g = cfg.grid.radial(512, 12.0)?;
        let info = json!({ "kind": "uniform", "n_rho": g.len(), "rho_max": g.rho_max() });
        (blowup_probe_on(&g, p, &ks)?, info)
    } else {
        let g = moser_grid(&ks)?;
        let info = json!({ "kind": "graded", "n_rho": g.len(), "rho_max": g.rho_max() });
        (blowup_probe(p, &ks)?, info)
    };
    out.csv("probe.csv", &r.entries)?;
    let mut rep = CheckReport::new("probe");
    rep.holds("no saturation", !r.any_saturated);
    rep.note(format!(
        "verdict {:?}: growth {:.4}, spread {:.4}",
        r.verdict, r.growth, r.spread
    ));
    let report = json!({
        "parameters": { "p_over_4pi": pc.p_over_4pi, "p": p, "k_max": pc.k_max },
        "grid": grid_info,
        "verdict": r.verdict,
        "growth": r.growth,
        "spread": r.spread,
        "entries": r.entries,
    });
    let mut o = Outcome::from_checks("probe".into(), &rep, report);
    o.summary.push_str(&format!(
        "\nverdict: {}",
        match r.verdict {
            Verdict::Bounded => "bounded",
            Verdict::Growing => "growing",
        }
    ));
    Ok(o)
}

#[derive(Serialize)]
struct CenterRow {
    re: f64,
    im: f64,
    rho: f64,
    theta: f64,
}

pub fn cover(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let c = &cfg.cover;
    let spec = CoveringSpec::new(c.eps, c.cover_factor, c.rho_max, c.lattice_step)?;
    let samples = c.samples.unwrap_or(cfg.tolerances.cover_samples);
    let r = build_covering(&spec, samples, cfg.run.seed)?;
    let rows: Vec<_> = r
        .centers
        .iter()
        .map(|p| {
            let z = p.to_disk();
            CenterRow {
                re: z.re(),
                im: z.im(),
                rho: p.rho,
                theta: p.theta,
            }
        })
        .collect();
    out.csv("centers.csv", &rows)?;
    let mut rep = CheckReport::new("cover");
    rep.holds("disjoint (min pairwise distance ≥ 2ε)", r.disjoint);
    rep.below("coverage gaps", r.coverage_gap_count as f64, 0.5);
    rep.note(format!(
        "{} centres, multiplicity {} (bound {})",
        r.centers.len(),
        r.multiplicity_empirical,
        r.multiplicity_bound
    ));
    for w in spec.warnings() {
        rep.note(w);
    }
    let report = json!({
        "parameters": {
            "eps": spec.eps,
            "cover_factor": spec.cover_factor,
            "lattice_step": spec.lattice_step,
            "rho_max": spec.rho_max,
            "samples": samples,
            "seed": cfg.run.seed,
        },
        "center_count": r.centers.len(),
        "candidate_count": r.candidate_count,
        "cover_radius": r.cover_radius,
        "min_pairwise_distance": r.min_pairwise_distance,
        "disjoint": r.disjoint,
        "multiplicity_empirical": r.multiplicity_empirical,
        "multiplicity_bound": r.multiplicity_bound,
        "coverage_samples": r.coverage_samples,
        "coverage_gaps": r.coverage_gap_count,
        "uncovered_candidates": r.uncovered_candidates,
        "warnings": spec.warnings(),
    });
    Ok(Outcome::from_checks("cover".into(), &rep, report))
}

#[derive(Serialize)]
struct TraceRow {
    index: usize,
    objective: f64,
    residual: Option<f64>,
    constraint_drift: Option<f64>,
    step: Option<f64>,
}

pub fn maximize(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let m = &cfg.maximize;
    let f = Nonlinearity::by_name(&m.nonlinearity)?;
    let seed_field = match &m.seed_field {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::Config(format!("seed field {}: {e}", path.display())))?;
            read_field(BufReader::new(file))?
        }
        None => {
            let grid = cfg.grid.polar(&PolarGrid::default_grid())?;
            unit_energy(&poly_bump(grid, DiskPoint::ORIGIN, 1.0, 1.0)?)?
        }
    };
    let grid = Arc::clone(seed_field.grid());
    let mut oc = OptimizerConfig::new(seed_field, m.t);
    oc.step = m.step;
    oc.max_iters = m.max_iters;
    oc.grad_tol = m.grad_tol;
    oc.recenter_every = m.recenter_every;
    oc.recenter_min_shift = m.recenter_min_shift;
    oc.validate()?;
    let tr = ascend(&oc, &f)?;

    let rows: Vec<_> = tr
        .objective_history
        .iter()
        .enumerate()
        .map(|(i, &objective)| TraceRow {
            index: i,
            objective,
            residual: tr.residual_history.get(i).copied(),
            constraint_drift: tr.constraint_drift.get(i).copied(),
            step: tr.step_history.get(i).copied(),
        })
        .collect();
    out.csv("trace.csv", &rows)?;
    out.json(
        "trace.json",
        &json!({
            "status": tr.status,
            "iterations": tr.iterations,
            "objective_history": tr.objective_history,
            "residual_history": tr.residual_history,
            "constraint_drift": tr.constraint_drift,
            "step_history": tr.step_history,
            "recenter_shifts": tr.recenter_shifts,
        }),
    )?;
    out.write_with("maximizer.field", |w| Ok(write_field(&tr.final_field, w)?))?;
    out.write_with("maximizer.csv", |w| Ok(write_field_csv(&tr.final_field, w)?))?;

    let tol = &cfg.tolerances;
    let mut rep = CheckReport::new("maximize");
    rep.holds("monotone objective", tr.is_monotone());
    rep.below(
        "constraint drift",
        tr.max_constraint_drift(),
        tol.ascent_constraint_drift,
    );
    rep.note(format!(
        "status {:?} after {} iterations, objective {:.12e}, residual {:.3e}",
        tr.status,
        tr.iterations,
        tr.final_objective(),
        tr.final_residual()
    ));
    let report = json!({
        "parameters": {
            "t": m.t,
            "nonlinearity": f.name(),
            "step": m.step,
            "max_iters": m.max_iters,
            "grad_tol": m.grad_tol,
            "recenter_every": m.recenter_every,
            "recenter_min_shift": m.recenter_min_shift,
            "seed_field": m.seed_field,
        },
        "grid": grid_json(&grid),
        "status": tr.status,
        "iterations": tr.iterations,
        "final_objective": tr.final_objective(),
        "final_residual": tr.final_residual(),
        "max_constraint_drift": tr.max_constraint_drift(),
        "recenterings": tr.recenter_shifts.len(),
    });
    let mut o = Outcome::from_checks("maximize".into(), &rep, report);
    if tr.status != Status::Converged {
        o.exit_code = 3;
        o.summary
            .push_str(&format!("\nascent stopped without converging ({:?})", tr.status));
    }
    Ok(o)
}

#[derive(Serialize)]
struct ComparisonRow {
    profile: usize,
    planted_energy: Option<f64>,
    recovered_energy: Option<f64>,
}

#[derive(Serialize)]
struct StepRow {
    step: usize,
    separation: Option<f64>,
    residual_dmu_norm: Option<f64>,
}

pub fn profiles(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let name = cfg
        .profiles
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::Config("no scenario given; expected none, single or pair".into()))?;
    let scenario = Scenario::by_name(name)?;
    let grid = cfg.grid.polar(&scenario.default_grid())?;
    let (rep, plant, r) = checks::profiles(scenario, &grid, &cfg.tolerances)?;

    let n = plant.energies.len().max(r.profile_energies.len());
    let rows: Vec<_> = (0..n)
        .map(|i| ComparisonRow {
            profile: i,
            planted_energy: plant.energies.get(i).copied(),
            recovered_energy: r.profile_energies.get(i).copied(),
        })
        .collect();
    out.csv("profiles.csv", &rows)?;
    let seps = r.separations(0, 1);
    let steps: Vec<_> = (0..plant.fields.len())
        .map(|k| StepRow {
            step: k,
            separation: seps.get(k).copied(),
            residual_dmu_norm: r.residual_dmu_norms.get(k).copied(),
        })
        .collect();
    out.csv("steps.csv", &steps)?;

    let report = json!({
        "scenario": name,
        "grid": grid_json(&grid),
        "planted_energies": plant.energies,
        "planted_centers": plant.centers,
        "recovered_energies": r.profile_energies,
        "recovered_centers": r.centers_per_step,
        "energy_sum": r.energy_sum,
        "max_input_energy": r.max_input_energy,
        "separations": seps,
        "residual_dmu_norms": r.residual_dmu_norms,
        "rejected_energy": r.rejected_energy,
        "status": r.status,
    });
    Ok(Outcome::from_checks(format!("profiles {name}"), &rep, report))
}
