//! The numbered acceptance criteria, each a sequence of check suites from
//! [`tmdisk::checks`] run at the default tolerances.

use std::sync::Arc;

use tmdisk::checks::{self, CheckReport, CoveringSweep, LocalBoundSetup, Scenario};
use tmdisk::{PolarGrid, Result, Tolerances};

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub run: fn(&Tolerances) -> Result<CheckReport>,
}

/// Seed shared by the randomized criteria.
pub const SEED: u64 = 7;

fn default_grid() -> Arc<PolarGrid> {
    Arc::new(PolarGrid::default_grid())
}

fn geometry(tol: &Tolerances) -> Result<CheckReport> {
    Ok(checks::geometry(tol, 1000, SEED))
}

fn hardy(tol: &Tolerances) -> Result<CheckReport> {
    checks::hardy(&default_grid(), tol, SEED)
}

fn invariance(tol: &Tolerances) -> Result<CheckReport> {
    checks::invariance(&default_grid(), tol, true)
}

fn dilation(tol: &Tolerances) -> Result<CheckReport> {
    checks::dilation(tol)
}

fn probe(tol: &Tolerances) -> Result<CheckReport> {
    Ok(checks::probe(tol, 1024)?.0)
}

fn local_bound(tol: &Tolerances) -> Result<CheckReport> {
    checks::local_bound(&default_grid(), tol, &LocalBoundSetup::new(tol, 0))
}

fn covering(tol: &Tolerances) -> Result<CheckReport> {
    checks::covering(tol, &CoveringSweep::default(), SEED)
}

fn brezis_lieb(tol: &Tolerances) -> Result<CheckReport> {
    checks::brezis_lieb(&default_grid(), tol)
}

fn maximization(tol: &Tolerances) -> Result<CheckReport> {
    Ok(checks::maximization(&default_grid(), tol, SEED)?.0)
}

fn profiles(tol: &Tolerances) -> Result<CheckReport> {
    let grid = Arc::new(Scenario::Pair.default_grid());
    Ok(checks::profiles(Scenario::Pair, &grid, tol)?.0)
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "geometry exactness",
            run: geometry,
        },
        Criterion {
            id: 2,
            title: "Hardy lower bound",
            run: hardy,
        },
        Criterion {
            id: 3,
            title: "Möbius invariance",
            run: invariance,
        },
        Criterion {
            id: 4,
            title: "dilation invariance",
            run: dilation,
        },
        Criterion {
            id: 5,
            title: "critical boundedness vs supercritical growth",
            run: probe,
        },
        Criterion {
            id: 6,
            title: "local bound",
            run: local_bound,
        },
        Criterion {
            id: 7,
            title: "covering",
            run: covering,
        },
        Criterion {
            id: 8,
            title: "Brezis-Lieb defect decay",
            run: brezis_lieb,
        },
        Criterion {
            id: 9,
            title: "constrained maximization",
            run: maximization,
        },
        Criterion {
            id: 10,
            title: "profile decomposition",
            run: profiles,
        },
    ]
}
