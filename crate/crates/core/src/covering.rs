//! Greedy hyperbolic coverings by Möbius-translated geodesic balls.
//!
//! Centres `Z` are chosen from a ring lattice so that the balls `V_ε(z)` are
//! pairwise disjoint (`d(z, z') ≥ 2ε`) while the enlarged balls `V_R(z)`,
//! `R = cover_factor·ε`, cover the working region. Since Möbius shifts are
//! isometries, both properties reduce to distance comparisons.
//!
//! Multiplicity bound: if `x ∈ V_R(z)` for `m` centres, the `m` disjoint balls
//! `V_ε(z)` all lie in `V_{R+ε}(x)`, so `m ≤ μ(V_{R+ε}) / μ(V_ε)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::seeded_rng;
use crate::geom::{ball_area, circle_length, polar_distance, DiskPoint};

pub const DEFAULT_CANDIDATE_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoveringSpec {
    pub eps: f64,
    pub cover_factor: f64,
    pub rho_max: f64,
    pub lattice_step: f64,
    pub candidate_cap: u64,
}

impl CoveringSpec {
    /// Rejects non-positive parameters and `cover_factor < 2`. The soft
    /// requirements `cover_factor·ε < ρ_max` and `lattice_step ≤ ε` are
    /// reported by [`CoveringSpec::warnings`] instead.
    pub fn new(eps: f64, cover_factor: f64, rho_max: f64, lattice_step: f64) -> Result<Self> {
        let s = CoveringSpec {
            eps,
            cover_factor,
            rho_max,
            lattice_step,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(pos(self.eps) && pos(self.rho_max) && pos(self.lattice_step)) {
            return Err(Error::InvalidParameter(format!(
                "eps, rho_max and lattice_step must be positive (got {}, {}, {})",
                self.eps, self.rho_max, self.lattice_step
            )));
        }
        if !(self.cover_factor >= 2.0 && self.cover_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cover_factor must be at least 2, got {}",
                self.cover_factor
            )));
        }
        if self.rho_max > crate::geom::MAX_LIFT_RHO {
            return Err(Error::RhoTooLarge {
                rho: self.rho_max,
                max: crate::geom::MAX_LIFT_RHO,
            });
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.cover_factor * self.eps >= self.rho_max {
            w.push(format!(
                "cover radius {} is not below rho_max {}; the interior sample region is empty",
                self.cover_factor * self.eps,
                self.rho_max
            ));
        }
        if self.lattice_step > self.eps {
            w.push(format!(
                "lattice_step {} exceeds eps {}; coverage can fail",
                self.lattice_step, self.eps
            ));
        }
        w
    }

    pub fn cover_radius(&self) -> f64 {
        self.cover_factor * self.eps
    }

    /// Radius of the region where coverage is verified.
    pub fn interior_radius(&self) -> f64 {
        (self.rho_max - self.cover_radius()).max(0.0)
    }

    /// `⌊μ(V_{R+ε}) / μ(V_ε)⌋`.
    pub fn multiplicity_bound(&self) -> u64 {
        (ball_area(self.cover_radius() + self.eps) / ball_area(self.eps)).floor() as u64
    }

    fn rings(&self) -> Vec<(f64, u64)> {
        let j_max = (self.rho_max / self.lattice_step + 1e-12).floor() as u64;
        let mut rings = vec![(0.0, 1)];
        let per_ring = |rho: f64| (circle_length(rho) / self.lattice_step).ceil().max(1.0) as u64;
        for j in 1..=j_max {
            let rho = (j as f64 * self.lattice_step).min(self.rho_max);
            rings.push((rho, per_ring(rho)));
        }
        let top = j_max as f64 * self.lattice_step;
        if j_max >= 1 && self.rho_max - top > 0.5 * self.lattice_step {
            rings.push((self.rho_max, per_ring(self.rho_max)));
        }
        rings
    }

    /// Number of lattice candidates, without building them.
    pub fn candidate_count(&self) -> u64 {
        self.rings().iter().map(|r| r.1).sum()
    }
}

/// A candidate or centre in hyperbolic polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolarPoint {
    pub rho: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(rho: f64, theta: f64) -> Self {
        let t = theta.rem_euclid(TAU);
        PolarPoint {
            rho,
            theta: if t >= TAU { 0.0 } else { t },
        }
    }

    pub fn from_disk(z: DiskPoint) -> Self {
        let (rho, theta) = z.to_polar();
        PolarPoint { rho, theta }
    }

    pub fn to_disk(self) -> DiskPoint {
        DiskPoint::from_polar(self.rho, self.theta).expect("covering radii are below the lift limit")
    }

    pub fn distance(self, o: PolarPoint) -> f64 {
        polar_distance(self.rho, self.theta, o.rho, o.theta)
    }
}

/// Concentric rings at `ρ_j = j·step` with `⌈π sinh(2ρ_j)/step⌉` equally
/// spaced points each, plus a closing ring at `ρ_max` when the last regular
/// ring is more than `step/2` inside. Ordered by `(ρ, θ)`.
pub fn candidate_lattice(spec: &CoveringSpec) -> Result<Vec<PolarPoint>> {
    spec.validate()?;
    let count = spec.candidate_count();
    if count > spec.candidate_cap {
        return Err(Error::TooManyCandidates {
            count,
            cap: spec.candidate_cap,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    for (rho, n) in spec.rings() {
        for k in 0..n {
            out.push(PolarPoint {
                rho,
                theta: if rho == 0.0 { 0.0 } else { TAU * k as f64 / n as f64 },
            });
        }
    }
    Ok(out)
}

/// Bucketed point set supporting radius queries in the hyperbolic metric.
pub struct PolarIndex {
    band: f64,
    bands: Vec<BTreeMap<u64, Vec<usize>>>,
    points: Vec<PolarPoint>,
}

impl PolarIndex {
    pub fn new(band: f64) -> Self {
        PolarIndex {
            band,
            bands: Vec::new(),
            points: Vec::new(),
        }
    }

    pub fn from_points(band: f64, pts: &[PolarPoint]) -> Self {
        let mut ix = Self::new(band);
        for &p in pts {
            ix.insert(p);
        }
        ix
    }

    pub fn points(&self) -> &[PolarPoint] {
        &self.points
    }

    pub fn insert(&mut self, p: PolarPoint) -> usize {
        let b = (p.rho / self.band) as usize;
        if self.bands.len() <= b {
            self.bands.resize_with(b + 1, BTreeMap::new);
        }
        let id = self.points.len();
        self.bands[b].entry(p.theta.to_bits()).or_default().push(id);
        self.points.push(p);
        id
    }

    /// Calls `f(index, distance)` for every stored point with distance `< radius`;
    /// stops early when `f` returns `false`.
    pub fn visit_within(&self, q: PolarPoint, radius: f64, mut f: impl FnMut(usize, f64) -> bool) {
        if self.bands.is_empty() {
            return;
        }
        let lo_b = ((q.rho - radius).max(0.0) / self.band) as usize;
        let hi_b = (((q.rho + radius) / self.band) as usize).min(self.bands.len() - 1);
        let sr = radius.sinh();
        for b in lo_b..=hi_b.max(lo_b) {
            let Some(band) = self.bands.get(b) else { continue };
            let lo = b as f64 * self.band;
            // sinh²d ≥ sinh 2ρ_q · sinh 2ρ · sin²(Δθ/2) bounds the angular window
            let s = if lo > 0.0 && q.rho > 0.0 {
                sr / ((2.0 * q.rho).sinh() * (2.0 * lo).sinh()).sqrt()
            } else {
                f64::INFINITY
            };
            let mut visit = |ids: &Vec<usize>| -> bool {
                for &id in ids {
                    let d = q.distance(self.points[id]);
                    if d < radius && !f(id, d) {
                        return false;
                    }
                }
                true
            };
            let w = if s >= 1.0 {
                f64::INFINITY
            } else {
                2.0 * s.asin() * (1.0 + 1e-9) + 1e-12
            };
            if w >= std::f64::consts::PI {
                for ids in band.values() {
                    if !visit(ids) {
                        return;
                    }
                }
                continue;
            }
            let (a, c) = (q.theta - w, q.theta + w);
            let mut ranges: Vec<(f64, f64)> = Vec::with_capacity(2);
            if a < 0.0 {
                ranges.push((a + TAU, TAU));
                ranges.push((0.0, c));
            } else if c >= TAU {
                ranges.push((a, TAU));
                ranges.push((0.0, c - TAU));
            } else {
                ranges.push((a, c));
            }
            for (x, y) in ranges {
                for (_, ids) in band.range(x.max(0.0).to_bits()..=y.min(TAU).to_bits()) {
                    if !visit(ids) {
                        return;
                    }
                }
            }
        }
    }

    pub fn any_within(&self, q: PolarPoint, radius: f64) -> bool {
        let mut found = false;
        self.visit_within(q, radius, |_, _| {
            found = true;
            false
        });
        found
    }

    pub fn count_within(&self, q: PolarPoint, radius: f64) -> u64 {
        let mut n = 0;
        self.visit_within(q, radius, |_, _| {
            n += 1;
            true
        });
        n
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringResult {
    pub centers: Vec<PolarPoint>,
    pub eps: f64,
    pub cover_radius: f64,
    pub candidate_count: u64,
    /// Smallest pairwise centre distance (`+∞` for fewer than two centres).
    pub min_pairwise_distance: f64,
    pub disjoint: bool,
    pub multiplicity_empirical: u64,
    pub multiplicity_bound: u64,
    pub coverage_samples: u64,
    pub coverage_gap_count: u64,
    /// Candidates not within the cover radius of a centre (always 0 for a
    /// maximal selection; kept as a check).
    pub uncovered_candidates: u64,
}

impl CoveringResult {
    pub fn center_points(&self) -> Vec<DiskPoint> {
        self.centers.iter().map(|c| c.to_disk()).collect()
    }

    pub fn index(&self) -> PolarIndex {
        PolarIndex::from_points(self.cover_radius.max(2.0 * self.eps), &self.centers)
    }
}

fn sort_candidates(c: &[PolarPoint]) -> Vec<PolarPoint> {
    let mut v = c.to_vec();
    v.sort_by(|a, b| a.rho.total_cmp(&b.rho).then(a.theta.total_cmp(&b.theta)));
    v
}

/// Greedy maximal `2ε`-separated subset, scanning candidates by `(ρ, θ)`.
/// Runs single-threaded; the result depends on the scan order only.
pub fn greedy_select(candidates: &[PolarPoint], spec: &CoveringSpec) -> CoveringResult {
    let sep = 2.0 * spec.eps;
    let ordered = sort_candidates(candidates);
    let mut ix = PolarIndex::new(sep);
    for &c in &ordered {
        if !ix.any_within(c, sep) {
            ix.insert(c);
        }
    }
    let centers = ix.points().to_vec();
    let min_pairwise_distance = min_pairwise(&ix, 4.0 * spec.eps);
    let cover_ix = PolarIndex::from_points(spec.cover_radius(), &centers);
    let uncovered = ordered
        .par_iter()
        .filter(|&&c| !cover_ix.any_within(c, spec.cover_radius()))
        .count() as u64;
    CoveringResult {
        centers,
        eps: spec.eps,
        cover_radius: spec.cover_radius(),
        candidate_count: candidates.len() as u64,
        min_pairwise_distance,
        disjoint: min_pairwise_distance >= sep,
        multiplicity_empirical: 0,
        multiplicity_bound: spec.multiplicity_bound(),
        coverage_samples: 0,
        coverage_gap_count: 0,
        uncovered_candidates: uncovered,
    }
}

fn min_pairwise(ix: &PolarIndex, probe: f64) -> f64 {
    let pts = ix.points();
    let mut best = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut m = f64::INFINITY;
            ix.visit_within(pts[i], probe, |j, d| {
                if j != i {
                    m = m.min(d);
                }
                true
            });
            m
        })
        .reduce(|| f64::INFINITY, f64::min);
    if best.is_infinite() && pts.len() > 1 {
        // no pair within the probe radius: fall back to a full scan
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min(pts[i].distance(pts[j]));
            }
        }
    }
    best
}

/// `n` points uniformly distributed in `μ` on `V_radius(0)`.
pub fn uniform_samples(radius: f64, n: usize, seed: u64) -> Vec<PolarPoint> {
    let mut rng = seeded_rng(seed);
    let sr = radius.sinh();
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let t: f64 = rng.gen_range(0.0..TAU);
            PolarPoint::new((sr * u.sqrt()).asinh(), t)
        })
        .collect()
}

/// Sample points of the interior region not covered by any `V_R(z)`.
pub fn coverage_gaps(result: &CoveringResult, samples: &[PolarPoint]) -> u64 {
    let ix = result.index();
    samples
        .par_iter()
        .filter(|&&p| !ix.any_within(p, result.cover_radius))
        .count() as u64
}

/// Maximum over `samples` of the number of enlarged balls containing the point.
pub fn multiplicity_estimate(result: &CoveringResult, samples: &[PolarPoint]) -> u64 {
    let ix = result.index();
    samples
        .par_iter()
        .map(|&p| ix.count_within(p, result.cover_radius))
        .max()
        .unwrap_or(0)
}

/// Brute-force multiplicity for arbitrary point sets in disk coordinates.
pub fn multiplicity_brute_force(centers: &[DiskPoint], samples: &[DiskPoint], radius: f64) -> u64 {
    samples
        .par_iter()
        .map(|&x| {
            centers
                .iter()
                .filter(|&&z| crate::geom::geodesic_distance(x, z) < radius)
                .count() as u64
        })
        .max()
        .unwrap_or(0)
}

/// Lattice, greedy selection, and sampled coverage/multiplicity checks on
/// `samples` points of the interior region `V_{ρ_max − R}(0)`.
pub fn build_covering(spec: &CoveringSpec, samples: usize, seed: u64) -> Result<CoveringResult> {
    let cands = candidate_lattice(spec)?;
    let mut r = greedy_select(&cands, spec);
    let pts = uniform_samples(spec.interior_radius(), samples, seed);
    r.coverage_samples = pts.len() as u64;
    r.coverage_gap_count = coverage_gaps(&r, &pts);
    r.multiplicity_empirical = multiplicity_estimate(&r, &pts).max(u64::from(!r.centers.is_empty()));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rho_max_gives_origin_only() {
        let s = CoveringSpec::new(0.5, 3.0, 0.2, 0.25).unwrap();
        let c = candidate_lattice(&s).unwrap();
        assert_eq!(c, vec![PolarPoint { rho: 0.0, theta: 0.0 }]);
        let r = build_covering(&s, 100, 1).unwrap();
        assert_eq!(r.centers.len(), 1);
        assert_eq!(r.multiplicity_empirical, 1);
    }

    #[test]
    fn spec_validation() {
        assert!(CoveringSpec::new(0.0, 3.0, 4.0, 0.25).is_err());
        assert!(CoveringSpec::new(0.5, 1.5, 4.0, 0.25).is_err());
        assert!(CoveringSpec::new(0.5, 3.0, 4.0, 0.25).unwrap().warnings().is_empty());
        assert_eq!(CoveringSpec::new(0.5, 3.0, 4.0, 0.75).unwrap().warnings().len(), 1);
        let mut s = CoveringSpec::new(0.5, 3.0, 9.0, 0.1).unwrap();
        s.candidate_cap = 1000;
        assert!(matches!(candidate_lattice(&s), Err(Error::TooManyCandidates { .. })));
    }

    #[test]
    fn index_matches_brute_force() {
        let pts = uniform_samples(3.0, 2000, 5);
        let ix = PolarIndex::from_points(0.7, &pts);
        for q in uniform_samples(3.5, 50, 6) {
            for radius in [0.3, 1.0, 2.5] {
                let brute = pts.iter().filter(|p| q.distance(**p) < radius).count() as u64;
                assert_eq!(ix.count_within(q, radius), brute);
            }
        }
    }

    #[test]
    fn duplicated_candidates_give_same_centers() {
        let s = CoveringSpec::new(0.5, 3.0, 2.5, 0.25).unwrap();
        let c = candidate_lattice(&s).unwrap();
        let mut dup = c.clone();
        dup.extend_from_slice(&c);
        assert_eq!(greedy_select(&c, &s).centers, greedy_select(&dup, &s).centers);
    }

    #[test]
    fn lattice_is_step_dense() {
        let s = CoveringSpec::new(0.5, 3.0, 3.0, 0.25).unwrap();
        let c = candidate_lattice(&s).unwrap();
        let ix = PolarIndex::from_points(0.5, &c);
        for p in uniform_samples(3.0, 10_000, 11) {
            assert!(ix.any_within(p, 0.25), "{p:?}");
        }
    }
}
