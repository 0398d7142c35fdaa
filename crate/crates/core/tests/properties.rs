use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use tmdisk::covering::{candidate_lattice, greedy_select, CoveringSpec};
use tmdisk::families::{poly_bump, random_smooth_field, seeded_rng, truncated_log};
use tmdisk::functionals::{brezis_lieb_defect, f_integral, tm_invariant, Nonlinearity};
use tmdisk::transform::{dilate_radial, pullback};
use tmdisk::variational::moser::{summarize, ProbeEntry, Verdict, GROWTH_FACTOR};
use tmdisk::{geodesic_distance, hardy_ratio, DiskPoint, GridFunction, MobiusMap, PolarGrid, RadialGrid};

fn small_grid() -> Arc<PolarGrid> {
    Arc::new(PolarGrid::uniform(96, 48, 8.0).unwrap())
}

fn point(max_rho: f64) -> impl Strategy<Value = DiskPoint> {
    (0.0..max_rho, 0.0..2.0 * PI).prop_map(|(r, t)| DiskPoint::from_polar(r, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mobius_isometry_and_round_trip(z in point(2.5), a in point(2.5), b in point(2.5)) {
        let m = MobiusMap::new(z);
        let d = geodesic_distance(a, b);
        prop_assert!((geodesic_distance(m.apply(a), m.apply(b)) - d).abs() <= 1e-12 * d.max(1.0));
        let back = m.inverse().apply(m.apply(a));
        prop_assert!((back.to_complex() - a.to_complex()).norm() < 1e-12);
        prop_assert!(m.apply(z).abs() < 1e-12);
        prop_assert!(m.apply(a).abs() < 1.0);
    }

    #[test]
    fn distance_is_a_metric(a in point(3.0), b in point(3.0), c in point(3.0)) {
        let (ab, bc, ac) = (geodesic_distance(a, b), geodesic_distance(b, c), geodesic_distance(a, c));
        prop_assert!((ab - geodesic_distance(b, a)).abs() < 1e-12 * ab.max(1.0));
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert_eq!(geodesic_distance(a, a), 0.0);
    }

    #[test]
    fn points_outside_the_disk_are_rejected(r in 1.0f64..3.0, t in 0.0..2.0 * PI) {
        prop_assert!(DiskPoint::new(r * t.cos(), r * t.sin()).is_err());
    }

    #[test]
    fn dilations_compose(s in 0.5f64..2.0, t in 0.5f64..2.0, level in 0.5f64..3.0) {
        let g = Arc::new(RadialGrid::uniform(200, 6.0).unwrap());
        let u = truncated_log(g, level).unwrap();
        let st = dilate_radial(&dilate_radial(&u, s).unwrap(), t).unwrap();
        let direct = dilate_radial(&u, s * t).unwrap();
        for (x, y) in st.values().iter().zip(direct.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((st.dirichlet_energy() - u.dirichlet_energy()).abs() < 1e-9 * u.dirichlet_energy());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_is_a_quadratic_form(seed in 0u64..1000, c in -5.0f64..5.0) {
        let g = small_grid();
        let mut rng = seeded_rng(seed);
        let u = random_smooth_field(g.clone(), &mut rng, 1.5).unwrap();
        let v = random_smooth_field(g, &mut rng, 1.5).unwrap();
        let (eu, ev) = (u.dirichlet_energy(), v.dirichlet_energy());
        let lhs = u.add(&v).unwrap().dirichlet_energy() + u.sub(&v).unwrap().dirichlet_energy();
        prop_assert!((lhs - 2.0 * (eu + ev)).abs() < 1e-10 * (eu + ev));
        prop_assert!((u.scale(c).dirichlet_energy() - c * c * eu).abs() < 1e-10 * eu.max(1e-300) * (1.0 + c * c));
        let inner = u.energy_inner(&v).unwrap();
        prop_assert!(inner * inner <= eu * ev * (1.0 + 1e-12));
    }

    #[test]
    fn hardy_ratio_is_scale_free_and_above_a_quarter(seed in 0u64..1000, c in 0.1f64..10.0) {
        let mut rng = seeded_rng(seed);
        let u = random_smooth_field(small_grid(), &mut rng, 2.0).unwrap();
        let h = hardy_ratio(&u).unwrap();
        prop_assert!((hardy_ratio(&u.scale(c)).unwrap() - h).abs() < 1e-12 * h);
        prop_assert!(h >= 0.25 - 1e-3);
    }

    #[test]
    fn tm_integral_is_monotone_in_p(seed in 0u64..1000, p in 0.5f64..12.0, dp in 0.0f64..2.0) {
        let mut rng = seeded_rng(seed);
        let u = random_smooth_field(small_grid(), &mut rng, 1.0).unwrap();
        let a = tm_invariant(&u, p).unwrap();
        let b = tm_invariant(&u, p + dp).unwrap();
        prop_assert!(b.value >= a.value);
    }

    #[test]
    fn brezis_lieb_vanishes_on_trivial_splits(seed in 0u64..1000) {
        let mut rng = seeded_rng(seed);
        let g = small_grid();
        let u = random_smooth_field(g.clone(), &mut rng, 1.0).unwrap();
        let f = Nonlinearity::quartic();
        prop_assert_eq!(brezis_lieb_defect(&u, &u, &f).unwrap().value, 0.0);
        prop_assert_eq!(brezis_lieb_defect(&u, &tmdisk::Field::zeros(g), &f).unwrap().value, 0.0);
    }

    #[test]
    fn pullback_of_origin_is_identity_and_shift_keeps_mass(seed in 0u64..1000, z in point(0.6)) {
        let g = small_grid();
        let mut rng = seeded_rng(seed);
        let u = random_smooth_field(g, &mut rng, 0.5).unwrap();
        let same = pullback(&u, DiskPoint::ORIGIN).field;
        prop_assert_eq!(same.values(), u.values());
        let f = Nonlinearity::quartic();
        let a = f_integral(&u, &f).value;
        let b = f_integral(&pullback(&u, z).field, &f).value;
        prop_assert!((a - b).abs() < 0.05 * a);
    }

    #[test]
    fn greedy_selection_is_separated_and_ignores_duplicates(
        eps in 0.3f64..0.8,
        factor in 2.0f64..4.0,
        rho_max in 0.5f64..2.5,
    ) {
        let spec = CoveringSpec::new(eps, factor, rho_max, 0.5 * eps).unwrap();
        let cands = candidate_lattice(&spec).unwrap();
        let r = greedy_select(&cands, &spec);
        prop_assert!(r.disjoint);
        for (i, a) in r.centers.iter().enumerate() {
            for b in &r.centers[i + 1..] {
                prop_assert!(a.distance(*b) >= 2.0 * eps);
            }
        }
        prop_assert_eq!(r.uncovered_candidates, 0);
        let mut doubled = cands.clone();
        doubled.extend(cands.iter().rev());
        prop_assert_eq!(greedy_select(&doubled, &spec).centers, r.centers);
    }

    #[test]
    fn probe_verdict_follows_the_growth_rule(values in prop::collection::vec(0.01f64..100.0, 2..10)) {
        let entries: Vec<ProbeEntry> = values
            .iter()
            .enumerate()
            .map(|(i, &value)| ProbeEntry { k: 2 << i, value, saturated: false, tail_warning: false })
            .collect();
        let r = summarize(1.0, entries);
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        let min = values.iter().cloned().fold(f64::MAX, f64::min);
        let growing = max / min >= GROWTH_FACTOR && values[values.len() - 1] >= max;
        prop_assert_eq!(r.verdict == Verdict::Growing, growing);
    }
}

#[test]
fn bump_pullback_stays_inside_grid() {
    let g = small_grid();
    let u = poly_bump(g, DiskPoint::ORIGIN, 1.0, 1.0).unwrap();
    let p = pullback(&u, DiskPoint::from_polar(2.0, 0.0).unwrap());
    assert!(p.leak.is_none());
    let far = pullback(&u, DiskPoint::from_polar(7.5, 0.0).unwrap());
    assert!(far.leak.is_some());
}
