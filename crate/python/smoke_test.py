"""Smoke test for the tmdisk Python module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/tmdisk-*.whl
"""

import math
import os
import tempfile

import tmdisk


def check(cond, what):
    if not cond:
        raise AssertionError(what)
    print(f"ok  {what}")


def main():
    a = tmdisk.DiskPoint.from_polar(1.0, 0.3)
    b = tmdisk.DiskPoint(-0.2, 0.4)
    m = tmdisk.MobiusMap(a)
    check(abs(m.apply(a).re) < 1e-12 and abs(m.apply(a).im) < 1e-12, "shift sends its centre to the origin")
    check(abs(tmdisk.distance(m.apply(a), m.apply(b)) - tmdisk.distance(a, b)) < 1e-12, "shift is an isometry")
    o = tmdisk.DiskPoint(0.0, 0.0)
    check(abs(tmdisk.distance(o, tmdisk.DiskPoint(0.5, 0.0)) - math.atanh(0.5)) < 1e-12, "d(0, 0.5) = artanh 0.5")
    check(abs(tmdisk.ball_area(1.0) - math.pi * math.sinh(1.0) ** 2) < 1e-12, "ball area")
    try:
        tmdisk.DiskPoint(1.0, 0.0)
        raise AssertionError("boundary point accepted")
    except ValueError:
        print("ok  boundary point rejected")

    u = tmdisk.Field.bump(o, 2.0, n_rho=256, n_theta=128)
    u = u.scale(1.0 / math.sqrt(u.dirichlet_energy()))
    check(abs(u.dirichlet_energy() - 1.0) < 1e-12, "unit energy")
    check(u.hardy_ratio() >= 0.25 - 1e-3, "Hardy ratio above 1/4")
    check(tmdisk.Field.zeros(64, 32).dirichlet_energy() == 0.0, "zero field has zero energy")
    v = u.pullback(tmdisk.DiskPoint.from_polar(1.0, 0.0))
    check(abs(v.dirichlet_energy() - 1.0) < 1e-2, "pullback keeps the energy")
    t2, _ = u.tm_invariant(2 * math.pi)
    t4, sat = u.tm_invariant(4 * math.pi)
    check(0.0 < t2 <= t4 and not sat, "invariant TM integral is monotone in p")
    check(u.f_integral("quartic") > 0.0, "quartic integral")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "u.field")
        u.save(path)
        w = tmdisk.Field.load(path)
        check(w.values() == u.values() and w.shape == u.shape, "field file round trip")

    probe = tmdisk.moser_probe(1.0, 256)
    check(probe["verdict"] == "bounded" and len(probe["values"]) == 8, "critical Moser probe is bounded")

    c = tmdisk.cover(eps=0.5, cover_factor=3.0, rho_max=3.0, samples=20000)
    check(c["disjoint"] and c["coverage_gaps"] == 0, "covering is disjoint with no gaps")
    check(c["multiplicity"] <= c["multiplicity_bound"], "multiplicity below the volume bound")

    r = tmdisk.maximize(u, t=1.0, nonlinearity="quartic", max_iters=200)
    check(r["monotone"] and r["objective"] >= u.f_integral(), "ascent increases the objective")
    check(abs(r["field"].dirichlet_energy() - 1.0) < 1e-8, "ascent stays on the constraint")

    passed, summary = tmdisk.verify("dilation")
    check(passed, f"dilation suite: {summary}")
    print("all smoke tests passed")


if __name__ == "__main__":
    main()
