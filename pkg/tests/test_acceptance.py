"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line through the ``report`` fixture; the
lines are repeated in a summary section at the end of the pytest run.
"""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from confdim import cli, streams
from confdim.cloud import PointCloud
from confdim.conformal import Julia, Similarity, estimate_distortion, metric_sandwich_violations
from confdim.dimension import entropy_dimension, projection_sweep, scaling_entropy
from confdim.dynamics import (
    VERDICT_ATOMS,
    VERDICT_DENSE,
    VERDICT_SUFFICIENT,
    a2_verdict,
    density_diagnostic,
    orbit_sequence,
    star_discrepancy,
)
from confdim.gibbs import Potential, bowen_root, pressure, sample_cloud, verify_gibbs
from confdim.rotations import TWO_PI
from confdim.symbolic import InfiniteWord

from oracles import MORAN_HALF_THIRD, moran_half_quarter, uniform_interval_entropy

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
THREADS = os.cpu_count() or 1
BETA = MORAN_HALF_THIRD


def rotated_pair(angle=1.0):
    return Similarity.planar([1 / 3, 1 / 3], [angle, angle], [[0, 0], [2 / 3, 0]])


def run_cli(sub, config, out, **kw):
    status = cli.run(sub, CONFIGS / config, out, threads=kw.pop("threads", THREADS), **kw)
    assert status == 0, f"{sub} on {config} exited {status}"
    return out


def test_criterion_01_bowen_root(report):
    t = time.perf_counter()
    s1 = bowen_root(rotated_pair())
    s2 = bowen_root(Similarity.planar([0.5, 0.25], [0, 0], [[0, 0], [0.75, 0]]))
    dt = time.perf_counter() - t
    e1, e2 = abs(s1 - BETA), abs(s2 - moran_half_quarter())
    ok = e1 <= 1e-9 and e2 <= 1e-9 and abs(s2 - 0.694242) < 5e-7 and dt < 1.0
    report(1, ok, f"ratio 1/3: {s1:.12f} (err {e1:.1e}); ratios 1/2,1/4: {s2:.12f} (err {e2:.1e}); {dt:.2f}s")
    assert ok


def test_criterion_02_pressure(report):
    t = time.perf_counter()
    pb = pressure(Potential.bernoulli([0.2, 0.3, 0.5])).P_hat
    c = -0.35
    pc = pressure(Potential.constant(c, 3)).P_hat
    s, r = 0.8, 0.3
    pg = pressure(Potential.geometric(s, Similarity.planar([r] * 3, [0] * 3, [[0, 0], [1, 0], [0, 1]]))).P_hat
    dt = time.perf_counter() - t
    eb, ec, eg = abs(pb), abs(pc - (c + math.log(3))), abs(pg - (math.log(3) + s * math.log(r)))
    ok = eb <= 1e-12 and ec <= 1e-12 and eg <= 1e-10 and dt < 1.0
    report(2, ok, f"bernoulli |P| {eb:.1e}; constant err {ec:.1e}; geometric err {eg:.1e}; {dt:.2f}s")
    assert ok


def test_criterion_03_gibbs_sandwich_and_quasi_bernoulli(report):
    t = time.perf_counter()
    phi = Potential.markov([[0.1, -0.4], [-0.7, 0.3]])
    chk = verify_gibbs(phi, levels=range(1, 11), qs=range(1, 6), system=rotated_pair())
    dt = time.perf_counter() - t
    sandwich_ok = chk.max_violation <= 1e-12
    pairs_ok = all(c <= th for _, _, c, th in chk.qb_pairs)
    c_hat = chk.qb.c_hat
    trend_ok = all(b <= a + 1e-12 for a, b in zip(c_hat, c_hat[1:])) and c_hat[-1] < 1.05
    ok = sandwich_ok and pairs_ok and trend_ok and dt < 10
    report(3, ok, f"max log excess over Var_n {chk.max_violation:.3f} (levels 1..10, Var_n = {chk.var[1]} for n >= 2); "
                  f"pair ratios within bound: {pairs_ok}; c_q = {[round(v, 4) for v in c_hat]} "
                  f"(needs final < 1.05); {dt:.1f}s")
    assert ok


def test_criterion_04_bounded_distortion(report):
    t = time.perf_counter()
    sims = [rotated_pair(), Similarity.planar([0.5, 0.25], [0.3, -1], [[0, 0], [1, 0]])]
    sim_ok = all(estimate_distortion(s).C1_hat == 1.0 for s in sims)
    julia = Julia(complex(-3, 1))
    rep = estimate_distortion(julia, seed=0)
    (a1, _), (c1, _) = rep.history
    bad, worst = metric_sandwich_violations(julia, rep.C2_hat, 100_000, seed=1)
    dt = time.perf_counter() - t
    change = abs(c1 - a1) / a1
    ok = sim_ok and rep.stabilized and change < 0.01 and bad == 0 and dt < 60
    report(4, ok, f"similarity C1 = 1: {sim_ok}; Julia C1_hat {rep.C1_hat:.4f} (doubling change {change:.2%}), "
                  f"C2_hat {rep.C2_hat:.4f}, {bad} sandwich violations in 1e5 triples; {dt:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_05_entropy_dimension_oracles(report):
    t = time.perf_counter()
    cfg = json.loads((CONFIGS / "cantor.json").read_text())
    from confdim.conformal import from_descriptor

    cantor = sample_cloud(from_descriptor(cfg["system"]), Potential.bernoulli([0.5, 0.5]),
                          cfg["sampling"]["N"], cfg["seed"], depth=cfg["sampling"]["depth"])
    d_cantor, _ = entropy_dimension(cantor)
    square = PointCloud.uniform(streams.uniforms(5, "acceptance-square", 1_000_000, 2))
    d_square, _ = entropy_dimension(square)
    line = PointCloud.uniform(streams.uniforms(5, "acceptance-line", 1_000_000, 1))
    pt = scaling_entropy(line, 0.01)
    exact = uniform_interval_entropy(0.01)
    dt = time.perf_counter() - t
    ok = (abs(d_cantor - BETA) <= 0.03 and abs(d_square - 2) <= 0.05
          and abs(pt.H - exact) <= 3 * pt.se and dt < 120)
    report(5, ok, f"Cantor {d_cantor:.4f} (target {BETA:.4f} +- 0.03); square {d_square:.4f} (2 +- 0.05); "
                  f"H_0.01 {pt.H:.5f} vs {exact:.5f} ({abs(pt.H - exact) / pt.se:.2f} sigma); {dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_06_projection_sweep(report, tmp_path):
    t = time.perf_counter()
    a2 = a2_verdict(rotated_pair(), N=4096)
    out = run_cli("sweep", "rotated_pair.json", tmp_path / "sweep")
    dt = time.perf_counter() - t
    data = np.genfromtxt(out / "sweep.csv", delimiter=",", names=True)
    est = data["dim_e_hat"]
    lo, hi = float(est.min()), float(est.max())
    ok = a2.verdict == VERDICT_SUFFICIENT and len(est) == 180 and lo >= 0.58 and hi <= 0.66 and dt < 600
    report(6, ok, f"A2 {a2.verdict}; 180 angles, scales 3^-10..3^-4, N=1e6: min {lo:.4f} "
                  f"(needs >= 0.58), max {hi:.4f} (needs <= 0.66), mean {est.mean():.4f}; "
                  f"{dt:.0f}s on {THREADS} worker(s)")
    assert ok


@pytest.mark.slow
def test_criterion_07_negative_control(report):
    t = time.perf_counter()
    cfg = json.loads((CONFIGS / "product_cantor.json").read_text())
    from confdim.conformal import from_descriptor

    sysm = from_descriptor(cfg["system"])
    a2 = a2_verdict(sysm, N=4096)
    cloud = sample_cloud(sysm, Potential.bernoulli([0.25] * 4), cfg["sampling"]["N"], cfg["seed"],
                         depth=cfg["sampling"]["depth"])
    grid = np.geomspace(cfg["r_grid"]["r_min"], cfg["r_grid"]["r_max"], cfg["r_grid"]["count"])
    n = cfg["sweep"]["angles"]
    dirs = np.append(np.arange(n) * math.pi / n, 1.0)
    res = projection_sweep(cloud, dirs, grid, threads=THREADS)
    dt = time.perf_counter() - t
    low, generic = float(res.estimates[:-1].min()), float(res.estimates[-1])
    ok = a2.verdict == VERDICT_ATOMS and low <= 0.70 and generic > 0.95 and dt < 600
    report(7, ok, f"C x C (A2 {a2.verdict}): lowest of {n} angles {low:.4f} at {float(res.argmin):.3f} rad "
                  f"(needs <= 0.70); generic 1 rad {generic:.4f} (needs > 0.95); {dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_08_E_q_convergence(report, tmp_path):
    t = time.perf_counter()
    out = run_cli("eq", "rotated_pair.json", tmp_path / "eq")
    dt = time.perf_counter() - t
    data = np.genfromtxt(out / "eq.csv", delimiter=",", names=True)
    E, se = data["E_q_hat"], data["stderr"]
    mono = all(E[k + 1] >= E[k] - 2 * max(se[k], se[k + 1]) for k in range(len(E) - 1))
    ok = mono and abs(E[-1] - BETA) <= 0.1 and dt < 600
    report(8, ok, f"E_q for q=2..6: {[round(float(v), 4) for v in E]} (stderr up to {se.max():.3f}); "
                  f"monotone within 2 se: {mono}; |E_6 - {BETA:.4f}| = {abs(E[-1] - BETA):.4f}; {dt:.0f}s")
    assert ok


def test_criterion_09_rotation_orbits(report):
    t = time.perf_counter()
    word = InfiniteWord.periodic((0,))
    d_quarter = density_diagnostic(orbit_sequence(rotated_pair(math.pi / 2), word, 100_000))
    orb = orbit_sequence(rotated_pair(1.0), word, 100_000)
    disc = star_discrepancy(orb.angles / TWO_PI)
    julia = Julia(complex(-3, 1))
    d_julia = density_diagnostic(orbit_sequence(julia, word, 100_000))
    dt = time.perf_counter() - t
    ok = (d_quarter.verdict == VERDICT_ATOMS and d_quarter.n_clusters == 4 and disc < 0.01
          and d_julia.verdict == VERDICT_DENSE and dt < 30)
    report(9, ok, f"pi/2: {d_quarter.verdict} with {d_quarter.n_clusters} atoms; 1 rad: D* = {disc:.2e}; "
                  f"Julia fixed point: {d_julia.verdict} (D* = {d_julia.final_discrepancy:.2e}); {dt:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def distance_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("distance")
    t = time.perf_counter()
    run_cli("distance", "three_map_pin.json", base / "a")
    dt = time.perf_counter() - t
    run_cli("distance", "three_map_pin.json", base / "b")
    return base, dt


@pytest.mark.slow
def test_criterion_10_pin_distance(report, distance_runs):
    base, dt = distance_runs
    res = json.loads((base / "a" / "distance.json").read_text())
    est = res["dim_e_hat"]
    ok = est >= 0.9 and dt < 600
    report(10, ok, f"3-map ratio 0.45 (dim 1.3758), pin {np.round(res['pin'], 4).tolist()} in K: "
                   f"pin-distance dim_e_hat {est:.4f} +- {res['ci_halfwidth']:.3f} (needs >= 0.9); {dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_11_determinism(report, distance_runs, tmp_path):
    base, _ = distance_runs
    same = []
    same.append(((base / "a" / "distance.csv").read_bytes() == (base / "b" / "distance.csv").read_bytes(),
                 "distance.csv"))
    for sub, cfg, files in [("dimension", "cantor.json", ["entropy.csv"]),
                            ("orbit", "rotated_pair.json", ["orbit.csv"]),
                            ("gibbs-check", "rotated_pair.json", ["gibbs.csv", "quasi_bernoulli.csv"])]:
        for tag in ("a", "b"):
            run_cli(sub, cfg, tmp_path / f"{sub}-{tag}")
        for f in files:
            a = (tmp_path / f"{sub}-a" / f).read_bytes()
            b = (tmp_path / f"{sub}-b" / f).read_bytes()
            same.append((a == b, f))
    ok = all(s for s, _ in same)
    report(11, ok, "byte-identical reruns: " + ", ".join(f"{f} {'yes' if s else 'NO'}" for s, f in same))
    assert ok
