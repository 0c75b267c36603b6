"""Command-line entry point: ``confdim <subcommand> --config PATH --out DIR``.

Exit status is 0 on success, 2 when a validation run reports a failed
assumption, and 1 on any error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, digest, load_config, sha256_file, write_csv, write_json

log = logging.getLogger("confdim")

SUBCOMMANDS = ("validate", "pressure", "gibbs-check", "dimension", "orbit", "eq", "sweep", "distance")


# ---------------------------------------------------------------------------
# builders


def _system(cfg):
    from .conformal import from_descriptor

    return from_descriptor(cfg["system"])


def _potential(cfg, system):
    from .gibbs import Potential, bowen_root

    desc = dict(cfg["potential"])
    if desc.get("kind") == "geometric" and desc.get("s") == "bowen":
        desc["s"] = bowen_root(system)
    phi = Potential.from_descriptor(desc, system)
    if phi.m != system.m:
        raise ConfigError(f"potential has {phi.m} symbols but the system has {system.m} maps")
    return phi


def _cloud(cfg, system, phi):
    from .gibbs import sample_cloud
    from .symbolic import build_refined_alphabet

    s = cfg["sampling"]
    alphabet = None
    if "q" in s:
        alphabet = build_refined_alphabet(system.ratio_fn(), system.rho, s["q"], system.m)
    return sample_cloud(system, phi, s["N"], cfg["seed"], depth=s.get("depth"), alphabet=alphabet)


def _r_grid(cfg):
    g = cfg.get("r_grid")
    if g is None:
        return None
    if g["r_min"] >= g["r_max"]:
        raise ConfigError("field 'r_grid': r_min must be below r_max")
    if g.get("geometric", True):
        return np.geomspace(g["r_min"], g["r_max"], g["count"])
    return np.linspace(g["r_min"], g["r_max"], g["count"])


def _beta_ref(cfg, block, system, phi, k):
    from .conformal import Similarity
    from .gibbs import similarity_dimension

    if "beta_ref" in cfg.get(block, {}):
        return float(cfg[block]["beta_ref"]), "config"
    if isinstance(system, Similarity) and phi.finite_range:
        return min(k, similarity_dimension(system, phi)), "closed-form"
    return None, "unavailable"


def _c1(system):
    from .conformal import estimate_distortion

    return estimate_distortion(system, n_words=200, n_pairs=32, seed=0).C1_hat


# ---------------------------------------------------------------------------
# subcommands; each returns (outputs, status)


def cmd_validate(cfg, out: Path, threads: int):
    from .conformal import estimate_distortion, metric_sandwich_violations, validate_assumptions
    from .dynamics import VERDICT_ATOMS, a2_verdict, density_diagnostic, orbit_sequence
    from .symbolic import InfiniteWord

    system = _system(cfg)
    v = cfg.get("validate", {})
    report = validate_assumptions(system, n_samples=v.get("n_samples", 4000), seed=cfg["seed"])
    rows = [(c.name, c.passed, c.value, c.detail) for c in report.checks]
    result = {"checks": [dict(name=c.name, passed=c.passed, value=c.value, detail=c.detail) for c in report.checks]}
    status = 0 if report.passed else 2
    if report.passed:
        dist = estimate_distortion(system, seed=cfg["seed"])
        bad, worst = metric_sandwich_violations(system, dist.C2_hat, v.get("n_triples", 20000), cfg["seed"])
        result["distortion"] = {"C1_hat": dist.C1_hat, "C2_hat": dist.C2_hat, "stabilized": dist.stabilized,
                                "sandwich_violations": bad, "sandwich_worst": worst}
        rows.append(("bounded distortion C1", dist.stabilized, dist.C1_hat, "stabilized under doubling"))
        rows.append(("metric sandwich C2", bad == 0, dist.C2_hat, f"{bad} violations"))
        N = v.get("orbit_N", 4096)
        if system.d == 1:
            a2 = {"verdict": "trivial", "orbit_verdict": "trivial", "detail": "SO(1) is trivial"}
        elif system.d == 2:
            rep = a2_verdict(system, N=N)
            a2 = {"verdict": rep.verdict, "orbit_verdict": rep.orbit_verdict,
                  "witness": list(rep.witness) if rep.witness else None, "discrepancy": rep.discrepancy}
        else:
            diag = density_diagnostic(orbit_sequence(system, InfiniteWord.periodic((0,), system.m), N))
            a2 = {"verdict": diag.verdict, "orbit_verdict": diag.verdict, "discrepancy": diag.final_discrepancy}
        result["A2"] = a2
        rows.append(("A2 density", a2["orbit_verdict"] != VERDICT_ATOMS, None, a2["verdict"]))
        if a2["orbit_verdict"] == VERDICT_ATOMS:
            status = 2
    result["status"] = "pass" if status == 0 else "assumption-failure"
    write_csv(out / "validate.csv", ["check", "passed", "value", "detail"], rows)
    write_json(out / "validate.json", result)
    for name, passed, value, detail in rows:
        flag = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
        print(f"{flag:4s}  {name}  {'' if value is None else value}  {detail}")
    return ["validate.csv", "validate.json"], status


def cmd_pressure(cfg, out: Path, threads: int):
    from .gibbs import bowen_root, pressure, pressure_exact

    system = _system(cfg)
    phi = _potential(cfg, system)
    p = cfg.get("pressure", {})
    res = pressure(phi, p.get("n_max"))
    rows = [(n + 1, t, inc) for n, (t, inc) in enumerate(zip(res.trace, res.increments))]
    write_csv(out / "pressure.csv", ["n", "P_n", "increment"], rows)
    summary = {"P_hat": res.P_hat, "stabilized": res.stabilized, "n_max": len(res.trace)}
    if phi.finite_range:
        summary["P_transfer_matrix"] = pressure_exact(phi)
    if p.get("bowen"):
        summary["bowen_root"] = bowen_root(system)
    write_json(out / "pressure.json", summary)
    print(f"P_hat = {res.P_hat!r}")
    return ["pressure.csv", "pressure.json"], 0


def cmd_gibbs(cfg, out: Path, threads: int):
    from .gibbs import verify_gibbs

    system = _system(cfg)
    phi = _potential(cfg, system)
    g = cfg.get("gibbs", {})
    chk = verify_gibbs(phi, levels=range(1, g.get("levels", 10) + 1), qs=g.get("qs", [1, 2, 3, 4, 5]), system=system)
    write_csv(out / "gibbs.csv", ["n", "sandwich_slack", "var_n", "within_certificate"],
              [(n, s, v, s <= v + 1e-12) for n, s, v in zip(chk.levels, chk.slack, chk.var)])
    rows = []
    if chk.qb is not None:
        rows = [(q, nq, c, t, c <= t) for q, nq, c, t in zip(chk.qb.q, chk.qb.n_q, chk.qb.c_hat, chk.qb.c_theory)]
    write_csv(out / "quasi_bernoulli.csv", ["q", "n_q", "c_hat", "c_theory", "within_certificate"], rows)
    write_json(out / "gibbs.json", {"max_sandwich_violation": chk.max_violation,
                                    "level_pairs": [list(p) for p in chk.qb_pairs]})
    print(f"max sandwich violation (log scale) = {chk.max_violation!r}")
    return ["gibbs.csv", "quasi_bernoulli.csv", "gibbs.json"], 0


def cmd_dimension(cfg, out: Path, threads: int):
    from .dimension import entropy_dimension

    system = _system(cfg)
    phi = _potential(cfg, system)
    cloud = _cloud(cfg, system, phi)
    dim, curve = entropy_dimension(cloud, _r_grid(cfg))
    write_csv(out / "entropy.csv", ["r", "H_r_hat", "jackknife_err"], curve.rows())
    beta, src = _beta_ref(cfg, "dimension", system, phi, system.d)
    write_json(out / "dimension.json", {"dim_e_hat": dim, "ci_halfwidth": curve.ci_halfwidth, "r_min": curve.r_min,
                                        "r_max": curve.r_max, "fit_radii": curve.r[curve.window],
                                        "n_samples": cloud.n, "reference": beta, "reference_source": src})
    files = ["entropy.csv", "dimension.json"]
    if cfg["sampling"].get("write_cloud"):
        cloud.to_csv(out / "cloud.csv")
        files.append("cloud.csv")
    print(f"dim_e_hat = {dim:.6f} +- {curve.ci_halfwidth:.2g}")
    return files, 0


def cmd_orbit(cfg, out: Path, threads: int):
    from .dynamics import a2_verdict, density_diagnostic, orbit_sequence
    from .symbolic import InfiniteWord

    system = _system(cfg)
    o = cfg["orbit"]
    if o.get("random_tail"):
        word = InfiniteWord(tuple(o.get("prefix", ())), (), cfg["seed"], system.m)
    else:
        word = InfiniteWord(tuple(o.get("prefix", ())), tuple(o.get("period", (0,))), None, system.m)
    if any(s >= system.m for s in word.prefix + word.period):
        raise ConfigError(f"field 'orbit': symbols must be below {system.m}")
    orbit = orbit_sequence(system, word, o["N"], o.get("depth"))
    diag = density_diagnostic(orbit)
    running = dict(zip(diag.checkpoints.tolist(), diag.discrepancy.tolist()))
    if system.d == 2:
        header = ["n", "angle_rad", "running_discrepancy"]
        rows = [(n + 1, float(a), running.get(n + 1)) for n, a in enumerate(orbit.entries)]
    else:
        d = system.d
        header = ["n"] + [f"o_{i + 1}{j + 1}" for i in range(d) for j in range(d)] + ["running_discrepancy"]
        rows = [(n + 1, *map(float, m.ravel()), running.get(n + 1)) for n, m in enumerate(orbit.entries)]
    write_csv(out / "orbit.csv", header, rows)
    summary = {"verdict": diag.verdict, "n_clusters": diag.n_clusters, "clusters_for_half_mass": diag.clusters_for_half,
               "final_discrepancy": diag.final_discrepancy, **diag.extra}
    if system.d == 2:
        rep = a2_verdict(system)
        summary["A2"] = {"verdict": rep.verdict, "witness": list(rep.witness) if rep.witness else None}
    write_json(out / "orbit.json", summary)
    print(f"orbit verdict: {diag.verdict}, discrepancy {diag.final_discrepancy:.4g}")
    return ["orbit.csv", "orbit.json"], 0


def _projection(system, k):
    from .dimension import ProjectionSpec

    if system.d == 2 and k == 1:
        return ProjectionSpec.line(0.0)
    return ProjectionSpec.coordinate(system.d, range(k))


def cmd_eq(cfg, out: Path, threads: int):
    from .dimension import E_q_table

    system = _system(cfg)
    phi = _potential(cfg, system)
    e = cfg["eq"]
    k = e.get("k", 1)
    cloud = _cloud(cfg, system, phi)
    beta, _ = _beta_ref(cfg, "eq", system, phi, k)
    mean, se, _ = E_q_table(_projection(system, k), cloud, e["qs"], _c1(system), system.rho,
                            e.get("n_rotations", 32), cfg["seed"], threads)
    write_csv(out / "eq.csv", ["q", "E_q_hat", "stderr", "beta_ref"],
              [(q, m, s, beta) for q, m, s in zip(e["qs"], mean, se)])
    for q, m, s in zip(e["qs"], mean, se):
        print(f"E_{q} = {m:.4f} +- {s:.4f}")
    return ["eq.csv"], 0


def cmd_sweep(cfg, out: Path, threads: int):
    from .dimension import projection_sweep

    system = _system(cfg)
    phi = _potential(cfg, system)
    sw = cfg["sweep"]
    k = sw.get("k", 1)
    cloud = _cloud(cfg, system, phi)
    beta, src = _beta_ref(cfg, "sweep", system, phi, k)
    res = projection_sweep(cloud, sw["angles"], _r_grid(cfg), beta, k=k, seed=cfg["seed"], threads=threads)
    write_csv(out / "sweep.csv", ["angle_rad", "dim_e_hat", "ci_halfwidth", "r_min", "r_max", "n_samples"],
              [(float(a), e, c, res.r_min, res.r_max, res.n_samples)
               for a, e, c in zip(res.directions, res.estimates, res.ci_halfwidth)])
    write_json(out / "sweep.json", {"min": res.minimum, "max": float(res.estimates.max()),
                                    "argmin": float(res.argmin), "beta_ref": beta, "beta_source": src})
    print(f"min over directions = {res.minimum:.4f}, max = {res.estimates.max():.4f}, beta_ref = {beta}")
    return ["sweep.csv", "sweep.json"], 0


def cmd_distance(cfg, out: Path, threads: int):
    from .dimension import pin_distance_dimension
    from .dynamics import periodic_point

    system = _system(cfg)
    phi = _potential(cfg, system)
    dcfg = cfg["distance"]
    if "pin" in dcfg:
        pin = np.asarray(dcfg["pin"], dtype=float)
    else:
        pin = periodic_point(system, tuple(dcfg.get("pin_word", (0,))))
    cloud = _cloud(cfg, system, phi)
    dim, curve = pin_distance_dimension(cloud, pin, _r_grid(cfg), dcfg.get("eps"))
    rows = [] if curve is None else curve.rows()
    write_csv(out / "distance.csv", ["r", "H_r_hat", "jackknife_err"], rows)
    write_json(out / "distance.json", {"pin": pin, "dim_e_hat": dim,
                                       "ci_halfwidth": None if curve is None else curve.ci_halfwidth})
    print(f"pin-distance dim_e_hat = {dim:.4f}")
    return ["distance.csv", "distance.json"], 0


COMMANDS = {
    "validate": cmd_validate,
    "pressure": cmd_pressure,
    "gibbs-check": cmd_gibbs,
    "dimension": cmd_dimension,
    "orbit": cmd_orbit,
    "eq": cmd_eq,
    "sweep": cmd_sweep,
    "distance": cmd_distance,
}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="confdim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"confdim {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path, help="experiment config (JSON)")
        s.add_argument("--out", required=True, type=Path, help="output directory")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--threads", type=int, default=1, help="maximum worker count")
    return p


def _setup_logging():
    level = os.environ.get("CONFDIM_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("confdim").setLevel(levels.get(level, logging.WARNING))


def run(subcommand: str, config: Path, out: Path, seed: int | None = None, threads: int = 1) -> int:
    """Run one subcommand and write its files plus ``manifest.json``; returns the exit status."""
    start = time.perf_counter()
    try:
        if seed is not None and not 0 <= seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(config, subcommand, seed)
        out.mkdir(parents=True, exist_ok=True)
        files, status = COMMANDS[subcommand](cfg, out, threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # reported, never a traceback for users
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    manifest = {
        "tool": "confdim",
        "tool_version": __version__,
        "subcommand": subcommand,
        "config": cfg,
        "config_digest": digest(cfg),
        "seed": cfg["seed"],
        "threads": threads,
        "wall_time_s": round(time.perf_counter() - start, 3),
        "exit_status": status,
        "outputs": [{"file": f, "sha256": sha256_file(out / f)} for f in files],
    }
    write_json(out / "manifest.json", manifest)
    return status


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
