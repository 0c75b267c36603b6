import csv
import json
import subprocess
import sys

import pytest

from confdim import cli
from confdim.config import ConfigError, digest, load_config

PAIR = {
    "kind": "similarity2d",
    "maps": [
        {"ratio": 1 / 3, "angle_rad": 1.0, "translation": [0.0, 0.0]},
        {"ratio": 1 / 3, "angle_rad": 1.0, "translation": [2 / 3, 0.0]},
    ],
}
SMALL = {
    "system": PAIR,
    "potential": {"kind": "bernoulli", "p": [0.5, 0.5]},
    "seed": 3,
    "sampling": {"N": 5000, "depth": 16, "write_cloud": True},
    "r_grid": {"r_min": 0.005, "r_max": 0.05, "count": 5},
    "sweep": {"angles": 4},
    "eq": {"qs": [2, 3], "n_rotations": 8},
    "gibbs": {"levels": 4, "qs": [1, 2]},
    "orbit": {"period": [0], "N": 2000},
    "distance": {"pin_word": [0]},
    "pressure": {"n_max": 8, "bowen": True},
}
JULIA = {"system": {"kind": "julia", "c_re": -3.0, "c_im": 1.0}, "seed": 1,
         "validate": {"n_samples": 500, "n_triples": 2000, "orbit_N": 1024}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2))
    return p


def run(tmp_path, sub, cfg, out="out", **kw):
    cfg_path = cfg if not isinstance(cfg, dict) else write(tmp_path, cfg)
    return cli.run(sub, cfg_path, tmp_path / out, **kw)


@pytest.mark.parametrize("sub,files", [
    ("pressure", ["pressure.csv", "pressure.json"]),
    ("gibbs-check", ["gibbs.csv", "quasi_bernoulli.csv", "gibbs.json"]),
    ("dimension", ["entropy.csv", "dimension.json", "cloud.csv"]),
    ("orbit", ["orbit.csv", "orbit.json"]),
    ("eq", ["eq.csv"]),
    ("sweep", ["sweep.csv", "sweep.json"]),
    ("distance", ["distance.csv", "distance.json"]),
])
def test_subcommands_write_outputs_and_manifest(tmp_path, sub, files):
    assert run(tmp_path, sub, SMALL) == 0
    out = tmp_path / "out"
    man = json.loads((out / "manifest.json").read_text())
    assert [o["file"] for o in man["outputs"]] == files
    assert man["config_digest"] == digest(man["config"])
    assert man["seed"] == 3 and man["exit_status"] == 0
    for f in files:
        assert (out / f).stat().st_size > 0


def test_csv_headers(tmp_path):
    run(tmp_path, "sweep", SMALL)
    header = (tmp_path / "out" / "sweep.csv").read_text().splitlines()[0]
    assert header == "angle_rad,dim_e_hat,ci_halfwidth,r_min,r_max,n_samples"
    run(tmp_path, "eq", SMALL, out="eq")
    rows = list(csv.reader(open(tmp_path / "eq" / "eq.csv")))
    assert rows[0] == ["q", "E_q_hat", "stderr", "beta_ref"] and len(rows) == 3
    run(tmp_path, "orbit", SMALL, out="orb")
    rows = list(csv.reader(open(tmp_path / "orb" / "orbit.csv")))
    assert rows[0] == ["n", "angle_rad", "running_discrepancy"] and len(rows) == 2001


def test_determinism_byte_identical(tmp_path):
    for out in ("a", "b"):
        assert run(tmp_path, "sweep", SMALL, out=out) == 0
        assert run(tmp_path, "dimension", SMALL, out=out + "d") == 0
    for f in ("a/sweep.csv", "ad/entropy.csv", "ad/cloud.csv"):
        g = f.replace("a", "b", 1)
        assert (tmp_path / f).read_bytes() == (tmp_path / g).read_bytes()


def test_seed_override_changes_output(tmp_path):
    run(tmp_path, "dimension", SMALL, out="a")
    run(tmp_path, "dimension", SMALL, out="b", seed=99)
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["seed"] == 99
    assert (tmp_path / "a" / "cloud.csv").read_bytes() != (tmp_path / "b" / "cloud.csv").read_bytes()


def test_input_not_mutated(tmp_path):
    p = write(tmp_path, SMALL)
    before = p.read_bytes()
    run(tmp_path, "dimension", p, seed=5)
    assert p.read_bytes() == before


def test_validate_julia_exit_zero(tmp_path, capsys):
    assert run(tmp_path, "validate", JULIA) == 0
    res = json.loads((tmp_path / "out" / "validate.json").read_text())
    assert res["A2"]["orbit_verdict"] == "consistent-with-dense"
    assert all(c["passed"] for c in res["checks"])


def test_validate_julia_c0_exit_two(tmp_path):
    cfg = dict(JULIA, system={"kind": "julia", "c_re": 0.0, "c_im": 0.0})
    assert run(tmp_path, "validate", cfg) == 2


def test_validate_rational_rotation_exit_two(tmp_path):
    sysm = {"kind": "similarity2d", "maps": [dict(m, angle_rad=1.5707963267948966) for m in PAIR["maps"]]}
    assert run(tmp_path, "validate", {"system": sysm, "seed": 0, "validate": {"orbit_N": 1024}}) == 2


def test_malformed_json_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "seed": 1,\n  "system": {\n}}}\n')
    assert cli.run("validate", p, tmp_path / "o") == 1
    err = capsys.readouterr().err
    assert "bad.json:4:" in err and "malformed JSON" in err


def test_schema_error_names_field_and_line(tmp_path, capsys):
    bad = {"system": {"kind": "julia", "c_re": -3.0}, "seed": 1}
    assert run(tmp_path, "validate", bad) == 1
    err = capsys.readouterr().err
    assert "field 'system'" in err and "c_im" in err and "cfg.json:2" in err


def test_unknown_kind_and_missing_blocks(tmp_path):
    with pytest.raises(ConfigError, match="unknown kind"):
        load_config(write(tmp_path, {"system": {"kind": "spiral"}, "seed": 0}))
    with pytest.raises(ConfigError, match="needs field"):
        load_config(write(tmp_path, {"system": PAIR, "seed": 0}), "sweep")
    with pytest.raises(ConfigError, match="seed"):
        load_config(write(tmp_path, {"system": PAIR}))


def test_digest_stable_under_key_order():
    a = {"seed": 1, "system": PAIR}
    b = {"system": dict(reversed(list(PAIR.items()))), "seed": 1}
    assert digest(a) == digest(b)


def test_potential_symbol_mismatch(tmp_path, capsys):
    cfg = dict(SMALL, potential={"kind": "bernoulli", "p": [0.2, 0.3, 0.5]})
    assert run(tmp_path, "pressure", cfg) == 1
    assert "symbols" in capsys.readouterr().err


def test_console_script(tmp_path):
    p = write(tmp_path, SMALL)
    proc = subprocess.run([sys.executable, "-m", "confdim.cli", "pressure", "--config", str(p), "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "P_hat" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "confdim.cli", "bogus"], capture_output=True, text=True)
    assert proc.returncode != 0
