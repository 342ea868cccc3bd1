import csv

import pytest

from oscfield.cli import main

ALGEBRA_CFG = """\
[run]
experiment = algebra-check
seed = 1

[modes]
L = 6.283185307179586
max_index = 1
max_modes = 2        # both helicities of the first lattice node

[truncation]
N_max = 4
M = 3
"""

FIELDS_CFG = """\
[run]
experiment = fields-check
seed = 42
[modes]
L = 6.283185307179586
max_index = 1
max_modes = 4
[truncation]
N_max = 14
"""

EMISSION_CFG = """\
[run]
experiment = emission
seed = 3
[modes]
L = 62.83185307179586     # kappa0 = 0.1
max_index = 14
[physics]
N_max = 1
omega0 = 1.0
T = 250
p_list = 0.5, 0.25, 0.25
"""

TWO_PHOTON_CFG = """\
[run]
experiment = two-photon
seed = 9
[modes]
L = 6.283185307179586
max_index = 1
max_modes = 2
[physics]
T = 40
p_list = 0.25, 0.5, 0.25
"""

BLACKBODY_CFG = """\
[run]
experiment = blackbody
[thermal]
beta = 1.0
mu_list = 0, -10
n_grid = 200
"""


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run(tmp_path, text, *extra):
    out = tmp_path / "out"
    code = main(["run", _write(tmp_path, text), "--out", str(out), *extra])
    return code, out


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_list_experiments(capsys):
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5
    for name in ("algebra-check", "fields-check", "emission", "two-photon",
                 "blackbody"):
        assert any(ln.startswith(name) for ln in lines)


def test_algebra_check_run(tmp_path, capsys):
    code, out = _run(tmp_path, ALGEBRA_CFG)
    assert code == 0
    text = (out / "report.txt").read_text()
    assert "all passed" in text
    assert capsys.readouterr().out == text
    rows = _read_csv(out / "algebra-check.csv")
    assert rows[0] == ["check", "deviation", "tol", "passed"]
    assert len(rows) > 5
    assert all(r[3] == "1" for r in rows[1:])


def test_fields_check_deterministic(tmp_path):
    cfg = _write(tmp_path, FIELDS_CFG)
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["run", cfg, "--out", str(out)]) == 0
        outs.append(out)
    first = (outs[0] / "fields-check.csv").read_bytes()
    second = (outs[1] / "fields-check.csv").read_bytes()
    assert first == second
    assert (outs[0] / "report.txt").read_bytes() \
        == (outs[1] / "report.txt").read_bytes()


def test_seed_override_changes_sample_points(tmp_path):
    cfg = _write(tmp_path, FIELDS_CFG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--out", str(out_a)]) == 0
    assert main(["run", cfg, "--out", str(out_b), "--seed", "43"]) == 0
    assert (out_a / "fields-check.csv").read_bytes() \
        != (out_b / "fields-check.csv").read_bytes()


def test_emission_run(tmp_path, capsys):
    code, out = _run(tmp_path, EMISSION_CFG)
    assert code == 0
    rows = _read_csv(out / "emission.csv")
    assert all(r[3] == "1" for r in rows[1:])
    text = capsys.readouterr().out
    assert "rate" in text


def test_two_photon_run(tmp_path):
    code, out = _run(tmp_path, TWO_PHOTON_CFG)
    assert code == 0
    text = (out / "report.txt").read_text()
    # p_list reaches the 3-sector, so the spectator identity rows must appear
    assert "p-stripped" in text
    assert "ratio = 3" in text


def test_blackbody_run(tmp_path):
    code, out = _run(tmp_path, BLACKBODY_CFG)
    assert code == 0
    rows = _read_csv(out / "blackbody.csv")
    assert rows[0] == ["mu", "omega_over_kT", "rho_new", "rho_planck",
                       "rel_dev"]
    assert len(rows) == 1 + 2 * 200
    by_mu = {}
    for r in rows[1:]:
        by_mu.setdefault(r[0], []).append(r)
        assert float(r[4]) >= 0.0
    assert sorted(by_mu) == ["-10.0", "0.0"]
    assert all(len(v) == 200 for v in by_mu.values())
    # far chemical potential hugs the Planck curve, mu = 0 visibly does not
    assert max(float(r[4]) for r in by_mu["-10.0"]) < 0.01
    assert max(float(r[4]) for r in by_mu["0.0"]) > 0.1


def test_failing_check_exits_one(tmp_path, capsys):
    cfg = FIELDS_CFG + "coherent_tol = 1e-18\n"
    code, out = _run(tmp_path, cfg)
    assert code == 1
    assert "FAILURES present" in (out / "report.txt").read_text()
    rows = _read_csv(out / "fields-check.csv")
    assert any(r[3] == "0" for r in rows[1:])


def test_missing_required_key(tmp_path, capsys):
    bad = "experiment = algebra-check\nL = 6.28\nmax_index = 1\nM = 3\n"
    code, _ = _run(tmp_path, bad)
    assert code == 2
    assert "N_max" in capsys.readouterr().err


def test_unknown_experiment(tmp_path, capsys):
    code, _ = _run(tmp_path, "experiment = warp-drive\n")
    assert code == 2
    err = capsys.readouterr().err
    assert "unknown experiment" in err and "blackbody" in err


def test_bad_numeric_value(tmp_path, capsys):
    cfg = ALGEBRA_CFG.replace("N_max = 4", "N_max = four")
    code, _ = _run(tmp_path, cfg)
    assert code == 2
    assert "N_max" in capsys.readouterr().err


def test_duplicate_key_rejected(tmp_path, capsys):
    cfg = ALGEBRA_CFG + "\n[truncation2]\n" \
        "experiment = algebra-check\n"
    code, _ = _run(tmp_path, cfg)
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_unwritable_output_dir(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    cfg = _write(tmp_path, BLACKBODY_CFG)
    code = main(["run", cfg, "--out", str(blocker / "sub")])
    assert code == 2
    assert "cannot write outputs" in capsys.readouterr().err


def test_headerless_config_accepted(tmp_path):
    cfg = "experiment = blackbody\nbeta = 1.0\nmu_list = 0, -10\nn_grid = 40\n"
    code, out = _run(tmp_path, cfg)
    assert code == 0
    assert (out / "blackbody.csv").exists()


def test_positive_mu_rejected(tmp_path, capsys):
    cfg = "experiment = blackbody\nbeta = 1.0\nmu_list = 0, 1\n"
    code, _ = _run(tmp_path, cfg)
    assert code == 2
    assert "mu_list" in capsys.readouterr().err


def test_seed_validation(tmp_path, capsys):
    code, _ = _run(tmp_path, BLACKBODY_CFG, "--seed", "-1")
    assert code == 2
    assert "64-bit" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    code = main(["run", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)])
    assert code == 2
    assert "cannot read config" in capsys.readouterr().err
