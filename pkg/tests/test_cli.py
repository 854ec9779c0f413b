import json
import math

import numpy as np
import pytest

from qutrit_lmsz import cli, model
from qutrit_lmsz.config import load_config, parse_config, parse_ket
from qutrit_lmsz.errors import ConfigError


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def test_defaults():
    cfg = parse_config({})
    assert cfg.scenario == "stm_single_field"
    assert len(cfg.beta_grid) == 200
    assert cfg.beta_grid[0] == pytest.approx(0.01) and cfg.beta_grid[-1] == pytest.approx(2.0)
    assert cfg.ratio == 2.0


def test_ket_labels():
    assert parse_ket("|-1 0>") == (-1, 0)
    assert parse_ket("|-10>") == (-1, 0)
    assert parse_ket("|0-1>") == (0, -1)
    assert parse_ket("|1 1>") == (1, 1)
    with pytest.raises(ValueError):
        parse_ket("|2 0>")


def test_betas_to_couplings():
    cfg = parse_config({"betas": {"beta_plus": 0.22, "beta_minus": 0.11}, "alpha": 2.0})
    spec = cfg.hamiltonian_spec()
    assert spec.gamma_plus**2 / 2.0 == pytest.approx(0.22)
    assert spec.gamma_minus**2 / 2.0 == pytest.approx(0.11)


@pytest.mark.parametrize("scenario,check", [
    ("stm_single_field", lambda s: s.omega1(2.0) == 2.0 and s.omega2(2.0) == 0.0),
    ("both_fields_parallel", lambda s: s.omega1(2.0) == 1.0 and s.omega2(2.0) == 1.0),
    ("both_fields_antiparallel", lambda s: s.omega1(2.0) == 1.0 and s.omega2(2.0) == -1.0),
])
def test_scenarios(scenario, check):
    spec = parse_config({"scenario": scenario}).hamiltonian_spec()
    assert check(spec)
    assert spec.sweep_rate == 1.0


def test_custom_scenario_fields():
    cfg = parse_config({"scenario": "custom", "fields": {
        "omega1": {"kind": "linear_ramp", "alpha": 0.5},
        "omega2": {"kind": "constant", "omega": 0.2}}})
    spec = cfg.hamiltonian_spec()
    assert spec.omega1(2.0) == 1.0 and spec.omega2(5.0) == 0.2


def test_errors_name_field_and_line(tmp_path):
    path = _write(tmp_path, "c.yaml", "scenario: stm_single_field\nnoise:\n  Gamma: -3\n")
    with pytest.raises(ConfigError, match=r"noise\.Gamma \(line 3\)"):
        load_config(path)
    path = _write(tmp_path, "d.yaml", "alpha: 1.0\ncouplings:\n  gamma_x: abc\n")
    with pytest.raises(ConfigError, match=r"couplings\.gamma_x \(line 3\)"):
        load_config(path)


@pytest.mark.parametrize("doc,where", [
    ({"scenario": "nope"}, "scenario"),
    ({"alpha": 0}, "alpha"),
    ({"unknown": 1}, "unknown"),
    ({"picture": "mid"}, "picture"),
    ({"window": {"tau_i": 3, "tau_f": 1}}, "window.tau_f"),
    ({"beta_grid": {"start": 0, "spacing": "log"}}, "beta_grid.start"),
    ({"noise": {"Gamma": 1, "seed": -2}}, "noise.seed"),
    ({"initial": "|5 5>"}, "initial"),
    ({"betas": {"beta_plus": 1}, "couplings": {"gamma_x": 1}}, "betas"),
    ({"fields": {}}, "fields"),
])
def test_invalid_documents(doc, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        parse_config(doc)


def test_invalid_yaml(tmp_path):
    path = _write(tmp_path, "bad.yaml", "a: [1, 2\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(path)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "missing.yaml"))


def test_initial_state_projection():
    cfg = parse_config({"initial": "|-1 0>"})
    assert np.array_equal(cfg.initial_state("minus"), [0, 0, 0, 1])
    assert cfg.initial_state("full")[model.basis_index(-1, 0)] == 1
    with pytest.raises(ConfigError):
        cfg.initial_state("plus")
    amp = parse_config({"initial": [[1, 0], [0, 1]], "picture": "qubit1"}).initial_state()
    assert np.allclose(amp, np.array([1, 1j]) / math.sqrt(2))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _run(tmp_path, command, *extra, config=None):
    args = [command, "--out", str(tmp_path / "out")]
    if config:
        args += ["--config", _write(tmp_path, "cfg.yaml", config)]
    return cli.main(args + list(extra))


def test_lmsz_probs_csv(tmp_path):
    code = _run(tmp_path, "lmsz-probs", config="beta_grid: [0.11, 0.22]\n")
    assert code == 0
    lines = (tmp_path / "out" / "lmsz-probs.csv").read_text().splitlines()
    assert lines[0].startswith("beta_plus [1],beta_minus [1],P1 [1],P2 [1]")
    row = [float(x) for x in lines[2].split(",")]
    p1, p2 = 1 - math.exp(-2 * math.pi * 0.11), 1 - math.exp(-2 * math.pi * 0.22)
    assert row[2:4] == pytest.approx([p1, p2])
    assert row[4] == pytest.approx(p1 * p2)
    meta = json.loads((tmp_path / "out" / "lmsz-probs.meta.json").read_text())
    assert meta["status"] == "ok" and "timestamp" in meta


def test_lmsz_probs_numeric_columns(tmp_path):
    code = _run(tmp_path, "lmsz-probs", "--format", "json", config="beta_grid: [0.3]\nnumeric: true\n")
    assert code == 0
    d = json.loads((tmp_path / "out" / "lmsz-probs.json").read_text())
    row = dict(zip(d["columns"], d["rows"][0]))
    for s in ("p_10", "p_01", "p_0m1", "p_m10"):
        assert row[f"num_{s}"] == pytest.approx(row[s], abs=1e-2)
    for s in ("p_m11", "p_00", "p_1m1"):
        assert row[f"num_core_{s}"] == pytest.approx(row[f"core_{s}"], abs=1e-2)


def test_output_is_deterministic(tmp_path):
    cfg = "beta_grid: {start: 0.05, stop: 1.0, num: 7}\n"
    _run(tmp_path, "negativity-sweep", config=cfg)
    first = (tmp_path / "out" / "negativity-sweep.csv").read_bytes()
    rep1 = (tmp_path / "out" / "negativity-sweep.report.json").read_bytes()
    _run(tmp_path, "negativity-sweep", config=cfg)
    assert (tmp_path / "out" / "negativity-sweep.csv").read_bytes() == first
    assert (tmp_path / "out" / "negativity-sweep.report.json").read_bytes() == rep1


def test_negativity_sweep_maxima(tmp_path):
    assert _run(tmp_path, "negativity-sweep", "--format", "json") == 0
    d = json.loads((tmp_path / "out" / "negativity-sweep.json").read_text())
    b = [m["beta_plus"] for m in d["maxima_4d"]]
    assert b == pytest.approx([math.log(2) / (2 * math.pi), math.log(2) / math.pi], abs=1e-6)
    assert d["maxima_3d"][0]["negativity"] == pytest.approx(0.25 + math.sqrt(0.5))


def test_evolve_numeric_and_exact_agree(tmp_path):
    base = ("betas: {beta_plus: 0.3, beta_minus: 0.1}\npicture: minus\n"
            "window: {tau_i: -5, tau_f: 5, n_samples: 6}\nnegativity: true\n")
    assert _run(tmp_path, "evolve", "--format", "json", config=base) == 0
    num = json.loads((tmp_path / "out" / "evolve.json").read_text())
    assert _run(tmp_path, "evolve", "--format", "json", config=base + "method: exact\n") == 0
    ex = json.loads((tmp_path / "out" / "evolve.json").read_text())
    assert num["columns"] == ex["columns"]
    assert np.allclose(np.array(num["rows"]), np.array(ex["rows"]), atol=1e-8)
    k = num["columns"].index("K")
    assert all(r[k] == -1.0 for r in num["rows"])


def test_evolve_zero_window(tmp_path):
    cfg = 'window: {tau_i: 1, tau_f: 1, n_samples: 1}\ninitial: "|0 1>"\n'
    assert _run(tmp_path, "evolve", config=cfg) == 0
    rows = (tmp_path / "out" / "evolve.csv").read_text().splitlines()
    assert len(rows) == 2


def test_noise_command_report(tmp_path):
    cfg = ("couplings: {gamma_x: 0.25, gamma_y: -0.25}\npicture: qubit1\ninitial: [0, 1]\n"
           "window: {tau_i: -30, tau_f: 30}\nnoise: {Gamma: 4.0, seed: 3, n_realizations: 200}\n")
    assert _run(tmp_path, "noise", "--format", "json", "--threads", "2", config=cfg) == 0
    d = json.loads((tmp_path / "out" / "noise.json").read_text())
    assert d["target_kind"] == "strong-noise formula"
    assert d["n_realizations"] == 200 and d["seed"] == 3
    assert _run(tmp_path, "noise", "--format", "json", "--seed", "99", config=cfg) == 0
    assert json.loads((tmp_path / "out" / "noise.json").read_text())["seed"] == 99


def test_noise_command_requires_noise_section(tmp_path):
    assert _run(tmp_path, "noise", config="alpha: 1.0\n") == cli.EXIT_CONFIG


def test_config_error_exit_code(tmp_path, capsys):
    assert _run(tmp_path, "evolve", config="noise:\n  Gamma: -3\n") == cli.EXIT_CONFIG
    assert "noise.Gamma (line 2)" in capsys.readouterr().err
    assert cli.main(["evolve", "--threads", "0"]) == cli.EXIT_CONFIG
    assert cli.main(["bogus"]) == cli.EXIT_CONFIG


def test_core_picture_precondition_is_config_error(tmp_path):
    cfg = "couplings: {gamma_x: 0.3, gamma_y: 0.1}\npicture: core\ninitial: [1, 0, 0]\n"
    assert _run(tmp_path, "evolve", config=cfg) == cli.EXIT_CONFIG


def test_nonconvergence_exit_code(tmp_path, monkeypatch):
    from qutrit_lmsz.errors import NonConvergenceError

    def fail(*a, **k):
        raise NonConvergenceError("window doubling did not settle")

    monkeypatch.setattr(cli, "asymptotic_populations", fail)
    assert _run(tmp_path, "lmsz-probs", config="beta_grid: [0.3]\nnumeric: true\n") == cli.EXIT_NONCONVERGENCE
    meta = json.loads((tmp_path / "out" / "lmsz-probs.meta.json").read_text())
    assert meta["status"] == "non_convergence"


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["negativity-sweep", "--config", _write(tmp_path, "g.yaml", "beta_grid: [0.1, 0.2]\n")]) == 0
    assert (tmp_path / "envout" / "negativity-sweep.csv").exists()


def test_validate_reports_named_failure(tmp_path, monkeypatch):
    from qutrit_lmsz import validation

    calls = []

    def fake_battery(tolerances, n, seed, threads):
        calls.append((tolerances, n, seed))
        tol = tolerances.get("unitarity", 1e-9)
        return [validation.CheckResult("unitarity", 1e-11 < tol, 1e-11, tol, "stub")]

    monkeypatch.setattr(cli, "run_battery", fake_battery)
    cfg = "validate:\n  tolerances: {unitarity: 1.0e-30}\n  noise_realizations: 10\n"
    assert _run(tmp_path, "validate", "--format", "json", config=cfg) == cli.EXIT_VALIDATION
    d = json.loads((tmp_path / "out" / "validate.json").read_text())
    assert d["failed"] == ["unitarity"]
    assert calls[0] == ({"unitarity": 1e-30}, 10, 2024)
