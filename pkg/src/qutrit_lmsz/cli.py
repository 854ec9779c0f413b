"""Command-line front end: ``qutrit-lmsz <command> [options]``.

Commands
--------
lmsz-probs        analytic full-sweep populations over a beta grid
evolve            time-resolved populations for one scenario
negativity-sweep  asymptotic negativity over a beta grid, with located maxima
noise             Monte Carlo ensemble against the strong-noise formulas
validate          self-check battery

Each command writes ``<out>/<command>.<format>`` plus a ``.meta.json``
sidecar holding everything run-dependent (timestamp, versions, timings), so
the primary artifact is byte-identical across runs with the same inputs.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import platform
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, analytic, entanglement, model
from .config import ScenarioConfig, load_config
from .errors import ConfigError, NonConvergenceError, PreconditionError, QutritError
from .noise import NoiseSpec, ensemble_average
from .propagator import PICTURES, WindowSpec, asymptotic_populations, evolve_state
from .validation import run_battery

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NONCONVERGENCE = 0, 1, 2, 3
OUT_ENV = "QUTRIT_LMSZ_OUT"

_PICTURE_LABELS = {
    "full": [analytic.ket_label((m1, m2)) for m1 in model.M_VALUES for m2 in model.M_VALUES],
    "minus": [analytic.ket_label(s) for s in model.BASIS4],
    "plus": [analytic.ket_label(s) for s in model.BASIS5],
    "core": [analytic.ket_label(s) for s in model.BASIS5[1:4]],
    "qubit1": ["|+>", "|->"],
    "qubit2": ["|+>", "|->"],
}


def _col(label: str) -> str:
    """Column-safe name for a ket label: |-1 0> -> p_m10."""
    body = label.strip("|>").replace("-", "m").replace("+", "p").replace(" ", "")
    return f"p_{body}"


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _write_table(path: Path, columns, units, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{c} [{u}]" for c, u in zip(columns, units)])
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _write_json(path: Path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Output:
    def __init__(self, args, command: str):
        self.dir = Path(args.out or os.environ.get(OUT_ENV) or ".")
        self.dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.format = args.format
        self.started = time.perf_counter()
        self.files = []

    def table(self, columns, units, rows, extra: Optional[dict] = None, name: Optional[str] = None):
        name = name or self.command
        if self.format == "csv":
            path = self.dir / f"{name}.csv"
            _write_table(path, columns, units, rows)
            self.files.append(path)
            if extra:
                self.report(extra, f"{name}.report")
        else:
            payload = {"columns": list(columns), "units": list(units),
                       "rows": [list(r) for r in rows]}
            if extra:
                payload.update(extra)
            self.report(payload, name)

    def report(self, payload: dict, name: Optional[str] = None):
        path = self.dir / f"{name or self.command}.json"
        _write_json(path, payload)
        self.files.append(path)

    def sidecar(self, args, status: str, extra: Optional[dict] = None):
        meta = {
            "command": self.command,
            "status": status,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "elapsed_s": round(time.perf_counter() - self.started, 3),
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "config": args.config,
            "seed": args.seed,
            "threads": args.threads,
            "artifacts": [p.name for p in self.files],
        }
        if extra:
            meta.update(extra)
        _write_json(self.dir / f"{self.command}.meta.json", meta)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _minus_initial(cfg: ScenarioConfig):
    if not isinstance(cfg.initial, str):
        raise ConfigError("config error at initial: lmsz-probs needs a ket label")
    from .config import parse_ket
    m = parse_ket(cfg.initial)
    if m not in model.BASIS4:
        raise ConfigError(f"config error at initial: {cfg.initial} is not a K = -1 state")
    return m


def cmd_lmsz_probs(args, cfg: ScenarioConfig, out: _Output) -> int:
    init = _minus_initial(cfg)
    states4 = [analytic.ket_label(s) for s in model.BASIS4]
    core_labels = [analytic.ket_label(s) for s in analytic._CORE_STATES]
    columns = ["beta_plus", "beta_minus", "P1", "P2"] + [_col(s) for s in states4]
    columns += ["P3"] + [f"core_{_col(s)}" for s in core_labels]
    if cfg.numeric:
        columns += [f"num_{_col(s)}" for s in states4] + [f"num_core_{_col(s)}" for s in core_labels]
    rows = []
    psi4 = np.zeros(4, complex)
    psi4[model.BASIS4.index(init)] = 1.0
    for bp in cfg.beta_grid:
        bm = bp / cfg.ratio
        p1, p2 = analytic.flip_probability(bm), analytic.flip_probability(bp)
        t4 = analytic.joint_probabilities_4d(p1, p2, init)
        p3 = analytic.flip_probability(bp)
        t3 = analytic.spin1_probabilities(p3)
        row = [bp, bm, p1, p2, *t4.probabilities, p3, *t3.probabilities]
        if cfg.numeric:
            gp, gm = math.sqrt(bp * cfg.alpha), math.sqrt(bm * cfg.alpha)
            s4 = model.HamiltonianSpec(0.5 * (gp + gm), 0.5 * (gp - gm), 0.0, model.LinearRamp(cfg.alpha))
            row += list(asymptotic_populations(s4, psi4, "minus").populations)
            g = math.sqrt(2.0 * bp * cfg.alpha)  # core flip parameter gamma^2 / (2 alpha) = bp
            s3 = model.HamiltonianSpec(0.5 * g, 0.5 * g, 0.0, model.LinearRamp(cfg.alpha))
            row += list(asymptotic_populations(s3, np.array([1, 0, 0], complex), "core").populations[::-1])
        rows.append(row)
    out.table(columns, ["1"] * len(columns), rows)
    return EXIT_OK


def cmd_evolve(args, cfg: ScenarioConfig, out: _Output) -> int:
    spec = cfg.hamiltonian_spec(noise=None)
    spec = model.HamiltonianSpec(spec.gamma_x, spec.gamma_y, spec.gamma_z, spec.omega1, spec.omega2,
                                 None, spec.decay)
    picture = cfg.picture
    psi0 = cfg.initial_state(picture)
    window = cfg.window
    taus = window.sample_points()
    if cfg.method == "exact":
        states = _exact_states(cfg, spec, psi0, taus)
    else:
        try:
            states = evolve_state(spec, psi0, window, picture).states
        except PreconditionError as e:
            raise ConfigError(f"config error at picture: {e}") from None
    pops = np.abs(states) ** 2
    norm = pops.sum(axis=1)
    labels = _PICTURE_LABELS[picture]
    columns = ["tau", "time"] + [_col(s) for s in labels] + ["norm"]
    units = ["1", "1/sqrt(alpha)"] + ["1"] * len(labels) + ["1"]
    kdiag = _k_diagonal(picture)
    if kdiag is not None:
        columns.append("K")
        units.append("1")
    if cfg.negativity:
        if picture in ("qubit1", "qubit2"):
            raise ConfigError("config error at negativity: not defined in a single-qubit picture")
        columns.append("negativity")
        units.append("1")
    rows = []
    sr = math.sqrt(spec.sweep_rate)
    for j, tau in enumerate(taus):
        row = [tau, tau / sr, *pops[j], norm[j]]
        if kdiag is not None:
            row.append(float(np.dot(kdiag, pops[j]) / norm[j]))
        if cfg.negativity:
            row.append(_state_negativity(picture, states[j]))
        rows.append(row)
    out.table(columns, units, rows)
    return EXIT_OK


def _k_diagonal(picture):
    if picture == "full":
        return np.real(np.diag(model.constant_of_motion_k()))
    if picture == "minus":
        return -np.ones(4)
    if picture in ("plus", "core"):
        return np.ones(PICTURES[picture])
    return None


def _state_negativity(picture, psi) -> float:
    n = np.linalg.norm(psi)
    psi = psi / n
    if picture == "minus":
        psi = entanglement.embed_4d(psi)
    elif picture == "plus":
        psi = model.DECOMPOSITION.embed5(psi)
    elif picture == "core":
        psi = entanglement.embed_core(psi)
    return entanglement.negativity(psi).value


def _exact_states(cfg: ScenarioConfig, spec, psi0, taus):
    if cfg.scenario != "stm_single_field" or abs(spec.gamma_z) > 0 or spec.decay is not None:
        raise ConfigError("config error at method: 'exact' needs scenario stm_single_field, "
                          "gamma_z = 0 and no decay")
    tau_i = cfg.window.tau_i
    a = spec.sweep_rate
    if cfg.picture == "minus":
        U = analytic.exact_u_minus(spec.gamma_plus**2 / a, spec.gamma_minus**2 / a, taus, tau_i)
    elif cfg.picture == "core":
        try:
            g = model.check_core_conditions(spec)
        except PreconditionError as e:
            raise ConfigError(f"config error at couplings: {e}") from None
        U = analytic.core_operator(g * g / (2 * a), taus, tau_i)
    else:
        raise ConfigError("config error at method: 'exact' is available for pictures minus and core")
    return np.einsum("nij,j->ni", U, psi0)


def _noise_target(cfg: ScenarioConfig, spec, picture, psi0):
    """Strong-noise prediction for the final populations, or None."""
    a = spec.sweep_rate
    if cfg.scenario != "stm_single_field" or spec.noise.placement != "omega1":
        return None
    if picture in ("qubit1", "qubit2"):
        beta = (spec.gamma_minus if picture == "qubit1" else spec.gamma_plus) ** 2 / a
        p = analytic.noisy_flip_probability(beta)
        return np.abs(psi0) ** 2 * (1 - p) + np.abs(psi0[::-1]) ** 2 * p
    if picture == "minus" and np.count_nonzero(psi0) == 1:
        init = model.BASIS4[int(np.flatnonzero(psi0)[0])]
        return analytic.noisy_joint_probabilities_4d(spec.gamma_minus**2 / a, spec.gamma_plus**2 / a,
                                                     init).probabilities
    if picture == "core" and np.count_nonzero(psi0) == 1 and np.flatnonzero(psi0)[0] in (0, 2):
        init = model.BASIS5[1 + int(np.flatnonzero(psi0)[0])]
        t = analytic.noisy_spin1_probabilities(2 * spec.gamma_plus**2 / a, init)
        return t.probabilities[::-1]
    return None


def cmd_noise(args, cfg: ScenarioConfig, out: _Output) -> int:
    if cfg.noise is None:
        raise ConfigError("config error at noise: the noise command needs a noise section")
    noise = cfg.noise
    if args.seed is not None:
        noise = NoiseSpec(noise.Gamma, args.seed, noise.dt_noise, noise.placement)
    spec = cfg.hamiltonian_spec(noise=noise)
    picture = cfg.picture
    psi0 = cfg.initial_state(picture)
    window = cfg.window if cfg.window_given else WindowSpec(-100.0, 100.0)
    try:
        res = ensemble_average(spec, psi0, window, cfg.n_realizations, picture, threads=args.threads)
    except PreconditionError as e:
        raise ConfigError(f"config error at picture: {e}") from None
    labels = _PICTURE_LABELS[picture]
    if noise.Gamma == 0:
        target = evolve_state(spec, psi0, WindowSpec(window.tau_i, window.tau_f, 1e-11, 1e-13),
                              picture).populations[-1]
        target_kind = "noiseless propagation"
    else:
        target = _noise_target(cfg, spec, picture, psi0)
        target_kind = "strong-noise formula" if target is not None else None
    rows = []
    z = res.z_scores(target) if target is not None else None
    for j, lab in enumerate(labels):
        row = [lab, res.mean_populations[j], res.std_errors[j]]
        if target is not None:
            row += [target[j], z[j]]
        rows.append(row)
    payload = {
        "picture": picture,
        "Gamma": noise.Gamma,
        "seed": noise.seed,
        "dt_noise": noise.dt_noise,
        "placement": noise.placement,
        "n_realizations": res.n_realizations,
        "window": [window.tau_i, window.tau_f],
        "states": labels,
        "mean": res.mean_populations,
        "std_error": res.std_errors,
        "target": target,
        "target_kind": target_kind,
        "z_scores": z,
        "max_abs_z": None if z is None else float(np.max(np.abs(z))),
    }
    if out.format == "csv":
        columns = ["state", "mean", "std_error"] + (["target", "z"] if target is not None else [])
        with open(out.dir / "noise.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"{c} [1]" if c != "state" else "state [-]" for c in columns])
            for r in rows:
                w.writerow([r[0]] + [_fmt(v) for v in r[1:]])
        out.files.append(out.dir / "noise.csv")
    else:
        out.report(payload)
    return EXIT_OK


def cmd_negativity_sweep(args, cfg: ScenarioConfig, out: _Output) -> int:
    grid = np.asarray(cfg.beta_grid)
    n4 = entanglement.asymptotic_negativity_4d(grid, grid / cfg.ratio)
    n3 = entanglement.asymptotic_negativity_3d(grid)
    lo, hi = float(grid.min()), float(grid.max())
    maxima4 = entanglement.negativity_maxima_4d(cfg.ratio, (lo, hi)) if hi > lo else []
    maxima3 = _maxima_3d((lo, hi)) if hi > lo else []
    rows = [[b, b / cfg.ratio, x, y] for b, x, y in zip(grid, np.atleast_1d(n4), np.atleast_1d(n3))]
    extra = {
        "ratio": cfg.ratio,
        "maxima_4d": [{"beta_plus": b, "negativity": n} for b, n in maxima4],
        "maxima_3d": [{"beta_core": b, "negativity": n} for b, n in maxima3],
    }
    out.table(["beta_plus", "beta_minus", "negativity_4d", "negativity_3d"], ["1"] * 4, rows, extra)
    return EXIT_OK


def _maxima_3d(beta_range, n_grid: int = 400):
    from scipy.optimize import minimize_scalar

    grid = np.geomspace(beta_range[0], beta_range[1], n_grid)
    vals = entanglement.asymptotic_negativity_3d(grid)
    out = []
    for i in range(1, n_grid - 1):
        if vals[i] >= vals[i - 1] and vals[i] > vals[i + 1]:
            res = minimize_scalar(lambda b: -entanglement.asymptotic_negativity_3d(b),
                                  bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
                                  options={"xtol": 1e-10})
            out.append((float(res.x), float(-res.fun)))
    return out


def cmd_validate(args, cfg: ScenarioConfig, out: _Output) -> int:
    seed = args.seed if args.seed is not None else (cfg.noise.seed if cfg.noise else 2024)
    try:
        results = run_battery(cfg.tolerances, cfg.noise_realizations, seed, args.threads)
    except KeyError as e:
        raise ConfigError(f"config error at validate.tolerances: {e.args[0]}") from None
    failed = [r.name for r in results if not r.passed]
    payload = {
        "checks": [{k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results],
        "passed": not failed,
        "failed": failed,
        "seed": seed,
        "noise_realizations": cfg.noise_realizations,
    }
    out.report(payload)
    out.timings = {r.name: r.seconds for r in results}
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3e} (tol {r.tolerance:.1e}) {r.detail}",
              file=sys.stderr)
    return EXIT_OK if not failed else EXIT_VALIDATION


COMMANDS = {
    "lmsz-probs": cmd_lmsz_probs,
    "evolve": cmd_evolve,
    "negativity-sweep": cmd_negativity_sweep,
    "noise": cmd_noise,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML scenario file")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or the working directory)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, help="override the noise seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for noise ensembles")
    p = argparse.ArgumentParser(prog="qutrit-lmsz", description="Two-qutrit sweep dynamics toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "lmsz-probs": "analytic full-sweep populations over a beta grid",
        "evolve": "time-resolved populations for one scenario",
        "negativity-sweep": "asymptotic negativity over a beta grid",
        "noise": "Monte Carlo ensemble under white longitudinal noise",
        "validate": "run the self-check battery",
    }
    for name, h in helps.items():
        sub.add_parser(name, parents=[common], help=h)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    out = None
    try:
        if args.threads < 1:
            raise ConfigError("config error at --threads: must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("config error at --seed: must be an unsigned 64-bit integer")
        cfg = load_config(args.config)
        out = _Output(args, args.command)
        code = COMMANDS[args.command](args, cfg, out)
        out.sidecar(args, "ok" if code == EXIT_OK else "validation_failed",
                    {"timings_s": getattr(out, "timings", None)})
        return code
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as e:
        print(f"non-convergence: {e}", file=sys.stderr)
        if out is not None:
            out.sidecar(args, "non_convergence", {"error": str(e)})
        return EXIT_NONCONVERGENCE
    except (QutritError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
