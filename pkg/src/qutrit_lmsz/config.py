"""Scenario configuration documents (YAML).

Schema (every key optional unless a command needs it)::

    scenario: stm_single_field      # | both_fields_parallel | both_fields_antiparallel | custom
    alpha: 1.0                      # sweep rate
    couplings: {gamma_x: 0.3, gamma_y: 0.1, gamma_z: 0.0}
    betas: {beta_plus: 0.22, beta_minus: 0.11}   # alternative to couplings (gamma_z from couplings)
    fields:                         # only for scenario: custom
      omega1: {kind: linear_ramp, alpha: 1.0}
      omega2: {kind: constant, omega: 0.0}
    beta_grid: {start: 0.01, stop: 2.0, num: 200, spacing: log}   # or an explicit list
    ratio: 2.0                      # beta_plus / beta_minus in 4D sweeps
    initial: "|-1 0>"               # ket label, or amplitudes [[re, im], ...] in the picture basis
    picture: full                   # full | minus | plus | core | qubit1 | qubit2
    window: {tau_i: -20, tau_f: 20, n_samples: 2001, rel_tol: 1e-10, abs_tol: 1e-12}
    method: numeric                 # evolve: numeric | exact
    negativity: false               # evolve: add a negativity column
    numeric: false                  # lmsz-probs: add propagated asymptotic columns
    noise: {Gamma: 4.0, seed: 2024, dt_noise: 0.05, placement: omega1, n_realizations: 10000}
    decay: {rate1: 0.0, rate2: 0.0}
    validate: {tolerances: {check_name: value}, noise_realizations: 2000}

Scenarios fix the fields: ``stm_single_field`` has omega1 = alpha t and
omega2 = 0; ``both_fields_parallel`` has omega1 = omega2 = alpha t / 2;
``both_fields_antiparallel`` has omega1 = -omega2 = alpha t / 2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from . import model
from .errors import ConfigError
from .noise import NoiseSpec
from .propagator import PICTURES, WindowSpec

__all__ = ["ScenarioConfig", "load_config", "parse_config", "parse_ket"]

SCENARIOS = ("stm_single_field", "both_fields_parallel", "both_fields_antiparallel", "custom")
_TOP_KEYS = {
    "scenario", "alpha", "couplings", "betas", "fields", "beta_grid", "ratio", "initial",
    "picture", "window", "method", "negativity", "numeric", "noise", "decay", "validate",
}


def _line_map(text: str) -> dict:
    """Map dotted key paths to 1-based line numbers."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = f"{path}.{k.value}" if path else str(k.value)
                lines[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                p = f"{path}[{i}]"
                lines[p] = v.start_mark.line + 1
                walk(v, p)

    if root is not None:
        walk(root, "")
    return lines


class _Ctx:
    def __init__(self, lines: dict):
        self.lines = lines

    def error(self, path: str, msg: str) -> ConfigError:
        line = self.lines.get(path)
        where = f"{path} (line {line})" if line else path
        return ConfigError(f"config error at {where}: {msg}")

    def number(self, d: dict, key: str, path: str, default=None, minimum=None, positive=False):
        if key not in d or d[key] is None:
            if default is None:
                raise self.error(f"{path}{key}", "required value missing")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.error(f"{path}{key}", f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise self.error(f"{path}{key}", "must be finite")
        if positive and not v > 0:
            raise self.error(f"{path}{key}", f"must be positive, got {v}")
        if minimum is not None and v < minimum:
            raise self.error(f"{path}{key}", f"must be >= {minimum}, got {v}")
        return v

    def mapping(self, d: dict, key: str, path: str = "") -> dict:
        v = d.get(key) or {}
        if not isinstance(v, dict):
            raise self.error(f"{path}{key}", "expected a mapping")
        return v


_KET = re.compile(r"^\|\s*(-?1|0)\s*,?\s*(-?1|0)\s*>$")


def parse_ket(label: str):
    """'|-1 0>' or '|-10>' -> (m1, m2)."""
    s = label.strip()
    m = _KET.match(s)
    if not m:
        compact = re.match(r"^\|(-?[01])(-?[01])>$", s.replace(" ", ""))
        if not compact:
            raise ValueError(f"cannot parse ket label {label!r}")
        m = compact
    return int(m.group(1)), int(m.group(2))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "stm_single_field"
    alpha: float = 1.0
    gamma_x: float = 0.0
    gamma_y: float = 0.0
    gamma_z: float = 0.0
    fields: Optional[tuple] = None
    beta_grid: tuple = ()
    ratio: float = 2.0
    initial: Any = "|-1 0>"
    picture: str = "full"
    window: WindowSpec = field(default_factory=lambda: WindowSpec(-20.0, 20.0))
    window_given: bool = False
    method: str = "numeric"
    negativity: bool = False
    numeric: bool = False
    noise: Optional[NoiseSpec] = None
    n_realizations: int = 10000
    decay: Optional[model.Decay] = None
    tolerances: dict = field(default_factory=dict)
    noise_realizations: int = 2000
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def field_protocols(self):
        a = self.alpha
        if self.scenario == "stm_single_field":
            return model.LinearRamp(a), model.Constant(0.0)
        if self.scenario == "both_fields_parallel":
            return model.HalfRamp(a), model.HalfRamp(a)
        if self.scenario == "both_fields_antiparallel":
            return model.HalfRamp(a), model.Negated(model.HalfRamp(a))
        return self.fields

    def hamiltonian_spec(self, noise: Optional[NoiseSpec] = None) -> model.HamiltonianSpec:
        w1, w2 = self.field_protocols()
        return model.HamiltonianSpec(self.gamma_x, self.gamma_y, self.gamma_z, w1, w2,
                                     noise if noise is not None else self.noise, self.decay)

    def initial_state(self, picture: Optional[str] = None) -> np.ndarray:
        """Initial amplitudes in the basis of ``picture``."""
        picture = picture or self.picture
        dim = PICTURES[picture]
        if isinstance(self.initial, str):
            m = parse_ket(self.initial)
            full = model.product_state(*m)
            if picture == "full":
                return full
            d = model.DECOMPOSITION
            if picture == "minus":
                idx = d.index4
            elif picture == "plus":
                idx = d.index5
            elif picture == "core":
                idx = d.index5[1:4]
            else:
                raise ConfigError(f"config error at initial: give amplitudes for picture {picture!r}")
            v = full[idx]
            if np.linalg.norm(v) == 0:
                raise ConfigError(f"config error at initial: {self.initial} is not in picture {picture!r}")
            return v
        v = np.asarray(self.initial, dtype=complex)
        if v.size != dim:
            raise ConfigError(f"config error at initial: picture {picture!r} needs {dim} amplitudes")
        return v / np.linalg.norm(v)


def _parse_amplitudes(ctx: _Ctx, v):
    out = []
    for i, a in enumerate(v):
        if isinstance(a, (int, float)) and not isinstance(a, bool):
            out.append(complex(a))
        elif isinstance(a, (list, tuple)) and len(a) == 2 and all(isinstance(x, (int, float)) for x in a):
            out.append(complex(a[0], a[1]))
        elif isinstance(a, str):
            try:
                out.append(complex(a.replace(" ", "")))
            except ValueError:
                raise ctx.error(f"initial[{i}]", f"cannot parse amplitude {a!r}") from None
        else:
            raise ctx.error(f"initial[{i}]", f"cannot parse amplitude {a!r}")
    if np.linalg.norm(out) == 0:
        raise ctx.error("initial", "amplitude vector is zero")
    return tuple(out)


def _parse_grid(ctx: _Ctx, v) -> tuple:
    if v is None:
        return tuple(np.geomspace(0.01, 2.0, 200).tolist())
    if isinstance(v, list):
        vals = []
        for i, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or x < 0:
                raise ctx.error(f"beta_grid[{i}]", f"expected a non-negative number, got {x!r}")
            vals.append(float(x))
        if not vals:
            raise ctx.error("beta_grid", "empty grid")
        return tuple(vals)
    if not isinstance(v, dict):
        raise ctx.error("beta_grid", "expected a list or a mapping")
    spacing = v.get("spacing", "log")
    start = ctx.number(v, "start", "beta_grid.", 0.01, minimum=0.0)
    stop = ctx.number(v, "stop", "beta_grid.", 2.0, minimum=0.0)
    num = v.get("num", 200)
    if isinstance(num, bool) or not isinstance(num, int) or num < 1:
        raise ctx.error("beta_grid.num", f"expected a positive integer, got {num!r}")
    if spacing == "log":
        if start <= 0:
            raise ctx.error("beta_grid.start", "log spacing needs start > 0")
        return tuple(np.geomspace(start, stop, num).tolist())
    if spacing == "linear":
        return tuple(np.linspace(start, stop, num).tolist())
    raise ctx.error("beta_grid.spacing", f"expected 'log' or 'linear', got {spacing!r}")


def parse_config(data: dict, text: str = "") -> ScenarioConfig:
    """Validate a parsed document; ``text`` (the source) enables line numbers."""
    ctx = _Ctx(_line_map(text) if text else {})
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config error: top level must be a mapping")
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise ctx.error(unknown[0], f"unknown key (allowed: {', '.join(sorted(_TOP_KEYS))})")

    scenario = data.get("scenario", "stm_single_field")
    if scenario not in SCENARIOS:
        raise ctx.error("scenario", f"expected one of {SCENARIOS}, got {scenario!r}")
    alpha = ctx.number(data, "alpha", "", 1.0, positive=True)

    coup = ctx.mapping(data, "couplings")
    betas = ctx.mapping(data, "betas")
    gz = ctx.number(coup, "gamma_z", "couplings.", 0.0)
    if betas and ("gamma_x" in coup or "gamma_y" in coup):
        raise ctx.error("betas", "give either couplings.gamma_x/gamma_y or betas, not both")
    if betas:
        bp = ctx.number(betas, "beta_plus", "betas.", 0.0, minimum=0.0)
        bm = ctx.number(betas, "beta_minus", "betas.", 0.0, minimum=0.0)
        gp, gm = math.sqrt(bp * alpha), math.sqrt(bm * alpha)
        gx, gy = 0.5 * (gp + gm), 0.5 * (gp - gm)
    else:
        gx = ctx.number(coup, "gamma_x", "couplings.", 0.0)
        gy = ctx.number(coup, "gamma_y", "couplings.", 0.0)

    fields = None
    if scenario == "custom":
        f = ctx.mapping(data, "fields")
        try:
            fields = (model.field_from_dict(f["omega1"]), model.field_from_dict(f["omega2"]))
        except KeyError as e:
            raise ctx.error(f"fields.{e.args[0]}", "required for scenario 'custom'") from None
        except (TypeError, ValueError) as e:
            raise ctx.error("fields", str(e)) from None
    elif "fields" in data:
        raise ctx.error("fields", "only allowed with scenario 'custom'")

    picture = data.get("picture", "full")
    if picture not in PICTURES:
        raise ctx.error("picture", f"expected one of {sorted(PICTURES)}, got {picture!r}")

    initial = data.get("initial", "|-1 0>")
    if isinstance(initial, str):
        try:
            parse_ket(initial)
        except ValueError as e:
            raise ctx.error("initial", str(e)) from None
    elif isinstance(initial, list):
        initial = _parse_amplitudes(ctx, initial)
    else:
        raise ctx.error("initial", "expected a ket label or a list of amplitudes")

    w = ctx.mapping(data, "window")
    window_given = bool(w)
    tau_i = ctx.number(w, "tau_i", "window.", -20.0)
    tau_f = ctx.number(w, "tau_f", "window.", 20.0)
    if tau_f < tau_i:
        raise ctx.error("window.tau_f", f"must be >= tau_i ({tau_i})")
    n_samples = w.get("n_samples", 2001)
    if isinstance(n_samples, bool) or not isinstance(n_samples, int) or n_samples < 1:
        raise ctx.error("window.n_samples", f"expected a positive integer, got {n_samples!r}")
    window = WindowSpec(
        tau_i, tau_f,
        ctx.number(w, "rel_tol", "window.", 1e-10, positive=True),
        ctx.number(w, "abs_tol", "window.", 1e-12, positive=True),
        ctx.number(w, "max_step", "window.", math.inf, positive=True),
        n_samples,
    )

    method = data.get("method", "numeric")
    if method not in ("numeric", "exact"):
        raise ctx.error("method", f"expected 'numeric' or 'exact', got {method!r}")
    for key in ("negativity", "numeric"):
        if key in data and not isinstance(data[key], bool):
            raise ctx.error(key, "expected true or false")

    noise = None
    n_real = 10000
    if "noise" in data:
        nd = ctx.mapping(data, "noise")
        seed = nd.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ctx.error("noise.seed", f"expected an unsigned 64-bit integer, got {seed!r}")
        placement = nd.get("placement", "omega1")
        if placement not in ("omega1", "omega2", "both"):
            raise ctx.error("noise.placement", f"expected omega1, omega2 or both, got {placement!r}")
        n_real = nd.get("n_realizations", 10000)
        if isinstance(n_real, bool) or not isinstance(n_real, int) or n_real < 1:
            raise ctx.error("noise.n_realizations", f"expected a positive integer, got {n_real!r}")
        noise = NoiseSpec(
            ctx.number(nd, "Gamma", "noise.", minimum=0.0),
            seed,
            ctx.number(nd, "dt_noise", "noise.", 0.05, positive=True),
            placement,
        )

    decay = None
    if "decay" in data:
        dd = ctx.mapping(data, "decay")
        decay = model.Decay(ctx.number(dd, "rate1", "decay.", 0.0, minimum=0.0),
                            ctx.number(dd, "rate2", "decay.", 0.0, minimum=0.0))

    val = ctx.mapping(data, "validate")
    tols = val.get("tolerances", {}) or {}
    if not isinstance(tols, dict):
        raise ctx.error("validate.tolerances", "expected a mapping")
    for k in tols:
        ctx.number(tols, k, "validate.tolerances.", positive=True)
    nval = val.get("noise_realizations", 2000)
    if isinstance(nval, bool) or not isinstance(nval, int) or nval < 2:
        raise ctx.error("validate.noise_realizations", f"expected an integer >= 2, got {nval!r}")

    return ScenarioConfig(
        scenario, alpha, gx, gy, gz, fields,
        _parse_grid(ctx, data.get("beta_grid")),
        ctx.number(data, "ratio", "", 2.0, positive=True),
        initial, picture, window, window_given, method,
        bool(data.get("negativity", False)), bool(data.get("numeric", False)),
        noise, n_real, decay, {k: float(v) for k, v in tols.items()}, nval, data,
    )


def load_config(path: Optional[str]) -> ScenarioConfig:
    """Read and validate a YAML document (``None`` gives the defaults)."""
    if path is None:
        return parse_config({})
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"config error: cannot read {path}: {e.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark else ""
        raise ConfigError(f"config error: invalid YAML{where}: {getattr(e, 'problem', e)}") from None
    return parse_config(data, text)
