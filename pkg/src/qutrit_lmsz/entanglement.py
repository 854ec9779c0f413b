"""Negativity of two-qutrit states.

The general route partially transposes the 9x9 density matrix and sums the
magnitudes of its negative eigenvalues.  Closed forms cover pure states in
the K = -1 block (amplitudes w on basis4) and in the spin-1 core (amplitudes
c on |1 -1>, |0 0>, |-1 1>):

    N = sqrt(x (1 - x)),           x = |w1|^2 + |w4|^2
    N = |c1||c2| + |c2||c3| + |c1||c3|
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import analytic, model, specfun

__all__ = [
    "InvalidDensityMatrixError",
    "NegativityResult",
    "as_density_matrix",
    "asymptotic_negativity_3d",
    "asymptotic_negativity_4d",
    "negativity",
    "negativity_3d_closed_form",
    "negativity_4d_closed_form",
    "negativity_maxima_4d",
    "negativity_time_series_3d",
    "negativity_time_series_4d",
    "partial_transpose",
]


class InvalidDensityMatrixError(ValueError):
    pass


@dataclass(frozen=True)
class NegativityResult:
    value: float
    method: str  # "general", "closed_form_4d" or "closed_form_3d"


def as_density_matrix(rho, atol: float = 1e-10) -> np.ndarray:
    """Validate a 9x9 density matrix; a 9-vector is promoted to its projector."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape == (9,):
        n = np.vdot(rho, rho).real
        if abs(n - 1.0) > 1e-10:
            raise InvalidDensityMatrixError(f"pure state is not normalised (norm^2 = {n})")
        return np.outer(rho, rho.conj())
    if rho.shape != (9, 9):
        raise InvalidDensityMatrixError(f"expected a 9-vector or 9x9 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise InvalidDensityMatrixError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-12:
        raise InvalidDensityMatrixError(f"density matrix has trace {tr}")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise InvalidDensityMatrixError("density matrix has negative eigenvalues")
    return rho


def partial_transpose(rho, subsystem: str = "B", validate: bool = True) -> np.ndarray:
    """Transpose of the first ("A") or second ("B") qutrit's indices."""
    if subsystem not in ("A", "B"):
        raise ValueError("subsystem must be 'A' or 'B'")
    r = as_density_matrix(rho) if validate else np.asarray(rho, dtype=complex)
    t = r.reshape(3, 3, 3, 3)  # (a, b, a', b')
    t = t.transpose(2, 1, 0, 3) if subsystem == "A" else t.transpose(0, 3, 2, 1)
    return t.reshape(9, 9)


def negativity(rho, subsystem: str = "B") -> NegativityResult:
    """(||rho^T||_1 - 1) / 2, the summed magnitude of negative PT eigenvalues."""
    pt = partial_transpose(rho, subsystem)
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return NegativityResult(float(np.sum(np.abs(ev[ev < 0]))), "general")


def _normalised(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.shape != (n,):
        raise ValueError(f"{name} needs {n} amplitudes")
    s = np.vdot(v, v).real
    if abs(s - 1.0) > 1e-10:
        raise ValueError(f"{name} amplitudes are not normalised (sum |.|^2 = {s})")
    return v


def negativity_4d_closed_form(w) -> NegativityResult:
    """sqrt(x (1 - x)) with x = |w1|^2 + |w4|^2, amplitudes on basis4."""
    w = _normalised(w, 4, "K = -1 block")
    x = abs(w[0]) ** 2 + abs(w[3]) ** 2
    return NegativityResult(math.sqrt(max(x * (1 - x), 0.0)), "closed_form_4d")


def negativity_3d_closed_form(c) -> NegativityResult:
    """|c1||c2| + |c2||c3| + |c1||c3| for amplitudes on (|1 -1>, |0 0>, |-1 1>)."""
    c = np.abs(_normalised(c, 3, "spin-1 core"))
    return NegativityResult(float(c[0] * c[1] + c[1] * c[2] + c[0] * c[2]), "closed_form_3d")


def _x_to_negativity(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(x * (1 - x), 0.0, None))


def asymptotic_negativity_4d(beta_plus, beta_minus):
    """Full-sweep negativity from |-1 0>: sqrt(x (1-x)), x = P1 P2 + (1-P1)(1-P2)."""
    p1 = analytic.flip_probability(beta_minus)
    p2 = analytic.flip_probability(beta_plus)
    x = p1 * p2 + (1 - p1) * (1 - p2)
    out = _x_to_negativity(x)
    return float(out) if np.ndim(out) == 0 else out


def asymptotic_negativity_3d(beta_core):
    """Full-sweep core negativity from |1 -1>: P(1-P) + sqrt(2 P (1-P))."""
    p = np.asarray(analytic.flip_probability(beta_core))
    q = p * (1 - p)
    out = q + np.sqrt(2 * q)
    return float(out) if np.ndim(out) == 0 else out


def negativity_time_series_4d(beta_plus: float, beta_minus: float, tau, tau_i: float) -> np.ndarray:
    """N(tau) from |-1 0> using x = |a1|^2 |a2|^2 + |b1|^2 |b2|^2."""
    c1 = specfun.lz_cayley_klein(beta_minus, tau, tau_i)
    c2 = specfun.lz_cayley_klein(beta_plus, tau, tau_i)
    x = np.abs(c1.a) ** 2 * np.abs(c2.a) ** 2 + np.abs(c1.b) ** 2 * np.abs(c2.b) ** 2
    return _x_to_negativity(x)


def negativity_time_series_3d(beta_core: float, tau, tau_i: float) -> np.ndarray:
    """N(tau) = |a3||b3| (sqrt2 + |a3||b3|) for the core started in |1 -1>."""
    ck = specfun.lz_cayley_klein(beta_core, tau, tau_i)
    ab = np.abs(ck.a) * np.abs(ck.b)
    return ab * (math.sqrt(2.0) + ab)


def negativity_maxima_4d(ratio: float = 2.0, beta_range=(0.01, 2.0), n_grid: int = 400, xtol: float = 1e-10):
    """Local maxima of the full-sweep negativity against beta_+ with beta_- = beta_+ / ratio.

    A log-spaced scan brackets each interior maximum; golden-section search
    refines it.  Returns a list of (beta_plus, N) pairs.
    """
    grid = np.geomspace(beta_range[0], beta_range[1], n_grid)
    vals = asymptotic_negativity_4d(grid, grid / ratio)
    out = []
    for i in range(1, n_grid - 1):
        if vals[i] >= vals[i - 1] and vals[i] > vals[i + 1]:
            f = lambda b: -asymptotic_negativity_4d(b, b / ratio)  # noqa: E731
            res = minimize_scalar(f, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
                                  options={"xtol": xtol})
            out.append((float(res.x), float(-res.fun)))
    return out


def embed_4d(w) -> np.ndarray:
    return model.DECOMPOSITION.embed4(w)


def embed_core(c) -> np.ndarray:
    v = np.zeros(5, dtype=complex)
    v[1:4] = c
    return model.DECOMPOSITION.embed5(v)
