"""Numerical time evolution in the full space and in every reduced picture.

This is the reference against which the closed forms are checked, so it
only relies on the Hamiltonian assembled by :mod:`qutrit_lmsz.model` and a
general-purpose adaptive integrator (scipy's DOP853, an embedded 8(5,3)
Runge-Kutta pair).

Pictures
--------
``full``    9 product states
``minus``   the four K = -1 states (basis4 order)
``plus``    the five K = +1 states (basis5 order)
``core``    the spin-1 core (|1 -1>, |0 0>, |-1 1>); needs gamma_x = gamma_y, gamma_z = 0
``qubit1``  fictitious qubit (Omega_+/2) sigma_z + gamma_- sigma_x
``qubit2``  fictitious qubit (Omega_-/2) sigma_z + gamma_+ sigma_x

In every picture H(t) = omega1(t) diag(z1) + omega2(t) diag(z2) + C, with C
constant (couplings plus, if present, the anti-Hermitian decay term).

Time is measured in the dimensionless sweep variable tau = sqrt(alpha) t,
alpha being ``spec.sweep_rate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import model
from .errors import IntegrationError, NonConvergenceError

__all__ = [
    "AsymptoticResult",
    "PICTURES",
    "Picture",
    "PropagationResult",
    "WindowSpec",
    "asymptotic_populations",
    "build_picture",
    "default_half_width",
    "evolve_nonhermitian",
    "evolve_operator",
    "evolve_state",
]

PICTURES = {"full": 9, "minus": 4, "plus": 5, "core": 3, "qubit1": 2, "qubit2": 2}
_BY_DIM = {9: "full", 4: "minus", 5: "plus", 3: "core"}


@dataclass(frozen=True)
class WindowSpec:
    """Integration window in tau and integrator settings."""

    tau_i: float
    tau_f: float
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    n_samples: int = 2001

    def __post_init__(self):
        if not self.tau_i <= self.tau_f:
            raise ValueError(f"window needs tau_i <= tau_f, got [{self.tau_i}, {self.tau_f}]")
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.max_step <= 0:
            raise ValueError("tolerances and max_step must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")

    def sample_points(self) -> np.ndarray:
        if self.n_samples == 1 or self.tau_f == self.tau_i:
            return np.array([self.tau_f])
        return np.linspace(self.tau_i, self.tau_f, self.n_samples)


@dataclass(frozen=True)
class PropagationResult:
    """Sampled trajectory.  ``norm`` is the total probability sum |psi|^2."""

    times: np.ndarray
    states: np.ndarray
    populations: np.ndarray
    norm: np.ndarray
    picture: str
    converged: bool
    window_estimate: Optional[float] = None
    nfev: int = 0
    sweep_rate: float = 1.0

    @property
    def physical_times(self) -> np.ndarray:
        return self.times / math.sqrt(self.sweep_rate)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - self.norm[0]))) if self.norm.size else 0.0


@dataclass(frozen=True)
class Picture:
    """Reduced Hamiltonian H(t) = w1(t) diag(z1) + w2(t) diag(z2) + const."""

    name: str
    z1: np.ndarray
    z2: np.ndarray
    const: np.ndarray
    omega1: model.FieldProtocol
    omega2: model.FieldProtocol
    hermitian: bool = True

    @property
    def dim(self) -> int:
        return self.z1.size

    def diagonal(self, t) -> np.ndarray:
        """Field-dependent diagonal at time(s) t; shape (..., dim)."""
        w1 = np.asarray(self.omega1(t), dtype=float)
        w2 = np.asarray(self.omega2(t), dtype=float)
        return w1[..., None] * self.z1 + w2[..., None] * self.z2

    def hamiltonian(self, t: float) -> np.ndarray:
        return self.const + np.diag(self.diagonal(t))


def _restrict(mat: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return mat[np.ix_(idx, idx)]


def build_picture(spec: model.HamiltonianSpec, picture: str) -> Picture:
    """Assemble the reduced Hamiltonian of ``picture`` for ``spec``."""
    if picture not in PICTURES:
        raise ValueError(f"unknown picture {picture!r}; choose from {sorted(PICTURES)}")
    s1 = np.array([m1 for m1 in model.M_VALUES for _ in model.M_VALUES], dtype=float)
    s2 = np.array([m2 for _ in model.M_VALUES for m2 in model.M_VALUES], dtype=float)
    coupling = model.coupling_matrix(spec)
    decay = model.decay_operator(spec)
    hermitian = spec.decay is None or (spec.decay.rate1 == 0 and spec.decay.rate2 == 0)
    d = model.DECOMPOSITION
    if picture == "full":
        z1, z2, c = s1, s2, coupling + decay
    elif picture in ("minus", "plus"):
        idx = d.index4 if picture == "minus" else d.index5
        z1, z2, c = s1[idx], s2[idx], _restrict(coupling + decay, idx)
    elif picture == "core":
        gamma = model.check_core_conditions(spec)
        idx = d.index5[1:4]
        sz = np.array([1.0, 0.0, -1.0])
        z1, z2 = sz, -sz
        c = gamma * model.build_spin1_operators().sigma_x + _restrict(decay, idx)
    else:
        half = np.array([0.5, -0.5])
        g1 = g2 = 0.0
        if spec.decay is not None:
            g1, g2 = spec.decay.rate1, spec.decay.rate2
        if picture == "qubit1":
            z1, z2 = half, half
            c = spec.gamma_minus * model.PAULI_X
            c = c - 0.5j * (g1 + g2) * (np.eye(2) + model.PAULI_Z)
        else:
            z1, z2 = half, -half
            c = spec.gamma_plus * model.PAULI_X
            c = c - 0.5j * ((g1 + g2) * np.eye(2) + (g1 - g2) * model.PAULI_Z)
    return Picture(
        picture,
        np.asarray(z1, float),
        np.asarray(z2, float),
        np.asarray(c, complex),
        spec.omega1,
        spec.omega2,
        hermitian,
    )


def _resolve_picture(dim: int, picture: Optional[str]) -> str:
    if picture is None:
        if dim not in _BY_DIM:
            raise ValueError(f"cannot infer the picture for dimension {dim}; pass picture=")
        return _BY_DIM[dim]
    if PICTURES.get(picture) != dim:
        raise ValueError(f"picture {picture!r} has dimension {PICTURES.get(picture)}, state has {dim}")
    return picture


def _integrate(pic: Picture, y0: np.ndarray, tau_i: float, tau_f: float, sweep_rate: float,
               rtol: float, atol: float, max_step: float, t_eval):
    """Integrate i dY/dtau = H(tau / sqrt(alpha)) / sqrt(alpha) Y for Y of shape (dim, k)."""
    dim = pic.dim
    k = y0.shape[1]
    scale = 1.0 / math.sqrt(sweep_rate)
    mconst = -1j * scale * pic.const
    w1f, w2f, z1, z2 = pic.omega1, pic.omega2, pic.z1, pic.z2
    c1, c2 = w1f.affine(), w2f.affine()

    if c1 is not None and c2 is not None:
        # affine fields: diagonal = d0 + d1 tau, no protocol calls per step
        d0 = ((-1j * scale) * (c1[0] * z1 + c2[0] * z2))[:, None]
        d1 = ((-1j * scale * scale) * (c1[1] * z1 + c2[1] * z2))[:, None]

        def rhs(tau, y):
            Y = y.reshape(dim, k)
            return (mconst @ Y + (d0 + d1 * tau) * Y).ravel()
    else:
        def rhs(tau, y):
            t = tau * scale
            Y = y.reshape(dim, k)
            diag = (-1j * scale) * (w1f(t) * z1 + w2f(t) * z2)
            return (mconst @ Y + diag[:, None] * Y).ravel()

    if tau_f == tau_i:
        return np.repeat(y0.ravel()[:, None], len(t_eval), axis=1), 0
    sol = solve_ivp(
        rhs,
        (tau_i, tau_f),
        y0.ravel().astype(complex),
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
    )
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}")
    return sol.y, sol.nfev


def evolve_state(
    spec: model.HamiltonianSpec,
    psi0,
    window: WindowSpec,
    picture: Optional[str] = None,
    sample_taus: Optional[Sequence[float]] = None,
) -> PropagationResult:
    """Solve i dpsi/dt = H(t) psi over ``window``.

    Parameters
    ----------
    spec : HamiltonianSpec
        If ``spec.decay`` is set the anti-Hermitian decay term is included.
    psi0 : array_like
        Initial amplitudes in the basis of ``picture``.
    window : WindowSpec
    picture : str, optional
        Inferred from ``len(psi0)`` for dimensions 9, 4, 5 and 3.
    sample_taus : sequence of float, optional
        Sample points; defaults to ``window.n_samples`` equidistant points.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    name = _resolve_picture(psi0.size, picture)
    n0 = np.vdot(psi0, psi0).real
    if abs(n0 - 1.0) > 1e-8:
        raise ValueError(f"psi0 must be normalised (norm^2 = {n0})")
    pic = build_picture(spec, name)
    taus = window.sample_points() if sample_taus is None else np.asarray(sample_taus, float)
    if taus.size and (taus.min() < window.tau_i - 1e-12 or taus.max() > window.tau_f + 1e-12):
        raise ValueError("sample points must lie inside the window")
    alpha = spec.sweep_rate
    y, nfev = _integrate(pic, psi0[:, None], window.tau_i, window.tau_f, alpha,
                         window.rel_tol, window.abs_tol, window.max_step, taus)
    states = y.T.copy()
    pops = np.abs(states) ** 2
    norm = pops.sum(axis=1)
    if pic.hermitian:
        ok = bool(np.all(np.abs(norm - 1.0) < max(10 * window.rel_tol, 1e-12)))
    else:
        ok = bool(np.all(np.diff(norm) <= 10 * window.rel_tol))
    return PropagationResult(taus, states, pops, norm, name, ok, None, nfev, alpha)


def evolve_nonhermitian(spec: model.HamiltonianSpec, psi0, window: WindowSpec,
                        picture: Optional[str] = None, sample_taus=None) -> PropagationResult:
    """Evolve with H_eff = H - i G1 (Sz1 + 1) - i G2 (Sz2 + 1).

    A spec without decay is treated as having zero rates.
    """
    if spec.decay is None:
        spec = model.HamiltonianSpec(spec.gamma_x, spec.gamma_y, spec.gamma_z,
                                     spec.omega1, spec.omega2, spec.noise, model.Decay())
    return evolve_state(spec, psi0, window, picture, sample_taus)


def evolve_operator(spec: model.HamiltonianSpec, window: WindowSpec, picture: str = "full") -> np.ndarray:
    """Evolution matrix U(tau_f, tau_i) of ``picture`` (columns = evolved basis states)."""
    pic = build_picture(spec, picture)
    eye = np.eye(pic.dim, dtype=complex)
    y, _ = _integrate(pic, eye, window.tau_i, window.tau_f, spec.sweep_rate,
                      window.rel_tol, window.abs_tol, window.max_step, [window.tau_f])
    return y[:, -1].reshape(pic.dim, pic.dim)


# ---------------------------------------------------------------------------
# Asymptotic (infinite-window) populations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticResult:
    populations: np.ndarray
    delta: float
    half_width: float
    converged: bool
    widenings: int
    history: tuple = field(default=(), repr=False)


def default_half_width(spec: model.HamiltonianSpec, picture: str = "full") -> float:
    """20 max(1, sqrt(beta)) with beta the largest coupling^2 / alpha in the picture."""
    pic = build_picture(spec.hermitian(), picture)
    off = pic.const - np.diag(np.diag(pic.const))
    beta = float(np.max(np.abs(off)) ** 2) / spec.sweep_rate if off.size else 0.0
    return 20.0 * max(1.0, math.sqrt(beta))


def _dressing(pic: Picture, tau: float, sweep_rate: float, ratio: float = 8.0) -> np.ndarray:
    """First-order admixture W_lk = H_lk / (H_kk - H_ll) for well-separated pairs.

    ``(I + W)|k>`` approximates the instantaneous eigenvector that connects to
    the diabatic state |k>; pairs whose gap is below ``ratio`` times their
    coupling are left undressed.
    """
    h = pic.hamiltonian(tau / math.sqrt(sweep_rate))
    h = 0.5 * (h + h.conj().T)  # dress with the Hermitian part only
    e = np.real(np.diag(h))
    gap = e[None, :] - e[:, None]  # gap[l, k] = E_k - E_l
    off = h - np.diag(np.diag(h))
    w = np.zeros_like(h)
    mask = (np.abs(off) > 0) & (np.abs(gap) > ratio * np.abs(off))
    w[mask] = off[mask] / gap[mask]
    return w


def _dressed_final_populations(spec, pic, psi0, half_width, rtol, atol):
    alpha = spec.sweep_rate
    eye = np.eye(pic.dim)
    w_i = _dressing(pic, -half_width, alpha)
    start = (eye + w_i) @ psi0
    start /= np.linalg.norm(start)
    y, _ = _integrate(pic, start[:, None], -half_width, half_width, alpha, rtol, atol,
                      math.inf, [half_width])
    psi = y[:, -1]
    w_f = _dressing(pic, half_width, alpha)
    proj = (eye - w_f) @ psi
    pops = np.abs(proj) ** 2
    return pops / pops.sum() * np.vdot(psi, psi).real


def asymptotic_populations(
    spec: model.HamiltonianSpec,
    psi0,
    picture: Optional[str] = None,
    tol: float = 1e-3,
    half_width: Optional[float] = None,
    max_widenings: int = 4,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-11,
) -> AsymptoticResult:
    """Populations for a sweep from tau = -inf to +inf, by window doubling.

    The system is started in the dressed state that connects to ``psi0`` and
    read out in the dressed basis at the final time, which removes the
    leading finite-window oscillation; the window is doubled until two
    successive estimates differ by less than ``tol`` (max-norm).

    Raises
    ------
    NonConvergenceError
        If ``max_widenings`` doublings do not reach ``tol``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    name = _resolve_picture(psi0.size, picture)
    pic = build_picture(spec.hermitian(), name)
    T = default_half_width(spec, name) if half_width is None else float(half_width)
    prev = _dressed_final_populations(spec, pic, psi0, T, rel_tol, atol=abs_tol)
    history = [(T, prev)]
    delta = math.inf
    for k in range(1, max_widenings + 1):
        T *= 2.0
        cur = _dressed_final_populations(spec, pic, psi0, T, rel_tol, atol=abs_tol)
        delta = float(np.max(np.abs(cur - prev)))
        history.append((T, cur))
        prev = cur
        if delta < tol:
            return AsymptoticResult(cur, delta, T, True, k, tuple(history))
    raise NonConvergenceError(
        f"asymptotic populations changed by {delta:.2e} after {max_widenings} doublings "
        f"(half width {T}); requested {tol:.1e}"
    )
