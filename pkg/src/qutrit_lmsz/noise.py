"""Monte Carlo averaging over a white longitudinal noise field.

The field omega1(t) (by default) is replaced by omega1(t) + eta(t) with
<eta(t) eta(t')> = 2 Gamma delta(t - t').  eta is discretised as a
piecewise-constant Gaussian sequence with variance 2 Gamma / dt per step.

Random numbers
--------------
Each realization draws from its own numpy ``Philox`` stream keyed by
``(seed, realization_index)``.  Step k uses raw words 2*(k//2) and
2*(k//2) + 1 of that stream (Box-Muller pair), i.e. Philox counter k // 4,
so every value is addressed by (seed, realization, step) and results do
not depend on how realizations are grouped or scheduled.

Stepping
--------
The noiseless evolution U(t_k) of the picture is computed once on the step
grid with the adaptive propagator, giving per-step factors
U0_k = U(t_{k+1}) U(t_k)^{-1}.  A realization then evolves as

    psi <- P(eta_k / 2) U0_k P(eta_k / 2) psi,   P(x) = exp(-i x dt Z)

with Z the diagonal through which the noise enters.  The symmetric split
keeps populations exactly noise-invariant when the couplings vanish.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import model
from .errors import IntegrationError
from .propagator import WindowSpec, _integrate, _resolve_picture, build_picture

__all__ = [
    "EnsembleResult",
    "LARGE_GAMMA_FACTOR",
    "NoisePath",
    "NoiseSpec",
    "ensemble_average",
    "is_large_gamma",
    "plateau_check",
    "realization_states",
    "sample_noise_path",
    "step_normals",
]

PLACEMENTS = ("omega1", "omega2", "both")

#: Gamma counts as large when Gamma >= LARGE_GAMMA_FACTOR * max(sqrt(alpha), |couplings|).
LARGE_GAMMA_FACTOR = 4.0


@dataclass(frozen=True)
class NoiseSpec:
    """White-noise strength, seed and discretisation step (physical time units).

    ``placement`` selects the field carrying the noise: ``omega1`` (default),
    ``omega2`` or ``both`` (the same eta added to both fields).
    """

    Gamma: float
    seed: int = 0
    dt_noise: float = 0.05
    placement: str = "omega1"

    def __post_init__(self):
        if not (math.isfinite(self.Gamma) and self.Gamma >= 0):
            raise ValueError(f"Gamma must be finite and non-negative, got {self.Gamma}")
        if not self.dt_noise > 0:
            raise ValueError(f"dt_noise must be positive, got {self.dt_noise}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")


@dataclass(frozen=True)
class NoisePath:
    """Piecewise-constant eta on the step edges ``times`` (len(values) + 1 points)."""

    times: np.ndarray
    values: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def integral(self) -> float:
        return float(np.sum(self.values) * self.dt)


@dataclass(frozen=True)
class EnsembleResult:
    n_realizations: int
    mean_populations: np.ndarray
    std_errors: np.ndarray
    seed: int
    picture: str = "full"
    Gamma: float = 0.0

    def z_scores(self, target) -> np.ndarray:
        se = np.where(self.std_errors > 0, self.std_errors, np.inf)
        return (self.mean_populations - np.asarray(target, float)) / se


def _grid(noise: NoiseSpec, window: WindowSpec, sweep_rate: float):
    """Step count and step length in tau for the window."""
    length = window.tau_f - window.tau_i
    h_target = noise.dt_noise * math.sqrt(sweep_rate)
    k = max(1, int(math.ceil(length / h_target - 1e-9))) if length > 0 else 0
    return k, (length / k if k else 0.0)


def step_normals(seed: int, realization_index: int, n_steps: int) -> np.ndarray:
    """Standard normals for steps 0..n_steps-1 of one realization."""
    if n_steps == 0:
        return np.zeros(0)
    bg = np.random.Philox(key=np.array([seed, realization_index], dtype=np.uint64))
    n_pairs = (n_steps + 1) // 2
    raw = bg.random_raw(2 * n_pairs).reshape(n_pairs, 2)
    u1 = ((raw[:, 0] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u2 = (raw[:, 1] >> np.uint64(11)).astype(np.float64) * 2.0**-53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * n_pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n_steps]


def sample_noise_path(noise: NoiseSpec, window: WindowSpec, realization_index: int,
                      sweep_rate: float = 1.0) -> NoisePath:
    """eta on the step grid covering ``window`` (tau units converted to t).

    The step is ``dt_noise`` shrunk so that a whole number of steps fills the
    window; values have variance 2 Gamma / dt.
    """
    k, h = _grid(noise, window, sweep_rate)
    dt = h / math.sqrt(sweep_rate)
    times = (window.tau_i + h * np.arange(k + 1)) / math.sqrt(sweep_rate)
    if noise.Gamma == 0 or k == 0:
        return NoisePath(times, np.zeros(k))
    z = step_normals(noise.seed, realization_index, k)
    return NoisePath(times, z * math.sqrt(2.0 * noise.Gamma / dt))


def _noise_diagonal(pic, placement: str) -> np.ndarray:
    if placement == "omega1":
        return pic.z1
    if placement == "omega2":
        return pic.z2
    return pic.z1 + pic.z2


def _step_factors(pic, tau_grid: np.ndarray, sweep_rate: float, rtol=1e-11, atol=1e-13) -> np.ndarray:
    """Noiseless per-step propagators on the grid, shape (K, d, d)."""
    d = pic.dim
    y, _ = _integrate(pic, np.eye(d, dtype=complex), tau_grid[0], tau_grid[-1], sweep_rate,
                      rtol, atol, math.inf, tau_grid)
    U = y.T.reshape(-1, d, d)
    if pic.hermitian:
        return U[1:] @ np.conj(np.swapaxes(U[:-1], -1, -2))
    return U[1:] @ np.linalg.inv(U[:-1])


def _prepare(spec: model.HamiltonianSpec, psi0, window: WindowSpec, picture: Optional[str]):
    noise = spec.noise
    if not isinstance(noise, NoiseSpec):
        raise ValueError("spec.noise must be a NoiseSpec")
    psi0 = np.asarray(psi0, dtype=complex)
    name = _resolve_picture(psi0.size, picture)
    pic = build_picture(spec, name)
    alpha = spec.sweep_rate
    k, h = _grid(noise, window, alpha)
    taus = window.tau_i + h * np.arange(k + 1)
    factors = _step_factors(pic, taus, alpha) if k else np.zeros((0, pic.dim, pic.dim), complex)
    zdiag = _noise_diagonal(pic, noise.placement)
    dt = h / math.sqrt(alpha)
    sigma = math.sqrt(2.0 * noise.Gamma / dt) if k else 0.0
    return noise, psi0, name, factors, zdiag, dt, sigma, k


def _run_block(noise, psi0, factors, zdiag, dt, sigma, k, indices) -> np.ndarray:
    """Final states of the realizations ``indices``; shape (len(indices), d)."""
    b = len(indices)
    psi = np.tile(psi0, (b, 1))
    if k == 0:
        return psi
    if sigma == 0.0:
        U = np.eye(psi0.size, dtype=complex)
        for f in factors:
            U = f @ U
        return psi @ U.T
    eta = np.stack([step_normals(noise.seed, int(r), k) for r in indices]) * sigma
    half = -0.5 * dt * eta  # phase angle per unit Z of each half-kick
    kick = half[:, 0]
    for j in range(k):
        psi *= np.exp(1j * kick[:, None] * zdiag)
        psi = psi @ factors[j].T
        kick = half[:, j] + (half[:, j + 1] if j + 1 < k else 0.0)
    psi *= np.exp(1j * kick[:, None] * zdiag)
    bad = ~np.all(np.isfinite(psi), axis=1)
    if bad.any():
        raise IntegrationError(f"non-finite state in realizations {list(np.asarray(indices)[bad])}")
    return psi


def realization_states(spec: model.HamiltonianSpec, psi0, window: WindowSpec, indices,
                       picture: Optional[str] = None) -> np.ndarray:
    """Final states of selected realizations (same noise paths as the ensemble)."""
    noise, psi0, name, factors, zdiag, dt, sigma, k = _prepare(spec, psi0, window, picture)
    return _run_block(noise, psi0, factors, zdiag, dt, sigma, k, np.asarray(indices))


def ensemble_average(spec: model.HamiltonianSpec, psi0, window: WindowSpec, n: int,
                     picture: Optional[str] = None, block_size: int = 1000,
                     threads: int = 1) -> EnsembleResult:
    """Mean final populations over realizations 0..n-1 with standard errors.

    Blocks of realizations may run on ``threads`` worker threads; partial
    sums are combined in block order, so the result is bit-identical for
    any thread count.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    noise, psi0, name, factors, zdiag, dt, sigma, k = _prepare(spec, psi0, window, picture)
    blocks = [np.arange(s, min(n, s + block_size)) for s in range(0, n, block_size)]

    def work(idx):
        pops = np.abs(_run_block(noise, psi0, factors, zdiag, dt, sigma, k, idx)) ** 2
        return pops.sum(axis=0), (pops**2).sum(axis=0)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    s1 = np.sum([p[0] for p in parts], axis=0)
    s2 = np.sum([p[1] for p in parts], axis=0)
    mean = s1 / n
    var = np.maximum(s2 / n - mean**2, 0.0) * (n / (n - 1) if n > 1 else 0.0)
    return EnsembleResult(n, mean, np.sqrt(var / n), int(noise.seed), name, noise.Gamma)


def is_large_gamma(spec: model.HamiltonianSpec) -> bool:
    """Gamma >= LARGE_GAMMA_FACTOR * max(sqrt(alpha), largest |coupling|)."""
    g = spec.noise.Gamma
    scale = max(math.sqrt(spec.sweep_rate), abs(spec.gamma_x) + abs(spec.gamma_y), abs(spec.gamma_z))
    return g >= LARGE_GAMMA_FACTOR * scale


def plateau_check(spec: model.HamiltonianSpec, psi0, window: WindowSpec, n: int,
                  picture: Optional[str] = None, threads: int = 1):
    """Compare ensembles at Gamma and 2 Gamma.

    Returns (result_G, result_2G, max |difference| / combined standard error).
    """
    r1 = ensemble_average(spec, psi0, window, n, picture, threads=threads)
    noise2 = NoiseSpec(2 * spec.noise.Gamma, spec.noise.seed, spec.noise.dt_noise, spec.noise.placement)
    spec2 = model.HamiltonianSpec(spec.gamma_x, spec.gamma_y, spec.gamma_z, spec.omega1,
                                  spec.omega2, noise2, spec.decay)
    r2 = ensemble_average(spec2, psi0, window, n, picture, threads=threads)
    se = np.sqrt(r1.std_errors**2 + r2.std_errors**2)
    diff = np.abs(r1.mean_populations - r2.mean_populations)
    z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 0, np.inf, 0.0))
    return r1, r2, float(np.max(z))
