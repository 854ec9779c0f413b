"""Closed-form results for the swept two-qutrit system.

Scenario conventions
--------------------
The sweep formulas assume couplings gamma_{+-} >= 0 and fields such that
Omega_{+-} = omega1 +- omega2 ramp as alpha t through zero (for instance
omega1 = alpha t, omega2 = 0).  A qubit with Hamiltonian
(alpha t / 2) sigma_z + g sigma_x then flips with probability
1 - exp(-2 pi g^2 / alpha) between t = -inf and +inf.

* Qubit 1 of the K = -1 block has beta_- = gamma_-^2 / alpha, qubit 2 has
  beta_+ = gamma_+^2 / alpha.
* The spin-1 core gamma Sigma_x + Omega_- Sigma_z (gamma = gamma_x + gamma_y)
  is the spin-1 image of the qubit (Omega_-/2) sigma_z + (gamma/sqrt 2) sigma_x,
  so its flip parameter is ``beta_core = gamma^2 / (2 alpha)``.  The quantity
  ``beta_prime = 2 gamma^2 / alpha`` is kept alongside because the noisy
  spin-1 rate formula is written in terms of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import model, specfun

__all__ = [
    "DarkStateSet",
    "LmszParameters",
    "TransitionTable",
    "core_operator",
    "dark_states_4d",
    "dark_states_5d",
    "exact_u_minus",
    "exact_u_plus",
    "flip_probability",
    "joint_probabilities_4d",
    "ket_label",
    "lmsz_p1_p2",
    "noisy_flip_probability",
    "noisy_joint_probabilities_4d",
    "noisy_qubit_probability",
    "noisy_spin1_probabilities",
    "spin1_matrix",
    "spin1_probabilities",
    "stationary_mixture",
    "thermal_weights",
]


def ket_label(state) -> str:
    m1, m2 = state
    return f"|{m1}{m2}>"


# ---------------------------------------------------------------------------
# Parameters and tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LmszParameters:
    """Dimensionless sweep parameters of a ramp with rate alpha."""

    alpha: float
    beta_plus: float
    beta_minus: float
    beta_prime: float

    @classmethod
    def from_couplings(cls, gamma_x: float, gamma_y: float, alpha: float) -> "LmszParameters":
        _check_alpha(alpha)
        gp, gm = gamma_x + gamma_y, gamma_x - gamma_y
        return cls(alpha, gp * gp / alpha, gm * gm / alpha, 2.0 * gp * gp / alpha)

    @property
    def beta_core(self) -> float:
        """Flip parameter of the spin-1 core, gamma^2 / (2 alpha) = beta_prime / 4."""
        return 0.25 * self.beta_prime


@dataclass(frozen=True)
class TransitionTable:
    """Final-state probabilities from a given initial basis state."""

    initial: tuple
    states: tuple
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (len(self.states),):
            raise ValueError("one probability per state required")
        if np.any(p < -1e-15) or np.any(p > 1 + 1e-15):
            raise ValueError(f"probabilities out of [0, 1]: {p}")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        object.__setattr__(self, "probabilities", p)

    def __getitem__(self, state) -> float:
        return float(self.probabilities[self.states.index(tuple(state))])

    def as_dict(self) -> dict:
        return {ket_label(s): float(p) for s, p in zip(self.states, self.probabilities)}


def _check_alpha(alpha: float) -> None:
    if not alpha > 0:
        raise ValueError(f"sweep rate alpha must be positive, got {alpha}")


def _check_probability(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def flip_probability(beta) -> np.ndarray | float:
    """1 - exp(-2 pi beta): full-sweep flip probability of a qubit."""
    return -np.expm1(-2.0 * np.pi * np.asarray(beta, dtype=float)) if np.ndim(beta) else -math.expm1(
        -2.0 * math.pi * beta
    )


def lmsz_p1_p2(gamma_minus: float, gamma_plus: float, alpha: float):
    """Flip probabilities (P1, P2) of the two fictitious qubits."""
    _check_alpha(alpha)
    return flip_probability(gamma_minus**2 / alpha), flip_probability(gamma_plus**2 / alpha)


def joint_probabilities_4d(P1: float, P2: float, initial=(-1, 0)) -> TransitionTable:
    """Final populations of the K = -1 block after a full sweep.

    Qubit 1 flips with probability P1 and qubit 2 with P2, independently.
    From |-1 0> this gives P1 P2 on |1 0>, P1 (1-P2) on |0 1>,
    (1-P1) P2 on |0 -1> and (1-P1)(1-P2) on |-1 0>.
    """
    P1 = _check_probability(P1, "P1")
    P2 = _check_probability(P2, "P2")
    states = model.BASIS4
    if tuple(initial) not in states:
        raise ValueError(f"initial state {initial} is not in the K = -1 block")
    labels = model.QUBIT_LABELS
    q0 = labels[states.index(tuple(initial))]
    probs = []
    for lab in labels:
        f1 = P1 if lab[0] != q0[0] else 1.0 - P1
        f2 = P2 if lab[1] != q0[1] else 1.0 - P2
        probs.append(f1 * f2)
    return TransitionTable(tuple(initial), states, np.array(probs))


_CORE_STATES = ((-1, 1), (0, 0), (1, -1))


def spin1_probabilities(P3: float, initial=(1, -1)) -> TransitionTable:
    """Spin-1 core populations given the single-qubit flip probability P3.

    From |1 -1>: P3^2 on |-1 1>, 2 P3 (1-P3) on |0 0>, (1-P3)^2 on |1 -1>.
    From |0 0>: 2 P3 (1-P3) on each end state and (1 - 2 P3)^2 on |0 0>.
    """
    P3 = _check_probability(P3, "P3")
    q = 1.0 - P3
    initial = tuple(initial)
    if initial == (1, -1):
        probs = [P3 * P3, 2 * P3 * q, q * q]
    elif initial == (-1, 1):
        probs = [q * q, 2 * P3 * q, P3 * P3]
    elif initial == (0, 0):
        probs = [2 * P3 * q, (1 - 2 * P3) ** 2, 2 * P3 * q]
    else:
        raise ValueError(f"initial state {initial} is not in the spin-1 core")
    return TransitionTable(initial, _CORE_STATES, np.array(probs))


# ---------------------------------------------------------------------------
# Strong-noise formulas
# ---------------------------------------------------------------------------


def noisy_qubit_probability(g: float, alpha: float) -> float:
    """(1 - exp(-2 pi g^2 / alpha)) / 2 for H = alpha t sigma_z + g sigma_x.

    Large-noise limit of the flip probability; ``alpha`` is the slope of the
    sigma_z coefficient.  For a fictitious qubit (alpha t / 2) sigma_z pass
    ``alpha / 2`` or use :func:`noisy_flip_probability`.
    """
    _check_alpha(alpha)
    return -0.5 * math.expm1(-2.0 * math.pi * g * g / alpha)


def noisy_flip_probability(beta: float) -> float:
    """Large-noise flip probability of (tau/2) sigma_z + sqrt(beta) sigma_x."""
    return noisy_qubit_probability(math.sqrt(beta), 0.5)


def noisy_spin1_probabilities(beta_prime: float, initial=(1, -1)) -> TransitionTable:
    """Large-noise spin-1 populations from an end state of the core.

    With x = pi beta_prime: (2 + e^{-3x} - 3 e^{-x}) / 6 on the opposite end
    state, (1 - e^{-3x}) / 3 on |0 0> and (2 + e^{-3x} + 3 e^{-x}) / 6 on the
    initial state.
    """
    if not beta_prime >= 0:
        raise ValueError(f"beta_prime must be non-negative, got {beta_prime}")
    x = math.pi * beta_prime
    e1, e3 = math.exp(-x), math.exp(-3 * x)
    far, mid, stay = (2 + e3 - 3 * e1) / 6, (1 - e3) / 3, (2 + e3 + 3 * e1) / 6
    initial = tuple(initial)
    if initial == (1, -1):
        probs = [far, mid, stay]
    elif initial == (-1, 1):
        probs = [stay, mid, far]
    else:
        raise ValueError("the noisy spin-1 formula starts from |1 -1> or |-1 1>")
    return TransitionTable(initial, _CORE_STATES, np.array(probs))


def noisy_joint_probabilities_4d(beta_minus: float, beta_plus: float, initial=(-1, 0)) -> TransitionTable:
    """K = -1 block table with both qubits in the large-noise regime.

    Tends to 1/4 on every state when both betas are large.
    """
    return joint_probabilities_4d(
        noisy_flip_probability(beta_minus), noisy_flip_probability(beta_plus), initial
    )


# ---------------------------------------------------------------------------
# Exact evolution operators
# ---------------------------------------------------------------------------


def exact_u_minus(beta_plus: float, beta_minus: float, tau, tau_i: float) -> np.ndarray:
    """U_1(beta_-) x U_2(beta_+) on basis4 (via the qubit relabelling).

    Returns shape (4, 4) for scalar ``tau`` and (n, 4, 4) for an array.
    """
    u1 = specfun.lz_cayley_klein(beta_minus, tau, tau_i).matrix()
    u2 = specfun.lz_cayley_klein(beta_plus, tau, tau_i).matrix()
    return np.einsum("...ij,...kl->...ikjl", u1, u2).reshape(u1.shape[:-2] + (4, 4))


def spin1_matrix(a, b) -> np.ndarray:
    """Spin-1 image of the SU(2) matrix [[a, b], [-b*, a*]] on (m = 1, 0, -1)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    r2 = math.sqrt(2.0)
    ac, bc = a.conj(), b.conj()
    rows = [
        [a * a, r2 * a * b, b * b],
        [-r2 * a * bc, a * ac - b * bc, r2 * ac * b],
        [bc * bc, -r2 * ac * bc, ac * ac],
    ]
    return np.moveaxis(np.array(rows), (0, 1), (-2, -1))


def core_operator(beta_core: float, tau, tau_i: float) -> np.ndarray:
    """Exact evolution of the spin-1 core on (|1 -1>, |0 0>, |-1 1>)."""
    ck = specfun.lz_cayley_klein(beta_core, tau, tau_i)
    return spin1_matrix(ck.a, ck.b)


def exact_u_plus(beta_core: float, omega_plus_integral, tau, tau_i: float) -> np.ndarray:
    """Exact 5x5 evolution of the K = +1 block (gamma_x = gamma_y, gamma_z = 0).

    Parameters
    ----------
    beta_core : float
        Flip parameter of the core, gamma^2 / (2 alpha).
    omega_plus_integral : float or array_like
        Accumulated phase int Omega_+ dt from the initial time, matching ``tau``.
    tau, tau_i : float / array_like
        Dimensionless times.

    Corner entries are exp(-i Phi) on |1 1> and exp(+i Phi) on |-1 -1>;
    the middle block is :func:`core_operator`.
    """
    u3 = core_operator(beta_core, tau, tau_i)
    phi = np.asarray(omega_plus_integral, dtype=float)
    if phi.shape != np.shape(tau):
        phi = np.broadcast_to(phi, np.shape(tau))
    out = np.zeros(u3.shape[:-2] + (5, 5), dtype=complex)
    out[..., 0, 0] = np.exp(-1j * phi)
    out[..., 4, 4] = np.exp(1j * phi)
    out[..., 1:4, 1:4] = u3
    return out


# ---------------------------------------------------------------------------
# Dark states and stationary mixtures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DarkStateSet:
    """Time-independent instantaneous eigenvectors of H(t).

    ``energies[j](spec, t)`` is the eigenvalue of ``states[j]``;
    ``condition(spec)`` tells whether the symmetry they need holds.
    """

    states: tuple
    energies: tuple
    validity: str
    condition: Callable

    def energies_at(self, spec: model.HamiltonianSpec, t: float) -> np.ndarray:
        return np.array([e(spec, t) for e in self.energies])

    def matrix(self) -> np.ndarray:
        """States as columns of a 9 x n matrix."""
        return np.column_stack(self.states)


def _ket(*terms) -> np.ndarray:
    psi = np.zeros(9, dtype=complex)
    for coef, (m1, m2) in terms:
        psi[model.basis_index(m1, m2)] += coef
    return psi / np.linalg.norm(psi)


_PROBE_TIMES = (-3.1, -0.7, 0.0, 0.9, 2.3)


def _probe_times(spec) -> np.ndarray:
    lo1, hi1 = spec.omega1.domain()
    lo2, hi2 = spec.omega2.domain()
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    if math.isinf(lo) and math.isinf(hi):
        return np.array(_PROBE_TIMES)
    if math.isinf(lo) or math.isinf(hi):
        edge = hi if math.isinf(lo) else lo
        sign = -1.0 if math.isinf(lo) else 1.0
        return edge + sign * np.array([0.0, 0.3, 1.1, 2.9, 5.4])
    if lo > hi:
        return np.array([])
    return lo + (hi - lo) * np.array([0.0, 0.137, 0.42, 0.77, 1.0])


def _fields_related(spec, sign: float) -> bool:
    t_probe = _probe_times(spec)
    if t_probe.size == 0:
        return False
    for t in t_probe:
        w1, w2 = spec.omega1(float(t)), spec.omega2(float(t))
        if abs(w1 - sign * w2) > 1e-12 * (1 + abs(w1)):
            return False
    return True


def _fields_equal(spec) -> bool:
    return _fields_related(spec, 1.0)


def _fields_opposite(spec) -> bool:
    return _fields_related(spec, -1.0)


def _close(a, b, scale) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, scale)


def dark_states_4d(variant: str = "isotropic_parallel") -> DarkStateSet:
    """Four stationary states of the K = -1 block.

    ``isotropic_parallel`` (gamma_x = gamma_y, omega1 = omega2 = w):
        (|1 0> +- |0 1>)/sqrt2 with E = w +- gamma_+,
        (|0 -1> +- |-1 0>)/sqrt2 with E = -w +- gamma_+.
    ``antisotropic_antiparallel`` (gamma_x = -gamma_y, omega2 = -omega1 = -w):
        (|1 0> +- |0 -1>)/sqrt2 with E = w +- gamma_-,
        (|0 1> +- |-1 0>)/sqrt2 with E = -w +- gamma_-.
    Ordered so that E_3 = -E_2 and E_4 = -E_1.
    """
    s = 1 / math.sqrt(2)
    if variant == "isotropic_parallel":
        states = (
            _ket((s, (1, 0)), (s, (0, 1))),
            _ket((s, (1, 0)), (-s, (0, 1))),
            _ket((s, (0, -1)), (s, (-1, 0))),
            _ket((s, (0, -1)), (-s, (-1, 0))),
        )
        g = lambda spec: spec.gamma_plus  # noqa: E731

        def condition(spec):
            return _close(spec.gamma_x, spec.gamma_y, abs(spec.gamma_x)) and _fields_equal(spec)

        validity = "gamma_x = gamma_y and omega1(t) = omega2(t)"
    elif variant == "antisotropic_antiparallel":
        states = (
            _ket((s, (1, 0)), (s, (0, -1))),
            _ket((s, (1, 0)), (-s, (0, -1))),
            _ket((s, (0, 1)), (s, (-1, 0))),
            _ket((s, (0, 1)), (-s, (-1, 0))),
        )
        g = lambda spec: spec.gamma_minus  # noqa: E731

        def condition(spec):
            return _close(spec.gamma_x, -spec.gamma_y, abs(spec.gamma_x)) and _fields_opposite(spec)

        validity = "gamma_x = -gamma_y and omega1(t) = -omega2(t)"
    else:
        raise ValueError(f"unknown dark-state variant {variant!r}")
    energies = (
        lambda spec, t: spec.omega1(t) + g(spec),
        lambda spec, t: spec.omega1(t) - g(spec),
        lambda spec, t: -spec.omega1(t) + g(spec),
        lambda spec, t: -spec.omega1(t) - g(spec),
    )
    return DarkStateSet(states, energies, validity, condition)


def dark_states_5d() -> DarkStateSet:
    """Five stationary states of the K = +1 block.

    |1 1> and |-1 -1> (energies +-Omega_+ + gamma_z) need only gamma_x = gamma_y.
    The core states
    psi_5 = (|1 -1> + sqrt2 |0 0> + |-1 1>)/2,  E = sqrt2 gamma_+,
    psi_6 = (|1 -1> - |-1 1>)/sqrt2,           E = 0,
    psi_7 = (|1 -1> - sqrt2 |0 0> + |-1 1>)/2,  E = -sqrt2 gamma_+
    further need omega1 = omega2 and gamma_z = 0.
    """
    r2 = math.sqrt(2)
    states = (
        _ket((1, (1, 1))),
        _ket((1, (-1, -1))),
        _ket((0.5, (1, -1)), (r2 / 2, (0, 0)), (0.5, (-1, 1))),
        _ket((1, (1, -1)), (-1, (-1, 1))),
        _ket((0.5, (1, -1)), (-r2 / 2, (0, 0)), (0.5, (-1, 1))),
    )
    energies = (
        lambda spec, t: spec.omega1(t) + spec.omega2(t) + spec.gamma_z,
        lambda spec, t: -spec.omega1(t) - spec.omega2(t) + spec.gamma_z,
        lambda spec, t: r2 * spec.gamma_plus,
        lambda spec, t: 0.0,
        lambda spec, t: -r2 * spec.gamma_plus,
    )

    def condition(spec):
        return (
            _close(spec.gamma_x, spec.gamma_y, abs(spec.gamma_x))
            and abs(spec.gamma_z) <= 1e-12
            and _fields_equal(spec)
        )

    validity = "gamma_x = gamma_y, gamma_z = 0 and omega1(t) = omega2(t) (corner states: gamma_x = gamma_y only)"
    return DarkStateSet(states, energies, validity, condition)


def _all_dark_states():
    d4 = dark_states_4d("isotropic_parallel")
    d5 = dark_states_5d()
    # order: k1 -> |1 1>, k2 -> |-1 -1>, p_1..p_4 -> 4D set, p_5..p_7 -> core states
    states = (d5.states[0], d5.states[1]) + d4.states + d5.states[2:]
    energies = (d5.energies[0], d5.energies[1]) + d4.energies + d5.energies[2:]
    return states, energies


def stationary_mixture(k1: float, k2: float, p: Sequence[float]) -> np.ndarray:
    """Density matrix k1 |11><11| + k2 |-1-1><-1-1| + sum_j p_j |psi_j><psi_j|.

    ``p`` holds the seven weights of the isotropic-parallel K = -1 dark states
    (p_1..p_4) and of the core states psi_5..psi_7.  Stationary whenever
    gamma_x = gamma_y, gamma_z = 0 and omega1(t) = omega2(t).
    """
    w = np.array([k1, k2, *p], dtype=float)
    if w.size != 9:
        raise ValueError("expected k1, k2 and seven weights p_1..p_7")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {w.sum()}")
    states, _ = _all_dark_states()
    rho = np.zeros((9, 9), dtype=complex)
    for wj, psi in zip(w, states):
        rho += wj * np.outer(psi, psi.conj())
    return rho


def thermal_weights(spec: model.HamiltonianSpec, kT: float, t: float = 0.0):
    """Boltzmann weights (k1, k2, p_1..p_7) from the dark-state energies at time t."""
    if not kT > 0:
        raise ValueError("kT must be positive")
    _, energies = _all_dark_states()
    e = np.array([f(spec, t) for f in energies], dtype=float)
    b = np.exp(-(e - e.min()) / kT)
    b /= b.sum()
    return float(b[0]), float(b[1]), tuple(float(x) for x in b[2:])
