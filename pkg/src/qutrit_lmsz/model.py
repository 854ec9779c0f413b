"""Two-qutrit Hamiltonian, its conserved parity and the invariant blocks.

Units: hbar = 1.  Energies are in units of a reference energy E0 and times
in units of hbar / E0.

Product basis
-------------
States |m1 m2> with m in (1, 0, -1) are ordered as ``numpy.kron`` orders
them, i.e. index ``3 * (1 - m1) + (1 - m2)``.

Invariant blocks
----------------
The parity K = cos(pi (m1 + m2)) commutes with H(t) and splits the nine
states into::

    basis4 = [|1 0>, |0 1>, |0 -1>, |-1 0>]          (K = -1)
    basis5 = [|1 1>, |1 -1>, |0 0>, |-1 1>, |-1 -1>]  (K = +1)

Inside basis4 the dynamics is that of two uncoupled fictitious qubits
(labelled ++, +-, -+, -- in the same order).  Inside basis5 the middle three
states form a spin-1 core when gamma_x = gamma_y and gamma_z = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import FieldDomainError, PreconditionError, SymmetryViolationError

__all__ = [
    "BASIS4",
    "BASIS5",
    "BlockDecomposition",
    "Constant",
    "Custom",
    "Decay",
    "DerivedParameters",
    "FieldProtocol",
    "HalfRamp",
    "HamiltonianSpec",
    "LinearRamp",
    "Negated",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "Spin1Operators",
    "Sum",
    "basis_index",
    "block_decompose",
    "build_full_hamiltonian",
    "build_spin1_operators",
    "constant_of_motion_k",
    "decay_operator",
    "derived_parameters",
    "fictitious_qubit_hamiltonians",
    "h3_block",
    "map_4d_state",
    "product_state",
    "unmap_4d_state",
]

M_VALUES = (1, 0, -1)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

BASIS4 = ((1, 0), (0, 1), (0, -1), (-1, 0))
BASIS5 = ((1, 1), (1, -1), (0, 0), (-1, 1), (-1, -1))
QUBIT_LABELS = ("++", "+-", "-+", "--")


def basis_index(m1: int, m2: int) -> int:
    """Index of |m1 m2> in the nine-dimensional product basis."""
    if m1 not in M_VALUES or m2 not in M_VALUES:
        raise ValueError(f"magnetic numbers must be in {M_VALUES}, got ({m1}, {m2})")
    return 3 * (1 - m1) + (1 - m2)


def product_state(m1: int, m2: int) -> np.ndarray:
    psi = np.zeros(9, dtype=complex)
    psi[basis_index(m1, m2)] = 1.0
    return psi


# ---------------------------------------------------------------------------
# Spin-1 operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spin1Operators:
    """Spin-1 matrices scaled so that [sigma_x, sigma_y] = 2i sigma_z."""

    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_z: np.ndarray

    def as_tuple(self):
        return self.sigma_x, self.sigma_y, self.sigma_z


def build_spin1_operators() -> Spin1Operators:
    """Return the spin-1 matrices in the basis (|1>, |0>, |-1>)."""
    sx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    for m in (sx, sy, sz):
        m.flags.writeable = False
    return Spin1Operators(sx, sy, sz)


_SPIN1 = build_spin1_operators()
_I3 = np.eye(3)


# ---------------------------------------------------------------------------
# Field protocols
# ---------------------------------------------------------------------------


class FieldProtocol:
    """Time-dependent angular frequency omega(t).

    Subclasses implement ``__call__`` (vectorised in t) and ``integral``
    (the accumulated phase from t0 to t1).  ``sweep_rate`` is the slope of a
    linear ramp and ``None`` for non-ramping protocols.
    """

    sweep_rate: Optional[float] = None

    def __call__(self, t):
        raise NotImplementedError

    def integral(self, t0: float, t1: float) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def affine(self) -> Optional[tuple]:
        """(offset, slope) if omega(t) = offset + slope t exactly, else None."""
        return None

    def domain(self) -> tuple:
        """Interval of t on which the field is defined."""
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class LinearRamp(FieldProtocol):
    """omega(t) = alpha * t."""

    alpha: float

    @property
    def sweep_rate(self) -> float:
        return self.alpha

    def __call__(self, t):
        return self.alpha * np.asarray(t, dtype=float) if np.ndim(t) else self.alpha * float(t)

    def integral(self, t0, t1):
        return 0.5 * self.alpha * (t1 * t1 - t0 * t0)

    def to_dict(self):
        return {"kind": "linear_ramp", "alpha": self.alpha}

    def affine(self):
        return 0.0, float(self.alpha)


@dataclass(frozen=True)
class HalfRamp(FieldProtocol):
    """omega(t) = alpha * t / 2 (each qutrit sees half of a shared ramp)."""

    alpha: float

    @property
    def sweep_rate(self) -> float:
        return 0.5 * self.alpha

    def __call__(self, t):
        return 0.5 * self.alpha * np.asarray(t, dtype=float) if np.ndim(t) else 0.5 * self.alpha * float(t)

    def integral(self, t0, t1):
        return 0.25 * self.alpha * (t1 * t1 - t0 * t0)

    def to_dict(self):
        return {"kind": "half_ramp", "alpha": self.alpha}

    def affine(self):
        return 0.0, 0.5 * self.alpha


@dataclass(frozen=True)
class Constant(FieldProtocol):
    omega: float = 0.0

    def __call__(self, t):
        return np.full(np.shape(t), self.omega) if np.ndim(t) else float(self.omega)

    def integral(self, t0, t1):
        return self.omega * (t1 - t0)

    def to_dict(self):
        return {"kind": "constant", "omega": self.omega}

    def affine(self):
        return float(self.omega), 0.0


@dataclass(frozen=True)
class Negated(FieldProtocol):
    inner: FieldProtocol

    @property
    def sweep_rate(self):
        r = self.inner.sweep_rate
        return None if r is None else -r

    def __call__(self, t):
        return -self.inner(t)

    def integral(self, t0, t1):
        return -self.inner.integral(t0, t1)

    def to_dict(self):
        return {"kind": "negated", "inner": self.inner.to_dict()}

    def affine(self):
        c = self.inner.affine()
        return None if c is None else (-c[0], -c[1])

    def domain(self):
        return self.inner.domain()


@dataclass(frozen=True)
class Sum(FieldProtocol):
    """Pointwise sum of protocols, e.g. a ramp plus a constant offset."""

    terms: tuple

    @property
    def sweep_rate(self):
        rates = [p.sweep_rate for p in self.terms if p.sweep_rate is not None]
        return sum(rates) if rates else None

    def __call__(self, t):
        return sum(p(t) for p in self.terms)

    def integral(self, t0, t1):
        return sum(p.integral(t0, t1) for p in self.terms)

    def to_dict(self):
        return {"kind": "sum", "terms": [p.to_dict() for p in self.terms]}

    def affine(self):
        cs = [p.affine() for p in self.terms]
        if any(c is None for c in cs):
            return None
        return sum(c[0] for c in cs), sum(c[1] for c in cs)

    def domain(self):
        ds = [p.domain() for p in self.terms]
        return max(d[0] for d in ds), min(d[1] for d in ds)


@dataclass(frozen=True, eq=False)
class Custom(FieldProtocol):
    """Sampled field with monotone cubic (PCHIP) interpolation.

    Evaluation outside ``[times[0], times[-1]]`` raises ``FieldDomainError``.
    """

    times: tuple
    values: tuple
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)
    _antideriv: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("custom field needs matching 1-D times and values (>= 2 samples)")
        if np.any(np.diff(t) <= 0):
            raise ValueError("custom field times must be strictly increasing")
        object.__setattr__(self, "times", tuple(t.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        interp = PchipInterpolator(t, v, extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_antideriv", interp.antiderivative())

    def _check(self, t):
        lo, hi = self.times[0], self.times[-1]
        tt = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(tt < lo - slack) or np.any(tt > hi + slack):
            raise FieldDomainError(f"custom field covers [{lo}, {hi}], evaluated at {t}")
        return np.clip(tt, lo, hi)

    def domain(self):
        return self.times[0], self.times[-1]

    def __call__(self, t):
        out = self._interp(self._check(t))
        return out if np.ndim(t) else float(out)

    def integral(self, t0, t1):
        a, b = self._check(t0), self._check(t1)
        return float(self._antideriv(b) - self._antideriv(a))

    def to_dict(self):
        return {"kind": "custom", "times": list(self.times), "values": list(self.values)}


def field_from_dict(d: dict) -> FieldProtocol:
    """Inverse of ``FieldProtocol.to_dict``."""
    kind = d.get("kind")
    if kind == "linear_ramp":
        return LinearRamp(float(d["alpha"]))
    if kind == "half_ramp":
        return HalfRamp(float(d["alpha"]))
    if kind == "constant":
        return Constant(float(d.get("omega", 0.0)))
    if kind == "negated":
        return Negated(field_from_dict(d["inner"]))
    if kind == "sum":
        return Sum(tuple(field_from_dict(x) for x in d["terms"]))
    if kind == "custom":
        return Custom(tuple(d["times"]), tuple(d["values"]))
    raise ValueError(f"unknown field protocol kind {kind!r}")


# ---------------------------------------------------------------------------
# Hamiltonian specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decay:
    """Phenomenological decay rates of qutrit 1 and qutrit 2 (1 / time)."""

    rate1: float = 0.0
    rate2: float = 0.0

    def __post_init__(self):
        for r in (self.rate1, self.rate2):
            if not (math.isfinite(r) and r >= 0.0):
                raise ValueError(f"decay rates must be finite and non-negative, got {r}")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Couplings, field protocols and optional noise / decay of the two qutrits.

    The noise entry is a ``qutrit_lmsz.noise.NoiseSpec`` (kept untyped here
    to avoid an import cycle); it is ignored by deterministic evolution.
    """

    gamma_x: float = 0.0
    gamma_y: float = 0.0
    gamma_z: float = 0.0
    omega1: FieldProtocol = field(default_factory=Constant)
    omega2: FieldProtocol = field(default_factory=Constant)
    noise: object = None
    decay: Optional[Decay] = None

    def __post_init__(self):
        for name in ("gamma_x", "gamma_y", "gamma_z"):
            v = getattr(self, name)
            if isinstance(v, complex) or not math.isfinite(float(v)):
                raise ValueError(f"{name} must be a finite real number, got {v!r}")
            object.__setattr__(self, name, float(v))
        for name in ("omega1", "omega2"):
            if not isinstance(getattr(self, name), FieldProtocol):
                raise TypeError(f"{name} must be a FieldProtocol")

    @property
    def gamma_plus(self) -> float:
        return self.gamma_x + self.gamma_y

    @property
    def gamma_minus(self) -> float:
        return self.gamma_x - self.gamma_y

    @property
    def sweep_rate(self) -> float:
        """Rate alpha that defines the dimensionless time tau = sqrt(alpha) t.

        Taken from the first ramping field (omega1, then omega2) as the full
        ramp alpha; defaults to 1 when neither field ramps.
        """
        for f in (self.omega1, self.omega2):
            if isinstance(f, HalfRamp):
                return abs(f.alpha)
            r = f.sweep_rate
            if r:
                return abs(r)
        return 1.0

    def hermitian(self) -> "HamiltonianSpec":
        """Copy without decay."""
        return HamiltonianSpec(
            self.gamma_x, self.gamma_y, self.gamma_z, self.omega1, self.omega2, self.noise, None
        )


@dataclass(frozen=True)
class DerivedParameters:
    Omega_plus: float
    Omega_minus: float
    gamma_plus: float
    gamma_minus: float
    gamma: Optional[float]


def derived_parameters(spec: HamiltonianSpec, t: float, atol: float = 1e-12) -> DerivedParameters:
    """Omega_{+-} = omega1 +- omega2 and gamma_{+-} = gamma_x +- gamma_y at time t.

    ``gamma`` (= 2 gamma_x) is set only in the isotropic case gamma_x = gamma_y.
    """
    w1, w2 = spec.omega1(t), spec.omega2(t)
    iso = abs(spec.gamma_minus) <= atol * max(1.0, abs(spec.gamma_x))
    return DerivedParameters(
        w1 + w2, w1 - w2, spec.gamma_plus, spec.gamma_minus, 2.0 * spec.gamma_x if iso else None
    )


# ---------------------------------------------------------------------------
# Full Hamiltonian and parity
# ---------------------------------------------------------------------------

_SZ1 = np.kron(_SPIN1.sigma_z, _I3)
_SZ2 = np.kron(_I3, _SPIN1.sigma_z)
_XX = np.kron(_SPIN1.sigma_x, _SPIN1.sigma_x)
_YY = np.kron(_SPIN1.sigma_y, _SPIN1.sigma_y)
_ZZ = np.kron(_SPIN1.sigma_z, _SPIN1.sigma_z)


def coupling_matrix(spec: HamiltonianSpec) -> np.ndarray:
    """Time-independent part sum_k gamma_k Sigma_1k Sigma_2k."""
    return spec.gamma_x * _XX + spec.gamma_y * _YY + spec.gamma_z * _ZZ


def build_full_hamiltonian(spec: HamiltonianSpec, t: float) -> np.ndarray:
    """9x9 Hermitian H(t) = w1(t) Sz x I + w2(t) I x Sz + sum_k g_k Sk x Sk."""
    return spec.omega1(t) * _SZ1 + spec.omega2(t) * _SZ2 + coupling_matrix(spec)


def decay_operator(spec: HamiltonianSpec) -> np.ndarray:
    """Anti-Hermitian decay term -i[G1 (Sz+1) x I + G2 I x (Sz+1)].

    The +1 shift leaves |-1 -1> undamped; |0> and |1> of qutrit j lose
    amplitude at rates G_j and 2 G_j.
    """
    if spec.decay is None:
        return np.zeros((9, 9), dtype=complex)
    g1, g2 = spec.decay.rate1, spec.decay.rate2
    return -1j * (g1 * (_SZ1 + np.eye(9)) + g2 * (_SZ2 + np.eye(9)))


def constant_of_motion_k() -> np.ndarray:
    """Parity K = cos(pi (m1 + m2)), diagonal in the product basis."""
    d = [math.cos(math.pi * (m1 + m2)) for m1 in M_VALUES for m2 in M_VALUES]
    return np.diag(np.round(d)).astype(complex)


# ---------------------------------------------------------------------------
# Block decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockDecomposition:
    basis4: tuple = BASIS4
    basis5: tuple = BASIS5
    qubit_map: tuple = tuple(zip(BASIS4, QUBIT_LABELS))

    @property
    def index4(self) -> np.ndarray:
        return np.array([basis_index(*s) for s in self.basis4])

    @property
    def index5(self) -> np.ndarray:
        return np.array([basis_index(*s) for s in self.basis5])

    @property
    def permutation(self) -> np.ndarray:
        """Product-basis indices in block order (basis4 then basis5)."""
        return np.concatenate([self.index4, self.index5])

    def reassemble(self, h_minus: np.ndarray, h_plus: np.ndarray) -> np.ndarray:
        """Block-diagonal 9x9 matrix in the product basis."""
        out = np.zeros((9, 9), dtype=complex)
        i4, i5 = self.index4, self.index5
        out[np.ix_(i4, i4)] = h_minus
        out[np.ix_(i5, i5)] = h_plus
        return out

    def embed4(self, v4) -> np.ndarray:
        psi = np.zeros(9, dtype=complex)
        psi[self.index4] = v4
        return psi

    def embed5(self, v5) -> np.ndarray:
        psi = np.zeros(9, dtype=complex)
        psi[self.index5] = v5
        return psi


DECOMPOSITION = BlockDecomposition()


def block_decompose(H: np.ndarray, rtol: float = 1e-12):
    """Split a parity-conserving 9x9 matrix into its 4x4 and 5x5 blocks.

    Returns
    -------
    (H_minus, H_plus, BlockDecomposition)

    Raises
    ------
    SymmetryViolationError
        If entries coupling the two blocks exceed ``rtol * ||H||``.
    """
    H = np.asarray(H)
    if H.shape != (9, 9):
        raise ValueError(f"expected a 9x9 matrix, got {H.shape}")
    d = DECOMPOSITION
    i4, i5 = d.index4, d.index5
    cross = max(np.max(np.abs(H[np.ix_(i4, i5)])), np.max(np.abs(H[np.ix_(i5, i4)])))
    scale = np.linalg.norm(H, 2)
    if cross > rtol * max(scale, 1e-300) and cross > 0:
        raise SymmetryViolationError(
            f"matrix couples the parity sectors: cross-block entry {cross:.3e} vs norm {scale:.3e}"
        )
    return H[np.ix_(i4, i4)].copy(), H[np.ix_(i5, i5)].copy(), d


def fictitious_qubit_hamiltonians(spec: HamiltonianSpec, t: float):
    """Qubit Hamiltonians (H1, H2) whose sum H1 x I + I x H2 is the 4x4 block.

    H1 = (Omega_+/2) sigma_z + gamma_- sigma_x and
    H2 = (Omega_-/2) sigma_z + gamma_+ sigma_x; neither depends on gamma_z.
    """
    p = derived_parameters(spec, t)
    h1 = 0.5 * p.Omega_plus * PAULI_Z + p.gamma_minus * PAULI_X
    h2 = 0.5 * p.Omega_minus * PAULI_Z + p.gamma_plus * PAULI_X
    return h1, h2


def check_core_conditions(spec: HamiltonianSpec, atol: float = 1e-12) -> float:
    """Return gamma = gamma_x + gamma_y if the spin-1 core conditions hold."""
    scale = max(1.0, abs(spec.gamma_x), abs(spec.gamma_y))
    if abs(spec.gamma_z) > atol * scale or abs(spec.gamma_minus) > atol * scale:
        raise PreconditionError(
            "the spin-1 core requires gamma_x = gamma_y and gamma_z = 0 "
            f"(got gamma_x={spec.gamma_x}, gamma_y={spec.gamma_y}, gamma_z={spec.gamma_z})"
        )
    return spec.gamma_plus


def h3_block(spec: HamiltonianSpec, t: float) -> np.ndarray:
    """3x3 core gamma Sigma_x + Omega_- Sigma_z on (|1 -1>, |0 0>, |-1 1>)."""
    gamma = check_core_conditions(spec)
    p = derived_parameters(spec, t)
    return gamma * _SPIN1.sigma_x + p.Omega_minus * _SPIN1.sigma_z


def map_4d_state(v4) -> np.ndarray:
    """Basis4 amplitudes -> two-qubit amplitudes in the order (++, +-, -+, --).

    The relabelling |1 0> -> |++>, |0 1> -> |+->, |0 -1> -> |-+>,
    |-1 0> -> |--> keeps positions, so this is a validated copy.
    """
    v = np.asarray(v4, dtype=complex)
    if v.shape[-1] != 4:
        raise ValueError("expected 4 amplitudes")
    return v.copy()


def unmap_4d_state(q) -> np.ndarray:
    """Inverse of :func:`map_4d_state`."""
    q = np.asarray(q, dtype=complex)
    if q.shape[-1] != 4:
        raise ValueError("expected 4 amplitudes")
    return q.copy()
