"""Complex special functions for the exact two-level sweep solution.

The exact amplitudes of a linearly swept two-level system are products of
parabolic cylinder functions D_nu(z) with complex order and complex argument,
normalised by a gamma function of complex argument.  This module provides

``log_gamma``
    principal-branch log Gamma(z) (Lanczos approximation plus upward
    recurrence).
``pcf_d``
    D_nu(z) with a recorded evaluation regime and error estimate.
``lz_cayley_klein``
    the Cayley-Klein pair (a, b) of the swept two-level problem.

Conventions
-----------
The two-level problem is written in the dimensionless sweep variable
tau = sqrt(alpha / hbar) * t as::

    i d/dtau psi = H(tau) psi,    H(tau) = (tau / 2) sigma_z + sqrt(beta) sigma_x

with basis ordering (|+>, |->).  Its evolution matrix is::

    U(tau, tau_i) = [[a, b], [-conj(b), conj(a)]]

so that a system prepared in |-> at tau_i is found in |+> with amplitude b
and stays in |-> with amplitude conj(a).  For tau_i -> -inf and tau -> +inf,
|b|^2 -> 1 - exp(-2 pi beta).
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BETA_MAX",
    "CayleyKlein",
    "GammaPoleError",
    "MAX_ABS_Z",
    "MAX_ABS_NU",
    "PcfAccuracyError",
    "PcfEvaluation",
    "Regime",
    "log_gamma",
    "lz_cayley_klein",
    "pcf_d",
    "pcf_d_ray",
    "rgamma",
]

EPS = np.finfo(float).eps

#: Largest |z| accepted by :func:`pcf_d` (covers tau in [-50, 50] with margin).
MAX_ABS_Z = 80.0
#: Largest |nu| accepted by :func:`pcf_d` (covers beta <= 10 for nu = i beta - 1).
MAX_ABS_NU = 12.0
#: Largest sweep parameter accepted by :func:`lz_cayley_klein`.
BETA_MAX = 10.0

# Switch-over radii, fixed by an offline sweep against 50-digit mpmath values
# on the rays arg z in {0, +-pi/4, +-pi/2} for |nu| <= 12 (see README).
SERIES_RADIUS = 4.0
RECESSIVE_SERIES_RADIUS = 1.0
_CANCEL_RTOL = 1e-12
_ASYMPTOTIC_BASE = 9.0
_ASYMPTOTIC_SLOPE = 1.6

# A result whose estimated relative error exceeds this is rejected.
FAIL_RTOL = 1e-8

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class GammaPoleError(ValueError):
    """Raised when Gamma is evaluated at a non-positive integer."""


class PcfAccuracyError(ArithmeticError):
    """Raised when a parabolic cylinder evaluation cannot meet its tolerance."""


class Regime(enum.Enum):
    SERIES = "series"
    ASYMPTOTIC = "asymptotic"
    ODE_FALLBACK = "ode-fallback"


_REGIME_RANK = {Regime.SERIES: 0, Regime.ASYMPTOTIC: 1, Regime.ODE_FALLBACK: 2}
_RANK_REGIME = {v: k for k, v in _REGIME_RANK.items()}


@dataclass(frozen=True)
class PcfEvaluation:
    value: complex
    regime: Regime
    est_error: float


@dataclass(frozen=True)
class CayleyKlein:
    """Cayley-Klein pair of a 2x2 SU(2) evolution; scalars or equal-shape arrays."""

    a: complex | np.ndarray
    b: complex | np.ndarray
    est_error: float = 0.0

    def matrix(self) -> np.ndarray:
        """Evolution matrix ``[[a, b], [-b*, a*]]`` (last two axes)."""
        a = np.asarray(self.a, dtype=complex)
        b = np.asarray(self.b, dtype=complex)
        return np.stack(
            [np.stack([a, b], axis=-1), np.stack([-b.conj(), a.conj()], axis=-1)],
            axis=-2,
        )

    def norm_defect(self) -> float:
        """max | |a|^2 + |b|^2 - 1 |."""
        a = np.asarray(self.a)
        b = np.asarray(self.b)
        return float(np.max(np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1.0)))


# ---------------------------------------------------------------------------
# Gamma function
# ---------------------------------------------------------------------------


def _is_pole(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def log_gamma(z: complex) -> complex:
    """Principal branch of log Gamma(z).

    The branch cut runs along the negative real axis; the imaginary part is
    continuous elsewhere, so ``exp(log_gamma(z)) == Gamma(z)`` and
    ``log_gamma(z + 1) == log(z) + log_gamma(z)`` off the cut.

    Raises
    ------
    GammaPoleError
        If ``z`` is (numerically) a non-positive integer.
    """
    z = complex(z)
    if _is_pole(z):
        raise GammaPoleError(f"Gamma has a pole at z = {z}")
    if z.real < 0.5:
        # upward recurrence keeps every logarithm on its principal branch
        n = int(math.ceil(0.5 - z.real))
        shift = 0j
        for k in range(n):
            shift += cmath.log(z + k)
        return _log_gamma_lanczos(z + n) - shift
    return _log_gamma_lanczos(z)


def _log_gamma_lanczos(z: complex) -> complex:
    z = z - 1.0
    x = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        x += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


def rgamma(z: complex) -> complex:
    """1 / Gamma(z), entire; exactly zero at the poles of Gamma.

    Left of Re z = 1/2 the reflection formula sin(pi z) Gamma(1 - z) / pi
    keeps full relative accuracy next to the poles.
    """
    z = complex(z)
    if _is_pole(z):
        return 0j
    if z.real < 0.5:
        n = round(z.real)
        sin_pz = (-1) ** (n % 2) * cmath.sin(math.pi * (z - n))  # z - n is exact
        return sin_pz / math.pi * cmath.exp(log_gamma(1.0 - z))
    return cmath.exp(-log_gamma(z))


# ---------------------------------------------------------------------------
# Parabolic cylinder function D_nu(z)
# ---------------------------------------------------------------------------


def _asymptotic_radius(nu: complex) -> float:
    return _ASYMPTOTIC_BASE + _ASYMPTOTIC_SLOPE * abs(nu)


def _check_domain(nu: complex, max_r: float) -> None:
    if abs(nu) > MAX_ABS_NU:
        raise ValueError(f"|nu| = {abs(nu):.3g} exceeds the supported maximum {MAX_ABS_NU}")
    if max_r > MAX_ABS_Z:
        raise ValueError(f"|z| = {max_r:.3g} exceeds the supported maximum {MAX_ABS_Z}")


def _origin_coefficients(nu: complex, radius: float):
    """Taylor coefficients of D_nu about z = 0, enough for |z| <= radius."""
    c0 = 2.0 ** (nu / 2) * math.sqrt(math.pi) * rgamma((1.0 - nu) / 2)
    c1 = -(2.0 ** ((nu + 1) / 2)) * math.sqrt(math.pi) * rgamma(-nu / 2)
    coef = [complex(c0), complex(c1)]
    q = -(nu + 0.5)
    quiet = 0
    n = 0
    scale = max(abs(c0), abs(c1), 1e-300)
    while n < 400:
        prev2 = coef[n - 2] if n >= 2 else 0j
        c = (q * coef[n] + 0.25 * prev2) / ((n + 2) * (n + 1))
        coef.append(c)
        n += 1
        mag = abs(c) * radius ** (n + 1)
        scale = max(scale, mag)
        quiet = quiet + 1 if mag < EPS * 1e-2 * scale else 0
        if quiet >= 4 and n > 8:
            break
    return np.array(coef)


def _series_eval(nu: complex, z: np.ndarray):
    """Power series at the origin; returns (w, dw, abs_err)."""
    radius = float(np.max(np.abs(z))) if z.size else 0.0
    coef = _origin_coefficients(nu, max(radius, 1e-3))
    w = np.zeros_like(z, dtype=complex)
    for n in range(len(coef) - 1, -1, -1):
        w = w * z + coef[n]
    dw = _series_derivative(coef, z)
    absz = np.abs(z)
    mag = np.zeros_like(absz)
    for n in range(len(coef)):
        mag = np.maximum(mag, np.abs(coef[n]) * absz**n)
    err = 32 * EPS * mag * len(coef) ** 0.5
    return w, dw, err


def _series_derivative(coef: np.ndarray, z: np.ndarray) -> np.ndarray:
    dw = np.zeros_like(z, dtype=complex)
    for n in range(len(coef) - 1, 0, -1):
        dw = dw * z + n * coef[n]
    return dw


def _asymptotic_eval(nu: complex, z: np.ndarray):
    """Large-|z| expansion valid for |arg z| <= pi/2; returns (w, dw, abs_err, ok)."""
    z = np.asarray(z, dtype=complex)
    z2 = 2.0 * z * z
    term = np.ones_like(z)
    s = np.ones_like(z)
    ds = np.zeros_like(z)  # d/dz of the series
    last = np.abs(term)
    active = np.ones(z.shape, dtype=bool)
    err = np.zeros(z.shape)
    for k in range(0, 200):
        new = -term * (2 * k - nu) * (2 * k + 1 - nu) / ((k + 1) * z2)
        mag = np.abs(new)
        diverging = mag > last
        small = mag <= EPS * 0.1 * np.abs(s)
        stop = active & (diverging | small)
        err = np.where(stop, np.where(diverging, last, mag), err)
        active &= ~stop
        if not active.any():
            break
        term = np.where(active, new, term)
        s = np.where(active, s + new, s)
        ds = np.where(active, ds + new * (-2.0 * (k + 1)) / z, ds)
        last = np.where(active, mag, last)
    ok = ~active & (err <= 1e3 * EPS * np.abs(s))
    log_pref = -z * z / 4 + nu * np.log(z)
    if np.any(log_pref.real > 700.0):
        raise OverflowError("D_nu(z) exceeds the double-precision range")
    pref = np.exp(log_pref)
    w = pref * s
    dw = pref * ((-z / 2 + nu / z) * s + ds)
    # rounding of z itself is amplified by the Gaussian factor
    cond = EPS * (0.5 * np.abs(z) ** 2 + abs(nu) + 4)
    abs_err = np.abs(pref) * (err + cond * np.abs(s))
    return w, dw, abs_err, ok


def _taylor_step(nu: complex, z0: complex, w: np.ndarray, dw: np.ndarray, h: complex):
    """Continue Weber solutions (one per entry of ``w``) from z0 to z0 + h.

    Sums the local Taylor series of w'' = (z^2/4 - nu - 1/2) w, whose
    coefficients obey (n+2)(n+1) c_{n+2} = q0 c_n + (z0/2) c_{n-1} + c_{n-2}/4.
    Returns (w1, dw1, rel_round) with rel_round the rounding estimate of
    entry 0.
    """
    q0 = z0 * z0 / 4 - nu - 0.5
    h2 = h * h
    a0 = q0 * h2
    a1 = 0.5 * z0 * h2 * h
    a2 = 0.25 * h2 * h2
    # scaled coefficients d_n = c_n h^n, kept as a sliding window
    d_m2 = np.zeros_like(w)
    d_m1 = np.zeros_like(w)
    d_0 = w.copy()
    d_1 = dw * h
    total = d_0 + d_1
    dtotal = d_1.copy()
    mag = max(abs(d_0[0]), abs(d_1[0]))
    quiet = 0
    n = 0
    while n < 300:
        # d_{n+2} from d_n, d_{n-1}, d_{n-2}
        nxt = (a0 * d_0 + a1 * d_m1 + a2 * d_m2) / ((n + 2) * (n + 1))
        total += nxt
        dtotal += (n + 2) * nxt
        mag = max(mag, abs(nxt[0]))
        small = np.abs(nxt) <= EPS * 1e-2 * np.maximum(np.abs(total), 1e-300)
        quiet = quiet + 1 if small.all() else 0
        d_m2, d_m1, d_0, d_1 = d_m1, d_0, d_1, nxt
        n += 1
        if quiet >= 3 and n > 4:
            break
    rel_round = 4 * EPS * mag / max(abs(total[0]), 1e-300)
    return total, dtotal / h, rel_round


def _step_size(nu: complex, r: float) -> float:
    k = math.sqrt(abs(r * r / 4 - nu.real - 0.5) + abs(nu.imag) + 1.0)
    return min(1.0, 2.0 / k)


def _continue_along_ray(nu, phase, r_start, w, dw, err0, targets):
    """Walk a Weber solution along the ray r*phase, visiting ``targets`` in order.

    Two probe solutions started from unit value and unit slope track how an
    error in the carried data is amplified, so the returned absolute error
    estimates stay honest when the wanted solution is recessive.

    Returns arrays (values, abs_err) aligned with ``targets``.
    """
    vals = np.empty(len(targets), dtype=complex)
    errs = np.empty(len(targets))
    state = np.array([w, 1.0, 0.0], dtype=complex)
    dstate = np.array([dw, 0.0, 1.0], dtype=complex)
    # error carried in units of the probe basis
    err = err0
    probe_norm = 1.0
    r = r_start
    for i, rt in enumerate(targets):
        while rt != r:
            step = _step_size(nu, r)
            dr = rt - r
            if abs(dr) > step:
                dr = math.copysign(step, dr)
            r_new = rt if abs(rt - (r + dr)) <= 1e-14 * max(1.0, rt) else r + dr
            state, dstate, rr = _taylor_step(nu, r * phase, state, dstate, (r_new - r) * phase)
            r = r_new
            new_norm = max(abs(state[1]) + abs(state[2]), abs(dstate[1]) + abs(dstate[2]))
            err = err * new_norm / probe_norm + rr * abs(state[0])
            state[1:] /= new_norm
            dstate[1:] /= new_norm
            probe_norm = 1.0
        vals[i] = state[0]
        errs[i] = err
    return vals, errs


def pcf_d_ray(nu: complex, phase: complex, radii):
    """Evaluate D_nu(r * phase) for an array of radii on one ray.

    Parameters
    ----------
    nu : complex
        Order.
    phase : complex
        Unit complex number fixing the ray direction.
    radii : array_like
        Non-negative radii.

    Returns
    -------
    values : ndarray of complex
    est_error : ndarray of float
        Absolute error estimates.
    regimes : ndarray of int
        Regime rank per point (0 series, 1 asymptotic, 2 ode-fallback).
    """
    nu = complex(nu)
    phase = complex(phase)
    phase /= abs(phase)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii < 0):
        raise ValueError("radii must be non-negative")
    _check_domain(nu, float(radii.max()) if radii.size else 0.0)
    if radii.size == 0:
        return np.zeros(0, complex), np.zeros(0), np.zeros(0, int)

    if phase.real < -1e-15:
        # left half-plane: connection formula onto two right half-plane rays
        s = 1.0 if phase.imag >= 0 else -1.0
        v1, e1, g1 = pcf_d_ray(nu, -phase, radii)
        v2, e2, g2 = pcf_d_ray(-nu - 1.0, -s * 1j * phase, radii)
        c1 = cmath.exp(s * 1j * math.pi * nu)
        c2 = _SQRT_2PI * rgamma(-nu) * cmath.exp(s * 1j * math.pi * (nu + 1.0) / 2)
        vals = c1 * v1 + c2 * v2
        mags = abs(c1) * np.abs(v1) + abs(c2) * np.abs(v2)
        errs = abs(c1) * e1 + abs(c2) * e2 + 4 * EPS * mags
        regs = np.maximum(g1, g2)
        # the two terms can cancel; the direct outward route is stable here
        bad = errs > _CANCEL_RTOL * np.abs(vals)
        if bad.any():
            vd, ed = _outward(nu, phase, radii[bad])
            better = ed < errs[bad]
            idx = np.nonzero(bad)[0][better]
            vals[idx], errs[idx] = vd[better], ed[better]
            regs[idx] = np.where(radii[idx] <= SERIES_RADIUS, 0, 2)
        return vals, errs, regs

    vals = np.empty(radii.shape, dtype=complex)
    errs = np.empty(radii.shape)
    regs = np.empty(radii.shape, dtype=int)
    r_asym = _asymptotic_radius(nu)
    recessive = abs(cmath.phase(phase)) <= math.pi / 4 + 1e-12
    r_ser = RECESSIVE_SERIES_RADIUS if recessive else SERIES_RADIUS

    ser = radii <= r_ser
    if ser.any():
        w, _, e = _series_eval(nu, radii[ser] * phase)
        vals[ser], errs[ser], regs[ser] = w, e, 0

    asy = radii >= r_asym
    if asy.any():
        w, _, e, ok = _asymptotic_eval(nu, radii[asy] * phase)
        if not ok.all():
            raise PcfAccuracyError(f"asymptotic expansion did not converge for nu={nu}")
        vals[asy], errs[asy], regs[asy] = w, e, 1

    mid = ~ser & ~asy
    if mid.any():
        idx = np.nonzero(mid)[0]
        first, second = (_inward, _outward) if recessive else (_outward, _inward)
        v, e = first(nu, phase, radii[idx], r_ser, r_asym)
        # fall back to the other direction where the first is ill-conditioned
        bad = e > _CANCEL_RTOL * np.abs(v)
        if bad.any():
            v2, e2 = second(nu, phase, radii[idx][bad], r_ser, r_asym)
            take = e2 < e[bad]
            sub = np.nonzero(bad)[0][take]
            v[sub], e[sub] = v2[take], e2[take]
        vals[idx], errs[idx], regs[idx] = v, e, 2
    return vals, errs, regs


def _walk(nu, phase, radii, r_start, w0, dw0, e0, descending):
    order = np.argsort(-radii if descending else radii)
    w0, dw0 = complex(w0[0]), complex(dw0[0])
    e0 = float(e0[0])
    err0 = e0 * (1.0 + abs(dw0) / max(abs(w0), 1e-300))
    v, e = _continue_along_ray(nu, phase, r_start, w0, dw0, err0, radii[order])
    vals = np.empty(radii.shape, dtype=complex)
    errs = np.empty(radii.shape)
    vals[order], errs[order] = v, e
    return vals, errs


def _inward(nu, phase, radii, r_ser, r_asym):
    """Large-argument expansion at r_asym, continued inward."""
    w0, dw0, e0, ok = _asymptotic_eval(nu, np.array([r_asym * phase]))
    if not ok.all():
        raise PcfAccuracyError(f"asymptotic start failed for nu={nu}")
    return _walk(nu, phase, radii, r_asym, w0, dw0, e0, True)


def _outward(nu, phase, radii, r_ser=SERIES_RADIUS, r_asym=None):
    """Origin series at r_ser, continued outward (series itself inside r_ser)."""
    vals = np.empty(radii.shape, dtype=complex)
    errs = np.empty(radii.shape)
    inner = radii <= r_ser
    if inner.any():
        w, _, e = _series_eval(nu, radii[inner] * phase)
        vals[inner], errs[inner] = w, e
    if (~inner).any():
        w0, dw0, e0 = _series_eval(nu, np.array([r_ser * phase]))
        vals[~inner], errs[~inner] = _walk(nu, phase, radii[~inner], r_ser, w0, dw0, e0, False)
    return vals, errs


def pcf_d(nu: complex, z: complex) -> PcfEvaluation:
    """Parabolic cylinder function D_nu(z) for complex order and argument.

    Evaluated by a power series about the origin for ``|z| <= SERIES_RADIUS``,
    by the large-argument expansion (with the connection formula in the left
    half-plane) for ``|z| >= 9 + 1.6 |nu|``, and otherwise by high-order Taylor
    continuation of the Weber equation along the ray through ``z``.

    Raises
    ------
    ValueError
        Outside ``|z| <= MAX_ABS_Z`` or ``|nu| <= MAX_ABS_NU``.
    PcfAccuracyError
        If the estimated relative error exceeds ``FAIL_RTOL``.
    """
    nu = complex(nu)
    z = complex(z)
    r = abs(z)
    phase = z / r if r > 0 else 1.0 + 0j
    vals, errs, regs = pcf_d_ray(nu, phase, [r])
    value, err = complex(vals[0]), float(errs[0])
    if not np.isfinite(err) or err > FAIL_RTOL * abs(value) and abs(value) > 1e-290:
        raise PcfAccuracyError(
            f"D_{nu}({z}) estimated relative error {err / abs(value):.2e} exceeds {FAIL_RTOL:g}"
        )
    return PcfEvaluation(value, _RANK_REGIME[int(regs[0])], err)


# ---------------------------------------------------------------------------
# Exact two-level sweep
# ---------------------------------------------------------------------------

_K = cmath.exp(-0.25j * math.pi)


def _d_on_real_line(nu: complex, x: np.ndarray, sign: float):
    """D_nu(sign * K * x) for real x; returns (values, abs_err)."""
    out = np.empty(x.shape, dtype=complex)
    err = np.empty(x.shape)
    pos = sign * x >= 0
    for mask, phase in ((pos, _K), (~pos, -_K)):
        if mask.any():
            v, e, _ = pcf_d_ray(nu, phase, np.abs(x[mask]))
            out[mask], err[mask] = v, e
    return out, err


def lz_cayley_klein(beta: float, tau, tau_i: float) -> CayleyKlein:
    """Exact Cayley-Klein parameters of the linearly swept two-level system.

    Parameters
    ----------
    beta : float
        Sweep parameter (coupling^2 / (hbar alpha)), ``0 <= beta <= BETA_MAX``.
    tau : float or array_like
        Dimensionless time(s) ``sqrt(alpha/hbar) t``, each ``>= tau_i``.
    tau_i : float
        Initial time.

    Returns
    -------
    CayleyKlein
        ``a`` and ``b`` with the shape of ``tau``; the evolution matrix is
        ``[[a, b], [-b*, a*]]`` in the basis (|+>, |->).  ``est_error`` bounds
        the propagated special-function error of both amplitudes.
    """
    if not 0.0 <= beta <= BETA_MAX:
        raise ValueError(f"beta must lie in [0, {BETA_MAX}], got {beta}")
    tau_arr = np.asarray(tau, dtype=float)
    scalar = tau_arr.ndim == 0
    tau_arr = np.atleast_1d(tau_arr)
    if np.any(tau_arr < tau_i - 1e-12):
        raise ValueError("tau must not precede tau_i")

    nu = 1j * beta
    lg = log_gamma(1.0 - nu)
    norm = cmath.exp(lg) / _SQRT_2PI
    ti = np.array([float(tau_i)])

    d_p, e_p = _d_on_real_line(nu, tau_arr, 1.0)  # D_nu(K tau)
    d_m, e_m = _d_on_real_line(nu, tau_arr, -1.0)  # D_nu(-K tau)
    d1_p, e1_p = _d_on_real_line(nu - 1.0, tau_arr, 1.0)
    d1_m, e1_m = _d_on_real_line(nu - 1.0, tau_arr, -1.0)
    i1_p, ie_p = _d_on_real_line(nu - 1.0, ti, 1.0)  # D_{nu-1}(K tau_i)
    i1_m, ie_m = _d_on_real_line(nu - 1.0, ti, -1.0)  # D_{nu-1}(-K tau_i)
    i1_p, i1_m = complex(i1_p[0]), complex(i1_m[0])
    ie_p, ie_m = float(ie_p[0]), float(ie_m[0])

    stay = norm * (d_p * i1_m + d_m * i1_p)
    flip = -math.sqrt(beta) * _K * norm * (d1_p * i1_m - d1_m * i1_p)

    an = abs(norm)
    err_stay = an * (e_p * abs(i1_m) + np.abs(d_p) * ie_m + e_m * abs(i1_p) + np.abs(d_m) * ie_p)
    err_flip = math.sqrt(beta) * an * (
        e1_p * abs(i1_m) + np.abs(d1_p) * ie_m + e1_m * abs(i1_p) + np.abs(d1_m) * ie_p
    )
    scale = an * (np.abs(d_p) * abs(i1_m) + np.abs(d_m) * abs(i1_p))
    est = float(np.max(err_stay + err_flip + 8 * EPS * scale))

    a = stay.conj()
    b = flip
    if scalar:
        return CayleyKlein(complex(a[0]), complex(b[0]), est)
    return CayleyKlein(a.reshape(np.shape(tau)), b.reshape(np.shape(tau)), est)
