import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qutrit_lmsz import entanglement as ent
from qutrit_lmsz import model
from qutrit_lmsz.propagator import WindowSpec, evolve_state


def _random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def _schmidt_negativity(psi):
    # pure state: N = ((sum sqrt(lambda))^2 - 1) / 2 from the Schmidt coefficients
    s = np.linalg.svd(psi.reshape(3, 3), compute_uv=False)
    return 0.5 * (s.sum() ** 2 - 1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_closed_forms_match_general_route(seed):
    rng = np.random.default_rng(seed)
    w = _random_state(rng, 4)
    c = _random_state(rng, 3)
    assert abs(ent.negativity_4d_closed_form(w).value - ent.negativity(ent.embed_4d(w)).value) < 1e-12
    assert abs(ent.negativity_3d_closed_form(c).value - ent.negativity(ent.embed_core(c)).value) < 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_general_route_matches_schmidt_oracle(seed):
    psi = _random_state(np.random.default_rng(seed), 9)
    assert ent.negativity(psi).value == pytest.approx(_schmidt_negativity(psi), abs=1e-12)


def test_partial_transpose_either_subsystem_same_spectrum():
    rng = np.random.default_rng(3)
    psi = _random_state(rng, 9)
    rho = np.outer(psi, psi.conj())
    ea = np.linalg.eigvalsh(ent.partial_transpose(rho, "A"))
    eb = np.linalg.eigvalsh(ent.partial_transpose(rho, "B"))
    assert np.allclose(ea, eb)
    assert ent.negativity(rho, "A").value == pytest.approx(ent.negativity(rho, "B").value)
    with pytest.raises(ValueError):
        ent.partial_transpose(rho, "C")


def test_known_values():
    assert ent.negativity(model.product_state(1, -1)).value == 0.0
    max_ent = sum(model.product_state(m, -m) for m in (1, 0, -1)) / math.sqrt(3)
    assert ent.negativity(max_ent).value == pytest.approx(1.0)
    bell = (model.product_state(1, 0) + model.product_state(0, 1)) / math.sqrt(2)
    assert ent.negativity(bell).value == pytest.approx(0.5)
    assert ent.negativity(np.eye(9) / 9).value == pytest.approx(0.0, abs=1e-15)


def test_mixed_state_negativity_is_convex():
    rng = np.random.default_rng(5)
    p1, p2 = _random_state(rng, 9), _random_state(rng, 9)
    r1, r2 = np.outer(p1, p1.conj()), np.outer(p2, p2.conj())
    mix = ent.negativity(0.5 * (r1 + r2)).value
    assert mix <= 0.5 * (ent.negativity(r1).value + ent.negativity(r2).value) + 1e-12


def test_invalid_density_matrices():
    with pytest.raises(ent.InvalidDensityMatrixError):
        ent.negativity(np.ones(9))
    with pytest.raises(ent.InvalidDensityMatrixError):
        ent.negativity(np.eye(4) / 4)
    bad = np.eye(9) / 9
    bad[0, 1] = 0.1
    with pytest.raises(ent.InvalidDensityMatrixError):
        ent.negativity(bad)
    neg = np.diag([1.2, -0.2] + [0.0] * 7).astype(complex)
    with pytest.raises(ent.InvalidDensityMatrixError):
        ent.negativity(neg)


def test_closed_form_input_checks():
    with pytest.raises(ValueError):
        ent.negativity_4d_closed_form([1, 1, 0, 0])
    with pytest.raises(ValueError):
        ent.negativity_3d_closed_form([1, 0])


def test_asymptotic_values():
    beta_half = math.log(2) / (2 * math.pi)
    assert ent.asymptotic_negativity_3d(beta_half) == pytest.approx(0.25 + math.sqrt(0.5))
    assert ent.asymptotic_negativity_4d(2 * beta_half, beta_half) == pytest.approx(0.5)
    assert ent.asymptotic_negativity_4d(0.0, 0.0) == 0.0


def test_negativity_maxima_positions():
    m = ent.negativity_maxima_4d(2.0)
    assert len(m) == 2
    assert m[0][0] == pytest.approx(math.log(2) / (2 * math.pi), abs=1e-6)
    assert m[1][0] == pytest.approx(math.log(2) / math.pi, abs=1e-6)
    assert all(n == pytest.approx(0.5, abs=1e-9) for _, n in m)


def test_time_series_match_propagated_states():
    bp, bm, tau_i = 0.3, 0.15, -6.0
    gp, gm = math.sqrt(bp), math.sqrt(bm)
    spec = model.HamiltonianSpec(0.5 * (gp + gm), 0.5 * (gp - gm), 0.0, model.LinearRamp(1.0))
    taus = np.linspace(tau_i, 6.0, 9)
    res = evolve_state(spec, model.product_state(-1, 0), WindowSpec(tau_i, 6.0, 1e-12, 1e-14), sample_taus=taus)
    num = [ent.negativity(s / np.linalg.norm(s)).value for s in res.states]
    assert np.allclose(ent.negativity_time_series_4d(bp, bm, taus, tau_i), num, atol=1e-8)

    g = 0.5
    spec3 = model.HamiltonianSpec(g / 2, g / 2, 0.0, model.LinearRamp(1.0))
    res3 = evolve_state(spec3, model.product_state(1, -1), WindowSpec(tau_i, 6.0, 1e-12, 1e-14), sample_taus=taus)
    num3 = [ent.negativity(s / np.linalg.norm(s)).value for s in res3.states]
    assert np.allclose(ent.negativity_time_series_3d(g * g / 2, taus, tau_i), num3, atol=1e-8)
