import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qutrit_lmsz import analytic, model
from qutrit_lmsz.errors import NonConvergenceError
from qutrit_lmsz.propagator import (
    PICTURES,
    WindowSpec,
    asymptotic_populations,
    build_picture,
    default_half_width,
    evolve_nonhermitian,
    evolve_operator,
    evolve_state,
)


def magnus4(hfun, t0, t1, n):
    """Fourth-order Magnus stepper with n equal steps (oracle)."""
    h = (t1 - t0) / n
    c = math.sqrt(3) / 6
    d = hfun(t0).shape[0]
    u = np.eye(d, dtype=complex)
    for k in range(n):
        t = t0 + k * h
        a1, a2 = -1j * hfun(t + (0.5 - c) * h), -1j * hfun(t + (0.5 + c) * h)
        u = expm(0.5 * h * (a1 + a2) - math.sqrt(3) / 12 * h * h * (a1 @ a2 - a2 @ a1)) @ u
    return u


def _ramp_spec(gx=0.3, gy=-0.2, gz=0.15, a1=1.0, a2=-0.4, c2=0.3):
    return model.HamiltonianSpec(gx, gy, gz, model.LinearRamp(a1),
                                 model.Sum((model.LinearRamp(a2), model.Constant(c2))))


def test_constant_hamiltonian_matches_matrix_exponential():
    spec = model.HamiltonianSpec(0.4, 0.1, -0.3, model.Constant(0.7), model.Constant(-0.2))
    u = evolve_operator(spec, WindowSpec(0.0, 3.0, 1e-12, 1e-14))
    ref = expm(-3j * model.build_full_hamiltonian(spec, 0.0))
    assert np.max(np.abs(u - ref)) < 1e-10


def test_swept_hamiltonian_matches_magnus_oracle():
    spec = _ramp_spec()
    u = evolve_operator(spec, WindowSpec(-4.0, 4.0, 1e-12, 1e-14))
    ref = magnus4(lambda t: model.build_full_hamiltonian(spec, t), -4.0, 4.0, 4000)
    assert np.max(np.abs(u - ref)) < 1e-8


def test_time_scaling_with_sweep_rate():
    # tau = sqrt(alpha) t: evolving in tau over [-2, 2] equals t over [-2/sqrt(a), 2/sqrt(a)]
    a = 2.5
    spec = model.HamiltonianSpec(0.2, 0.1, 0.0, model.LinearRamp(a))
    u = evolve_operator(spec, WindowSpec(-2.0, 2.0, 1e-12, 1e-14))
    s = 2 / math.sqrt(a)
    ref = magnus4(lambda t: model.build_full_hamiltonian(spec, t), -s, s, 3000)
    assert np.max(np.abs(u - ref)) < 1e-9


@given(st.integers(0, 2**31))
@settings(max_examples=10, deadline=None)
def test_unitarity_and_parity(seed):
    rng = np.random.default_rng(seed)
    gx, gy, gz = rng.uniform(-1, 1, 3)
    spec = _ramp_spec(gx, gy, gz, rng.uniform(0.5, 2), rng.uniform(-2, 2), rng.uniform(-1, 1))
    u = evolve_operator(spec, WindowSpec(-6.0, 6.0, 1e-12, 1e-14))
    assert np.max(np.abs(u.conj().T @ u - np.eye(9))) < 1e-9
    k = model.constant_of_motion_k()
    assert np.max(np.abs(u @ k - k @ u)) < 1e-10


@pytest.mark.parametrize("picture", ["minus", "plus", "qubit1", "qubit2"])
def test_reduced_pictures_agree_with_full_space(picture):
    spec = _ramp_spec()
    window = WindowSpec(-5.0, 5.0, 1e-12, 1e-14)
    u9 = evolve_operator(spec, window)
    u = evolve_operator(spec, window, picture)
    d = model.DECOMPOSITION
    if picture == "minus":
        assert np.max(np.abs(u - u9[np.ix_(d.index4, d.index4)])) < 1e-9
    elif picture == "plus":
        assert np.max(np.abs(u - u9[np.ix_(d.index5, d.index5)])) < 1e-9
    else:
        assert u.shape == (2, 2)
        assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-10


def test_two_qubit_factorisation():
    spec = _ramp_spec(gz=0.8)
    window = WindowSpec(-5.0, 5.0, 1e-12, 1e-14)
    u4 = evolve_operator(spec, window, "minus")
    u1 = evolve_operator(spec, window, "qubit1")
    u2 = evolve_operator(spec, window, "qubit2")
    assert np.max(np.abs(u4 - np.kron(u1, u2))) < 1e-9


def test_core_picture_matches_plus_block():
    spec = model.HamiltonianSpec(0.35, 0.35, 0.0, model.LinearRamp(1.0))
    window = WindowSpec(-5.0, 5.0, 1e-12, 1e-14)
    u5 = evolve_operator(spec, window, "plus")
    u3 = evolve_operator(spec, window, "core")
    assert np.max(np.abs(u3 - u5[1:4, 1:4])) < 1e-9


def test_evolve_state_samples_and_norm():
    spec = _ramp_spec()
    res = evolve_state(spec, model.product_state(1, 0), WindowSpec(-3.0, 3.0, n_samples=13))
    assert res.states.shape == (13, 9)
    assert res.converged
    assert res.norm_drift < 1e-9
    assert np.allclose(res.populations.sum(axis=1), res.norm)
    assert res.picture == "full"
    assert np.allclose(res.physical_times, res.times)


def test_zero_length_window_returns_input():
    psi = model.product_state(0, -1)
    res = evolve_state(_ramp_spec(), psi, WindowSpec(2.0, 2.0, n_samples=1))
    assert np.array_equal(res.final_state, psi.astype(complex))


def test_evolve_state_rejects_bad_input():
    with pytest.raises(ValueError):
        evolve_state(_ramp_spec(), np.ones(9), WindowSpec(0.0, 1.0))
    with pytest.raises(ValueError):
        evolve_state(_ramp_spec(), np.ones(7) / math.sqrt(7), WindowSpec(0.0, 1.0))
    with pytest.raises(ValueError):
        WindowSpec(1.0, 0.0)


def test_picture_dimensions():
    spec = model.HamiltonianSpec(0.2, 0.2, 0.0, model.LinearRamp(1.0))
    for name, dim in PICTURES.items():
        assert build_picture(spec, name).dim == dim


def test_nonhermitian_evolution_norm_decreases():
    spec = model.HamiltonianSpec(0.3, 0.1, 0.2, model.LinearRamp(1.0), decay=model.Decay(0.05, 0.02))
    psi = np.ones(9) / 3
    res = evolve_nonhermitian(spec, psi, WindowSpec(-3.0, 3.0, 1e-11, 1e-13, n_samples=61))
    assert np.all(np.diff(res.norm) <= 1e-12)
    assert res.norm[-1] < 1.0


def test_asymptotic_populations_qubit():
    beta = 0.3
    spec = model.HamiltonianSpec(0.5 * math.sqrt(beta), -0.5 * math.sqrt(beta), 0.0, model.LinearRamp(1.0))
    res = asymptotic_populations(spec, np.array([0, 1], complex), "qubit1", tol=1e-4)
    p = 1 - math.exp(-2 * math.pi * beta)
    assert res.converged
    assert res.populations == pytest.approx([p, 1 - p], abs=5e-4)


def test_asymptotic_populations_reports_nonconvergence():
    spec = model.HamiltonianSpec(0.3, 0.1, 0.0, model.LinearRamp(1.0))
    with pytest.raises(NonConvergenceError):
        asymptotic_populations(spec, model.product_state(-1, 0), tol=1e-12, max_widenings=1)


def test_default_half_width_grows_with_coupling():
    weak = model.HamiltonianSpec(0.1, 0.1, 0.0, model.LinearRamp(1.0))
    strong = model.HamiltonianSpec(3.0, 3.0, 0.0, model.LinearRamp(1.0))
    assert default_half_width(weak) == 20.0
    assert default_half_width(strong) > 20.0


def test_asymptotic_4d_against_tables():
    spec = model.HamiltonianSpec(0.35, 0.1, 0.0, model.LinearRamp(1.0))
    psi = np.zeros(4, complex)
    psi[3] = 1
    res = asymptotic_populations(spec, psi, "minus")
    ref = analytic.joint_probabilities_4d(*analytic.lmsz_p1_p2(spec.gamma_minus, spec.gamma_plus, 1.0))
    assert np.max(np.abs(res.populations - ref.probabilities)) < 2e-3
