import math

import numpy as np
import pytest
from scipy.linalg import expm

from qutrit_lmsz import analytic, model
from qutrit_lmsz.noise import (
    NoiseSpec,
    ensemble_average,
    is_large_gamma,
    plateau_check,
    realization_states,
    sample_noise_path,
    step_normals,
)
from qutrit_lmsz.propagator import WindowSpec, evolve_state


def discrete_average(c, zd, gamma, h, tau_i, tau_f, psi0):
    """Exact ensemble average over piecewise-constant noise (oracle).

    Density-matrix evolution with omega(t) = t, H = omega diag(zd) + c and a
    kick exp(-i eta h diag(zd)) per step; the Gaussian average of the kick
    multiplies rho_{ab} by exp(-Gamma h (z_a - z_b)^2).  The coherent part
    uses a fourth-order Magnus step.
    """
    d = len(zd)
    rho = np.outer(psi0, psi0.conj())
    n = int(round((tau_f - tau_i) / h))
    cc = math.sqrt(3) / 6
    hfun = lambda t: t * np.diag(zd) + c  # noqa: E731
    damp = np.exp(-gamma * h * (zd[:, None] - zd[None, :]) ** 2)
    half = np.sqrt(damp)
    for k in range(n):
        t = tau_i + k * h
        a1, a2 = -1j * hfun(t + (0.5 - cc) * h), -1j * hfun(t + (0.5 + cc) * h)
        u = expm(0.5 * h * (a1 + a2) - math.sqrt(3) / 12 * h * h * (a1 @ a2 - a2 @ a1))
        rho = u @ (half * rho) @ u.conj().T * half
    return np.real(np.diag(rho))


def _qubit_spec(noise, g=0.5):
    return model.HamiltonianSpec(g / 2, -g / 2, 0.0, model.LinearRamp(1.0), noise=noise)


def test_step_normals_are_addressed_by_seed_realization_step():
    a = step_normals(7, 3, 11)
    assert np.array_equal(a[:6], step_normals(7, 3, 6))
    assert np.array_equal(a, step_normals(7, 3, 11))
    assert not np.array_equal(a, step_normals(7, 4, 11))
    assert not np.array_equal(a, step_normals(8, 3, 11))
    assert step_normals(0, 0, 0).size == 0


def test_step_normals_statistics():
    z = np.concatenate([step_normals(11, r, 5000) for r in range(20)])
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert abs(z.var() - 1) < 4 * math.sqrt(2 / z.size)
    assert abs(np.mean(z[:-1] * z[1:])) < 4 / math.sqrt(z.size)


def test_noise_path_variance_and_grid():
    noise = NoiseSpec(2.0, seed=1, dt_noise=0.05)
    path = sample_noise_path(noise, WindowSpec(-10.0, 10.0), 0)
    assert path.times.size == path.values.size + 1
    assert path.dt == pytest.approx(0.05)
    assert np.var(path.values) == pytest.approx(2 * 2.0 / 0.05, rel=0.1)
    # tau grid mapped to physical time for alpha = 4
    path4 = sample_noise_path(noise, WindowSpec(-10.0, 10.0), 0, sweep_rate=4.0)
    assert path4.times[0] == pytest.approx(-5.0)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(-1.0)
    with pytest.raises(ValueError):
        NoiseSpec(1.0, dt_noise=0.0)
    with pytest.raises(ValueError):
        NoiseSpec(1.0, placement="omega3")


def test_zero_noise_reproduces_deterministic_evolution():
    spec = _qubit_spec(NoiseSpec(0.0, seed=3))
    window = WindowSpec(-8.0, 8.0)
    res = ensemble_average(spec, np.array([0, 1], complex), window, 5, "qubit1")
    ref = evolve_state(spec, np.array([0, 1], complex), WindowSpec(-8.0, 8.0, 1e-11, 1e-13), "qubit1")
    assert np.allclose(res.mean_populations, ref.populations[-1], atol=1e-8)
    assert np.all(res.std_errors < 1e-12)


def test_noise_without_coupling_leaves_populations_unchanged():
    spec = model.HamiltonianSpec(0.0, 0.0, 0.0, model.LinearRamp(1.0), noise=NoiseSpec(5.0, seed=2))
    psi = np.array([0.6, 0.8j], complex)
    res = ensemble_average(spec, psi, WindowSpec(-5.0, 5.0), 50, "qubit1")
    assert np.allclose(res.mean_populations, [0.36, 0.64], atol=1e-12)


def test_thread_count_does_not_change_result():
    spec = _qubit_spec(NoiseSpec(1.0, seed=9))
    window = WindowSpec(-5.0, 5.0)
    psi = np.array([0, 1], complex)
    r1 = ensemble_average(spec, psi, window, 300, "qubit1", block_size=64, threads=1)
    r3 = ensemble_average(spec, psi, window, 300, "qubit1", block_size=64, threads=3)
    assert np.array_equal(r1.mean_populations, r3.mean_populations)
    assert np.array_equal(r1.std_errors, r3.std_errors)


def test_realization_states_match_ensemble():
    spec = _qubit_spec(NoiseSpec(1.0, seed=4))
    window = WindowSpec(-5.0, 5.0)
    psi = np.array([0, 1], complex)
    states = realization_states(spec, psi, window, np.arange(40), "qubit1")
    res = ensemble_average(spec, psi, window, 40, "qubit1", block_size=7)
    assert np.allclose((np.abs(states) ** 2).mean(axis=0), res.mean_populations)
    assert np.allclose(np.linalg.norm(states, axis=1), 1.0)


@pytest.mark.parametrize("gamma_noise", [0.5, 3.0])
def test_ensemble_matches_discrete_average_oracle_qubit(gamma_noise):
    g, h, tau_i, tau_f = 0.5, 0.05, -15.0, 15.0
    spec = _qubit_spec(NoiseSpec(gamma_noise, seed=21, dt_noise=h), g)
    psi = np.array([0, 1], complex)
    res = ensemble_average(spec, psi, WindowSpec(tau_i, tau_f), 3000, "qubit1")
    c = g * model.PAULI_X
    ref = discrete_average(c, np.array([0.5, -0.5]), gamma_noise, h, tau_i, tau_f, psi)
    assert np.all(np.abs(res.z_scores(ref)) < 4.0)


def test_ensemble_matches_discrete_average_oracle_core():
    gamma, h, tau_i, tau_f, gn = 0.6, 0.05, -15.0, 15.0, 1.5
    spec = model.HamiltonianSpec(gamma / 2, gamma / 2, 0.0, model.LinearRamp(1.0),
                                 noise=NoiseSpec(gn, seed=5, dt_noise=h))
    psi = np.array([1, 0, 0], complex)
    res = ensemble_average(spec, psi, WindowSpec(tau_i, tau_f), 2000, "core")
    c = gamma * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], complex)
    ref = discrete_average(c, np.array([1.0, 0.0, -1.0]), gn, h, tau_i, tau_f, psi)
    assert np.all(np.abs(res.z_scores(ref)) < 4.0)


def test_large_gamma_criterion_and_plateau():
    spec = _qubit_spec(NoiseSpec(4.0, seed=1))
    assert is_large_gamma(spec)
    assert not is_large_gamma(_qubit_spec(NoiseSpec(0.5, seed=1)))
    r1, r2, z = plateau_check(spec, np.array([0, 1], complex), WindowSpec(-40.0, 40.0), 400, "qubit1")
    assert r2.Gamma == 8.0
    assert z < 4.0
    p = analytic.noisy_flip_probability(0.25)
    assert abs(r1.mean_populations[0] - p) < 4 * r1.std_errors[0] + 0.01


def test_noise_on_both_fields_cancels_in_qubit2():
    # Omega_- = omega1 - omega2 does not see a noise shared by both fields
    spec = model.HamiltonianSpec(0.3, 0.1, 0.0, model.LinearRamp(1.0), noise=NoiseSpec(3.0, seed=2, placement="both"))
    psi = np.array([0, 1], complex)
    res = ensemble_average(spec, psi, WindowSpec(-6.0, 6.0), 20, "qubit2")
    ref = evolve_state(spec, psi, WindowSpec(-6.0, 6.0, 1e-11, 1e-13), "qubit2").populations[-1]
    assert np.allclose(res.mean_populations, ref, atol=1e-8)


def test_strong_noise_equalises_4d_populations():
    bp, bm = 2.0, 1.0
    gp, gm = math.sqrt(bp), math.sqrt(bm)
    spec = model.HamiltonianSpec(0.5 * (gp + gm), 0.5 * (gp - gm), 0.0, model.LinearRamp(1.0),
                                 noise=NoiseSpec(8.0, seed=31))
    assert is_large_gamma(spec)
    psi = np.zeros(4, complex)
    psi[3] = 1.0
    res = ensemble_average(spec, psi, WindowSpec(-60.0, 60.0), 1000, "minus")
    target = analytic.noisy_joint_probabilities_4d(bm, bp).probabilities
    assert np.allclose(target, 0.25, atol=1e-5)
    assert np.all(np.abs(res.z_scores(target)) < 4.0)
