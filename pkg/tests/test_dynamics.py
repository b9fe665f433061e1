import numpy as np
import pytest
from scipy import stats

from atomrepeater.dynamics import (
    DimensionError,
    HilbertSpace,
    LindbladModel,
    QuantumState,
    TimeDependentHamiltonian,
    batch_trajectories,
    evolve_master,
    evolve_no_jump,
    expectation,
    run_trajectory,
)

GAMMA = 2 * np.pi * 5e6
SPACE = HilbertSpace((("atom", 2),))
SIGMA = SPACE.embed("atom", [[0, 1], [0, 0]])  # |0><1|, level 1 excited
ZERO_H = np.zeros((2, 2), dtype=complex)


def decay_model(gamma=GAMMA):
    return LindbladModel(SPACE, lambda t: ZERO_H, (("decay", np.sqrt(gamma) * SIGMA),), max_step=2e-9)


def rabi_model(omega):
    h = 0.5 * omega * (SIGMA + SIGMA.conj().T)
    return LindbladModel(SPACE, lambda t: h, (), max_step=1e-9)


def test_hilbert_space_bookkeeping():
    sp = HilbertSpace((("a", 3), ("b", 2)))
    assert sp.dim == 6
    assert sp.basis_index(a=2, b=1) == 5
    assert np.allclose(sp.embed("b", np.eye(2)), np.eye(6))
    with pytest.raises(ValueError):
        HilbertSpace((("a", 2), ("a", 3)))
    with pytest.raises(ValueError):
        HilbertSpace((("a", 0),))


def test_exponential_decay_master():
    grid = np.linspace(0, 200e-9, 41)
    states = evolve_master(decay_model(), SPACE.ket(atom=1), grid)
    pop = np.array([s.populations()[1] for s in states])
    assert np.max(np.abs(pop - np.exp(-GAMMA * grid))) < 1e-6
    for s in states:
        s.validate(tol=1e-6)
        assert abs(np.trace(s.data) - 1) < 1e-6


def test_rabi_oscillation_master():
    omega = 2 * np.pi * 20e6
    grid = np.linspace(0, 100e-9, 51)
    states = evolve_master(rabi_model(omega), SPACE.ket(atom=0), grid)
    pop = np.array([s.populations()[1] for s in states])
    assert np.max(np.abs(pop - np.sin(omega * grid / 2) ** 2)) < 1e-6


def test_identity_evolution():
    model = LindbladModel(SPACE, lambda t: ZERO_H, ())
    psi = QuantumState(SPACE, np.array([0.6, 0.8j]))
    states = evolve_master(model, psi, [0, 1e-8, 5e-8])
    for s in states:
        assert np.allclose(s.data, psi.density(), atol=1e-12)


def test_master_rejects_bad_input():
    other = HilbertSpace((("atom", 3),))
    with pytest.raises(DimensionError):
        evolve_master(decay_model(), other.ket(atom=1), [0, 1e-9])
    with pytest.raises(ValueError):
        evolve_master(decay_model(), SPACE.ket(atom=1), [0, 2e-9, 1e-9])


def test_expectation_values():
    fock = HilbertSpace((("mode", 2),))
    num = fock.embed("mode", np.diag([0, 1]))
    vac = fock.ket(mode=0)
    sup = QuantumState(fock, np.array([1, 1]) / np.sqrt(2))
    assert expectation(np.eye(2), sup) == pytest.approx(1)
    assert expectation(num, vac) == pytest.approx(0)
    assert expectation(num, sup) == pytest.approx(0.5)
    rho = QuantumState(fock, sup.density())
    val = expectation(num, rho)
    assert abs(val.imag) < 1e-9 and val.real == pytest.approx(0.5)


def test_time_dependent_hamiltonian_pulse_area():
    # a resonant Gaussian pulse of area pi inverts the atom
    sigma_t = 3e-9
    omega0 = np.pi / (sigma_t * np.sqrt(2 * np.pi))
    drive = SIGMA + SIGMA.conj().T
    h = TimeDependentHamiltonian(ZERO_H, [(lambda t: 0.5 * omega0 * np.exp(-((t - 20e-9) ** 2) / (2 * sigma_t**2)), drive)])
    model = LindbladModel(SPACE, h, (), max_step=2e-10)
    final = evolve_master(model, SPACE.ket(atom=0), [0, 40e-9])[-1]
    assert final.populations()[1] == pytest.approx(1, abs=1e-6)
    psi = evolve_no_jump(model, SPACE.ket(atom=0), [0, 40e-9])
    assert abs(psi[-1, 1]) ** 2 == pytest.approx(1, abs=1e-6)


def test_single_decay_jump_statistics():
    model = decay_model()
    t_end = 2e-6  # 63 lifetimes
    ens = batch_trajectories(model, SPACE.ket(atom=1), 10_000, seed=11, interval=(0, t_end))
    assert np.all(ens.counts[:, 0] == 1)
    times = ens.jump_times("decay")
    ks = stats.kstest(times, "expon", args=(0, 1 / GAMMA)).statistic
    assert ks < 0.02


def test_no_channels_no_jumps():
    rec = run_trajectory(rabi_model(1e8), SPACE.ket(atom=0), (0, 1e-7), seed=1)
    assert rec.jumps == ()
    rec.final_state.validate()


def test_trajectory_determinism_and_batch_reduction():
    model = decay_model()
    a = run_trajectory(model, SPACE.ket(atom=1), (0, 1e-6), seed=5, index=3)
    b = run_trajectory(model, SPACE.ket(atom=1), (0, 1e-6), seed=5, index=3)
    assert a.jumps == b.jumps
    one = batch_trajectories(model, SPACE.ket(atom=1), 1, seed=5, interval=(0, 1e-6))
    c = run_trajectory(model, SPACE.ket(atom=1), (0, 1e-6), seed=5, index=0)
    assert one.records[0].channels == c.channels
    assert np.allclose(one.records[0].times, c.times, rtol=0, atol=1e-15)


def test_jump_times_increasing_and_inside_interval():
    omega = 2 * np.pi * 30e6
    h = 0.5 * omega * (SIGMA + SIGMA.conj().T)
    model = LindbladModel(SPACE, lambda t: h, (("decay", np.sqrt(GAMMA) * SIGMA),), max_step=1e-9)
    ens = batch_trajectories(model, SPACE.ket(atom=0), 200, seed=3, interval=(0, 1e-6))
    assert ens.counts.sum() > 200
    for rec in ens.records:
        t = rec.times
        assert np.all(np.diff(t) > 0)
        assert np.all((t > 0) & (t <= 1e-6))


def test_partition_independence():
    omega = 2 * np.pi * 30e6
    h = 0.5 * omega * (SIGMA + SIGMA.conj().T)
    model = LindbladModel(SPACE, lambda t: h, (("decay", np.sqrt(GAMMA) * SIGMA),), max_step=1e-9)
    a = batch_trajectories(model, SPACE.ket(atom=0), 300, seed=9, interval=(0, 3e-7), chunk_size=300)
    b = batch_trajectories(model, SPACE.ket(atom=0), 300, seed=9, interval=(0, 3e-7), chunk_size=37)
    assert np.array_equal(a.counts, b.counts)
    for ra, rb in zip(a.records, b.records):
        assert ra.channels == rb.channels
        assert np.allclose(ra.times, rb.times, rtol=0, atol=1e-15)


def test_driven_ensemble_matches_master_equation():
    omega = 2 * np.pi * 12e6
    h = 0.5 * omega * (SIGMA + SIGMA.conj().T)
    c = np.sqrt(GAMMA) * SIGMA
    model = LindbladModel(SPACE, lambda t: h, (("decay", c),), max_step=1e-9)
    t_end = 150e-9
    grid = np.linspace(0, t_end, 1501)
    states = evolve_master(model, SPACE.ket(atom=0), grid)
    flux = np.array([expectation(c.conj().T @ c, s).real for s in states])
    expected = np.trapezoid(flux, grid)
    ens = batch_trajectories(model, SPACE.ket(atom=0), 10_000, seed=21, interval=(0, t_end))
    mean = ens.mean_counts()["decay"]
    se = ens.standard_errors()["decay"]
    assert abs(mean - expected) < 3 * se
    # population in the excited state at the end of the window
    pop_traj = np.mean([r.final_state.populations()[1] for r in ens.records])
    pop_me = states[-1].populations()[1]
    se_pop = np.std([r.final_state.populations()[1] for r in ens.records]) / np.sqrt(ens.n)
    assert abs(pop_traj - pop_me) < 3 * se_pop + 1e-9


def test_standard_error_scales_with_sqrt_n():
    omega = 2 * np.pi * 12e6
    h = 0.5 * omega * (SIGMA + SIGMA.conj().T)
    model = LindbladModel(SPACE, lambda t: h, (("decay", np.sqrt(GAMMA) * SIGMA),), max_step=1e-9)
    small = batch_trajectories(model, SPACE.ket(atom=0), 2000, seed=4, interval=(0, 1e-7))
    large = batch_trajectories(model, SPACE.ket(atom=0), 4000, seed=4, interval=(0, 1e-7))
    ratio = small.standard_errors()["decay"] / large.standard_errors()["decay"]
    assert ratio == pytest.approx(np.sqrt(2), rel=0.2)
