import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spindecouple.avg_hamiltonian import build_hamiltonian, spin_chain, strong_coupling_pair, weak_coupling_pair
from spindecouple.pauli_frame import PAULI, Sym
from spindecouple.sequence_synth import PAIR_DIAGONAL_ROWS, FrameMatrix, compile_pulses, general_decoupling, nn_coloring
from spindecouple.simulator import (
    ConfigError,
    FaultModel,
    SimulationConfig,
    apply_gate,
    batch_fidelity,
    evolve_sequence,
    evolve_states,
    faulty_pulses_per_cycle,
    fidelity,
    make_state,
    propagator,
    standard_normals,
    weak_coupling_analytic,
)

PAIR_DIAGONAL = FrameMatrix.from_rows(PAIR_DIAGONAL_ROWS)


def test_propagator_pauli_z():
    u = propagator(PAULI[3], np.pi / 2)
    assert np.allclose(u, np.diag([-1j, 1j]), atol=1e-15)


def test_propagator_zero_time_and_composition():
    h = build_hamiltonian(strong_coupling_pair(0.3, 1.0))
    assert np.allclose(propagator(h, 0.0), np.eye(4), atol=1e-15)
    assert np.allclose(propagator(h, 0.3) @ propagator(h, 0.4), propagator(h, 0.7), atol=1e-13)


def test_propagator_rejects_non_hermitian():
    with pytest.raises(ValueError):
        propagator(np.array([[0, 1], [0, 0]], complex), 1.0)


def test_make_state():
    assert np.array_equal(make_state("10", 2), [0, 0, 1, 0])
    with pytest.raises(ValueError):
        make_state("102", 3)
    with pytest.raises(ValueError):
        make_state([1, 1], 1)
    psi = make_state(np.ones(2) / np.sqrt(2), 1)
    assert psi.dtype == complex


def test_config_collects_all_errors():
    h = spin_chain(3, 1, 1, 1)
    with pytest.raises(ConfigError) as err:
        SimulationConfig(h, PAIR_DIAGONAL, -1.0, 0, "01", FaultModel(-0.1), 0)
    assert len(err.value.errors) == 6


def test_fault_model_dict():
    assert FaultModel().kind == "ideal"
    assert FaultModel(0.1, {"X", "Y"}).to_dict()["affected_axes"] == ["X", "Y"]


def test_apply_gate_matches_kron():
    rng = np.random.default_rng(0)
    states = rng.normal(size=(3, 8)) + 1j * rng.normal(size=(3, 8))
    g = PAULI[2]
    full = np.kron(np.kron(np.eye(2), g), np.eye(2))
    assert np.allclose(apply_gate(states, g, 1, 3), states @ full.T)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.floats(0.0, 0.3))
def test_evolve_sequence_unitary(seed, m, sigma):
    rng = np.random.default_rng(seed)
    h = spin_chain(3, *rng.normal(size=3), rng.normal(size=3))
    cfg = SimulationConfig(h, general_decoupling(3), 1.0, m, "100", FaultModel(sigma, {Sym.X, Sym.Y}, seed))
    u = evolve_sequence(cfg)
    assert np.abs(u.conj().T @ u - np.eye(8)).max() <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * np.pi))
def test_fidelity_phase_invariant(phi):
    h = build_hamiltonian(strong_coupling_pair(0.1, 1.0))
    u = propagator(h, 0.8)
    psi = make_state("01", 2)
    assert abs(fidelity(psi, u) - fidelity(psi, np.exp(1j * phi) * u)) <= 1e-14


@pytest.mark.parametrize("m", [1, 3, 7])
def test_identity_frames_equal_free_evolution(m):
    h = spin_chain(3, 0.7, 1.1, 0.4, [0.2, 0.5, 0.1])
    cfg = SimulationConfig(h, FrameMatrix(np.zeros((3, 5), np.uint8)), 1.3, m, "100")
    assert np.abs(evolve_sequence(cfg) - propagator(build_hamiltonian(h), 1.3)).max() <= 1e-11


@pytest.mark.parametrize("m", [1, 5, 20])
def test_weak_coupling_ideal_pulses_exact(m):
    cfg = SimulationConfig(weak_coupling_pair(0.1, 0.1, 1.0), PAIR_DIAGONAL, 1.0, m, "01")
    u = evolve_sequence(cfg)
    assert fidelity(cfg.state(), u) == pytest.approx(1.0, abs=1e-13)


def test_evolve_states_matches_evolve_sequence():
    rng = np.random.default_rng(9)
    fault = FaultModel(0.2, {Sym.X, Sym.Y})
    cfg = SimulationConfig(strong_coupling_pair(0.1, 1.0), PAIR_DIAGONAL, 1.0, 3, "01", fault)
    psi = cfg.state()
    n_p = faulty_pulses_per_cycle(compile_pulses(PAIR_DIAGONAL), fault) * cfg.m
    deltas = 0.2 * rng.normal(size=(4, n_p))
    batch = evolve_states(cfg, psi, deltas)
    for r in range(4):
        ref = evolve_sequence(cfg, deltas[r]) @ psi
        assert np.allclose(batch[r], ref, atol=1e-12)
    assert np.allclose(batch_fidelity(psi, batch), [fidelity(psi, evolve_sequence(cfg, d)) for d in deltas])


def test_wrong_delta_count():
    cfg = SimulationConfig(strong_coupling_pair(0.1, 1.0), PAIR_DIAGONAL, 1.0, 1, "01", FaultModel(0.1))
    with pytest.raises(ValueError):
        evolve_sequence(cfg, [0.1])


def test_standard_normals_prefix_stable():
    a = standard_normals(7, 5, 40)
    b = standard_normals(7, 8, 60)
    assert np.array_equal(a, b[:5, :40])
    assert np.array_equal(standard_normals(7, 3, 40, start=2), a[2:5])
    assert not np.array_equal(a, standard_normals(8, 5, 40))


def test_standard_normals_distribution():
    stats = pytest.importorskip("scipy.stats")
    z = standard_normals(1, 200, 100).ravel()
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert abs(z.std() - 1) < 0.03


def test_decoupling_convergence_slope():
    h = spin_chain(4, 1, 1, 1, 0.0)
    frames = nn_coloring(4, "diagonal")
    ms = np.array([1, 2, 4, 8, 16])
    f = np.array([fidelity(make_state("1000", 4), evolve_sequence(SimulationConfig(h, frames, 1.0, m, "1000")))
                  for m in ms])
    assert np.all(np.diff(f) >= 0)
    slope = np.polyfit(np.log(ms), np.log(1 - f), 1)[0]
    assert abs(slope + 2) <= 0.15


def test_weak_coupling_analytic():
    assert weak_coupling_analytic(40, 0.05) == pytest.approx(0.5 * (1 + np.exp(-0.1)), rel=1e-15)
    assert weak_coupling_analytic(40, 0.05) == pytest.approx(0.95242, abs=1e-5)
    assert weak_coupling_analytic(3, 0.0) == 1.0
    with pytest.raises(ValueError):
        weak_coupling_analytic(-1, 0.1)
