import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spindecouple.avg_hamiltonian import (
    RegisterHamiltonian,
    average_h,
    build_hamiltonian,
    commutator_sum,
    first_correction,
    pauli_string,
    repetition_scaling,
    spin_chain,
    spin_chain_commutator_closed_form,
    strong_coupling_pair,
    toggling_hamiltonian,
    weak_coupling_pair,
)
from spindecouple.pauli_frame import PAULI, frame_unitary
from spindecouple.sequence_synth import PAIR_GENERAL_ROWS, PAIR_DIAGONAL_ROWS, FrameMatrix, general_decoupling, nn_coloring
from spindecouple.simulator import propagator

SX, SY, SZ = PAULI[1], PAULI[2], PAULI[3]
I2 = np.eye(2)


def kron(*ops):
    out = np.eye(1)
    for o in ops:
        out = np.kron(out, o)
    return out


def random_hamiltonian(rng, n, diagonal=False):
    zeeman = rng.normal(size=(n, 3))
    couplings = {}
    for a in range(n):
        for b in range(a + 1, n):
            t = rng.normal(size=(3, 3))
            couplings[(a, b)] = np.diag(np.diag(t)) if diagonal else t
    return RegisterHamiltonian(zeeman, couplings)


def dense_toggling(h: RegisterHamiltonian, column) -> np.ndarray:
    """Q^dagger H Q with Q the Kronecker product of frame unitaries."""
    q = kron(*[frame_unitary(int(s)) for s in column])
    return q.conj().T @ build_hamiltonian(h) @ q


# ---------------------------------------------------------------- builders


def test_single_qubit_zeeman():
    h = RegisterHamiltonian([[0, 0, 0.7]])
    assert np.allclose(build_hamiltonian(h), 0.7 * SZ, atol=0)


def test_weak_coupling_diagonal_entries():
    w1, w2, j = 0.3, 0.5, 1.1
    dense = build_hamiltonian(weak_coupling_pair(w1, w2, j))
    expected = -w1 * kron(SZ, I2) - w2 * kron(I2, SZ) + j * kron(SZ, SZ)
    assert np.allclose(dense, expected, atol=1e-15)
    assert np.allclose(np.diag(dense).real, [-w1 - w2 + j, -w1 + w2 - j, w1 - w2 - j, w1 + w2 + j])


def test_heisenberg_pair_spectrum():
    j = 0.8
    evals = np.linalg.eigvalsh(build_hamiltonian(strong_coupling_pair(0.0, j)))
    assert np.allclose(evals, [-3 * j, j, j, j], atol=1e-14)


def test_pauli_string_matches_kron():
    assert np.allclose(pauli_string(3, "xzy"), kron(SX, SZ, SY), atol=0)
    assert np.allclose(pauli_string(3, {1: 2}), kron(I2, SY, I2), atol=0)


def test_qubit_zero_is_most_significant():
    dense = build_hamiltonian(RegisterHamiltonian([[0, 0, 1], [0, 0, 0]]))
    # |10> has qubit 0 excited, sigma_z eigenvalue -1
    assert dense[2, 2] == -1 and dense[0, 0] == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_dense_builder_is_hermitian_and_matches_kron(n, seed):
    h = random_hamiltonian(np.random.default_rng(seed), n)
    dense = build_hamiltonian(h)
    assert np.allclose(dense, dense.conj().T, atol=1e-14)
    ref = np.zeros_like(dense)
    for q in range(n):
        for i in range(3):
            ops = [I2] * n
            ops[q] = PAULI[i + 1]
            ref += h.zeeman[q, i] * kron(*ops)
    for (a, b), t in h.couplings.items():
        for i in range(3):
            for k in range(3):
                ops = [I2] * n
                ops[a], ops[b] = PAULI[i + 1], PAULI[k + 1]
                ref += t[i, k] * kron(*ops)
    assert np.allclose(dense, ref, atol=1e-12)


def test_dense_cap():
    with pytest.raises(ValueError):
        build_hamiltonian(RegisterHamiltonian(np.zeros((3, 3))), max_qubits=2)


def test_json_roundtrip():
    h = random_hamiltonian(np.random.default_rng(3), 3)
    back = RegisterHamiltonian.from_json(h.to_json())
    assert np.array_equal(back.zeeman, h.zeeman)
    assert all(np.array_equal(back.couplings[p], t) for p, t in h.couplings.items())
    bad = json.loads(h.to_json()) | {"n": 4}
    with pytest.raises(ValueError):
        RegisterHamiltonian.from_json(bad)
    with pytest.raises(ValueError):
        RegisterHamiltonian(np.zeros((2, 3)), {(0, 2): np.eye(3)})


# --------------------------------------------------------- toggling frames


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_parameter_toggling_matches_dense_conjugation(n, seed):
    rng = np.random.default_rng(seed)
    h = random_hamiltonian(rng, n)
    column = rng.integers(0, 4, n)
    fast = build_hamiltonian(toggling_hamiltonian(h, column))
    assert np.abs(fast - dense_toggling(h, column)).max() <= 1e-12


def test_pair_general_average_vanishes_for_any_tensor():
    rng = np.random.default_rng(0)
    f = FrameMatrix.from_rows(PAIR_GENERAL_ROWS)
    for _ in range(20):
        h = RegisterHamiltonian(np.zeros((2, 3)), {(0, 1): rng.normal(size=(3, 3))})
        assert not average_h(h, f).couplings[(0, 1)].any()


def test_pair_diagonal_average_diagonal_only():
    f = FrameMatrix.from_rows(PAIR_DIAGONAL_ROWS)
    h = RegisterHamiltonian(np.zeros((2, 3)), {(0, 1): 0.9 * np.eye(3)})
    assert not average_h(h, f).couplings[(0, 1)].any()
    t = np.random.default_rng(1).normal(size=(3, 3))
    avg = average_h(RegisterHamiltonian(np.zeros((2, 3)), {(0, 1): t}), f).couplings[(0, 1)]
    assert avg.any()
    assert np.allclose(avg, np.diag([0, 0, 0]) + np.outer([1, 0, 0], [0, 1, 0]) * t[0, 1])


def test_average_matches_dense_mean():
    rng = np.random.default_rng(4)
    h = random_hamiltonian(rng, 3)
    f = FrameMatrix(rng.integers(0, 4, (3, 6)))
    dense_mean = np.mean([dense_toggling(h, f.frames[:, k]) for k in range(f.n_slots)], axis=0)
    assert np.allclose(build_hamiltonian(average_h(h, f)), dense_mean, atol=1e-13)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        average_h(spin_chain(3, 1, 1, 1), FrameMatrix.from_rows(PAIR_GENERAL_ROWS))


# --------------------------------------------------- first-order correction


def naive_commutator_sum(h, f):
    hs = [build_hamiltonian(toggling_hamiltonian(h, f.frames[:, k])) for k in range(f.n_slots)]
    total = np.zeros_like(hs[0])
    for j in range(len(hs)):
        for k in range(j):
            total += hs[j] @ hs[k] - hs[k] @ hs[j]
    return total


def test_prefix_sum_matches_double_loop():
    rng = np.random.default_rng(5)
    h = random_hamiltonian(rng, 3)
    f = general_decoupling(3)
    assert np.allclose(commutator_sum(h, f), naive_commutator_sum(h, f), atol=1e-11)


def test_first_correction_zero_for_ising():
    h = weak_coupling_pair(0.2, 0.4, 1.0)
    assert np.abs(first_correction(h, FrameMatrix.from_rows(PAIR_DIAGONAL_ROWS), 1.0)).max() <= 1e-14


def test_first_correction_hermitian_traceless():
    h = strong_coupling_pair(0.3, 1.0)
    c = first_correction(h, FrameMatrix.from_rows(PAIR_DIAGONAL_ROWS), 0.7)
    assert np.abs(c).max() > 0
    assert np.allclose(c, c.conj().T, atol=1e-14)
    assert abs(np.trace(c)) <= 1e-14


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_closed_form_matches_dense(n):
    rng = np.random.default_rng(100 + n)
    f = nn_coloring(n, "diagonal")
    for _ in range(10):
        jx, jy, jz = rng.normal(size=3)
        w = rng.normal(size=n)
        dense = commutator_sum(spin_chain(n, jx, jy, jz, w), f)
        closed = spin_chain_commutator_closed_form(n, jx, jy, jz, w)
        assert np.linalg.norm(dense - closed) <= 1e-10 * np.linalg.norm(dense)


def test_closed_form_independent_of_jz():
    a = spin_chain_commutator_closed_form(4, 1.0, 0.5, 0.0, 0.3)
    b = spin_chain_commutator_closed_form(4, 1.0, 0.5, 7.0, 0.3)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("m", [2, 4, 8])
def test_repetition_scaling(m):
    h = spin_chain(3, 1.0, 1.0, 1.0, 0.4)
    out = repetition_scaling(h, nn_coloring(3, "diagonal"), 1.0, m)
    assert abs(out["norm_ratio"] - 1 / m) <= 1e-12
    assert abs(out["direct_norm_ratio"] - 1 / m) <= 1e-12
    assert np.allclose(out["direct"], out["collapsed"], atol=1e-12)


def test_commuting_average_reproduces_exact_propagator():
    # Ising terms commute with every toggling frame, so exp(-i Hbar t_c) is exact
    h = weak_coupling_pair(0.3, 0.7, 1.3)
    f = FrameMatrix.from_rows(PAIR_DIAGONAL_ROWS)
    t_c = 0.9
    tau = t_c / f.n_slots
    exact = np.eye(4, dtype=complex)
    for k in range(f.n_slots):
        exact = propagator(build_hamiltonian(toggling_hamiltonian(h, f.frames[:, k])), tau) @ exact
    approx = propagator(build_hamiltonian(average_h(h, f)), t_c)
    assert np.allclose(exact, approx, atol=1e-13)
    assert np.allclose(approx, np.eye(4), atol=1e-13)
