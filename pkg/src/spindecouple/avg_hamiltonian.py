"""Average-Hamiltonian engine for pi-frame sequences (units with hbar = 1).

Qubit 0 is the most significant bit of a computational-basis index, so the
label ``"100"`` means qubit 0 excited.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .pauli_frame import SIGNS
from .sequence_synth import FrameMatrix, repeat_sequence

DEFAULT_MAX_QUBITS = 12

Pair = tuple[int, int]


@dataclass(eq=False)
class RegisterHamiltonian:
    """Zeeman vectors (N x 3) and 3x3 coupling tensors of an N-qubit register, coefficients verbatim."""

    zeeman: np.ndarray
    couplings: dict[Pair, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.zeeman = np.array(self.zeeman, dtype=float).reshape(-1, 3)
        fixed = {}
        for (a, b), t in self.couplings.items():
            if not (0 <= a < b < self.n):
                raise ValueError(f"coupling pair ({a}, {b}) invalid for {self.n} qubits")
            t = np.array(t, dtype=float)
            if t.shape != (3, 3):
                raise ValueError(f"coupling tensor for ({a}, {b}) must be 3x3")
            fixed[(a, b)] = t
        self.couplings = fixed

    @property
    def n(self) -> int:
        return self.zeeman.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "zeeman": self.zeeman.tolist(),
                "couplings": [{"pair": list(p), "tensor": t.tolist()} for p, t in sorted(self.couplings.items())],
            }
        )

    @classmethod
    def from_json(cls, text: str | dict[str, Any]) -> RegisterHamiltonian:
        data = json.loads(text) if isinstance(text, str) else text
        zeeman = np.asarray(data["zeeman"], dtype=float)
        if "n" in data and zeeman.shape[0] != int(data["n"]):
            raise ValueError(f"n={data['n']} but {zeeman.shape[0]} zeeman vectors")
        couplings = {tuple(c["pair"]): np.asarray(c["tensor"], dtype=float) for c in data.get("couplings", [])}
        return cls(zeeman, couplings)


def spin_chain(n: int, jx: float, jy: float, jz: float, omegas: float | np.ndarray = 0.0) -> RegisterHamiltonian:
    """Nearest-neighbour chain ``-sum w_mu sz + sum (Jx sx sx + Jy sy sy + Jz sz sz)``.

    Note the minus sign on the Zeeman term.
    """
    w = np.broadcast_to(np.asarray(omegas, dtype=float), (n,))
    zeeman = np.zeros((n, 3))
    zeeman[:, 2] = -w
    tensor = np.diag([jx, jy, jz]).astype(float)
    return RegisterHamiltonian(zeeman, {(q, q + 1): tensor.copy() for q in range(n - 1)})


def weak_coupling_pair(omega1: float, omega2: float, j: float) -> RegisterHamiltonian:
    """``-w1 sz1 - w2 sz2 + J sz1 sz2``."""
    return spin_chain(2, 0.0, 0.0, j, np.array([omega1, omega2]))


def strong_coupling_pair(omega: float, j: float) -> RegisterHamiltonian:
    """``-w (sz1 + sz2) + J s1.s2``."""
    return spin_chain(2, j, j, j, omega)


# ------------------------------------------------------------ dense operators


def _bits(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1


def add_pauli_term(out: np.ndarray, n: int, ops: dict[int, int], coeff: complex, bits: np.ndarray | None = None) -> None:
    """``out += coeff * prod_q sigma_{ops[q]}^(q)`` in O(2^n) work.

    A Pauli string maps basis state b to phase(b) * |b xor flipmask>.
    """
    if bits is None:
        bits = _bits(n)
    cols = np.arange(2**n)
    flip = 0
    phase = np.ones(2**n, dtype=complex)
    for q, axis in ops.items():
        b = bits[:, q]
        if axis == 1:
            flip |= 1 << (n - 1 - q)
        elif axis == 2:
            flip |= 1 << (n - 1 - q)
            phase *= 1j * (1 - 2 * b)
        elif axis == 3:
            phase *= 1 - 2 * b
        elif axis != 0:
            raise ValueError(f"bad Pauli axis {axis}")
    out[cols ^ flip, cols] += coeff * phase


def pauli_string(n: int, ops: dict[int, int] | str) -> np.ndarray:
    """Dense Pauli string; ``ops`` is ``{qubit: axis}`` or a label like ``"xzy"``/``"IXZ"``."""
    if isinstance(ops, str):
        ops = {q: "ixyz".index(c.lower()) for q, c in enumerate(ops) if c.lower() != "i"}
    out = np.zeros((2**n, 2**n), dtype=complex)
    add_pauli_term(out, n, ops, 1.0)
    return out


def build_hamiltonian(h: RegisterHamiltonian, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    n = h.n
    if n > max_qubits:
        raise ValueError(f"{n} qubits exceeds dense cap {max_qubits}")
    bits = _bits(n)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for q in range(n):
        for i in range(3):
            if h.zeeman[q, i]:
                add_pauli_term(out, n, {q: i + 1}, h.zeeman[q, i], bits)
    for (a, b), t in h.couplings.items():
        for i in range(3):
            for j in range(3):
                if t[i, j]:
                    add_pauli_term(out, n, {a: i + 1, b: j + 1}, t[i, j], bits)
    return out


# --------------------------------------------------------- toggling frames


def _check_dims(h: RegisterHamiltonian, f: FrameMatrix) -> None:
    if f.n_qubits != h.n:
        raise ValueError(f"frame matrix has {f.n_qubits} rows, Hamiltonian has {h.n} qubits")


def toggling_hamiltonian(h: RegisterHamiltonian, column: np.ndarray) -> RegisterHamiltonian:
    """Parameters of ``Q^-1 H Q`` for one slot: ``R^T w`` and ``R_mu^T H R_nu`` with diagonal R."""
    signs = SIGNS[np.asarray(column, dtype=np.intp)]
    zeeman = h.zeeman * signs
    couplings = {(a, b): signs[a][:, None] * t * signs[b][None, :] for (a, b), t in h.couplings.items()}
    return RegisterHamiltonian(zeeman, couplings)


def toggling_hamiltonians(h: RegisterHamiltonian, f: FrameMatrix) -> list[RegisterHamiltonian]:
    _check_dims(h, f)
    return [toggling_hamiltonian(h, f.frames[:, k]) for k in range(f.n_slots)]


def average_h(h: RegisterHamiltonian, f: FrameMatrix) -> RegisterHamiltonian:
    """Zeroth-order average Hamiltonian, in parameter form."""
    _check_dims(h, f)
    signs = SIGNS[f.frames.astype(np.intp)]  # (N, n, 3)
    n = f.n_slots
    zeeman = h.zeeman * signs.mean(axis=1)
    couplings = {}
    for (a, b), t in h.couplings.items():
        s = signs[a].T @ signs[b]
        couplings[(a, b)] = t * s / n
    return RegisterHamiltonian(zeeman, couplings)


def commutator_sum(h: RegisterHamiltonian, f: FrameMatrix, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """``sum_{j>k} [H_j, H_k]`` over the slots of one cycle, built densely.

    Uses ``sum_{j>k} [H_j, H_k] = sum_j [H_j, P_j]`` with P_j the prefix sum of
    earlier slots, so the cost is linear in the number of slots.
    """
    _check_dims(h, f)
    total = None
    prefix = None
    for hk in toggling_hamiltonians(h, f):
        dense = build_hamiltonian(hk, max_qubits)
        if prefix is None:
            prefix = dense
            total = np.zeros_like(dense)
            continue
        total += dense @ prefix - prefix @ dense
        prefix = prefix + dense
    return total


def first_correction(h: RegisterHamiltonian, f: FrameMatrix, t_c: float, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """First-order average Hamiltonian ``-(i t_c / 2 n^2) sum_{j>k} [H_j, H_k]``."""
    n = f.n_slots
    return -1j * t_c / (2 * n**2) * commutator_sum(h, f, max_qubits)


def spin_chain_commutator_closed_form(
    n: int, jx: float, jy: float, jz: float, omegas: float | np.ndarray = 0.0
) -> np.ndarray:
    """Closed form of ``sum_{j>k} [H_j, H_k]`` for the chain under the nearest-neighbour
    diagonal sequence (rows IXXI on even-indexed qubits, IIYY on odd-indexed ones).

    ``jz`` does not appear in the result; it is accepted to mirror the chain builder.
    """
    del jz
    w = np.broadcast_to(np.asarray(omegas, dtype=float), (n,))
    out = np.zeros((2**n, 2**n), dtype=complex)
    bits = _bits(n)
    for mu in range(n - 2):
        add_pauli_term(out, n, {mu: 1, mu + 1: 3, mu + 2: 2}, jx * jy, bits)
        add_pauli_term(out, n, {mu: 2, mu + 1: 3, mu + 2: 1}, jx * jy, bits)
    for mu in range(n - 1):
        if mu % 2 == 0:
            # odd site in 1-based counting
            a = w[mu] * jx + w[mu + 1] * jy
            add_pauli_term(out, n, {mu: 2, mu + 1: 1}, a, bits)
        else:
            b = w[mu] * jy + w[mu + 1] * jx
            add_pauli_term(out, n, {mu: 1, mu + 1: 2}, b, bits)
    return 8j * out


def repetition_scaling(h: RegisterHamiltonian, f: FrameMatrix, t_c: float, m: int) -> dict[str, Any]:
    """Compare the first correction of the m-fold repeated cycle with the base cycle at equal t_c.

    ``direct`` sums commutators over all m*n slots; ``collapsed`` uses m times
    the single-cycle sum. Both are returned with their norm ratios to the base.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    n = f.n_slots
    base_sum = commutator_sum(h, f)
    base = -1j * t_c / (2 * n**2) * base_sum
    collapsed = -1j * t_c / (2 * (m * n) ** 2) * (m * base_sum)
    direct = first_correction(h, repeat_sequence(f, m), t_c)
    base_norm = np.linalg.norm(base)
    return {
        "m": m,
        "base": base,
        "collapsed": collapsed,
        "direct": direct,
        "norm_ratio": np.linalg.norm(collapsed) / base_norm if base_norm else float("nan"),
        "direct_norm_ratio": np.linalg.norm(direct) / base_norm if base_norm else float("nan"),
    }
