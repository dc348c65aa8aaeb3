"""Dense propagation of pulse trains with ideal or angle-faulty pi pulses.

One cycle is ``(P_1, tau, ..., P_n, tau, closing)`` with the pulses applied
left to right; ``m`` cycles fill the cycle time ``t_c`` so ``tau = t_c / (m n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .avg_hamiltonian import RegisterHamiltonian, build_hamiltonian
from .pauli_frame import SYMBOLS, Sym, pulse_unitary, sym
from .sequence_synth import FrameMatrix, PulseTrain, compile_pulses

HERMITIAN_RTOL = 1e-12


class ConfigError(ValueError):
    """Simulation config violates its invariants; ``errors`` lists every problem."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class FaultModel:
    """Gaussian pulse-angle errors on the listed axes; ``sigma == 0`` is the ideal case."""

    sigma: float = 0.0
    affected_axes: frozenset[Sym] = frozenset({Sym.X})
    seed: int = 0

    def __post_init__(self) -> None:
        self.affected_axes = frozenset(sym(a) for a in self.affected_axes)

    @property
    def kind(self) -> str:
        return "ideal" if self.sigma == 0 else "gaussian_angle"

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "sigma": self.sigma,
            "affected_axes": sorted(SYMBOLS[int(a)] for a in self.affected_axes),
            "seed": self.seed,
        }


@dataclass
class SimulationConfig:
    hamiltonian: RegisterHamiltonian
    frames: FrameMatrix
    t_c: float
    m: int = 1
    initial_state: str | np.ndarray = "0"
    fault: FaultModel = field(default_factory=FaultModel)
    realizations: int = 1

    def __post_init__(self) -> None:
        errors = []
        if int(self.m) != self.m or self.m < 1:
            errors.append(f"m must be a positive integer, got {self.m}")
        if not self.t_c > 0:
            errors.append(f"t_c must be > 0, got {self.t_c}")
        if self.frames.n_qubits != self.hamiltonian.n:
            errors.append(f"frames have {self.frames.n_qubits} rows but Hamiltonian has {self.hamiltonian.n} qubits")
        if self.fault.sigma < 0:
            errors.append(f"sigma must be >= 0, got {self.fault.sigma}")
        if self.realizations < 1:
            errors.append(f"realizations must be >= 1, got {self.realizations}")
        try:
            self.state()
        except ValueError as exc:
            errors.append(str(exc))
        if errors:
            raise ConfigError(errors)

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n

    @property
    def tau(self) -> float:
        return self.t_c / (self.m * self.frames.n_slots)

    def state(self) -> np.ndarray:
        return make_state(self.initial_state, self.hamiltonian.n)

    def describe(self) -> dict[str, Any]:
        init = self.initial_state if isinstance(self.initial_state, str) else np.asarray(self.initial_state).tolist()
        if isinstance(init, list):
            init = [[complex(a).real, complex(a).imag] for a in init]
        return {
            "hamiltonian": self.hamiltonian.to_json(),
            "frames": self.frames.rows,
            "t_c": self.t_c,
            "m": self.m,
            "initial_state": init,
            "fault": self.fault.to_dict(),
            "realizations": self.realizations,
        }


def make_state(spec: str | np.ndarray, n_qubits: int) -> np.ndarray:
    """Basis label (``"100"`` = qubit 0 excited) or amplitude vector, normalized to 1e-12."""
    if isinstance(spec, str):
        if len(spec) != n_qubits or set(spec) - {"0", "1"}:
            raise ValueError(f"basis label {spec!r} does not fit {n_qubits} qubits")
        psi = np.zeros(2**n_qubits, dtype=complex)
        psi[int(spec, 2)] = 1.0
        return psi
    psi = np.asarray(spec, dtype=complex).ravel()
    if psi.shape != (2**n_qubits,):
        raise ValueError(f"state vector has {psi.size} amplitudes, expected {2**n_qubits}")
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise ValueError("initial state is not normalized")
    return psi


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H t)`` via Hermitian eigendecomposition."""
    h = np.asarray(h)
    scale = max(np.linalg.norm(h), 1.0)
    if np.linalg.norm(h - h.conj().T) > HERMITIAN_RTOL * scale:
        raise ValueError("propagator needs a Hermitian generator")
    evals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * evals * t)) @ vecs.conj().T


def fidelity(psi: np.ndarray, u: np.ndarray) -> float:
    """``|<psi|U|psi>|^2``."""
    amp = np.vdot(psi, u @ psi)
    return float(min(1.0, abs(amp) ** 2))


def apply_gate(states: np.ndarray, gate: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Apply a one-qubit gate to a batch of state vectors of shape ``(B, 2^N)``.

    ``gate`` is ``(2, 2)`` or a per-state stack ``(B, 2, 2)``.
    """
    b = states.shape[0]
    view = states.reshape(b, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    if gate.ndim == 2:
        out = np.einsum("ij,bxjz->bxiz", gate, view)
    else:
        out = np.einsum("bij,bxjz->bxiz", gate, view)
    return out.reshape(b, -1)


def _embed(gate: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**qubit), gate), np.eye(2 ** (n_qubits - qubit - 1)))


# A cycle as a flat list of steps: ("pulse", qubit, axis) or ("free",).
Step = tuple


def cycle_steps(train: PulseTrain) -> list[Step]:
    steps: list[Step] = []
    for pulses in train.slots:
        steps.extend(("pulse", q, ax) for q, ax in pulses)
        steps.append(("free",))
    steps.extend(("pulse", q, ax) for q, ax in train.closing)
    return steps


def faulty_pulses_per_cycle(train: PulseTrain, fault: FaultModel) -> int:
    if fault.sigma == 0:
        return 0
    return sum(1 for s in cycle_steps(train) if s[0] == "pulse" and s[2] in fault.affected_axes)


def standard_normals(seed: int, realizations: int, n_pulses: int, start: int = 0) -> np.ndarray:
    """``(realizations, n_pulses)`` standard normals; row r comes from its own stream keyed by (seed, r).

    Entry ``[r, j]`` depends only on (seed, r, j), so results do not change when
    more realizations are added or the pulse count grows.
    """
    ss = np.random.SeedSequence(seed)
    out = np.empty((realizations, n_pulses))
    for i, r in enumerate(range(start, start + realizations)):
        child = np.random.SeedSequence(ss.entropy, spawn_key=(r,))
        out[i] = np.random.Generator(np.random.PCG64(child)).standard_normal(n_pulses)
    return out


def evolve_sequence(cfg: SimulationConfig, deltas: Sequence[float] | None = None) -> np.ndarray:
    """Full propagator over ``t_c`` for one realization.

    ``deltas`` are the angle errors of the faulty pulses in time order; when
    omitted they are drawn for realization 0 of ``cfg.fault.seed``.
    """
    n_q = cfg.n_qubits
    train = compile_pulses(cfg.frames)
    n_faulty = faulty_pulses_per_cycle(train, cfg.fault) * cfg.m
    if deltas is None:
        deltas = cfg.fault.sigma * standard_normals(cfg.fault.seed, 1, n_faulty)[0] if n_faulty else []
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size != n_faulty:
        raise ValueError(f"expected {n_faulty} pulse deviations, got {deltas.size}")
    u_free = propagator(build_hamiltonian(cfg.hamiltonian), cfg.tau)
    u = np.eye(2**n_q, dtype=complex)
    j = 0
    steps = cycle_steps(train)
    for _ in range(cfg.m):
        for step in steps:
            if step[0] == "free":
                u = u_free @ u
                continue
            _, q, ax = step
            if n_faulty and ax in cfg.fault.affected_axes:
                gate = pulse_unitary(ax, deltas[j])
                j += 1
            else:
                gate = pulse_unitary(ax)
            # rows of u^T are the images of basis states
            u = apply_gate(u.T, gate, q, n_q).T
    return u


def evolve_states(cfg: SimulationConfig, psi: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Propagate a batch of copies of ``psi``, one per row of ``deltas``.

    Runs of ideal steps are fused into one dense matrix; only faulty pulses are
    applied per realization.
    """
    n_q = cfg.n_qubits
    dim = 2**n_q
    train = compile_pulses(cfg.frames)
    deltas = np.atleast_2d(np.asarray(deltas, dtype=float))
    batch = deltas.shape[0]
    n_faulty = faulty_pulses_per_cycle(train, cfg.fault) * cfg.m
    if deltas.shape[1] != n_faulty:
        raise ValueError(f"expected {n_faulty} pulse deviations per realization, got {deltas.shape[1]}")
    u_free = propagator(build_hamiltonian(cfg.hamiltonian), cfg.tau)

    # Split one cycle into ideal segments separated by faulty pulses.
    segments: list[np.ndarray] = []
    faulty: list[tuple[int, Sym]] = []
    acc = np.eye(dim, dtype=complex)
    for step in cycle_steps(train):
        if step[0] == "free":
            acc = u_free @ acc
            continue
        _, q, ax = step
        if n_faulty and ax in cfg.fault.affected_axes:
            segments.append(acc)
            faulty.append((q, ax))
            acc = np.eye(dim, dtype=complex)
        else:
            acc = _embed(pulse_unitary(ax), q, n_q) @ acc
    segments.append(acc)

    states = np.broadcast_to(psi, (batch, dim)).astype(complex)
    pending = np.eye(dim, dtype=complex)
    j = 0
    for _ in range(cfg.m):
        for seg, (q, ax) in zip(segments, faulty):
            states = states @ (seg @ pending).T
            pending = np.eye(dim, dtype=complex)
            d = deltas[:, j]
            sigma = np.array(pulse_unitary(ax, 0.0))
            gates = (
                -np.sin(d / 2)[:, None, None] * np.eye(2)[None]
                + np.cos(d / 2)[:, None, None] * sigma[None]
            )
            states = apply_gate(states, gates, q, n_q)
            j += 1
        pending = segments[-1] @ pending
    return states @ pending.T


def batch_fidelity(psi: np.ndarray, states: np.ndarray) -> np.ndarray:
    amps = states @ psi.conj()
    return np.minimum(np.abs(amps) ** 2, 1.0)


def weak_coupling_analytic(m: float, sigma: float) -> float:
    """Mean fidelity after m cycles with Gaussian x-pulse errors under weak coupling."""
    if m < 0 or sigma < 0:
        raise ValueError("m and sigma must be non-negative")
    return 0.5 * (1.0 + np.exp(-m * sigma**2))
