"""Decoupling sequences as toggling-frame matrices, their verification and compilation.

A :class:`FrameMatrix` row holds the cumulative frame of one qubit for each of
the ``n`` equally long slots. Pulses are derived from it, never the other way
round. Qubits are indexed from 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Any, Iterable, Literal

import numpy as np

from . import designs
from .pauli_frame import SIGNS, SYMBOLS, Sym, format_grid, format_row, parse_grid

PAIR_GENERAL_ROWS = ["IIII", "IXZY"]
PAIR_DIAGONAL_ROWS = ["IXXI", "IIYY"]

DEFAULT_MAX_SLOTS = 4**6

ModelKind = Literal["general", "diagonal"]


@dataclass(eq=False)
class FrameMatrix:
    frames: np.ndarray
    tau: float = 1.0

    def __post_init__(self) -> None:
        self.frames = np.atleast_2d(np.asarray(self.frames, dtype=np.uint8))
        if self.frames.shape[0] < 1 or self.frames.shape[1] < 1:
            raise ValueError("a frame matrix needs at least one qubit and one slot")
        if self.frames.max() > 3:
            raise ValueError("frame codes must lie in 0..3")

    @classmethod
    def from_rows(cls, rows: list[str] | str, tau: float = 1.0) -> FrameMatrix:
        return cls(parse_grid(rows), tau)

    @property
    def n_qubits(self) -> int:
        return self.frames.shape[0]

    @property
    def n_slots(self) -> int:
        return self.frames.shape[1]

    @property
    def rows(self) -> list[str]:
        return [format_row(r) for r in self.frames]

    def same_frames(self, other: FrameMatrix) -> bool:
        return self.frames.shape == other.frames.shape and bool((self.frames == other.frames).all())

    def grid(self) -> str:
        return format_grid(self.frames, sep=" ")

    def to_json(self) -> str:
        return json.dumps({"tau_s": self.tau, "rows": self.rows})

    @classmethod
    def from_json(cls, text: str | dict[str, Any]) -> FrameMatrix:
        data = json.loads(text) if isinstance(text, str) else text
        return cls.from_rows(list(data["rows"]), float(data.get("tau_s", 1.0)))

    def __repr__(self) -> str:
        return f"FrameMatrix(rows={self.rows}, tau={self.tau})"


@dataclass
class CouplingModel:
    """Which couplings a sequence must remove.

    ``pairs=None`` means every pair couples. ``tensors`` optionally carries the
    actual 3x3 coupling tensors so reports can show surviving averages.
    """

    kind: ModelKind = "general"
    pairs: tuple[tuple[int, int], ...] | None = None
    tensors: dict[tuple[int, int], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("general", "diagonal"):
            raise ValueError(f"unknown coupling model {self.kind!r}")
        if self.pairs is not None:
            self.pairs = tuple(sorted(tuple(sorted(p)) for p in self.pairs))
        if self.kind == "diagonal" and self.tensors:
            for pair, t in self.tensors.items():
                t = np.asarray(t)
                if np.any(t - np.diag(np.diag(t))):
                    raise ValueError(f"diagonal model has off-diagonal entries for pair {pair}")

    @classmethod
    def chain(cls, n_qubits: int, kind: ModelKind = "general") -> CouplingModel:
        return cls(kind, tuple((q, q + 1) for q in range(n_qubits - 1)))

    def pair_list(self, n_qubits: int) -> list[tuple[int, int]]:
        if self.pairs is None:
            return list(combinations(range(n_qubits), 2))
        return [p for p in self.pairs if p[1] < n_qubits]


# ---------------------------------------------------------------- synthesis


def _smallest_oa(rows_needed: int) -> designs.OrthogonalArray:
    u = 0
    while designs.bose_bush_params(u)[1] < rows_needed:
        u += 1
    return designs.bose_bush_oa(u)


def general_decoupling(n_qubits: int, tau: float = 1.0) -> FrameMatrix:
    """All-I row on top of ``N-1`` rows of the smallest Bose-Bush OA."""
    if n_qubits < 2:
        raise ValueError("decoupling needs at least 2 qubits")
    oa = _smallest_oa(n_qubits - 1)
    identity = np.zeros((1, oa.runs), dtype=np.uint8)
    return FrameMatrix(np.vstack([identity, oa.entries[: n_qubits - 1]]), tau)


def diagonal_decoupling(n_qubits: int, tau: float = 1.0) -> FrameMatrix:
    """First ``N`` rows of the smallest M_(2^u) with 2^u >= N."""
    if n_qubits < 2:
        raise ValueError("decoupling needs at least 2 qubits")
    u = max(2, int(np.ceil(np.log2(n_qubits))))
    return FrameMatrix(designs.hadamard_power_of_two(u).entries[:n_qubits], tau)


def nested_decoupling(n_qubits: int, tau: float = 1.0, max_slots: int = DEFAULT_MAX_SLOTS) -> FrameMatrix:
    """4^(N-1)-slot scheme: each added qubit runs a unit cycle per slot, odd cycles reversed."""
    if n_qubits < 2:
        raise ValueError("decoupling needs at least 2 qubits")
    if 4 ** (n_qubits - 1) > max_slots:
        raise ValueError(f"nested scheme for {n_qubits} qubits needs {4 ** (n_qubits - 1)} slots > budget {max_slots}")
    unit = parse_grid(PAIR_GENERAL_ROWS)[1]
    frames = np.zeros((1, 1), dtype=np.uint8)
    for _ in range(n_qubits - 1):
        n = frames.shape[1]
        cycles = [unit if j % 2 == 0 else unit[::-1] for j in range(n)]
        frames = np.vstack([np.repeat(frames, 4, axis=1), np.concatenate(cycles)[None, :]])
    return FrameMatrix(frames, tau)


def zeeman_free(n_qubits: int, kind: ModelKind = "general", tau: float = 1.0) -> FrameMatrix:
    """Sequence for N+1 qubits with its all-I first row dropped."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    build = general_decoupling if kind == "general" else diagonal_decoupling
    return FrameMatrix(build(n_qubits + 1, tau).frames[1:], tau)


def retain_coupling(f: FrameMatrix, pairs: Iterable[tuple[int, int]]) -> FrameMatrix:
    """Copy rows so the listed couplings survive.

    Qubits joined by retained pairs form groups; every member of a group gets
    the row of its lowest-indexed qubit, so all pairs inside a group survive.
    """
    n = f.n_qubits
    parent = list(range(n))

    def find(q: int) -> int:
        while parent[q] != q:
            parent[q] = parent[parent[q]]
            q = parent[q]
        return q

    for a, b in pairs:
        if not (0 <= a < n and 0 <= b < n) or a == b:
            raise ValueError(f"inconsistent pair ({a}, {b}) for {n} qubits")
        ra, rb = find(a), find(b)
        parent[max(ra, rb)] = min(ra, rb)
    frames = f.frames.copy()
    for q in range(n):
        frames[q] = f.frames[find(q)]
    return FrameMatrix(frames, f.tau)


def nn_coloring(n_qubits: int, model: CouplingModel | ModelKind = "general", tau: float = 1.0) -> FrameMatrix:
    """Nearest-neighbour chain: odd qubits share one row of the 2-qubit sequence, even the other."""
    kind = model.kind if isinstance(model, CouplingModel) else model
    base = parse_grid(PAIR_DIAGONAL_ROWS if kind == "diagonal" else PAIR_GENERAL_ROWS)
    return FrameMatrix(base[np.arange(n_qubits) % 2], tau)


def repeat_sequence(f: FrameMatrix, m: int, mirror: bool = False) -> FrameMatrix:
    """m copies of the base cycle; with ``mirror`` every second copy runs backwards."""
    if m < 1:
        raise ValueError("m must be >= 1")
    parts = [f.frames[:, ::-1] if mirror and i % 2 else f.frames for i in range(m)]
    return FrameMatrix(np.concatenate(parts, axis=1), f.tau)


# -------------------------------------------------------------- verification


@dataclass
class PairResult:
    pair: tuple[int, int]
    sign_sums: np.ndarray  # integer sum_k r_i^(mu) r_j^(nu)
    decoupled: bool
    average: np.ndarray | None = None  # surviving average tensor if tensors were supplied


@dataclass
class DecouplingReport:
    model: str
    n_slots: int
    pairs: list[PairResult] = field(default_factory=list)
    zeeman: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def failing_pairs(self) -> list[tuple[int, int]]:
        return [p.pair for p in self.pairs if not p.decoupled]

    @property
    def failing_zeeman(self) -> list[int]:
        return [q for q, s in self.zeeman.items() if np.any(s)]

    @property
    def passed(self) -> bool:
        return not self.failing_pairs and not self.failing_zeeman

    def weights(self, pair: tuple[int, int]) -> np.ndarray:
        """Elementwise factor mapping H to its average: ``Hbar = H * weights``."""
        for p in self.pairs:
            if p.pair == pair:
                return p.sign_sums / self.n_slots
        raise KeyError(pair)

    def summary(self) -> str:
        lines = [f"model={self.model} slots={self.n_slots} result={'PASS' if self.passed else 'FAIL'}"]
        for p in self.pairs:
            if p.decoupled:
                continue
            shown = p.average if p.average is not None else p.sign_sums / self.n_slots
            label = "average tensor" if p.average is not None else "H multiplier"
            lines.append(f"  pair {p.pair}: {label} {np.array2string(shown, precision=4).replace(chr(10), ' ')}")
        for q in self.failing_zeeman:
            lines.append(f"  qubit {q}: zeeman multiplier {self.zeeman[q] / self.n_slots}")
        return "\n".join(lines)


def sign_sums(row_a: np.ndarray, row_b: np.ndarray) -> np.ndarray:
    """Integer matrix ``S_ij = sum_k r_i(a_k) r_j(b_k)`` for two frame rows."""
    return SIGNS[row_a].T @ SIGNS[row_b]


def verify_first_order(
    f: FrameMatrix,
    model: CouplingModel | ModelKind = "general",
    check_zeeman: bool = False,
    zeeman_axes: str = "xyz",
) -> DecouplingReport:
    """Exact integer check that the average coupling (and optionally Zeeman) part vanishes.

    ``zeeman_axes`` restricts the Zeeman check to some components, e.g. ``"z"``
    for the usual case of a field along z only.
    """
    if not isinstance(model, CouplingModel):
        model = CouplingModel(model)
    report = DecouplingReport(model.kind, f.n_slots)
    for mu, nu in model.pair_list(f.n_qubits):
        s = sign_sums(f.frames[mu], f.frames[nu])
        if model.kind == "general":
            ok = not s.any()
        else:
            counts = np.bincount(f.frames[mu] ^ f.frames[nu], minlength=4)
            ok = bool((counts == counts[0]).all())
        avg = None
        if model.tensors is not None and (mu, nu) in model.tensors:
            h = np.asarray(model.tensors[(mu, nu)], dtype=float)
            avg = h * s / f.n_slots
        report.pairs.append(PairResult((mu, nu), s, ok, avg))
    if check_zeeman:
        keep = np.array([ax in zeeman_axes.lower() for ax in "xyz"], dtype=np.int64)
        for q in range(f.n_qubits):
            report.zeeman[q] = SIGNS[f.frames[q]].sum(axis=0) * keep
    return report


class Feasibility(str, Enum):
    NONSELECTIVE_POSSIBLE = "nonselective_possible"
    SELECTIVE_REQUIRED = "selective_required"


def trace_feasibility(h: np.ndarray, rtol: float = 1e-12) -> Feasibility:
    """Nonselective pulses preserve the trace of a coupling tensor, so they can only remove traceless ones."""
    h = np.asarray(h, dtype=float)
    scale = np.linalg.norm(h)
    if abs(np.trace(h)) <= rtol * scale:
        return Feasibility.NONSELECTIVE_POSSIBLE
    return Feasibility.SELECTIVE_REQUIRED


# --------------------------------------------------------------- compilation


@dataclass
class PulseTrain:
    """Pulses before each slot plus the closing pulses that make the cycle return to I."""

    slots: list[list[tuple[int, Sym]]]
    tau: float
    closing: list[tuple[int, Sym]]
    n_qubits: int

    @property
    def n_slots(self) -> int:
        return len(self.slots)

    def pulse_count(self) -> int:
        return sum(len(s) for s in self.slots)

    def axes(self) -> set[Sym]:
        return {ax for s in self.slots for _, ax in s} | {ax for _, ax in self.closing}

    def to_json(self) -> str:
        def enc(ps: list[tuple[int, Sym]]) -> list[list[Any]]:
            return [[q, SYMBOLS[int(a)]] for q, a in ps]

        return json.dumps(
            {
                "tau_s": self.tau,
                "n_qubits": self.n_qubits,
                "slots": [enc(s) for s in self.slots],
                "closing": enc(self.closing),
            }
        )

    def describe(self) -> str:
        """Text form like ``(tau, X1, tau, Y2, ...)`` with 1-based qubit labels."""
        parts = []
        for pulses in self.slots:
            parts.extend(f"{SYMBOLS[int(a)]}{q + 1}" for q, a in pulses)
            parts.append("tau")
        parts.extend(f"{SYMBOLS[int(a)]}{q + 1}" for q, a in self.closing)
        return "(" + ", ".join(parts) + ")"


def compile_pulses(f: FrameMatrix) -> PulseTrain:
    n_q = f.n_qubits
    padded = np.concatenate([np.zeros((n_q, 1), np.uint8), f.frames], axis=1)
    steps = padded[:, 1:] ^ padded[:, :-1]
    slots = [[(q, Sym(int(steps[q, k]))) for q in range(n_q) if steps[q, k]] for k in range(f.n_slots)]
    closing = [(q, Sym(int(f.frames[q, -1]))) for q in range(n_q) if f.frames[q, -1]]
    return PulseTrain(slots, f.tau, closing, n_q)


def replay(train: PulseTrain) -> tuple[FrameMatrix, np.ndarray]:
    """Accumulate pulses; returns the slot frames and the frame after the closing pulses."""
    cur = np.zeros(train.n_qubits, dtype=np.uint8)
    cols = []
    for pulses in train.slots:
        for q, ax in pulses:
            cur[q] ^= int(ax)
        cols.append(cur.copy())
    for q, ax in train.closing:
        cur[q] ^= int(ax)
    return FrameMatrix(np.stack(cols, axis=1), train.tau), cur


@dataclass
class SequenceMetrics:
    n_slots: int
    pulse_count: int
    closing_pulses: int
    duration: float
    z_pulses: bool

    @property
    def total_pulses(self) -> int:
        return self.pulse_count + self.closing_pulses


def metrics(f: FrameMatrix) -> SequenceMetrics:
    train = compile_pulses(f)
    return SequenceMetrics(
        n_slots=f.n_slots,
        pulse_count=train.pulse_count(),
        closing_pulses=len(train.closing),
        duration=f.n_slots * f.tau,
        z_pulses=Sym.Z in train.axes(),
    )
