"""Strength-2 orthogonal arrays over {I,X,Y,Z} and GF(4) difference schemes.

Arrays are ``uint8`` matrices of symbol codes (see :mod:`spindecouple.pauli_frame`);
rows are factors (qubits), columns are runs (time slots).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, NamedTuple

import numpy as np

from .pauli_frame import SYMBOLS, format_row, kron_group, parse_grid

LEVELS = 4
STRENGTH = 2


class MalformedDesignError(ValueError):
    """Input is not even shaped like the requested design."""


class Violation(NamedTuple):
    rows: tuple[int, ...]
    symbols: tuple[str, ...]
    count: int
    expected: int


@dataclass
class DesignReport:
    valid: bool
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


@dataclass(eq=False)
class OrthogonalArray:
    """OA(16*lam, k, 4, 2) stored as a k x n symbol matrix."""

    entries: np.ndarray
    lam: int

    def __post_init__(self) -> None:
        self.entries = np.atleast_2d(np.asarray(self.entries, dtype=np.uint8))

    @property
    def runs(self) -> int:
        return self.entries.shape[1]

    @property
    def factors(self) -> int:
        return self.entries.shape[0]

    @property
    def params(self) -> dict[str, int]:
        return {"n": self.runs, "k": self.factors, "s": LEVELS, "t": STRENGTH, "lambda": self.lam}


@dataclass(eq=False)
class DifferenceScheme:
    """D(r, c, 4) over (GF(4), +) stored as an r x c symbol matrix."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        self.entries = np.atleast_2d(np.asarray(self.entries, dtype=np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def params(self) -> dict[str, int]:
        r, c = self.shape
        return {"r": r, "c": c, "s": LEVELS}


M4_ROWS = ["IIII", "IXYZ", "IYZX", "IZXY"]

M8_ROWS = [
    "IIIIIIII",
    "IIXXYYZZ",
    "IXYZIXYZ",
    "IXZYYZXI",
    "IYIYZXZX",
    "IYXZXZIY",
    "IZYXZIXY",
    "IZZIXYYX",
]

OA16_5_ROWS = [
    "IIIIXXXXYYYYZZZZ",
    "IXYZIXYZIXYZIXYZ",
    "IXYZXIZYYZIXZYXI",
    "IXYZYZIXZYXIXIZY",
    "IXYZZYXIXIZYYZIX",
]


def builtin(name: str) -> DifferenceScheme | OrthogonalArray:
    """Reference arrays: ``M4``, ``M8`` (difference schemes) and ``OA16_5``."""
    key = name.upper().replace("(", "").replace(")", "").replace(",", "_")
    if key == "M4":
        return DifferenceScheme(parse_grid(M4_ROWS))
    if key == "M8":
        return DifferenceScheme(parse_grid(M8_ROWS))
    if key in ("OA16_5", "OA16_5_4_2"):
        return OrthogonalArray(parse_grid(OA16_5_ROWS), lam=1)
    if key == "M12":
        raise KeyError("M12 is not constructible from the built-in designs")
    raise KeyError(f"unknown built-in design {name!r}; choose from M4, M8, OA16_5")


def verify_oa(a: OrthogonalArray) -> DesignReport:
    """Exhaustive strength-2 check: every ordered symbol pair lam times in every row pair."""
    ent = a.entries
    if a.lam < 1 or ent.shape[1] != LEVELS**STRENGTH * a.lam:
        raise MalformedDesignError(
            f"OA with lambda={a.lam} needs {LEVELS**STRENGTH * a.lam} runs, got {ent.shape[1]}"
        )
    if ent.size and ent.max() >= LEVELS:
        raise MalformedDesignError("symbol codes must lie in 0..3")
    violations: list[Violation] = []
    per_symbol = LEVELS * a.lam
    for r, row in enumerate(ent):
        counts = np.bincount(row, minlength=LEVELS)
        for s in np.flatnonzero(counts != per_symbol):
            violations.append(Violation((r,), (SYMBOLS[s],), int(counts[s]), per_symbol))
    for r1, r2 in combinations(range(ent.shape[0]), 2):
        counts = np.bincount(LEVELS * ent[r1].astype(np.intp) + ent[r2], minlength=LEVELS**2)
        for code in np.flatnonzero(counts != a.lam):
            pair = (SYMBOLS[code // LEVELS], SYMBOLS[code % LEVELS])
            violations.append(Violation((r1, r2), pair, int(counts[code]), a.lam))
    return DesignReport(not violations, violations)


def verify_difference_scheme(d: DifferenceScheme) -> DesignReport:
    """Every row-pair sum must hit each of I, X, Y, Z exactly c/4 times.

    Sum and difference coincide because every element is its own inverse.
    """
    ent = d.entries
    c = ent.shape[1]
    if c % LEVELS:
        raise MalformedDesignError(f"difference scheme over GF(4) needs c divisible by 4, got {c}")
    if ent.size and ent.max() >= LEVELS:
        raise MalformedDesignError("symbol codes must lie in 0..3")
    want = c // LEVELS
    violations: list[Violation] = []
    for r1, r2 in combinations(range(ent.shape[0]), 2):
        counts = np.bincount(ent[r1] ^ ent[r2], minlength=LEVELS)
        for s in np.flatnonzero(counts != want):
            violations.append(Violation((r1, r2), (SYMBOLS[s],), int(counts[s]), want))
    return DesignReport(not violations, violations)


def direct_product(a: DifferenceScheme, b: DifferenceScheme) -> DifferenceScheme:
    for label, d in (("left", a), ("right", b)):
        if d.shape != (1, 1) and not verify_difference_scheme(d).valid:
            raise ValueError(f"{label} factor is not a difference scheme")
    return DifferenceScheme(kron_group(a.entries, b.entries))


def hadamard_power_of_two(u: int) -> DifferenceScheme:
    """Generalized Hadamard matrix M_{2^u}: powers of M4, with one M8 factor for odd u."""
    if u < 2:
        raise ValueError(f"M_(2^u) needs u >= 2, got {u}")
    m4 = builtin("M4")
    if u % 2:
        out = builtin("M8")
        u -= 3
    else:
        out = m4
        u -= 2
    for _ in range(u // 2):
        out = DifferenceScheme(kron_group(out.entries, m4.entries))
    return out


def bose_bush_params(u: int) -> tuple[int, int]:
    """(runs, rows) of the recursive construction for index 2^u."""
    n = 2 ** (u + 4)
    return n, (n - 1) // 3 if u % 2 == 0 else (n - 5) // 3


def _bose_bush_base(u: int) -> np.ndarray:
    # OA(16*lam, 4*lam, 4, 2) = M_(4*lam) (x) (I X Y Z)
    return kron_group(hadamard_power_of_two(u + 2).entries, np.arange(LEVELS, dtype=np.uint8))


def bose_bush_oa(u: int) -> OrthogonalArray:
    """OA(2^(u+4), k, 4, 2) with lam = 2^u built by the Bose-Bush recursion.

    Blocks are stacked base-first: the base array for lam, then base arrays for
    lam/4, lam/16, ... with every column repeated 4, 16, ... times, then the
    final row of 4*lam I's, X's, Y's, Z's.
    """
    if u < 0:
        raise ValueError(f"u must be >= 0, got {u}")
    lam = 2**u
    blocks = [_bose_bush_base(u)]
    level = u - 2
    repeat = LEVELS
    while level >= 0:
        blocks.append(np.repeat(_bose_bush_base(level), repeat, axis=1))
        level -= 2
        repeat *= LEVELS
    blocks.append(np.repeat(np.arange(LEVELS, dtype=np.uint8), LEVELS * lam)[None, :])
    return OrthogonalArray(np.vstack(blocks), lam=lam)


def design_to_json(d: OrthogonalArray | DifferenceScheme) -> str:
    kind = "oa" if isinstance(d, OrthogonalArray) else "ds"
    payload = {"kind": kind, "rows": [format_row(r) for r in d.entries], "params": d.params}
    return json.dumps(payload, indent=2)


def design_from_json(text: str | dict[str, Any]) -> OrthogonalArray | DifferenceScheme:
    data = json.loads(text) if isinstance(text, str) else text
    try:
        kind = data["kind"]
        entries = parse_grid(list(data["rows"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDesignError(f"bad design file: {exc}") from exc
    if kind == "ds":
        return DifferenceScheme(entries)
    if kind == "oa":
        params = data.get("params", {})
        lam = params.get("lambda", entries.shape[1] // LEVELS**STRENGTH)
        return OrthogonalArray(entries, lam=int(lam))
    raise MalformedDesignError(f"unknown design kind {kind!r}")
