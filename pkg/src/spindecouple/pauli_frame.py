"""Klein four-group of pi-rotation frames {I, X, Y, Z}.

Symbols are stored as small integers (I=0, X=1, Y=2, Z=3). With that encoding
the group product is bitwise XOR, which is also addition in GF(4), so symbol
matrices are plain ``uint8`` numpy arrays throughout the package.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class Sym(IntEnum):
    I = 0
    X = 1
    Y = 2
    Z = 3

    def __str__(self) -> str:
        return self.name


SYMBOLS = "IXYZ"

# Diagonals of the pi-rotation matrices, indexed by symbol code.
SIGNS = np.array(
    [
        [1, 1, 1],
        [1, -1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
    ],
    dtype=np.int64,
)

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def sym(value: int | str | Sym) -> Sym:
    """Coerce a code, a one-letter name or a Sym into a Sym."""
    if isinstance(value, str):
        try:
            return Sym(SYMBOLS.index(value.upper()))
        except ValueError:
            raise ValueError(f"unknown frame symbol {value!r}") from None
    return Sym(int(value))


def sym_add(a: int | Sym, b: int | Sym) -> Sym:
    """Group product of two frames (GF(4) addition)."""
    return Sym(int(a) ^ int(b))


def rotation_matrix(s: int | Sym) -> np.ndarray:
    """3x3 integer rotation matrix of a pi-frame."""
    return np.diag(SIGNS[int(s)])


def parse_symbols(text: str) -> np.ndarray:
    """``"IXZY"`` -> ``array([0, 1, 3, 2], dtype=uint8)``. Whitespace is ignored."""
    chars = [c for c in text if not c.isspace()]
    try:
        return np.array([SYMBOLS.index(c.upper()) for c in chars], dtype=np.uint8)
    except ValueError:
        bad = sorted({c for c in chars if c.upper() not in SYMBOLS})
        raise ValueError(f"unknown frame symbols {bad} in {text!r}") from None


def parse_grid(rows: list[str] | str) -> np.ndarray:
    """Parse rows of symbol strings into a 2-D ``uint8`` array."""
    if isinstance(rows, str):
        rows = [line for line in rows.splitlines() if line.strip()]
    parsed = [parse_symbols(r) for r in rows]
    if not parsed:
        raise ValueError("empty symbol grid")
    width = {len(p) for p in parsed}
    if len(width) != 1:
        raise ValueError(f"ragged symbol grid, row lengths {sorted(width)}")
    return np.stack(parsed)


def format_row(row: np.ndarray) -> str:
    return "".join(SYMBOLS[int(c)] for c in row)


def format_grid(grid: np.ndarray, sep: str = "") -> str:
    return "\n".join(sep.join(SYMBOLS[int(c)] for c in row) for row in grid)


def kron_group(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of symbol matrices with the group product as multiplication.

    Entry ``(i*rb + k, j*cb + l)`` is ``a[i, j] ^ b[k, l]``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.uint8))
    b = np.atleast_2d(np.asarray(b, dtype=np.uint8))
    ra, ca = a.shape
    rb, cb = b.shape
    out = a[:, None, :, None] ^ b[None, :, None, :]
    return out.reshape(ra * rb, ca * cb)


def pulse_unitary(axis: int | str | Sym, delta: float = 0.0) -> np.ndarray:
    """SU(2) matrix of a pi pulse about ``axis`` whose angle is off by ``delta``.

    Uses the convention ``i*sigma*cos(delta/2) - 1*sin(delta/2)``, which is
    ``i*sigma`` for an ideal pulse.
    """
    s = sym(axis)
    if s is Sym.I:
        raise ValueError("axis I is not a pulse")
    return 1j * PAULI[s] * np.cos(delta / 2) - PAULI[0] * np.sin(delta / 2)


def frame_unitary(s: int | Sym) -> np.ndarray:
    """SU(2) representative of a frame: identity for I, ``i*sigma`` otherwise."""
    s = Sym(int(s))
    return PAULI[0].copy() if s is Sym.I else pulse_unitary(s)


def conjugation_matrix(u: np.ndarray) -> np.ndarray:
    """Real 3x3 matrix R with ``u^dag sigma_i u = sum_j R_ij sigma_j``."""
    r = np.empty((3, 3))
    for i in range(3):
        moved = u.conj().T @ PAULI[i + 1] @ u
        for j in range(3):
            r[i, j] = 0.5 * np.trace(moved @ PAULI[j + 1]).real
    return r
