"""Fidelity experiments: the N=4 chain decoupling curves, faulty-pulse Monte Carlo, custom configs.

Monte Carlo realizations are processed in fixed-size blocks. A block's result
does not depend on which worker ran it, so output is identical for any worker
count.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

from .avg_hamiltonian import RegisterHamiltonian, build_hamiltonian, spin_chain, strong_coupling_pair, weak_coupling_pair
from .sequence_synth import FrameMatrix, compile_pulses, nn_coloring
from .simulator import (
    ConfigError,
    FaultModel,
    SimulationConfig,
    batch_fidelity,
    evolve_sequence,
    evolve_states,
    faulty_pulses_per_cycle,
    fidelity,
    propagator,
    standard_normals,
    weak_coupling_analytic,
)

BLOCK_SIZE = 250

FIG2_SIGMAS = (0.0, 0.01, 0.02, 0.03, 0.04, 0.05)
FIG2_M = tuple(range(1, 65))
FIG1_T = tuple(np.round(np.arange(0.0, 1.5001, 0.05), 10))
FIG1_M = (1, 4)


@dataclass
class FidelityCurve:
    label: str
    abscissa_name: str
    abscissa: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_realizations: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.abscissa_name, "mean", "stderr", "n_realizations"])
        for x, v, e, r in zip(self.abscissa, self.values, self.stderr, self.n_realizations):
            w.writerow([repr(float(x)), repr(float(v)), repr(float(e)), int(r)])
        return buf.getvalue()

    def write(self, out_dir: Path) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{self.label}.csv"
        meta_path = out_dir / f"{self.label}.json"
        csv_path.write_text(self.to_csv())
        meta_path.write_text(json.dumps({"label": self.label, **self.metadata}, indent=2, sort_keys=True, default=str))
        return [csv_path, meta_path]


def _deterministic_curve(label: str, name: str, xs: Sequence[float], ys: Sequence[float], meta: dict[str, Any]) -> FidelityCurve:
    n = len(xs)
    return FidelityCurve(label, name, np.asarray(xs, float), np.asarray(ys, float), np.zeros(n), np.ones(n, int), meta)


# ------------------------------------------------------------- analytics


def chain_fidelity_approx(t_c: float | np.ndarray, n: int, j: float, omega: float, m: int) -> np.ndarray:
    """Small-t_c fidelity of ``|100...0>`` for the Heisenberg chain under the nearest-neighbour sequence."""
    t_c = np.asarray(t_c, dtype=float)
    if n == 2:
        coeff = j**2 * omega**2
    else:
        coeff = j**2 * ((j**2 + omega**2) * (n - 1) - 2 * j**2)
    return 1.0 - coeff * t_c**4 / (4 * m**2)


def fig2_fit(m: float | np.ndarray, sigma: float) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (1 + np.exp(-m * sigma**2)) * (1 - 1 / (400 * m**2) + 1 / (1369 * m**4))


# --------------------------------------------------------- Monte Carlo core


def _block_fidelities(cfg: SimulationConfig, z_block: np.ndarray) -> np.ndarray:
    psi = cfg.state()
    return batch_fidelity(psi, evolve_states(cfg, psi, cfg.fault.sigma * z_block))


@contextmanager
def _executor(workers: int) -> Iterator[Executor | None]:
    if workers <= 1:
        yield None
        return
    with ProcessPoolExecutor(max_workers=workers) as ex:
        yield ex


def monte_carlo(
    cfgs: Sequence[SimulationConfig],
    z: np.ndarray,
    workers: int = 1,
    executor: Executor | None = None,
) -> list[np.ndarray]:
    """Per-realization fidelities for each config, using the first columns of ``z`` as pulse errors."""
    tasks = []
    for ci, cfg in enumerate(cfgs):
        n_p = faulty_pulses_per_cycle(compile_pulses(cfg.frames), cfg.fault) * cfg.m
        if n_p > z.shape[1]:
            raise ValueError(f"config {ci} needs {n_p} pulse draws, only {z.shape[1]} available")
        for start in range(0, cfg.realizations, BLOCK_SIZE):
            stop = min(start + BLOCK_SIZE, cfg.realizations)
            tasks.append((ci, start, cfg, z[start:stop, :n_p]))
    if executor is None and workers > 1:
        with _executor(workers) as ex:
            return monte_carlo(cfgs, z, workers, ex)
    if executor is None:
        results = [_block_fidelities(cfg, zb) for _, _, cfg, zb in tasks]
    else:
        results = list(executor.map(_block_fidelities, [t[2] for t in tasks], [t[3] for t in tasks]))
    out = [np.empty(cfg.realizations) for cfg in cfgs]
    for (ci, start, _, _), vals in zip(tasks, results):
        out[ci][start : start + len(vals)] = vals
    return out


def _stats(values: np.ndarray) -> tuple[float, float]:
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def _sweep_m(
    label: str,
    make_cfg,
    m_grid: Sequence[int],
    z: np.ndarray,
    meta: dict[str, Any],
    workers: int,
    executor: Executor | None,
) -> FidelityCurve:
    cfgs = [make_cfg(m) for m in m_grid]
    per = monte_carlo(cfgs, z, workers, executor)
    stats = [_stats(v) for v in per]
    return FidelityCurve(
        label,
        "m",
        np.asarray(m_grid, float),
        np.array([s[0] for s in stats]),
        np.array([s[1] for s in stats]),
        np.array([c.realizations for c in cfgs]),
        meta,
    )


# ----------------------------------------------------------------- runners


def run_fig1(
    t_grid: Sequence[float] = FIG1_T,
    m_list: Sequence[int] = FIG1_M,
    j: float = 1.0,
    n: int = 4,
) -> list[FidelityCurve]:
    """Heisenberg chain at omega=0 from ``|100...0>``: free evolution, decoupled curves, small-t approximations."""
    h = spin_chain(n, j, j, j, 0.0)
    frames = nn_coloring(n, "diagonal")
    init = "1" + "0" * (n - 1)
    psi = np.zeros(2**n, complex)
    psi[int(init, 2)] = 1
    dense = build_hamiltonian(h)
    base_meta = {"model": "heisenberg_chain", "n_qubits": n, "J": j, "omega": 0.0, "initial_state": init,
                 "frames": frames.rows, "abscissa": "J*t_c"}
    xs = list(t_grid)
    curves = [
        _deterministic_curve("fig1_free", "Jt_c", xs, [fidelity(psi, propagator(dense, t / j)) for t in xs],
                             {**base_meta, "curve": "free evolution"})
    ]
    for m in m_list:
        vals = []
        for t in xs:
            if t == 0:
                vals.append(1.0)
                continue
            cfg = SimulationConfig(h, frames, t / j, m, init)
            vals.append(fidelity(psi, evolve_sequence(cfg)))
        curves.append(_deterministic_curve(f"fig1_m{m}", "Jt_c", xs, vals, {**base_meta, "curve": "decoupled", "m": m}))
        curves.append(
            _deterministic_curve(
                f"fig1_approx_m{m}", "Jt_c", xs, chain_fidelity_approx(np.asarray(xs) / j, n, j, 0.0, m),
                {**base_meta, "curve": "small-t approximation", "m": m},
            )
        )
    return curves


def _pair_diagonal_frames() -> FrameMatrix:
    return nn_coloring(2, "diagonal")


def run_fig2(
    sigmas: Sequence[float] = FIG2_SIGMAS,
    m_grid: Sequence[int] = FIG2_M,
    realizations: int = 1000,
    seed: int = 0,
    workers: int = 1,
    j: float = 1.0,
) -> list[FidelityCurve]:
    """Strong coupling, ``J = 10 omega``, ``t_c = 1/J``, initial ``|01>``, faulty x pulses."""
    if realizations < 100:
        raise ValueError("fig2 needs at least 100 realizations")
    omega = j / 10
    h = strong_coupling_pair(omega, j)
    frames = _pair_diagonal_frames()
    n_per_cycle = faulty_pulses_per_cycle(compile_pulses(frames), FaultModel(1.0))
    z = standard_normals(seed, realizations, n_per_cycle * max(m_grid))
    curves = []
    with _executor(workers) as ex:
        for s in sigmas:
            fault = FaultModel(s, seed=seed)
            reals = realizations if s > 0 else 1

            def make(m: int, fault=fault, reals=reals) -> SimulationConfig:
                return SimulationConfig(h, frames, 1 / j, m, "01", fault, reals)

            meta = {"model": "strong_coupling_pair", "J": j, "omega": omega, "t_c": 1 / j, "initial_state": "01",
                    "frames": frames.rows, "fault": fault.to_dict(), "realizations": reals,
                    "fit": [float(v) for v in fig2_fit(np.asarray(m_grid), s)]}
            curves.append(_sweep_m(f"fig2_sigma{s:.2f}", make, m_grid, z, meta, workers, ex))
    return curves


def run_weak_faulty(
    sigma: float,
    m_grid: Sequence[int] = (1, 10, 40),
    realizations: int = 1000,
    seed: int = 0,
    workers: int = 1,
    j: float = 1.0,
    initial_state: str = "01",
) -> FidelityCurve:
    """Weak (Ising) coupling pair with faulty x pulses; compare with ``(1 + exp(-m sigma^2)) / 2``."""
    omega = j / 10
    h = weak_coupling_pair(omega, omega, j)
    frames = _pair_diagonal_frames()
    fault = FaultModel(sigma, seed=seed)
    n_per_cycle = faulty_pulses_per_cycle(compile_pulses(frames), FaultModel(1.0))
    z = standard_normals(seed, realizations, n_per_cycle * max(m_grid))

    def make(m: int) -> SimulationConfig:
        return SimulationConfig(h, frames, 1 / j, m, initial_state, fault, realizations)

    meta = {"model": "weak_coupling_pair", "J": j, "omega": omega, "t_c": 1 / j, "initial_state": initial_state,
            "frames": frames.rows, "fault": fault.to_dict(), "realizations": realizations,
            "analytic": [weak_coupling_analytic(m, sigma) for m in m_grid]}
    return _sweep_m(f"weak_sigma{sigma:.2f}", make, m_grid, z, meta, workers, None)


def load_custom_config(data: dict[str, Any], seed: int) -> tuple[list[SimulationConfig], list[int]]:
    """Validate a custom experiment config, collecting every error before raising."""
    errors: list[str] = []
    h = frames = None
    try:
        h = RegisterHamiltonian.from_json(data["hamiltonian"])
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"hamiltonian: {exc!r}")
    try:
        frames = FrameMatrix.from_json(data["frames"])
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"frames: {exc!r}")
    m_grid = data.get("m", [1])
    if not isinstance(m_grid, list) or not m_grid or not all(isinstance(m, int) and m >= 1 for m in m_grid):
        errors.append(f"m: expected a non-empty list of positive integers, got {m_grid!r}")
    t_c = data.get("t_c")
    if not isinstance(t_c, (int, float)) or not t_c > 0:
        errors.append(f"t_c: expected a positive number, got {t_c!r}")
    fault_data = data.get("fault", {})
    sigma = fault_data.get("sigma", 0.0)
    if not isinstance(sigma, (int, float)) or sigma < 0:
        errors.append(f"fault.sigma: expected a non-negative number, got {sigma!r}")
    axes = fault_data.get("axes", ["X"])
    if not isinstance(axes, list) or not set(axes) <= {"X", "Y", "Z"}:
        errors.append(f"fault.axes: expected a subset of X, Y, Z, got {axes!r}")
    realizations = data.get("realizations", 1)
    if not isinstance(realizations, int) or realizations < 1:
        errors.append(f"realizations: expected a positive integer, got {realizations!r}")
    init = data.get("initial_state")
    if init is None:
        errors.append("initial_state: missing")
    elif isinstance(init, list):
        init = np.array([complex(*a) if isinstance(a, list) else complex(a) for a in init])
    if h is not None and frames is not None and frames.n_qubits != h.n:
        errors.append(f"frames have {frames.n_qubits} rows but hamiltonian has {h.n} qubits")
    if errors:
        raise ConfigError(errors)
    fault = FaultModel(float(sigma), frozenset(axes), seed)
    try:
        cfgs = [SimulationConfig(h, frames, float(t_c), m, init, fault, realizations) for m in m_grid]
    except ConfigError as exc:
        raise ConfigError(exc.errors) from None
    return cfgs, m_grid


def run_custom(data: dict[str, Any], seed: int = 0, workers: int = 1) -> FidelityCurve:
    cfgs, m_grid = load_custom_config(data, seed)
    n_per_cycle = faulty_pulses_per_cycle(compile_pulses(cfgs[0].frames), cfgs[0].fault)
    z = standard_normals(seed, cfgs[0].realizations, max(1, n_per_cycle * max(m_grid)))
    by_m = dict(zip(m_grid, cfgs))
    meta = {"config": cfgs[0].describe() | {"m": list(m_grid)}, "seed": seed}
    return _sweep_m(data.get("label", "custom"), by_m.__getitem__, m_grid, z, meta, workers, None)
