"""Convergence studies and reporting.

``run_bosonic_convergence`` sweeps the temperature with coupling ``1/T`` and
compares the quantum Gibbs state against the classical field measure;
``run_boltzon_convergence`` sweeps the particle number at fixed coupling and
compares the exact distinguishable-particle Gibbs state with the mean-field
minimizer.  Rows are plain dataclasses written out by :func:`emit_report`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from math import comb
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .boltzon import MeanFieldProblem, exact_gibbs_distinguishable, scf_minimize
from .cfield import estimate_both, estimate_moments, estimate_partition, free_moment_exact
from .config import StudyConfig
from .errors import ConfigError, DimensionOverflow, IoFailure, TailTooLarge
from .fock import FockBasis, assemble_H0, assemble_W
from .model import (
    GridSpec,
    SpectralModel,
    TwoBodyOperator,
    build_finite_rank_interaction,
    project_multiplication_kernel,
    solve_onebody_spectrum,
)
from .qgibbs import (
    free_sector_sums,
    free_sector_weights,
    reduced_density_matrix,
    schatten_distance,
    thermal_state,
    truncation_adequacy,
)

GROWTH = 2.0
STREAM_PARTITION = 0
STREAM_MOMENTS = 1


def free_tail(model: SpectralModel, T: float, n_max: int) -> float:
    """Top-sector probability of the free Gibbs state truncated at ``n_max``."""
    return float(free_sector_weights(model, T, n_max)[-1])


def choose_truncation(
    model: SpectralModel,
    T: float,
    eps: float,
    max_n: int = 5000,
    max_dim: Optional[int] = None,
) -> int:
    """Particle cap whose free-state top-sector mass is below ``eps``.

    Starts from the mean occupation plus six standard deviations and a
    margin of ten, then doubles until the tail is small enough.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    mean = T * float(np.sum(1.0 / model.eigenvalues))
    n = math.ceil(mean + 6.0 * math.sqrt(mean) + 10.0)
    while free_tail(model, T, n) >= eps:
        n = math.ceil(n * GROWTH)
        if n > max_n:
            raise DimensionOverflow(f"n_max {n} needed for tail {eps:g} exceeds cap {max_n}")
    if max_dim is not None and comb(model.K + n, model.K) > max_dim:
        raise DimensionOverflow(f"Fock dimension for n_max={n} exceeds cap {max_dim}")
    return n


# -- model construction from a config --------------------------------------


def build_model(cfg: StudyConfig) -> SpectralModel:
    if cfg.eigenvalues is not None:
        return SpectralModel(np.asarray(cfg.eigenvalues, float), cfg.nu)
    grid = GridSpec(cfg.grid_half_width, cfg.grid_points, cfg.grid_exponent_a)
    return solve_onebody_spectrum(grid, cfg.nu, cfg.K or 4, cfg.grid_tol)


def build_interaction(cfg: StudyConfig, model: SpectralModel) -> TwoBodyOperator:
    if cfg.kernel_shape is not None:
        g, width = cfg.kernel_strength, cfg.kernel_width
        if cfg.kernel_shape == "constant":
            kernel = lambda d: np.full_like(d, g)  # noqa: E731
        else:
            kernel = lambda d: g * np.exp(-((d / width) ** 2))  # noqa: E731
        return project_multiplication_kernel(model, kernel)
    if not cfg.rank1_weights:
        return TwoBodyOperator.zero(model.K)
    if any(len(v) != model.K for v in cfg.rank1_vectors):
        raise ConfigError(f"interaction.rank1.vectors need {model.K} components")
    return build_finite_rank_interaction(cfg.rank1_vectors, cfg.rank1_weights)


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- bosonic study -----------------------------------------------------------


@dataclass
class StudyRow:
    T: float
    coupling: float
    n_max: int
    tail_mass: float
    free_energy_shift: float  # (F_lambda - F_0) / T
    minus_log_zr: float
    minus_log_zr_stderr: float
    e: float
    e_err: float
    d: float
    d_stderr: float
    d_err: float
    wall_time: float = 0.0


def _coupling(cfg: StudyConfig, T: float) -> float:
    if cfg.coupling_rule == "zero":
        return 0.0
    if cfg.coupling_rule == "fixed":
        return cfg.coupling_value
    return 1.0 / T


def bosonic_row(cfg: StudyConfig, model: SpectralModel, w: TwoBodyOperator, index: int, T: float) -> StudyRow:
    start = time.perf_counter()
    lam = _coupling(cfg, T)
    n_max = choose_truncation(model, T, cfg.eps, cfg.max_n, cfg.max_dim)
    basis = FockBasis(model.K, n_max, cfg.max_dim)
    H0 = assemble_H0(basis, model)
    free = thermal_state(H0, T)
    full = thermal_state(H0 + lam * assemble_W(basis, w), T, lam) if lam else free
    tail = max(truncation_adequacy(free, basis), truncation_adequacy(full, basis))
    if tail >= cfg.eps:
        raise TailTooLarge(f"T={T}: tail mass {tail:.3g} >= {cfg.eps:g}")
    gamma1 = reduced_density_matrix(full, basis, 1).matrix / T

    # the classical side is the free measure when the coupling is switched off
    w_cl = w if cfg.coupling_rule != "zero" else TwoBodyOperator.zero(model.K)
    zr, mom = estimate_both(
        model, w_cl, 1, cfg.samples, cfg.seed, stream=2 * index + STREAM_MOMENTS, batches=cfg.batches
    )
    shift = (full.free_energy - free.free_energy) / T
    e = abs(shift - zr.minus_log)
    d = schatten_distance(gamma1, mom.matrix, 1)
    reps = np.array([schatten_distance(gamma1, r, 1) for r in mom.replicates])
    B = reps.size
    d_stderr = float(np.sqrt((B - 1) / B * np.sum((reps - reps.mean()) ** 2)))
    trunc_d = tail * (n_max + 1) / T
    return StudyRow(
        T=T,
        coupling=lam,
        n_max=n_max,
        tail_mass=tail,
        free_energy_shift=shift,
        minus_log_zr=zr.minus_log,
        minus_log_zr_stderr=zr.minus_log_stderr,
        e=e,
        e_err=zr.minus_log_stderr + 2 * tail,
        d=d,
        d_stderr=d_stderr,
        d_err=d_stderr + trunc_d,
        wall_time=time.perf_counter() - start,
    )


def run_bosonic_convergence(cfg: StudyConfig, workers: Optional[int] = None) -> List[StudyRow]:
    if cfg.mode != "bosonic":
        raise ValueError("config mode must be 'bosonic'")
    model = build_model(cfg)
    w = build_interaction(cfg, model)
    tasks = list(enumerate(cfg.temperatures))
    return _map(lambda it: bosonic_row(cfg, model, w, *it), tasks, workers or cfg.workers)


# -- boltzon study -----------------------------------------------------------


@dataclass
class BoltzonRow:
    N: int
    free_energy_per_particle: float
    mean_field_free_energy: float
    gap: float
    trace_distance: float
    upper_bound_holds: bool


def boltzon_problem(cfg: StudyConfig) -> MeanFieldProblem:
    model = build_model(cfg)
    w = build_interaction(cfg, model)
    h0 = np.diag(model.eigenvalues + model.nu)  # boltzon h0 carries no chemical potential
    T = cfg.temperatures[0] if cfg.temperatures else 1.0
    return MeanFieldProblem(h0, w, cfg.coupling_value, T)


def run_boltzon_convergence(cfg: StudyConfig, workers: Optional[int] = None) -> List[BoltzonRow]:
    if cfg.mode != "boltzon":
        raise ValueError("config mode must be 'boltzon'")
    prob = boltzon_problem(cfg)
    mf = scf_minimize(prob, cfg.scf_damping, cfg.scf_tol, cfg.scf_max_iter)
    cap = min(cfg.max_dim, 4096)

    def row(N):
        ex = exact_gibbs_distinguishable(prob, N, 1, cap)
        per = ex.free_energy / N
        return BoltzonRow(
            N=N,
            free_energy_per_particle=per,
            mean_field_free_energy=mf.free_energy,
            gap=abs(per - mf.free_energy),
            trace_distance=schatten_distance(ex.reduced[0], mf.gamma, 1),
            upper_bound_holds=bool(ex.free_energy <= N * mf.free_energy + 1e-9),
        )

    return _map(row, list(cfg.particles), workers or cfg.workers)


# -- free-theory and measure checks ------------------------------------------


@dataclass
class FreeCheckRow:
    T: float
    n_max: int
    tail_mass: float
    occupation_error: float
    free_energy: float
    free_energy_truncated_sum: float
    free_energy_error: float
    free_energy_untruncated: float


def truncated_free_energy(model: SpectralModel, T: float, n_max: int) -> float:
    """``-T log`` of the free partition sum over at most ``n_max`` particles."""
    return float(-T * np.log(free_sector_sums(model, T, n_max).sum()))


def free_check_row(cfg: StudyConfig, model: SpectralModel, T: float) -> FreeCheckRow:
    n_max = choose_truncation(model, T, cfg.eps, cfg.max_n, cfg.max_dim)
    basis = FockBasis(model.K, n_max, cfg.max_dim)
    res = thermal_state(assemble_H0(basis, model), T)
    g1 = reduced_density_matrix(res, basis, 1).matrix
    bose = np.diag(1.0 / np.expm1(model.eigenvalues / T))
    closed = truncated_free_energy(model, T, n_max)
    return FreeCheckRow(
        T=T,
        n_max=n_max,
        tail_mass=truncation_adequacy(res, basis),
        occupation_error=float(np.abs(g1 - bose).max()),
        free_energy=res.free_energy,
        free_energy_truncated_sum=closed,
        free_energy_error=abs(res.free_energy - closed),
        free_energy_untruncated=float(T * np.sum(np.log(-np.expm1(-model.eigenvalues / T)))),
    )


def run_free_check(cfg: StudyConfig, workers: Optional[int] = None) -> List[FreeCheckRow]:
    model = build_model(cfg)
    return _map(lambda T: free_check_row(cfg, model, T), list(cfg.temperatures), workers or cfg.workers)


@dataclass
class MeasureCheckRow:
    check: str
    order: int
    estimate: float
    reference: float
    stderr: float
    max_z: float


def run_measure_check(cfg: StudyConfig, workers: Optional[int] = None) -> List[MeasureCheckRow]:
    """Free-measure moments against the Wick formula, plus ``Z_r`` of the configured ``w``.

    For moment rows ``estimate``/``reference``/``stderr`` describe the entry with
    the largest standardized deviation ``max_z``.
    """
    model = build_model(cfg)
    w = build_interaction(cfg, model)
    zero = TwoBodyOperator.zero(model.K)
    rows = []
    for i, k in enumerate(cfg.moment_orders):
        est = estimate_moments(model, zero, k, cfg.samples, cfg.seed, stream=10 + i, batches=cfg.batches)
        exact = free_moment_exact(model, k)
        dev = np.abs(est.matrix - exact)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(est.stderr_matrix > 0, dev / est.stderr_matrix, np.where(dev > 1e-12, np.inf, 0.0))
        a, b = np.unravel_index(np.argmax(z), z.shape)
        rows.append(
            MeasureCheckRow(
                "free-moment", k, float(est.matrix[a, b].real), float(exact[a, b]),
                float(est.stderr_matrix[a, b]), float(z.max()),
            )
        )
    zr = estimate_partition(model, w, cfg.samples, cfg.seed, stream=0, batches=cfg.batches)
    rows.append(MeasureCheckRow("relative-partition", 0, zr.value, float("nan"), zr.stderr, float("nan")))
    return rows


# -- reporting ---------------------------------------------------------------

CSV_EXCLUDE = {"wall_time"}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".15g")
    return str(v)


def csv_columns(rows: Sequence) -> List[str]:
    return [f.name for f in fields(rows[0]) if f.name not in CSV_EXCLUDE]


def rows_to_csv(rows: Sequence) -> str:
    cols = csv_columns(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"v{__version__}-g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def rows_to_json(rows: Sequence, config: Optional[StudyConfig] = None, seed: Optional[int] = None) -> str:
    summary = {
        "version": version_string(),
        "seed": seed if seed is not None else (config.seed if config else None),
        "config": config.echo() if config else None,
        "columns": [f.name for f in fields(rows[0])],
        "rows": [{k: _jsonable(v) for k, v in asdict(r).items()} for r in rows],
    }
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def emit_report(rows: Sequence, fmt: str, path, config: Optional[StudyConfig] = None) -> Path:
    """Write rows as CSV (fixed column order, 15 significant digits) or a JSON summary."""
    if not rows:
        raise ValueError("no rows to report")
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows, config)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path
