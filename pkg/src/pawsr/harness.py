"""Experiment driver: seeded channel generation, Monte-Carlo sweeps over an
SNR grid, and CSV emission.

Channels are drawn from a counter-based generator keyed by
(seed, realization) so realization r is independent of sweep order and of
the SNR point; the SNR only controls the noise variance. Rows are written
in (snr, realization) order regardless of how many workers ran them.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .gp import GpOptions
from .model import ChannelSet, NoiseModel, SystemDims
from .optimizer import (OptimizationError, SolveOptions, antenna_powers,
                        evaluate_solution, maximize_weighted_sum_rate)

THREAD_ENV_VAR = "PAWSR_THREADS"


def generate_channel(dims: SystemDims, seed: int, realization_index: int) -> ChannelSet:
    """Unit-variance circularly symmetric complex Gaussian channel,
    reproducibly keyed by (seed, realization_index)."""
    key = np.array([seed, realization_index], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    shape = (dims.N, dims.M_total)
    H = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return ChannelSet(dims, H)


def sigma2_from_snr(snr_db: float, p_sum: float, K: int) -> float:
    """sigma^2 = P_sum / (K * 10^(snr_db/10)); the SNR is P_sum/(K sigma^2)."""
    if p_sum <= 0 or K < 1:
        raise ValueError("p_sum must be positive and K >= 1")
    return p_sum / (K * 10.0 ** (snr_db / 10.0))


@dataclass
class ExperimentConfig:
    dims: SystemDims
    p_check: np.ndarray
    omega: np.ndarray
    snr_db: list
    realizations: int
    seed: int
    solver: SolveOptions = field(default_factory=SolveOptions)
    out: str | None = None

    def __post_init__(self):
        self.p_check = np.asarray(self.p_check, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        if self.p_check.shape != (self.dims.N,) or np.any(self.p_check <= 0):
            raise ValueError("p_check must be positive with one entry per antenna")
        if self.omega.shape != (self.dims.S_total,):
            raise ValueError("omega must have one entry per symbol")
        if np.any(self.omega <= 0) or np.any(self.omega >= 1):
            raise ValueError("omega entries must lie in (0, 1)")
        snr = [float(s) for s in self.snr_db]
        if not snr or not all(np.isfinite(snr)):
            raise ValueError("snr_db must be a nonempty finite grid")
        if sorted(snr) != snr:
            raise ValueError("snr_db grid must be sorted ascending")
        self.snr_db = snr
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        for key in ("dims", "p_check", "omega", "snr_db", "realizations", "seed"):
            if key not in raw:
                raise ValueError(f"config is missing required field {key!r}")
        d = raw["dims"]
        dims = SystemDims(int(d["K"]), int(d["N"]), tuple(d["M"]), tuple(d["S"]))
        solver_raw = dict(raw.get("solver", {}))
        gp_opts = GpOptions(**solver_raw.pop("gp", {}))
        solver = SolveOptions(gp=gp_opts, **solver_raw)
        return cls(dims, raw["p_check"], raw["omega"], raw["snr_db"],
                   int(raw["realizations"]), int(raw["seed"]), solver,
                   raw.get("out"))


def demo_config(realizations: int = 200, seed: int = 1) -> ExperimentConfig:
    """2 users with 2 antennas / 2 streams each, 4 BS antennas, caps 2.5,
    weights [0.4, 0.2, 0.6, 0.25]. The 0..20 dB grid in 5 dB steps is a
    stand-in; the original study does not state its grid."""
    dims = SystemDims(2, 4, (2, 2), (2, 2))
    return ExperimentConfig(dims, [2.5] * 4, [0.4, 0.2, 0.6, 0.25],
                            [0.0, 5.0, 10.0, 15.0, 20.0], realizations, seed)


RESULT_FIELDS = ("seed", "realization", "snr_db", "sigma2", "converged",
                 "outer_iters", "objective", "weighted_sum_rate", "total_power")
TRACE_FIELDS = ("seed", "realization", "snr_db", "outer_iter", "objective",
                "weighted_sum_rate", "total_power")


def result_header(N: int) -> list:
    return list(RESULT_FIELDS) + [f"power_{n + 1}" for n in range(N)] + ["wall_time_s"]


def _run_one(config: ExperimentConfig, snr_db: float, realization: int):
    """One (snr, realization) cell. Returns (row dict, trace rows)."""
    sigma2 = sigma2_from_snr(snr_db, float(np.sum(config.p_check)), config.dims.K)
    channels = generate_channel(config.dims, config.seed, realization)
    noise = NoiseModel.isotropic(config.dims, sigma2)
    start = time.perf_counter()
    converged = False
    trace = None
    try:
        res = maximize_weighted_sum_rate(channels, noise, config.p_check,
                                         config.omega, config.solver)
        converged = res.converged
        trace = res.trace
        report = evaluate_solution(res.B, channels, noise, config.omega, config.p_check)
        rate, total, powers = report.weighted_sum_rate, report.total_power, report.per_antenna_powers
        objective = res.trace.records[-1].objective
        iters = res.iterations
    except OptimizationError as exc:
        trace = exc.trace
        if trace.records:
            last = trace.records[-1]
            rate, total, powers = last.rate, last.total_power, last.powers
            objective = last.objective
        else:
            rate = total = objective = float("nan")
            powers = np.full(config.dims.N, np.nan)
        iters = exc.iteration
    except ValueError:
        # degenerate realization (e.g. zero channel row); record and move on
        rate = total = objective = float("nan")
        powers = np.full(config.dims.N, np.nan)
        iters = 0
    wall = time.perf_counter() - start

    row = {
        "seed": config.seed, "realization": realization, "snr_db": snr_db,
        "sigma2": sigma2, "converged": converged, "outer_iters": iters,
        "objective": objective, "weighted_sum_rate": rate, "total_power": total,
    }
    for n in range(config.dims.N):
        row[f"power_{n + 1}"] = float(powers[n])
    row["wall_time_s"] = wall

    trace_rows = []
    if trace is not None:
        for rec in trace.records:
            trace_rows.append({
                "seed": config.seed, "realization": realization, "snr_db": snr_db,
                "outer_iter": rec.iteration, "objective": rec.objective,
                "weighted_sum_rate": rec.rate, "total_power": rec.total_power,
            })
    return row, trace_rows


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format(row[col]) for col in header])


def aggregate(rows) -> list:
    """Per-SNR means over converged rows, plus convergence accounting.
    Pure function of the row dicts so summaries can be recomputed."""
    by_snr = {}
    for row in rows:
        by_snr.setdefault(row["snr_db"], []).append(row)
    out = []
    for snr in sorted(by_snr):
        group = by_snr[snr]
        good = [r for r in group if r["converged"]]
        entry = {
            "snr_db": snr,
            "total": len(group),
            "converged": len(good),
            "excluded": len(group) - len(good),
            "mean_rate": float(np.mean([r["weighted_sum_rate"] for r in good])) if good else float("nan"),
            "mean_total_power": float(np.mean([r["total_power"] for r in good])) if good else float("nan"),
        }
        out.append(entry)
    return out


def run_experiment(config: ExperimentConfig, out_path: str,
                   trace_path: str | None = None) -> list:
    """Run the full sweep, write the results CSV (and optional per-iteration
    trace CSV), and return the per-SNR summary."""
    cells = [(snr, r) for snr in config.snr_db for r in range(config.realizations)]
    workers = int(os.environ.get(THREAD_ENV_VAR, "1") or "1")
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {cell: pool.submit(_run_one, config, *cell) for cell in cells}
            for cell, fut in futs.items():
                results[cell] = fut.result()
    else:
        for cell in cells:
            results[cell] = _run_one(config, *cell)

    rows = [results[cell][0] for cell in cells]
    header = result_header(config.dims.N)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        _write_csv(fh, header, rows)
    if trace_path is not None:
        trace_rows = [tr for cell in cells for tr in results[cell][1]]
        with open(trace_path, "w", encoding="utf-8", newline="") as fh:
            _write_csv(fh, list(TRACE_FIELDS), trace_rows)
    return aggregate(rows)


def summary_text(summary) -> str:
    buf = io.StringIO()
    buf.write("snr_db  runs  converged  excluded  mean_rate  mean_total_power\n")
    for s in summary:
        buf.write(f"{s['snr_db']:6.1f}  {s['total']:4d}  {s['converged']:9d}  "
                  f"{s['excluded']:8d}  {s['mean_rate']:9.4f}  {s['mean_total_power']:16.4f}\n")
    return buf.getvalue()
