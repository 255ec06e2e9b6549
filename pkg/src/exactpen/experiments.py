"""Synthetic low-rank plus sparse benchmark: generation, trials and CSV output.

Random streams come from numpy's counter-based Philox bit generator keyed by
``SeedSequence(seed, spawn_key=(trial,))``; normals use numpy's ziggurat
sampler.  A given ``(seed, trial)`` therefore yields the same matrices on
every platform and regardless of which other trials run.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionMismatch, DomainError
from .matrix_surrogates import spectral_norm
from .scalar_phi import PhiSpec, make_phi
from .solver import (DecompositionInstance, Schedule, SolverOptions, default_schedule,
                     gep_mscra)

logger = logging.getLogger(__name__)

CSV_HEADER = ["trial", "n", "r", "rho_s", "sigma", "rms_x", "rms_y", "rank_hat",
              "sparsity_hat", "true_rank", "true_sparsity", "outer_iters", "wall_time_s",
              "status"]
SPARSE_RANGE = 5.0
BOX_FALLBACK = 10.0


@dataclass
class ExperimentConfig:
    n: int
    r: int
    rho_s: float
    sigma: float
    trials: int = 10
    seed: int = 0
    phi: PhiSpec = field(default_factory=lambda: make_phi("Scad"))
    output_path: Optional[str] = None
    sigma_n_override: Optional[float] = None
    schedule: Optional[dict] = None
    options: Optional[dict] = None

    def __post_init__(self):
        if self.n < 1 or self.r < 0 or self.r > self.n:
            raise DomainError("need n >= 1 and 0 <= r <= n")
        if not 0.0 <= self.rho_s <= 1.0:
            raise DomainError("rho_s must lie in [0, 1]")
        if self.sigma < 0 or self.trials < 1:
            raise DomainError("need sigma >= 0 and trials >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.sigma_n_override is not None and self.sigma_n_override < 0:
            raise DomainError("sigma_n_override must be nonnegative")
        if isinstance(self.phi, dict):
            self.phi = PhiSpec.from_json(self.phi)

    @property
    def sigma_n(self) -> float:
        """Standard deviation of the factor entries, ``sqrt(10 sigma / sqrt(n))``."""
        if self.sigma_n_override is not None:
            return float(self.sigma_n_override)
        return math.sqrt(10.0 * self.sigma / math.sqrt(self.n))

    def to_json(self) -> dict:
        out = asdict(self)
        out["phi"] = self.phi.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown config fields {sorted(unknown)}")
        return cls(**obj)


class TrialRecord(NamedTuple):
    trial_index: int
    rms_x: float
    rms_y: float
    rank_hat: int
    sparsity_hat: int
    true_rank: int
    true_sparsity: int
    outer_iters: int
    wall_time_seconds: float
    status: str = "ok"


class GeneratedInstance(NamedTuple):
    M: np.ndarray
    M_R: np.ndarray
    M_S: np.ndarray
    R: np.ndarray
    L: np.ndarray


class BoxRadii(NamedTuple):
    gamma1: float
    gamma2: float
    flags: tuple


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


def generate_instance_full(config: ExperimentConfig, trial: int) -> GeneratedInstance:
    n, r = config.n, config.r
    rng = trial_rng(config.seed, trial)
    sn = config.sigma_n
    R = rng.standard_normal((n, r)) * sn
    L = rng.standard_normal((n, r)) * sn
    M_R = R @ L.T
    mask = rng.random((n, n)) < config.rho_s
    values = rng.uniform(-SPARSE_RANGE, SPARSE_RANGE, size=(n, n))
    M_S = np.where(mask, values, 0.0)
    M_0 = rng.standard_normal((n, n)) * config.sigma
    return GeneratedInstance(M_R + M_S + M_0, M_R, M_S, R, L)


def generate_instance(config: ExperimentConfig, trial: int):
    """``(M, M_R, M_S)`` for one trial; deterministic in ``(config.seed, trial)``."""
    g = generate_instance_full(config, trial)
    return g.M, g.M_R, g.M_S


def box_radii(M_R, M_S) -> BoxRadii:
    """``(10 ||M_R||, 10 ||M_S||_inf)``; a zero norm is replaced by 10 and flagged."""
    g1 = 10.0 * spectral_norm(M_R)
    g2 = 10.0 * float(np.max(np.abs(M_S))) if np.size(M_S) else 0.0
    flags = []
    if g1 == 0.0:
        g1 = BOX_FALLBACK
        flags.append("gamma1_fallback")
    if g2 == 0.0:
        g2 = BOX_FALLBACK
        flags.append("gamma2_fallback")
    return BoxRadii(g1, g2, tuple(flags))


def rms_errors(X_hat, Y_hat, M_R, M_S, n: Optional[int] = None):
    """``(||X_hat - M_R||_F / n, ||Y_hat - M_S||_F / n)``."""
    X_hat, Y_hat = np.asarray(X_hat), np.asarray(Y_hat)
    M_R, M_S = np.asarray(M_R), np.asarray(M_S)
    if not (X_hat.shape == M_R.shape == Y_hat.shape == M_S.shape):
        raise DimensionMismatch("all four matrices must share one shape")
    n = n if n is not None else M_R.shape[0]
    return float(np.linalg.norm(X_hat - M_R) / n), float(np.linalg.norm(Y_hat - M_S) / n)


def _solver_setup(config: ExperimentConfig):
    sched = Schedule.from_json(config.schedule, n=config.n) if config.schedule \
        else default_schedule(config.n)
    opts = SolverOptions(**config.options) if config.options else SolverOptions()
    return sched, opts


def run_trial(config: ExperimentConfig, trial: int, return_report: bool = False):
    """Generate, solve and score one trial.  Solver errors become a failed record."""
    gen = generate_instance_full(config, trial)
    true_rank = int(np.linalg.matrix_rank(gen.M_R)) if config.r else 0
    true_sparsity = int(np.count_nonzero(gen.M_S))
    radii = box_radii(gen.M_R, gen.M_S)
    sched, opts = _solver_setup(config)
    try:
        inst = DecompositionInstance(gen.M, radii.gamma1, radii.gamma2)
        report = gep_mscra(inst, config.phi, sched, opts)
    except Exception as exc:  # recorded per trial, excluded from averages
        logger.warning("trial %d failed: %s", trial, exc)
        rec = TrialRecord(trial, math.nan, math.nan, -1, -1, true_rank, true_sparsity, 0,
                          0.0, f"failed:{type(exc).__name__}")
        return (rec, None) if return_report else rec
    rms_x, rms_y = rms_errors(report.X_hat, report.Y_hat, gen.M_R, gen.M_S, config.n)
    status = ";".join(list(radii.flags) + report.flags) or "ok"
    rec = TrialRecord(trial, rms_x, rms_y, report.final_rank, report.final_sparsity,
                      true_rank, true_sparsity, report.outer_iters,
                      report.wall_time_seconds, status)
    return (rec, report) if return_report else rec


def average_record(records) -> dict:
    good = [r for r in records if not r.status.startswith("failed")]
    if not good:
        return {}
    keys = ("rms_x", "rms_y", "rank_hat", "sparsity_hat", "true_rank", "true_sparsity",
            "outer_iters", "wall_time_seconds")
    return {k: float(np.mean([getattr(r, k) for r in good])) for k in keys}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(config: ExperimentConfig, records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(records, key=lambda r: r.trial_index):
        w.writerow([_fmt(v) for v in (
            r.trial_index, config.n, config.r, config.rho_s, config.sigma, r.rms_x, r.rms_y,
            r.rank_hat, r.sparsity_hat, r.true_rank, r.true_sparsity, r.outer_iters,
            r.wall_time_seconds, r.status)])
    avg = average_record(records)
    if avg:
        n_ok = sum(not r.status.startswith("failed") for r in records)
        w.writerow([_fmt(v) for v in (
            "mean", config.n, config.r, config.rho_s, config.sigma, avg["rms_x"], avg["rms_y"],
            avg["rank_hat"], avg["sparsity_hat"], avg["true_rank"], avg["true_sparsity"],
            avg["outer_iters"], avg["wall_time_seconds"], f"ok={n_ok}/{len(records)}")])
    return buf.getvalue()


def run_trials(config: ExperimentConfig, workers: int = 1) -> list:
    """Run every trial and, if ``config.output_path`` is set, write the CSV there.

    With ``workers > 1`` trials run in separate processes; rows are still
    written in trial order.
    """
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(run_trial, [config] * config.trials, range(config.trials)))
    else:
        records = [run_trial(config, t) for t in range(config.trials)]
    for rec in records:
        logger.info("trial %d: rank %d rms_x %.4g rms_y %.4g (%s)", rec.trial_index,
                    rec.rank_hat, rec.rms_x, rec.rms_y, rec.status)
    if config.output_path:
        parent = os.path.dirname(os.path.abspath(config.output_path))
        os.makedirs(parent, exist_ok=True)
        with open(config.output_path, "w", newline="") as fh:
            fh.write(records_to_csv(config, records))
    return records
