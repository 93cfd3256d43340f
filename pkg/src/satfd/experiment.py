"""Seeded Monte-Carlo campaigns over detection parameter grids.

A campaign runs n_trials independent trials against every cell of a grid
(fault count x fault magnitude x threshold x detection length).  Each
trial draws an initial epoch on the 60 s grid of one orbital period and a
fault permutation from a substream keyed only by (master seed, trial id),
so every grid cell sees the same trial conditions; measurement noise is
keyed by (master seed, trial id, absolute epoch index) so cells that share
epochs share noise too.  Per-cell confusion counts are integer sums over
trials, which makes parallel and serial runs byte-identical.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import edm
from .calibration import MlpPredictor
from .cliques import Clique, list_k_cliques
from .constellation import ConstellationConfig, PositionSet, orbital_period, propagate
from .detector import DetectorParams, detect_faults_from_analyses
from .linkgraph import VisibilityGraph, build_visibility_graph
from .ranging import FaultConfig, measure_ranges
from .seeds import EPOCH_NOISE, TRIAL_SETUP, substream


@dataclass(frozen=True)
class ThresholdSpec:
    """A labeled detection threshold: a fixed value or a trained predictor."""

    label: str
    value: float | MlpPredictor

    @property
    def scalar(self) -> float:
        """Numeric value for reports; NaN for predictor thresholds."""
        return float(self.value) if isinstance(self.value, (int, float)) else math.nan


@dataclass(frozen=True)
class ExperimentGrid:
    fault_counts: tuple[int, ...]
    magnitudes: tuple[float, ...]
    thresholds: tuple[ThresholdSpec, ...]
    dls: tuple[int, ...]

    def __post_init__(self):
        if not (self.fault_counts and self.magnitudes and self.thresholds and self.dls):
            raise ValueError("every grid dimension must be non-empty")

    def cells(self):
        """Row order of the results table."""
        for fc in self.fault_counts:
            for thr in self.thresholds:
                for dl in self.dls:
                    for mag in self.magnitudes:
                        yield fc, mag, thr, dl

    @property
    def n_cells(self) -> int:
        return (
            len(self.fault_counts) * len(self.magnitudes)
            * len(self.thresholds) * len(self.dls)
        )


@dataclass(frozen=True)
class TrialSpec:
    """Conditions of one Monte-Carlo trial."""

    trial_id: int
    t0: float
    fault_set: frozenset[int]
    params: DetectorParams
    sigma_w: float
    magnitude: float


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fn + other.fn,
            self.fp + other.fp, self.tn + other.tn,
        )


@dataclass(frozen=True)
class MetricSet:
    """Confusion metrics; NaN marks an undefined (zero-denominator) value."""

    tpr: float
    fpr: float
    ppv: float
    f1: float
    p4: float


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else math.nan


def compute_metrics(c: ConfusionCounts) -> MetricSet:
    tpr = _ratio(c.tp, c.tp + c.fn)
    fpr = _ratio(c.fp, c.fp + c.tn)
    ppv = _ratio(c.tp, c.tp + c.fp)
    f1 = _ratio(2.0 * ppv * tpr, ppv + tpr) if not (math.isnan(ppv) or math.isnan(tpr)) else math.nan
    p4 = _ratio(4.0 * c.tp * c.tn, 4.0 * c.tp * c.tn + (c.tp + c.tn) * (c.fp + c.fn))
    return MetricSet(tpr=tpr, fpr=fpr, ppv=ppv, f1=f1, p4=p4)


@dataclass(frozen=True)
class CellResult:
    faults: int
    magnitude: float
    threshold: ThresholdSpec
    dl: int
    trials: int
    counts: ConfusionCounts
    metrics: MetricSet


# ---------------------------------------------------------------------------
# Campaign context: everything deterministic shared by all trials.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochData:
    t: float
    graph: VisibilityGraph
    cliques: tuple[Clique, ...]


class CampaignContext:
    """Precomputed epoch grid plus fixed detector settings for one campaign.

    The epoch grid covers one orbital period at the detection timestep,
    extended by (max DL - 1) epochs so any trial window fits.  Trials index
    into this grid; the clique schedule is computed once.
    """

    def __init__(
        self,
        config: ConstellationConfig,
        sigma_w: float,
        grid: ExperimentGrid,
        master_seed: int,
        timestep: float = 60.0,
        k: int = 6,
        delta_nf: int = 10,
        delta_rf: float = 0.2,
    ):
        self.config = config
        self.sigma_w = sigma_w
        self.grid = grid
        self.master_seed = master_seed
        self.timestep = timestep
        self.k = k
        self.delta_nf = delta_nf
        self.delta_rf = delta_rf

        period = orbital_period(config.satellites[0].a, config.body.mu)
        self.n_start_epochs = math.ceil(period / timestep)
        max_dl = max(grid.dls)
        self.epochs: list[EpochData] = []
        self._positions: list[np.ndarray] = []
        for i in range(self.n_start_epochs + max_dl - 1):
            t = timestep * i
            ps = propagate(config, t)
            graph = build_visibility_graph(ps, config.body.radius)
            self.epochs.append(
                EpochData(t=t, graph=graph, cliques=tuple(list_k_cliques(graph, k)))
            )
            self._positions.append(ps.positions)

    @property
    def n_sats(self) -> int:
        return self.config.n_satellites

    def trial_conditions(self, trial_id: int) -> tuple[int, np.ndarray]:
        """(initial epoch index, satellite permutation) for one trial.

        Keyed by (master seed, trial id) only, so they are identical in
        every grid cell; the fault set for a cell with f faults is the
        first f entries of the permutation, making fault sets nested
        across fault-count cells.
        """
        rng = substream(self.master_seed, TRIAL_SETUP, trial_id)
        t0_index = int(rng.integers(self.n_start_epochs))
        return t0_index, rng.permutation(self.n_sats)

    def epoch_analyses(
        self, trial_id: int, t0_index: int, faults: FaultConfig, n_epochs: int
    ) -> list[edm.BatchAnalysis]:
        """Clique analyses for one trial window under one fault condition."""
        out = []
        for offset in range(n_epochs):
            g = t0_index + offset
            ep = self.epochs[g]
            rng = substream(self.master_seed, EPOCH_NOISE, trial_id, g)
            rm = measure_ranges(
                PositionSet(t=ep.t, positions=self._positions[g]),
                ep.graph, faults, self.sigma_w, rng,
            )
            out.append(edm.analyze_clique_batch(rm, ep.cliques))
        return out


def run_trial(ctx: CampaignContext, spec: TrialSpec) -> np.ndarray:
    """Boolean per-satellite classification for one (trial, cell) pair."""
    t0_index = int(round(spec.t0 / ctx.timestep))
    faults = FaultConfig(fault_set=spec.fault_set, magnitude=spec.magnitude)
    batches = ctx.epoch_analyses(spec.trial_id, t0_index, faults, spec.params.di)
    outcome = detect_faults_from_analyses(batches, spec.params, ctx.n_sats)
    classified = np.zeros(ctx.n_sats, dtype=bool)
    classified[list(outcome.fault_list)] = True
    return classified


def _trial_cell_counts(ctx: CampaignContext, trial_id: int) -> np.ndarray:
    """(n_cells, 4) tp/fn/fp/tn contributions of one trial, in cell order."""
    t0_index, perm = ctx.trial_conditions(trial_id)
    max_dl = max(ctx.grid.dls)
    n = ctx.n_sats

    counts = np.zeros((ctx.grid.n_cells, 4), dtype=np.int64)
    cell_index = {cell: i for i, cell in enumerate(ctx.grid.cells())}
    for fc in ctx.grid.fault_counts:
        fault_set = frozenset(int(s) for s in perm[:fc])
        truth = np.zeros(n, dtype=bool)
        truth[list(fault_set)] = True
        for mag in ctx.grid.magnitudes:
            faults = FaultConfig(fault_set=fault_set, magnitude=mag)
            batches = ctx.epoch_analyses(trial_id, t0_index, faults, max_dl)
            for thr in ctx.grid.thresholds:
                for dl in ctx.grid.dls:
                    params = DetectorParams(
                        k=ctx.k, di=dl, delta_nf=ctx.delta_nf,
                        delta_rf=ctx.delta_rf, gamma_threshold=thr.value,
                    )
                    outcome = detect_faults_from_analyses(batches[:dl], params, n)
                    detected = np.zeros(n, dtype=bool)
                    detected[list(outcome.fault_list)] = True
                    row = cell_index[(fc, mag, thr, dl)]
                    counts[row, 0] = int(np.sum(detected & truth))
                    counts[row, 1] = int(np.sum(~detected & truth))
                    counts[row, 2] = int(np.sum(detected & ~truth))
                    counts[row, 3] = int(np.sum(~detected & ~truth))
    return counts


# Module-level worker state: set once per worker process by the pool
# initializer, read by every task.
_WORKER_CTX: CampaignContext | None = None


def _worker_init(ctx: CampaignContext) -> None:
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _worker_chunk(args: tuple[int, int]) -> np.ndarray:
    lo, hi = args
    total = np.zeros((_WORKER_CTX.grid.n_cells, 4), dtype=np.int64)
    for trial_id in range(lo, hi):
        total += _trial_cell_counts(_WORKER_CTX, trial_id)
    return total


def run_campaign(
    ctx: CampaignContext, n_trials: int, workers: int = 1
) -> list[CellResult]:
    """All grid cells x n_trials; returns one result row per cell.

    The aggregation is a sum of per-trial integer count arrays, so the
    result is independent of worker count and scheduling order.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    total = np.zeros((ctx.grid.n_cells, 4), dtype=np.int64)
    if workers <= 1:
        for trial_id in range(n_trials):
            total += _trial_cell_counts(ctx, trial_id)
    else:
        chunk = max(1, math.ceil(n_trials / (workers * 4)))
        spans = [(lo, min(lo + chunk, n_trials)) for lo in range(0, n_trials, chunk)]
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_worker_init, initargs=(ctx,)
        ) as pool:
            for part in pool.map(_worker_chunk, spans):
                total += part

    results = []
    for row, (fc, mag, thr, dl) in enumerate(ctx.grid.cells()):
        c = ConfusionCounts(*[int(v) for v in total[row]])
        results.append(
            CellResult(
                faults=fc, magnitude=mag, threshold=thr, dl=dl,
                trials=n_trials, counts=c, metrics=compute_metrics(c),
            )
        )
    return results


# ---------------------------------------------------------------------------
# Results table I/O.
# ---------------------------------------------------------------------------

RESULT_COLUMNS = [
    "faults", "magnitude_m", "threshold_label", "threshold_value", "dl",
    "trials", "tp", "fn", "fp", "tn", "tpr", "fpr", "ppv", "f1", "p4",
]


def write_results_csv(path: str | Path, results: Sequence[CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in results:
            writer.writerow([
                r.faults, repr(r.magnitude), r.threshold.label,
                repr(r.threshold.scalar), r.dl, r.trials,
                r.counts.tp, r.counts.fn, r.counts.fp, r.counts.tn,
                repr(r.metrics.tpr), repr(r.metrics.fpr), repr(r.metrics.ppv),
                repr(r.metrics.f1), repr(r.metrics.p4),
            ])


def read_results_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_COLUMNS:
            raise ValueError(
                f"results file has columns {reader.fieldnames}, want {RESULT_COLUMNS}"
            )
        return [dict(row) for row in reader]
