"""Locating supervised and semi-supervised spectral scales.

The procedure: bracket the edge of chaos of the *driven* reservoir (the
spectral scale where the conditional exponent changes sign), find the
largest spectral scale below it where training reconstructs the skeleton
as a stable periodic orbit, then sweep the interval in between (and a
little beyond the edge) classifying every grid point.  Points that are
chaotic yet still hug the skeleton are the semi-supervised candidates.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .analysis import AnalysisReport, ReportSettings, build_report, classify_metrics
from .errors import BracketError, NumericError
from .lyapunov import TangentSettings, conditional_mle
from .reservoir import Reservoir, ReservoirSpec, build_reservoir
from .skeleton import Skeleton
from .training import TrainingConfig, train

__all__ = [
    "SearchConfig",
    "SearchResult",
    "find_edge",
    "find_edge_from_cle",
    "find_supervised",
    "scan_interval",
    "classify",
    "run_search",
    "reservoir_builder",
    "save_search_result",
]


@dataclass(frozen=True)
class SearchConfig:
    """Bracket, grid resolution, acceptance thresholds, and seeds."""

    rho_lo: float
    rho_hi: float
    grid_step: float = 5e-4
    q_threshold: float = 1e-2
    rmse_threshold: float = 1e-2
    mle_periodic_tol: float = 1e-3
    shape_threshold: float = 5e-2
    max_bisections: int = 20
    seeds: Tuple[int, ...] = (1,)
    prescan_points: int = 16
    extend_beyond: int = 10
    fine_window: int = 40

    def __post_init__(self):
        if not self.rho_lo < self.rho_hi:
            raise ValueError(f"need rho_lo < rho_hi, got [{self.rho_lo}, {self.rho_hi}]")
        for name in ("grid_step", "q_threshold", "rmse_threshold",
                     "mle_periodic_tol", "shape_threshold"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.prescan_points < 2:
            raise ValueError("prescan_points must be at least 2")
        if self.extend_beyond < 0:
            raise ValueError("extend_beyond must be nonnegative")
        if self.fine_window < 0:
            raise ValueError("fine_window must be nonnegative")


@dataclass
class SearchResult:
    """Outcome of one full search at a fixed seed."""

    rho_edge: float
    rho_supervised: Optional[float]
    candidates: List[AnalysisReport]
    full_scan: List[AnalysisReport]
    failures: List[Tuple[float, str]]

    def to_dict(self) -> dict:
        return {
            "rho_edge": self.rho_edge,
            "rho_supervised": self.rho_supervised,
            "candidates": [r.to_dict() for r in self.candidates],
            "full_scan": [r.to_dict() for r in self.full_scan],
            "failures": [[rho, msg] for rho, msg in self.failures],
        }


def reservoir_builder(spec: ReservoirSpec) -> Callable[[float], Reservoir]:
    """rho -> Reservoir with shared matrices; the random draw happens once."""
    base = build_reservoir(spec)
    return lambda rho: base.with_spectral_scale(rho)


def classify(report: AnalysisReport, cfg: SearchConfig) -> str:
    """Re-derive the four-way label from a report under these thresholds."""
    value, threshold = report.shape_value(cfg.q_threshold, cfg.shape_threshold)
    return classify_metrics(report.mle, value, threshold, cfg.mle_periodic_tol)


def find_edge_from_cle(cle_fn: Callable[[float], float], cfg: SearchConfig) -> float:
    """Bisection on the sign of a conditional-exponent function.

    A coarse pre-scan locates the outermost sign change (the exponent need
    not be monotone near the edge), then bisection refines it to the grid
    resolution.  Returns the largest evaluated spectral scale with a
    negative exponent.
    """
    rhos = np.linspace(cfg.rho_lo, cfg.rho_hi, cfg.prescan_points)
    values = [cle_fn(float(r)) for r in rhos]
    if values[0] >= 0.0 or values[-1] <= 0.0:
        raise BracketError(
            f"no sign change in [{cfg.rho_lo}, {cfg.rho_hi}]: "
            f"CLE({cfg.rho_lo})={values[0]:.4g}, CLE({cfg.rho_hi})={values[-1]:.4g}; "
            "widen the bracket",
            cle_lo=values[0],
            cle_hi=values[-1],
        )
    hi_idx = max(
        i for i in range(len(rhos) - 1) if values[i] < 0.0 <= values[i + 1]
    )
    lo, hi = float(rhos[hi_idx]), float(rhos[hi_idx + 1])
    for _ in range(cfg.max_bisections):
        if hi - lo <= cfg.grid_step:
            break
        mid = 0.5 * (lo + hi)
        if cle_fn(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def find_edge(
    builder: Callable[[float], Reservoir],
    sk: Skeleton,
    cfg: SearchConfig,
    settings: TangentSettings = TangentSettings(),
) -> float:
    """Edge of chaos of the driven reservoir, to grid resolution."""
    cache: dict = {}

    def cle(rho: float) -> float:
        if rho not in cache:
            cache[rho] = conditional_mle(builder(rho), sk, settings).mle
        return cache[rho]

    return find_edge_from_cle(cle, cfg)


def _passes_supervised(report: AnalysisReport, cfg: SearchConfig, stable_ok: bool) -> bool:
    if report.rmse_per_component[0] >= cfg.rmse_threshold:
        return False
    value, threshold = report.shape_value(cfg.q_threshold, cfg.shape_threshold)
    if value >= threshold:
        return False
    if stable_ok:
        return report.mle <= cfg.mle_periodic_tol
    return abs(report.mle) <= cfg.mle_periodic_tol


def find_supervised(
    builder: Callable[[float], Reservoir],
    sk: Skeleton,
    cfg: SearchConfig,
    rho_edge: float,
    train_cfg: TrainingConfig = TrainingConfig(),
    settings: ReportSettings = ReportSettings(),
) -> Optional[float]:
    """Largest spectral scale below the edge that reconstructs the skeleton.

    Acceptance requires open-loop RMSE (first component) below threshold, a
    near-zero leading exponent, and the shape criterion under threshold.
    The ladder first walks down from the edge at grid resolution for up to
    ``fine_window`` points, because the periodic windows of interest sit
    directly below the edge and are narrow; the first success there *is*
    the largest acceptable point on the grid.  If that fails, a coarse
    downward ladder locates some success and a bisection pushes it upward
    as far as the grid allows.  Returns None when nothing is found (the
    caller should change the fixed reservoir setting).

    A constant skeleton is degenerate (any stable reservoir reproduces it);
    it is accepted trivially, with a warning, under a relaxed exponent rule
    that allows contraction.
    """
    degenerate = bool(np.allclose(sk.samples, sk.samples[0]))
    if degenerate:
        warnings.warn(
            "constant skeleton: supervised acceptance is trivial for any "
            "stable spectral scale",
            RuntimeWarning,
            stacklevel=2,
        )
    evaluated: dict = {}

    def ok(rho: float) -> bool:
        rho = round(float(rho), 12)
        if rho not in evaluated:
            try:
                model = train(builder(rho), sk, train_cfg)
                report, _ = build_report(model, sk, settings)
                evaluated[rho] = _passes_supervised(report, cfg, stable_ok=degenerate)
            except NumericError:
                evaluated[rho] = False
        return evaluated[rho]

    # fine descent: the first success is the largest grid point accepted
    for k in range(1, cfg.fine_window + 1):
        rho = rho_edge - k * cfg.grid_step
        if rho <= cfg.rho_lo:
            break
        if ok(rho):
            return round(rho, 12)

    # coarse fallback ladder over the rest of the bracket
    coarse = max(cfg.grid_step, (cfg.rho_hi - cfg.rho_lo) / cfg.prescan_points)
    rho = rho_edge - cfg.fine_window * cfg.grid_step - coarse
    found = None
    while rho > cfg.rho_lo - 1e-12:
        if ok(rho):
            found = rho
            break
        rho -= coarse
    if found is None:
        return None

    # push the accepted point toward the edge at grid resolution
    lo, hi = found, min(found + coarse, rho_edge)
    while hi - lo > cfg.grid_step:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return round(lo, 12)


def scan_interval(
    builder: Callable[[float], Reservoir],
    sk: Skeleton,
    cfg: SearchConfig,
    rho_supervised: float,
    rho_edge: float,
    train_cfg: TrainingConfig = TrainingConfig(),
    settings: ReportSettings = ReportSettings(),
) -> SearchResult:
    """Train and classify at every grid point in [rho_supervised, beyond-edge].

    The sweep extends ``extend_beyond`` grid steps past the edge, since
    shape-respecting chaos also occurs slightly above it.  Per-point
    numeric failures are recorded and the scan continues.
    """
    if rho_supervised > rho_edge:
        raise ValueError(
            f"rho_supervised={rho_supervised} must not exceed rho_edge={rho_edge}"
        )
    n_steps = int(round((rho_edge - rho_supervised) / cfg.grid_step))
    grid = rho_supervised + cfg.grid_step * np.arange(n_steps + 1 + cfg.extend_beyond)
    reports: List[AnalysisReport] = []
    failures: List[Tuple[float, str]] = []
    for rho in grid:
        rho = float(round(rho, 12))
        try:
            model = train(builder(rho), sk, train_cfg)
            report, _ = build_report(model, sk, settings)
        except NumericError as exc:
            failures.append((rho, str(exc)))
            continue
        report.classification = classify(report, cfg)
        reports.append(report)
    candidates = [r for r in reports if r.classification == "semi-supervised-chaos"]
    return SearchResult(
        rho_edge=rho_edge,
        rho_supervised=rho_supervised,
        candidates=candidates,
        full_scan=reports,
        failures=failures,
    )


def run_search(
    spec: ReservoirSpec,
    sk: Skeleton,
    cfg: SearchConfig,
    train_cfg: TrainingConfig = TrainingConfig(),
    settings: ReportSettings = ReportSettings(),
    edge_settings: Optional[TangentSettings] = None,
) -> SearchResult:
    """Full pipeline for one seed: edge, supervised point, interval scan.

    The reservoir seed comes from ``spec.seed``; sweeping seeds means
    calling this once per seed.  When no supervised point exists the scan
    is skipped and the result carries an empty grid.
    """
    builder = reservoir_builder(spec)
    if edge_settings is None:
        edge_settings = settings.cle
    rho_edge = find_edge(builder, sk, cfg, edge_settings)
    rho_sup = find_supervised(builder, sk, cfg, rho_edge, train_cfg, settings)
    if rho_sup is None:
        return SearchResult(
            rho_edge=rho_edge,
            rho_supervised=None,
            candidates=[],
            full_scan=[],
            failures=[],
        )
    return scan_interval(builder, sk, cfg, rho_sup, rho_edge, train_cfg, settings)


def save_search_result(result: SearchResult, json_path, csv_path=None) -> None:
    """JSON dump plus an optional per-point CSV summary."""
    with open(json_path, "w") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if csv_path is None:
        return
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "cle", "mle", "mean_q", "shape_dev", "classification"])
        for r in result.full_scan:
            writer.writerow(
                [
                    format(r.rho, ".10g"),
                    "" if r.cle is None else format(r.cle, ".10g"),
                    format(r.mle, ".10g"),
                    "" if r.mean_q is None else format(r.mean_q, ".10g"),
                    format(r.shape_dev, ".10g"),
                    r.classification,
                ]
            )
