"""Geometric and spectral evaluation of simulated traces.

Covers the shape indicator Q and its time average, open-loop RMSE, a
nearest-neighbour shape deviation for skeletons without a closed-form
invariant, bifurcation-diagram point collection (extrema of node averages
and Poincare sections), PCA projection of the internal state, and a
periodogram.  :func:`build_report` bundles the full per-model evaluation
into one record.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional
import warnings

import numpy as np
from scipy.spatial import cKDTree

from .errors import NumericError
from .lyapunov import TangentSettings, autonomous_spectrum, conditional_mle
from .reservoir import effective_radius_post, effective_radius_pre
from .skeleton import Skeleton
from .training import RunTrace, TrainedModel, run_open_loop

__all__ = [
    "AnalysisReport",
    "BifurcationDiagram",
    "ReportSettings",
    "q_index",
    "mean_q",
    "rmse",
    "rmse_per_component",
    "shape_deviation",
    "local_extrema",
    "node_average_extrema",
    "poincare_section",
    "pca_projection",
    "PcaProjection",
    "power_spectrum",
    "cluster_values",
    "classify_metrics",
    "register_q_form",
    "q_form_for",
    "build_report",
    "extrema_bifurcation_points",
    "poincare_bifurcation_points",
]

CLASSIFICATIONS = (
    "supervised-periodic",
    "semi-supervised-chaos",
    "collapsed-chaos",
    "untrained-other",
)


# ---------------------------------------------------------------------------
# shape indicators


def q_index(x, y):
    """|x^4 - x^2 + y^2 / 4|; identically zero on the Lissajous figure-eight."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.abs(x**4 - x**2 + 0.25 * y**2)


_Q_FORMS: dict = {"lissajous": q_index}


def register_q_form(label: str, fn: Callable) -> None:
    """Register a closed-form shape indicator for skeletons with ``label``."""
    _Q_FORMS[label] = fn


def q_form_for(sk: Skeleton) -> Optional[Callable]:
    """The registered two-argument shape indicator for this skeleton, if any."""
    if sk.dim != 2:
        return None
    return _Q_FORMS.get(sk.label)


def mean_q(outputs: np.ndarray, window: int = 2000, q: Callable = q_index) -> float:
    """Average shape indicator over the final ``window`` outputs (2-D only)."""
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim != 2 or outputs.shape[1] != 2:
        raise ValueError(
            f"the Q indicator applies to 2-component outputs, got shape {outputs.shape}"
        )
    if outputs.shape[0] < window:
        raise ValueError(f"trace has {outputs.shape[0]} outputs, need >= {window}")
    tail = outputs[-window:]
    return float(np.mean(q(tail[:, 0], tail[:, 1])))


def rmse(
    pred: np.ndarray,
    target: Skeleton,
    component: int = 0,
    t_eval: Optional[int] = None,
    offset: int = 0,
) -> float:
    """Root mean square error of one output component against the tiled skeleton.

    ``offset`` is the skeleton phase of pred[0] (an open-loop trace records
    it as ``start_step``).
    """
    pred = np.asarray(pred, dtype=float)
    if t_eval is None:
        t_eval = pred.shape[0]
    if pred.shape[0] < t_eval:
        raise ValueError(f"predictions have {pred.shape[0]} rows, need >= {t_eval}")
    if not 0 <= component < target.dim:
        raise ValueError(f"component {component} out of range for dim {target.dim}")
    truth = target.tile(offset + t_eval)[offset:]
    err = pred[:t_eval, component] - truth[:, component]
    return float(np.sqrt(np.mean(err**2)))


def rmse_per_component(
    pred: np.ndarray, target: Skeleton, t_eval: Optional[int] = None, offset: int = 0
) -> np.ndarray:
    return np.array(
        [rmse(pred, target, component=d, t_eval=t_eval, offset=offset) for d in range(target.dim)]
    )


def shape_deviation(outputs: np.ndarray, sk: Skeleton) -> float:
    """Mean distance from each output point to its nearest skeleton sample.

    A generic stand-in for Q when the skeleton has no closed-form
    invariant: zero when the trace sits on the sample set, roughly the
    offset magnitude for a uniformly shifted trace.
    """
    outputs = np.atleast_2d(np.asarray(outputs, dtype=float))
    if outputs.size == 0:
        raise ValueError("empty trace")
    if outputs.shape[1] != sk.dim:
        raise ValueError(f"trace dim {outputs.shape[1]} != skeleton dim {sk.dim}")
    tree = cKDTree(sk.samples)
    dist, _ = tree.query(outputs)
    return float(np.mean(dist))


# ---------------------------------------------------------------------------
# bifurcation-diagram machinery


def local_extrema(series: np.ndarray, return_indices: bool = False):
    """Values at strict local maxima and minima of a scalar series.

    Plateaus are dropped: an extremum requires strict inequality against
    both neighbours, so the detector commutes with time reversal.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size < 3:
        raise ValueError("need a 1-D series with at least 3 entries")
    left = series[:-2]
    mid = series[1:-1]
    right = series[2:]
    is_max = (mid > left) & (mid > right)
    is_min = (mid < left) & (mid < right)
    idx = np.nonzero(is_max | is_min)[0] + 1
    if return_indices:
        return idx, series[idx]
    return series[idx]


def node_average_extrema(states: np.ndarray) -> np.ndarray:
    """Extrema of the node average (1/N) sum_i x_i[k] over a state trace."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] < 3:
        raise ValueError("need a (T, N) state trace with T >= 3")
    return local_extrema(states.mean(axis=1))


def poincare_section(
    states: np.ndarray,
    w_out: np.ndarray,
    axis: int = 1,
    level: float = 0.0,
    node: int = 0,
    return_indices: bool = False,
):
    """Monitored-node values where an output component crosses a level upward.

    A crossing is counted when z[k] < level <= z[k+1] (fixed
    negative-to-positive direction); the node value is linearly
    interpolated between the bracketing steps.
    """
    states = np.asarray(states, dtype=float)
    w_out = np.asarray(w_out, dtype=float)
    z = states @ w_out
    if not 0 <= axis < z.shape[1]:
        raise ValueError(f"axis {axis} out of range for {z.shape[1]} outputs")
    if not 0 <= node < states.shape[1]:
        raise ValueError(f"node {node} out of range for {states.shape[1]} nodes")
    s = z[:, axis] - level
    hits = np.nonzero((s[:-1] < 0.0) & (s[1:] >= 0.0))[0]
    frac = -s[hits] / (s[hits + 1] - s[hits])
    values = states[hits, node] + frac * (states[hits + 1, node] - states[hits, node])
    if return_indices:
        return hits, values
    return values


@dataclass
class BifurcationDiagram:
    """Scatter data for a bifurcation diagram.

    points: (n, 2) array of (parameter, value).
    phase: per-point "transient" or "settled" marker.
    source: which monitored quantity produced the values.
    transient_split: step index separating the two phases.
    """

    points: np.ndarray
    phase: np.ndarray
    source: str  # node-average-extrema | poincare-section | output-extrema
    transient_split: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.phase = np.asarray(self.phase, dtype=object).reshape(-1)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("bifurcation points must be finite")
        if self.points.shape[0] != self.phase.shape[0]:
            raise ValueError("points and phase lengths differ")


def _phase_labels(indices: np.ndarray, transient_split: int) -> np.ndarray:
    return np.where(indices < transient_split, "transient", "settled").astype(object)


def extrema_bifurcation_points(
    param: float, series: np.ndarray, transient_split: int, start: int = 0
):
    """(param, extremum, phase) rows from a scalar series; ``start`` skips
    early steps entirely (e.g. keep only the settled window)."""
    series = np.asarray(series, dtype=float)
    idx, values = local_extrema(series[start:], return_indices=True)
    idx = idx + start
    rows = np.column_stack([np.full(len(idx), float(param)), values])
    return rows, _phase_labels(idx, transient_split)


def poincare_bifurcation_points(
    param: float,
    states: np.ndarray,
    w_out: np.ndarray,
    transient_split: int,
    axis: int = 1,
    level: float = 0.0,
    node: int = 0,
    start: int = 0,
):
    idx, values = poincare_section(
        states[start:], w_out, axis=axis, level=level, node=node, return_indices=True
    )
    idx = idx + start
    rows = np.column_stack([np.full(len(idx), float(param)), values])
    return rows, _phase_labels(idx, transient_split)


def cluster_values(values: np.ndarray, tol: float) -> np.ndarray:
    """Centres of 1-D clusters separated by gaps larger than ``tol``.

    Used to count branches in bifurcation diagrams (a period-p orbit puts
    its section values in p clusters).
    """
    values = np.sort(np.asarray(values, dtype=float))
    if values.size == 0:
        return values
    splits = np.nonzero(np.diff(values) > tol)[0] + 1
    return np.array([chunk.mean() for chunk in np.split(values, splits)])


# ---------------------------------------------------------------------------
# PCA and spectra


@dataclass
class PcaProjection:
    coords: np.ndarray  # (T, k)
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    rank: int


def pca_projection(states: np.ndarray, k: int = 2) -> PcaProjection:
    """Project a state trace onto its top-k principal directions.

    States are mean-centred first.  A RuntimeWarning is emitted when the
    covariance rank is below k (the trailing coordinates are then
    degenerate).
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] < k:
        raise ValueError(f"need at least k={k} states, got shape {states.shape}")
    centred = states - states.mean(axis=0)
    u, s, _ = np.linalg.svd(centred, full_matrices=False)
    var = s**2 / max(states.shape[0] - 1, 1)
    total = float(var.sum())
    ratio = var / total if total > 0.0 else np.zeros_like(var)
    tol = s.max(initial=0.0) * max(states.shape) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    if rank < k:
        warnings.warn(
            f"state covariance has rank {rank} < k={k}; projection is degenerate",
            RuntimeWarning,
            stacklevel=2,
        )
    coords = u[:, :k] * s[:k]
    return PcaProjection(
        coords=coords,
        explained_variance=var[:k],
        explained_variance_ratio=ratio[:k],
        rank=rank,
    )


def power_spectrum(series: np.ndarray):
    """One-sided periodogram of a mean-removed series.

    Returns (frequencies in cycles/step, power per bin).  Normalised so the
    powers sum to the series variance (Parseval).
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size < 64:
        raise ValueError(f"need a 1-D series of length >= 64, got shape {series.shape}")
    n = series.size
    demeaned = series - series.mean()
    spec = np.fft.rfft(demeaned)
    power = np.abs(spec) ** 2 / n**2
    power[1:] *= 2.0
    if n % 2 == 0:
        power[-1] /= 2.0  # Nyquist bin is not duplicated
    freqs = np.fft.rfftfreq(n, d=1.0)
    return freqs, power


# ---------------------------------------------------------------------------
# full per-model evaluation


def classify_metrics(mle: float, shape_value: float, shape_threshold: float,
                     mle_tol: float) -> str:
    """Four-way label from the leading exponent and a shape criterion."""
    shape_ok = shape_value < shape_threshold
    if abs(mle) <= mle_tol and shape_ok:
        return "supervised-periodic"
    if mle > mle_tol and shape_ok:
        return "semi-supervised-chaos"
    if mle > mle_tol and not shape_ok:
        return "collapsed-chaos"
    return "untrained-other"


@dataclass(frozen=True)
class ReportSettings:
    """Trajectory lengths, windows, and thresholds for one full evaluation."""

    mle: TangentSettings = TangentSettings(steps=10_000, transient=2_000)
    cle: TangentSettings = TangentSettings(steps=10_000, transient=2_000)
    rmse_steps: int = 10_000
    q_window: int = 2_000
    q_threshold: float = 1e-2
    shape_threshold: float = 5e-2
    mle_periodic_tol: float = 1e-3
    include_cle: bool = True


@dataclass
class AnalysisReport:
    """Per-spectral-scale evaluation of a trained model."""

    rho: float
    cle: Optional[float]
    mle: float
    spectrum: list
    steps_used: int
    rmse_per_component: list
    mean_q: Optional[float]
    shape_dev: float
    classification: str
    eff_radius_pre: float
    eff_radius_post: float

    def shape_value(self, q_threshold: float, shape_threshold: float):
        """(criterion value, threshold) pair: Q when available, else deviation."""
        if self.mean_q is not None:
            return self.mean_q, q_threshold
        return self.shape_dev, shape_threshold

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "cle": self.cle,
            "mle": self.mle,
            "spectrum": list(self.spectrum),
            "steps_used": self.steps_used,
            "rmse_per_component": list(self.rmse_per_component),
            "mean_q": self.mean_q,
            "shape_dev": self.shape_dev,
            "classification": self.classification,
            "eff_radius_pre": self.eff_radius_pre,
            "eff_radius_post": self.eff_radius_post,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisReport":
        return cls(**data)


def build_report(
    model: TrainedModel,
    sk: Skeleton,
    settings: ReportSettings = ReportSettings(),
):
    """Evaluate a trained model against its skeleton.

    Runs the closed loop once (collecting states and exponents in the same
    pass), an open-loop prediction for the RMSE, and optionally the driven
    CLE.  The shape criteria are evaluated over the final ``q_window``
    closed-loop outputs.  Returns ``(report, closed-loop RunTrace)``.
    """
    res = model.reservoir
    mle_result, states = autonomous_spectrum(model, settings.mle, collect_states=True)
    if not np.all(np.isfinite(states)):
        raise NumericError("closed-loop run produced non-finite states")
    outputs = states @ model.w_out
    trace = RunTrace(states=states, outputs=outputs, mode="closed-loop")

    open_trace = run_open_loop(model, sk, settings.rmse_steps)
    rmse_vec = rmse_per_component(
        open_trace.outputs, sk, offset=open_trace.start_step
    )

    tail = outputs[-settings.q_window :]
    q_fn = q_form_for(sk)
    q_value = (
        mean_q(outputs, window=settings.q_window, q=q_fn) if q_fn is not None else None
    )
    deviation = shape_deviation(tail, sk)

    cle_value = None
    if settings.include_cle:
        cle_value = conditional_mle(res, sk, settings.cle).mle

    shape_val = q_value if q_value is not None else deviation
    shape_thr = settings.q_threshold if q_value is not None else settings.shape_threshold
    report = AnalysisReport(
        rho=res.spec.spectral_scale,
        cle=cle_value,
        mle=mle_result.mle,
        spectrum=[float(v) for v in mle_result.exponents],
        steps_used=mle_result.steps_used,
        rmse_per_component=[float(v) for v in rmse_vec],
        mean_q=q_value,
        shape_dev=deviation,
        classification=classify_metrics(
            mle_result.mle, shape_val, shape_thr, settings.mle_periodic_tol
        ),
        eff_radius_pre=effective_radius_pre(res),
        eff_radius_post=effective_radius_post(res, model.w_hat),
    )
    return report, trace
