"""Periodic teacher signals ("skeletons") that define a target shape.

A skeleton is a finite sequence of D-vectors meant to be tiled
periodically while driving a reservoir.  Analytic generators (Lissajous,
unit circle, Van der Pol, a periodic orbit of the Rossler flow) and a CSV
loader for hand-drawn closed curves are provided.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CsvParseError, NumericError

__all__ = [
    "Skeleton",
    "lissajous",
    "unit_circle",
    "van_der_pol",
    "rossler_cycle",
    "rossler_deriv",
    "load_csv",
    "save_skeleton",
    "load_skeleton",
]


@dataclass(frozen=True)
class Skeleton:
    """A periodic teacher series.

    samples: (T, D) float array, one row per step.
    period_steps: discrete period when one is known exactly, else None
        (e.g. flows sampled at a step that does not divide their period).
    label: short free-text name, also used to look up shape indicators.
    """

    samples: np.ndarray
    period_steps: Optional[int]
    label: str = ""

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if samples.size == 0:
            raise ValueError("skeleton needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("skeleton samples must be finite")
        if self.period_steps is not None and self.period_steps < 1:
            raise ValueError(f"period_steps must be positive, got {self.period_steps}")
        object.__setattr__(self, "samples", samples)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]

    def tile(self, steps: int) -> np.ndarray:
        """First ``steps`` samples of the periodic extension."""
        if steps < 1:
            raise ValueError(f"steps must be positive, got {steps}")
        reps = -(-steps // len(self))  # ceil division
        return np.tile(self.samples, (reps, 1))[:steps]


def lissajous(steps: int) -> Skeleton:
    """Figure-eight curve u_k = [cos(pi k / 50), sin(pi k / 25)], period 100."""
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    k = np.arange(steps)
    samples = np.column_stack([np.cos(np.pi * k / 50.0), np.sin(np.pi * k / 25.0)])
    return Skeleton(samples, period_steps=100, label="lissajous")


def unit_circle(steps: int, period: int = 100) -> Skeleton:
    """u_k = [cos(2 pi k / period), sin(2 pi k / period)]."""
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    if period < 2:
        raise ValueError(f"period must be at least 2, got {period}")
    k = np.arange(steps)
    phase = 2.0 * np.pi * k / period
    return Skeleton(
        np.column_stack([np.cos(phase), np.sin(phase)]),
        period_steps=period,
        label="unit-circle",
    )


def _rk4(deriv, state: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """Fixed-step 4th-order Runge-Kutta; returns the (steps, dim) trajectory
    of states *after* each step."""
    out = np.empty((steps, state.size))
    y = np.array(state, dtype=float)
    for i in range(steps):
        k1 = deriv(y)
        k2 = deriv(y + 0.5 * dt * k1)
        k3 = deriv(y + 0.5 * dt * k2)
        k4 = deriv(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericError(f"integration diverged at step {i}")
        out[i] = y
    return out


def van_der_pol(mu: float = 1.0, dt: float = 0.1, steps: int = 1000) -> Skeleton:
    """Sampled Van der Pol oscillator x'' - mu (1 - x^2) x' + x = 0.

    Integrates the (x, x') system with fixed-step RK4, discards a transient
    spanning 100 time units so the orbit settles on the limit cycle, then
    returns every step.  The sampling step generally does not divide the
    cycle period, so the discrete series is quasi-periodic and
    ``period_steps`` is left unknown.
    """
    if mu < 0.0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")

    def deriv(s):
        x, v = s
        return np.array([v, mu * (1.0 - x * x) * v - x])

    transient = int(round(100.0 / dt))
    traj = _rk4(deriv, np.array([2.0, 0.0]), dt, transient + steps)
    return Skeleton(traj[transient:], period_steps=None, label="van-der-pol")


def rossler_deriv(state: np.ndarray, c: float = 3.0, literal_xy: bool = False) -> np.ndarray:
    """Right-hand side of the Rossler flow with a = b = 0.2.

    The standard third equation is z' = 0.2 + x z - c z; ``literal_xy``
    switches to the x y variant for comparison runs.
    """
    x, y, z = state
    dz = 0.2 + (x * y if literal_xy else x * z) - c * z
    return np.array([-y - z, x + 0.2 * y, dz])


def rossler_cycle(
    c: float = 3.0,
    dt: float = 0.2,
    steps: int = 1000,
    literal_xy: bool = False,
) -> Skeleton:
    """One periodic orbit of the Rossler flow, sampled as a closed loop.

    Integrates with fixed-step RK4 on a fine internal grid, discards a
    500-time-unit transient, detects the orbit period from Poincare
    returns through the y = 0 plane, and resamples one cycle onto
    round(period / dt) uniform time points so the discrete series closes
    exactly.  The result is tiled out to ``steps`` samples.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")

    dt_int = dt / 16.0
    transient = int(round(500.0 / dt_int))
    budget = transient + int(round(400.0 / dt_int))
    traj = _rk4(
        lambda s: rossler_deriv(s, c=c, literal_xy=literal_xy),
        np.array([4.0, 0.0, 0.0]),
        dt_int,
        budget,
    )
    settled = traj[transient:]

    # upward crossings of y = 0, located by linear interpolation
    y = settled[:, 1]
    idx = np.nonzero((y[:-1] < 0.0) & (y[1:] >= 0.0))[0]
    if len(idx) < 3:
        raise NumericError("no periodic orbit detected: too few section returns")
    frac = -y[idx] / (y[idx + 1] - y[idx])
    cross_t = (idx + frac) * dt_int
    cross_state = settled[idx] + frac[:, None] * (settled[idx + 1] - settled[idx])

    # smallest number of returns after which the section state recurs
    scale = float(np.max(np.abs(cross_state)))
    period_t = None
    for k in range(1, len(idx) - 1):
        if np.linalg.norm(cross_state[k] - cross_state[0]) < 1e-3 * scale:
            period_t = cross_t[k] - cross_t[0]
            break
    if period_t is None:
        raise NumericError("no periodic orbit detected: section state never recurs")

    n_per = max(int(round(period_t / dt)), 2)
    t_cycle = cross_t[0] + period_t * np.arange(n_per) / n_per
    cycle = np.empty((n_per, 3))
    t_grid = np.arange(len(settled)) * dt_int
    for j in range(3):
        cycle[:, j] = np.interp(t_cycle, t_grid, settled[:, j])

    sk = Skeleton(cycle, period_steps=n_per, label="rossler")
    return Skeleton(sk.tile(steps), period_steps=n_per, label="rossler")


def _resample_polyline(points: np.ndarray, n: int, closed: bool) -> np.ndarray:
    """Uniform arc-length resampling of a polyline.

    Closed curves are sampled at n points with spacing L/n starting from
    the first vertex; open curves keep both endpoints with spacing L/(n-1).
    """
    if closed:
        verts = np.vstack([points, points[:1]])
    else:
        verts = points
    seg = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    total = float(seg.sum())
    if total <= 0.0:
        raise ValueError("curve has zero length")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if closed:
        s = total * np.arange(n) / n
    else:
        s = total * np.arange(n) / (n - 1)
    out = np.empty((n, points.shape[1]))
    for j in range(points.shape[1]):
        out[:, j] = np.interp(s, cum, verts[:, j])
    return out


def load_csv(path, resample_to: int = 400, close_curve: bool = False) -> Skeleton:
    """Load a closed curve from CSV and resample it by uniform arc length.

    One row per sample, D numeric columns, optional header auto-detected.
    ``close_curve`` appends the first point so inputs that do not repeat it
    are treated as a closed loop.  The result is normalised per component
    to zero mean and unit maximum magnitude, which keeps the driven
    reservoir in the sensitive range of the tanh.
    """
    if resample_to < 2:
        raise ValueError(f"resample_to must be at least 2, got {resample_to}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader, start=1):
            cells = [c.strip() for c in row if c.strip() != ""] if row else []
            if not cells:
                continue
            rows.append((i, cells))
    if not rows:
        raise CsvParseError(f"{path}: file is empty")

    def parse_row(line_no, cells):
        values = []
        for j, cell in enumerate(cells, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise CsvParseError(
                    f"{path}: row {line_no}, column {j}: not numeric: {cell!r}",
                    row=line_no,
                    column=j,
                ) from None
        return values

    # header detection: first row entirely non-numeric
    start = 0
    try:
        [float(c) for c in rows[0][1]]
    except ValueError:
        start = 1
    data = [parse_row(line_no, cells) for line_no, cells in rows[start:]]
    if len(data) < 3:
        raise CsvParseError(f"{path}: need at least 3 points, got {len(data)}")
    width = len(data[0])
    for (line_no, _), vals in zip(rows[start:], data):
        if len(vals) != width:
            raise CsvParseError(
                f"{path}: row {line_no}: expected {width} columns, got {len(vals)}",
                row=line_no,
            )

    points = np.asarray(data, dtype=float)
    if close_curve and np.array_equal(points[-1], points[0]):
        points = points[:-1]  # already closed; avoid a zero-length segment
    curve = _resample_polyline(points, resample_to, closed=close_curve)
    curve = curve - curve.mean(axis=0)
    peak = np.max(np.abs(curve), axis=0)
    peak[peak == 0.0] = 1.0
    curve = curve / peak
    return Skeleton(curve, period_steps=resample_to, label="csv-curve")


def save_skeleton(sk: Skeleton, csv_path) -> None:
    """Write samples as a bare CSV plus a JSON sidecar with the metadata."""
    csv_path = str(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in sk.samples:
            writer.writerow([format(v, ".17g") for v in row])
    sidecar = {
        "dim": sk.dim,
        "period_steps": sk.period_steps,
        "label": sk.label,
    }
    with open(_sidecar_path(csv_path), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_skeleton(csv_path) -> Skeleton:
    """Read back a skeleton written by :func:`save_skeleton`.

    The sidecar is optional; without it the period is unknown and the
    label empty.
    """
    csv_path = str(csv_path)
    rows = []
    with open(csv_path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(c) for c in row])
    meta = {"period_steps": None, "label": ""}
    try:
        with open(_sidecar_path(csv_path)) as fh:
            meta.update(json.load(fh))
    except FileNotFoundError:
        pass
    return Skeleton(
        np.asarray(rows, dtype=float),
        period_steps=meta["period_steps"],
        label=meta["label"],
    )


def _sidecar_path(csv_path: str) -> str:
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".json"
