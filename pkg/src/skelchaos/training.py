"""Teacher forcing, ridge readout, and the autonomous closed-loop model.

Training drives the reservoir with the skeleton (teacher forcing),
discards a washout, and fits a linear readout W_out by ridge regression
so that W_out^T x[k] predicts u[k].  Feeding the prediction back as the
input composes the coupling

    W_hat = rho W + sigma W_in W_out^T

and the closed loop  x[k+1] = (1-a) x[k] + a tanh(W_hat x[k])  is an
autonomous system started from the final teacher-forced state.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import NumericError
from .reservoir import Reservoir, load_reservoir, save_reservoir
from .skeleton import Skeleton, load_skeleton, save_skeleton

__all__ = [
    "TrainingConfig",
    "TrainedModel",
    "RunTrace",
    "teacher_force",
    "ridge_readout",
    "compose_closed_loop",
    "train",
    "closed_step",
    "run_open_loop",
    "run_closed_loop",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class TrainingConfig:
    """Washout length, training length, ridge regulariser, initial state."""

    t_init: int = 1000
    t_train: int = 2000
    beta: float = 1e-3
    x0: Optional[np.ndarray] = None  # zeros when omitted

    def __post_init__(self):
        if self.t_init < 0:
            raise ValueError(f"t_init must be nonnegative, got {self.t_init}")
        if self.t_train < 1:
            raise ValueError(f"t_train must be positive, got {self.t_train}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")


@dataclass
class TrainedModel:
    """A reservoir with its fitted readout and composed closed-loop coupling."""

    reservoir: Reservoir
    w_out: np.ndarray
    w_hat: np.ndarray
    x_start: np.ndarray
    config: TrainingConfig

    @property
    def rho(self) -> float:
        return self.reservoir.spec.spectral_scale


@dataclass
class RunTrace:
    """States and readout outputs of a simulated run.

    ``start_step`` records the skeleton phase at states[0] so open-loop
    outputs can be aligned with their teacher targets.
    """

    states: np.ndarray  # (T, N)
    outputs: np.ndarray  # (T, D)
    mode: str  # "open-loop" | "closed-loop"
    start_step: int = 0


def teacher_force(res: Reservoir, sk: Skeleton, cfg: TrainingConfig):
    """Drive the reservoir with the tiled skeleton and collect regression data.

    Returns ``(X, Y, x_end)`` where row t of X is the state seen *before*
    input u[t_init + t] is applied, Y holds the matching inputs (the
    one-step-ahead targets), and x_end is the state after the full drive,
    i.e. the closed-loop initial condition.
    """
    spec = res.spec
    if sk.dim != spec.input_dim:
        raise ValueError(f"skeleton dim {sk.dim} != reservoir input_dim {spec.input_dim}")
    if cfg.t_train < sk.dim:
        raise ValueError(f"t_train={cfg.t_train} smaller than the {sk.dim}-dim readout")
    total = cfg.t_init + cfg.t_train
    u = sk.tile(total)

    if cfg.x0 is None:
        x = np.zeros(spec.n_nodes)
    else:
        x = np.asarray(cfg.x0, dtype=float).copy()
        if x.shape != (spec.n_nodes,):
            raise ValueError(f"x0 must have shape ({spec.n_nodes},), got {x.shape}")

    a = spec.leak_rate
    ws = spec.spectral_scale * res.w
    bias = spec.input_scale * (u @ res.w_in.T)  # (total, N)
    x_rows = np.empty((cfg.t_train, spec.n_nodes))
    for k in range(total):
        if k >= cfg.t_init:
            x_rows[k - cfg.t_init] = x
        x = (1.0 - a) * x + a * np.tanh(ws @ x + bias[k])
    if not np.all(np.isfinite(x_rows)) or not np.all(np.isfinite(x)):
        raise NumericError("teacher forcing produced non-finite states")
    return x_rows, u[cfg.t_init :].copy(), x


def ridge_readout(x_rows: np.ndarray, y_rows: np.ndarray, beta: float) -> np.ndarray:
    """Solve W_out = (X^T X + beta I)^-1 X^T Y.

    For beta > 0 the normal matrix is symmetric positive definite and a
    Cholesky factorisation is used; at beta = 0 the minimum-norm
    least-squares solution stands in, which also covers rank-deficient X.
    """
    x_rows = np.asarray(x_rows, dtype=float)
    y_rows = np.asarray(y_rows, dtype=float)
    if x_rows.ndim != 2 or y_rows.ndim != 2 or x_rows.shape[0] != y_rows.shape[0]:
        raise ValueError(
            f"inconsistent shapes: X {x_rows.shape}, Y {y_rows.shape}"
        )
    if beta < 0.0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if beta == 0.0:
        w_out, *_ = np.linalg.lstsq(x_rows, y_rows, rcond=None)
        return w_out
    gram = x_rows.T @ x_rows
    gram[np.diag_indices_from(gram)] += beta
    try:
        factor = scipy.linalg.cho_factor(gram, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD by construction
        raise NumericError(f"ridge normal matrix not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve(factor, x_rows.T @ y_rows, check_finite=False)


def compose_closed_loop(
    res: Reservoir,
    w_out: np.ndarray,
    x_start: Optional[np.ndarray] = None,
    config: Optional[TrainingConfig] = None,
) -> TrainedModel:
    """Build the autonomous model with W_hat = rho W + sigma W_in W_out^T."""
    spec = res.spec
    w_out = np.asarray(w_out, dtype=float)
    if w_out.shape != (spec.n_nodes, spec.input_dim):
        raise ValueError(
            f"w_out must have shape ({spec.n_nodes}, {spec.input_dim}), got {w_out.shape}"
        )
    w_hat = spec.spectral_scale * res.w + spec.input_scale * (res.w_in @ w_out.T)
    if x_start is None:
        x_start = np.zeros(spec.n_nodes)
    else:
        x_start = np.asarray(x_start, dtype=float).copy()
    return TrainedModel(
        reservoir=res,
        w_out=w_out,
        w_hat=w_hat,
        x_start=x_start,
        config=config if config is not None else TrainingConfig(),
    )


def train(res: Reservoir, sk: Skeleton, cfg: TrainingConfig) -> TrainedModel:
    """Teacher-force, fit the readout, and compose the closed loop."""
    x_rows, y_rows, x_end = teacher_force(res, sk, cfg)
    w_out = ridge_readout(x_rows, y_rows, cfg.beta)
    return compose_closed_loop(res, w_out, x_start=x_end, config=cfg)


def closed_step(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    """One autonomous update x' = (1-a) x + a tanh(W_hat x)."""
    a = model.reservoir.spec.leak_rate
    return (1.0 - a) * x + a * np.tanh(model.w_hat @ x)


def run_closed_loop(model: TrainedModel, steps: int) -> RunTrace:
    """Iterate the autonomous system from the stored initial state."""
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    a = model.reservoir.spec.leak_rate
    w_hat = model.w_hat
    x = model.x_start.copy()
    states = np.empty((steps, x.size))
    for k in range(steps):
        states[k] = x
        x = (1.0 - a) * x + a * np.tanh(w_hat @ x)
    if not np.all(np.isfinite(states)):
        raise NumericError("closed-loop run produced non-finite states")
    return RunTrace(states=states, outputs=states @ model.w_out, mode="closed-loop")


def run_open_loop(
    model: TrainedModel,
    sk: Skeleton,
    steps: int,
    start_step: Optional[int] = None,
) -> RunTrace:
    """Drive the reservoir with the true skeleton and record predictions.

    By default the input phase continues where teacher forcing stopped, so
    outputs[k] is the one-step-ahead prediction of the tiled skeleton at
    start_step + k.
    """
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    res = model.reservoir
    spec = res.spec
    if start_step is None:
        start_step = model.config.t_init + model.config.t_train
    u = sk.tile(start_step + steps)[start_step:]
    a = spec.leak_rate
    ws = spec.spectral_scale * res.w
    bias = spec.input_scale * (u @ res.w_in.T)
    x = model.x_start.copy()
    states = np.empty((steps, spec.n_nodes))
    for k in range(steps):
        states[k] = x
        x = (1.0 - a) * x + a * np.tanh(ws @ x + bias[k])
    if not np.all(np.isfinite(states)):
        raise NumericError("open-loop run produced non-finite states")
    return RunTrace(
        states=states,
        outputs=states @ model.w_out,
        mode="open-loop",
        start_step=start_step,
    )


def skeleton_fingerprint(sk: Skeleton) -> str:
    """SHA-256 of the raw samples; binds a model directory to its teacher."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(sk.samples).tobytes())
    h.update(str(sk.samples.shape).encode())
    return h.hexdigest()


def save_model(model: TrainedModel, directory, sk: Optional[Skeleton] = None) -> None:
    """Serialise a trained model to a directory.

    Writes the reservoir dump, the readout and composed matrices, the
    closed-loop initial state, and JSON metadata.  When the skeleton is
    given it is stored alongside so the directory is self-contained for
    later analysis.  Output is deterministic: rerunning the same training
    yields byte-identical files.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_reservoir(model.reservoir, directory / "reservoir.npz")
    np.save(directory / "w_out.npy", model.w_out)
    np.save(directory / "w_hat.npy", model.w_hat)
    np.save(directory / "x_start.npy", model.x_start)
    spec = model.reservoir.spec
    meta = {
        "format": 1,
        "spec": {
            "n_nodes": spec.n_nodes,
            "leak_rate": spec.leak_rate,
            "spectral_scale": spec.spectral_scale,
            "input_scale": spec.input_scale,
            "seed": int(spec.seed),
            "input_dim": spec.input_dim,
        },
        "config": {
            "t_init": model.config.t_init,
            "t_train": model.config.t_train,
            "beta": model.config.beta,
        },
        "skeleton_sha256": skeleton_fingerprint(sk) if sk is not None else None,
    }
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if sk is not None:
        save_skeleton(sk, directory / "skeleton.csv")


def load_model(directory):
    """Load a model directory; returns (model, skeleton-or-None).

    Verifies the composition identity of the stored matrices.
    """
    directory = Path(directory)
    res = load_reservoir(directory / "reservoir.npz")
    with open(directory / "meta.json") as fh:
        meta = json.load(fh)
    cfg = TrainingConfig(**meta["config"])
    w_out = np.load(directory / "w_out.npy")
    w_hat = np.load(directory / "w_hat.npy")
    x_start = np.load(directory / "x_start.npy")
    spec = res.spec
    expected = spec.spectral_scale * res.w + spec.input_scale * (res.w_in @ w_out.T)
    if not np.allclose(w_hat, expected, rtol=0.0, atol=1e-12):
        raise NumericError(f"{directory}: stored w_hat violates the composition identity")
    model = TrainedModel(reservoir=res, w_out=w_out, w_hat=w_hat, x_start=x_start, config=cfg)
    sk_path = directory / "skeleton.csv"
    sk = load_skeleton(sk_path) if sk_path.exists() else None
    return model, sk
