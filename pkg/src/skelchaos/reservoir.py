"""Leaky echo state network reservoirs.

A reservoir is a fixed random recurrent network

    x[k+1] = (1 - a) x[k] + a tanh(rho W x[k] + sigma W_in u[k])

where ``W`` is a dense random matrix rescaled to unit spectral radius, so
``rho`` *is* the spectral radius of the internal coupling ``rho W``, and
``W_in`` has i.i.d. uniform entries in [-1, 1].  States are plain float
arrays with every component in [-1, 1] (the update is a convex combination
of a bounded state and a tanh).

Construction is a pure function of the spec: the same seed always yields
bit-identical matrices.  The normal variates are produced by a Box-Muller
transform of PCG64 uniforms so the draw is reproducible across platforms.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericError

__all__ = [
    "ReservoirSpec",
    "Reservoir",
    "build_reservoir",
    "step",
    "spectral_radius",
    "effective_radius_pre",
    "effective_radius_post",
    "save_reservoir",
    "load_reservoir",
]


@dataclass(frozen=True)
class ReservoirSpec:
    """Size and scaling parameters of a leaky-ESN reservoir.

    n_nodes: reservoir dimension N.
    leak_rate: leak a in (0, 1]; a = 1 recovers the plain ESN update.
    spectral_scale: rho > 0, spectral radius of the internal coupling.
    input_scale: sigma >= 0, input intensity.
    seed: 64-bit unsigned seed for the matrix draw.
    input_dim: dimension D of the driving signal, 1 <= D <= N.
    """

    n_nodes: int
    leak_rate: float
    spectral_scale: float
    input_scale: float
    seed: int
    input_dim: int = 2

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError(f"n_nodes must be positive, got {self.n_nodes}")
        if not 0.0 < self.leak_rate <= 1.0:
            raise ValueError(f"leak_rate must lie in (0, 1], got {self.leak_rate}")
        if not self.spectral_scale > 0.0:
            raise ValueError(f"spectral_scale must be positive, got {self.spectral_scale}")
        if self.input_scale < 0.0:
            raise ValueError(f"input_scale must be nonnegative, got {self.input_scale}")
        if not 1 <= self.input_dim <= self.n_nodes:
            raise ValueError(
                f"need 1 <= input_dim <= n_nodes, got D={self.input_dim}, N={self.n_nodes}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass
class Reservoir:
    """Fixed random matrices of a leaky ESN; treat as immutable once built.

    ``w`` is scaled so its spectral radius is exactly 1 (up to rounding);
    ``w_eigvals`` caches the eigenvalues of ``w`` so effective radii at any
    spectral scale come for free.
    """

    w: np.ndarray
    w_in: np.ndarray
    spec: ReservoirSpec
    w_eigvals: np.ndarray

    def with_spectral_scale(self, rho: float) -> "Reservoir":
        """Same matrices under a different spectral scale (shares storage)."""
        return dataclasses.replace(
            self, spec=dataclasses.replace(self.spec, spectral_scale=float(rho))
        )


def _standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normal variates via Box-Muller on generator uniforms."""
    n = int(np.prod(shape))
    half = (n + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    # u1 in [0, 1) so 1 - u1 in (0, 1] and the log is finite
    r = np.sqrt(-2.0 * np.log1p(-u1))
    theta = 2.0 * np.pi * u2
    z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
    return z.reshape(shape)


def spectral_radius(m: np.ndarray) -> float:
    """Largest eigenvalue magnitude of a square real matrix.

    Uses a full dense eigensolve, which handles complex-conjugate dominant
    pairs exactly; fine for the matrix sizes this package targets.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def build_reservoir(spec: ReservoirSpec) -> Reservoir:
    """Draw the random matrices for ``spec``; deterministic under the seed.

    W is i.i.d. standard normal divided by its spectral radius; W_in is
    i.i.d. uniform on [-1, 1].  Raises NumericError if the raw draw has a
    numerically zero spectral radius (cannot be rescaled).
    """
    rng = np.random.default_rng(int(spec.seed))
    w_raw = _standard_normal(rng, (spec.n_nodes, spec.n_nodes))
    w_in = rng.uniform(-1.0, 1.0, size=(spec.n_nodes, spec.input_dim))
    eigs = np.linalg.eigvals(w_raw)
    radius = float(np.max(np.abs(eigs)))
    if radius < 1e-12:
        raise NumericError("degenerate draw: spectral radius numerically zero")
    return Reservoir(w=w_raw / radius, w_in=w_in, spec=spec, w_eigvals=eigs / radius)


def step(res: Reservoir, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One driven update x' = (1-a)x + a tanh(rho W x + sigma W_in u)."""
    spec = res.spec
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (spec.n_nodes,):
        raise ValueError(f"state must have shape ({spec.n_nodes},), got {x.shape}")
    if u.shape != (spec.input_dim,):
        raise ValueError(f"input must have shape ({spec.input_dim},), got {u.shape}")
    pre = spec.spectral_scale * (res.w @ x) + spec.input_scale * (res.w_in @ u)
    return (1.0 - spec.leak_rate) * x + spec.leak_rate * np.tanh(pre)


def effective_radius_pre(res: Reservoir) -> float:
    """|lambda|_max of the origin linearisation a rho W + (1-a) I.

    The origin of the input-free network is stable exactly when this is
    below one.  Computed from the cached eigenvalues of W, so evaluating
    it across many spectral scales costs nothing extra.
    """
    a = res.spec.leak_rate
    vals = a * res.spec.spectral_scale * res.w_eigvals + (1.0 - a)
    return float(np.max(np.abs(vals)))


def effective_radius_post(res: Reservoir, w_hat: np.ndarray) -> float:
    """|lambda|_max of a W_hat + (1-a) I for a trained coupling W_hat."""
    w_hat = np.asarray(w_hat, dtype=float)
    n = res.spec.n_nodes
    if w_hat.shape != (n, n):
        raise ValueError(f"w_hat must have shape ({n}, {n}), got {w_hat.shape}")
    a = res.spec.leak_rate
    return spectral_radius(a * w_hat + (1.0 - a) * np.eye(n))


def save_reservoir(res: Reservoir, path) -> None:
    """Binary dump (matrices plus spec fields) for exact replay."""
    spec = res.spec
    np.savez(
        path,
        w=res.w,
        w_in=res.w_in,
        w_eigvals=res.w_eigvals,
        spec_json=json.dumps(
            {
                "n_nodes": spec.n_nodes,
                "leak_rate": spec.leak_rate,
                "spectral_scale": spec.spectral_scale,
                "input_scale": spec.input_scale,
                "seed": int(spec.seed),
                "input_dim": spec.input_dim,
            }
        ),
    )


def load_reservoir(path) -> Reservoir:
    with np.load(path, allow_pickle=False) as data:
        fields = json.loads(str(data["spec_json"]))
        spec = ReservoirSpec(**fields)
        return Reservoir(
            w=data["w"], w_in=data["w_in"], spec=spec, w_eigvals=data["w_eigvals"]
        )
