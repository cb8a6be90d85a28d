"""Lyapunov exponents by tangent-space propagation.

All exponents are natural-log growth rates per discrete step.  Tangent
blocks are propagated with Jacobian-vector products (the Jacobian is never
materialised for the network systems) and re-orthonormalised by QR; the
diagonal growth factors accumulate into the spectrum after a transient.

Two entry points matter in practice: :func:`conditional_mle` gives the
largest exponent of the *driven* reservoir (negative means the drive
suppresses the reservoir's own dynamics), and :func:`autonomous_spectrum`
gives exponents of the trained closed loop (positive leading exponent
means chaos).  :func:`map_spectrum` accepts any user-supplied discrete map
with a Jacobian, which is handy for validating the engine on textbook
systems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NumericError
from .reservoir import Reservoir
from .skeleton import Skeleton
from .training import TrainedModel

__all__ = [
    "TangentSettings",
    "LyapunovResult",
    "driven_jacobian",
    "autonomous_jacobian",
    "conditional_mle",
    "autonomous_spectrum",
    "map_spectrum",
]


@dataclass(frozen=True)
class TangentSettings:
    """How long to propagate and how often to re-orthonormalise.

    ``steps`` counts total updates; the first ``transient`` of them are
    propagated but not accumulated.  ``n_exponents`` tangent directions
    are tracked (1 tracks just the maximum exponent).
    """

    steps: int = 10_000
    transient: int = 2_000
    renorm_every: int = 1
    n_exponents: int = 1

    def __post_init__(self):
        if self.transient < 0 or self.steps <= self.transient:
            raise ValueError(
                f"need steps > transient >= 0, got steps={self.steps}, "
                f"transient={self.transient}"
            )
        if self.renorm_every < 1:
            raise ValueError(f"renorm_every must be positive, got {self.renorm_every}")
        if self.n_exponents < 1:
            raise ValueError(f"n_exponents must be positive, got {self.n_exponents}")


@dataclass
class LyapunovResult:
    """Exponents sorted descending plus the number of accumulated steps."""

    exponents: np.ndarray
    steps_used: int

    @property
    def mle(self) -> float:
        return float(self.exponents[0])


def _renormalise(v: np.ndarray):
    """QR-orthonormalise the tangent block; returns (Q, growth factors)."""
    if v.shape[1] == 1:
        growth = float(np.linalg.norm(v[:, 0]))
        if not np.isfinite(growth) or growth == 0.0:
            raise NumericError("tangent vector overflowed or collapsed")
        return v / growth, np.array([growth])
    q, r = np.linalg.qr(v)
    diag = np.diagonal(r).copy()
    if not np.all(np.isfinite(diag)) or np.any(diag == 0.0):
        raise NumericError("tangent block lost rank during re-orthonormalisation")
    signs = np.sign(diag)
    return q * signs, np.abs(diag)


def _benettin(
    propagate: Callable,
    x0: np.ndarray,
    settings: TangentSettings,
    collect_states: bool = False,
):
    """Shared tangent-propagation loop.

    ``propagate(k, x, v) -> (x', v')`` advances state and tangent block one
    step.  A re-orthonormalisation is forced at the transient boundary so
    pre- and post-transient growth never mix, and at the final step so the
    tail of a renorm interval is not dropped.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    m = settings.n_exponents
    if m > n:
        raise ValueError(f"n_exponents={m} exceeds state dimension {n}")
    v = np.zeros((n, m))
    v[np.arange(m), np.arange(m)] = 1.0
    sums = np.zeros(m)
    states = np.empty((settings.steps, n)) if collect_states else None

    for k in range(settings.steps):
        if collect_states:
            states[k] = x
        x, v = propagate(k, x, v)
        done = k + 1
        if (
            done % settings.renorm_every == 0
            or done == settings.transient
            or done == settings.steps
        ):
            v, growth = _renormalise(v)
            if done > settings.transient:
                sums += np.log(growth)

    used = settings.steps - settings.transient
    exponents = np.sort(sums / used)[::-1]
    result = LyapunovResult(exponents=exponents, steps_used=used)
    if collect_states:
        return result, states
    return result


def driven_jacobian(res: Reservoir, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """State-to-state derivative of the driven update at (x, u), input held fixed:

        J = (1-a) I + a diag(1 - tanh^2(rho W x + sigma W_in u)) rho W
    """
    spec = res.spec
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (spec.n_nodes,) or u.shape != (spec.input_dim,):
        raise ValueError(
            f"expected shapes ({spec.n_nodes},) and ({spec.input_dim},), "
            f"got {x.shape} and {u.shape}"
        )
    z = spec.spectral_scale * (res.w @ x) + spec.input_scale * (res.w_in @ u)
    gain = 1.0 - np.tanh(z) ** 2
    a = spec.leak_rate
    return (1.0 - a) * np.eye(spec.n_nodes) + a * gain[:, None] * (
        spec.spectral_scale * res.w
    )


def autonomous_jacobian(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    """Derivative of the closed-loop update: (1-a) I + a diag(1 - tanh^2(W_hat x)) W_hat."""
    x = np.asarray(x, dtype=float)
    n = model.reservoir.spec.n_nodes
    if x.shape != (n,):
        raise ValueError(f"state must have shape ({n},), got {x.shape}")
    z = model.w_hat @ x
    gain = 1.0 - np.tanh(z) ** 2
    a = model.reservoir.spec.leak_rate
    return (1.0 - a) * np.eye(n) + a * gain[:, None] * model.w_hat


def _lesn_propagate(ws: np.ndarray, leak: float, bias: Optional[np.ndarray]):
    """Propagator for the leaky network; one matrix product covers state and
    tangent block together."""
    one_minus = 1.0 - leak

    def advance(k, x, v):
        block = np.column_stack([x, v])
        prod = ws @ block
        z = prod[:, 0] + (bias[k] if bias is not None else 0.0)
        t = np.tanh(z)
        x_next = one_minus * x + leak * t
        gain = 1.0 - t * t
        v_next = one_minus * v + leak * (gain[:, None] * prod[:, 1:])
        return x_next, v_next

    return advance


def conditional_mle(
    res: Reservoir, sk: Skeleton, settings: TangentSettings = TangentSettings()
) -> LyapunovResult:
    """Largest exponent of the reservoir driven by the tiled skeleton (CLE).

    The trajectory starts from the zero state; the transient doubles as the
    washout.  A negative value certifies that the driven reservoir forgets
    its initial condition, the prerequisite for reliable training.
    """
    spec = res.spec
    if sk.dim != spec.input_dim:
        raise ValueError(f"skeleton dim {sk.dim} != reservoir input_dim {spec.input_dim}")
    u = sk.tile(settings.steps)
    bias = spec.input_scale * (u @ res.w_in.T)
    advance = _lesn_propagate(spec.spectral_scale * res.w, spec.leak_rate, bias)
    return _benettin(advance, np.zeros(spec.n_nodes), settings)


def autonomous_spectrum(
    model: TrainedModel,
    settings: TangentSettings = TangentSettings(),
    x0: Optional[np.ndarray] = None,
    collect_states: bool = False,
):
    """Lyapunov spectrum of the trained closed loop.

    Starts from the model's stored initial state unless ``x0`` overrides
    it (useful for input-free sweeps of an untrained reservoir).  With
    ``collect_states`` the visited trajectory is returned alongside, so a
    single pass serves both the exponents and any trace-based analysis.
    """
    start = model.x_start if x0 is None else np.asarray(x0, dtype=float)
    advance = _lesn_propagate(model.w_hat, model.reservoir.spec.leak_rate, None)
    return _benettin(advance, start, settings, collect_states=collect_states)


def map_spectrum(
    step_fn: Callable,
    jacobian_fn: Callable,
    x0: np.ndarray,
    settings: TangentSettings = TangentSettings(),
) -> LyapunovResult:
    """Spectrum of an arbitrary discrete map given its Jacobian.

    ``step_fn(x) -> x'`` and ``jacobian_fn(x) -> (n, n) array`` are called
    with the current state; scalars work for one-dimensional maps.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    def advance(k, x, v):
        jac = np.atleast_2d(np.asarray(jacobian_fn(x), dtype=float))
        x_next = np.atleast_1d(np.asarray(step_fn(x), dtype=float))
        if not np.all(np.isfinite(x_next)) or not np.all(np.isfinite(jac)):
            raise NumericError(f"map produced non-finite values at step {k}")
        return x_next, jac @ v

    return _benettin(advance, x0, settings)
