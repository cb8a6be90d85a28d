import numpy as np
import pytest

from skelchaos import (
    NumericError,
    ReservoirSpec,
    TangentSettings,
    TrainingConfig,
    autonomous_jacobian,
    autonomous_spectrum,
    build_reservoir,
    closed_step,
    compose_closed_loop,
    conditional_mle,
    driven_jacobian,
    lissajous,
    map_spectrum,
    step,
    train,
)


def fd_jacobian(f, x, eps=1e-5):
    """Central finite differences, column by column."""
    n = x.size
    out = np.empty((f(x).size, n))
    for j in range(n):
        hi = x.copy()
        lo = x.copy()
        hi[j] += eps
        lo[j] -= eps
        out[:, j] = (f(hi) - f(lo)) / (2.0 * eps)
    return out


def small_instance(seed, n=5, leak=None, rho=None):
    rng = np.random.default_rng(seed)
    spec = ReservoirSpec(
        n_nodes=n,
        leak_rate=leak if leak is not None else rng.uniform(0.2, 1.0),
        spectral_scale=rho if rho is not None else rng.uniform(0.3, 1.5),
        input_scale=rng.uniform(0.0, 0.5),
        seed=seed,
        input_dim=2,
    )
    res = build_reservoir(spec)
    x = rng.uniform(-0.9, 0.9, n)
    u = rng.uniform(-1.0, 1.0, 2)
    return res, x, u


# ---------------------------------------------------------------------------
# Jacobians


def test_driven_jacobian_matches_finite_differences():
    for seed in range(8):
        res, x, u = small_instance(seed)
        jac = driven_jacobian(res, x, u)
        ref = fd_jacobian(lambda v: step(res, v, u), x)
        scale = np.max(np.abs(ref))
        assert np.max(np.abs(jac - ref)) / scale < 1e-6


def test_autonomous_jacobian_matches_finite_differences():
    sk = lissajous(100)
    for seed in range(8):
        res, x, _ = small_instance(seed)
        model = train(res, sk, TrainingConfig(t_init=10, t_train=60))
        jac = autonomous_jacobian(model, x)
        ref = fd_jacobian(lambda v: closed_step(model, v), x)
        scale = np.max(np.abs(ref))
        assert np.max(np.abs(jac - ref)) / scale < 1e-6


def test_driven_jacobian_at_origin():
    res, _, _ = small_instance(3, leak=0.7, rho=0.9)
    jac = driven_jacobian(res, np.zeros(5), np.zeros(2))
    expected = 0.3 * np.eye(5) + 0.7 * 0.9 * res.w
    assert np.allclose(jac, expected, atol=1e-14)


def test_autonomous_jacobian_zero_readout_matches_driven():
    res, x, _ = small_instance(5)
    model = compose_closed_loop(res, np.zeros((5, 2)))
    assert np.allclose(
        autonomous_jacobian(model, x), driven_jacobian(res, x, np.zeros(2)), atol=1e-14
    )


def test_driven_jacobian_leak_one_rho_zero():
    res, x, u = small_instance(9, leak=1.0, rho=1e-300)
    jac = driven_jacobian(res, x, u)
    assert np.max(np.abs(jac)) < 1e-12


# ---------------------------------------------------------------------------
# conditional exponent


def test_cle_contraction_rate_exact():
    # rho -> 0 leaves J = (1-a) I, so the exponent is ln(1-a) ... here a=0.5
    res, _, _ = small_instance(2, leak=0.5, rho=1e-300)
    sk = lissajous(100)
    result = conditional_mle(res, sk, TangentSettings(steps=400, transient=100))
    assert result.mle == pytest.approx(np.log(0.5), abs=1e-12)
    assert result.steps_used == 300


def test_cle_more_negative_at_smaller_rho():
    spec = ReservoirSpec(
        n_nodes=120, leak_rate=0.5, spectral_scale=0.8, input_scale=0.2, seed=6, input_dim=2
    )
    res = build_reservoir(spec)
    sk = lissajous(500)
    settings = TangentSettings(steps=3000, transient=500)
    low = conditional_mle(res, sk, settings).mle
    high = conditional_mle(res.with_spectral_scale(1.2), sk, settings).mle
    assert low < high < 0.0


# ---------------------------------------------------------------------------
# autonomous spectrum via the generic map entry point


def test_linear_map_exponent_exact():
    result = map_spectrum(
        lambda x: 0.5 * x,
        lambda x: np.array([[0.5]]),
        np.array([1.0]),
        TangentSettings(steps=200, transient=50),
    )
    assert result.mle == pytest.approx(np.log(0.5), abs=1e-12)


HENON_A, HENON_B = 1.4, 0.3


def henon_step(p):
    x, y = p
    return np.array([1.0 - HENON_A * x * x + y, HENON_B * x])


def henon_jac(p):
    return np.array([[-2.0 * HENON_A * p[0], 1.0], [HENON_B, 0.0]])


def henon_divergence_oracle(steps=60_000, transient=1_000, d0=1e-9):
    """Two-trajectory stretch rate, no tangent propagation involved."""
    rng = np.random.default_rng(0)
    a = np.array([0.1, 0.1])
    for _ in range(transient):
        a = henon_step(a)
    b = a + d0 * rng.standard_normal(2)
    total = 0.0
    for _ in range(steps):
        a = henon_step(a)
        b = henon_step(b)
        d = np.linalg.norm(b - a)
        total += np.log(d / d0)
        b = a + (b - a) * (d0 / d)
    return total / steps


@pytest.fixture(scope="module")
def henon_settings():
    return TangentSettings(steps=60_000, transient=1_000)


def test_henon_mle_matches_divergence_oracle(henon_settings):
    mle = map_spectrum(henon_step, henon_jac, np.array([0.1, 0.1]), henon_settings).mle
    oracle = henon_divergence_oracle()
    assert abs(mle - oracle) / abs(oracle) < 0.05


def test_henon_spectrum_descending_and_consistent(henon_settings):
    settings2 = TangentSettings(
        steps=henon_settings.steps, transient=henon_settings.transient, n_exponents=2
    )
    spec2 = map_spectrum(henon_step, henon_jac, np.array([0.1, 0.1]), settings2)
    single = map_spectrum(henon_step, henon_jac, np.array([0.1, 0.1]), henon_settings)
    assert spec2.exponents[0] > spec2.exponents[1]
    assert abs(spec2.exponents[0] - single.mle) < 1e-3
    # the exponents of an area-contracting map sum to log|det J| = log b
    assert abs(spec2.exponents.sum() - np.log(HENON_B)) < 1e-3


def test_renormalisation_interval_invariance(henon_settings):
    every5 = TangentSettings(
        steps=henon_settings.steps, transient=henon_settings.transient, renorm_every=5
    )
    a = map_spectrum(henon_step, henon_jac, np.array([0.1, 0.1]), henon_settings).mle
    b = map_spectrum(henon_step, henon_jac, np.array([0.1, 0.1]), every5).mle
    assert abs(a - b) < 1e-3


ROT = np.array(
    [[np.cos(1.0), -np.sin(1.0)], [np.sin(1.0), np.cos(1.0)]]
)  # irrational rotation


def circle_map(p):
    r = np.linalg.norm(p)
    return (0.5 + 0.5 * r) / r * (ROT @ p)


def circle_jac(p):
    r = np.linalg.norm(p)
    phi = (0.5 + 0.5 * r) / r
    dphi = -0.5 / r**2
    return ROT @ (phi * np.eye(2) + (dphi / r) * np.outer(p, p))


def test_invariant_circle_reports_zero_mle():
    # attracting invariant circle: neutral along the curve, ln 0.5 across
    settings = TangentSettings(steps=20_000, transient=2_000, n_exponents=2)
    result = map_spectrum(circle_map, circle_jac, np.array([1.3, 0.0]), settings)
    assert abs(result.exponents[0]) < 1e-3
    assert result.exponents[1] == pytest.approx(np.log(0.5), abs=1e-3)


def test_map_spectrum_overflow_raises():
    with pytest.raises(NumericError):
        map_spectrum(
            lambda x: x * 1e200,
            lambda x: np.array([[1e200]]),
            np.array([1.0]),
            TangentSettings(steps=50, transient=0),
        )


# ---------------------------------------------------------------------------
# closed-loop spectrum of the trained network


def test_autonomous_spectrum_collect_states_matches_plain_run(
    small_reservoir, lissajous_300
):
    from skelchaos import run_closed_loop

    model = train(small_reservoir, lissajous_300, TrainingConfig(t_init=50, t_train=200))
    settings = TangentSettings(steps=300, transient=100)
    result, states = autonomous_spectrum(model, settings, collect_states=True)
    trace = run_closed_loop(model, 300)
    assert np.allclose(states, trace.states, atol=1e-12)
    assert result.steps_used == 200


def test_autonomous_spectrum_x0_override(small_reservoir):
    model = compose_closed_loop(small_reservoir.with_spectral_scale(0.5), np.zeros((40, 2)))
    rng = np.random.default_rng(0)
    x0 = rng.uniform(-0.1, 0.1, 40)
    result = autonomous_spectrum(model, TangentSettings(steps=800, transient=200), x0=x0)
    # contracting at rho = 0.5: exponent close to ln of the effective radius
    from skelchaos import effective_radius_pre

    expected = np.log(effective_radius_pre(model.reservoir))
    assert result.mle == pytest.approx(expected, abs=5e-3)


def test_settings_validation():
    with pytest.raises(ValueError):
        TangentSettings(steps=100, transient=100)
    with pytest.raises(ValueError):
        TangentSettings(steps=100, transient=0, renorm_every=0)
    with pytest.raises(ValueError):
        TangentSettings(steps=100, transient=0, n_exponents=0)
    with pytest.raises(ValueError):
        map_spectrum(
            lambda x: x,
            lambda x: np.eye(1),
            np.array([1.0]),
            TangentSettings(steps=10, transient=0, n_exponents=5),
        )
