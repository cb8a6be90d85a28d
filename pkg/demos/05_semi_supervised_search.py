"""End-to-end search for a shape-following chaotic attractor.

Pipeline: bracket the driven edge of chaos, find the supervised point
just below it, scan the interval, and report the grid points whose
closed loop is chaotic (positive leading exponent) while the output
still hugs the skeleton (small shape index).  Takes a few minutes.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from skelchaos import (
    ReportSettings,
    ReservoirSpec,
    SearchConfig,
    TangentSettings,
    TrainingConfig,
    build_reservoir,
    lissajous,
    run_closed_loop,
    run_search,
    save_search_result,
    train,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

sk = lissajous(3000)
spec = ReservoirSpec(
    n_nodes=500, leak_rate=0.5, spectral_scale=1.0, input_scale=0.2, seed=3, input_dim=2
)
cfg = SearchConfig(
    rho_lo=1.30,
    rho_hi=1.60,
    grid_step=1e-4,
    prescan_points=16,
    fine_window=40,
    extend_beyond=30,
)
settings = ReportSettings(
    mle=TangentSettings(steps=10_000, transient=2_000),
    cle=TangentSettings(steps=4_000, transient=800),
    rmse_steps=4_000,
    q_window=2_000,
)

result = run_search(spec, sk, cfg, TrainingConfig(), settings)
print(f"edge of chaos       : {result.rho_edge:.4f}")
print(f"supervised point    : {result.rho_supervised}")
print(f"scanned grid points : {len(result.full_scan)}")
print(f"candidates          : {[f'{r.rho:.4f}' for r in result.candidates]}")
save_search_result(result, OUT / "05_search_result.json", OUT / "05_search_result.csv")

if result.candidates:
    best = result.candidates[0]
    model = train(
        build_reservoir(
            ReservoirSpec(500, 0.5, best.rho, 0.2, spec.seed, 2)
        ),
        sk,
        TrainingConfig(),
    )
    trace = run_closed_loop(model, 10_000)
    tail = trace.outputs[-2_000:]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(sk.samples[:100, 0], sk.samples[:100, 1], lw=2, label="skeleton")
    ax.plot(tail[:, 0], tail[:, 1], lw=0.5, label=f"chaotic output, MLE={best.mle:.3g}")
    ax.set_aspect("equal")
    ax.legend()
    fig.tight_layout()
    fig.savefig(OUT / "05_semi_supervised_attractor.png", dpi=120)
    print(f"wrote {OUT / '05_semi_supervised_attractor.png'}")
else:
    print("no candidate on this realization; try another seed")
