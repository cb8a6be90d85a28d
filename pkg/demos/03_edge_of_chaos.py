"""Conditional exponent of the driven reservoir across the spectral scale.

The CLE rises with the spectral scale and changes sign at the edge of
chaos; past the edge the drive no longer suppresses the reservoir's own
dynamics and training stops being reliable.  Also overlays the pre- and
post-training effective radii, which separate in the convergent region
and pinch together near the edge.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from skelchaos import (
    ReservoirSpec,
    SearchConfig,
    TangentSettings,
    TrainingConfig,
    build_reservoir,
    conditional_mle,
    effective_radius_post,
    effective_radius_pre,
    find_edge,
    lissajous,
    train,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

sk = lissajous(3000)
base = build_reservoir(
    ReservoirSpec(n_nodes=300, leak_rate=0.5, spectral_scale=1.0, input_scale=0.2, seed=1, input_dim=2)
)
settings = TangentSettings(steps=5000, transient=1000)

rhos = np.arange(0.8, 1.65, 0.05)
cles, pre, post = [], [], []
for rho in rhos:
    res = base.with_spectral_scale(round(float(rho), 4))
    cles.append(conditional_mle(res, sk, settings).mle)
    pre.append(effective_radius_pre(res))
    model = train(res, sk, TrainingConfig(t_init=500, t_train=1500))
    post.append(effective_radius_post(res, model.w_hat))
    print(f"rho={rho:.2f}: CLE={cles[-1]:+.4f} eff pre={pre[-1]:.3f} post={post[-1]:.3f}")

cfg = SearchConfig(rho_lo=0.8, rho_hi=1.6, grid_step=2e-3, prescan_points=12)
edge = find_edge(lambda r: base.with_spectral_scale(r), sk, cfg, settings)
print(f"edge of chaos located at rho = {edge:.4f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
ax1.plot(rhos, cles, "o-")
ax1.axhline(0.0, color="k", lw=0.5)
ax1.axvline(edge, color="r", ls="--", label=f"edge {edge:.3f}")
ax1.set_xlabel("spectral scale")
ax1.set_ylabel("driven exponent (CLE)")
ax1.legend()
ax2.plot(rhos, pre, "s-", label="effective radius, untrained")
ax2.plot(rhos, post, "d-", label="effective radius, trained")
ax2.axvline(edge, color="r", ls="--")
ax2.set_xlabel("spectral scale")
ax2.legend()
fig.tight_layout()
fig.savefig(OUT / "03_edge_of_chaos.png", dpi=120)
print(f"wrote {OUT / '03_edge_of_chaos.png'}")
