"""Bifurcation diagram of the trained closed loop against the spectral scale.

Because the composed coupling depends on the spectral scale, sweeping it
and plotting extrema of the node average turns training itself into a
bifurcation experiment: periodic windows alternate with chaos near the
edge.  Light green marks the transient part of each trajectory.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from skelchaos import ReservoirSpec, TrainingConfig, build_reservoir, lissajous, run_closed_loop, train
from skelchaos.analysis import extrema_bifurcation_points

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

sk = lissajous(3000)
base = build_reservoir(
    ReservoirSpec(n_nodes=300, leak_rate=0.5, spectral_scale=1.0, input_scale=0.2, seed=1, input_dim=2)
)

rows, phases = [], []
for rho in np.arange(1.30, 1.46, 2e-3):
    rho = round(float(rho), 5)
    model = train(base.with_spectral_scale(rho), sk, TrainingConfig(t_init=500, t_train=1500))
    trace = run_closed_loop(model, 6000)
    r, p = extrema_bifurcation_points(rho, trace.states.mean(axis=1), transient_split=2000)
    rows.append(r)
    phases.append(p)
    print(f"rho={rho:.3f}: {len(r)} extrema")

points = np.vstack(rows)
phase = np.concatenate(phases)
settled = phase == "settled"

fig, ax = plt.subplots(figsize=(9, 5))
ax.plot(points[~settled, 0], points[~settled, 1], ".", ms=1.5, color="#a8e6a1", label="transient")
ax.plot(points[settled, 0], points[settled, 1], ".", ms=1.5, color="#1f2f8a", label="settled")
ax.set_xlabel("spectral scale")
ax.set_ylabel("extrema of the node average")
ax.legend(markerscale=6)
fig.tight_layout()
fig.savefig(OUT / "04_bifurcation_diagram.png", dpi=120)
print(f"wrote {OUT / '04_bifurcation_diagram.png'}")
