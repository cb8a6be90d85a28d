"""Gallery of teacher curves ("skeletons").

Builds the four analytic generators plus a CSV-ingested hand-drawn-style
curve, prints their basic properties, and plots each shape.  Output lands
in demos/output/.
"""

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from skelchaos import lissajous, load_csv, rossler_cycle, save_skeleton, unit_circle, van_der_pol

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

skeletons = {
    "lissajous": lissajous(300),
    "unit circle": unit_circle(300, period=100),
    "van der pol": van_der_pol(mu=1.0, dt=0.1, steps=300),
    "rossler": rossler_cycle(c=3.0, dt=0.2, steps=300),
}

# a wobbly closed curve standing in for a hand drawing
theta = np.linspace(0.0, 2.0 * np.pi, 73)[:-1]
radius = 1.0 + 0.25 * np.sin(3.0 * theta) + 0.1 * np.cos(7.0 * theta)
hand = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
hand_csv = OUT / "hand_drawn.csv"
np.savetxt(hand_csv, hand, delimiter=",")
skeletons["hand drawn (csv)"] = load_csv(hand_csv, resample_to=200, close_curve=True)

fig, axes = plt.subplots(1, len(skeletons), figsize=(4 * len(skeletons), 4))
for ax, (name, sk) in zip(axes, skeletons.items()):
    ax.plot(sk.samples[:, 0], sk.samples[:, 1], lw=1.0)
    period = sk.period_steps if sk.period_steps is not None else "unknown"
    ax.set_title(f"{name}\ndim={sk.dim}, period={period}")
    ax.set_aspect("equal")
    print(f"{name:>16}: {len(sk)} samples, dim {sk.dim}, period {period}")
    save_skeleton(sk, OUT / f"skeleton_{name.split()[0].replace('(', '')}.csv")

fig.tight_layout()
fig.savefig(OUT / "01_skeleton_gallery.png", dpi=120)
print(f"wrote {OUT / '01_skeleton_gallery.png'}")
