"""
Which encodings ignore the choice of world frame?
=================================================

Move every pose by the same rigid transform and check whether attention
outputs change.
"""

# %%
import math

import numpy as np

from se2attn.attention import apply_global_transform, random_batch, relative_attention_linear
from se2attn.encoding import EncodingConfig
from se2attn.geometry import Pose2

rng = np.random.default_rng(1)
shift = Pose2(30.0, -12.0, 0.0)
turn = Pose2(0.0, 0.0, math.pi / 4)


def change(cfg, batch, z):
    base = relative_attention_linear(batch, cfg).outputs
    moved = relative_attention_linear(apply_global_transform(batch, z), cfg).outputs
    return np.max(np.abs(moved - base))


# %%
# rope2d only sees translation differences, so rotating the world changes its output.
cfg = EncodingConfig.geometric("rope2d", 4)
batch = random_batch(cfg, 32, 32, rng)
print("rope2d  shift", change(cfg, batch, shift), " turn", change(cfg, batch, turn))

# %%
# The homogeneous representation is exactly invariant to both.
cfg = EncodingConfig.geometric("se2rep", 4)
batch = random_batch(cfg, 32, 32, rng)
print("se2rep  shift", change(cfg, batch, shift), " turn", change(cfg, batch, turn))

# %%
# The Fourier encoding is invariant only up to its truncation error, and that error
# depends on where the poses sit. Small moves barely register; a shift that pushes
# keys outside the radius the basis was sized for does.
cfg = EncodingConfig.geometric("se2fourier", 1, basis_size=12)
batch = random_batch(cfg, 32, 32, rng, radius=2.0, unit_norm=True)
for z in (turn, Pose2(0.5, 0.0, 0.0), shift):
    print(f"se2fourier {z}: {change(cfg, batch, z):.1e}")
