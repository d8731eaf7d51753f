"""
Planar poses
============

Composition, inversion and relative poses in SE(2), plus the homogeneous
matrix view that the exact SE(2) encoding is built on.
"""

# %%
import math

import numpy as np

from se2attn import geometry as g

a = g.Pose2(1.0, 2.0, math.pi / 3)
b = g.Pose2(-0.5, 4.0, 3 * math.pi / 4)
print("a      =", a)
print("b      =", b)
print("a @ b  =", a @ b)

# %%
# Headings are stored wrapped to (-pi, pi]; a full turn changes nothing.
print(g.Pose2(0, 0, 5 * math.pi).theta, g.wrap_angle(-math.pi))

# %%
# The relative pose a^-1 b is what the attention kernels consume.
rel = g.relative(a, b)
print("a^-1 b =", rel)
print("a @ rel recovers b:", np.allclose((a @ rel).as_array(), b.as_array()))

# %%
# Same thing through 3x3 matrices.
H = np.linalg.inv(g.homogeneous(a)) @ g.homogeneous(b)
print(np.allclose(H, g.homogeneous(rel)))

# %%
# A global transform moves both poses but leaves their relative pose alone.
z = g.Pose2(40.0, -13.0, 1.1)
rel_moved = g.relative(z.inverse() @ a, z.inverse() @ b)
print("invariant under z:", np.allclose(rel_moved.as_array(), rel.as_array()))
