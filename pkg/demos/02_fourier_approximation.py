"""
Fourier factorization of SE(2) relative rotations
=================================================

The rotation by the direction to a key, seen from a query, is not separable
in query and key. Expanding it in a truncated Fourier basis over the query
heading makes it separable. This walks through the coefficients and the
approximation error as the basis grows.
"""

# %%
import numpy as np

from se2attn import fourier as fr
from se2attn.geometry import IDENTITY

# Coefficients for a key two units along x. The leading ones are Bessel values.
c = fr.coefficients(2.0, 0.0, 12, fr.Axis.X)
np.set_printoptions(precision=6, suppress=True)
print("gamma :", c.gamma)
print("lambda:", c.lambda_)

# %%
# How well does the truncated series reproduce cos(u_x(z))?
curve = fr.target_curve(2.0, 0.0, 12, grid=361)
print("max |exact - approx| over the circle:", np.max(np.abs(curve.exact - curve.approx)))

# %%
# Query and key at the same pose: the factorization is exact for any F.
for F in (1, 4, 12):
    print(F, fr.approx_error(IDENTITY, IDENTITY, F))

# %%
# Mean spectral-norm error for random keys within radius r of a query at the origin.
# Larger radii need more basis functions to reach half-precision accuracy.
print(f"{'r':>4} {'F':>4} {'mean':>10}   (eps_fp16={fr.EPS_FP16:.1e}, eps_bf16={fr.EPS_BF16:.1e})")
for s in fr.error_sweep([2.0, 4.0, 8.0], [8, 12, 18, 28], samples=1000, seed=42):
    print(f"{s.radius:4g} {s.basis_size:4d} {s.mean_error:10.3e}")
