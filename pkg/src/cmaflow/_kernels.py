"""Optional numba-fused kernels for the wide-stencil hot path.

The numpy implementation in operator.py is the reference; these kernels
compute the same arithmetic in a single fused pass per array, which matters
on the ~10^6-node grids of the n=2 runs where the stepping loop is memory
bound.  Everything degrades gracefully to the numpy path when numba is
unavailable; equality of the two paths is asserted in the test suite.
"""

from __future__ import annotations

import numpy as np

try:
    import numba as _nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _nb = None
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @_nb.njit(cache=True, fastmath=False)
    def hess4(vals, i0, i1, i2, i3, ic, inv4h2, out):
        """4-point directional curvature for a lattice direction.

        out[k] = (vals[i0[k]] + ... + vals[i3[k]] - 4 vals[ic[k]]) / (4 h^2),
        with inv4h2 = 1 / (4 h^2) precomputed by the caller.
        """
        for k in range(out.size):
            out[k] = (vals[i0[k]] + vals[i1[k]] + vals[i2[k]] + vals[i3[k]]
                      - 4.0 * vals[ic[k]]) * inv4h2

    @_nb.njit(cache=True, fastmath=False)
    def ma_combine(D, penalty, out):
        """min over frames of prod_j max(D_j, 0) - penalty * sum_j max(-D_j, 0)."""
        K, n, N = D.shape
        for j in range(N):
            best = np.inf
            for k in range(K):
                pos = 1.0
                neg = 0.0
                for m in range(n):
                    d = D[k, m, j]
                    if d > 0.0:
                        pos *= d
                    else:
                        pos *= 0.0
                        neg -= d
                v = pos - penalty * neg
                if v < best:
                    best = v
            out[j] = best

else:  # pragma: no cover - exercised only without numba
    hess4 = None
    ma_combine = None
