"""Pure-numpy implementations of the hot kernels.

These are the fallback twins of the compiled routines in ``_native``:
batched separable cubic interpolation of complex fields and a batched
complex tridiagonal (Thomas) solver. Both backends implement the same
stencils so results agree to roundoff.
"""

import numpy as np

BACKEND = "python"


def _lagrange4(u):
    """Cubic Lagrange weights for nodes 0,1,2,3 evaluated at u (shape (4, m)).

    Exact 0/1 weights when u is an integer node, so on-grid queries
    reproduce stored values bit-for-bit.
    """
    w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
    w1 = u * (u - 2.0) * (u - 3.0) / 2.0
    w2 = -u * (u - 1.0) * (u - 3.0) / 2.0
    w3 = u * (u - 1.0) * (u - 2.0) / 6.0
    return np.stack([w0, w1, w2, w3])


def _stencil(n, lo, h, periodic, xq):
    """4-point stencil indices (4, m) and local coordinates u (m,)."""
    s = (np.asarray(xq, dtype=np.float64) - lo) / h
    if periodic:
        s = np.mod(s, n)
        i1 = np.minimum(np.floor(s).astype(np.int64), n - 1)
        start = i1 - 1
        idx = np.stack([np.mod(start + k, n) for k in range(4)])
    else:
        i1 = np.clip(np.floor(s).astype(np.int64), 0, n - 2)
        start = np.clip(i1 - 1, 0, n - 4)
        idx = np.stack([start + k for k in range(4)])
    return idx, s - start


def interp_cubic_1d(values, lo, h, periodic, xq):
    """Evaluate a gridded complex field at arbitrary points by cubic
    Lagrange interpolation. Caller guarantees in-range xq on boxed axes."""
    values = np.ascontiguousarray(values, dtype=np.complex128)
    idx, u = _stencil(values.shape[0], lo, h, periodic, xq)
    w = _lagrange4(u)
    return np.einsum("km,km->m", w, values[idx])


def interp_cubic_2d(values, lo0, h0, per0, lo1, h1, per1, xq, yq):
    """Separable bicubic interpolation of a 2-d complex field at point
    pairs (xq[j], yq[j])."""
    values = np.ascontiguousarray(values, dtype=np.complex128)
    idx0, u0 = _stencil(values.shape[0], lo0, h0, per0, xq)
    idx1, u1 = _stencil(values.shape[1], lo1, h1, per1, yq)
    w0 = _lagrange4(u0)
    w1 = _lagrange4(u1)
    out = np.zeros(np.shape(xq), dtype=np.complex128)
    for a in range(4):
        row = np.zeros_like(out)
        for b in range(4):
            row += w1[b] * values[idx0[a], idx1[b]]
        out += w0[a] * row
    return out


def thomas_solve(dl, d, du, rhs):
    """Solve a batch of complex tridiagonal systems by the Thomas algorithm.

    All arguments have shape (batch, n); dl[:, 0] and du[:, -1] are ignored.
    The systems must be diagonally well-behaved (Crank-Nicolson matrices are).
    """
    dl = np.asarray(dl, dtype=np.complex128)
    d = np.asarray(d, dtype=np.complex128)
    du = np.asarray(du, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    b, n = rhs.shape
    cp = np.empty((b, n), dtype=np.complex128)
    xp = np.empty((b, n), dtype=np.complex128)
    cp[:, 0] = du[:, 0] / d[:, 0]
    xp[:, 0] = rhs[:, 0] / d[:, 0]
    for i in range(1, n):
        denom = d[:, i] - dl[:, i] * cp[:, i - 1]
        cp[:, i] = du[:, i] / denom
        xp[:, i] = (rhs[:, i] - dl[:, i] * xp[:, i - 1]) / denom
    x = np.empty((b, n), dtype=np.complex128)
    x[:, n - 1] = xp[:, n - 1]
    for i in range(n - 2, -1, -1):
        x[:, i] = xp[:, i] - cp[:, i] * x[:, i + 1]
    return x
