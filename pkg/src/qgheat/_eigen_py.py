"""Pure-Python (numpy) Householder tridiagonalization and implicit QL.

Same algorithms and conventions as the compiled ``_eigen_core`` module;
used when the extension is not built.  The rank-2 updates of the
reduction are vectorized; the QL sweeps are scalar Python loops, so this
backend is only practical for a few hundred unknowns.
"""

import math

import numpy as np

_EPS = 2.0**-52


def tridiagonalize(a, vectors=True):
    """Reduce symmetric ``a`` to tridiagonal form ``Q^T a Q``.

    Returns ``(d, e, q)``: diagonal, sub-diagonal stored in ``e[1:]`` with
    ``e[0] = 0``, and the orthogonal ``q`` (``None`` unless ``vectors``).
    Only the lower triangle of ``a`` is read.
    """
    v = np.array(a, dtype=float, order="C")
    n = v.shape[0]
    d = v[n - 1, :].copy()
    e = np.zeros(n)
    for i in range(n - 1, 0, -1):
        scale = np.abs(d[:i]).sum()
        h = 0.0
        if scale == 0.0:
            e[i] = d[i - 1]
            d[:i] = v[i - 1, :i]
            v[i, :i] = 0.0
            v[:i, i] = 0.0
        else:
            d[:i] /= scale
            h = float(d[:i] @ d[:i])
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h -= f * g
            d[i - 1] = f - g
            u = d[:i]
            v[:i, i] = u
            low = np.tril(v[:i, :i])
            ei = low @ u + low.T @ u - np.diag(low) * u
            ei /= h
            hh = float(ei @ u) / (h + h)
            ei -= hh * u
            v[:i, :i] -= np.tril(np.outer(ei, u) + np.outer(u, ei))
            e[:i] = ei
            d[:i] = v[i - 1, :i]
            v[i, :i] = 0.0
        d[i] = h
    if not vectors:
        diag = np.diag(v).copy()
        e[0] = 0.0
        return diag, e, None
    for i in range(n - 1):
        v[n - 1, i] = v[i, i]
        v[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            col = v[: i + 1, i + 1]
            dd = col / h
            g = col @ v[: i + 1, : i + 1]
            v[: i + 1, : i + 1] -= np.outer(dd, g)
        v[: i + 1, i + 1] = 0.0
    d = v[n - 1, :].copy()
    v[n - 1, :] = 0.0
    v[n - 1, n - 1] = 1.0
    e[0] = 0.0
    return d, e, v


def ql_implicit(d, e, zt=None, max_iter=60):
    """Eigenvalues of the tridiagonal ``(d, e)`` by implicit-shift QL.

    ``e`` follows the :func:`tridiagonalize` convention.  ``zt`` (rows are
    basis vectors) is rotated in place so its rows become eigenvectors.
    Returns ``(w, zt)`` unsorted.  Raises ``RuntimeError`` when an
    eigenvalue needs more than ``max_iter`` sweeps.
    """
    d = np.array(d, dtype=float)
    ee = np.array(e, dtype=float)
    n = d.shape[0]
    e = np.zeros(n)
    e[: n - 1] = ee[1:]
    f = 0.0
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1 and abs(e[m]) > _EPS * tst1:
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    raise RuntimeError(
                        f"QL iteration did not converge for eigenvalue {l} "
                        f"(d={d[l]!r}, e={e[l]!r}) after {max_iter} sweeps"
                    )
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2 :] -= h
                f += h
                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    if zt is not None:
                        zi1 = zt[i + 1].copy()
                        zt[i + 1] = s * zt[i] + c * zi1
                        zt[i] = c * zt[i] - s * zi1
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= _EPS * tst1:
                    break
        d[l] += f
        e[l] = 0.0
    return d, zt
