"""Dense symmetric eigensolver and the :class:`SpectralData` container.

The kernels (Householder reduction to tridiagonal form, then implicit-shift
QL) come from the compiled ``_eigen_core`` extension when it is built and
importable, otherwise from the numpy fallback ``_eigen_py``.  Set
``QGHEAT_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _eigen_py
from .errors import ConvergenceError, GraphError, NumericalError
from .mesh import DiscreteOperator

__all__ = [
    "BACKEND",
    "available_backends",
    "eigh",
    "eigendecompose",
    "SpectralData",
    "eigenfunction_at",
    "DEFAULT_MAX_DIM",
]

DEFAULT_MAX_DIM = 4096

# |lam_1| < PIN_EIG * ||A|| and ||v_1 - c|| < PIN_VEC  =>  snap to the exact null pair
PIN_EIG = 1e-10
PIN_VEC = 1e-6

_BACKENDS = {"python": _eigen_py}
try:
    from . import _eigen_core

    _BACKENDS["compiled"] = _eigen_core
except ImportError:  # extension not built
    pass

if os.environ.get("QGHEAT_PURE_PYTHON", "") not in ("", "0") or "compiled" not in _BACKENDS:
    BACKEND = "python"
else:
    BACKEND = "compiled"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _is_tridiagonal(a: np.ndarray) -> bool:
    n = a.shape[0]
    if n < 3:
        return True
    return not np.any(np.tril(a, -2))


def eigh(a, vectors: bool = True, backend: str | None = None, max_iter: int = 60):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns).

    ``a`` must be exactly symmetric.  Each eigenvector's largest-magnitude
    entry is made positive so repeated calls give identical output.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not symmetric")
    impl = _BACKENDS[backend or BACKEND]
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), (np.zeros((0, 0)) if vectors else None)
    if _is_tridiagonal(a):
        d = np.ascontiguousarray(np.diag(a))
        e = np.zeros(n)
        e[1:] = np.diag(a, -1)
        zt = np.eye(n) if vectors else None
    else:
        d, e, q = impl.tridiagonalize(np.ascontiguousarray(a), vectors)
        zt = np.ascontiguousarray(q.T) if vectors else None
    try:
        w, zt = impl.ql_implicit(d, e, zt, max_iter)
    except RuntimeError as exc:
        raise ConvergenceError(
            f"{exc}; matrix n={n}, max|a|={np.max(np.abs(a)):.3e}, "
            f"trace={np.trace(a):.6e}"
        ) from exc
    order = np.argsort(w, kind="stable")
    w = np.asarray(w)[order]
    if not vectors:
        return w, None
    z = np.ascontiguousarray(np.asarray(zt)[order].T)
    big = np.argmax(np.abs(z), axis=0)
    signs = np.where(z[big, np.arange(n)] < 0, -1.0, 1.0)
    z *= signs
    return w, z


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Ascending eigenvalues with eigenvectors in the ``W^1/2``-scaled basis.

    ``vectors[:, k]`` holds ``sqrt(w) * phi_k`` at the nodes, so
    ``phi_k = vectors[:, k] / sqrt(w)`` is normalized in the weighted
    inner product.  ``vectors`` is ``None`` for an eigenvalues-only solve.
    """

    values: np.ndarray
    vectors: np.ndarray | None
    operator: DiscreteOperator

    @property
    def kind(self) -> str:
        return self.operator.kind

    @property
    def mesh(self):
        return self.operator.mesh

    @property
    def weights(self) -> np.ndarray:
        return self.operator.weights

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.operator.d

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    def require_vectors(self) -> np.ndarray:
        if self.vectors is None:
            raise NumericalError("eigenvectors were not computed for this spectrum")
        return self.vectors

    def nodal(self) -> np.ndarray:
        """Eigenfunction values ``phi_k(x_i)`` as an ``(n, n)`` array."""
        return self.require_vectors() / np.sqrt(self.weights)[:, None]

    def eigenfunction_at(self, k: int, p) -> float:
        return eigenfunction_at(self, k, p)

    def interpolation_row(self, p) -> np.ndarray:
        """Row ``r`` with ``r @ nodal()[:, k] == phi_k(p)``."""
        i, j, theta = self.mesh.locate(p)
        row = np.zeros(self.n)
        if i >= 0:
            row[i] += 1.0 - theta
        if j >= 0 and theta > 0.0:
            row[j] += theta
        return row


def _pin_ground_state(w: np.ndarray, z: np.ndarray | None, op: DiscreteOperator):
    norm = max(abs(w[0]), abs(w[-1]))
    if abs(w[0]) >= PIN_EIG * max(norm, 1e-300):
        return w, z
    if z is None:
        w[0] = 0.0
        return w, z
    u = np.sqrt(op.weights)
    u = u / np.linalg.norm(u)
    v0 = z[:, 0]
    if np.linalg.norm(v0 - np.sign(v0 @ u) * u) >= PIN_VEC:
        return w, z
    w[0] = 0.0
    z[:, 0] = u
    rest = z[:, 1:]
    rest -= np.outer(u, u @ rest)
    rest /= np.linalg.norm(rest, axis=0)
    return w, z


def eigendecompose(
    op: DiscreteOperator,
    vectors: bool = True,
    max_dim: int = DEFAULT_MAX_DIM,
    backend: str | None = None,
) -> SpectralData:
    if op.n > max_dim:
        raise NumericalError(f"operator dimension {op.n} exceeds cap {max_dim}")
    w, z = eigh(op.matrix, vectors=vectors, backend=backend)
    if op.kind == "h0":
        w, z = _pin_ground_state(w, z, op)
    w.setflags(write=False)
    if z is not None:
        z.setflags(write=False)
    return SpectralData(w, z, op)


def eigenfunction_at(sd: SpectralData, k: int, p) -> float:
    """Value of the ``k``-th eigenfunction (``k = 1`` is the ground state) at ``p``.

    Between nodes the nodal values are interpolated linearly.
    """
    if not 1 <= k <= sd.n:
        raise IndexError(f"eigenfunction index {k} outside 1..{sd.n}")
    vec = sd.require_vectors()[:, k - 1]
    i, j, theta = sd.mesh.locate(p)
    sw = np.sqrt(sd.weights)
    val = 0.0
    if i >= 0:
        val += (1.0 - theta) * vec[i] / sw[i]
    if j >= 0 and theta > 0.0:
        val += theta * vec[j] / sw[j]
    if not math.isfinite(val):
        raise GraphError("point could not be located on the mesh")
    return float(val)
