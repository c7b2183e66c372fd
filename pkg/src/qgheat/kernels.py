"""Heat kernels: spectral sums on meshed graphs and closed forms on intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .eigen import SpectralData
from .errors import GraphError, MeshError
from .extrapolate import LimitEstimate, exponential_limit

__all__ = [
    "ClosedFormKernel",
    "closed_form_eval",
    "dirichlet_center_deficit",
    "heat_content_dirichlet",
    "heat_content_deficit",
    "kernel_matrix",
    "spectral_kernel",
    "k0_eval",
    "k_eval",
    "sandwich_bounds",
    "stochastic_mass",
    "diagonal_bound_constant",
    "diagonal_limit",
    "closed_form_diagonal_limit",
    "check_mesh_floor",
    "MESH_FLOOR",
    "WEYL_CONSTANT_1D",
]

WEYL_CONSTANT_1D = 1.0 / math.sqrt(4.0 * math.pi)

# spectral sums on a mesh only represent the continuum kernel for t >= MESH_FLOOR * h^2
MESH_FLOOR = 10.0

# Gaussian / exponential terms below this are dropped
_TAIL = 1e-16
_LOG_TAIL = math.log(1.0 / _TAIL)

VARIANTS = ("free-line", "neumann-interval", "dirichlet-interval")


def _gauss(z, t):
    return np.exp(-np.square(z) / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


def _check_t(t: float) -> float:
    t = float(t)
    if not (math.isfinite(t) and t > 0):
        raise ValueError(f"t must be positive, got {t!r}")
    return t


@dataclass(frozen=True)
class ClosedFormKernel:
    """Explicit heat kernel of ``-d^2/dx^2`` on a line or interval.

    ``neumann-interval`` lives on ``[0, a]``; ``dirichlet-interval`` on
    ``[-a, a]`` (``a`` is the half-width).  ``method="auto"`` uses image
    sums for ``t <= a^2/pi`` and the eigenfunction series above.
    """

    variant: str
    a: float = 1.0
    method: str = "auto"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.method not in ("auto", "images", "series"):
            raise ValueError(f"unknown evaluation method {self.method!r}")
        if self.variant != "free-line" and not (math.isfinite(self.a) and self.a > 0):
            raise ValueError("interval size must be positive")

    @property
    def crossover(self) -> float:
        return self.a**2 / math.pi

    @property
    def domain(self) -> tuple[float, float]:
        if self.variant == "free-line":
            return -math.inf, math.inf
        if self.variant == "neumann-interval":
            return 0.0, self.a
        return -self.a, self.a

    def use_images(self, t: float) -> bool:
        if self.method == "auto":
            return t <= self.crossover
        return self.method == "images"

    def __call__(self, t, x, y):
        return closed_form_eval(self, t, x, y)


def _images_count(t: float, period: float) -> int:
    # reflections up to distance sqrt(4 t log(1/tail)) beyond the domain
    return int(math.ceil(math.sqrt(4.0 * t * _LOG_TAIL) / period)) + 2


def _series_count(t: float, rate: float) -> int:
    # exp(-rate n^2 t) < tail
    return int(math.ceil(math.sqrt(_LOG_TAIL / (rate * t)))) + 1


def _neumann_images(t, x, y, a):
    period = 2.0 * a
    m = np.arange(-_images_count(t, period), _images_count(t, period) + 1)
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    return np.sum(_gauss(x - y + period * m, t) + _gauss(x + y + period * m, t), axis=-1)


def _neumann_series(t, x, y, a):
    n = np.arange(1, _series_count(t, (math.pi / a) ** 2) + 1)
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    k = math.pi * n / a
    terms = np.exp(-(k**2) * t) * np.cos(k * x) * np.cos(k * y)
    return 1.0 / a + (2.0 / a) * np.sum(terms, axis=-1)


def _dirichlet_images(t, x, y, a):
    length = 2.0 * a
    period = 2.0 * length
    m = np.arange(-_images_count(t, period), _images_count(t, period) + 1)
    u = np.asarray(x, dtype=float)[..., None] + a
    v = np.asarray(y, dtype=float)[..., None] + a
    return np.sum(_gauss(u - v + period * m, t) - _gauss(u + v + period * m, t), axis=-1)


def _dirichlet_series(t, x, y, a):
    length = 2.0 * a
    n = np.arange(1, _series_count(t, (math.pi / length) ** 2) + 1)
    u = np.asarray(x, dtype=float)[..., None] + a
    v = np.asarray(y, dtype=float)[..., None] + a
    k = math.pi * n / length
    return np.sum(np.exp(-(k**2) * t) * np.sin(k * u) * np.sin(k * v), axis=-1) / a


def closed_form_eval(kernel: ClosedFormKernel, t, x, y):
    """Kernel value(s); ``x`` and ``y`` broadcast against each other."""
    t = _check_t(t)
    lo, hi = kernel.domain
    xa, ya = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any((xa < lo) | (xa > hi)) or np.any((ya < lo) | (ya > hi)):
        raise GraphError(f"point outside kernel domain [{lo}, {hi}]")
    if kernel.variant == "free-line":
        out = _gauss(xa - ya, t)
    elif kernel.variant == "neumann-interval":
        f = _neumann_images if kernel.use_images(t) else _neumann_series
        out = f(t, xa, ya, kernel.a)
    else:
        f = _dirichlet_images if kernel.use_images(t) else _dirichlet_series
        out = f(t, xa, ya, kernel.a)
    return float(out) if np.ndim(out) == 0 else out


def dirichlet_center_deficit(a: float, t: float, log: bool = False) -> float:
    """``1 - (4 pi t)^1/2 K_a(t, 0, 0)`` for the Dirichlet interval ``(-a, a)``.

    Small ``t`` uses the image sum ``2 sum_{m>=1} (-1)^(m+1) exp(-m^2 a^2/t)``
    in factored form, so ``log=True`` stays finite long after the deficit
    itself underflows.
    """
    t = _check_t(t)
    q = a * a / t
    if t <= a * a / math.pi:
        m = np.arange(2, int(math.ceil(math.sqrt(_LOG_TAIL / q + 1.0))) + 2)
        rest = float(np.sum((-1.0) ** (m + 1) * np.exp(-(m * m - 1.0) * q)))
        log_def = math.log(2.0) - q + math.log1p(rest)
        return log_def if log else math.exp(log_def)
    val = 1.0 - math.sqrt(4.0 * math.pi * t) * float(_dirichlet_series(t, 0.0, 0.0, a))
    if log:
        return math.log(val) if val > 0 else -math.inf
    return val


def heat_content_deficit(a: float, t: float, log: bool = False) -> float:
    """``1 - int_{-a}^{a} K_a(t, 0, x) dx``, integrated term by term.

    Small ``t``: ``2 sum_{k>=0} (-1)^k erfc((2k+1) z)`` with ``z = a/(2 sqrt t)``,
    evaluated through ``erfcx`` so the logarithm survives underflow.
    Large ``t``: ``1 - (4/pi) sum_{n odd} (-1)^((n-1)/2) exp(-(n pi/2a)^2 t)/n``.
    """
    t = _check_t(t)
    z = a / (2.0 * math.sqrt(t))
    if t <= a * a / math.pi:
        kmax = int(math.ceil((math.sqrt(_LOG_TAIL) / z - 1.0) / 2.0)) + 2
        k = np.arange(1, max(kmax, 1) + 1)
        w = (2 * k + 1) * z
        ratios = special.erfcx(w) / special.erfcx(z) * np.exp(z * z - w * w)
        rest = float(np.sum((-1.0) ** k * ratios))
        log_def = math.log(2.0) + math.log(special.erfcx(z)) - z * z + math.log1p(rest)
        return log_def if log else math.exp(log_def)
    n = np.arange(1, 2 * _series_count(t, (math.pi / (2.0 * a)) ** 2) + 2, 2)
    signs = np.where(((n - 1) // 2) % 2 == 0, 1.0, -1.0)
    content = 4.0 / math.pi * float(
        np.sum(signs * np.exp(-((n * math.pi / (2.0 * a)) ** 2) * t) / n)
    )
    val = 1.0 - content
    if log:
        return math.log(val) if val > 0 else -math.inf
    return val


def heat_content_dirichlet(a: float, t: float) -> float:
    """``int_{-a}^{a} K_a(t, 0, x) dx``: probability of not yet having hit ``+-a``."""
    if not (math.isfinite(a) and a > 0):
        raise ValueError("half-width must be positive")
    return 1.0 - heat_content_deficit(a, t)


# ---------------------------------------------------------------------------
# spectral kernels on meshes


def kernel_matrix(sd: SpectralData, t: float) -> np.ndarray:
    """Nodal kernel ``K(t, x_i, x_j) = sum_k exp(-lam_k t) phi_k(x_i) phi_k(x_j)``."""
    t = _check_t(t)
    phi = sd.nodal()
    return (phi * np.exp(-sd.values * t)) @ phi.T


def _rows(sd: SpectralData, points) -> np.ndarray:
    return np.array([sd.interpolation_row(p) for p in points])


def spectral_kernel(sd: SpectralData, t: float, x, y) -> float:
    t = _check_t(t)
    phi = sd.nodal()
    fx = sd.interpolation_row(x) @ phi
    fy = sd.interpolation_row(y) @ phi
    return float(np.sum(np.exp(-sd.values * t) * fx * fy))


def spectral_kernel_batch(sd: SpectralData, t: float, xs, ys) -> np.ndarray:
    """``K(t, xs[i], ys[j])`` for point lists ``xs``, ``ys``."""
    t = _check_t(t)
    phi = sd.nodal()
    fx = _rows(sd, xs) @ phi
    fy = _rows(sd, ys) @ phi
    return (fx * np.exp(-sd.values * t)) @ fy.T


def k0_eval(sd: SpectralData, t: float, x, y) -> float:
    """Heat kernel of the free operator (``kind='h0'``) at ``(t, x, y)``."""
    if sd.kind != "h0":
        raise ValueError(f"k0_eval needs an h0 spectrum, got {sd.kind!r}")
    return spectral_kernel(sd, t, x, y)


def k_eval(sd: SpectralData, t: float, x, y) -> float:
    """Heat kernel of ``H0 + V`` (``kind='h'``) at ``(t, x, y)``."""
    if sd.kind != "h":
        raise ValueError(f"k_eval needs an h spectrum, got {sd.kind!r}")
    return spectral_kernel(sd, t, x, y)


def sandwich_bounds(k0_value: float, v_sup: float, t: float) -> tuple[float, float]:
    """``(exp(-|V| t) K0, exp(|V| t) K0)``: the bracket for ``K``."""
    return math.exp(-v_sup * t) * k0_value, math.exp(v_sup * t) * k0_value


def stochastic_mass(sd: SpectralData, t: float) -> np.ndarray:
    """``sum_y w(y) K(t, x, y)`` at every node ``x``."""
    return kernel_matrix(sd, t) @ sd.weights


def check_mesh_floor(sd: SpectralData, t_values) -> None:
    h = sd.operator.h
    if h is None:
        return
    floor = MESH_FLOOR * h * h
    bad = [t for t in np.atleast_1d(t_values) if t < floor * (1.0 - 1e-12)]
    if bad:
        raise MeshError(
            f"t={min(bad):.3e} below the mesh floor {MESH_FLOOR:g} h^2 = {floor:.3e}"
        )


def diagonal_bound_constant(sd: SpectralData, t_grid) -> float:
    """``max t^(d/2) K(t, x, x)`` over every node and every ``t`` in the grid."""
    check_mesh_floor(sd, t_grid)
    phi2 = np.square(sd.nodal())
    best = 0.0
    for t in t_grid:
        diag = phi2 @ np.exp(-sd.values * t)
        best = max(best, float(t ** (sd.d / 2.0) * np.max(diag)))
    return best


def diagonal_limit(sd: SpectralData, x, t_grid, return_estimate: bool = False):
    """Extrapolated ``lim_{t->0} t^(d/2) K(t, x, x)`` at a non-vertex point."""
    g = sd.mesh.graph
    if g.vertex_at(x) is not None:
        raise GraphError("diagonal limit undefined at vertices (exceptional set)")
    ts = np.asarray(t_grid, dtype=float)
    check_mesh_floor(sd, ts)
    vals = [t ** (sd.d / 2.0) * spectral_kernel(sd, t, x, x) for t in ts]
    est = exponential_limit(ts, vals)
    return est if return_estimate else est.value


def closed_form_diagonal_limit(
    kernel: ClosedFormKernel, x: float, t_grid, return_estimate: bool = False
):
    ts = np.asarray(t_grid, dtype=float)
    vals = [math.sqrt(t) * closed_form_eval(kernel, t, x, x) for t in ts]
    est: LimitEstimate = exponential_limit(ts, vals)
    return est if return_estimate else est.value
