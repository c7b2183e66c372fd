"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis as an
from . import kernels as hk
from .eigen import eigendecompose
from .errors import GraphError, MeshError, NumericalError
from .graph import (
    BUILTINS,
    PointOnGraph,
    PotentialSpec,
    builtin_graph,
    parse_graph_file,
    parse_potential_term,
)
from .mesh import assemble_h, assemble_h0

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    graph: str | None = None
    builtin: str | None = None
    potential: str | None = None
    h: float = 0.01
    neigs: int = 60
    tmin: float = 1e-3
    tmax: float = 1e-1
    tpoints: int = 8
    smin: float = -2.0
    smax: float = 2.0
    spoints: int = 41
    d: int = 1
    out: str | None = None
    seed: int = 0
    t: float = 0.1
    x: str | None = None
    y: str | None = None

    def __post_init__(self):
        if (self.graph is None) == (self.builtin is None):
            raise UsageError("give exactly one of --graph or --builtin")
        if not (math.isfinite(self.h) and self.h > 0):
            raise UsageError("--h must be positive")
        if self.neigs < 1:
            raise UsageError("--neigs must be positive")
        if not (0 < self.tmin < self.tmax):
            raise UsageError("need 0 < --tmin < --tmax")
        if self.tpoints < 1 or self.spoints < 2:
            raise UsageError("grids must be non-empty (--spoints >= 2)")
        if not self.smin < self.smax:
            raise UsageError("need --smin < --smax")
        if self.d != 1:
            raise UsageError("metric graphs have Weyl dimension 1; --d must be 1")

    def t_grid(self) -> np.ndarray:
        return np.geomspace(self.tmax, self.tmin, self.tpoints)

    def s_grid(self) -> np.ndarray:
        s = np.linspace(self.smin, self.smax, self.spoints)
        if not np.any(s == 0.0):
            s = np.sort(np.append(s, 0.0))
        return s


def _load(cfg: RunConfig):
    if cfg.builtin is not None:
        g = builtin_graph(cfg.builtin)
        pot = PotentialSpec.zero(g)
    else:
        try:
            with open(cfg.graph) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read graph file: {exc}") from None
        g, pot = parse_graph_file(text)
    if cfg.potential is not None:
        pot = PotentialSpec.uniform(g, parse_potential_term(cfg.potential.split()))
    return g, pot


def _spectra(cfg: RunConfig, vectors: bool):
    g, pot = _load(cfg)
    op0 = assemble_h0(g, cfg.h)
    sd0 = eigendecompose(op0, vectors=vectors)
    sdh = sd0 if pot.is_zero else eigendecompose(assemble_h(g, pot, cfg.h), vectors=vectors)
    return g, pot, sd0, sdh


def _emit(cfg: RunConfig, header, rows):
    if cfg.out is None:
        an.write_csv(header, rows, sys.stdout)
    else:
        an.write_csv(header, rows, cfg.out)


def cmd_spectrum(cfg: RunConfig) -> int:
    _, _, sd0, sdh = _spectra(cfg, vectors=False)
    n = min(cfg.neigs, sd0.n)
    rows = [(k + 1, float(sd0.values[k]), float(sdh.values[k])) for k in range(n)]
    _emit(cfg, ("n", "lambda_n", "mu_n"), rows)
    return EXIT_OK


def cmd_sigma(cfg: RunConfig) -> int:
    _, pot, sd0, sdh = _spectra(cfg, vectors=False)
    sp = an.SpectrumPair.from_spectra(sd0, sdh, pot)
    curve = an.sigma_of_t(sp, cfg.t_grid())
    _emit(cfg, ("t", "sigma"), curve.rows())
    msg = f"sigma limit (t -> 0): {curve.limit:.10g} +- {curve.uncertainty:.3g}"
    if curve.expected_limit is not None:
        msg += f"; a * int V = {curve.expected_limit:.10g}"
    print(msg, file=sys.stderr)
    return EXIT_OK


def cmd_residual(cfg: RunConfig) -> int:
    _, pot, sd0, sdh = _spectra(cfg, vectors=True)
    rep = an.trace_expansion_residual(sd0, sdh, pot, cfg.t_grid())
    _emit(cfg, ("t", "trace0", "traceH", "first_order_term", "rho"), rep.rows())
    if rep.fit is not None:
        lo, hi = rep.fit.band()
        print(f"rho exponent: {rep.fit.exponent:.4f} (band {lo:.4f} .. {hi:.4f})", file=sys.stderr)
    return EXIT_OK


def cmd_ground(cfg: RunConfig) -> int:
    g, pot = _load(cfg)
    curve = an.ground_state_curve(g, pot, cfg.s_grid(), cfg.h)
    _emit(cfg, ("s", "F"), curve.rows())
    print(
        f"concave: {curve.concave}; F'(0) forward difference {curve.slope_forward:.8g}, "
        f"|X|^-1 int V = {curve.slope_expected:.8g}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    g, pot, sd0, sdh = _spectra(cfg, vectors=True)
    sp = an.SpectrumPair.from_spectra(sd0, sdh, pot)
    n = min(cfg.neigs, sp.n)
    amb = an.ambarzumyan_verdict(sp.truncated(n))
    pre = an.premain_verdict(sp, pot.integral())
    lines = [amb.report(), pre.report()]

    # randomized kernel sandwich self-test
    rng = np.random.default_rng(cfg.seed)
    floor = hk.MESH_FLOOR * sd0.operator.h ** 2
    worst = math.inf
    for _ in range(10):
        t = float(np.exp(rng.uniform(math.log(floor), 0.0)))
        e1, e2 = (g.edges[int(rng.integers(len(g.edges)))] for _ in range(2))
        x = PointOnGraph(e1.id, float(rng.uniform(0.0, e1.length)))
        y = PointOnGraph(e2.id, float(rng.uniform(0.0, e2.length)))
        k0 = hk.spectral_kernel(sd0, t, x, y)
        k = hk.spectral_kernel(sdh, t, x, y)
        lo, hi = hk.sandwich_bounds(k0, pot.sup_norm, t)
        worst = min(worst, k - lo, hi - k)
    status = "pass" if worst >= -1e-6 else "fail"
    lines.append(
        f"[{status.upper()}] sandwich: 10 random (t, x, y) samples (seed {cfg.seed}), "
        f"minimum slack {worst:.3e}"
    )
    text = "\n".join(lines) + "\n"
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    return EXIT_OK


def _point(text: str | None, g) -> PointOnGraph:
    if text is None:
        e = g.edges[0]
        return PointOnGraph(e.id, 0.5 * e.length)
    eid, sep, s = text.partition(":")
    if not sep:
        raise UsageError(f"points are written EDGE:S, got {text!r}")
    try:
        p = PointOnGraph(eid, float(s))
    except ValueError:
        raise UsageError(f"bad arclength in {text!r}") from None
    g.check_point(p)
    return p


def cmd_kernel(cfg: RunConfig) -> int:
    g, pot, sd0, sdh = _spectra(cfg, vectors=True)
    x, y = _point(cfg.x, g), _point(cfg.y, g)
    t = cfg.t
    hk.check_mesh_floor(sd0, [t])
    k0 = hk.k0_eval(sd0, t, x, y)
    k = k0 if sdh is sd0 else hk.k_eval(sdh, t, x, y)
    lo, hi = hk.sandwich_bounds(k0, pot.sup_norm, t)
    out = [
        f"t = {t!r}, x = {x.edge}:{x.s!r}, y = {y.edge}:{y.s!r}",
        f"K0 spectral        = {k0:.12g}",
        f"K  spectral        = {k:.12g}",
        f"sandwich lower     = {lo:.12g}",
        f"sandwich upper     = {hi:.12g}",
        f"bracketed          = {lo - 1e-6 <= k <= hi + 1e-6}",
        f"1/|X|              = {1.0 / g.volume:.12g}",
    ]
    if len(g.edges) == 1 and not g.edges[0].is_loop:
        e = g.edges[0]
        cf = hk.ClosedFormKernel("neumann-interval", e.length)
        kc = hk.closed_form_eval(cf, t, x.s, y.s)
        out.insert(2, f"K0 closed form     = {kc:.12g}  (|diff| = {abs(kc - k0):.3e})")
    text = "\n".join(out) + "\n"
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sigma": cmd_sigma,
    "check": cmd_check,
    "kernel": cmd_kernel,
    "residual": cmd_residual,
    "ground": cmd_ground,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--graph", metavar="PATH", help="GRAPH file")
    src.add_argument("--builtin", choices=sorted(BUILTINS), help="builtin graph")
    common.add_argument(
        "--potential", metavar="SPEC",
        help="potential on every edge, e.g. 'const 1', 'cos amp=1 mode=1', "
        "'bump amp=1 center=0.5 width=0.1'",
    )
    common.add_argument("--h", type=float, default=0.01, help="target mesh spacing")
    common.add_argument("--neigs", type=int, default=60, help="eigenvalues to report or check")
    common.add_argument("--tmin", type=float, default=1e-3)
    common.add_argument("--tmax", type=float, default=1e-1)
    common.add_argument("--tpoints", type=int, default=8)
    common.add_argument("--smin", type=float, default=-2.0)
    common.add_argument("--smax", type=float, default=2.0)
    common.add_argument("--spoints", type=int, default=41)
    common.add_argument("--d", type=int, default=1, help="Weyl dimension (1 for graphs)")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="qgheat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="CSV of n, lambda_n, mu_n")
    sub.add_parser("sigma", parents=[common], help="CSV of t, sigma(t) and its limit")
    sub.add_parser("check", parents=[common], help="inverse-spectral verdict report")
    sub.add_parser("residual", parents=[common], help="CSV of the trace-expansion residual")
    sub.add_parser("ground", parents=[common], help="CSV of the ground-state curve F(s)")
    kp = sub.add_parser("kernel", parents=[common], help="heat-kernel values and bounds")
    kp.add_argument("--t", type=float, default=0.1)
    kp.add_argument("--x", metavar="EDGE:S")
    kp.add_argument("--y", metavar="EDGE:S")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
        return COMMANDS[cfg.command](cfg)
    except (UsageError, GraphError, MeshError) as exc:
        print(f"qgheat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"qgheat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
