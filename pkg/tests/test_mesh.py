import math

import numpy as np
import pytest

from conftest import POTENTIALS, spectra
from oracles import equilateral_star_eigenvalues, star_eigenvalues
from qgheat.eigen import eigendecompose, eigh
from qgheat.errors import GraphError, MeshError
from qgheat.graph import (
    CombinatorialGraph,
    Constant,
    PointOnGraph,
    PotentialSpec,
    Sampled,
    builtin_graph,
    interval_graph,
    star_graph,
)
from qgheat.mesh import (
    assemble_combinatorial,
    assemble_dirichlet_interval,
    assemble_h,
    assemble_h0,
    build_mesh,
    node_potential,
)


@pytest.mark.parametrize("name", ["interval", "loop", "star3", "lasso"])
def test_weights_sum_to_volume(name):
    g = builtin_graph(name)
    mesh = build_mesh(g, 0.03)
    assert math.isclose(mesh.weights.sum(), g.volume, rel_tol=1e-13)
    assert np.all(mesh.weights > 0)


@pytest.mark.parametrize("name", ["interval", "loop", "star3", "lasso"])
def test_constant_null_vector(name):
    op = assemble_h0(builtin_graph(name), 0.05)
    r = np.sqrt(op.weights)
    assert np.max(np.abs(op.matrix @ r)) < 1e-9 * np.max(np.abs(op.matrix))


@pytest.mark.parametrize("name", ["interval", "star3", "lasso"])
def test_markov_structure(name):
    op = assemble_h0(builtin_graph(name), 0.05)
    a = op.matrix
    assert np.array_equal(a, a.T)
    off = a - np.diag(np.diag(a))
    assert np.all(off <= 0)
    assert np.all(np.diag(a) > 0)


def test_mesh_too_coarse():
    with pytest.raises(MeshError):
        build_mesh(star_graph((1.0, 0.1, 1.0)), 0.2)
    with pytest.raises(MeshError):
        build_mesh(interval_graph(), 1.0)


def test_mesh_spacing_is_at_most_target():
    g = star_graph((1.0, 0.7, 0.33))
    mesh = build_mesh(g, 0.05)
    for e in g.edges:
        assert mesh.edge_h[e.id] <= 0.05 * (1 + 1e-12)
        assert math.isclose(mesh.edge_h[e.id] * (len(mesh.edge_nodes[e.id]) - 1), e.length)


def test_vertex_nodes_shared():
    mesh = build_mesh(star_graph(), 0.1)
    starts = {int(mesh.edge_nodes[e][0]) for e in ("e1", "e2", "e3")}
    assert len(starts) == 1 and mesh.is_vertex_node(starts.pop())
    i, j, theta = mesh.locate(PointOnGraph("e2", 0.0))
    assert i == j and theta == 0.0


def test_locate_interpolation():
    mesh = build_mesh(interval_graph(), 0.1)
    i, j, theta = mesh.locate(PointOnGraph("e1", 0.25))
    assert math.isclose(theta, 0.5)
    assert j != i


def test_unit_interval_convergence_order():
    errs = []
    hs = [0.02, 0.01, 0.005]
    for h in hs:
        sd = eigendecompose(assemble_h0(interval_graph(), h), vectors=False)
        errs.append(abs(sd.values[1:4] - (math.pi * np.arange(1, 4)) ** 2))
    errs = np.array(errs)
    orders = np.log(errs[:-1] / errs[1:]) / np.log(2.0)
    assert np.all(np.abs(orders - 2.0) < 0.05)
    # leading coefficient pi^4 k^4 h^2 / 12
    k = np.arange(1, 4)
    assert np.allclose(errs[-1], (math.pi * k) ** 4 * 0.005**2 / 12.0, rtol=0.02)


def test_star_against_secular_equation():
    lengths = (1.0, math.sqrt(2.0), math.pi / 2.0)
    ref = star_eigenvalues(lengths, kmax=7.0)
    g = star_graph(lengths)
    sd = eigendecompose(assemble_h0(g, 2e-3), vectors=False)
    got = sd.values[1 : 1 + ref.size]
    assert np.allclose(got, ref, rtol=2e-4, atol=0)


def test_equilateral_star_multiplicities():
    ref = equilateral_star_eigenvalues(3, 1.0, 10)
    sd = spectra("star3", 0.005, vectors=False)[2]
    assert np.allclose(sd.values[:10], ref, rtol=1e-3, atol=1e-12)
    # pi^2/4 appears twice up to rounding
    assert abs(sd.values[1] - sd.values[2]) < 1e-9


def test_loop_double_eigenvalues():
    sd = spectra("loop", 0.01, vectors=False)[2]
    assert sd.values[0] == 0.0
    ref = (2 * math.pi * np.array([1, 1, 2, 2])) ** 2
    assert np.allclose(sd.values[1:5], ref, rtol=2e-3)


def test_dirichlet_interval_spectrum():
    a = 0.5
    op = assemble_dirichlet_interval(a, 1e-3)
    w, _ = eigh(op.matrix, vectors=False)
    ref = (math.pi * np.arange(1, 6) / (2 * a)) ** 2
    assert np.allclose(w[:5], ref, rtol=1e-4)
    assert op.mesh.locate(-a) == (-1, -1, 0.0)
    assert op.mesh.locate(a) == (-1, -1, 0.0)


def test_combinatorial_path3():
    cg = CombinatorialGraph.path(3, [0.0, 0.0, 0.0])
    op = assemble_combinatorial(cg)
    expected = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
    assert np.array_equal(op.matrix, expected)
    w, _ = eigh(op.matrix, vectors=False)
    assert np.allclose(w, [0.0, 1.0, 3.0], atol=1e-14)


def test_constant_potential_shifts_spectrum():
    g = builtin_graph("lasso")
    pot = PotentialSpec.uniform(g, Constant(0.5))
    lam = eigendecompose(assemble_h0(g, 0.02), vectors=False).values
    mu = eigendecompose(assemble_h(g, pot, 0.02), vectors=False).values
    assert np.allclose(mu - lam, 0.5, atol=1e-9)


@pytest.mark.parametrize("pot", sorted(POTENTIALS))
def test_node_potential_bounded_and_integrates(pot):
    g = builtin_graph("star3")
    spec = PotentialSpec.uniform(g, POTENTIALS[pot])
    mesh = build_mesh(g, 0.01)
    v = node_potential(spec, mesh)
    assert np.max(np.abs(v)) <= spec.sup_norm * (1 + 1e-14)
    assert abs(mesh.weights @ v - spec.integral()) < 1e-3 * max(spec.sup_norm, 1.0)


def test_sampled_potential_size_checked():
    g = interval_graph()
    mesh = build_mesh(g, 0.25)
    ok = PotentialSpec(g, {"e1": Sampled((0.0, 1.0, 2.0, 3.0, 4.0))})
    assert np.allclose(node_potential(ok, mesh), [0.0, 4.0, 1.0, 2.0, 3.0])
    bad = PotentialSpec(g, {"e1": Sampled((0.0, 1.0))})
    with pytest.raises(GraphError):
        node_potential(bad, mesh)


def test_operator_is_read_only():
    op = assemble_h0(interval_graph(), 0.1)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 1.0
