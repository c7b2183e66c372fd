import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import spectra
from oracles import neumann_interval_trace
from qgheat import analysis as an
from qgheat.errors import NumericalError, TruncationError
from qgheat.graph import (
    CombinatorialGraph,
    Constant,
    CosineMode,
    GaussianBump,
    PotentialSpec,
    builtin_graph,
    interval_graph,
)

A = 1.0 / math.sqrt(4.0 * math.pi)


# ---------------------------------------------------------------------------
# heat trace


def test_heat_trace_interval_theta_series():
    sd = spectra("interval", 0.001)[2]
    for t in (0.01, 0.1, 1.0):
        ref = neumann_interval_trace(t)
        # the mesh trace differs from the theta series by the discretization error
        assert abs(an.heat_trace(sd, t) - ref) < 2e-4 * ref


def test_heat_trace_exact_spectrum_oracle():
    lam = (math.pi * np.arange(4000)) ** 2
    for t in (1e-4, 1e-2, 1.0):
        assert math.isclose(an.trace_sum(lam, t), neumann_interval_trace(t), rel_tol=1e-13)


def test_heat_trace_large_t():
    sd = spectra("star3", 0.02)[2]
    assert math.isclose(an.heat_trace(sd, 100.0), 1.0, rel_tol=1e-12)


@pytest.mark.parametrize("name", ["interval", "loop", "star3", "lasso"])
def test_mercer_consistency(name):
    sd0, sdh = spectra(name, 0.02, "bump")[2:]
    for t in (0.004, 0.05, 0.5):
        an.heat_trace(sd0, t)
        an.heat_trace(sdh, t)


def test_heat_trace_errors():
    sd = spectra("interval", 0.02)[2]
    with pytest.raises(ValueError):
        an.heat_trace(sd, 0.0)


# ---------------------------------------------------------------------------
# SpectrumPair and sigma


def test_spectrum_pair_invariants():
    with pytest.raises(ValueError, match="exactly 0"):
        an.SpectrumPair(np.array([1e-9, 1.0]), np.array([0.0, 1.0]), 1.0)
    with pytest.raises(ValueError, match="ascending"):
        an.SpectrumPair(np.array([0.0, 2.0, 1.0]), np.array([0.0, 1.0, 2.0]), 1.0)
    with pytest.raises(ValueError):
        an.SpectrumPair(np.array([0.0, 1.0]), np.array([0.0]), 1.0)


def test_sigma_zero_potential():
    sd0 = spectra("star3", 0.02)[2]
    sp = an.SpectrumPair.from_spectra(sd0, sd0, PotentialSpec.zero(builtin_graph("star3")))
    curve = an.sigma_of_t(sp, np.geomspace(0.1, 0.004, 6))
    assert np.all(curve.sigma == 0.0)
    assert curve.limit == 0.0


def test_sigma_grid_sorted_decreasing():
    sp = an.SpectrumPair.interval_constant(0.3, n=2000)
    curve = an.sigma_of_t(sp, [1e-3, 1e-1, 1e-2, 3e-2])
    assert np.all(np.diff(curve.t) < 0)
    assert np.all(np.isfinite(curve.sigma))


def test_sigma_constant_closed_form():
    c = 0.7
    sp = an.SpectrumPair.interval_constant(c, n=4000)
    ts = 0.1 * 0.5 ** np.arange(10)
    curve = an.sigma_of_t(sp, ts)
    exact = ts ** -0.5 * -np.expm1(-c * ts) * np.array([neumann_interval_trace(t) for t in ts])
    assert np.allclose(curve.sigma, exact, rtol=1e-12)
    assert abs(curve.limit - c * A) < 1e-3
    assert curve.expected_limit == pytest.approx(c * A)


@pytest.mark.parametrize("c", [0.05, -0.15, 0.7, 2.0])
def test_sigma_constant_converges(c):
    sp = an.SpectrumPair.interval_constant(c, n=4000)
    ts = 10.0 ** -np.arange(1, 5)
    err = np.abs(an.sigma_of_t(sp, ts).sigma - c * A)
    # sigma - c a = c sqrt(t) / 2 + O(t) at small t
    assert np.all(np.diff(err) < 0)
    assert err[-1] == pytest.approx(abs(c) * 0.5e-2, rel=0.01)
    # so the raw value is within 1e-3 at t = 1e-4 only for small |c|
    if abs(c) < 0.2:
        assert err[-1] < 1e-3


def test_sigma_truncation_flag():
    sp = an.SpectrumPair.interval_constant(0.7, n=30)
    with pytest.raises(TruncationError):
        an.sigma_of_t(sp, [1e-1, 1e-3, 1e-5, 1e-6])
    loose = an.sigma_of_t(sp, [1e-1, 1e-3, 1e-5, 1e-6], strict=False)
    assert loose.tail_bound[-1] > 0.1 * abs(loose.sigma[-1])


@given(
    st.floats(0.01, 1.0),
    st.integers(5, 40),
    st.integers(0, 2**32 - 1),
)
@settings(max_examples=40, deadline=None)
def test_splitting_bound(eps, n_split, seed):
    rng = np.random.default_rng(seed)
    lam = (math.pi * np.arange(3000)) ** 2
    mu = lam.copy()
    # arbitrary perturbation below N, at most eps above
    mu[1:n_split] += rng.uniform(-5.0, 5.0, n_split - 1)
    mu[n_split:] += rng.uniform(-3.0, eps, lam.size - n_split)
    mu = np.sort(mu)
    mu[0] = min(mu[0], 0.0)
    sp = an.SpectrumPair(lam, mu, 1.0)
    ts = np.geomspace(0.999, 1e-3, 15)
    c = max(math.sqrt(t) * an.trace_sum(lam, t) for t in np.geomspace(1e-6, 1.0, 400))
    curve = an.sigma_of_t(sp, ts, strict=False)
    for t, s in zip(curve.t, curve.sigma):
        finite = t**-0.5 * math.fsum(np.exp(-lam[:n_split] * t) - np.exp(-mu[:n_split] * t))
        assert s <= finite + c * eps + 1e-9


# ---------------------------------------------------------------------------
# residual


def test_residual_zero_potential():
    g, pot, sd0, _ = spectra("interval", 0.02)
    rep = an.trace_expansion_residual(sd0, sd0, pot, np.geomspace(0.1, 0.005, 5))
    assert np.all(rep.rho == 0.0)
    assert rep.fit is None


def test_residual_constant_exact():
    g, pot, sd0, sdh = spectra("interval", 0.005, "const")
    ts = np.geomspace(0.1, 2.5e-4, 9)
    rep = an.trace_expansion_residual(sd0, sdh, pot, ts)
    c = 0.5
    exact = rep.trace0 * (np.exp(-c * ts) - 1.0 + c * ts)
    # eigenvalue rounding of order 1e-10 lam leaks into the cancellation
    assert np.allclose(rep.rho, exact, rtol=2e-5, atol=0)
    # the trace is a t^-1/2 + 1/2 + ..., so the slope tends to 3/2 from above
    assert 1.4 <= rep.exponent <= 1.6
    local = np.log(rep.rho[-1] / rep.rho[-2]) / np.log(ts[-1] / ts[-2])
    assert abs(local - 1.5) < 0.03
    rows = rep.rows()
    assert len(rows) == 9 and len(rows[0]) == 5


def test_residual_mesh_floor():
    from qgheat.errors import MeshError

    g, pot, sd0, sdh = spectra("interval", 0.02, "const")
    with pytest.raises(MeshError):
        an.trace_expansion_residual(sd0, sdh, pot, [0.1, 1e-3])


# ---------------------------------------------------------------------------
# verdicts


def _exact_pair(shift, n=200):
    lam = (math.pi * np.arange(n)) ** 2
    return an.SpectrumPair(lam, lam + shift, 1.0)


def test_ambarzumyan_identical():
    v = an.ambarzumyan_verdict(_exact_pair(0.0))
    assert v.status == "pass"
    assert "consistent" in v.rationale and "proven" not in v.rationale


def test_ambarzumyan_constant_shift_fails():
    v = an.ambarzumyan_verdict(_exact_pair(0.1))
    assert v.status == "fail"
    assert v.numbers["tail_max"] == pytest.approx(0.1)


def test_ambarzumyan_shift_on_mesh_fails():
    g, pot, sd0, sdh = spectra("interval", 0.002, "const", vectors=False)
    sp = an.SpectrumPair.from_spectra(sd0, sdh, pot).truncated(60)
    assert an.ambarzumyan_verdict(sp).status == "fail"


def test_ambarzumyan_shift_below_resolution():
    # at h = 0.01 the top of 60 pairs has lam h^2 > 2: the modelled
    # discretization error exceeds a 0.5 shift and the verdict says so
    g, pot, sd0, sdh = spectra("interval", 0.01, "const", vectors=False)
    sp = an.SpectrumPair.from_spectra(sd0, sdh, pot).truncated(60)
    assert an.ambarzumyan_verdict(sp).status == "indeterminate"


def test_ambarzumyan_cos_fails_on_mu1():
    g, pot, sd0, sdh = spectra("interval", 0.005, "cos")
    sp = an.SpectrumPair.from_spectra(sd0, sdh, pot).truncated(60)
    v = an.ambarzumyan_verdict(sp)
    assert v.status == "fail"
    assert v.numbers["mu_1"] < -1e-3
    assert "mu_1" in v.rationale


def test_ambarzumyan_indeterminate_band():
    lam = (math.pi * np.arange(100)) ** 2
    floor = an._rounding_floor(lam)
    mu = lam.copy()
    mu[-5:] += 1.5 * floor
    v = an.ambarzumyan_verdict(an.SpectrumPair(lam, mu, 1.0))
    assert v.status == "indeterminate"


def test_ambarzumyan_needs_enough_pairs():
    with pytest.raises(ValueError):
        an.ambarzumyan_verdict(_exact_pair(0.0, n=20))
    v = an.ambarzumyan_verdict(_exact_pair(0.0, n=20), an.TailPolicy(min_pairs=10))
    assert v.passed


def test_premain_examples():
    # V = 0
    v = an.premain_verdict(_exact_pair(0.0), 0.0, v_nonzero=False)
    assert v.status == "pass" and not v.flags
    # zero mean potential: mu_1 < 0 so the hypotheses fail
    g, pot, sd0, sdh = spectra("interval", 0.005, "cos")
    v = an.premain_verdict(an.SpectrumPair.from_spectra(sd0, sdh, pot), pot.integral())
    assert v.status == "pass" and "not applicable" in v.rationale
    assert v.numbers["mu_1"] < -1e-3
    # V >= 0
    g, pot, sd0, sdh = spectra("star3", 0.01, "bump")
    v = an.premain_verdict(an.SpectrumPair.from_spectra(sd0, sdh, pot), pot.integral())
    assert v.numbers["mu_1"] > 0 and v.numbers["int_V"] > 0
    assert "not applicable" in v.rationale


def test_premain_contradiction_flag():
    # fabricated spectra that satisfy both hypotheses with V != 0
    v = an.premain_verdict(_exact_pair(0.0), -0.0, v_nonzero=True)
    assert v.status == "fail"
    assert v.flags == ("contradiction",)
    assert "[FAIL]" in v.report()


# ---------------------------------------------------------------------------
# ground-state curve


def test_ground_curve_zero_and_constant():
    g = interval_graph()
    s = np.linspace(-2, 2, 9)
    zero = an.ground_state_curve(g, PotentialSpec.zero(g), s, 0.05)
    assert np.all(zero.values == 0.0)
    const = an.ground_state_curve(g, PotentialSpec.uniform(g, Constant(0.7)), s, 0.05)
    assert np.allclose(const.values, 0.7 * s, atol=1e-11)
    assert const.concave and const.slope_ok


def test_ground_curve_cos():
    g = interval_graph()
    s = np.linspace(-2, 2, 41)
    curve = an.ground_state_curve(g, PotentialSpec.uniform(g, CosineMode(1.0, 1)), s, 0.02)
    assert curve.values[20] == 0.0
    assert np.all(curve.values <= 0.0)
    assert curve.concave
    assert curve.slope_ok and abs(curve.slope_forward) < 0.1


def test_ground_curve_requires_zero():
    g = interval_graph()
    with pytest.raises(ValueError):
        an.ground_state_curve(g, PotentialSpec.zero(g), [0.5, 1.0], 0.1)


# ---------------------------------------------------------------------------
# combinatorial identity


def test_combinatorial_path3():
    v = an.combinatorial_trace_identity(CombinatorialGraph.path(3, [1.0, -1.0, 0.0]))
    assert v.passed
    assert abs(v.numbers["sum_mu"] - v.numbers["sum_lam"]) < 1e-14


def test_combinatorial_zero_potential():
    v = an.combinatorial_trace_identity(CombinatorialGraph.path(5))
    assert v.passed and v.numbers["sum_V"] == 0.0


def test_combinatorial_random_n20(rng):
    n = 20
    w = rng.uniform(0, 1, (n, n)) * (rng.uniform(size=(n, n)) < 0.3)
    w = np.triu(w, 1)
    w += np.diag(np.ones(n - 1), 1)  # keep it connected
    w = w + w.T
    v = an.combinatorial_trace_identity(CombinatorialGraph(w, rng.normal(size=n)))
    assert v.passed


# ---------------------------------------------------------------------------
# CSV


def test_csv_format(tmp_path):
    rows = [(0.1, 1 / 3), (1e-5, -0.0)]
    text = an.write_csv(("t", "sigma"), rows)
    assert text == "t,sigma\n0.1,0.3333333333333333\n1e-05,-0.0\n"
    path = tmp_path / "out.csv"
    an.write_csv(("t", "sigma"), rows, str(path))
    assert path.read_bytes() == text.encode()
    buf = io.StringIO()
    an.write_csv(("n",), [(1,), (2,)], buf)
    assert buf.getvalue() == "n\n1\n2\n"
