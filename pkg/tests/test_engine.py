import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantgt.costs import AcademicCost, QuadraticCost, academic_generate
from quantgt.engine import (CSV_COLUMNS, DivergenceError, ExperimentTrace, SwarmState,
                            gap_and_residuals, init_state, iterate, run, step_size_bound)
from quantgt.graphnet import (GraphSpec, SwitchingSchedule, Topology, WeightedDigraph, assign_weights,
                              gen_exponential, gen_geometric, laplacian)
from quantgt.quantize import LinkNonlinearity

NLS = [LinkNonlinearity(), LinkNonlinearity("log", 1 / 128), LinkNonlinearity("log", 1 / 4),
       LinkNonlinearity("uniform", 1 / 16)]


def exp16():
    return assign_weights(gen_exponential(16), 0.5)


def academic(seed=3, m=1):
    return AcademicCost(academic_generate(16, m, seed=seed))


# --- step size ---------------------------------------------------------------------


def test_step_size_bound_examples():
    assert step_size_bound(1, 1, 1, 1) == 1
    assert step_size_bound(2, 3, 24, math.exp(1 / 256)) == pytest.approx(0.083009, abs=1e-6)
    assert step_size_bound(2, 3, 24, math.exp(1 / 256)) == 2 / (24 * math.exp(1 / 256))
    a = step_size_bound(0.3, 0.5, 7.0, 1.1)
    assert step_size_bound(0.3, 0.5, 7.0, 2.2) == a / 2


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_step_size_bound_rejects_nonpositive(bad):
    for args in ((bad, 1, 1, 1), (1, bad, 1, 1), (1, 1, bad, 1), (1, 1, 1, bad)):
        with pytest.raises(ValueError):
            step_size_bound(*args)


# --- a single round ---------------------------------------------------------------


def reference_round(X, Y, G_prev, alpha, A, B, h, grad):
    """Node-by-node transcription of the update, used as an independent oracle."""
    n = X.shape[0]
    X_new, Y_new = np.empty_like(X), np.empty_like(Y)
    for i in range(n):
        s = sum(A[i, j] * (h(X[j]) - h(X[i])) for j in range(n) if A[i, j] != 0)
        X_new[i] = X[i] + s - alpha * Y[i]
    G = np.stack([grad(i, X_new[i]) for i in range(n)])
    for i in range(n):
        s = sum(B[i, j] * (h(Y[j]) - h(Y[i])) for j in range(n) if B[i, j] != 0)
        Y_new[i] = Y[i] + s + (G[i] - G_prev[i])
    return X_new, Y_new, G


@pytest.mark.parametrize("nl", NLS, ids=str)
def test_iterate_matches_node_loop(nl):
    cost = academic()
    gA = exp16()
    gB = assign_weights(gen_exponential(16), 0.5, seed=4)
    rng = np.random.default_rng(0)
    st0 = SwarmState(3, rng.standard_normal((16, 1)), rng.standard_normal((16, 1)), rng.standard_normal((16, 1)))
    new = iterate(st0, 0.01, cost, gA, gB, nl)
    X, Y, G = reference_round(st0.X, st0.Y, st0.G_prev, 0.01, gA.weight_matrix(), gB.weight_matrix(), nl, cost.grad)
    assert new.k == 4
    np.testing.assert_allclose(new.X, X, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(new.Y, Y, rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(new.G_prev, G, rtol=1e-13, atol=1e-15)


def test_iterate_does_not_mutate_input():
    cost = academic()
    st0 = init_state(16, 1, seed=1)
    snapshot = st0.copy()
    iterate(st0, 0.01, cost, exp16())
    np.testing.assert_array_equal(st0.X, snapshot.X)
    np.testing.assert_array_equal(st0.Y, snapshot.Y)
    assert st0.k == 0


def test_laplacian_input_equals_graph_input():
    cost = academic()
    st0 = init_state(16, 1, seed=1)
    a = iterate(st0, 0.01, cost, exp16(), nl=LinkNonlinearity("log", 0.1))
    b = iterate(st0, 0.01, cost, laplacian(exp16()), nl=LinkNonlinearity("log", 0.1))
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.Y, b.Y)


def test_optimum_is_a_fixed_point():
    cost = QuadraticCost(np.array([[1.0], [-1.0], [2.0], [-2.0]]))
    g = assign_weights(gen_geometric(4, 1.4, seed=0))
    X = np.zeros((4, 1))
    st0 = SwarmState(0, X, np.zeros((4, 1)), cost.grads(X))
    new = iterate(st0, 0.1, cost, g)
    np.testing.assert_array_equal(new.X, X)
    np.testing.assert_array_equal(new.Y, np.zeros((4, 1)))


def test_two_node_quadratic_reaches_midpoint():
    cost = QuadraticCost(np.array([[1.0], [4.0]]))
    g = WeightedDigraph(2, ((0, 1, 0.25), (1, 0, 0.25)), directed=False)
    tr = run(cost, g, iterations=10_000, seed=0, stride=100, gap_tol=None)
    np.testing.assert_allclose(tr.final_state.X, 2.5, atol=1e-10)


def test_init_state():
    s = init_state(16, 3, seed=42)
    np.testing.assert_array_equal(s.X, np.random.default_rng(42).standard_normal((16, 3)))
    assert not s.Y.any() and not s.G_prev.any() and s.k == 0
    s2 = init_state(2, 1, X0=[[1.0], [2.0]])
    np.testing.assert_array_equal(s2.X, [[1.0], [2.0]])


def test_divergence_names_node_and_iteration():
    cost = academic()
    st0 = init_state(16, 1, seed=0)
    st0.X[5, 0] = 1e13
    with pytest.raises(DivergenceError) as err:
        iterate(st0, 0.01, cost, exp16())
    assert err.value.k == 1 and err.value.node == 5 and err.value.coord == 0
    assert "iteration 1" in str(err.value)


def test_run_divergence_keeps_partial_trace():
    cost = academic()
    with pytest.raises(DivergenceError) as err:
        run(cost, exp16(), iterations=5000, alpha=5.0, stride=1)
    tr = err.value.trace
    assert tr is not None and tr.rows and tr.stop_reason == "diverged"
    assert tr.rows[-1].k == tr.iterations


# --- invariants over whole runs -----------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(kind=st.sampled_from(["exponential", "geometric", "er"]),
       mode=st.sampled_from(["reweight", "resample"]),
       nl=st.sampled_from(NLS), seed=st.integers(0, 2**31), independent_b=st.booleans())
def test_conservation_and_tracking_hold_every_round(kind, mode, nl, seed, independent_b):
    cost = academic(seed=seed % 1000)
    spec = GraphSpec(kind, 16, seed=seed % 997)
    net = Topology(spec, SwitchingSchedule(7, mode, seed))
    b = Topology(spec, SwitchingSchedule(7, mode, seed + 1)) if independent_b and mode == "reweight" else None
    tr = run(cost, net, nl, iterations=120, seed=seed, stride=5, b_network=b, strict=True)
    assert tr.max_conservation_err <= 1e-9 and tr.max_tracking_err <= 1e-9


def test_tracking_residual_reported_and_exempt_at_start():
    cost = academic()
    s0 = init_state(16, 1, seed=2)
    m0 = gap_and_residuals(s0, cost)
    assert m0["tracking_residual"] == pytest.approx(np.linalg.norm(cost.grads(s0.X).sum(axis=0)))
    s1 = iterate(s0, 0.005, cost, exp16())
    G = cost.grads(s1.X)
    assert gap_and_residuals(s1, cost)["tracking_residual"] <= 1e-9 * max(1.0, np.linalg.norm(G))


def test_gap_metrics_at_optimum():
    cost = academic()
    s = SwarmState(0, np.zeros((16, 1)), np.zeros((16, 1)), np.zeros((16, 1)))
    m = gap_and_residuals(s, cost, F_star=0.0)
    assert abs(m["gap"]) <= 1e-15 and m["consensus_err"] == 0.0 and not m["gap_floored"]


def test_negative_gap_is_floored_and_flagged():
    cost = academic()
    s = SwarmState(0, np.zeros((16, 1)), np.zeros((16, 1)), np.zeros((16, 1)))
    m = gap_and_residuals(s, cost, F_star=1e-6)
    assert m["gap"] == -1e-12 and m["gap_floored"]


# --- run ------------------------------------------------------------------------------


def test_zero_budget_records_initial_state():
    cost = academic()
    tr = run(cost, exp16(), iterations=0, seed=4)
    assert len(tr.rows) == 1 and tr.rows[0].k == 0
    x0 = init_state(16, 1, seed=4).X.mean()
    assert tr.rows[0].gap == pytest.approx(cost.global_value(x0), rel=1e-15)


def test_records_on_stride_and_final_iteration():
    tr = run(academic(), exp16(), iterations=95, stride=10)
    assert list(tr.k) == list(range(0, 100, 10))[:10] + [95]
    assert np.all(np.diff(tr.k) > 0)


def test_gap_tolerance_stops_early():
    tr = run(academic(), exp16(), iterations=20_000, stride=10, gap_tol=1e-6)
    assert tr.stop_reason == "tolerance" and tr.final_gap < 1e-6 and tr.iterations < 20_000


def test_auto_alpha_is_half_the_bound():
    tr = run(academic(), exp16(), LinkNonlinearity("log", 1 / 128), iterations=1)
    L = academic().L
    assert tr.alpha_bar == pytest.approx(0.25 / (L * math.exp(1 / 256)), rel=1e-12)
    assert tr.alpha == 0.5 * tr.alpha_bar
    full = run(academic(), exp16(), iterations=1, safety=1.0)
    assert full.alpha < full.alpha_bar


def test_invalid_run_arguments():
    with pytest.raises(ValueError):
        run(academic(), exp16(), iterations=1, stride=0)
    with pytest.raises(ValueError):
        run(academic(), exp16(), iterations=1, safety=1.5)


def test_switching_alpha_uses_worst_sampled_topology():
    topo = Topology(GraphSpec("exponential", 16), SwitchingSchedule(100, "reweight", 5))
    tr = run(academic(), topo, iterations=1)
    assert tr.alpha_bar == pytest.approx(topo.min_lambda2(16) / academic().L, rel=1e-12)


def test_epoch_column_follows_schedule():
    topo = Topology(GraphSpec("exponential", 16), SwitchingSchedule(100, "reweight", 5))
    tr = run(academic(), topo, iterations=350, stride=50)
    np.testing.assert_array_equal(tr.column("epoch"), tr.k // 100)


def test_runs_are_bit_identical():
    topo = lambda: Topology(GraphSpec("er", 16), SwitchingSchedule(100, "resample", 9))
    a = run(academic(), topo(), LinkNonlinearity("log", 1 / 128), iterations=400, seed=2)
    b = run(academic(), topo(), LinkNonlinearity("log", 1 / 128), iterations=400, seed=2)
    assert a.to_csv() == b.to_csv()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_log_clamps_are_counted():
    # log(1.7e308) rounds to level 710, one past the largest finite level
    cost = QuadraticCost(np.zeros((16, 1)))
    X0 = np.full((16, 1), 1.0)
    X0[3] = 1.7e308
    with pytest.raises(DivergenceError) as err:
        run(cost, exp16(), LinkNonlinearity("log", 1.0), iterations=1, X0=X0)
    assert err.value.trace.clamped == 1


# --- trace I/O --------------------------------------------------------------------


def test_trace_csv_round_trip(tmp_path):
    tr = run(academic(), exp16(), LinkNonlinearity("log", 1 / 16), iterations=200, stride=20)
    tr.F_star, tr.meta = -1e-17, {"name": "demo"}
    path = tmp_path / "t.csv"
    text = tr.to_csv(path)
    lines = text.splitlines()
    assert lines[0].startswith("# Fstar=") and lines[1].startswith("# grad_norm=")
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == ",".join(CSV_COLUMNS)
    assert all(math.isfinite(float(v)) for row in body[1:] for v in row.split(","))
    back = ExperimentTrace.from_csv(path)
    assert back.rows == tr.rows
    assert back.F_star == tr.F_star and back.alpha == tr.alpha and back.meta == {"name": "demo"}


def test_trace_csv_rejects_bad_header(tmp_path):
    (tmp_path / "t.csv").write_text("k,gap\n0,1\n")
    with pytest.raises(ValueError):
        ExperimentTrace.from_csv(tmp_path / "t.csv")


def test_summary_mentions_key_numbers():
    tr = run(academic(), exp16(), iterations=20)
    text = tr.summary()
    for key in ("final_gap", "iterations", "alpha", "alpha_bar"):
        assert key in text
