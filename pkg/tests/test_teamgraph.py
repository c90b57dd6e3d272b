import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import load_fixture
from oracles import centralization_loop, pairwise_resistance_total
from teamspectra.errors import UndefinedForEmptyGraph
from teamspectra.ingest import EventKind, Frame, Timeline, TimelineEvent, parse_timeline, team_participants
from teamspectra.teamgraph import (
    DISCONNECTED,
    AssistEdgeEvent,
    AssistKind,
    Direction,
    MissingPositionWarning,
    TeamGraph,
    build_graph,
    centralization,
    degree,
    egr,
    extract_assists,
    graph_metrics,
)


def star_in():
    W = np.zeros((5, 5))
    W[1:, 0] = 3
    return TeamGraph(W)


def uniform(w=1.0):
    return TeamGraph(np.full((5, 5), w) - np.diag(np.full(5, w)))


def edges(g):
    return {(e.giver, e.receiver, e.kind) for e in g}


# assist extraction


def test_fixture_team0_edges():
    tl = parse_timeline(load_fixture("timeline_small.json"))
    ev = extract_assists(tl, team_participants(0))
    assert edges(ev) == {
        (0, 2, AssistKind.KillAssist),
        (1, 2, AssistKind.KillAssist),
        (4, 2, AssistKind.MapPressure),
        (4, 3, AssistKind.TowerAssist),
    }


def test_fixture_team1_edges():
    tl = parse_timeline(load_fixture("timeline_small.json"))
    ev = extract_assists(tl, team_participants(1))
    assert edges(ev) == {
        (0, 1, AssistKind.EliteAssist),
        (3, 1, AssistKind.EliteAssist),
        (4, 1, AssistKind.EliteAssist),
        (1, 3, AssistKind.MapPressure),
    }


def test_map_pressure_distance_example():
    # teammate 5 stands about 538.5 units from the kill
    assert math.dist((1000, 1000), (1500, 1200)) == pytest.approx(538.5, abs=0.05)
    positions = [(0, 0)] * 10
    positions[4] = (1500, 1200)
    positions[2] = (1000, 1000)
    tl = Timeline(
        "M",
        (TimelineEvent(1000, EventKind.ChampionKill, 3, 8, (1, 2), (1000, 1000)),),
        (Frame(0, tuple((14000, 14000) if i not in (2, 4) else positions[i] for i in range(10))),),
    )
    ev = extract_assists(tl, team_participants(0), pressure_radius=2000)
    assert (4, 2, AssistKind.MapPressure) in edges(ev)
    ev = extract_assists(tl, team_participants(0), pressure_radius=500)
    assert all(e.kind is not AssistKind.MapPressure for e in ev)
    ev = extract_assists(tl, team_participants(0), pressure_radius=None)
    assert all(e.kind is not AssistKind.MapPressure for e in ev)


def test_missing_frames_warn_once():
    tl = Timeline(
        "M",
        (
            TimelineEvent(1000, EventKind.ChampionKill, 3, 8, (1,), (1000, 1000)),
            TimelineEvent(2000, EventKind.ChampionKill, 2, 8, (1,), (1000, 1000)),
        ),
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ev = extract_assists(tl, team_participants(0))
    assert len([w for w in caught if issubclass(w.category, MissingPositionWarning)]) == 1
    assert edges(ev) == {(0, 2, AssistKind.KillAssist), (0, 1, AssistKind.KillAssist)}


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        AssistEdgeEvent(2, 2, AssistKind.KillAssist)


# graph construction


def test_build_graph_counting():
    assert build_graph([]).total == 0
    g = build_graph([AssistEdgeEvent(0, 1, AssistKind.KillAssist)] * 3)
    expected = np.zeros((5, 5))
    expected[0, 1] = 3
    assert np.array_equal(g.W, expected)
    every = [AssistEdgeEvent(i, j, AssistKind.KillAssist) for i in range(5) for j in range(5) if i != j]
    g = build_graph(every)
    assert np.array_equal(g.W, np.ones((5, 5)) - np.eye(5))
    assert g.total == 20


def test_degree_examples():
    g = star_in()
    assert degree(g, 0, Direction.In) == 12
    assert degree(g, 1, Direction.Out) == 3
    assert degree(g, 1, Direction.In) == 0
    u = uniform()
    assert all(degree(u, i, Direction.In) == 4 and degree(u, i, Direction.Out) == 4 for i in range(5))


def test_centralization_examples():
    assert centralization(star_in(), Direction.In) == 1.0
    assert centralization(uniform(), Direction.In) == 0.0
    assert centralization(uniform(), Direction.Out) == 0.0
    # in-degrees (6, 2, 2, 1, 1)
    W = np.zeros((5, 5))
    W[1, 0] = W[2, 0] = W[3, 0] = 2
    W[0, 1] = W[0, 2] = 2
    W[0, 3] = W[0, 4] = 1
    g = TeamGraph(W)
    assert g.W.sum(axis=0).tolist() == [6, 2, 2, 1, 1]
    assert centralization(g, Direction.In) == pytest.approx(18 / 48, abs=1e-15)
    assert centralization(g, Direction.In) == pytest.approx(centralization_loop(W, "in"), abs=1e-15)


def test_single_giver_does_not_round_past_one():
    W = np.zeros((5, 5))
    W[2, [0, 3, 4]] = [2.55854814, 8.45462528, 9.84056219]
    assert centralization(TeamGraph(W), Direction.Out) == 1.0


def test_centralization_undefined_for_empty():
    with pytest.raises(UndefinedForEmptyGraph):
        centralization(TeamGraph(np.zeros((5, 5))), Direction.In)
    m = graph_metrics(TeamGraph(np.zeros((5, 5))))
    assert m.team_in_centrality is None and m.egr is DISCONNECTED


def test_egr_complete_graph():
    assert egr(uniform(0.5)) == pytest.approx(4.0, abs=1e-12)


def test_egr_disconnected_node():
    W = np.ones((5, 5)) - np.eye(5)
    W[4, :] = 0
    W[:, 4] = 0
    assert egr(TeamGraph(W)) is DISCONNECTED


def test_egr_matches_pseudoinverse_oracle(rng):
    for _ in range(50):
        W = rng.uniform(0.1, 3.0, (5, 5)) * (rng.random((5, 5)) < 0.7)
        np.fill_diagonal(W, 0)
        W[np.arange(5), (np.arange(5) + 1) % 5] += 1  # a cycle keeps it connected
        assert egr(TeamGraph(W)) == pytest.approx(pairwise_resistance_total(W), rel=1e-9)


# properties

weights = arrays(np.float64, (5, 5), elements=st.sampled_from([0.0, 0.0, 1.0, 2.0, 3.0, 0.5, 7.0]))


def _clean(W):
    W = W.copy()
    np.fill_diagonal(W, 0)
    return W


@settings(max_examples=200, deadline=None)
@given(weights)
def test_conservation_and_bounds(W):
    g = TeamGraph(_clean(W))
    A = g.total
    ins = sum(degree(g, i, Direction.In) for i in range(5))
    outs = sum(degree(g, i, Direction.Out) for i in range(5))
    assert ins == pytest.approx(A) and outs == pytest.approx(A)
    if A > 0:
        for d in Direction:
            c = centralization(g, d)
            assert 0.0 <= c <= 1.0


@settings(max_examples=100, deadline=None)
@given(weights, st.permutations(range(5)))
def test_permutation_invariance(W, perm):
    W = _clean(W)
    p = np.array(perm)
    Wp = W[np.ix_(p, p)]
    g, gp = TeamGraph(W), TeamGraph(Wp)
    m, mp = graph_metrics(g), graph_metrics(gp)
    assert np.allclose(mp.in_degree, m.in_degree[p])
    if g.total > 0:
        assert mp.team_in_centrality == pytest.approx(m.team_in_centrality, abs=1e-12)
        assert mp.team_out_centrality == pytest.approx(m.team_out_centrality, abs=1e-12)
    if m.egr is DISCONNECTED:
        assert mp.egr is DISCONNECTED
    else:
        assert mp.egr == pytest.approx(m.egr, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(weights, st.floats(0.01, 100))
def test_scale_behaviour(W, k):
    W = _clean(W)
    g, gk = TeamGraph(W), TeamGraph(W * k)
    if g.total == 0:
        return
    for d in Direction:
        assert centralization(gk, d) == pytest.approx(centralization(g, d), abs=1e-12)
    e = egr(g)
    if e is not DISCONNECTED:
        assert egr(gk) == pytest.approx(e / k, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(weights, st.integers(0, 4), st.integers(0, 4), st.floats(0.01, 5))
def test_adding_edge_never_increases_egr(W, i, j, w):
    W = _clean(W)
    W[np.arange(5), (np.arange(5) + 1) % 5] += 1
    if i == j:
        return
    before = egr(TeamGraph(W))
    W2 = W.copy()
    W2[i, j] += w
    assert egr(TeamGraph(W2)) <= before * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 4), st.floats(0.5, 10))
def test_single_receiver_attains_maximum(hub, w):
    W = np.zeros((5, 5))
    W[:, hub] = w
    W[hub, hub] = 0
    assert centralization(TeamGraph(W), Direction.In) == 1.0
    assert centralization(TeamGraph(W.T.copy()), Direction.Out) == 1.0
