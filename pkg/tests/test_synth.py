import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from teamspectra.ingest import filter_corpus, serialize_match, serialize_timeline
from teamspectra.synth import SynthConfig, generate
from teamspectra.teamgraph import DISCONNECTED, graph_metrics, match_graphs


def test_same_seed_same_bytes():
    cfg = SynthConfig(n_matches=25, seed=11)
    a, ta, ga = generate(cfg)
    b, tb, gb = generate(cfg)
    assert [serialize_match(m) for m in a] == [serialize_match(m) for m in b]
    assert [serialize_timeline(ta[k]) for k in sorted(ta)] == [serialize_timeline(tb[k]) for k in sorted(tb)]
    assert np.array_equal(ga.coop, gb.coop)
    c, _, _ = generate(SynthConfig(n_matches=25, seed=12))
    assert [serialize_match(m) for m in a] != [serialize_match(m) for m in c]


def test_every_match_passes_filter(small_corpus):
    matches, timelines, _ = small_corpus
    assert filter_corpus(matches) == matches
    assert set(timelines) == {m.match_id for m in matches}


def test_ground_truth_csv(tmp_path, small_corpus):
    _, _, truth = small_corpus
    path = tmp_path / "gt.csv"
    truth.write_csv(path)
    lines = path.read_text().splitlines()
    assert len(lines) == len(truth.match_ids) + 1
    assert lines[0].startswith("match_id,c_a,c_b")


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        SynthConfig(n_matches=0)
    with pytest.raises(ValueError):
        SynthConfig(rank_coop_correlation=1.5)


@pytest.mark.slow
def test_no_effect_gives_even_outcomes():
    n = 10_000
    matches, _, truth = generate(SynthConfig(n_matches=n, seed=1, beta_coop=0.0, beta_skill=0.0))
    assert np.all(truth.p_a == 0.5)
    rate = np.mean([m.teams[0].won for m in matches])
    assert abs(rate - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_cooperative_teams_win():
    matches, _, truth = generate(SynthConfig(n_matches=5000, seed=2))
    won = np.array([[m.teams[0].won, m.teams[1].won] for m in matches])
    c = truth.coop
    high = won[c >= 0.75].mean()
    low = won[c <= 0.25].mean()
    assert high > 0.8 and low < 0.3


def test_coop_monotone_in_graph_metrics():
    matches, timelines, truth = generate(SynthConfig(n_matches=1000, seed=3, coop_distribution="uniform"))
    c, c_in, e = [], [], []
    for i, m in enumerate(matches):
        for t, g in enumerate(match_graphs(m, timelines[m.match_id])):
            gm = graph_metrics(g)
            if gm.team_in_centrality is None:
                continue
            c.append(truth.coop[i, t])
            c_in.append(gm.team_in_centrality)
            e.append(np.inf if gm.egr is DISCONNECTED else gm.egr)
    assert spearmanr(c, c_in).statistic <= -0.9
    assert spearmanr(c, e).statistic <= -0.8
