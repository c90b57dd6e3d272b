import json
from pathlib import Path

import pytest

from conftest import write_config
from teamspectra.errors import ConfigError, StageError
from teamspectra.pipeline import (
    REPORT_TABLES,
    PipelineConfig,
    graphs_from_timelines,
    parse_rates,
    read_csv,
    read_graphs,
    read_players,
    run_pipeline,
    write_graphs,
    write_players,
)


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    cfg = PipelineConfig.from_file(write_config(root / "p.conf", root / "out", n_matches=150))
    return run_pipeline(cfg), cfg


def test_all_tables_present_and_non_empty(report):
    out, _ = report
    assert len(REPORT_TABLES) == 8
    for name in REPORT_TABLES:
        rows = read_csv(out / name)
        assert rows, name


def test_manifest(report):
    out, cfg = report
    m = json.loads((out / "run_manifest.json").read_text())
    assert m["config_hash"] == cfg.config_hash()
    assert m["seeds"]["ingest"] == 3
    counts = m["row_counts"]
    assert counts["intermediate/players.csv"] == 1500
    assert counts["intermediate/graphs.csv"] == 300
    assert counts["intermediate/features_individual.csv"] == 1500
    assert "efa" in m["stages"] and "warnings" in m["stages"]["efa"]


def test_winrate_table_reconciles(report):
    out, _ = report
    rows = {(r["level"], r["label"]): r for r in read_csv(out / "table3_winrates.csv")}
    overall = rows[("team", "overall")]
    assert int(overall["games"]) == 300 and int(overall["wins"]) == 150


def test_single_stage_rerun_is_stable(report, tmp_path):
    out, cfg = report
    before = (out / "kw_tests.csv").read_bytes()
    run_pipeline(cfg, stages=("kwtest",))
    assert (out / "kw_tests.csv").read_bytes() == before


def test_disabled_dependency_names_stage(tmp_path):
    conf = write_config(tmp_path / "p.conf", tmp_path / "out", extra="[stages]\ngraphs = false\n")
    cfg = PipelineConfig.from_file(conf)
    assert "graphs" not in cfg.stages and "train" in cfg.stages
    with pytest.raises(StageError) as exc:
        run_pipeline(cfg)
    assert "graphs" in str(exc.value)


def test_failed_stage_keeps_earlier_outputs(tmp_path):
    conf = write_config(tmp_path / "p.conf", tmp_path / "out", n_matches=40, extra="[cluster]\nk = 100000\n")
    cfg = PipelineConfig.from_file(conf)
    with pytest.raises(StageError) as exc:
        run_pipeline(cfg)
    assert exc.value.stage == "cluster"
    assert (tmp_path / "out" / "table2_eval.csv").exists()


def test_missing_seed_is_config_error(tmp_path):
    conf = tmp_path / "p.conf"
    conf.write_text(f"[pipeline]\nout_dir = {tmp_path / 'out'}\n")
    with pytest.raises(ConfigError):
        run_pipeline(PipelineConfig.from_file(conf))


@pytest.mark.parametrize(
    "text",
    [
        "[pipeline]\nseed = 1\nbogus = 2\n",
        "[pipeline]\nseed = 1\n[nonsense]\na = 1\n",
        "[pipeline]\nseed = 1\n[synth]\nnot_a_field = 3\n",
        "[pipeline]\nseed = 1\nsource = carrier_pigeon\n",
        "[pipeline]\nseed = x\n",
    ],
)
def test_bad_config(tmp_path, text):
    conf = tmp_path / "p.conf"
    conf.write_text(text)
    with pytest.raises(ConfigError):
        PipelineConfig.from_file(conf)


def test_config_hash_ignores_out_dir_and_token(tmp_path):
    a = PipelineConfig(out_dir=tmp_path / "a", fetch={"base_url": "http://x", "api_token": "secret"})
    b = PipelineConfig(out_dir=tmp_path / "b", fetch={"base_url": "http://x"})
    assert a.config_hash() == b.config_hash()
    assert "secret" not in json.dumps(a.to_dict())
    one, two = PipelineConfig(out_dir=tmp_path, seed=1), PipelineConfig(out_dir=tmp_path, seed=2)
    assert one.config_hash() != two.config_hash()


def test_parse_rates():
    assert parse_rates("20/1, 100/120") == ((20, 1.0), (100, 120.0))
    with pytest.raises(ConfigError):
        parse_rates("twenty")


def test_intermediate_round_trip(tmp_path, small_corpus):
    matches, timelines, _ = small_corpus
    write_players(tmp_path / "players.csv", matches)
    assert read_players(tmp_path / "players.csv") == matches
    graphs = graphs_from_timelines([timelines[m.match_id] for m in matches], 2000.0)
    write_graphs(tmp_path / "graphs.csv", graphs)
    again = read_graphs(tmp_path / "graphs.csv")
    assert set(again) == set(graphs)
    for key, g in graphs.items():
        h = again[key]
        assert h.in_degree.tolist() == g.in_degree.tolist()
        assert h.team_in_centrality == g.team_in_centrality
        assert h.disconnected == g.disconnected


def test_shipped_example_config_loads():
    path = Path(__file__).parent.parent / "configs" / "example.conf"
    cfg = PipelineConfig.from_file(path)
    assert cfg.seed == 20 and cfg.synth["n_matches"] == 5000
    assert cfg.out_dir.resolve() == path.parent.parent.resolve() / "report"
    assert cfg.classifier_params == {"forest": {"n_trees": 100}}
