import json

import numpy as np
import pytest

from graphcp.cli import cli


def write_config(path, **overrides):
    config = {
        "p_bar": -3.0,
        "observation": {"family": "poisson_gamma", "shape": 2.0, "rate": 0.5},
        "delta_prior": {"spike": 0.5, "a": 1.0, "b": 30.0},
        "window_prior": {"mode": "zero"},
        "gamma_loss": 40.0,
        "varpi": 24.0,
        "sampler": {"iterations": 800, "burn_in": 200, "seed": 5, "init": "cold"},
    }
    config.update(overrides)
    path.write_text(json.dumps(config))
    return path


def write_small_panel(path, seed=0):
    rng = np.random.default_rng(seed)
    rows = ["series_id,t,value"]
    x = np.concatenate([rng.poisson(3.0, 6), rng.poisson(12.0, 6)])
    y = rng.poisson(5.0, 12)
    for i, series in enumerate([x, y]):
        for t, v in enumerate(series):
            rows.append(f"{i + 1},{t + 1},{int(v)}")
    path.write_text("\n".join(rows) + "\n")
    return path


def write_small_graph(path):
    path.write_text("i,j,weight\n1,2,1.5\n")
    return path


class TestGraphCommand:
    def test_star(self, tmp_path):
        out = tmp_path / "star.csv"
        assert cli(["graph", "--kind", "star", "--L", "4", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "i,j,weight"
        assert len(lines) == 4

    def test_scaled_rchain(self, tmp_path):
        out = tmp_path / "chain.csv"
        rc = cli(
            [
                "graph", "--kind", "rchain", "--L", "6", "--r", "2",
                "--p-bar", "-60", "--lambda-s", "0.4", "--out", str(out),
            ]
        )
        assert rc == 0
        first = out.read_text().splitlines()[1]
        assert float(first.split(",")[2]) == pytest.approx(0.4 * 60 / 4)

    def test_scaling_requires_p_bar(self, tmp_path, capsys):
        rc = cli(
            ["graph", "--kind", "star", "--L", "4", "--lambda-s", "0.5",
             "--out", str(tmp_path / "g.csv")]
        )
        assert rc == 1
        assert "graphcp: error:" in capsys.readouterr().err


class TestSimulateCommand:
    def test_writes_panel_and_truth(self, tmp_path):
        rc = cli(
            ["simulate", "--scenario", "chain-cluster", "--theta", "1050",
             "--seed", "7", "--out", str(tmp_path)]
        )
        assert rc == 0
        assert (tmp_path / "panel.csv").exists()
        truth = (tmp_path / "truth.csv").read_text().splitlines()
        assert truth[0] == "series_id,position"
        assert len(truth) == 14  # 13 changepoints plus header


class TestPipeline:
    def test_sample_estimate_score(self, tmp_path):
        panel = write_small_panel(tmp_path / "panel.csv")
        graph = write_small_graph(tmp_path / "graph.csv")
        config = write_config(tmp_path / "config.json")
        out = tmp_path / "run"
        rc = cli(
            ["sample", "--panel", str(panel), "--graph", str(graph),
             "--config", str(config), "--out", str(out)]
        )
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["draws"]["count"] == 800
        assert "sha256" in manifest["inputs"]["panel"]

        est_dir = tmp_path / "est"
        rc = cli(
            ["estimate", "--sample", str(out / "sample.csv"),
             "--manifest", str(out / "manifest.json"),
             "--gamma", "40", "--out", str(est_dir)]
        )
        assert rc == 0
        assert (est_dir / "estimates.csv").exists()
        k_lines = (est_dir / "k_marginals.csv").read_text().splitlines()
        assert k_lines[0] == "series_id,k,probability"

        score_dir = tmp_path / "scores"
        rc = cli(
            ["score", "--estimates", str(est_dir / "estimates.csv"),
             "--graph", str(graph), "--varpi", "24", "--out", str(score_dir)]
        )
        assert rc == 0
        assert (score_dir / "scores.csv").read_text().splitlines()[0] == "series_id,m_score"

    def test_seed_override_changes_output(self, tmp_path):
        panel = write_small_panel(tmp_path / "panel.csv")
        graph = write_small_graph(tmp_path / "graph.csv")
        config = write_config(tmp_path / "config.json")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        cli(["sample", "--panel", str(panel), "--graph", str(graph),
             "--config", str(config), "--seed", "1", "--out", str(out1)])
        cli(["sample", "--panel", str(panel), "--graph", str(graph),
             "--config", str(config), "--seed", "1", "--out", str(out2)])
        assert (out1 / "sample.csv").read_bytes() == (out2 / "sample.csv").read_bytes()
        assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()

    def test_missing_panel_is_validation_error(self, tmp_path, capsys):
        graph = write_small_graph(tmp_path / "graph.csv")
        config = write_config(tmp_path / "config.json")
        rc = cli(
            ["sample", "--panel", str(tmp_path / "nope.csv"), "--graph", str(graph),
             "--config", str(config), "--out", str(tmp_path / "out")]
        )
        assert rc == 2  # unreadable file is a runtime failure
        err = capsys.readouterr().err
        assert err.startswith("graphcp: error:")

    def test_invalid_panel_is_validation_error(self, tmp_path, capsys):
        bad = tmp_path / "panel.csv"
        bad.write_text("series_id,t,value\n1,1,-3\n")
        graph = write_small_graph(tmp_path / "graph.csv")
        config = write_config(tmp_path / "config.json")
        rc = cli(
            ["sample", "--panel", str(bad), "--graph", str(graph),
             "--config", str(config), "--out", str(tmp_path / "out")]
        )
        assert rc == 1
        assert "graphcp: error:" in capsys.readouterr().err


class TestIngestEventsCommand:
    def test_end_to_end(self, tmp_path):
        events = tmp_path / "events.csv"
        events.write_text(
            "time,user,source,destination\n"
            "3600,alice,S1,D1\n"
            "7200,bob,S1,D1\n"
            "90000,alice,S2,D1\n"
        )
        out = tmp_path / "ingested"
        rc = cli(["ingest-events", "--events", str(events), "--out", str(out)])
        assert rc == 0
        info = json.loads((out / "ingest_info.json").read_text())
        assert info["n_users"] == 2
        assert (out / "graph.csv").read_text().splitlines()[1] == "1,2,1.0"
