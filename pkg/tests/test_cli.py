import json
import subprocess
import sys

import numpy as np
import numpy.testing as npt
import pytest

from asc.cli import main
from asc.model import load_model
from asc.planner import load_plan
from asc.similarity import load_matrix_csv, write_matrix_csv, SimilarityMatrix


def write_matrix(path, values, tokens=10):
    write_matrix_csv(SimilarityMatrix(values=np.asarray(values, dtype=np.float64),
                                      token_count=tokens), path)


HAND_VALUES = [
    [1.00, 0.95, 0.80, 0.30],
    [0.95, 1.00, 0.95, 0.50],
    [0.80, 0.95, 1.00, 0.92],
    [0.30, 0.50, 0.92, 1.00],
]


@pytest.fixture
def pipeline_files(tmp_path):
    model = tmp_path / "model.ascm"
    data = tmp_path / "data.txt"
    assert main(["synth", "--layers", "4", "--hidden-dim", "16", "--heads", "2",
                 "--ffn-dim", "32", "--vocab", "40", "--identity-layers", "2,3",
                 "--seed", "7", "--out", str(model)]) == 0
    assert main(["gen-data", "--sequences", "10", "--min-len", "4", "--max-len", "12",
                 "--vocab", "40", "--seed", "8", "--out", str(data)]) == 0
    return tmp_path, model, data


class TestSynthAndGenData:
    def test_synth_writes_loadable_model(self, pipeline_files):
        _, model, _ = pipeline_files
        config, _ = load_model(model)
        assert config.num_layers == 4

    def test_outputs_deterministic(self, tmp_path):
        args = ["synth", "--layers", "2", "--hidden-dim", "8", "--heads", "2",
                "--ffn-dim", "16", "--vocab", "20", "--seed", "3", "--out"]
        a, b = tmp_path / "a.ascm", tmp_path / "b.ascm"
        assert main(args + [str(a)]) == 0
        assert main(args + [str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_gen_data_deterministic(self, tmp_path):
        args = ["gen-data", "--sequences", "5", "--min-len", "2", "--max-len", "6",
                "--vocab", "9", "--seed", "1", "--out"]
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        assert main(args + [str(a)]) == 0
        assert main(args + [str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_synth_invalid_dims_exit_code(self, tmp_path, capsys):
        code = main(["synth", "--layers", "1", "--hidden-dim", "5", "--heads", "2",
                     "--ffn-dim", "8", "--vocab", "10", "--seed", "0",
                     "--out", str(tmp_path / "m.ascm")])
        assert code == 1
        assert "error:" in capsys.readouterr().err
        assert not (tmp_path / "m.ascm").exists()


class TestAnalyze:
    def test_writes_matrix_with_header(self, pipeline_files, capsys):
        tmp_path, model, data = pipeline_files
        out = tmp_path / "sim.csv"
        assert main(["analyze", "--model", str(model), "--data", str(data),
                     "--out", str(out)]) == 0
        matrix = load_matrix_csv(out)
        assert matrix.size == 5
        assert out.read_text().splitlines()[0].startswith("# asc-sim v1 layers=5 tokens=")

    def test_thirteen_layer_header(self, tmp_path):
        model = tmp_path / "m.ascm"
        data = tmp_path / "d.txt"
        assert main(["synth", "--layers", "12", "--hidden-dim", "8", "--heads", "2",
                     "--ffn-dim", "16", "--vocab", "20", "--seed", "2",
                     "--out", str(model)]) == 0
        assert main(["gen-data", "--sequences", "2", "--min-len", "3", "--max-len", "5",
                     "--vocab", "20", "--seed", "3", "--out", str(data)]) == 0
        out = tmp_path / "sim.csv"
        assert main(["analyze", "--model", str(model), "--data", str(data),
                     "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0].startswith("# asc-sim v1 layers=13")

    def test_workers_agree(self, pipeline_files):
        tmp_path, model, data = pipeline_files
        single, multi = tmp_path / "s1.csv", tmp_path / "s4.csv"
        assert main(["analyze", "--model", str(model), "--data", str(data),
                     "--out", str(single), "--workers", "1"]) == 0
        assert main(["analyze", "--model", str(model), "--data", str(data),
                     "--out", str(multi), "--workers", "4"]) == 0
        npt.assert_allclose(load_matrix_csv(single).values,
                            load_matrix_csv(multi).values, atol=1e-9)

    def test_missing_model_fails_without_output(self, tmp_path, capsys):
        out = tmp_path / "sim.csv"
        code = main(["analyze", "--model", str(tmp_path / "nope.ascm"),
                     "--data", str(tmp_path / "nope.txt"), "--out", str(out)])
        assert code == 1
        assert not out.exists()

    def test_failed_analyze_leaves_no_partial_output(self, pipeline_files, capsys):
        tmp_path, model, _ = pipeline_files
        bad_data = tmp_path / "bad.txt"
        bad_data.write_text("1 2 3\n9999\n")
        out = tmp_path / "sim.csv"
        code = main(["analyze", "--model", str(model), "--data", str(bad_data),
                     "--out", str(out)])
        assert code == 1
        assert not out.exists()
        assert len(list(tmp_path.glob(".tmp-*"))) == 0


class TestPlan:
    def test_identity_matrix_prunes_nothing(self, tmp_path, capsys):
        sim = tmp_path / "sim.csv"
        write_matrix(sim, np.eye(4))
        out = tmp_path / "plan.json"
        assert main(["plan", "--sim", str(sim), "--threshold", "0.9",
                     "--out", str(out)]) == 0
        assert "0 layers pruned" in capsys.readouterr().out
        assert load_plan(out).redundant_layers == ()

    def test_hand_matrix(self, tmp_path, capsys):
        sim = tmp_path / "sim.csv"
        write_matrix(sim, HAND_VALUES)
        out = tmp_path / "plan.json"
        assert main(["plan", "--sim", str(sim), "--threshold", "0.9",
                     "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "2 layers pruned: 1,3" in stdout
        loaded = load_plan(out)
        assert loaded.redundant_layers == (1, 3)
        assert loaded.anchors == ((0, 1), (2, 3))
        assert loaded.matrix_fingerprint is not None

    def test_threshold_out_of_range(self, tmp_path, capsys):
        sim = tmp_path / "sim.csv"
        write_matrix(sim, np.eye(3))
        out = tmp_path / "plan.json"
        code = main(["plan", "--sim", str(sim), "--threshold", "1.5", "--out", str(out)])
        assert code == 1
        assert "threshold" in capsys.readouterr().err
        assert not out.exists()

    def test_malformed_csv_reports_line(self, tmp_path, capsys):
        sim = tmp_path / "sim.csv"
        sim.write_text("# asc-sim v1 layers=2 tokens=3\n1.0,oops\n0.0,1.0\n")
        code = main(["plan", "--sim", str(sim), "--threshold", "0.9",
                     "--out", str(tmp_path / "plan.json")])
        assert code == 1
        assert ":2" in capsys.readouterr().err


class TestPruneCommands:
    def test_empty_plan_round_trip(self, pipeline_files, capsys):
        tmp_path, model, data = pipeline_files
        sim = tmp_path / "sim.csv"
        write_matrix(sim, np.eye(5))
        plan_path = tmp_path / "plan.json"
        assert main(["plan", "--sim", str(sim), "--threshold", "0.9",
                     "--out", str(plan_path)]) == 0
        out = tmp_path / "same.ascm"
        assert main(["prune", "--model", str(model), "--plan", str(plan_path),
                     "--out", str(out)]) == 0
        config_a, weights_a = load_model(model)
        config_b, weights_b = load_model(out)
        assert config_a == config_b
        for name in weights_a.tensors:
            npt.assert_array_equal(weights_b[name], weights_a[name])

    def test_prune_reports_original_layers(self, pipeline_files, capsys):
        tmp_path, model, data = pipeline_files
        sim = tmp_path / "sim.csv"
        plan_path = tmp_path / "plan.json"
        out = tmp_path / "pruned.ascm"
        assert main(["analyze", "--model", str(model), "--data", str(data),
                     "--out", str(sim)]) == 0
        assert main(["plan", "--sim", str(sim), "--threshold", "0.999",
                     "--out", str(plan_path)]) == 0
        capsys.readouterr()
        assert main(["prune", "--model", str(model), "--plan", str(plan_path),
                     "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "removed original layers: 2,3" in stdout
        config, _ = load_model(out)
        assert config.layer_ids == (1, 4)

    def test_random_prune_shape(self, pipeline_files):
        tmp_path, model, _ = pipeline_files
        out = tmp_path / "rand.ascm"
        assert main(["random-prune", "--model", str(model), "--count", "2",
                     "--seed", "5", "--out", str(out)]) == 0
        config, _ = load_model(out)
        assert config.num_layers == 2

    def test_random_prune_twelve_layer_baseline(self, tmp_path):
        model = tmp_path / "m.ascm"
        assert main(["synth", "--layers", "12", "--hidden-dim", "8", "--heads", "2",
                     "--ffn-dim", "16", "--vocab", "20", "--seed", "4",
                     "--out", str(model)]) == 0
        out = tmp_path / "rand.ascm"
        assert main(["random-prune", "--model", str(model), "--count", "6",
                     "--seed", "11", "--out", str(out)]) == 0
        config, _ = load_model(out)
        assert config.num_layers == 6
        assert len(config.layer_ids) == 6

    def test_prune_all_layers_notes_embedding_only(self, pipeline_files, capsys):
        tmp_path, model, _ = pipeline_files
        out = tmp_path / "bare.ascm"
        assert main(["random-prune", "--model", str(model), "--count", "4",
                     "--seed", "0", "--out", str(out)]) == 0
        assert "embedding-only" in capsys.readouterr().out
        config, _ = load_model(out)
        assert config.num_layers == 0


class TestRender:
    def test_all_ones_pgm(self, tmp_path):
        sim = tmp_path / "sim.csv"
        write_matrix(sim, np.ones((3, 3)))
        out = tmp_path / "sim.pgm"
        assert main(["render", "--sim", str(sim), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "P2"
        assert all(pix == "255" for row in lines[3:] for pix in row.split())

    def test_csv_format(self, tmp_path):
        sim = tmp_path / "sim.csv"
        write_matrix(sim, np.eye(2))
        out = tmp_path / "px.csv"
        assert main(["render", "--sim", str(sim), "--out", str(out),
                     "--format", "csv"]) == 0
        assert out.read_text().splitlines() == ["255,128", "128,255"]


class TestCompareAndForward:
    def test_compare_model_with_itself(self, pipeline_files, capsys):
        _, model, data = pipeline_files
        assert main(["compare", "--model-a", str(model), "--model-b", str(model),
                     "--data", str(data)]) == 0
        stdout = capsys.readouterr().out
        assert "mean_cosine: 1.0" in stdout
        assert "max_abs_diff: 0.0" in stdout

    def test_forward_single_token_row(self, pipeline_files):
        tmp_path, model, _ = pipeline_files
        data = tmp_path / "one.txt"
        data.write_text("7\n")
        out = tmp_path / "emb.csv"
        assert main(["forward", "--model", str(model), "--data", str(data),
                     "--out", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert len(rows) == 1
        assert len(rows[0].split(",")) == 16

    def test_forward_row_count_matches_tokens(self, pipeline_files):
        tmp_path, model, data = pipeline_files
        out = tmp_path / "emb.csv"
        assert main(["forward", "--model", str(model), "--data", str(data),
                     "--out", str(out)]) == 0
        total = sum(len(line.split()) for line in data.read_text().splitlines() if line.strip())
        assert len(out.read_text().splitlines()) == total


class TestEndToEnd:
    def test_full_pipeline(self, pipeline_files, capsys):
        tmp_path, model, data = pipeline_files
        sim = tmp_path / "sim.csv"
        plan_path = tmp_path / "plan.json"
        pruned = tmp_path / "pruned.ascm"
        assert main(["analyze", "--model", str(model), "--data", str(data),
                     "--out", str(sim)]) == 0
        assert main(["plan", "--sim", str(sim), "--threshold", "0.999",
                     "--out", str(plan_path)]) == 0
        assert main(["prune", "--model", str(model), "--plan", str(plan_path),
                     "--out", str(pruned)]) == 0
        capsys.readouterr()
        assert main(["compare", "--model-a", str(model), "--model-b", str(pruned),
                     "--data", str(data)]) == 0
        stdout = capsys.readouterr().out
        mean = float(stdout.split("mean_cosine: ")[1].splitlines()[0])
        assert mean >= 0.999
        assert json.loads(plan_path.read_text())["redundant_layers"] == [2, 3]

    def test_console_script_entry_point(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "asc", "gen-data", "--sequences", "2",
             "--min-len", "2", "--max-len", "4", "--vocab", "5", "--seed", "0",
             "--out", str(tmp_path / "d.txt")],
            capture_output=True, text=True,
        )
        assert result.returncode == 0
        assert (tmp_path / "d.txt").exists()
