import json

import jsonschema
import pytest

from svtune.cli import EXIT_OK, EXIT_SETUP, RunConfig, main, parse_model, run
from svtune.errors import ModelFormatError, SvtuneError
from svtune.grid import build_benchmark, model_to_dict, save_model
from svtune.reporting import load_schema


@pytest.fixture()
def model_file(tmp_path):
    model, _ = build_benchmark("two-area-4")
    path = tmp_path / "two_area.json"
    save_model(model, path)
    return path


class TestRunConfig:
    def test_requires_exactly_one_source(self):
        with pytest.raises(SvtuneError):
            RunConfig(command="analyze")
        with pytest.raises(SvtuneError):
            RunConfig(command="analyze", benchmark="two-area-4", model_path="x.json")

    def test_scale_positive(self):
        with pytest.raises(SvtuneError):
            RunConfig(command="analyze", benchmark="two-area-4", scale=-1.0)


class TestParseModel:
    def test_round_trip(self, model_file):
        model = parse_model(model_file)
        bench, _ = build_benchmark("two-area-4")
        assert model_to_dict(model) == model_to_dict(bench)

    def test_version_error(self, tmp_path, model_file):
        doc = json.loads(model_file.read_text())
        doc["format"] = 2
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError):
            parse_model(bad)

    def test_shunt_violation_names_bus(self, tmp_path, model_file):
        doc = json.loads(model_file.read_text())
        model = parse_model(model_file)
        b = model.network.bs.copy()
        b[2, 2] += 1.0
        doc["admittance"] = {"g": model.network.gc.tolist(), "b": b.tolist()}
        bad = tmp_path / "bad_admittance.json"
        bad.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError) as exc:
            parse_model(bad)
        assert "buses[2]" in str(exc.value)


class TestAnalyze:
    def test_stable_model_exit_zero(self, tmp_path, model_file):
        out = tmp_path / "out"
        code = run(RunConfig(command="analyze", model_path=str(model_file),
                             out_dir=str(out)))
        assert code == EXIT_OK
        doc = json.loads((out / "report.json").read_text())
        jsonschema.validate(doc, load_schema())
        assert doc["meta"]["stable"] is True
        assert doc["poles"]
        assert doc["summary"]["inner_iterations"] == 0

    def test_missing_file_exit_setup(self, tmp_path):
        code = run(RunConfig(command="analyze", model_path="/nonexistent.json",
                             out_dir=str(tmp_path)))
        assert code == EXIT_SETUP

    def test_scale_outside_box_exit_setup(self, tmp_path, model_file):
        code = run(RunConfig(command="analyze", model_path=str(model_file),
                             scale=100.0, out_dir=str(tmp_path)))
        assert code == EXIT_SETUP


class TestStabilizeCommand:
    def test_already_stable_zero_outer(self, tmp_path):
        out = tmp_path / "out"
        code = run(RunConfig(command="stabilize", benchmark="two-area-4",
                             scale=1.0, out_dir=str(out)))
        assert code == EXIT_OK
        doc = json.loads((out / "report.json").read_text())
        assert doc["status"] == "stabilized"
        assert doc["summary"]["outer_iterations"] == 0

    def test_end_to_end_unstable_run(self, tmp_path):
        out = tmp_path / "out"
        code = run(RunConfig(command="stabilize", benchmark="two-area-4",
                             scale=1.25, out_dir=str(out)))
        assert code == EXIT_OK
        doc = json.loads((out / "report.json").read_text())
        jsonschema.validate(doc, load_schema())
        assert doc["status"] == "stabilized"
        assert doc["meta"]["max_re_pole_final"] < 0
        csv_lines = (out / "iterations.csv").read_text().splitlines()
        assert len(csv_lines) == 1 + doc["summary"]["inner_iterations"]
        params = json.loads((out / "params_final.json").read_text())
        assert len(params["values"]) == 36


class TestPkBaselineCommand:
    def test_already_stable(self, tmp_path):
        out = tmp_path / "out"
        code = run(RunConfig(command="pk-baseline", benchmark="two-area-4",
                             scale=1.0, out_dir=str(out)))
        assert code == EXIT_OK
        doc = json.loads((out / "report.json").read_text())
        jsonschema.validate(doc, load_schema())
        assert doc["meta"]["method"] == "pk"
        assert doc["pk_iterations"] == []


class TestMinimizeGammaCommand:
    def test_requires_delta(self, tmp_path):
        code = run(RunConfig(command="minimize-gamma", benchmark="two-area-4",
                             out_dir=str(tmp_path)))
        assert code == EXIT_SETUP

    def test_runs_on_stable_model(self, tmp_path):
        out = tmp_path / "out"
        code = run(RunConfig(command="minimize-gamma", benchmark="two-area-4",
                             scale=1.0, delta=1.0, k_max=3, out_dir=str(out)))
        assert code == EXIT_OK
        doc = json.loads((out / "report.json").read_text())
        jsonschema.validate(doc, load_schema())


class TestMain:
    def test_help_lists_commands(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for cmd in ("analyze", "stabilize", "minimize-gamma", "pk-baseline"):
            assert cmd in out

    def test_subcommand_help_documents_flags(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["stabilize", "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for flag in ("--benchmark", "--model", "--scale", "--alpha", "--kmax",
                     "--rel-tol", "--out", "--seed"):
            assert flag in out

    def test_analyze_via_argv(self, tmp_path):
        code = main([
            "analyze", "--benchmark", "two-area-4", "--out", str(tmp_path / "o"),
        ])
        assert code == EXIT_OK

    def test_unstable_analyze_still_ok(self, tmp_path):
        code = main([
            "analyze", "--benchmark", "two-area-4", "--scale", "1.5",
            "--out", str(tmp_path / "o"),
        ])
        assert code == EXIT_OK
        doc = json.loads((tmp_path / "o" / "report.json").read_text())
        assert doc["meta"]["stable"] is False
