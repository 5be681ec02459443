import json

import pytest

from curvcheck.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from curvcheck.metric import UnknownMetricError
from curvcheck.report import SCHEMA, ConfigError, RunConfig, emit, resolve_metric, run_suite

FAST = ["--points", "2", "--no-structures", "--quiet"]


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig(metric="flat_r4")
        assert config.points == 10
        assert config.seed == 42
        assert [k.label for k in config.kinds()][-1] == "quasi"

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"points": 0}, "points"),
            ({"tol": 0.0}, "tol"),
            ({"format": "yaml"}, "format"),
            ({"identities": ["Veblen1", "Bianchi3"]}, "unknown identities"),
            ({"k_kinds": ["weyl"]}, "weyl"),
        ],
    )
    def test_validation(self, kwargs, match):
        with pytest.raises(ConfigError, match=match):
            RunConfig(**{"metric": "sphere_s2", **kwargs})

    def test_metric_is_required(self, tmp_path):
        with pytest.raises(ConfigError, match="no metric"):
            RunConfig()
        path = tmp_path / "run.yaml"
        path.write_text("points: 3\n")
        with pytest.raises(ConfigError, match="no metric"):
            RunConfig.from_yaml(path)

    def test_from_yaml(self, fixtures):
        config = RunConfig.from_yaml(fixtures / "run.yaml", seed=None, points=2)
        assert config.metric == "sphere_s3"
        assert config.seed == 7
        assert config.points == 2
        assert config.k_kinds == ["projective", "conformal", "quasi:1:0.5"]
        assert not config.structures

    def test_unknown_keys(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("metric: sphere_s2\nworkers: 4\n")
        with pytest.raises(ConfigError, match="workers"):
            RunConfig.from_yaml(path)

    def test_top_level_mapping(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("- sphere_s2\n")
        with pytest.raises(ConfigError, match="mapping"):
            RunConfig.from_yaml(path)


class TestReport:
    def test_resolve(self, fixtures):
        assert resolve_metric("sphere_s2").name == "sphere_s2"
        assert resolve_metric(str(fixtures / "schwarzschild.metric")).params == {"M": 1.0}
        with pytest.raises(UnknownMetricError, match="neither"):
            resolve_metric("no_such_metric")

    def test_suite(self):
        report = run_suite(RunConfig(metric="sphere_s3", points=2, structures=False))
        assert report.passed
        assert report.signature == (0, 3)
        assert len(report.records) == 2
        identities = report.summary["identities"]
        assert identities["Veblen1"]["asserted"]
        assert identities["Lichnerowicz3"] == {"max_relative": None, "asserted": False, "passed": None}
        # locally symmetric identities are reported, never asserted
        assert identities["AlgRR11"]["passed"] is None
        assert "KLovelock7[conformal]" in identities
        assert set(report.summary["k_tensors"]) == {"projective", "conformal", "concircular", "conharmonic", "quasi"}

    def test_corpus_passes_at_defaults(self, corpus_name):
        report = run_suite(RunConfig(metric=corpus_name))
        assert len(report.records) == 10
        failed = [k for k, v in report.summary["identities"].items() if v["passed"] is False]
        assert report.passed, failed

    def test_json_is_deterministic(self):
        config = RunConfig(metric="sphere_s2", points=2, structures=False, format="json")
        first = emit(run_suite(config), "json")
        second = emit(run_suite(config), "json")
        assert first == second
        data = json.loads(first)
        assert data["schema"] == SCHEMA
        assert data["config"]["seed"] == 42
        assert [p["index"] for p in data["points"]] == [0, 1]

    def test_text(self):
        report = run_suite(RunConfig(metric="sphere_s2", points=1, structures=False))
        text = emit(report, "text").decode()
        assert text.startswith("metric sphere_s2  dim 2  signature (0, 2)")
        assert text.rstrip().endswith("PASS")

    def test_structures_are_attached(self):
        report = run_suite(RunConfig(metric="sphere_s2", points=1, identities=["Veblen1"]))
        assert report.structures.constant_curvature.holds
        assert json.loads(emit(report, "json"))["structures"]["metric"] == "sphere_s2"


class TestCli:
    def test_verify_passes(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(["verify", "--metric", "sphere_s3", *FAST, "--json", str(out)]) == EXIT_OK
        assert json.loads(out.read_text())["summary"]["passed"]

    def test_verify_is_reproducible(self, tmp_path):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for path in paths:
            main(["verify", "--metric", "sphere_s2", *FAST, "--seed", "5", "--json", str(path)])
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_verify_fails_below_roundoff(self, tmp_path):
        out = tmp_path / "report.json"
        code = main(["verify", "--metric", "schwarzschild", *FAST, "--tol", "1e-300", "--json", str(out)])
        assert code == EXIT_FAILED
        assert not json.loads(out.read_text())["summary"]["passed"]

    def test_verify_with_config(self, fixtures, tmp_path):
        out = tmp_path / "report.json"
        code = main(["verify", "--config", str(fixtures / "run.yaml"), "--points", "1", "--quiet", "--json", str(out)])
        assert code == EXIT_OK
        data = json.loads(out.read_text())
        assert data["config"]["seed"] == 7
        assert set(data["summary"]["k_tensors"]) == {"projective", "conformal", "quasi:1:0.5"}

    def test_unknown_metric(self, capsys):
        assert main(["verify", "--metric", "torus", *FAST]) == EXIT_USAGE
        assert "error:" in capsys.readouterr().err

    def test_bad_config_value(self, capsys):
        assert main(["verify", "--metric", "sphere_s2", "--points", "0"]) == EXIT_USAGE
        assert "points" in capsys.readouterr().err

    def test_bad_arguments(self):
        with pytest.raises(SystemExit) as info:
            main(["verify", "--points", "many"])
        assert info.value.code == EXIT_USAGE

    def test_list_metrics(self, capsys):
        assert main(["list-metrics"]) == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 10
        assert out[0].startswith("flat_minkowski")

    def test_parse_check(self, fixtures, capsys):
        assert main(["parse-check", str(fixtures / "schwarzschild.metric")]) == EXIT_OK
        assert "signature (1, 3)" in capsys.readouterr().out

    def test_parse_check_reports_location(self, fixtures, capsys):
        assert main(["parse-check", str(fixtures / "malformed" / "bad_character.metric")]) == EXIT_USAGE
        assert "line 4, column 9" in capsys.readouterr().err

    def test_classify(self, capsys):
        assert main(["classify", "--metric", "sphere_s2", "--points", "1", "--quiet"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["constant_curvature"]["holds"]


class TestCliErrors:
    @pytest.mark.parametrize("command", ["verify", "classify"])
    def test_singular_metric(self, fixtures, command, capsys):
        code = main([command, "--metric", str(fixtures / "singular.metric"), "--points", "1", "--quiet"])
        assert code == EXIT_USAGE
        assert "singular" in capsys.readouterr().err

    def test_jet_singularity(self, fixtures, capsys):
        assert main(["verify", "--metric", str(fixtures / "branch_cut.metric"), *FAST]) == EXIT_USAGE
        assert "sqrt needs a positive argument" in capsys.readouterr().err

    def test_missing_metric(self, capsys):
        assert main(["verify", "--quiet"]) == EXIT_USAGE
        assert "no metric" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "fixture, message",
        [
            ("pole", "g 0 0 cannot be evaluated"),
            ("branch_cut", "g 0 0 cannot be evaluated"),
            ("singular", "degenerate at the domain centre"),
        ],
    )
    def test_parse_check_rejects(self, fixtures, fixture, message, capsys):
        assert main(["parse-check", str(fixtures / f"{fixture}.metric")]) == EXIT_USAGE
        assert message in capsys.readouterr().err
