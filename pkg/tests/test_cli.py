import json

import pytest

from vkecm.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    ExperimentConfig,
    emit_report,
    main,
    parse_config_file,
    resolve_config,
    run_experiment,
)


def run_cli(tmp_path, *argv):
    out = tmp_path / "report.out"
    code = main([*argv, "--out", str(out)])
    return code, (out.read_bytes() if out.exists() else b"")


class TestConfig:
    def test_parse_flat_file(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("gamma = 0.25  # test fraction\nlambda = 128\ntrials=10\n")
        parsed = parse_config_file(str(cfg_file))
        assert parsed == {"gamma": "0.25", "lam": "128", "trials": "10"}

    def test_unknown_key_rejected(self, tmp_path):
        from vkecm.qcore import ParameterError

        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("qubits = 12\n")
        with pytest.raises(ParameterError):
            parse_config_file(str(cfg_file))

    def test_flag_overrides_config(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("gamma = 0.25\ntrials = 7\n")
        args = type("A", (), {})()
        parser_args = ["bounds", "--config", str(cfg_file), "--gamma", "0.4"]
        from vkecm.cli import build_parser

        cfg = resolve_config(build_parser().parse_args(parser_args))
        assert cfg.gamma == 0.4
        assert cfg.trials == 7

    def test_config_echo_revalidates(self):
        cfg = ExperimentConfig(subcommand="bounds", q=0.0)
        report = run_experiment(cfg)
        echoed = ExperimentConfig(**report["config"])
        assert run_experiment(echoed)["config"] == report["config"]


class TestReports:
    def test_json_byte_determinism(self, tmp_path):
        argv = ["pipeline", "--lambda", "64", "--trials", "30", "--seed", "9"]
        code1, payload1 = run_cli(tmp_path, *argv)
        code2, payload2 = run_cli(tmp_path, *argv)
        assert code1 == code2 == EXIT_OK
        assert payload1 == payload2

    def test_out_path_does_not_change_bytes(self, tmp_path):
        argv = ["pipeline", "--lambda", "64", "--trials", "20", "--seed", "9"]
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        main([*argv, "--out", str(a)])
        main([*argv, "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        base = ["pipeline", "--lambda", "64", "--trials", "24", "--seed", "5"]
        _, one = run_cli(tmp_path, *base, "--workers", "1")
        _, many = run_cli(tmp_path, *base, "--workers", "6")
        assert one == many

    def test_header_only_csv_for_empty_metrics(self):
        payload = emit_report({"metrics": []}, "csv")
        assert payload == b"name,value,kind,ci95\n"

    def test_ci_only_on_monte_carlo(self, tmp_path):
        code, payload = run_cli(
            tmp_path, "pipeline", "--lambda", "64", "--trials", "20", "--seed", "3"
        )
        report = json.loads(payload)
        for metric in report["metrics"]:
            if metric["kind"] == "monte_carlo":
                assert metric["ci95"] is not None
            else:
                assert metric["ci95"] is None

    def test_strict_verdict_present_in_demo_mode(self, tmp_path):
        code, payload = run_cli(
            tmp_path, "bounds", "--mode", "demo", "--q", "0.004", "--seed", "1"
        )
        report = json.loads(payload)
        assert report["strict_validation"]["ok"] is False
        assert report["strict_validation"]["violations"]

    def test_metric_kind_tags(self, tmp_path):
        code, payload = run_cli(tmp_path, "bounds", "--q", "0", "--seed", "1")
        report = json.loads(payload)
        kinds = {m["name"]: m["kind"] for m in report["metrics"]}
        assert kinds["t_lambda"] == "formula_echo"
        assert kinds["syndrome_bits"] == "exact"


class TestSubcommands:
    def test_chsh_classical_row(self, tmp_path):
        code, payload = run_cli(tmp_path, "game-value", "--game", "chsh-classical")
        report = json.loads(payload)
        values = {m["name"]: m["value"] for m in report["metrics"]}
        assert code == EXIT_OK
        assert values["value"] == 0.75

    def test_bounds_noiseless_rate(self, tmp_path):
        code, payload = run_cli(
            tmp_path,
            "bounds",
            "--q", "0", "--delta", "0.03", "--alpha", "0.3", "--kappa", "1", "--nu", "0",
        )
        report = json.loads(payload)
        values = {m["name"]: m["value"] for m in report["metrics"]}
        assert values["t_rate"] == pytest.approx(1 - 2.187e-7, abs=1e-15)

    def test_extract_subcommand(self, tmp_path):
        code, payload = run_cli(
            tmp_path, "extract", "--p", "2", "--bv-l", "1", "--oracles", "3", "--seed", "2"
        )
        report = json.loads(payload)
        values = {m["name"]: m["value"] for m in report["metrics"]}
        assert code == EXIT_OK
        assert values["max_identity_deviation"] < 1e-9
        assert values["p5_counterexample_value"] < 1e-12

    def test_attack_subcommand(self, tmp_path):
        code, payload = run_cli(
            tmp_path,
            "attack",
            "--attack", "forward_to_bob",
            "--lambda", "16", "--q", "0", "--trials", "50", "--seed", "4",
        )
        report = json.loads(payload)
        assert code == EXIT_OK
        names = {m["name"] for m in report["metrics"]}
        assert {"accept_rate", "joint_success_rate", "token_violations"} <= names


class TestExitCodes:
    def test_config_violation_exits_2(self, tmp_path):
        code, payload = run_cli(tmp_path, "bounds", "--q", "0.2", "--delta", "0.03")
        assert code == EXIT_CONFIG
        assert payload == b""  # partial results never written

    def test_unknown_attack_exits_2(self, tmp_path):
        code, payload = run_cli(
            tmp_path, "attack", "--attack", "mallory", "--lambda", "16", "--trials", "2"
        )
        assert code == EXIT_CONFIG
        assert payload == b""

    def test_strict_mode_blocks_bad_params(self, tmp_path):
        code, _ = run_cli(tmp_path, "bounds", "--mode", "strict", "--q", "0.004")
        assert code == EXIT_CONFIG
