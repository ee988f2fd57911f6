import csv
import json
import math

import pytest

from hardyions.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestIdeal:
    def test_json_probabilities(self, capsys):
        code, out, _ = run_cli(capsys, "ideal", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["probabilities"]["gg"] == pytest.approx(0.0625, abs=1e-12)
        assert payload["sum_of_squares"] == pytest.approx(1.0, abs=1e-12)

    def test_text_table(self, capsys):
        code, out, _ = run_cli(capsys, "ideal")
        assert code == 0
        assert "sum of squared amplitudes: 1.000000000000" in out
        assert out.count("\n") == 11  # header + nine states + checksum

    def test_csv(self, capsys):
        code, out, _ = run_cli(capsys, "ideal", "--format", "csv")
        assert code == 0
        rows = out.strip().splitlines()
        assert rows[0] == "state,re,im,probability"
        assert len(rows) == 10
        gg = rows[1].split(",")
        assert gg[0] == "gg"
        assert float(gg[1]) == pytest.approx(-0.25, abs=1e-12)


class TestWeak:
    def test_json_report(self, capsys):
        code, out, _ = run_cli(capsys, "weak", "--a", "0.05", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["weak_values"]["gg"][0] == pytest.approx(-1.0, abs=1e-12)
        assert payload["pointer_mean"] == pytest.approx(payload["closed_form_mean"], rel=1e-12)

    def test_sigma_scales_lengths(self, capsys):
        _, out1, _ = run_cli(capsys, "weak", "--a", "0.05", "--format", "json")
        _, out2, _ = run_cli(capsys, "weak", "--a", "0.05", "--sigma", "2.0", "--format", "json")
        mean1 = json.loads(out1)["pointer_mean"]
        mean2 = json.loads(out2)["pointer_mean"]
        assert mean2 == pytest.approx(2.0 * mean1, rel=1e-12)


class TestScan:
    def test_row_count_and_header(self, capsys):
        code, out, _ = run_cli(capsys, "scan", "--min", "0.1", "--max", "1.0", "--steps", "10")
        assert code == 0
        rows = out.strip().splitlines()
        assert rows[0] == "a_over_sigma,mean_over_a,closed_form_over_a,probability"
        assert len(rows) == 11

    def test_mean_columns_agree(self, capsys):
        _, out, _ = run_cli(capsys, "scan", "--min", "0.1", "--max", "3.0", "--steps", "30")
        for row in csv.DictReader(out.splitlines()):
            simulated = float(row["mean_over_a"])
            closed = float(row["closed_form_over_a"])
            assert abs(simulated - closed) <= 1e-12 * max(1.0, abs(closed))

    def test_sign_change_bracketed(self, capsys):
        _, out, _ = run_cli(capsys, "scan", "--min", "0.01", "--max", "5.0", "--steps", "100")
        rows = list(csv.DictReader(out.splitlines()))
        threshold = math.sqrt(8.0 * math.log(2.0))
        flips = [
            (float(rows[i]["a_over_sigma"]), float(rows[i + 1]["a_over_sigma"]))
            for i in range(len(rows) - 1)
            if float(rows[i]["mean_over_a"]) > 0.0 >= float(rows[i + 1]["mean_over_a"])
        ]
        assert len(flips) == 1
        low, high = flips[0]
        assert low <= threshold <= high

    def test_single_step_rejected(self, capsys):
        code, _, err = run_cli(capsys, "scan", "--steps", "1")
        assert code == 2
        assert "steps" in err

    def test_invalid_range_rejected(self, capsys):
        code, _, _ = run_cli(capsys, "scan", "--min", "0.0", "--max", "1.0")
        assert code == 2
        code, _, _ = run_cli(capsys, "scan", "--min", "2.0", "--max", "1.0")
        assert code == 2


class TestMonteCarlo:
    def test_deterministic_json(self, capsys):
        argv = ("mc", "--a", "0.05", "--sigma", "1", "--shots", "20000", "--seed", "7")
        code1, out1, _ = run_cli(capsys, *argv)
        code2, out2, _ = run_cli(capsys, *argv)
        assert code1 == code2 == 0
        assert out1 == out2
        payload = json.loads(out1)
        assert payload["total"] == 20000
        assert payload["seed"] == 7

    def test_acceptance_near_one_sixteenth(self, capsys):
        _, out, _ = run_cli(capsys, "mc", "--shots", "100000", "--seed", "1")
        payload = json.loads(out)
        fraction = payload["accepted"] / payload["total"]
        assert abs(fraction - 1.0 / 16.0) < 5.0 * math.sqrt(0.0625 * 0.9375 / 100000)

    def test_zero_shots_rejected(self, capsys):
        code, _, err = run_cli(capsys, "mc", "--shots", "0")
        assert code == 2
        assert "shot" in err

    def test_zero_accepted_exits_3(self, capsys):
        from hardyions.protocol import RunConfig
        from hardyions.shots import run_experiment_mc

        rejecting_seed = next(
            seed
            for seed in range(20)
            if run_experiment_mc(RunConfig(a=0.05, shots=1, seed=seed)).accepted == 0
        )
        code, out, _ = run_cli(capsys, "mc", "--shots", "1", "--seed", str(rejecting_seed))
        assert code == 3
        assert json.loads(out)["sample_mean"] is None

    def test_per_shot_csv(self, capsys, tmp_path):
        path = tmp_path / "shots.csv"
        code, out, _ = run_cli(
            capsys, "mc", "--shots", "500", "--seed", "2", "--per-shot", str(path)
        )
        assert code == 0
        payload = json.loads(out)
        rows = list(csv.DictReader(path.read_text().splitlines()))
        assert len(rows) == 500
        accepted_rows = [r for r in rows if r["accepted"] == "1"]
        assert len(accepted_rows) == payload["accepted"]
        assert all(r["x_sample"] == "" for r in rows if r["accepted"] == "0")
        assert all(r["x_sample"] != "" for r in accepted_rows)


class TestThirdIonCommand:
    def test_json_report(self, capsys):
        code, out, _ = run_cli(capsys, "third-ion", "--theta", "0.1", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["excited_population"] < 0.5
        assert payload["reference_shift"] == pytest.approx(math.sin(0.1) / 2.0, abs=1e-15)

    def test_out_of_range_angle(self, capsys):
        code, _, _ = run_cli(capsys, "third-ion", "--theta", "3.2")
        assert code == 2


class TestStrongCommand:
    def test_tables(self, capsys):
        code, out, _ = run_cli(capsys, "strong", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["undisturbed"]["gg"] == pytest.approx(1.0 / 16.0, abs=1e-12)
        assert payload["disturbed"]["gg"] == pytest.approx(5.0 / 16.0, abs=1e-12)
        assert sum(payload["disturbed"].values()) == pytest.approx(1.0, abs=1e-12)


class TestPlumbing:
    def test_unknown_flag_rejected(self, capsys):
        code, _, _ = run_cli(capsys, "ideal", "--bogus")
        assert code == 2

    def test_unknown_command_rejected(self, capsys):
        code, _, _ = run_cli(capsys, "teleport")
        assert code == 2

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "ideal.json"
        code, out, _ = run_cli(capsys, "ideal", "--format", "json", "--out", str(path))
        assert code == 0
        assert out == ""
        assert json.loads(path.read_text())["probabilities"]["gg"] == pytest.approx(0.0625)

    def test_config_file(self, capsys, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("# weak run\na = 0.2\nformat = json\n")
        code, out_cfg, _ = run_cli(capsys, "weak", "--config", str(config))
        assert code == 0
        _, out_flag, _ = run_cli(capsys, "weak", "--a", "0.2", "--format", "json")
        assert out_cfg == out_flag

    def test_flags_override_config(self, capsys, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("a = 0.2\n")
        _, out, _ = run_cli(
            capsys, "weak", "--config", str(config), "--a", "0.3", "--format", "json"
        )
        _, expected, _ = run_cli(capsys, "weak", "--a", "0.3", "--format", "json")
        assert out == expected

    def test_malformed_config_rejected(self, capsys, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("not a key value line\n")
        code, _, err = run_cli(capsys, "weak", "--config", str(config))
        assert code == 2
        assert "key=value" in err

    def test_unknown_config_key_rejected(self, capsys, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("warp = 9\n")
        code, _, _ = run_cli(capsys, "weak", "--config", str(config))
        assert code == 2

    def test_invariant_violation_exits_4(self, capsys, monkeypatch):
        from hardyions import cli
        from hardyions.errors import InvariantError

        def broken():
            raise InvariantError("norm drifted")

        monkeypatch.setattr(cli, "run_ideal", broken)
        code, _, err = run_cli(capsys, "ideal")
        assert code == 4
        assert "invariant" in err
