import json
import math
import os
import subprocess
import sys

import pytest

import bellsphere.oracles
from bellsphere.cli import main, parse_angle, run_verification


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    env.pop("BELLSPHERE_SEED", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "bellsphere.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


def data_rows(csv_text):
    return [line for line in csv_text.splitlines() if line and not line.startswith("#")]


class TestParseAngle:
    def test_pi_fractions(self):
        assert parse_angle("pi/4") == pytest.approx(math.pi / 4)
        assert parse_angle("3pi/4") == pytest.approx(3 * math.pi / 4)
        assert parse_angle("2pi/3") == pytest.approx(2 * math.pi / 3)
        assert parse_angle("pi") == pytest.approx(math.pi)

    def test_plain_radians(self):
        assert parse_angle("0") == 0.0
        assert parse_angle("1.5707") == pytest.approx(1.5707)

    def test_normalization(self):
        assert parse_angle("2pi") == 0.0
        assert parse_angle("-pi/4") == pytest.approx(7 * math.pi / 4)

    def test_rejects_garbage(self):
        import argparse

        with pytest.raises(argparse.ArgumentTypeError):
            parse_angle("tau/4")
        with pytest.raises(argparse.ArgumentTypeError):
            parse_angle("pi/0")


class TestCorrelate:
    def test_csv_row_and_schema(self):
        result = run_cli(
            "correlate", "--model", "direct", "--theta-a", "0", "--theta-b", "0",
            "--trials", "1000", "--seed", "1",
        )
        assert result.returncode == 0
        rows = data_rows(result.stdout)
        assert rows[0] == "model,theta_a,theta_b,n_trials,e_hat,std_err,e_closed,z_score"
        cells = rows[1].split(",")
        assert cells[0] == "direct"
        assert cells[6] == "-0.333333333"

    def test_ensemble_closed_form_column(self):
        result = run_cli(
            "correlate", "--model", "ensemble", "--theta-a", "0", "--theta-b", "pi/4",
            "--trials", "1000", "--seed", "7",
        )
        assert "-0.176776695" in result.stdout

    def test_missing_model_is_usage_error(self):
        result = run_cli("correlate", "--theta-a", "0", "--theta-b", "0")
        assert result.returncode == 1
        assert "usage" in result.stderr.lower()

    def test_bad_angle_is_usage_error(self):
        result = run_cli(
            "correlate", "--model", "sign", "--theta-a", "garbage", "--theta-b", "0"
        )
        assert result.returncode == 1

    def test_json_output(self, tmp_path):
        out = tmp_path / "row.json"
        result = run_cli(
            "correlate", "--model", "sign", "--theta-a", "0", "--theta-b", "pi/2",
            "--trials", "2000", "--seed", "3", "--format", "json", "--out", str(out),
        )
        assert result.returncode == 0
        payload = json.loads(out.read_text())
        assert isinstance(payload, list) and len(payload) == 1
        assert payload[0]["model"] == "sign"
        assert payload[0]["n_trials"] == 2000

    def test_unwritable_output_is_io_error(self, tmp_path):
        target = tmp_path / "missing-dir" / "row.csv"
        result = run_cli(
            "correlate", "--model", "sign", "--theta-a", "0", "--theta-b", "0",
            "--trials", "100", "--out", str(target),
        )
        assert result.returncode == 3

    def test_env_seed_matches_flag_seed(self):
        by_flag = run_cli(
            "correlate", "--model", "sign", "--theta-a", "0", "--theta-b", "1",
            "--trials", "5000", "--seed", "7",
        )
        by_env = run_cli(
            "correlate", "--model", "sign", "--theta-a", "0", "--theta-b", "1",
            "--trials", "5000", env_extra={"BELLSPHERE_SEED": "7"},
        )
        assert data_rows(by_flag.stdout) == data_rows(by_env.stdout)


class TestChshAndSweep:
    def test_chsh_closed_maximal_violation(self):
        result = run_cli(
            "chsh", "--model", "ensemble", "--angles", "0,pi/4,pi/2,3pi/4",
            "--mode", "closed",
        )
        assert result.returncode == 0
        rows = data_rows(result.stdout)
        assert rows[0] == "model,a,b,a_prime,b_prime,c_value,v_max,violated"
        assert "2.82842712" in rows[1]
        assert rows[1].endswith("true")
        assert "C = 2.82842712" in result.stderr

    def test_chsh_wrong_angle_count(self):
        result = run_cli("chsh", "--model", "sign", "--angles", "0,pi/4")
        assert result.returncode == 1

    def test_sweep_sign_boundary(self):
        result = run_cli("sweep", "--model", "sign", "--step", "pi/8", "--mode", "closed")
        assert result.returncode == 0
        assert "max C = 2" in result.stderr
        assert "violated = false" in result.stderr

    def test_sweep_direct_bound(self):
        result = run_cli("sweep", "--model", "direct", "--step", "pi/8")
        assert "max C = 0.942809042" in result.stderr

    def test_sweep_step_must_divide_pi(self):
        result = run_cli("sweep", "--model", "sign", "--step", "0.3")
        assert result.returncode == 1

    def test_worker_count_reproducibility(self, tmp_path):
        outs = []
        for workers in ("1", "3"):
            path = tmp_path / f"w{workers}.csv"
            result = run_cli(
                "chsh", "--model", "ensemble", "--angles", "0,pi/4,pi/2,3pi/4",
                "--mode", "montecarlo", "--trials", "40000", "--seed", "11",
                "--workers", workers, "--block-size", "1024", "--out", str(path),
            )
            assert result.returncode == 0
            outs.append(data_rows(path.read_text()))
        assert outs[0] == outs[1]


class TestSequential:
    def test_demo_matches_tree_oracle(self):
        result = run_cli(
            "sequential", "--axes", "0,pi/3,2pi/3", "--seed", "3", "--trials", "20000"
        )
        assert result.returncode == 0
        assert "tree oracle=+0.125000" in result.stdout
        assert "alt(-2kP)" in result.stdout  # both delta bookkeepings shown

    def test_reversed_order_flips_the_mean(self):
        result = run_cli(
            "sequential", "--axes", "2pi/3,pi/3", "--seed", "3", "--trials", "20000"
        )
        assert "tree oracle=-0.125000" in result.stdout

    def test_repeated_axis_outcomes_certain(self):
        result = run_cli(
            "sequential", "--axes", "0,0,0", "--seed", "5", "--trials", "5000"
        )
        assert result.returncode == 0
        assert "mc P(+1/2)=1.000000" in result.stdout


class TestVerify:
    def test_passes_and_reports_discrepancy(self):
        result = run_cli("verify", "--seed", "5", "--feasibility-samples", "300")
        assert result.returncode == 0
        assert "[PASS]" in result.stdout
        assert "[FAIL]" not in result.stdout
        # the contested closed form is reported next to the oracle value
        assert "enumeration oracle = -0.0625" in result.stdout
        assert "alt form = -0.125" in result.stdout
        assert "verification PASSED" in result.stdout

    def test_report_discrepancies_prints_grid(self):
        result = run_cli(
            "verify", "--seed", "5", "--feasibility-samples", "100",
            "--report-discrepancies",
        )
        assert result.returncode == 0
        assert "oracle        alt form" in result.stdout

    def test_corrupted_constant_fails_named_check(self, monkeypatch, capsys):
        monkeypatch.setattr(
            bellsphere.oracles, "enumerate_ensemble_E", lambda d: 0.123
        )
        ok = run_verification(5, feasibility_samples=50)
        captured = capsys.readouterr()
        assert not ok
        assert "[FAIL] enumeration oracles match closed forms" in captured.out
        assert "verification FAILED" in captured.out

    def test_exit_code_two_on_failure(self, monkeypatch, capsys):
        monkeypatch.setattr(
            bellsphere.oracles, "enumerate_ensemble_E", lambda d: 0.123
        )
        code = main(["verify", "--seed", "5", "--feasibility-samples", "50"])
        capsys.readouterr()
        assert code == 2
