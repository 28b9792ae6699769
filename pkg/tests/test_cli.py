import json
import sys

import pytest

import traceverify as tv
from traceverify.cli import main


@pytest.fixture(scope="module")
def relay_traces(tmp_path_factory):
    path = tmp_path_factory.mktemp("traces") / "relay.traces"
    from conftest import DEMO_SIM
    sim = tv.HiddenDtmcSimulator.load(DEMO_SIM, seed=11)
    tv.save_traces(tv.sample_batch(sim, 1500, 12), path)
    return path


def run(argv):
    return main([str(a) for a in argv])


class TestVerifyCommand:
    def test_verified_exit_zero(self, tmp_path, relay_traces, relay_sim_path, capsys):
        code = run(["verify", "--traces", relay_traces,
                    "--property", "P <= 0.12 [ F observe0 > 1 ]",
                    "--sampler", f"builtin:{relay_sim_path}",
                    "--delta", "0.015", "--seed", "11",
                    "--out", tmp_path / "out", "--no-figures"])
        assert code == 0
        out = capsys.readouterr().out
        assert "verdict: verified" in out
        payload = json.loads((tmp_path / "out" / "report.json").read_text())
        assert payload["verdict"] == "verified"

    def test_violated_exit_one(self, relay_traces, relay_sim_path, capsys):
        code = run(["verify", "--traces", relay_traces,
                    "--property", "P <= 0.08 [ F observe0 > 1 ]",
                    "--sampler", f"builtin:{relay_sim_path}",
                    "--delta", "0.015", "--seed", "11"])
        assert code == 1
        assert "verdict: violated" in capsys.readouterr().out

    def test_inconclusive_exit_two(self, relay_traces, relay_sim_path, capsys):
        code = run(["verify", "--traces", relay_traces,
                    "--property", "P <= 0.08 [ F observe0 > 1 ]",
                    "--sampler", f"builtin:{relay_sim_path}",
                    "--delta", "0.015", "--seed", "11", "--max-samples", "0"])
        assert code == 2

    def test_property_from_file(self, tmp_path, relay_traces, relay_sim_path):
        prop_file = tmp_path / "prop.txt"
        prop_file.write_text("P <= 0.08 [ F observe0 > 1 ]\n")
        code = run(["verify", "--traces", relay_traces,
                    "--property", prop_file,
                    "--sampler", f"builtin:{relay_sim_path}",
                    "--delta", "0.015", "--seed", "11"])
        assert code == 1

    def test_bad_property_exit_three(self, relay_traces, relay_sim_path, capsys):
        code = run(["verify", "--traces", relay_traces,
                    "--property", "P < 0.2 [ F observe0 > 1 ]",
                    "--sampler", f"builtin:{relay_sim_path}"])
        assert code == 3

    def test_missing_traces_exit_three(self, relay_sim_path):
        code = run(["verify", "--traces", "/nonexistent",
                    "--property", "P <= 0.2 [ F observe0 > 1 ]",
                    "--sampler", f"builtin:{relay_sim_path}"])
        assert code == 3

    def test_exec_sampler_protocol(self, tmp_path, capsys):
        # external generator prints one trace per call; min length is argv[1]
        gen = tmp_path / "gen.py"
        gen.write_text(
            "import sys\n"
            "n = int(sys.argv[1])\n"
            "print('observe0')\n"
            "print('\\n'.join('0' for _ in range(n)))\n"
        )
        traces = tmp_path / "t.traces"
        traces.write_text("observe0\n0\n2\n2\n\n0\n0\n0\n")
        code = run(["verify", "--traces", traces,
                    "--property", "P <= 0.25 [ F observe0 > 1 ]",
                    "--sampler", f"exec:{sys.executable} {gen}",
                    "--delta", "0.1", "--max-samples", "500", "--seed", "1"])
        # the external system never reaches the target: counterexamples are
        # spurious; with two identical-valued states no refinement exists
        assert code == 2
        assert "verdict: inconclusive" in capsys.readouterr().out


class TestOtherCommands:
    def test_learn_writes_model(self, tmp_path, running_file, capsys):
        code = run(["learn", "--traces", running_file,
                    "--predicate", "observe0 > 1", "--out", tmp_path])
        assert code == 0
        model = tv.load_model(tmp_path / "model.dtmc")
        assert model.n_states >= 2
        assert "selected epsilon" in capsys.readouterr().out

    def test_check_reports_probability(self, tmp_path, chain, capsys):
        tv.save_model(chain, tmp_path / "m.dtmc")
        code = run(["check", "--model", tmp_path / "m.dtmc",
                    "--threshold", "0.2", "--solution"])
        assert code == 1
        out = capsys.readouterr().out
        assert "probability: " in out and "violated" in out
        assert "state 0" in out

    def test_sample_and_stats(self, tmp_path, relay_sim_path, capsys):
        out = tmp_path / "s.traces"
        assert run(["sample", "--sampler", f"builtin:{relay_sim_path}",
                    "--count", "25", "--min-length", "5",
                    "--seed", "3", "--out", out]) == 0
        assert run(["stats", "--traces", out, "--out", tmp_path]) == 0
        text = capsys.readouterr().out
        assert "traces: 25" in text
        assert (tmp_path / "trace_lengths.png").exists()

    def test_sample_bound_command(self, capsys):
        assert run(["sample-bound", "--states", "10",
                    "--precision", "0.05", "--confidence", "0.05"]) == 0
        assert capsys.readouterr().out.strip() == "1659"
