import json

import numpy as np
import pytest

from cimsel import cli
from cimsel.baselines import search_space_size
from cimsel.channel import MimoConfig, read_channel
from cimsel.formulation import read_instance


def run_cli(*argv):
    return cli.main(list(argv))


def gen_args(out, n_instances=3, seed=11, n=(2, 2, 2)):
    return [
        "gen", "--n-t", str(n[0]), "--n-r", str(n[1]), "--n-states", str(n[2]),
        "--n-instances", str(n_instances), "--seed", str(seed), "--out", str(out),
    ]


class TestGen:
    def test_writes_files_and_manifest(self, tmp_path):
        out = tmp_path / "gen"
        assert run_cli(*gen_args(out)) == 0
        files = sorted(p.name for p in out.glob("channel_*.json"))
        assert files == ["channel_00000.json", "channel_00001.json", "channel_00002.json"]
        manifest = json.load(open(out / "manifest.json"))
        assert manifest["format"] == 1
        assert len(manifest["seeds"]) == manifest["n_instances"] == 3
        assert manifest["files"] == files
        assert (out / "run_config.json").exists()

    def test_regeneration_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli(*gen_args(a))
        run_cli(*gen_args(b))
        for name in ("channel_00000.json", "channel_00001.json", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_files_parse_and_match_manifest_seeds(self, tmp_path):
        out = tmp_path / "gen"
        run_cli(*gen_args(out))
        manifest = json.load(open(out / "manifest.json"))
        for name, seed in zip(manifest["files"], manifest["seeds"]):
            g = read_channel(out / name)
            assert g.seed == seed
            assert g.config == MimoConfig(2, 2, 2)


class TestSolve:
    @pytest.fixture()
    def channel_file(self, tmp_path):
        out = tmp_path / "gen"
        run_cli(*gen_args(out, n_instances=1))
        return out / "channel_00000.json"

    def test_degenerate_instance_reports_unique_assignment(self, tmp_path, capsys):
        out = tmp_path / "gen1"
        run_cli(*gen_args(out, n_instances=1, n=(1, 1, 1)))
        capsys.readouterr()  # drop the gen message
        code = run_cli("solve", str(out / "channel_00000.json"), "--lam", "0.5",
                       "--steps", "50", "--anneals", "5", "--seed", "3")
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["assignment"] == {"tx": [0], "rx": [0]}
        assert report["feasibility_rate"] == 1.0

    def test_repeat_solve_identical_report(self, channel_file, capsys):
        args = ("solve", str(channel_file), "--lam", "0.6", "--steps", "150",
                "--anneals", "10", "--seed", "21")
        run_cli(*args)
        first = capsys.readouterr().out
        run_cli(*args)
        second = capsys.readouterr().out
        assert first == second

    def test_export_ising(self, channel_file, tmp_path, capsys):
        target = tmp_path / "instance.json"
        code = run_cli("solve", str(channel_file), "--lam", "0.4", "--steps", "50",
                       "--anneals", "5", "--seed", "1", "--export-ising", str(target))
        assert code == 0
        j, lam = read_instance(target)
        assert lam == 0.4
        assert j.shape == (9, 9)
        assert np.array_equal(j, j.T)

    def test_dump_trajectory(self, channel_file, tmp_path, capsys):
        target = tmp_path / "traj.csv"
        run_cli("solve", str(channel_file), "--lam", "0.4", "--steps", "100",
                "--anneals", "5", "--seed", "1", "--stride", "25",
                "--dump-trajectory", str(target))
        lines = target.read_text().splitlines()
        assert lines[0].startswith("step,t,s0")
        assert len(lines) == 1 + 5  # steps 0, 25, 50, 75, 100

    def test_malformed_file_names_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"n_t": 1, "n_r": 1, "seed": 0, "entries": [[]]}))
        code = run_cli("solve", str(bad), "--lam", "0.5")
        assert code == 2
        assert "n_states" in capsys.readouterr().err


class TestSweep:
    def test_rows_per_method_and_outputs(self, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = run_cli(
            "sweep", "--n-t", "2", "--n-r", "2", "--n-states", "2",
            "--n-instances", "10", "--lambdas", "0,0.5,1", "--steps", "200",
            "--anneals", "50", "--seed", "4", "--out", str(out), "--plot-data",
        )
        assert code == 0
        lines = (out / "results.csv").read_text().splitlines()
        body = [line.split(",") for line in lines[2:]]
        for method in ("es", "nsa", "rs", "cim_best", "cim_avg"):
            lams = {row[2] for row in body if row[1] == method}
            assert lams == {"0.0", "0.5", "1.0"}
        summary = json.load(open(out / "summary.json"))
        assert summary["format"] == 1
        assert (out / "run.log").read_text().strip() == "all instances completed"
        echoed = json.load(open(out / "run_config.json"))
        assert echoed["command"] == "sweep" and echoed["master_seed"] == 4
        plot = (out / "plot_lambda_e.csv").read_text().splitlines()
        assert plot[0] == "lambda,method,e_rho"

    def test_byte_identical_reruns(self, tmp_path):
        args = lambda d: [
            "sweep", "--n-t", "2", "--n-r", "2", "--n-states", "2",
            "--n-instances", "4", "--lambdas", "0.3,0.7", "--steps", "150",
            "--anneals", "10", "--seed", "8", "--out", str(d),
        ]
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli(*args(a))
        run_cli(*args(b))
        assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({
            "n_t": 2, "n_r": 2, "n_states": 2, "n_instances": 2,
            "lambdas": [0.5], "master_seed": 5,
            "cim": {"steps": 100, "n_anneals": 5},
        }))
        out = tmp_path / "run"
        code = run_cli("sweep", "--config", str(cfg), "--n-instances", "3", "--out", str(out))
        assert code == 0
        echoed = json.load(open(out / "run_config.json"))
        assert echoed["n_instances"] == 3  # flag wins
        assert echoed["cim"]["steps"] == 100
        lines = (out / "results.csv").read_text().splitlines()
        assert {row.split(",")[0] for row in lines[2:]} == {"0", "1", "2"}


class TestTrace:
    def test_sampled_steps(self, tmp_path):
        out = tmp_path / "trace"
        code = run_cli(
            "trace", "--n-t", "2", "--n-r", "2", "--n-states", "2",
            "--n-instances", "3", "--lam", "0.7", "--steps", "1000",
            "--anneals", "10", "--stride", "100", "--seed", "2",
            "--out", str(out), "--plot-data",
        )
        assert code == 0
        summary = json.load(open(out / "trace_summary.json"))
        steps = [row["step"] for row in summary["rows"]]
        assert steps == list(range(0, 1001, 100))
        pc_lines = (out / "plot_step_pc.csv").read_text().splitlines()
        assert pc_lines[0] == "step,p_c"
        assert len(pc_lines) == 1 + len(steps)


class TestCompare:
    def test_es_included_when_budget_passes(self, tmp_path, capsys):
        assert search_space_size(MimoConfig(4, 4, 4)) == 65_536 <= 2 ** 24
        out = tmp_path / "cmp"
        code = run_cli(
            "compare", "--n-t", "2", "--n-r", "2", "--n-states", "2",
            "--n-instances", "3", "--lambdas", "0.6", "--steps", "150",
            "--anneals", "10", "--seed", "3", "--out", str(out),
        )
        assert code == 0
        summary = json.load(open(out / "summary.json"))
        assert "es" in {row["method"] for row in summary["rows"]}

    def test_es_skipped_over_budget(self, tmp_path, capsys):
        out = tmp_path / "cmp"
        code = run_cli(
            "compare", "--n-t", "2", "--n-r", "2", "--n-states", "2",
            "--n-instances", "2", "--lambdas", "0.6", "--steps", "100",
            "--anneals", "5", "--seed", "3", "--es-budget", "10", "--out", str(out),
        )
        assert code == 0
        captured = capsys.readouterr().out
        assert "exhaustive search skipped" in captured
        summary = json.load(open(out / "summary.json"))
        assert "es" not in {row["method"] for row in summary["rows"]}


class TestExportIsing:
    def test_round_trip(self, tmp_path, capsys):
        gen = tmp_path / "gen"
        run_cli(*gen_args(gen, n_instances=1))
        target = tmp_path / "ising.json"
        code = run_cli("export-ising", str(gen / "channel_00000.json"), str(target),
                       "--lam", "0.25")
        assert code == 0
        j, lam = read_instance(target)
        assert lam == 0.25 and j.shape == (9, 9)


class TestEnvOverrides:
    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv("CIMSEL_SEED", "123")
        args = cli.build_parser().parse_args(["sweep"])
        assert args.seed == 123

    def test_flag_beats_environment(self, monkeypatch):
        monkeypatch.setenv("CIMSEL_SEED", "123")
        args = cli.build_parser().parse_args(["sweep", "--seed", "9"])
        assert args.seed == 9
