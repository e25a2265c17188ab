import json
import os

import pytest
import yaml

from simonslab.main import EXIT_CONFIG, EXIT_OK, build_parser, main

MOMENTS = ["moments", "--n", "2..4", "--mc-samples", "0"]


def run_dir(root):
    entries = os.listdir(root)
    assert len(entries) == 1
    return os.path.join(root, entries[0])


def read_all(directory):
    out = {}
    for base, _, files in os.walk(directory):
        for name in files:
            path = os.path.join(base, name)
            with open(path, "rb") as handle:
                out[os.path.relpath(path, directory)] = handle.read()
    return out


class TestRun:
    def test_moments_run(self, tmp_path, capsys):
        assert main(MOMENTS + ["--output", str(tmp_path)]) == EXIT_OK
        directory = run_dir(tmp_path)
        assert os.path.basename(directory).startswith("moments-")
        files = read_all(directory)
        assert {"config.resolved", "report.json", os.path.join("tables", "moments.csv")} <= set(files)

        report = json.loads(files["report.json"])
        assert report["passed"] is True
        assert report["config"]["n"] == [2, 3, 4]
        assert os.path.basename(directory) == f"moments-{report['config_hash'][:12]}"
        assert yaml.safe_load(files["config.resolved"])["command"] == "moments"

        lines = capsys.readouterr().out.splitlines()
        assert "PASS moments[n=2]" in [" ".join(line.split()[:2]) for line in lines]

    def test_reruns_are_identical(self, tmp_path):
        first, second, threaded = (str(tmp_path / name) for name in ("a", "b", "c"))
        assert main(MOMENTS + ["--output", first]) == EXIT_OK
        assert main(MOMENTS + ["--output", second]) == EXIT_OK
        assert main(MOMENTS + ["--output", threaded, "--workers", "2"]) == EXIT_OK
        reference = read_all(run_dir(first))
        assert read_all(run_dir(second)) == reference
        assert read_all(run_dir(threaded)) == reference

    def test_config_file(self, tmp_path):
        config = tmp_path / "moments.yaml"
        config.write_text(yaml.safe_dump({"command": "moments", "moments": {"n": "2..3", "mc_samples": 0},
                                          "output": {"name": "small"}}))
        out = tmp_path / "runs"
        assert main(["moments", "--config", str(config), "--output", str(out)]) == EXIT_OK
        with open(out / "small" / "report.json", encoding="utf-8") as handle:
            assert json.load(handle)["config"]["n"] == [2, 3]

    def test_flags_override_file(self, tmp_path):
        config = tmp_path / "moments.yaml"
        config.write_text(yaml.safe_dump({"moments": {"n": "2..6", "mc_samples": 0}}))
        out = tmp_path / "runs"
        assert main(["moments", "--config", str(config), "--n", "3", "--output", str(out)]) == EXIT_OK
        with open(os.path.join(run_dir(out), "report.json"), encoding="utf-8") as handle:
            assert json.load(handle)["config"]["n"] == [3]

    def test_sections_are_resolved(self, tmp_path):
        args = ["verify", "--surface", "catenoid:1", "--point", "neck", "--classical", "--output", str(tmp_path)]
        assert main(args) == EXIT_OK
        resolved = yaml.safe_load(read_all(run_dir(tmp_path))["config.resolved"])
        assert resolved["quadrature"]["levels"] == [5, 6]
        assert resolved["quadrature"]["delta"] == 0.0
        assert resolved["quadrature"]["deltas"] is None


class TestErrors:
    def test_bad_indices(self, tmp_path, capsys):
        code = main(["verify", "--surface", "plane", "--ij", "1,5", "--output", str(tmp_path)])
        assert code == EXIT_CONFIG
        assert "indices" in capsys.readouterr().out

    def test_unknown_section(self, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text(yaml.safe_dump({"moments": {"n": "2..3"}, "quadratures": {"levels": [3]}}))
        assert main(["moments", "--config", str(config), "--output", str(tmp_path)]) == EXIT_CONFIG

    def test_command_mismatch(self, tmp_path):
        config = tmp_path / "verify.yaml"
        config.write_text(yaml.safe_dump({"command": "verify"}))
        assert main(["moments", "--config", str(config), "--output", str(tmp_path)]) == EXIT_CONFIG

    def test_no_command(self):
        assert main([]) == EXIT_CONFIG


class TestParser:
    def test_list(self, capsys):
        assert main(["--list"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "Identities" in out and "verify" in out

    def test_flags_follow_properties(self):
        parser = build_parser()
        args = parser.parse_args(["limit-study", "--eps", "0.4,0.2", "--mode", "cap"])
        assert args.opt_limit__eps == "0.4,0.2"
        with pytest.raises(SystemExit):
            parser.parse_args(["moments", "--eps", "0.4"])
