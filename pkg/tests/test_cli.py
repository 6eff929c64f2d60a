import csv
import io
import json
import subprocess
import sys

import pytest

from conclab.cli import main, parse_grid, ValidationError

STICKY = {"K": 2, "P": [[0.9, 0.1], [0.2, 0.8]], "rho": [0.5, 0.5]}


@pytest.fixture
def chain_file(tmp_path):
    path = tmp_path / "chain.json"
    path.write_text(json.dumps(STICKY))
    return path


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    return json.loads(lines[0][len("# config: "):]), list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


class TestGrid:
    def test_inclusive(self):
        assert parse_grid("0.1:0.9:0.1") == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]

    def test_list(self):
        assert parse_grid([0, 0.5]) == [0.0, 0.5]

    @pytest.mark.parametrize("spec", ["0:1", "1:0:0.1", "0:1:0"])
    def test_rejects(self, spec):
        with pytest.raises(ValidationError):
            parse_grid(spec)


class TestCompare:
    def test_nine_rows(self, chain_file, tmp_path, capsys):
        out = tmp_path / "cmp.csv"
        argv = ["compare", "--chain", str(chain_file), "--n", "50", "--p", "1"]
        argv += ["--eps-grid", "0.1:0.9:0.1", "--trials", "5000", "--csv", str(out)]
        assert main(argv) == 0
        config, rows = read_csv(out)
        assert len(rows) == 9
        assert config["chain"]["P"] == STICKY["P"] and config["n"] == 50
        for row in rows:
            bounds = [float(row[c]) for c in ("bound1", "bound2", "bound3") if row[c] != "NA"]
            assert all(0 <= b <= 1 for b in bounds)
        assert "bound3" in capsys.readouterr().out

    def test_deterministic(self, chain_file, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            argv = ["compare", "--chain", str(chain_file), "--n", "40", "--p", "2"]
            assert main(argv + ["--eps-grid", "0.1:0.3:0.1", "--trials", "2000", "--seed", "4", "--csv", str(path)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_json_output(self, chain_file, tmp_path):
        out = tmp_path / "cmp.json"
        argv = ["compare", "--chain", str(chain_file), "--n", "6", "--p", "1", "--eps-grid", "0:0.2:0.1"]
        assert main(argv + ["--json", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["provenance"]["seed"] == 0 and "chain_hash" in data["provenance"]
        assert len(data["rows"]) == 3 and data["rows"][0]["bound1"] is None


class TestExitCodes:
    def test_reducible_chain(self, tmp_path, capsys):
        bad = tmp_path / "ident.json"
        bad.write_text(json.dumps({"K": 2, "P": [[1, 0], [0, 1]], "rho": [0.5, 0.5]}))
        out = tmp_path / "never.csv"
        argv = ["compare", "--chain", str(bad), "--n", "5", "--p", "1", "--eps-grid", "0.1:0.2:0.1"]
        assert main(argv + ["--csv", str(out)]) == 2
        assert "ergodic" in capsys.readouterr().err
        assert not out.exists()
        assert list(tmp_path.iterdir()) == [bad]

    def test_missing_field(self, capsys):
        assert main(["complexity", "--p", "1"]) == 2
        assert "K_list" in capsys.readouterr().err

    def test_field_named_in_message(self, capsys):
        assert main(["complexity", "--K-list", "2,4", "--p", "1", "--eps", "0.1", "--delta", "1.5", "--r", "0"]) == 2
        assert "delta" in capsys.readouterr().err

    def test_capacity(self, chain_file, capsys):
        assert main(["tci", "--chain", str(chain_file), "--n", "20", "--samples", "10"]) == 3
        assert "capacity" in capsys.readouterr().err

    def test_argparse_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["tail", "--n", "notanumber"])
        assert exc.value.code == 2

    def test_internal_error(self, monkeypatch, capsys):
        import conclab.cli as cli

        def boom(config):
            raise ZeroDivisionError("oops")

        monkeypatch.setitem(cli.COMMANDS, "bounds", boom)
        assert main(["bounds", "--k", "1", "--sigma2", "1", "--lip", "1", "--eps", "1"]) == 4
        assert "internal" in capsys.readouterr().err


class TestConfig:
    def test_flags_override_config(self, chain_file, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"chain": str(chain_file), "n": 5, "p": 1, "eps": 0.4, "seed": 3}))
        out = tmp_path / "tail.csv"
        assert main(["tail", "--config", str(cfg), "--n", "6", "--csv", str(out)]) == 0
        config, rows = read_csv(out)
        assert config["n"] == 6 and config["seed"] == 3
        assert rows[0]["exact_flag"] == "1"

    def test_inline_chain(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"chain": STICKY, "n": 3, "samples": 20}))
        out = tmp_path / "tci.csv"
        assert main(["tci", "--config", str(cfg), "--csv", str(out)]) == 0
        _, rows = read_csv(out)
        assert rows[0]["num_violations"] == "0"

    def test_output_path_not_embedded(self, tmp_path):
        argv = ["bounds", "--k", "2", "--sigma2", "0.5", "--lip", "1", "--eps", "0.5,2"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(argv + ["--csv", str(a)]) == 0 and main(argv + ["--csv", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestSubcommands:
    def test_bounds(self, tmp_path):
        out = tmp_path / "b.csv"
        argv = ["bounds", "--k", "3", "--sigma2", "0.25", "--lip", "1", "--eps", "1", "--eta", "0.25"]
        assert main(argv + ["--csv", str(out)]) == 0
        _, rows = read_csv(out)
        assert float(rows[0]["bound_raw"]) == pytest.approx(1.040520190045778, rel=1e-12)
        assert rows[0]["branch"] == "gaussian" and rows[0]["clamped_flag"] == "1"

    def test_chain_bounds(self, tmp_path):
        out = tmp_path / "cb.csv"
        argv = ["bounds", "--k", "4", "--n", "1000", "--r", "0.5", "--p", "1", "--eps", "0.1,0.5"]
        assert main(argv + ["--csv", str(out)]) == 0
        config, rows = read_csv(out)
        assert list(rows[0]) == ["eps", "approach1", "approach2", "approach3", "eta_used", "clamped_flags"]
        # K / sqrt(n) envelope exceeds 0.1, so approach 1 does not apply there
        assert rows[0]["approach1"] == "NA" and rows[0]["clamped_flags"][0] == "-"
        assert float(rows[1]["approach2"]) < 1 and config["index"] == 1.0

    def test_chain_bounds_stationary_needs_unit_index(self, capsys):
        argv = ["bounds", "--k", "4", "--n", "100", "--r", "0.5", "--p", "1", "--eps", "0.3"]
        assert main(argv + ["--stationary", "--index", "2"]) == 2
        assert "index" in capsys.readouterr().err

    def test_chain_bounds_missing_r(self, capsys):
        assert main(["bounds", "--k", "4", "--n", "100", "--p", "1", "--eps", "0.3"]) == 2
        assert "missing required field(s) for bounds: r" in capsys.readouterr().err

    def test_mgf(self, chain_file, tmp_path):
        out = tmp_path / "m.csv"
        argv = ["mgf", "--chain", str(chain_file), "--n", "6", "--p", "1", "--h", "1,0", "--lambdas=-1,1"]
        assert main(argv + ["--csv", str(out)]) == 0
        _, rows = read_csv(out)
        assert [r["violation"] for r in rows] == ["0", "0"]

    def test_complexity(self, tmp_path):
        out = tmp_path / "c.csv"
        argv = ["complexity", "--K-list", "16,4", "--p", "1", "--eps", "0.1", "--delta", "0.05", "--r", "0.5"]
        assert main(argv + ["--csv", str(out)]) == 0
        _, rows = read_csv(out)
        assert [r["K"] for r in rows] == ["4", "16"]

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "conclab", "bounds", "--k", "1", "--sigma2", "1", "--lip", "1", "--eps", "2"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0 and "gaussian" in proc.stdout
