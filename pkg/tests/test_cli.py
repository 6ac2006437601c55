import csv
import json

import numpy as np
import pytest

from hermite_lab import cli


def run(tmp_path, sub, *sets, config=None, name="out.csv"):
    out = tmp_path / name
    args = [sub] + ([str(config)] if config else []) + ["-o", str(out)]
    for s in sets:
        args += ["--set", s]
    return cli.main(args), out


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# hermite-lab ")
    return list(csv.DictReader(lines[1:]))


class TestExitCodes:
    def test_no_subcommand(self, capsys):
        assert cli.main([]) == cli.EXIT_CONFIG
        assert "usage" in capsys.readouterr().err

    def test_empty_config(self, tmp_path, capsys):
        cfg = tmp_path / "empty.ini"
        cfg.write_text("")
        code, _ = run(tmp_path, "transform", config=cfg)
        assert code == 2
        err = capsys.readouterr().err
        assert "usage" in err and "empty" in err

    def test_missing_config(self, tmp_path):
        assert run(tmp_path, "transform", config=tmp_path / "nope.ini")[0] == 2

    @pytest.mark.parametrize("bad, field", [
        ("Kmax=3", "Kmax"),
        ("K=three", "K"),
        ("format=xml", "format"),
        ("workers=0", "workers"),
    ])
    def test_field_level_messages(self, tmp_path, capsys, bad, field):
        assert run(tmp_path, "transform", bad)[0] == 2
        assert field in capsys.readouterr().err

    def test_unknown_section(self, tmp_path, capsys):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[transfrom]\nK = 4\n")
        assert run(tmp_path, "transform", config=cfg)[0] == 2
        assert "transfrom" in capsys.readouterr().err

    def test_parameter_error_is_config_error(self, tmp_path):
        assert run(tmp_path, "transform", "M=1000")[0] == 2

    def test_accuracy_error(self, tmp_path, capsys):
        # K close to M fills the top band of the DVR and trips the monitor
        code, _ = run(tmp_path, "hartree", "K=62", "M=65", "steps=20", "checks=false")
        assert code == cli.EXIT_ACCURACY
        assert capsys.readouterr().err.startswith("hermite-lab hartree:")

    def test_instability(self, tmp_path):
        code, _ = run(tmp_path, "hartree", "w0=1e308", "sigma=100", "steps=3", "checks=false", "J=1")
        assert code == cli.EXIT_INSTABILITY

    def test_bad_workers_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.WORKERS_ENV, "many")
        assert run(tmp_path, "transform", "states=1")[0] == 2


class TestConfig:
    def test_sections_for_other_commands_ignored(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[transform]\nK = 8\nstates = 3\n\n[hartree]\nsteps = 5\n")
        code, out = run(tmp_path, "transform", config=cfg)
        assert code == 0
        assert len(read_rows(out)) == 3

    def test_set_overrides_file(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[transform]\nK = 8\nstates = 3\n")
        _, out = run(tmp_path, "transform", "states=2", config=cfg)
        assert len(read_rows(out)) == 2

    @pytest.mark.parametrize("kind, text, value", [
        ("bool", "yes", True),
        ("bool", "0", False),
        ("floats", "1, 2.5", [1.0, 2.5]),
        ("complexes", "-0.5, 1+2j", [-0.5 + 0j, 1 + 2j]),
    ])
    def test_parsers(self, kind, text, value):
        assert cli.PARSERS[kind](text) == value

    def test_workers_from_env(self, monkeypatch):
        monkeypatch.setenv(cli.WORKERS_ENV, "3")
        assert cli.resolve_workers(None) == 3
        assert cli.resolve_workers(2) == 2
        monkeypatch.delenv(cli.WORKERS_ENV)
        assert cli.resolve_workers(None) == 1


class TestOutputs:
    def test_schema_header_and_summary(self, tmp_path, capsys):
        code, out = run(tmp_path, "transform", "states=2", "K=8")
        assert code == 0
        assert out.read_text().splitlines()[:2] == ["# hermite-lab transform schema 1", "state,coef_error,norm_error"]
        summary = (tmp_path / "out.summary.txt").read_text()
        assert "Plancherel" in summary and "[PASS]" in summary
        assert capsys.readouterr().out == summary

    def test_json(self, tmp_path):
        code, out = run(tmp_path, "transform", "states=2", "K=8", "format=json", name="out.json")
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["schema"] == "hermite-lab/transform/1"
        assert doc["columns"] == ["state", "coef_error", "norm_error"]
        assert len(doc["rows"]) == 2
        assert all(c["passed"] for c in doc["checks"])

    def test_strichartz_ground_state_row(self, tmp_path):
        # J=1 spectral system is Phi_0; ratio = 2^{1/3} 3^{-1/6}
        code, out = run(tmp_path, "strichartz", "family=spectral", "J=1", "K=32")
        assert code == 0
        (row,) = read_rows(out)
        assert float(row["ratio"]) == pytest.approx(2 ** (1 / 3) * 3 ** (-1 / 6), rel=1e-6)
        assert float(row["r"]) == 1.5

    def test_series_remainder_bounded(self, tmp_path):
        code, out = run(tmp_path, "series", "z=-0.5", "t_min=1e-3", "t_max=1", "per_decade=3")
        assert code == 0
        rows = read_rows(out)
        b = np.array([float(r["remainder_abs"]) for r in rows])
        assert b.max() <= 10 * b[-1]
        # complex columns come as re/im pairs
        assert {"series_re", "series_im", "remainder_re", "remainder_im"} <= set(rows[0])

    def test_pool_preserves_order(self, tmp_path):
        sets = ("K=8", "seeds=3", "J=1,2,4")
        _, serial = run(tmp_path, "strichartz", *sets, "workers=1", name="a.csv")
        _, pooled = run(tmp_path, "strichartz", *sets, "workers=2", name="b.csv")
        assert serial.read_bytes() == pooled.read_bytes()

    def test_seed_changes_output(self, tmp_path):
        _, a = run(tmp_path, "transform", "states=2", "seed=1", name="a.csv")
        _, b = run(tmp_path, "transform", "states=2", "seed=2", name="b.csv")
        assert a.read_bytes() != b.read_bytes()
