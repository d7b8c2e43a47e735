# -*- coding: utf-8 -*-
"""
命令行测试
"""

import json

import pytest

from app.cli import format_number, main, parse_number

LISTING = ["--method", "corr", "--r", "0.20,sqrt(0.45),sqrt(0.55)", "--n", "100,100,100"]

pytestmark = pytest.mark.integration


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out.strip(), captured.err


class TestParsing:
    """数值解析与格式"""

    def test_sqrt_token(self):
        assert parse_number("sqrt(0.25)") == 0.5
        assert parse_number(" 0.2 ") == 0.2

    def test_seven_significant_digits(self):
        assert format_number(-0.16471743) == "-0.1647174"
        assert format_number(1.0) == "1"


class TestPValueCommand:
    """pvalue 子命令"""

    def test_zero_null(self, capsys):
        code, out, _ = _run(capsys, ["pvalue", "--method", "corr", "--rho", "0",
                                     "--r", "0.20,0.67082,0.74162", "--n", "100,100,100"])
        assert code == 0
        assert float(out) == pytest.approx(0.263, abs=1e-3)

    def test_hs_at_point_estimate(self, capsys):
        code, out, _ = _run(capsys, ["pvalue", "--method", "hs", "--rho", "0.6582",
                                     "--r", "0.52,0.79,0.79", "--n", "85"])
        assert code == 0
        assert float(out) == pytest.approx(1.0, abs=1e-3)

    def test_rho_out_of_range(self, capsys):
        code, out, err = _run(capsys, ["pvalue", *LISTING, "--rho", "1.5"])
        assert code == 2
        assert out == ""
        assert "rho must lie in [-1,1]" in err
        assert "usage:" in err

    def test_missing_required_flag(self, capsys):
        code, _, err = _run(capsys, ["pvalue", "--method", "corr", "--rho", "0"])
        assert code == 2
        assert "usage:" in err

    def test_unknown_method(self, capsys):
        code, _, _ = _run(capsys, ["pvalue", *LISTING[2:], "--method", "spearman", "--rho", "0"])
        assert code == 2

    def test_cronbach_requires_testlets(self, capsys):
        code, _, err = _run(capsys, ["pvalue", "--method", "cronbach", "--rho", "0.5",
                                     "--r", "0.52,0.79,0.79", "--n", "85,2028,711"])
        assert code == 2
        assert "--k" in err

    def test_testlets_rejected_for_corr(self, capsys):
        code, _, _ = _run(capsys, ["pvalue", *LISTING, "--rho", "0.5", "--k", "4,4"])
        assert code == 2

    def test_reliabilities_flag_equivalence(self, capsys):
        _, as_correlations, _ = _run(capsys, ["pvalue", *LISTING, "--rho", "0.7"])
        _, as_reliabilities, _ = _run(capsys, ["pvalue", "--method", "corr", "--rho", "0.7",
                                               "--r", "0.20,0.45,0.55", "--reliabilities",
                                               "--n", "100,100,100"])
        assert float(as_correlations) == pytest.approx(float(as_reliabilities), abs=1e-9)


class TestCiCommand:
    """ci 子命令"""

    def test_listing(self, capsys):
        code, out, _ = _run(capsys, ["ci", *LISTING, "--level", "0.95"])
        kind, lo, hi = out.split(",")
        assert code == 0
        assert kind == "interval"
        assert float(lo) == pytest.approx(-0.1647174, abs=1e-3)
        assert float(hi) == pytest.approx(0.9958587, abs=1e-3)

    def test_hs_example_one(self, capsys):
        code, out, _ = _run(capsys, ["ci", "--method", "hs", "--r", "0.57,0.56,0.55",
                                     "--reliabilities", "--n", "488", "--level", "0.95"])
        kind, lo, hi = out.split(",")
        assert code == 0
        assert kind == "interval"
        assert float(lo) == pytest.approx(0.92, abs=0.01)
        assert float(hi) == 1.0

    def test_empty_set(self, capsys):
        code, out, _ = _run(capsys, ["ci", "--method", "hs", "--r", "0.9,0.5,0.5", "--n", "1000"])
        assert code == 0
        assert out == "empty,,"

    def test_endpoints_match_pvalue(self, capsys):
        _, out, _ = _run(capsys, ["ci", *LISTING])
        for endpoint in out.split(",")[1:]:
            _, p, _ = _run(capsys, ["pvalue", *LISTING, "--rho", endpoint])
            assert float(p) == pytest.approx(0.05, abs=1e-5)

    def test_stdout_has_only_the_result(self, capsys):
        _, out, _ = _run(capsys, ["-v", "ci", *LISTING])
        assert len(out.splitlines()) == 1


class TestCcCommand:
    """cc 子命令"""

    EXAMPLE_ONE = ["--method", "corr", "--r", "0.57,sqrt(0.56),sqrt(0.55)", "--n", "488,488,488"]

    def test_default_grid(self, capsys, tmp_path):
        out = tmp_path / "curve.csv"
        code, _, _ = _run(capsys, ["cc", *self.EXAMPLE_ONE, "--out", str(out)])
        lines = out.read_text().splitlines()
        assert code == 0
        assert lines[0] == "rho,cc,method"
        assert len(lines) == 201

        rows = [line.split(",") for line in lines[1:]]
        rho, cc = min(((float(r), float(c)) for r, c, _ in rows), key=lambda pair: pair[1])
        assert rho == pytest.approx(1.0, abs=0.02)
        assert cc == pytest.approx(0.0, abs=0.05)

    def test_small_grid_and_determinism(self, capsys, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        _run(capsys, ["cc", *LISTING, "--grid", "16", "--out", str(first)])
        _run(capsys, ["cc", *LISTING, "--grid", "16", "--out", str(second)])
        assert len(first.read_text().splitlines()) == 17
        assert first.read_bytes() == second.read_bytes()

    def test_svg_output(self, capsys, tmp_path):
        csv_path, svg_path = tmp_path / "curve.csv", tmp_path / "curve.svg"
        code, _, _ = _run(capsys, ["cc", *LISTING, "--grid", "16", "--out", str(csv_path),
                                   "--svg", str(svg_path), "--compare-hs"])
        assert code == 0
        assert svg_path.read_text().lstrip().startswith("<?xml")

    def test_svg_is_reproducible(self, capsys, tmp_path):
        paths = [tmp_path / "a.svg", tmp_path / "b.svg"]
        for path in paths:
            _run(capsys, ["cc", *LISTING, "--grid", "16", "--out", str(tmp_path / "c.csv"), "--svg", str(path)])
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_unwritable_path(self, capsys, tmp_path):
        code, _, err = _run(capsys, ["cc", *LISTING, "--grid", "16",
                                     "--out", str(tmp_path / "missing" / "curve.csv")])
        assert code == 1
        assert "error:" in err

    def test_grid_too_small(self, capsys, tmp_path):
        code, _, _ = _run(capsys, ["cc", *LISTING, "--grid", "8", "--out", str(tmp_path / "c.csv")])
        assert code == 2


class TestSimulateCommand:
    """simulate 子命令"""

    def _config(self, tmp_path, **overrides):
        raw = {
            "cells": [{"N": 50, "rho": 0.4, "k": 4, "R": 0.36}],
            "reps": 5,
            "methods": ["corr", "hs"],
        }
        raw.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw))
        return path

    def test_summary_and_records(self, capsys, tmp_path):
        out = tmp_path / "records.csv"
        code, stdout, _ = _run(capsys, ["simulate", "--config", str(self._config(tmp_path)), "--out", str(out)])
        lines = stdout.splitlines()
        assert code == 0
        assert lines[0] == "method,cells,mean,sd,failures"
        assert [line.split(",")[0] for line in lines[1:]] == ["corr", "hs"]
        assert out.read_text().splitlines()[0] == "N,rho,k,R,method,reps,covered,coverage,failures"

    def test_single_rep(self, capsys, tmp_path):
        out = tmp_path / "records.csv"
        config = self._config(tmp_path, reps=1, methods=["corr"])
        _run(capsys, ["simulate", "--config", str(config), "--out", str(out)])
        record = out.read_text().splitlines()[1].split(",")
        assert float(record[7]) in (0.0, 1.0)

    def test_same_seed_same_files(self, capsys, tmp_path):
        config = self._config(tmp_path)
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        _run(capsys, ["simulate", "--config", str(config), "--out", str(first), "--seed", "11"])
        _run(capsys, ["simulate", "--config", str(config), "--out", str(second), "--seed", "11", "--threads", "4"])
        assert first.read_bytes() == second.read_bytes()

    def test_malformed_config(self, capsys, tmp_path):
        config = self._config(tmp_path, reps=0)
        code, _, err = _run(capsys, ["simulate", "--config", str(config), "--out", str(tmp_path / "r.csv")])
        assert code == 2
        assert "reps" in err

    def test_invalid_threads(self, capsys, tmp_path):
        config = self._config(tmp_path)
        code, _, _ = _run(capsys, ["simulate", "--config", str(config), "--out", str(tmp_path / "r.csv"),
                                   "--threads", "0"])
        assert code == 2
