# -*- coding: utf-8 -*-
"""
随机数生成、Cronbach alpha 与覆盖率模拟测试
"""

import json
import math

import numpy as np
import pytest

from app.core.exceptions import ConfigurationException, DegenerateSampleException, DomainException
from app.schemas.estimates import Method
from app.schemas.simulation import CoverageRecord, SimCell, SimConfig
from app.services.simulation import (
    RECORD_COLUMNS,
    _cholesky_factor,
    compound_symmetry_covariance,
    compound_symmetry_matrix,
    cronbach_alpha,
    derive_stream,
    load_config,
    parse_config,
    run_coverage,
    sample_alpha,
    sample_bivariate_correlation,
    standard_grid,
    summarize,
    write_records,
)


@pytest.mark.unit
class TestStreams:
    """随机流派生"""

    def test_same_key_same_draws(self):
        first = derive_stream(42, 3, 7).standard_normal(100)
        second = derive_stream(42, 3, 7).standard_normal(100)
        assert np.array_equal(first, second)

    def test_different_rep_different_draws(self):
        first = derive_stream(42, 0, 0).standard_normal(100)
        second = derive_stream(42, 0, 1).standard_normal(100)
        assert not np.array_equal(first, second)

    def test_large_seed(self):
        derive_stream(2 ** 64 - 1, 0, 0).standard_normal(3)

    def test_negative_seed(self):
        with pytest.raises(DomainException):
            derive_stream(-1, 0, 0)


@pytest.mark.unit
class TestGenerators:
    """样本相关系数与复合对称生成器"""

    def test_correlation_deterministic(self):
        first = sample_bivariate_correlation(0.3, 50, derive_stream(1, 0, 0))
        second = sample_bivariate_correlation(0.3, 50, derive_stream(1, 0, 0))
        assert first == second
        assert -1 < first < 1

    def test_correlation_fisher_moments(self):
        z = np.array([
            math.atanh(sample_bivariate_correlation(0.0, 100, derive_stream(5, 0, rep)))
            for rep in range(10_000)
        ])
        assert abs(z.mean()) <= 3e-2
        assert z.var() == pytest.approx(1 / 97, rel=0.15)

    def test_correlation_domain(self):
        with pytest.raises(DomainException):
            sample_bivariate_correlation(1.0, 50, derive_stream(1, 0, 0))
        with pytest.raises(DomainException):
            sample_bivariate_correlation(0.5, 3, derive_stream(1, 0, 0))

    def test_compound_symmetry_covariance(self):
        c = compound_symmetry_covariance(0.64, 4)
        assert c == pytest.approx(0.64 / 2.08, abs=1e-5)
        assert 4 * c / (1 + 3 * c) == pytest.approx(0.64, abs=1e-12)
        assert compound_symmetry_covariance(1e-12, 8) == pytest.approx(0.0, abs=1e-11)

    @pytest.mark.parametrize("R, k", [(1.0, 4), (-0.1, 4), (0.5, 1)])
    def test_compound_symmetry_domain(self, R, k):
        with pytest.raises(DomainException):
            compound_symmetry_covariance(R, k)

    def test_multivariate_normal_covariance(self):
        factor = _cholesky_factor(0.64, 4)
        draws = derive_stream(9, 0, 0).standard_normal((100_000, 4)) @ factor.T
        target = compound_symmetry_matrix(compound_symmetry_covariance(0.64, 4), 4)
        assert np.max(np.abs(np.cov(draws, rowvar=False, bias=True) - target)) <= 0.01

    def test_cholesky_factor_is_read_only(self):
        with pytest.raises(ValueError):
            _cholesky_factor(0.49, 8)[0, 0] = 2.0


@pytest.mark.unit
class TestCronbachAlpha:
    """Cronbach alpha"""

    def test_identity(self):
        assert cronbach_alpha(np.eye(4), 4) == pytest.approx(0.0)

    def test_all_ones(self):
        assert cronbach_alpha(np.ones((4, 4)), 4) == pytest.approx(1.0)

    def test_population_matrix(self):
        cov = compound_symmetry_matrix(compound_symmetry_covariance(0.64, 4), 4)
        assert cronbach_alpha(cov, 4) == pytest.approx(0.64, abs=1e-9)

    def test_degenerate(self):
        cov = np.array([[1.0, -1.0], [-1.0, 1.0]])
        with pytest.raises(DegenerateSampleException):
            cronbach_alpha(cov, 2)

    def test_shape_mismatch(self):
        with pytest.raises(DomainException):
            cronbach_alpha(np.eye(3), 4)

    def test_sample_alpha_deterministic(self):
        first = sample_alpha(0.49, 8, 100, derive_stream(3, 1, 2))
        second = sample_alpha(0.49, 8, 100, derive_stream(3, 1, 2))
        assert first == second

    def test_sample_alpha_needs_enough_rows(self):
        with pytest.raises(DomainException):
            sample_alpha(0.49, 8, 8, derive_stream(3, 0, 0))


@pytest.mark.slow
def test_sample_alpha_asymptotics():
    """½log(1−α̂) 的均值与方差符合渐近分布"""
    R, k, n, reps = 0.49, 8, 400, 10_000
    eta = np.array([
        0.5 * math.log1p(-sample_alpha(R, k, n, derive_stream(17, 0, rep)))
        for rep in range(reps)
    ])
    variance = k / (2 * (k - 1) * n)
    # 有限样本偏差约为 1/n 量级，容差放宽到 6 个标准误
    assert abs(eta.mean() - 0.5 * math.log(0.51)) <= 6 * math.sqrt(variance / reps)
    assert eta.var() == pytest.approx(variance, rel=0.2)


@pytest.mark.unit
class TestConfig:
    """模拟配置"""

    def test_parse_minimal(self):
        config = parse_config({
            "cells": [{"N": 50, "rho": 0.4, "k": 4, "R": 0.36}],
            "reps": 10,
            "methods": ["corr", "HS"],
        })
        assert config.level == 0.95
        assert config.seed == 0
        assert config.methods == [Method.CORR, Method.HS]
        assert config.cells[0].observed_rho == pytest.approx(0.144)

    def test_standard_grid(self):
        config = parse_config({"cells": "standard", "reps": 1, "methods": ["cronbach"]})
        assert len(config.cells) == 80
        assert len(standard_grid()) == 80

    @pytest.mark.parametrize("raw, field", [
        ({"cells": [], "reps": 10, "methods": ["corr"]}, "cells"),
        ({"cells": [{"N": 50, "rho": 0.4, "k": 4, "R": 0.36}], "reps": 0, "methods": ["corr"]}, "reps"),
        ({"cells": [{"N": 50, "rho": 1.4, "k": 4, "R": 0.36}], "reps": 1, "methods": ["corr"]}, "cells.0.rho"),
        ({"cells": [{"N": 50, "rho": 0.4, "k": 4, "R": 0.36}], "reps": 1, "methods": ["bogus"]}, "methods.0"),
        ({"cells": [{"N": 50, "rho": 0.4, "k": 4, "R": 0.36}], "reps": 1, "methods": ["hs", "hs"]}, "methods"),
    ])
    def test_field_level_errors(self, raw, field):
        with pytest.raises(ConfigurationException) as exc_info:
            parse_config(raw)
        assert exc_info.value.details["field"] == field
        assert field in exc_info.value.message

    def test_not_an_object(self):
        with pytest.raises(ConfigurationException):
            parse_config([1, 2, 3])

    def test_load_malformed_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationException):
            load_config(path)

    def test_load_roundtrip_fields(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({
            "cells": [{"N": 100, "rho": 0.6, "k": 8, "R": 0.81}],
            "reps": 5, "level": 0.9, "methods": ["free"], "seed": 123,
        }))
        config = load_config(path)
        assert config.seed == 123
        assert config.cells[0] == SimCell(N=100, rho=0.6, k=8, R=0.81)

    def test_cell_requires_more_rows_than_testlets(self):
        with pytest.raises(ValueError):
            SimCell(N=8, rho=0.4, k=8, R=0.5)


def _small_config(**overrides) -> SimConfig:
    raw = {
        "cells": [
            {"N": 50, "rho": 0.4, "k": 4, "R": 0.36},
            {"N": 50, "rho": 0.6, "k": 8, "R": 0.64},
            {"N": 100, "rho": 0.4, "k": 4, "R": 0.81},
            {"N": 100, "rho": 0.6, "k": 8, "R": 0.25},
        ],
        "reps": 12,
        "methods": ["corr", "cronbach", "hs"],
        "seed": 7,
    }
    raw.update(overrides)
    return parse_config(raw)


@pytest.mark.integration
class TestRunCoverage:
    """覆盖率模拟"""

    def test_record_layout(self):
        records = run_coverage(_small_config())
        assert len(records) == 12
        assert [r.method for r in records[:3]] == [Method.CORR, Method.CRONBACH, Method.HS]
        for record in records:
            assert 0 <= record.covered + record.failures <= record.reps == 12

    def test_single_rep(self):
        config = _small_config(cells=[{"N": 50, "rho": 0.4, "k": 4, "R": 0.36}], reps=1, methods=["corr"])
        (record,) = run_coverage(config)
        assert record.coverage in (0.0, 1.0)

    def test_thread_count_does_not_change_results(self):
        config = _small_config()
        serial = run_coverage(config, threads=1)
        parallel = run_coverage(config, threads=8)
        assert [r.model_dump() for r in serial] == [r.model_dump() for r in parallel]

    def test_identical_output_files(self, tmp_path):
        config = _small_config()
        first = write_records(run_coverage(config), tmp_path / "a.csv")
        second = write_records(run_coverage(config), tmp_path / "b.csv")
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text().splitlines()[0] == ",".join(RECORD_COLUMNS)

    def test_degenerate_draw_counts_as_failure(self, mocker):
        mocker.patch(
            "app.services.simulation.sample_alpha",
            side_effect=DegenerateSampleException("total variance is not positive"),
        )
        config = _small_config(cells=[{"N": 50, "rho": 0.4, "k": 4, "R": 0.36}], reps=3)
        records = run_coverage(config)
        assert [(r.covered, r.failures) for r in records] == [(0, 3)] * 3


@pytest.mark.unit
def test_summarize():
    cell = SimCell(N=50, rho=0.4, k=4, R=0.36)
    other = SimCell(N=100, rho=0.4, k=4, R=0.36)
    records = [
        CoverageRecord(cell=cell, method=Method.CORR, covered=9, reps=10),
        CoverageRecord(cell=other, method=Method.CORR, covered=10, reps=10),
        CoverageRecord(cell=cell, method=Method.HS, covered=5, reps=10, failures=1),
    ]
    corr, hs = summarize(records)
    assert corr.method is Method.CORR and corr.cells == 2
    assert corr.mean == pytest.approx(0.95)
    assert corr.sd == pytest.approx(math.sqrt(0.005))
    assert hs.sd == 0.0 and hs.failures == 1


@pytest.mark.slow
def test_scaled_coverage_study():
    """N ∈ {50, 200}、ρ = 0.4、k ∈ {4, 8}、R ∈ {0.36, 0.64}，每格 2000 次重复"""
    cells = [
        {"N": n, "rho": 0.4, "k": k, "R": R}
        for n in (50, 200) for k in (4, 8) for R in (0.36, 0.64)
    ]
    config = parse_config({"cells": cells, "reps": 2000, "methods": ["corr", "hs", "cronbach"], "seed": 0})
    records = run_coverage(config, threads=4)

    corr = [r for r in records if r.method is Method.CORR]
    hs_small = [r for r in records if r.method is Method.HS and r.cell.n == 50]
    cronbach = [r for r in records if r.method is Method.CRONBACH]

    assert all(r.coverage >= 0.95 for r in corr)
    # 忽略 alpha 的抽样误差使 HS 在小样本下覆盖不足
    assert sum(r.coverage < 0.95 for r in hs_small) >= len(hs_small) / 2
    corr_by_cell = {r.cell: r.coverage for r in corr}
    assert all(r.coverage < corr_by_cell[r.cell] for r in hs_small)
    assert 0.90 <= np.mean([r.coverage for r in cronbach]) <= 1.0
