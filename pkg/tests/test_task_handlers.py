"""
Tests for experiment task handlers.
"""

import pytest

from config.config_manager import MeasureDecl, TaskDecl
from config.settings import SystemSettings
from core.data_models import ExperimentRecord
from core.exceptions import MomentBudgetError
from measures import catalog, moments
from task_orchestrator.task_handlers import (
    HANDLERS, TaskContext, _propagation_records, build_measure, build_payload, execute_payload
)


@pytest.fixture
def system():
    """Settings with coarse kernel grids and no file output."""
    return SystemSettings.from_dict({
        "kernel": {"grid_nodes": 2 ** 12 + 1},
        "output": {"plot_data": False, "write_solutions": False},
    })


@pytest.fixture
def measures():
    """Declared measures shared by the tests."""
    return {
        "u": MeasureDecl(name="uniform"),
        "lap": MeasureDecl(name="laplace"),
        "g": MeasureDecl(name="gaussian"),
    }


def run(task, measures, system, tmp_path):
    result = execute_payload(build_payload(0, task, measures, system, tmp_path))
    return result, [ExperimentRecord(**r) for r in result["records"]]


class TestHandlers:
    """Test cases for the per-type handlers."""

    def test_every_task_type_has_a_handler(self):
        """Test the handler table."""
        assert set(HANDLERS) == {"kernel1d", "galerkin", "spectral", "clt", "stability"}

    def test_kernel1d_task(self, measures, system, tmp_path):
        """Test the uniform kernel task with its expected discrepancy."""
        task = TaskDecl(type="kernel1d", measure="u", label="uni",
                        params={"expected_s_squared": 0.2, "expected_tol": 1e-5})
        result, records = run(task, measures, system, tmp_path)

        assert result["ok"]
        labels = {r.label for r in records}
        assert {"uni.discrepancy-bound", "uni.weak-residual", "uni.s-squared"} <= labels
        assert all(r.measure == "u" for r in records)
        assert all(r.passed for r in records)

    def test_kernel1d_writes_csv(self, measures, system, tmp_path):
        """Test the kernel file written on request."""
        task = TaskDecl(type="kernel1d", measure="lap", label="lap", params={"write_kernel": True})
        result, _ = run(task, measures, system, tmp_path)

        assert result["ok"]
        assert (tmp_path / "kernel_lap.csv").exists()

    def test_galerkin_task(self, measures, system, tmp_path):
        """Test the Galerkin sweep on the uniform law."""
        task = TaskDecl(type="galerkin", measure="u", params={"degrees": [1, 2, 3], "probe": False})
        result, records = run(task, measures, system, tmp_path)

        assert result["ok"]
        monotone = [r for r in records if r.label == "galerkin-energy-monotonicity"]
        assert [(r.m, r.n) for r in monotone] == [(1, 2), (2, 3)]
        assert all(r.passed for r in records)

    def test_spectral_task(self, measures, system, tmp_path):
        """Test the Poincare estimate and Rayleigh bounds for the Gaussian."""
        task = TaskDecl(type="spectral", measure="g", params={"expected_cp": 1.0, "degrees": [1, 2]})
        result, records = run(task, measures, system, tmp_path)

        assert result["ok"]
        assert {r.label for r in records} >= {"cp-estimate", "rayleigh-lower-bound", "rayleigh-monotonicity"}
        assert all(r.passed for r in records)

    def test_clt_task_with_mixed_sum(self, measures, system, tmp_path):
        """Test a CLT task with a mixed-sum check."""
        task = TaskDecl(type="clt", measure="lap", seed=3,
                        params={"n_list": [1, 2], "checks": ["w2-rate"], "mixed": ["u", "lap"]})
        result, records = run(task, measures, system, tmp_path)

        assert result["ok"]
        assert [r.label for r in records].count("w2-rate") == 2
        assert any(r.label == "mixed-w2" for r in records)

    def test_fisher_target(self, measures, system, tmp_path):
        """Test the fixed Fisher target next to the formula bound."""
        task = TaskDecl(type="clt", measure="u", params={"n_list": [4], "checks": ["fisher"], "t": 0.5,
                                                         "fisher_target": 0.0135})
        result, records = run(task, measures, system, tmp_path)

        assert result["ok"]
        assert sorted(r.label for r in records) == ["fisher", "fisher-target"]
        assert all(r.passed for r in records)

    def test_stability_task(self, measures, system, tmp_path):
        """Test the Poincare stability record of the Laplace law."""
        task = TaskDecl(type="stability", measure="lap", params={"weight": "1"})
        result, records = run(task, measures, system, tmp_path)

        assert result["ok"]
        assert {r.label for r in records} == {"poincare-stability", "weighted-stability"}

    def test_propagation_without_a_usable_degree(self, system, tmp_path):
        """Test that a moment budget below every Galerkin degree is reported by name."""
        system.galerkin.degrees = [3, 4]
        spec = catalog("generalized-cauchy", {"beta": 4.0, "dim": 2})
        task = TaskDecl(type="clt", measure="c", params={})
        ctx = TaskContext(index=0, task=task, spec=spec, measures={}, system=system, out_dir=tmp_path)

        with pytest.raises(MomentBudgetError, match="moment budget 6"):
            _propagation_records(ctx, {"n": 2})


class TestExecutePayload:
    """Test cases for failure handling in execute_payload."""

    def test_handler_error_is_reported(self, measures, system, tmp_path):
        """Test that a failing handler yields an error result instead of raising."""
        measures["u2"] = MeasureDecl(name="gaussian", params={"dim": 2})
        result, records = run(TaskDecl(type="kernel1d", measure="u2"), measures, system, tmp_path)

        assert not result["ok"]
        assert result["error_type"] == "ValueError"
        assert records == []

    def test_undeclared_reference(self, measures, system, tmp_path):
        """Test a Galerkin task referring to an unknown measure key."""
        task = TaskDecl(type="galerkin", measure="lap", params={"mode": "potential-reference",
                                                                 "reference": "missing"})
        result, _ = run(task, measures, system, tmp_path)
        assert not result["ok"]
        assert "missing" in result["error"]

    def test_runtime_is_reported(self, measures, system, tmp_path):
        """Test that every result carries a runtime."""
        result, _ = run(TaskDecl(type="kernel1d", measure="g"), measures, system, tmp_path)
        assert result["runtime_ms"] >= 0
        assert result["index"] == 0

    def test_build_measure_standardizes(self, system):
        """Test whitening on request."""
        spec = build_measure(MeasureDecl(name="gaussian", params={"variance": 4.0}, standardize=True), system)
        report = moments(spec, system.integration)
        assert report.is_isotropic(1e-6)
