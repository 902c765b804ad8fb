"""
Report emitter.

Writes experiment records as CSV, JSON lines or a Markdown table, plus the
per-label plot data and the run summary. Output bytes depend only on the
records: floats are written with 17 significant digits, keys are sorted and
runtimes are zeroed unless timing output is requested.
"""

import csv
import io
import json
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import structlog

from config.settings import OutputSettings
from core.data_models import ExperimentRecord
from core.exceptions import ReportError
from core.interfaces import IReportEmitter

logger = structlog.get_logger(__name__)

FORMATS = ("csv", "json", "md")
CSV_HEADER = ("label", "n", "m", "measured", "bound", "pass", "tolerance", "runtime_ms")
PLOT_HEADER = ("n", "m", "measured", "bound", "pass", "measure")

BOUND_FORMULAS: Dict[str, str] = {
    "w2-rate": "W2(nu_n, gamma)^2 <= d (Cp - 1) / n",
    "monotonicity": "S(nu_n | gamma)^2 <= (m / n) S(nu_m | gamma)^2",
    "skewness": "S(nu | gamma)^2 >= (1/9) |E[X (x) X (x) X]|^2",
    "entropy": "H(nu_n | gamma) <= d (Cp - 1) / (2n) log(1 + alpha n / (Cp - 1))",
    "hsi": "H(nu | gamma) <= (S^2 / 2) log(1 + I(nu | gamma) / S^2)",
    "rio-asymptotic": "sqrt(n) W2(nu_n, gamma) -> |E X^3| / 3 (asymptotic, informational)",
    "w2-vs-discrepancy": "W2(nu, gamma)^2 <= S(nu | gamma)^2",
    "fisher": "I(nu_n^t | gamma) <= t^2 (Cp - 1) d / (n (1 - t))",
    "fisher-target": "I(nu_n^t | gamma) <= target",
    "mixed-w2": "W2(nu_n, gamma)^2 <= (d / n^2) sum_i (C_i - 1)",
    "discrepancy-bound": "S(nu | gamma)^2 <= (Cp - 2) E|x|^2 + d",
    "galerkin-discrepancy-bound": "S(nu | gamma)^2 <= (Cp - 2) E|x|^2 + d",
    "galerkin-energy-bound": "integral ||grad g_N||^2 dnu <= Cp E|x|^2",
    "galerkin-energy-monotonicity": "energy(N) >= energy(N - 1)",
    "galerkin-in-span-residual": "max |r(e_i psi)| / (1 + ||e_i psi||_W12) <= tol",
    "galerkin-closed-form-gap": "||tau_N - tau||_L2(nu) <= tol",
    "galerkin-s-squared": "|s^2 - expected| <= tol",
    "potential-residual": "max |r(phi)| / (1 + ||phi||_W12) <= tol against grad V",
    "weak-residual": "max |r(phi)| / (1 + ||phi||_W12) <= tol",
    "s-squared": "|S(nu | gamma)^2 - expected| <= tol",
    "bound-slack": "(Cp - 2) E|x|^2 + d - S(nu | gamma)^2 in [lo, hi]",
    "identity-deviation": "max_x |tau(x) - Id| <= tol",
    "cp-estimate": "|Cp - expected| <= tol",
    "rayleigh-lower-bound": "max_f Var(f) / integral |grad f|^2 <= Cp",
    "rayleigh-monotonicity": "Rayleigh bound nondecreasing in N",
    "converse-witness": "max_f inf_c integral (f - c)^2 omega / integral |grad f|^2 (> 1 refutes the converse)",
    "condition-c": "max_f (integral <x, f>)^2 / integral ||grad f||^2 <= Cp E|x|^2",
    "poincare-stability": "Cp >= 1 + W2(nu, gamma)^2 / d",
    "weighted-stability": "(1/d) integral |x|^2 / omega dnu >= 1 + W2(nu, gamma)^2 / d",
    "holder-stability": "||(1/d)|x|^2||_p ||1/omega||_q >= 1 + W2(nu, gamma)^2 / d",
    "propagation-discrepancy": "E||tau_n - Id||^2 <= (m / n) S(nu_m | gamma)^2 (1 + slack)",
    "propagation-residual": "max |r(phi)| / (1 + ||phi||_W12) <= tol for the propagated kernel",
    "w2-slope": "log-log slope of W2(nu_n, gamma)^2 in n within [lo, hi]",
    "task-error": "task completed without error",
}


def base_label(label: str) -> str:
    """Label without its task prefix or range suffix."""
    label = label.rsplit(".", 1)[-1]
    return re.sub(r"-(lower|upper)$", "", label)


def formula_for(label: str) -> str:
    return BOUND_FORMULAS.get(label.rsplit(".", 1)[-1]) or BOUND_FORMULAS.get(base_label(label), "")


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return format(float(value), '.17g')


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _status(record: ExperimentRecord) -> str:
    if record.informational:
        return "info"
    return "pass" if record.passed else "FAIL"


def summarize(records: Sequence[ExperimentRecord]) -> Dict[str, Any]:
    """Per-label pass/fail/informational counts."""
    by_label: Dict[str, Dict[str, int]] = {}
    for record in records:
        entry = by_label.setdefault(record.label, {"failed": 0, "informational": 0, "passed": 0})
        key = {"info": "informational", "pass": "passed", "FAIL": "failed"}[_status(record)]
        entry[key] += 1
    failed = sum(entry["failed"] for entry in by_label.values())
    return {
        "records": len(records),
        "failed": failed,
        "passed": sum(entry["passed"] for entry in by_label.values()),
        "informational": sum(entry["informational"] for entry in by_label.values()),
        "status": "pass" if failed == 0 else "fail",
        "by_label": dict(sorted(by_label.items())),
    }


class ReportEmitter(IReportEmitter):
    """Deterministic writer for experiment records."""

    def __init__(self, settings: Optional[OutputSettings] = None):
        self.settings = settings or OutputSettings()

    def _runtime(self, record: ExperimentRecord) -> int:
        return record.runtime_ms if self.settings.include_timing else 0

    def emit(self, records: Sequence[ExperimentRecord], fmt: str, path: Path) -> Path:
        """Write ``records`` in ``fmt`` to ``path``.

        Raises:
            ValueError: empty record list or unknown format
            ReportError: the path cannot be written
        """
        if not records:
            raise ValueError("Cannot emit a report without records")
        if fmt not in FORMATS:
            raise ValueError(f"Unknown report format '{fmt}'; available: {', '.join(FORMATS)}")
        records = sorted(records, key=ExperimentRecord.sort_key)
        render = {"csv": self._render_csv, "json": self._render_json, "md": self._render_md}[fmt]
        path = self._write(Path(path), render(records))
        logger.info("report_written", path=str(path), format=fmt, records=len(records))
        return path

    def emit_all(self, records: Sequence[ExperimentRecord], out_dir: Optional[Path] = None,
                 formats: Optional[Iterable[str]] = None, stem: str = "report") -> List[Path]:
        """Reports in every requested format plus the summary (and plot data if enabled)."""
        out_dir = Path(out_dir or self.settings.out_dir)
        paths = [self.emit(records, fmt, out_dir / f"{stem}.{fmt}") for fmt in (formats or self.settings.formats)]
        paths.extend(self.write_summary(records, out_dir))
        if self.settings.plot_data:
            paths.extend(self.write_plot_data(records, out_dir))
        return paths

    def _write(self, path: Path, text: str) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', newline='', encoding='utf-8') as f:
                f.write(text)
        except OSError as e:
            raise ReportError(f"Cannot write report {path}: {e}")
        return path

    def _render_csv(self, records: Sequence[ExperimentRecord]) -> str:
        rows = [[r.label, str(r.n), "" if r.m is None else str(r.m), _fmt(r.measured),
                 _fmt(r.bound), "true" if r.passed else "false", _fmt(r.tolerance_used), str(self._runtime(r))]
                for r in records]
        return _csv_text(CSV_HEADER, rows)

    def _render_json(self, records: Sequence[ExperimentRecord]) -> str:
        lines = []
        for r in records:
            data = r.model_dump(mode="python")
            data["runtime_ms"] = self._runtime(r)
            data["formula"] = formula_for(r.label)
            lines.append(json.dumps(data, sort_keys=True, default=_json_default))
        return "\n".join(lines) + "\n"

    def _render_md(self, records: Sequence[ExperimentRecord]) -> str:
        summary = summarize(records)
        lines = [
            "# steinlab report",
            "",
            f"{summary['records']} records: {summary['passed']} passed, {summary['failed']} failed, "
            f"{summary['informational']} informational.",
            "",
            "| label | bound | n | m | measured | bound value | status |",
            "|---|---|---|---|---|---|---|",
        ]
        for r in records:
            lines.append(
                f"| {r.label} | `{formula_for(r.label)}` | {r.n} | {'' if r.m is None else r.m} | "
                f"{_fmt(r.measured)} | {_fmt(r.bound)} | {_status(r)} |"
            )
        return "\n".join(lines) + "\n"

    def write_summary(self, records: Sequence[ExperimentRecord], out_dir: Path) -> List[Path]:
        """summary.json and summary.md with per-label pass counts."""
        summary = summarize(records)
        lines = [
            "# steinlab summary",
            "",
            f"Status: **{summary['status']}**",
            "",
            "| label | passed | failed | informational |",
            "|---|---|---|---|",
        ]
        for label, counts in summary["by_label"].items():
            lines.append(f"| {label} | {counts['passed']} | {counts['failed']} | {counts['informational']} |")
        return [
            self._write(out_dir / "summary.json", json.dumps(summary, sort_keys=True, indent=2) + "\n"),
            self._write(out_dir / "summary.md", "\n".join(lines) + "\n"),
        ]

    def write_plot_data(self, records: Sequence[ExperimentRecord], out_dir: Path) -> List[Path]:
        """One plot_<label>.csv per label with (n, m, measured, bound) rows."""
        groups: Dict[str, List[ExperimentRecord]] = {}
        for r in sorted(records, key=ExperimentRecord.sort_key):
            groups.setdefault(r.label, []).append(r)
        paths = []
        for label, group in sorted(groups.items()):
            rows = [[str(r.n), "" if r.m is None else str(r.m), _fmt(r.measured),
                     _fmt(r.bound), "true" if r.passed else "false", r.measure]
                    for r in group]
            safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", label)
            paths.append(self._write(out_dir / f"plot_{safe}.csv", _csv_text(PLOT_HEADER, rows)))
        return paths


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def emit_report(records: Sequence[ExperimentRecord], fmt: str, path: Path,
                settings: Optional[OutputSettings] = None) -> Path:
    """Write one report file with a default-configured emitter."""
    return ReportEmitter(settings).emit(records, fmt, path)
