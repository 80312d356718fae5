"""CSV / JSON report emission and the environment stamp."""
import csv
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import scipy

from .. import __version__
from ..errors import IoError
from ..models.results import EnvironmentStamp, SweepRecord, SweepReport
from ..utils.logging_config import get_logger
from ..utils.utils import build_hash, format_float

logger = get_logger(__name__)

SWEEP_CSV_COLUMNS = ["eps", "h", "crit_count", "index_sum", "sad_x", "sad_y", "pred_x", "pred_y",
                     "err_abs", "err_rel", "align_deg", "runtime_s"]


def environment_stamp() -> EnvironmentStamp:
    return EnvironmentStamp(version=__version__, build_hash=build_hash(),
                            numpy=np.__version__, scipy=scipy.__version__)


def _int_cell(value: Optional[int]) -> str:
    return "" if value is None else str(value)


def _point_cells(point: Optional[List[float]]) -> List[str]:
    if point is None:
        return ["", ""]
    return [format_float(point[0]), format_float(point[1])]


def csv_row(record: SweepRecord) -> List[str]:
    return [
        format_float(record.eps),
        format_float(record.h),
        _int_cell(record.crit_count),
        _int_cell(record.index_sum),
        *_point_cells(record.saddle),
        *_point_cells(record.predicted_saddle),
        format_float(record.err_abs),
        format_float(record.err_rel),
        format_float(record.align_deg),
        format_float(record.runtime_s),
    ]


def emit_csv(report: SweepReport, path: Union[str, Path]) -> Path:
    """One row per sweep record; a report without records gives a header-only file.

    Raises:
        IoError: the file cannot be written
    """
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SWEEP_CSV_COLUMNS)
            for record in report.records:
                writer.writerow(csv_row(record))
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}", context={"path": str(path)}) from e
    logger.info(f"Wrote {len(report.records)} CSV rows to {path}")
    return path


def emit_json(report: SweepReport, path: Union[str, Path]) -> Path:
    """Raises: IoError"""
    path = Path(path)
    try:
        path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}", context={"path": str(path)}) from e
    logger.info(f"Wrote JSON report to {path}")
    return path


def load_report(path: Union[str, Path]) -> SweepReport:
    """Raises: IoError"""
    try:
        return SweepReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}", context={"path": str(path)}) from e


def summarize(report: SweepReport) -> str:
    """Short human-readable digest for standard output"""
    lines = [f"holepoint {report.command} ({report.environment.version}, build {report.environment.build_hash})"]
    for s in report.solves:
        if s.error is not None:
            lines.append(f"  solve eps={s.eps}: FAILED {s.error.error_code}: {s.error.error_message}")
        else:
            lines.append(f"  solve eps={s.eps} h={s.h:g}: {s.unknowns} unknowns, "
                         f"{s.newton_iterations} iterations, residual {s.residual:.3e}")
    if report.critpoints is not None:
        cs = report.critpoints
        lines.append(f"  critical points: {cs.count}, index sum {cs.index_sum}"
                     + (f", ring r={cs.ring.mean_radius:.6g}" if cs.ring is not None else ""))
    for r in report.records:
        if r.error is not None:
            lines.append(f"  eps={r.eps:g}: FAILED {r.error.error_code}: {r.error.error_message}")
            continue
        audit = r.audit.verdict.value if r.audit is not None else "-"
        rel = f"{r.err_rel:.3g}" if r.err_rel is not None else "-"
        lines.append(f"  eps={r.eps:g} h={r.h:g}: {r.crit_count} critical points, "
                     f"index sum {r.index_sum}, audit {audit}, rel. offset error {rel}")
    for fit in report.fits:
        lines.append(f"  fit {fit.law.value} p={fit.exponent:g}: c={fit.c}, residual {fit.residual:.3g}")
    for g in report.green:
        if g.error is not None:
            lines.append(f"  psi eps={g.eps:g}: FAILED {g.error.error_code}")
        else:
            lines.append(f"  psi eps={g.eps:g}: max deviation {g.deviation:.6g}")
    for e in report.radial:
        if e.error is not None:
            lines.append(f"  radial eps={e.eps:g}: FAILED {e.error.error_code}")
        else:
            lines.append(f"  radial eps={e.eps:g}: r_eps={e.r_eps:.10g}, ratio to law {e.ratio_to_law:.6g}")
    if report.prediction is not None:
        lines.append(f"  prediction: {report.prediction.to_json()}")
    lines.append(f"  failures: {report.failures}")
    return "\n".join(lines)
