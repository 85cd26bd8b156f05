"""
Report Writer
CSV and JSON rendering of experiment reports, plus reading blessed CSV back
"""

import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from app.core.config import settings
from app.core.errors import GoldenMismatchError
from app.models.schemas import Report


def format_float(value: float) -> str:
    return format(value, f".{settings.FLOAT_SIG_DIGITS}g")


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return " ".join(format_cell(v) for v in value)
    if value is None:
        return ""
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, float):
        return float(format_float(value))
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def render_csv(report: Report) -> str:
    """Header row plus one line per row, LF endings"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([format_cell(row[c]) for c in report.columns])
    return buffer.getvalue()


def render_json(report: Report) -> str:
    """Array of flat objects in schema key order"""
    rows = [{c: _json_value(row[c]) for c in report.columns} for row in report.rows]
    return json.dumps(rows, indent=2) + "\n"


def render(report: Report, fmt: str = "csv") -> str:
    return render_json(report) if fmt == "json" else render_csv(report)


def write_report(report: Report, fmt: str = "csv", output: Optional[str] = None) -> str:
    """Render and write to output (a path) or return the text for stdout"""
    text = render(report, fmt)
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    return text


def read_csv(path: Path) -> List[Dict[str, str]]:
    """Rows of a blessed CSV file as strings"""
    if not path.is_file():
        raise GoldenMismatchError(f"missing golden file {path}")
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            return list(csv.DictReader(handle))
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise GoldenMismatchError(f"corrupt golden file {path}: {e}")
