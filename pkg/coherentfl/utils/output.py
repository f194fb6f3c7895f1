"""
CSV and JSON writers shared by the command line and the HTTP routes.

Every file starts with the tool version and configuration hash so results can be traced back to
the run that produced them. Nothing time-dependent is written.
"""
import csv
import io
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import ujson

from coherentfl import __version__

logger = logging.getLogger(__name__)

TOOL_NAME = "coherentfl"


def format_cell(value: Any) -> str:
    """Render one CSV cell: empty for missing values, shortest round-trip form for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def render_csv(rows: Iterable[Dict[str, Any]], columns: Sequence[str], config_hash: str) -> str:
    buffer = io.StringIO()
    buffer.write(f"# tool={TOOL_NAME} version={__version__} config_hash={config_hash}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(column)) for column in columns])
    return buffer.getvalue()


def write_csv(
    path: Path, rows: Iterable[Dict[str, Any]], columns: Sequence[str], config_hash: str
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(rows, columns, config_hash), encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def report_document(
    body: Dict[str, Any], config_hash: str, config: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    document = {"tool": TOOL_NAME, "version": __version__, "config_hash": config_hash}
    if config is not None:
        document["config"] = config
    document.update(body)
    return document


def write_json(
    path: Path,
    body: Dict[str, Any],
    config_hash: str,
    config: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = ujson.dumps(report_document(body, config_hash, config), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def read_csv_rows(path: Path) -> List[Dict[str, str]]:
    """Rows of a file written by ``write_csv``, skipping the provenance line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return list(csv.DictReader(line for line in lines if not line.startswith("#")))
