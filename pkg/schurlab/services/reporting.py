"""
Summaries of stored experiment results.

Reads the CSV tables (and their JSON sidecars) written by the CLI, renders
one block per experiment and writes two-column .dat files for plotting.
Values are read back as stored; nothing is recomputed.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from schurlab.core.error_handling import MissingInputError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ExperimentSummary(NamedTuple):
    name: str
    rows: int
    lines: List[str]
    dat_path: Optional[Path]


def read_table(path: PathLike) -> Tuple[List[str], List[Dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def _as_float(value: Optional[str]) -> Optional[float]:
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def _fit_line(label: str, rows: List[Dict[str, str]]) -> Optional[str]:
    fits = sorted({(r["exponent"], r.get("fit_residual") or "nan", r.get("claimed"))
                   for r in rows if r.get("exponent")})
    if not fits:
        return None
    exponent, residual, claimed = fits[0]
    state = "claimed" if claimed == "True" else "not claimed"
    return f"  exponent fit ({label}): {float(exponent):.4f} residual {float(residual):.3g} {state}"


def summarize_table(name: str, header: List[str], rows: List[Dict[str, str]],
                    meta: Optional[Dict] = None) -> List[str]:
    """Human-readable lines for one experiment table."""
    lines = [f"== {name} ==", f"  rows: {len(rows)}"]
    meta = meta or {}
    for key in ("seed", "tol", "dim", "n", "q", "variant", "points"):
        if key in meta and meta[key] is not None:
            lines.append(f"  {key}: {meta[key]}")

    if "passed" in header:
        failed = [r for r in rows if r.get("passed") != "True"]
        worst = max(rows, key=lambda r: _as_float(r.get("max_residual")) or 0.0, default=None)
        lines.append(f"  passed: {len(rows) - len(failed)}/{len(rows)}")
        if worst is not None:
            lines.append(f"  worst check: {worst.get('check')} residual {worst.get('max_residual')}")
        return lines

    if "exponent" in header and "p" in header:
        large = [r for r in rows if (_as_float(r["p"]) or 0.0) >= 2.0]
        small = [r for r in rows if (_as_float(r["p"]) or 0.0) < 2.0]
        for label, part in (("p >= 2", large), ("p <= 2", small)):
            line = _fit_line(label, part)
            if line:
                lines.append(line)

    if len(header) >= 2:
        ys = [v for v in (_as_float(r.get(header[1])) for r in rows) if v is not None]
        if ys:
            lines.append(f"  {header[1]}: min {min(ys):.6g} max {max(ys):.6g}")
    return lines


def write_dat(path: PathLike, header: List[str], rows: List[Dict[str, str]]) -> Optional[Path]:
    """First two columns as whitespace-separated pairs; None if either is non-numeric."""
    if len(header) < 2:
        return None
    x, y = header[0], header[1]
    pairs = [(_as_float(r.get(x)), _as_float(r.get(y))) for r in rows]
    if not pairs or any(a is None or b is None for a, b in pairs):
        return None
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# {x} {y}\n")
        for a, b in pairs:
            f.write(f"{a!r} {b!r}\n")
    return path


def report(results_dir: PathLike, out_dir: Optional[PathLike] = None) -> List[ExperimentSummary]:
    """
    Summarize every CSV table under results_dir.

    Raises MissingInputError when the directory is absent or holds no tables.
    """
    root = Path(results_dir)
    if not root.is_dir():
        raise MissingInputError(f"results directory {root} does not exist", path=str(root))
    tables = sorted(root.glob("*.csv"))
    if not tables:
        raise MissingInputError(f"no result tables in {root}", path=str(root))

    target = Path(out_dir) if out_dir is not None else root
    target.mkdir(parents=True, exist_ok=True)
    summaries = []
    for table in tables:
        header, rows = read_table(table)
        sidecar = table.with_suffix(".json")
        meta = {}
        if sidecar.exists():
            with open(sidecar, encoding="utf-8") as f:
                document = json.load(f)
            if isinstance(document, dict):
                meta = document.get("meta", {})
        lines = summarize_table(table.stem, header, rows, meta)
        dat = write_dat(target / f"{table.stem}.dat", header, rows)
        summaries.append(ExperimentSummary(table.stem, len(rows), lines, dat))
        logger.debug(f"summarized {table.name}: {len(rows)} rows")
    return summaries


def render(summaries: List[ExperimentSummary]) -> str:
    return "\n".join("\n".join(s.lines) for s in summaries) + "\n"
