"""CSV tables and JSON manifests with reproducible formatting."""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from fracwave import __version__
from fracwave.fode import SolveOutcome
from fracwave.spectral_pde import MildOutcome


def format_value(value: Any) -> str:
    """17 significant digits for floats, empty string for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{float(value):.17g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Write an RFC-4180 CSV (CRLF line ends, minimal quoting).

    Returns:
        Number of data rows written
    """
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    return count


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else format_value(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def to_json(document: Dict[str, Any]) -> str:
    """Deterministic JSON text (sorted keys, non-finite floats as strings)."""
    return json.dumps(_plain(document), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, document: Dict[str, Any]) -> None:
    Path(path).write_text(to_json(document))


def manifest(kind: str, config: Dict[str, Any], result: Dict[str, Any], seed: Optional[int] = None) -> Dict[str, Any]:
    """Run manifest: tool version, config echo, seed and results."""
    return {"tool": "fracwave", "version": __version__, "kind": kind, "seed": seed, "config": config, "result": result}


def trajectory_rows(outcome: SolveOutcome, memory: Optional[np.ndarray] = None) -> List[List[float]]:
    """(t, w, I^gamma|w|^p) rows of a scalar run."""
    path = outcome.trajectory
    extra = memory if memory is not None else np.full(path.values.shape, np.nan)
    return [[t, w, m] for t, w, m in zip(path.t, path.values, extra)]


def write_trajectory(path: Path, outcome: SolveOutcome, memory: Optional[np.ndarray] = None) -> int:
    return write_csv(path, ["t", "w", "memory"], trajectory_rows(outcome, memory))


def snapshot_rows(outcome: MildOutcome, times: Sequence[float]) -> List[List[float]]:
    """(t, x, u) rows of 1D snapshots at the nodes nearest to ``times``."""
    domain = outcome.domain
    nodes = outcome.mesh.nodes
    x = domain.axis
    rows: List[List[float]] = []
    for t in times:
        j = int(np.argmin(np.abs(nodes - t)))
        phys = outcome.field_at(j).phys
        if domain.dimension == 1:
            rows.extend([nodes[j], xi, ui] for xi, ui in zip(x, phys))
        else:
            mid = phys.shape[1] // 2
            rows.extend([nodes[j], xi, ui] for xi, ui in zip(x, phys[:, mid]))
    return rows


def write_snapshots(path: Path, outcome: MildOutcome, times: Sequence[float]) -> int:
    """Snapshot CSV; 2D runs export the slice y = pi/2."""
    return write_csv(path, ["t", "x", "u"], snapshot_rows(outcome, times))


PHASE_COLUMNS = ["alpha", "gamma", "p", "scale", "prediction", "theorem_case", "observed", "t_star", "agreement", "error"]


def write_phase_table(path: Path, rows: List[Dict[str, Any]]) -> int:
    return write_csv(path, PHASE_COLUMNS, ([row.get(c) for c in PHASE_COLUMNS] for row in rows))
