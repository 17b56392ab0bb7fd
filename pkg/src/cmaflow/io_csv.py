"""CSV and report serialization for grids, grid functions and run results.

The node schema is flat: one row per non-Exterior node with its index,
coordinates, class (1 = band, 2 = interior) and value.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .domain import GridFunction, SpaceGrid


def write_node_csv(path, u: GridFunction) -> None:
    g = u.grid
    d = g.pos.shape[1]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index"] + [f"x{k}" for k in range(d)] + ["class", "value"])
        for i in range(g.n_nodes):
            w.writerow([i] + [f"{c:.12g}" for c in g.pos[i]]
                       + [int(g.node_cls[i]), f"{u.values[i]:.12g}"])


def read_node_csv(path, grid: SpaceGrid) -> GridFunction:
    vals = np.empty(grid.n_nodes)
    seen = 0
    with open(Path(path), newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        vcol = header.index("value")
        for row in r:
            vals[int(row[0])] = float(row[vcol])
            seen += 1
    if seen != grid.n_nodes:
        raise ValueError(f"{seen} rows for a grid with {grid.n_nodes} nodes")
    return GridFunction(grid, vals)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([f"{c:.12g}" if isinstance(c, float) else c for c in row])


def write_report(path, report: dict, title: Optional[str] = None) -> None:
    """Flat structured text: one 'key: value' line per entry, nested dicts
    dotted, long arrays summarized."""
    lines = [] if title is None else [f"# {title}"]

    def emit(prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                emit(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(obj, np.ndarray) and obj.size > 8:
            lines.append(f"{prefix}: array(n={obj.size}, "
                         f"min={np.min(obj):.6g}, max={np.max(obj):.6g})")
        elif isinstance(obj, (list, tuple)) and len(obj) > 8:
            lines.append(f"{prefix}: sequence(n={len(obj)})")
        else:
            lines.append(f"{prefix}: {obj}")

    emit("", report)
    Path(path).write_text("\n".join(lines) + "\n")
