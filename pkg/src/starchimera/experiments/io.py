"""Result files: CSV tables, JSON run manifests and SVG figures."""

from __future__ import annotations

import csv
import json
import math
import platform
from importlib import metadata
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return repr(v)
    return "" if v is None else str(v)


def write_csv(path, rows: Sequence[Mapping], columns: Sequence[str] | None = None) -> Path:
    """Write dict rows with round-trip float formatting (identical inputs give identical bytes)."""
    path = Path(path)
    cols = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(o):
    if isinstance(o, Mapping):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    return o


def write_manifest(path, config: Mapping, seed: int, wall_time: float, outputs: Iterable[str] = (),
                   extra: Mapping | None = None) -> Path:
    data = {
        "config": _jsonable(config),
        "seed": int(seed),
        "code_version": code_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": float(wall_time),
        "outputs": sorted(outputs),
    }
    if extra:
        data.update(_jsonable(extra))
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def plot_svg(path, series: Sequence[dict], *, xlabel: str, ylabel: str, title: str = "",
             logx: bool = False, logy: bool = False, guides: Sequence[float] = (),
             guide_anchor: tuple[float, float] | None = None, vlines: Sequence[float] = ()) -> Path:
    """Line/scatter figure.  Each series is ``{"x", "y", "label", optional "yerr", "style"}``.

    ``guides`` are reference slopes drawn through ``guide_anchor`` on log axes.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.2))
    for s in series:
        x, y = np.asarray(s["x"], float), np.asarray(s["y"], float)
        style = s.get("style", "o-")
        if s.get("yerr") is not None:
            ax.errorbar(x, y, yerr=s["yerr"], fmt=style, ms=4, capsize=2, label=s.get("label"))
        else:
            ax.plot(x, y, style, ms=4, label=s.get("label"))
    if guides and guide_anchor is not None:
        x0, y0 = guide_anchor
        xs = np.array(ax.get_xlim()) if not logx else np.array([x0, x0 * 10])
        for g in guides:
            ax.plot(xs, y0 * (xs / x0) ** g, "--", color="gray", lw=1, label=f"slope {g:g}")
    for v in vlines:
        ax.axvline(v, ls=":", color="k", lw=1)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
