"""Artifact emission: deterministic JSON reports, fixed-precision CSV curves,
and figure rendering next to the delimited output."""
from __future__ import annotations

import csv
import json
import os
from typing import Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["write_json", "write_csv", "render_curves", "SIG_DIGITS"]

SIG_DIGITS = 17


def _canonical(obj):
    """Round-trip-safe, deterministic JSON payload."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        try:
            return _canonical(obj.item())
        except Exception:
            pass
    if hasattr(obj, "tolist"):
        return _canonical(obj.tolist())
    return obj


def write_json(path: str, payload: dict) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_canonical(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fmt = f"%.{SIG_DIGITS}g"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt % v if isinstance(v, float) else v for v in row])
    return path


def render_curves(path: str, curves: Sequence[dict], xlabel: str, ylabel: str,
                  title: str = "", logx: bool = False, logy: bool = False,
                  scatter: bool = False) -> Optional[str]:
    """Render curves [{x, y, label}] to a PNG next to the CSV artifacts."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for c in curves:
        if scatter:
            ax.scatter(c["x"], c["y"], s=6, label=c.get("label"),
                       c=c.get("color"))
        else:
            ax.plot(c["x"], c["y"], label=c.get("label"))
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if any(c.get("label") for c in curves):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
