"""Figures from the CLI's CSV artifacts.

Usage: python -m sem2d.plots render --spec FILE

The spec is a JSON object with a "kind" of convergence, heatmap-panel or
quiver-overlay, the input CSV path(s) and an "output" image path. Relative
paths resolve against the spec file's directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

VALIDATION_COLUMNS = ["case", "operator", "N_Sigma", "error", "wall_ms"]
UNIFORM_FIXED = ["t", "i", "j", "x1", "x2"]


class SchemaError(Exception):
    pass


def _require(df: pd.DataFrame, columns, path) -> None:
    for c in columns:
        if c not in df.columns:
            raise SchemaError(f"{path}: missing column '{c}'")


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    # no timestamps or software tags, so identical inputs give identical files
    meta = {"Software": None} if path.suffix.lower() == ".png" else {"Date": None, "Creator": None}
    fig.savefig(path, dpi=120, metadata=meta)
    plt.close(fig)


def convergence(spec: dict, base: Path) -> Path:
    frames = []
    for p in spec["inputs"]:
        path = base / p
        df = pd.read_csv(path)
        _require(df, VALIDATION_COLUMNS, path)
        frames.append(df)
    df = pd.concat(frames)
    op = spec.get("operator", "lap")
    df = df[df["operator"] == op]
    cases = spec.get("cases") or sorted(df["case"].unique())
    fig, ax = plt.subplots(figsize=(5, 4))
    for c in cases:
        d = df[df["case"] == c].sort_values("N_Sigma")
        ax.plot(d["N_Sigma"], d["error"].clip(lower=1e-17), marker="o", label=f"({c})")
    ax.set_yscale("log")
    ax.set_xlabel(r"$N_\Sigma$")
    ax.set_ylabel("error")
    ax.set_title(spec.get("title", op))
    ax.legend()
    fig.tight_layout()
    out = base / spec["output"]
    _save(fig, out)
    return out


def _grid(frame: pd.DataFrame, column: str):
    nx = int(frame["i"].max()) + 1
    ny = int(frame["j"].max()) + 1
    f = frame.sort_values(["i", "j"])
    shape = (nx, ny)
    x = f["x1"].to_numpy().reshape(shape)
    y = f["x2"].to_numpy().reshape(shape)
    v = f[column].to_numpy(dtype=float).reshape(shape)
    mask = f["in_domain"].to_numpy().reshape(shape) == 0
    return x, y, np.ma.masked_array(v, mask=mask | ~np.isfinite(v))


def _frame_times(df: pd.DataFrame, spec: dict):
    times = sorted(df["t"].unique())
    wanted = spec.get("times")
    if wanted is None:
        return times
    return [min(times, key=lambda t: abs(t - w)) for w in wanted]


def heatmap_panel(spec: dict, base: Path) -> Path:
    path = base / spec["input"]
    df = pd.read_csv(path)
    columns = spec["columns"]
    _require(df, UNIFORM_FIXED + columns + ["in_domain"], path)
    times = _frame_times(df, spec)
    fig, axes = plt.subplots(len(columns), len(times), figsize=(3 * len(times), 2.6 * len(columns)), squeeze=False)
    for r, col in enumerate(columns):
        for c, t in enumerate(times):
            ax = axes[r][c]
            x, y, v = _grid(df[df["t"] == t], col)
            if v.count():
                ax.pcolormesh(x, y, v, shading="auto", cmap=spec.get("cmap", "viridis"))
            ax.set_aspect("equal")
            ax.set_title(f"{col}, t = {t:g}", fontsize=9)
            ax.set_xticks([])
            ax.set_yticks([])
    fig.tight_layout()
    out = base / spec["output"]
    _save(fig, out)
    return out


def quiver_overlay(spec: dict, base: Path) -> Path:
    path = base / spec["input"]
    df = pd.read_csv(path)
    bg = spec["background"]
    vx, vy = spec.get("vector", ["w_x1", "w_x2"])
    _require(df, UNIFORM_FIXED + [bg, vx, vy, "in_domain"], path)
    t = _frame_times(df, {"times": [spec.get("time", 0.0)]})[0]
    frame = df[df["t"] == t]
    x, y, v = _grid(frame, bg)
    _, _, u1 = _grid(frame, vx)
    _, _, u2 = _grid(frame, vy)
    s = int(spec.get("stride", 3))
    fig, ax = plt.subplots(figsize=(6, 4))
    if v.count():
        ax.pcolormesh(x, y, v, shading="auto", cmap=spec.get("cmap", "viridis"))
    ax.quiver(x[::s, ::s], y[::s, ::s], u1[::s, ::s], u2[::s, ::s], color="w")
    ax.set_aspect("equal")
    ax.set_title(f"{bg} and ({vx}, {vy}), t = {t:g}")
    fig.tight_layout()
    out = base / spec["output"]
    _save(fig, out)
    return out


KINDS = {"convergence": convergence, "heatmap-panel": heatmap_panel, "quiver-overlay": quiver_overlay}


def render(spec_path: str | Path) -> Path:
    spec_path = Path(spec_path)
    spec = json.loads(spec_path.read_text())
    kind = spec.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"{spec_path}: unknown figure kind '{kind}'")
    return KINDS[kind](spec, spec_path.parent)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sem2d.plots")
    sub = parser.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("render", help="render one figure spec")
    r.add_argument("--spec", required=True)
    args = parser.parse_args(argv)
    try:
        print(render(args.spec))
    except (SchemaError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
