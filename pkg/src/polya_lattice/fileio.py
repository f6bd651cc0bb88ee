"""CSV / JSON-lines readers and writers, and static SVG charts.

Every writer renders the full text first and then moves it into place,
so a failure never leaves a partial file behind. Floats are written with
``repr`` so that reading a file back gives the same values bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import CapitalCurve, MarketSnapshot
from .simulate import Trajectory
from .verify import CheckReport

__all__ = [
    "SNAPSHOT_HEADER",
    "TRAJECTORY_HEADER",
    "CURVE_HEADER",
    "EmptyInputError",
    "atomic_write",
    "read_snapshot",
    "write_snapshot",
    "curve_csv",
    "write_curve",
    "read_curve",
    "write_trajectory",
    "write_report",
    "render_curve_svg",
    "render_trajectory_svg",
    "render_svg",
]

SNAPSHOT_HEADER = ["ticker", "market_cap"]
TRAJECTORY_HEADER = ["step", "phase", "stock", "count", "weight"]
CURVE_HEADER = ["rank", "weight", "log10_rank", "log10_weight"]


class EmptyInputError(ValueError):
    pass


def _file_mode() -> int:
    # mkstemp creates 0600 files; give outputs the usual umask-derived mode
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, _file_mode())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_rows(path, header: Sequence[str]) -> list[tuple[int, list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyInputError(f"{path}: file is empty")
    if [h.strip() for h in rows[0]] != list(header):
        raise ValueError(f"{path}:1: expected header {','.join(header)!r}, got {','.join(rows[0])!r}")
    body = [(lineno, row) for lineno, row in enumerate(rows[1:], start=2) if row]
    if not body:
        raise EmptyInputError(f"{path}: no data rows")
    for lineno, row in body:
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
    return body


def read_snapshot(path, label: str | None = None) -> MarketSnapshot:
    """Read a ``ticker,market_cap`` CSV. The label defaults to the file stem."""
    entries = []
    for lineno, (ticker, cap) in _read_rows(path, SNAPSHOT_HEADER):
        ticker = ticker.strip()
        if not ticker:
            raise ValueError(f"{path}:{lineno}: empty ticker")
        try:
            value = float(cap)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: market_cap {cap!r} is not a number") from None
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"{path}:{lineno}: market_cap must be finite and >= 0, got {cap!r}")
        entries.append((ticker, value))
    try:
        return MarketSnapshot(label if label is not None else Path(path).stem, tuple(entries))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_snapshot(path, snapshot: MarketSnapshot) -> None:
    atomic_write(path, _csv_text(SNAPSHOT_HEADER, ((t, repr(c)) for t, c in snapshot.entries)))


def curve_csv(curve: CapitalCurve) -> str:
    rows = (
        (int(r), repr(float(w)), repr(float(lr)), repr(float(lw)))
        for r, w, lr, lw in zip(curve.ranks, curve.weights, curve.log10_rank, curve.log10_weight)
    )
    return _csv_text(CURVE_HEADER, rows)


def write_curve(path, curve: CapitalCurve) -> None:
    atomic_write(path, curve_csv(curve))


def read_curve(path) -> CapitalCurve:
    ranks, weights = [], []
    for lineno, row in _read_rows(path, CURVE_HEADER):
        try:
            ranks.append(int(row[0]))
            weights.append(float(row[1]))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from None
    ranks = np.asarray(ranks)
    if not np.array_equal(ranks, np.arange(1, len(ranks) + 1)):
        raise ValueError(f"{path}: ranks must run 1..k in order")
    # labels are not part of the curve schema
    return CapitalCurve(ranks, np.asarray(weights), tuple(str(r - 1) for r in ranks))


def write_trajectory(path, traj: Trajectory) -> None:
    """Long-format trajectory CSV: one row per recorded step and stock."""
    weights = traj.weights
    phases = traj.phases()

    def rows():
        for k, step in enumerate(traj.steps):
            for stock, count in enumerate(traj.counts[k]):
                yield int(step), phases[k], stock, int(count), repr(float(weights[k, stock]))

    atomic_write(path, _csv_text(TRAJECTORY_HEADER, rows()))


def write_report(path, reports: Iterable[CheckReport]) -> None:
    atomic_write(path, "".join(json.dumps(r.to_dict()) + "\n" for r in reports))


# --- SVG -------------------------------------------------------------------

_W, _H = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 20, 30, 50
_PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def _f(x: float) -> str:
    return f"{x:.2f}"


class _Frame:
    """Maps data coordinates into the plot rectangle."""

    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 1, self.x1 + 1
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 1, self.y1 + 1

    def x(self, v):
        return _LEFT + (v - self.x0) / (self.x1 - self.x0) * (_W - _LEFT - _RIGHT)

    def y(self, v):
        return _H - _BOTTOM - (v - self.y0) / (self.y1 - self.y0) * (_H - _TOP - _BOTTOM)


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="13">{_escape(title)}</text>',
    ]


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _axes(frame: _Frame, xticks, yticks, xlabel: str, ylabel: str) -> list[str]:
    x0, x1 = _LEFT, _W - _RIGHT
    y0, y1 = _H - _BOTTOM, _TOP
    out = [
        f'<g class="axes" stroke="black" stroke-width="1" fill="none">',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>',
        "</g>",
        '<g class="ticks" font-family="sans-serif" font-size="10">',
    ]
    for value, label in xticks:
        px = _f(frame.x(value))
        out.append(f'<line x1="{px}" y1="{y0}" x2="{px}" y2="{y0 + 4}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{y0 + 16}" text-anchor="middle">{label}</text>')
    for value, label in yticks:
        py = _f(frame.y(value))
        out.append(f'<line x1="{x0 - 4}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/>')
        out.append(f'<text x="{x0 - 6}" y="{py}" text-anchor="end" dominant-baseline="middle">{label}</text>')
    out.append("</g>")
    out.append(
        f'<text x="{(x0 + x1) / 2:.0f}" y="{_H - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">{_escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="11" transform="rotate(-90 16 {(y0 + y1) / 2:.0f})">{_escape(ylabel)}</text>'
    )
    return out


def _decade_ticks(lo: float, hi: float) -> list[tuple[float, str]]:
    return [(float(k), f"1e{k}") for k in range(math.floor(lo), math.ceil(hi) + 1)]


def _linear_ticks(lo: float, hi: float, count: int = 5) -> list[tuple[float, str]]:
    if hi == lo:
        return [(lo, f"{lo:g}")]
    return [(v, f"{v:g}") for v in np.linspace(lo, hi, count).round(6)]


def render_curve_svg(curves: CapitalCurve | Sequence[CapitalCurve], path,
                     names: Sequence[str] | None = None, title: str = "Capital distribution curve") -> None:
    """Log-log scatter of ranked weights; several curves share the axes."""
    if isinstance(curves, CapitalCurve):
        curves = [curves]
    names = list(names) if names is not None else [f"curve {k}" for k in range(len(curves))]
    xs = np.concatenate([c.log10_rank for c in curves])
    ys = np.concatenate([c.log10_weight for c in curves])
    xlo, xhi = min(0.0, xs.min()), math.ceil(xs.max()) if xs.max() > 0 else 1.0
    ylo, yhi = math.floor(ys.min()), 0.0
    if ylo == yhi:
        ylo = -1.0
    frame = _Frame((xlo, xhi), (ylo, yhi))
    out = _header(title)
    out += _axes(frame, _decade_ticks(xlo, xhi), _decade_ticks(ylo, yhi), "rank", "weight")
    for k, curve in enumerate(curves):
        color = _PALETTE[k % len(_PALETTE)]
        out.append(f'<g class="curve" data-name="{_escape(names[k])}" stroke="{color}" fill="none">')
        for lx, ly in zip(curve.log10_rank, curve.log10_weight):
            out.append(
                f'<circle cx="{_f(frame.x(lx))}" cy="{_f(frame.y(ly))}" r="3" '
                f'data-log10-rank="{lx:.6g}" data-log10-weight="{ly:.6g}"/>'
            )
        out.append("</g>")
        out.append(
            f'<text x="{_W - _RIGHT - 4}" y="{_TOP + 14 * (k + 1)}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10" fill="{color}">{_escape(names[k])}</text>'
        )
    out.append("</svg>")
    atomic_write(path, "\n".join(out) + "\n")


def render_trajectory_svg(traj: Trajectory, path, title: str = "Market weights") -> None:
    """Weight-versus-step line chart, one polyline per stock."""
    steps = traj.steps.astype(float)
    weights = traj.weights
    ymax = float(weights.max()) if weights.size else 1.0
    ymax = ymax if ymax > 0 else 1.0
    frame = _Frame((0.0, float(steps.max()) if steps.size else 1.0), (0.0, ymax))
    out = _header(title)
    out += _axes(frame, _linear_ticks(frame.x0, frame.x1), _linear_ticks(0.0, ymax), "step", "weight")
    threshold = traj.config.growth_steps
    if 0 < threshold < traj.config.total_steps:
        px = _f(frame.x(threshold))
        out.append(
            f'<line class="threshold" x1="{px}" y1="{_H - _BOTTOM}" x2="{px}" y2="{_TOP}" '
            'stroke="gray" stroke-dasharray="4 3"/>'
        )
    for stock in range(weights.shape[1]):
        pts = " ".join(f"{_f(frame.x(s))},{_f(frame.y(w))}" for s, w in zip(steps, weights[:, stock]))
        color = _PALETTE[stock % len(_PALETTE)]
        out.append(
            f'<polyline data-stock="{stock}" points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>'
        )
    out.append("</svg>")
    atomic_write(path, "\n".join(out) + "\n")


def render_svg(value, path, **kwargs) -> None:
    if isinstance(value, Trajectory):
        render_trajectory_svg(value, path, **kwargs)
    else:
        render_curve_svg(value, path, **kwargs)
