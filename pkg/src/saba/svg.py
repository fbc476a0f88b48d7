"""Minimal static SVG plots: Pareto scatter, win-count bars and Gantt lanes."""

from __future__ import annotations

from html import escape
from pathlib import Path
from typing import Sequence

WIDTH, HEIGHT = 640, 420
MARGIN = 60
KIND_COLORS = {"travel": "#4c78a8", "pick": "#59a14f", "swap": "#e15759"}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _doc(body: list[str], width: int = WIDTH, height: int = HEIGHT) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def _axes(xlabel: str, ylabel: str, title: str) -> list[str]:
    x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - 20, 30
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{(y0 + y1) / 2}" text-anchor="middle" transform="rotate(-90 15 {(y0 + y1) / 2})">{escape(ylabel)}</text>',
        f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-weight="bold">{escape(title)}</text>',
    ]


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def pareto_scatter(points: Sequence[Sequence[float]], knee: int | None = None, title: str = "Pareto front") -> str:
    body = _axes("makespan (s)", "transport energy (kJ)", title)
    if points:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        sx = _scale(min(xs), max(xs), MARGIN + 10, WIDTH - 30)
        sy = _scale(min(ys), max(ys), HEIGHT - MARGIN - 10, 40)
        for v, anchor in ((min(xs), "start"), (max(xs), "end")):
            body.append(f'<text x="{_fmt(sx(v))}" y="{HEIGHT - MARGIN + 15}" text-anchor="{anchor}">{v:.1f}</text>')
        for v in (min(ys), max(ys)):
            body.append(f'<text x="{MARGIN - 4}" y="{_fmt(sy(v))}" text-anchor="end">{v:.2f}</text>')
        for i, (x, y) in enumerate(zip(xs, ys)):
            if i == knee:
                continue
            body.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="4" fill="#4c78a8"/>')
        if knee is not None:
            x, y = xs[knee], ys[knee]
            body.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="7" fill="#e15759" stroke="black"/>')
            body.append(f'<text x="{_fmt(sx(x) + 10)}" y="{_fmt(sy(y) - 8)}">knee</text>')
    return _doc(body)


def bar_chart(values: dict[str, float], title: str = "Win counts", ylabel: str = "wins") -> str:
    body = _axes("variant", ylabel, title)
    if values:
        top = max(max(values.values()), 1)
        slot = (WIDTH - 20 - MARGIN) / len(values)
        sy = _scale(0, top, HEIGHT - MARGIN, 40)
        for k, (name, v) in enumerate(values.items()):
            x = MARGIN + k * slot + slot * 0.15
            y = sy(v)
            body.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(slot * 0.7)}" height="{_fmt(HEIGHT - MARGIN - y)}" fill="#4c78a8"/>'
            )
            body.append(f'<text x="{_fmt(x + slot * 0.35)}" y="{_fmt(y - 4)}" text-anchor="middle">{v:g}</text>')
            body.append(
                f'<text x="{_fmt(x + slot * 0.35)}" y="{HEIGHT - MARGIN + 15}" text-anchor="middle">{escape(name)}</text>'
            )
    return _doc(body)


def gantt_chart(rows: Sequence[tuple[int, int, float, float, str]], title: str = "Schedule") -> str:
    """Lanes per robot; ``rows`` are ``(robot, cycle, start_s, end_s, kind)``."""
    robots = sorted({r[0] for r in rows})
    height = max(HEIGHT, 80 + 30 * len(robots))
    body = [f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-weight="bold">{escape(title)}</text>']
    if rows:
        end = max(r[3] for r in rows)
        sx = _scale(0, end, MARGIN, WIDTH - 20)
        for lane, robot in enumerate(robots):
            y = 40 + lane * 30
            body.append(f'<text x="{MARGIN - 6}" y="{y + 15}" text-anchor="end">R{robot}</text>')
            for rb, _, s, e, kind in rows:
                if rb != robot or e <= s:
                    continue
                color = KIND_COLORS.get(kind, "#999999")
                body.append(
                    f'<rect x="{_fmt(sx(s))}" y="{y}" width="{_fmt(sx(e) - sx(s))}" height="20" fill="{color}"/>'
                )
        axis_y = 40 + len(robots) * 30 + 10
        body.append(f'<line x1="{MARGIN}" y1="{axis_y}" x2="{WIDTH - 20}" y2="{axis_y}" stroke="black"/>')
        body.append(f'<text x="{WIDTH - 20}" y="{axis_y + 15}" text-anchor="end">{end:.0f} s</text>')
        for k, (kind, color) in enumerate(KIND_COLORS.items()):
            body.append(f'<rect x="{MARGIN + 90 * k}" y="{axis_y + 25}" width="12" height="12" fill="{color}"/>')
            body.append(f'<text x="{MARGIN + 90 * k + 16}" y="{axis_y + 36}">{kind}</text>')
    return _doc(body, height=height)


def write_svg(text: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
