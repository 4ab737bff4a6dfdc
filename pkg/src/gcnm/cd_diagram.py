"""Critical-difference diagram rendering as a deterministic standalone SVG.

Models sit on a horizontal average-rank axis (best rank on the left); thick
bars underneath connect cliques of models whose pairwise differences were not
rejected. The output is plain text SVG with fixed formatting, so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

from .stats import ComparisonResult

WIDTH = 640.0
AXIS_Y = 60.0
MARGIN = 90.0
LABEL_STEP = 22.0
BAR_STEP = 9.0


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_cd_diagram(result: ComparisonResult) -> str:
    models = sorted(result.average_ranks, key=lambda m: (result.average_ranks[m], m))
    ranks = result.average_ranks
    lo = min(ranks.values())
    hi = max(ranks.values())
    lo_tick = int(lo)
    hi_tick = max(int(hi + 0.9999), lo_tick + 1)
    span_ticks = hi_tick - lo_tick

    def x_of(rank: float) -> float:
        return MARGIN + (WIDTH - 2 * MARGIN) * (rank - lo_tick) / span_ticks

    half = (len(models) + 1) // 2
    label_rows = max(half, len(models) - half)
    bar_rows = max(sum(1 for c in result.cliques if len(c) > 1), 1)
    height = AXIS_Y + bar_rows * BAR_STEP + 18 + label_rows * LABEL_STEP + 20

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(WIDTH)}" '
        f'height="{_fmt(height)}" font-family="monospace" font-size="12">',
        f'<line x1="{_fmt(MARGIN)}" y1="{_fmt(AXIS_Y)}" x2="{_fmt(WIDTH - MARGIN)}" '
        f'y2="{_fmt(AXIS_Y)}" stroke="black" stroke-width="1.5"/>',
    ]
    for tick in range(lo_tick, hi_tick + 1):
        x = x_of(tick)
        parts.append(f'<line x1="{_fmt(x)}" y1="{_fmt(AXIS_Y - 5)}" x2="{_fmt(x)}" '
                     f'y2="{_fmt(AXIS_Y)}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{_fmt(AXIS_Y - 10)}" '
                     f'text-anchor="middle">{tick}</text>')

    # clique bars just below the axis
    bar_y = AXIS_Y + BAR_STEP
    for clique in result.cliques:
        if len(clique) < 2:
            continue
        xs = [x_of(ranks[m]) for m in clique]
        parts.append(f'<line x1="{_fmt(min(xs) - 4)}" y1="{_fmt(bar_y)}" '
                     f'x2="{_fmt(max(xs) + 4)}" y2="{_fmt(bar_y)}" '
                     f'stroke="black" stroke-width="4"/>')
        bar_y += BAR_STEP

    # connectors and staggered labels, best models on the left
    label_top = AXIS_Y + bar_rows * BAR_STEP + 28
    for i, model in enumerate(models):
        x = x_of(ranks[model])
        left_side = i < half
        row = i if left_side else i - half
        y = label_top + row * LABEL_STEP
        label_x = MARGIN - 8 if left_side else WIDTH - MARGIN + 8
        anchor = "end" if left_side else "start"
        parts.append(f'<polyline points="{_fmt(x)},{_fmt(AXIS_Y)} {_fmt(x)},{_fmt(y - 4)} '
                     f'{_fmt(label_x)},{_fmt(y - 4)}" fill="none" stroke="black" '
                     f'stroke-width="1"/>')
        parts.append(f'<text x="{_fmt(label_x)}" y="{_fmt(y)}" text-anchor="{anchor}">'
                     f'{model} ({_fmt(ranks[model])})</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_cd_diagram(result: ComparisonResult, path: str | Path) -> None:
    Path(path).write_text(render_cd_diagram(result))
