"""Static SVG convergence plots written as plain text."""

import math
from collections import defaultdict
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
FLOOR = 1e-300

_W, _H = 720, 460
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 190, 30, 60


def seed_average(rows, metric):
    """Pointwise mean over seeds at the epochs every seed reached.

    Returns ``(epochs_equivalent, metric)`` lists sorted by epoch.
    """
    by_epoch = defaultdict(list)
    seeds = {r.seed for r in rows}
    for r in rows:
        by_epoch[r.epoch].append(r)
    xs, ys = [], []
    for epoch in sorted(by_epoch):
        group = by_epoch[epoch]
        if {r.seed for r in group} != seeds:
            continue
        xs.append(sum(r.epochs_equivalent for r in group) / len(group))
        ys.append(sum(getattr(r, metric) for r in group) / len(group))
    return xs, ys


def _nice_step(span):
    raw = span / 6 if span > 0 else 1.0
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * mag:
            return mult * mag
    return 10 * mag


def emit_plot(rt, metric, path, order=None, title=None):
    """Write ``metric`` against epochs (IFO / n) on a log y-axis, one line per method.

    Values below ``1e-300`` are clamped before the log transform.  Legend
    entries follow ``order`` (default: first appearance in the table).
    """
    if metric not in ("f_value", "grad_norm_sq"):
        raise ValueError(f"unknown metric {metric!r}")
    if not rt.rows:
        raise ValueError("cannot plot an empty result table")
    methods = list(order) if order is not None else rt.methods()
    lines = []
    for name in methods:
        rows = rt.select(name)
        if rows:
            xs, ys = seed_average(rows, metric)
            lines.append((name, xs, [math.log10(max(y, FLOOR)) for y in ys]))

    all_x = [x for _, xs, _ in lines for x in xs]
    all_y = [y for _, _, ys in lines for y in ys]
    x_lo, x_hi = min(all_x), max(all_x)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    y_lo, y_hi = math.floor(min(all_y)), math.ceil(max(all_y))
    if y_hi == y_lo:
        y_hi = y_lo + 1
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x):
        return _LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return _TOP + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_TOP - 10}" text-anchor="middle">'
                   f'{escape(title)}</text>')

    step = _nice_step(x_hi - x_lo)
    tick = math.ceil(x_lo / step) * step
    while tick <= x_hi + 1e-9 * step:
        x = px(tick)
        out.append(f'<line x1="{x:.2f}" y1="{_TOP + ph}" x2="{x:.2f}" y2="{_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{_TOP + ph + 18}" text-anchor="middle">{tick:g}</text>')
        tick += step
    ystep = max(1, math.ceil((y_hi - y_lo) / 10))
    for e in range(y_lo, y_hi + 1, ystep):
        y = py(e)
        out.append(f'<line x1="{_LEFT - 5}" y1="{y:.2f}" x2="{_LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{_LEFT}" y1="{y:.2f}" x2="{_LEFT + pw}" y2="{y:.2f}" '
                   f'stroke="#dddddd" stroke-width="0.5"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 15}" text-anchor="middle">'
               f'epochs (IFO calls / n)</text>')
    ylabel = "f(x)" if metric == "f_value" else "||grad f(x)||^2"
    out.append(f'<text transform="translate(20,{_TOP + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')

    for i, (name, xs, ys) in enumerate(lines):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline class="series" data-method="{escape(name, {chr(34): "&quot;"})}" '
                   f'fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = _TOP + 10 + 18 * i
        lx = _LEFT + pw + 15
        out.append(f'<g class="legend"><line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>'
                   f'<text x="{lx + 26}" y="{ly + 4}">{escape(name)}</text></g>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
