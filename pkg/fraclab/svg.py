"""Plain-text SVG log-log plots"""

import math
from xml.sax.saxutils import escape

__all__ = ('loglog_svg', 'write_loglog_svg')

WIDTH = 480
HEIGHT = 360
MARGIN = 48
COLORS = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e')


def _bounds(series):
    xs = [math.log10(x) for _, pts in series for x, y in pts if x > 0 and y > 0]
    ys = [math.log10(y) for _, pts in series for x, y in pts if x > 0 and y > 0]
    if not xs:
        return (0.0, 1.0), (0.0, 1.0)
    def pad(lo, hi):
        if hi - lo < 1e-12:
            return lo - 0.5, hi + 0.5
        return lo, hi
    return pad(min(xs), max(xs)), pad(min(ys), max(ys))


def loglog_svg(series, title='', xlabel='', ylabel=''):
    """Render ``[(label, [(x, y), ...]), ...]`` on log10 axes

    Points with a nonpositive coordinate are skipped.

    Returns:
        str: The SVG document
    """
    (x0, x1), (y0, y1) = _bounds(series)
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (math.log10(x) - x0) / (x1 - x0) * pw

    def py(y):
        return HEIGHT - MARGIN - (math.log10(y) - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{MARGIN / 2}" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 8}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{HEIGHT / 2}" transform="rotate(-90 12 {HEIGHT / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 14}" font-size="10">1e{x0:.2f}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 14}" font-size="10" '
        f'text-anchor="end">1e{x1:.2f}</text>',
        f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" font-size="10" text-anchor="end">1e{y0:.2f}</text>',
        f'<text x="{MARGIN - 4}" y="{MARGIN + 10}" font-size="10" text-anchor="end">1e{y1:.2f}</text>',
    ]
    for k, (label, pts) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        good = [(x, y) for x, y in pts if x > 0 and y > 0]
        if good:
            path = ' '.join(f'{px(x):.2f},{py(y):.2f}' for x, y in good)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}"/>')
            out.extend(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="{color}"/>'
                       for x, y in good)
        out.append(f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 14 * (k + 1)}" font-size="11" '
                   f'text-anchor="end" fill="{color}">{escape(str(label))}</text>')
    out.append('</svg>')
    return '\n'.join(out) + '\n'


def write_loglog_svg(path, series, **kwargs):
    with open(path, 'w', encoding='utf-8') as fp:
        fp.write(loglog_svg(series, **kwargs))
