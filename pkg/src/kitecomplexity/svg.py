"""Static SVG figures: the kite, an unfolded corridor, a traced beam, a shear step.

Coordinates are written with fixed precision so equal inputs give equal bytes.
"""
from __future__ import annotations

import math
from typing import Iterable, List, Optional, Sequence, Tuple

from .beams import ShearExtension, SplitEvent, SurvivedToHorizon
from .geometry import KiteSpec
from .unfolding import UnfoldedRay

Pt = Tuple[float, float]
WIDTH = 640


def _f(x: float) -> str:
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class Canvas:
    def __init__(self, title: str):
        self.title = title
        self.items: List[Tuple[str, list, dict]] = []
        self.pts: List[Pt] = []

    def _track(self, pts):
        self.pts.extend((float(x), float(y)) for x, y in pts)

    def polygon(self, pts: Sequence[Pt], **style):
        self._track(pts)
        self.items.append(("polygon", list(pts), style))

    def line(self, a: Pt, b: Pt, **style):
        self._track([a, b])
        self.items.append(("line", [a, b], style))

    def dot(self, p: Pt, **style):
        self._track([p])
        self.items.append(("circle", [p], style))

    def text(self, p: Pt, label: str, **style):
        self._track([p])
        self.items.append(("text", [p], dict(style, label=label)))

    def render(self) -> str:
        xs = [p[0] for p in self.pts] or [0.0]
        ys = [p[1] for p in self.pts] or [0.0]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        span = max(x1 - x0, y1 - y0, 1e-9)
        pad = 0.05 * span
        s = (WIDTH - 20) / (span + 2 * pad)
        w = (x1 - x0 + 2 * pad) * s + 20
        h = (y1 - y0 + 2 * pad) * s + 20

        def tr(p):
            return (10 + (float(p[0]) - x0 + pad) * s, h - 10 - (float(p[1]) - y0 + pad) * s)

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(w)}" height="{_f(h)}" '
            f'viewBox="0 0 {_f(w)} {_f(h)}">',
            f"<title>{self.title}</title>",
            '<rect width="100%" height="100%" fill="white"/>',
        ]
        for kind, pts, st in self.items:
            stroke = st.get("stroke", "black")
            sw = st.get("width", 1)
            fill = st.get("fill", "none")
            if kind == "polygon":
                coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in map(tr, pts))
                out.append(f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}" '
                           f'stroke-width="{sw}"/>')
            elif kind == "line":
                (ax, ay), (bx, by) = map(tr, pts)
                dash = f' stroke-dasharray="{st["dash"]}"' if "dash" in st else ""
                out.append(f'<line x1="{_f(ax)}" y1="{_f(ay)}" x2="{_f(bx)}" y2="{_f(by)}" '
                           f'stroke="{stroke}" stroke-width="{sw}"{dash}/>')
            elif kind == "circle":
                cx, cy = tr(pts[0])
                out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{st.get("r", 4)}" '
                           f'fill="{st.get("fill", "red")}"/>')
            else:
                cx, cy = tr(pts[0])
                out.append(f'<text x="{_f(cx)}" y="{_f(cy)}" font-size="12" '
                           f'font-family="monospace">{st["label"]}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _reflect(p: Pt, a: Pt, b: Pt) -> Pt:
    dx, dy = b[0] - a[0], b[1] - a[1]
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
    fx, fy = a[0] + t * dx, a[1] + t * dy
    return (2 * fx - p[0], 2 * fy - p[1])


def unfolded_copies(kite: KiteSpec, word: Iterable[int]) -> List[List[Pt]]:
    V = kite.vertices_float()
    out = [V]
    for j in word:
        a, b = V[j - 1], V[j % 4]
        V = [_reflect(q, a, b) for q in V]
        out.append(V)
    return out


def kite_svg(kite: KiteSpec) -> str:
    c = Canvas(kite.name)
    V = kite.vertices_float()
    c.polygon(V, fill="#eef", width=2)
    for i, p in enumerate(V):
        c.dot(p, r=3, fill="black")
        c.text(p, f"V{i}")
    for s in range(1, 5):
        a, b = V[s - 1], V[s % 4]
        c.text(((a[0] + b[0]) / 2, (a[1] + b[1]) / 2), str(s))
    return c.render()


def corridor_svg(kite: KiteSpec, ray: UnfoldedRay) -> str:
    c = Canvas(f"{kite.name} unfolded along {''.join(map(str, ray.word))}")
    for V in unfolded_copies(kite, ray.word):
        c.polygon(V, stroke="#888")
    pts = [(float(x), float(y)) for x, y in ray.points]
    for a, b in zip(pts, pts[1:]):
        c.line(a, b, stroke="blue", width=1.5)
    c.dot(pts[0], fill="blue")
    return c.render()


def beam_svg(kite: KiteSpec, event) -> str:
    """Beam corridor with the entering vertex marked (for a :class:`SplitEvent`)."""
    cor = event.corridor
    word = cor.word
    c = Canvas(f"{kite.name} beam of width {float(cor.width):.3g}")
    for V in unfolded_copies(kite, word):
        c.polygon(V, stroke="#888")
    L = float(cor.T) if isinstance(event, SurvivedToHorizon) else None
    if isinstance(event, SplitEvent):
        vx, vy = map(float, event.vertex_point)
        dx, dy = map(float, cor.dir_vector)
        (sx, sy), _ = cor.boundary_rays()[0]
        L = (vx - float(sx)) * dx + (vy - float(sy)) * dy
    L = max(L or 0.0, 0.0) * 1.05
    ends = []
    for (p, d) in cor.boundary_rays():
        p = (float(p[0]), float(p[1]))
        q = (p[0] + L * float(d[0]), p[1] + L * float(d[1]))
        c.line(p, q, stroke="blue", width=1.5)
        ends.append((p, q))
    c.polygon([ends[0][0], ends[1][0], ends[1][1], ends[0][1]], stroke="none", fill="#cce")
    if isinstance(event, SplitEvent):
        c.dot((vx, vy), r=5, fill="red")
        c.text((vx, vy), f"split at step {event.step}")
    return c.render()


def shear_svg(kite: KiteSpec, ext: ShearExtension, L_S: float, beam_before) -> str:
    c = Canvas(f"{kite.name} shear extension")
    for tag, cor, colour in (("beam", beam_before, "blue"), ("extended", ext.beam, "green")):
        rays = cor.boundary_rays()
        T = float(cor.T) if float(cor.T) > 0 else L_S
        for p, d in rays:
            p = (float(p[0]), float(p[1]))
            c.line(p, (p[0] + T * float(d[0]), p[1] + T * float(d[1])), stroke=colour,
                   dash="4 2" if tag == "extended" else "none")
    (p, d) = beam_before.boundary_rays()[0]
    p = (float(p[0]), float(p[1]))
    phi = float(ext.phi_angle)
    th = math.atan2(float(d[1]), float(d[0])) + phi
    c.line(p, (p[0] + L_S * math.cos(th), p[1] + L_S * math.sin(th)), stroke="red", width=2)
    c.text(p, f"delta={float(ext.delta):.3g}")
    return c.render()
