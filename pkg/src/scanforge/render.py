"""Circuit-style SVG diagrams of scan traces.

Each recorded transaction becomes a gate: small circles on the processor
lines it reads, a large circle on the line it writes, and connecting
edges, stacked top-down by stage depth. Output is plain SVG 1.1 with
fixed 4-decimal coordinate formatting so identical traces yield
byte-identical files.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import IO, Iterable

from .tracing import Transaction, infer_depths

R_IN = 0.1
R_OUT = 0.25
LINE_MM = 0.3
GUIDE_MM = 0.1
DPI = 96.0


@dataclass(frozen=True)
class Gate:
    ins: tuple[int, ...]
    outs: tuple[int, ...]
    depth: int


@dataclass
class Diagram:
    width: int
    max_depth: int
    gates: list[Gate] = field(default_factory=list)

    @property
    def guidelines(self) -> range:
        return range(1, self.width + 1)


def layout(history: Iterable[Transaction], n: int) -> Diagram:
    """Place one gate per transaction at its inferred stage depth."""
    leveled = infer_depths(history)
    gates = [Gate(t.reads, (t.write,), d) for t, d in leveled]
    maxdepth = leveled[-1][1] if leveled else 0
    return Diagram(width=n, max_depth=maxdepth, gates=gates)


def _mm_to_px(mm: float) -> float:
    return mm * DPI / 25.4


def _f(v: float) -> str:
    return f"{v:.4f}"


def svg_string(d: Diagram, viewport: tuple[int, int] = (600, 400)) -> str:
    """Render the diagram into an SVG document string.

    The unit box (0.5, 0, width, max_depth+1) is mapped affinely onto the
    pixel viewport; the depth axis points downward.
    """
    w_px, h_px = viewport
    units_x = max(d.width, 1)
    units_y = d.max_depth + 1
    sx = w_px / units_x
    sy = h_px / units_y

    def fx(x: float) -> str:
        return _f((x - 0.5) * sx)

    def fy(y: float) -> str:
        return _f(y * sy)

    lines: list[str] = []
    lines.append('<?xml version="1.0" encoding="UTF-8"?>')
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{w_px}" height="{h_px}" viewBox="0 0 {w_px} {h_px}">'
    )
    guide_w = _f(_mm_to_px(GUIDE_MM))
    for i in d.guidelines:
        lines.append(
            f'<line class="guideline" x1="{fx(i)}" y1="{fy(0)}" '
            f'x2="{fx(i)}" y2="{fy(units_y)}" '
            f'stroke="grey" stroke-width="{guide_w}"/>'
        )
    edge_w = _f(_mm_to_px(LINE_MM))
    for g in d.gates:
        y0 = g.depth - 1
        ipoints = [(i, y0 + R_IN) for i in g.ins]
        opoints = [(o, y0 + 0.5) for o in g.outs]
        for ix, iy in ipoints:
            for ox, oy in opoints:
                lines.append(
                    f'<line class="edge" x1="{fx(ix)}" y1="{fy(iy)}" '
                    f'x2="{fx(ox)}" y2="{fy(oy)}" '
                    f'stroke="black" stroke-width="{edge_w}"/>'
                )
        for ix, iy in ipoints:
            lines.append(
                f'<circle class="in" cx="{fx(ix)}" cy="{fy(iy)}" '
                f'r="{_f(R_IN * sx)}" fill="white" stroke="black" '
                f'stroke-width="{edge_w}"/>'
            )
        for ox, oy in opoints:
            lines.append(
                f'<circle class="out" cx="{fx(ox)}" cy="{fy(oy)}" '
                f'r="{_f(R_OUT * sx)}" fill="white" stroke="black" '
                f'stroke-width="{edge_w}"/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_svg(d: Diagram, out: IO[str], viewport: tuple[int, int] = (600, 400)) -> None:
    out.write(svg_string(d, viewport))


def svg_equal(a: str, b: str, tol: float = 1e-3) -> bool:
    """Structural SVG comparison tolerant of float-formatting drift."""
    ea, eb = ET.fromstring(a), ET.fromstring(b)

    def walk(x, y) -> bool:
        if x.tag != y.tag or len(x) != len(y):
            return False
        if set(x.attrib) != set(y.attrib):
            return False
        for key, va in x.attrib.items():
            vb = y.attrib[key]
            try:
                if abs(float(va) - float(vb)) > tol:
                    return False
            except ValueError:
                if va != vb:
                    return False
        return all(walk(cx, cy) for cx, cy in zip(x, y))

    return walk(ea, eb)
