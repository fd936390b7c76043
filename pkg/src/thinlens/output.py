"""Deterministic JSON, CSV and SVG writers and the results loader."""
import json
import math

import numpy as np

from .lens_models import (EllipseGeometry, IsothermalEllipseLens, MultipoleLens, PointMassLens,
                          ChangRefsdalLens, RadialLens, lens_map)


def _format_float(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _emit(obj, out, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        if all(isinstance(v, (int, float, np.number, bool, type(None))) for v in obj):
            parts = []
            for v in obj:
                sub = []
                _emit(v, sub, indent, level + 1)
                parts.append("".join(sub))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, (complex, np.complexfloating)):
        _emit([obj.real, obj.imag], out, indent, level)
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out, indent, level)
    else:
        out.append(json.dumps(str(obj)))


def dumps(obj, indent=1):
    """JSON text with sorted keys and 17-significant-digit floats."""
    out = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def loads(text):
    return json.loads(text)


def load_results(path, lens_builder=None):
    """Read a results file and re-check every stored image against the lens equation.

    Raises ``ValueError`` if a recomputed residual exceeds the stored one.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if "images" in doc and lens_builder is not None:
        lens = lens_builder(doc["scenario"]["model"])
        w = complex(*doc["images"]["source"])
        for im in doc["images"]["images"]:
            z = complex(*im["z"])
            res = abs(lens_map(lens, z) - w)
            if res > im["residual"] * (1.0 + 1e-12) + 1e-300:
                raise ValueError(f"image at {z} has residual {res:.3e} above stored "
                                 f"{im['residual']:.3e}")
    return doc


# -- SVG --------------------------------------------------------------------------

def _fmt(v):
    return "%.6f" % v


def _path(points, closed=True):
    pts = [p for p in points if np.isfinite(p)]
    if not pts:
        return ""
    d = "M " + " L ".join(f"{_fmt(p.real)} {_fmt(-p.imag)}" for p in pts)
    return d + (" Z" if closed else "")


class Scene:
    """Flat SVG scene in lens-plane coordinates (y up)."""

    def __init__(self):
        self.items = []
        self.points = []

    def _extend(self, pts):
        pts = np.asarray(pts, complex).ravel()
        self.points.extend(p for p in pts if np.isfinite(p))

    def polyline(self, pts, stroke, closed=True, width=0.01, dash=None):
        self._extend(pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<path d="{_path(pts, closed)}" fill="none" stroke="{stroke}" '
                          f'stroke-width="{_fmt(width)}"{extra}/>')

    def dot(self, z, r, fill):
        self._extend([z])
        self.items.append(f'<circle cx="{_fmt(z.real)}" cy="{_fmt(-z.imag)}" r="{_fmt(r)}" '
                          f'fill="{fill}"/>')

    def cross(self, z, s, stroke):
        self._extend([z - s, z + s])
        a, b = z - s * (1 + 1j), z + s * (1 + 1j)
        c, d = z - s * (1 - 1j), z + s * (1 - 1j)
        self.items.append(f'<path d="M {_fmt(a.real)} {_fmt(-a.imag)} L {_fmt(b.real)} {_fmt(-b.imag)} '
                          f'M {_fmt(c.real)} {_fmt(-c.imag)} L {_fmt(d.real)} {_fmt(-d.imag)}" '
                          f'stroke="{stroke}" stroke-width="{_fmt(s / 3)}"/>')

    def rect(self, x0, y0, w, h, fill):
        self._extend([complex(x0, y0), complex(x0 + w, y0 + h)])
        self.items.append(f'<rect x="{_fmt(x0)}" y="{_fmt(-(y0 + h))}" width="{_fmt(w)}" '
                          f'height="{_fmt(h)}" fill="{fill}"/>')

    def render(self):
        if self.points:
            p = np.array(self.points)
            xmin, xmax = p.real.min(), p.real.max()
            ymin, ymax = (-p.imag).min(), (-p.imag).max()
        else:
            xmin = ymin = -1.0
            xmax = ymax = 1.0
        span = max(xmax - xmin, ymax - ymin, 1e-6)
        m = 0.05 * span
        box = f"{_fmt(xmin - m)} {_fmt(ymin - m)} {_fmt(xmax - xmin + 2 * m)} {_fmt(ymax - ymin + 2 * m)}"
        body = "\n".join(self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{box}">\n'
                f'<rect x="{_fmt(xmin - m)}" y="{_fmt(ymin - m)}" width="{_fmt(xmax - xmin + 2 * m)}" '
                f'height="{_fmt(ymax - ymin + 2 * m)}" fill="white"/>\n{body}\n</svg>\n')


def draw_lens(scene, lens, scale):
    geom = getattr(lens, "geometry", None)
    if isinstance(geom, EllipseGeometry):
        scene.polyline(geom.boundary(256), "#555555", width=scale)
        if isinstance(lens, IsothermalEllipseLens):
            scene.polyline([-geom.c, geom.c], "#999999", closed=False, width=scale, dash=_fmt(4 * scale))
    elif isinstance(lens, RadialLens):
        t = np.exp(2j * np.pi * np.arange(256) / 256)
        scene.polyline(lens.radius * t, "#555555", width=scale)
    elif isinstance(lens, MultipoleLens) and lens.support is not None:
        scene.polyline(lens.support.boundary(512), "#555555", width=scale)
    if isinstance(lens, (PointMassLens, ChangRefsdalLens, MultipoleLens)):
        for p in lens.poles:
            scene.cross(p, 2 * scale, "#000000")


def draw_images(scene, images, scale):
    for im in images.images:
        mag = im.jacobian.magnification
        r = scale * (2.0 + min(math.log1p(mag if math.isfinite(mag) else 1e6), 8.0))
        scene.dot(im.z, r, "#d62728" if im.jacobian.det > 0 else "#1f77b4")
    s = images.source
    scene.cross(s, 2 * scale, "#2ca02c")


def draw_heatmap(scene, survey):
    xmin, xmax, ymin, ymax = survey.window
    n = survey.resolution
    dx = (xmax - xmin) / max(n - 1, 1)
    dy = (ymax - ymin) / max(n - 1, 1)
    top = max(int(survey.counts.max()), 1)
    for i in range(n):
        for j in range(n):
            c = int(survey.counts[i, j])
            if survey.mask[i, j] or c < 0:
                fill = "#bbbbbb"
            else:
                g = int(255 - 200 * c / top)
                fill = f"#{g:02x}{g:02x}ff"
            scene.rect(xmin + (j - 0.5) * dx, ymin + (i - 0.5) * dy, dx, dy, fill)
