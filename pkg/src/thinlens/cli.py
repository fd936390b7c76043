"""Command-line entry point: ``thinlens <command> --scenario file.json --out dir``."""
import argparse
import json
import math
import os
import sys

import numpy as np

from . import output
from .certification import certify, critical_curves, survey
from .errors import DegenerateConfiguration, LensError, ScenarioError
from .harmonic_solver import search_radius, solve_all
from .lens_models import ChangRefsdalLens, PointMassLens, RadialLens, UniformEllipseLens
from .quadrature_domains import mass_conservation_error, nodes_and_weights
from .rings import find_ring_uniform_ellipse, point_mass_ring, ring_parameters, verify_ring
from .scenario import build_lens, conformal_map, source_of, validate

COMMANDS = ("solve", "certify", "survey", "ring", "critical", "quadrature")
EXIT_OK, EXIT_ERROR, EXIT_SCHEMA, EXIT_DEGENERATE, EXIT_CERTIFICATE = 0, 1, 2, 3, 4


class CertificationFailed(LensError):
    def __init__(self, message, certificate):
        super().__init__(message)
        self.certificate = certificate


def _window(lens, scenario, key):
    block = scenario.get(key, {})
    if "window" in block:
        return tuple(block["window"])
    r = 1.2 * max(min(search_radius(lens, 0j), 4.0 * max(lens.support_radius, 1.0)), 1.0)
    return (-r, r, -r, r)


def _ring_payload(lens, exc):
    """Replace a bare degeneracy payload with a ring solution when the model has one."""
    payload = dict(exc.payload)
    try:
        if isinstance(lens, (PointMassLens, ChangRefsdalLens)):
            if isinstance(lens, ChangRefsdalLens):
                sigma, pos = lens.mass, 0j
            elif lens.n == 1:
                sigma, pos = lens.masses[0]
            else:
                return payload
            if pos == 0 and lens.shear == 0:
                payload["ring"] = point_mass_ring(sigma).to_dict()
        elif isinstance(lens, UniformEllipseLens):
            _, gamma = ring_parameters(lens.geometry, lens.density)
            if abs(gamma - lens.shear) < 1e-9:
                payload["ring"] = find_ring_uniform_ellipse(lens.geometry, lens.density).to_dict()
    except LensError:
        pass
    return payload


def _scene(lens, images=None, curves=(), ring=None, heatmap=None):
    scene = output.Scene()
    if heatmap is not None:
        output.draw_heatmap(scene, heatmap)
    extent = max(lens.support_radius, 1.0)
    scale = extent / 200.0
    output.draw_lens(scene, lens, scale)
    for c in curves:
        scene.polyline(c.vertices, "#ff7f0e", closed=c.closed, width=scale)
        scene.polyline(c.caustic, "#9467bd", closed=c.closed, width=scale)
    if ring is not None:
        scene.polyline(ring, "#e377c2", width=2 * scale)
    if images is not None:
        output.draw_images(scene, images, scale)
    return scene.render()


def _solve(lens, scenario, certify_images):
    s = scenario["solver"]
    w = source_of(scenario)
    images = solve_all(lens, w, grid=s["grid"], seed=s["seed"], tol=s["tol"])
    cert = certify(lens, w, images, grid=s["grid"], seed=s["seed"])
    images = cert.images.with_certificate(cert)
    doc = {"images": images.to_dict()}
    if certify_images and not cert.passed:
        raise CertificationFailed("count certificate failed: " + ", ".join(cert.failures), cert)
    return doc, images


def execute(command, scenario, threads=1, svg=True, lens=None):
    """Run ``command`` and return ``(document, artifacts)``; raises on failure."""
    lens = lens if lens is not None else build_lens(scenario["model"])
    files = {}
    outputs = scenario["outputs"]
    want_svg = svg and "svg" in outputs
    doc = {"command": command, "scenario": scenario, "lens": lens.summary()}
    if command in ("solve", "certify"):
        res, images = _solve(lens, scenario, command == "certify")
        doc.update(res)
        if want_svg:
            files["scene.svg"] = _scene(lens, images=images)
    elif command == "survey":
        block = scenario.get("survey", {})
        window = _window(lens, scenario, "survey")
        sm = survey(lens, window, resolution=block.get("resolution", 32),
                    grid=block.get("grid", 32), seed=scenario["solver"]["seed"],
                    threads=threads, certify_cells=block.get("certify", False))
        doc["survey"] = sm.to_dict()
        files["counts.csv"] = sm.to_csv()
        if want_svg:
            files["scene.svg"] = _scene(lens, heatmap=sm)
    elif command == "critical":
        block = scenario.get("critical", {})
        curves = critical_curves(lens, _window(lens, scenario, "critical"),
                                 resolution=block.get("resolution", 256))
        doc["critical_curves"] = [c.to_dict() for c in curves]
        if want_svg:
            files["scene.svg"] = _scene(lens, curves=curves)
    elif command == "ring":
        ring = _ring_for(lens)
        diag = verify_ring(_ring_lens(lens, ring), ring.sample(256))
        doc["ring"] = {**ring.to_dict(), "diagnostics": diag.to_dict()}
        if want_svg:
            files["scene.svg"] = _scene(lens, ring=ring.sample(256))
    elif command == "quadrature":
        if scenario["model"]["type"] != "quadrature_domain":
            raise ScenarioError("model/type: quadrature needs a quadrature_domain model")
        cmap = conformal_map(scenario["model"])
        qd = nodes_and_weights(cmap, scenario["model"].get("density", 1.0))
        doc["quadrature"] = {**qd.to_dict(), "map": cmap.to_dict(),
                             "mass_conservation_error": mass_conservation_error(qd)}
        images = None
        if "source" in scenario:
            res, images = _solve(lens, scenario, False)
            doc.update(res)
        if want_svg:
            files["scene.svg"] = _scene(lens, images=images)
    else:
        raise ScenarioError(f"command: unknown command {command!r}")
    return doc, files


def _ring_for(lens):
    if isinstance(lens, UniformEllipseLens):
        return find_ring_uniform_ellipse(lens.geometry, lens.density)
    if isinstance(lens, ChangRefsdalLens):
        return point_mass_ring(lens.mass)
    if isinstance(lens, PointMassLens) and lens.n == 1 and lens.masses[0][1] == 0:
        return point_mass_ring(lens.masses[0][0])
    if isinstance(lens, RadialLens) and not lens.isothermal:
        r = math.sqrt(lens.total_mass)
        if r > lens.radius:
            return point_mass_ring(lens.total_mass)
    raise ScenarioError("model/type: ring search supports uniform ellipses, single masses "
                        "at the origin and radial lenses")


def _ring_lens(lens, ring):
    """The lens at the shear that supports ``ring``."""
    if isinstance(lens, UniformEllipseLens):
        return UniformEllipseLens(lens.geometry, lens.density, ring.shear_used)
    if isinstance(lens, RadialLens):
        return RadialLens(lens.radius, lens.profile, 0.0)
    return PointMassLens(((ring.semi_axes[0] ** 2, 0j),))


def _error_doc(exc, code):
    doc = {"error": type(exc).__name__, "message": str(exc), "exit": code}
    if isinstance(exc, DegenerateConfiguration):
        doc["kind"] = exc.kind
        doc["payload"] = exc.payload
    if isinstance(exc, CertificationFailed):
        doc["certificate"] = exc.certificate.to_dict()
    return doc


def run(command, scenario_path, out_dir, seed=None, threads=1, svg=True, stderr=None):
    """Execute one command; writes artifacts into ``out_dir`` and returns the exit status."""
    stderr = stderr if stderr is not None else sys.stderr
    lens = None
    try:
        with open(scenario_path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(ScenarioError(f"<file>: {exc}"), EXIT_SCHEMA, out_dir, stderr)
    try:
        scenario = validate(raw)
        if seed is not None:
            scenario["solver"]["seed"] = int(seed)
        lens = build_lens(scenario["model"])
        doc, files = execute(command, scenario, threads=threads, svg=svg, lens=lens)
    except ScenarioError as exc:
        return _fail(exc, EXIT_SCHEMA, out_dir, stderr)
    except DegenerateConfiguration as exc:
        exc.payload = _ring_payload(lens, exc) if lens is not None else exc.payload
        return _fail(exc, EXIT_DEGENERATE, out_dir, stderr)
    except CertificationFailed as exc:
        return _fail(exc, EXIT_CERTIFICATE, out_dir, stderr)
    except LensError as exc:
        return _fail(exc, EXIT_ERROR, out_dir, stderr)
    files["results.json"] = output.dumps(doc)
    _write(out_dir, files)
    return EXIT_OK


def _fail(exc, code, out_dir, stderr):
    doc = _error_doc(exc, code)
    text = output.dumps(doc)
    stderr.write(text)
    _write(out_dir, {"results.json": text})
    return code


def _write(out_dir, files):
    os.makedirs(out_dir, exist_ok=True)
    for name in sorted(files):
        with open(os.path.join(out_dir, name), "w", newline="\n") as fh:
            fh.write(files[name])


def build_parser():
    p = argparse.ArgumentParser(prog="thinlens", description="Image counting for thin gravitational lenses.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", required=True, help="JSON scenario file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override solver.seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for surveys")
    p.add_argument("--svg", choices=("on", "off"), default="on")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print(output.dumps({"error": "ScenarioError", "message": "--seed must fit in u64",
                            "exit": EXIT_SCHEMA}), file=sys.stderr, end="")
        return EXIT_SCHEMA
    np.seterr(all="ignore")
    return run(args.command, args.scenario, args.out, seed=args.seed,
               threads=max(args.threads, 1), svg=args.svg == "on")


if __name__ == "__main__":
    sys.exit(main())
