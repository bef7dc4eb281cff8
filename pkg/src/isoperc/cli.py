"""Command-line entry point.

One invocation runs one experiment or build step and prints a JSON manifest
to stdout: the resolved options, inline results, and a sha256 per written
artifact.  A JSON config file supplies defaults with a flat schema; command
line flags override config fields; the seed may also come from the
ISOPERC_SEED environment variable.  Exit codes: 0 success, 2 bad input,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, analysis, isoradial, percsim, rcm, render, startriangle, tiling
from .errors import IsopercError, ValidationError

SEED_ENV = "ISOPERC_SEED"

_DEFAULTS = {
    "kind": "square",
    "graph": "square",
    "size": 16,
    "colour_class": 0,
    "model": "percolation",
    "beta": 1.0,
    "q": 1.0,
    "boundary": "free",
    "direction": "horizontal",
    "samples": 1000,
    "sweeps": 400,
    "burn_in": 200,
    "thin": 2,
    "fit": "none",
    "threads": 0,
}


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v != ""]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from exc


def _parse_box(text):
    """'RxC' with integers selects an R-row, C-column vertex block on the
    square patch; with floats it is a physical width x height box."""
    parts = str(text).lower().split("x")
    if len(parts) != 2:
        raise ValidationError(f"box must look like 64x65, got {text!r}")
    a, b = parts
    if "." not in a and "." not in b:
        return ("block", int(a), int(b))
    return ("physical", float(a), float(b))


class Options:
    """Resolved option lookup: flag value, then config file, then default."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.flags = {k: v for k, v in vars(args).items() if v is not None}
        self.config = config

    def get(self, key, fallback=None):
        if key in self.flags:
            return self.flags[key]
        if key in self.config:
            return self.config[key]
        if key in _DEFAULTS:
            return _DEFAULTS[key]
        return fallback

    def require(self, key):
        value = self.get(key)
        if value is None:
            raise ValidationError(f"missing required option --{key.replace('_', '-')}")
        return value

    def echo(self) -> dict:
        merged = dict(self.config)
        merged.update(self.flags)
        merged.pop("command", None)
        merged.pop("subcommand", None)
        merged.pop("config", None)
        return {k: merged[k] for k in sorted(merged)}


def _resolve_seed(opts: Options, required: bool) -> int | None:
    seed = opts.get("seed")
    if seed is None and SEED_ENV in os.environ:
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ValidationError(f"{SEED_ENV} must be an integer") from exc
    if seed is None:
        if required:
            raise ValidationError(
                "a seed is required: pass --seed, set it in the config file, "
                f"or export {SEED_ENV}"
            )
        return None
    return int(seed)


class Artifacts:
    def __init__(self):
        self.written: dict[str, str] = {}

    def write(self, path, text: str):
        data = text.encode() if isinstance(text, str) else text
        with open(path, "wb") as fh:
            fh.write(data)
        self.written[str(path)] = hashlib.sha256(data).hexdigest()


# ------------------------------------------------------------ object builders


def _build_tiling(opts: Options):
    kind = opts.get("kind")
    size = opts.get("size")
    if kind == "penrose":
        offsets = opts.get("offsets")
        return tiling.penrose_tiling(float(size), _floats(offsets) if offsets else None)
    if kind == "multigrid":
        directions = _floats(opts.require("directions"))
        offsets = _floats(opts.require("offsets"))
        return tiling.multigrid_tiling(directions, offsets, float(size))
    theta = opts.get("theta")
    return tiling.periodic_tiling(
        kind, int(size), theta=float(theta) if theta is not None else None
    )


def _build_graph(opts: Options):
    path = opts.get("graph_file")
    if path:
        return isoradial.IsoradialGraph.load(path)
    kind = opts.get("graph")
    size = opts.get("size")
    if kind == "square":
        rows = opts.get("rows")
        cols = int(opts.get("cols") or size)
        box = opts.get("box")
        sized = any(
            key in opts.flags or key in opts.config for key in ("size", "cols", "rows")
        )
        if not sized and box:
            # grow the patch to hold the requested block plus working margin
            parsed = _parse_box(box)
            if parsed[0] == "block":
                rows = parsed[1] + 6
                cols = parsed[2] + 6
        return rcm.square_lattice_patch(cols, int(rows or cols))
    if kind in ("square-tiling", "rhombic", "tri-hex", "penrose", "multigrid"):
        t_opts = Options(argparse.Namespace(), dict(opts.echo(), kind=kind))
        t = _build_tiling(t_opts)
        return isoradial.build_isoradial(t, int(opts.get("colour_class")), validate=False)
    raise ValidationError(f"unknown graph kind {kind!r}")


def _build_weights(g, opts: Options):
    model = opts.get("model")
    beta = float(opts.get("beta"))
    if model in ("percolation", "perc"):
        return isoradial.percolation_weights(g, beta=beta)
    if model in ("rc", "random-cluster"):
        return isoradial.rc_weights(g, float(opts.get("q")), beta=beta)
    raise ValidationError(f"unknown model {model!r}")


def _crossing_spec(g, opts: Options):
    box = opts.get("box")
    direction = opts.get("direction")
    if box is None:
        return rcm.square_patch_crossing_spec(g, direction=direction)
    parsed = _parse_box(box)
    if parsed[0] == "block":
        _, rows, cols = parsed
        return rcm.square_block_spec(g, cols, rows, direction=direction)
    _, width, height = parsed
    lo = g.vertices.min(axis=0)
    hi = g.vertices.max(axis=0)
    return percsim.CrossingSpec(
        center=(float(lo[0] + hi[0]) / 2.0, float(lo[1] + hi[1]) / 2.0),
        width=width,
        height=height,
        angle=float(opts.get("box_angle") or 0.0),
        direction=direction,
    )


def _boundary(opts: Options):
    kind = opts.get("boundary")
    if kind not in ("free", "wired"):
        raise ValidationError("boundary must be free or wired")
    return rcm.BoundaryCondition(kind=kind)


def _curve_out(curve, opts: Options, artifacts: Artifacts) -> dict:
    out = opts.get("out")
    if out:
        artifacts.write(out, curve.to_csv())
    summary = {
        "name": curve.name,
        "abscissae": [float(v) for v in curve.abscissae],
        "estimates": [float(v) for v in curve.estimates],
        "stderrs": [float(v) for v in curve.stderrs],
    }
    fit_kind = opts.get("fit")
    if fit_kind and fit_kind != "none":
        window = opts.get("window")
        window = tuple(_floats(window)) if window else None
        if fit_kind == "power":
            summary["fit"] = analysis.fit_power_law(curve, window=window).to_json()
        elif fit_kind == "exponential":
            summary["fit"] = analysis.fit_exponential(curve, window=window).to_json()
        else:
            raise ValidationError("fit must be power, exponential or none")
    return summary


# ---------------------------------------------------------------- handlers


def _cmd_tile(opts, artifacts):
    t = _build_tiling(opts)
    report = tiling.validate_tiling(t)
    out = opts.get("out")
    if out:
        t.save(out)
        artifacts.written[str(out)] = hashlib.sha256(open(out, "rb").read()).hexdigest()
    svg_path = opts.get("render")
    if svg_path:
        artifacts.write(
            svg_path, render.render_tiling(t, tracks=bool(opts.get("tracks")))
        )
    angles = sorted(set(np.round(t.angles(), 9).tolist()))
    return {
        "n_rhombi": t.n_rhombi,
        "n_vertices": t.n_vertices,
        "distinct_angles": angles,
        "validation": report.to_json(),
    }


def _cmd_graph(opts, artifacts):
    g = _build_graph(opts)
    out = opts.get("out")
    if out:
        g.save(out)
        artifacts.written[str(out)] = hashlib.sha256(open(out, "rb").read()).hexdigest()
    svg_path = opts.get("render")
    if svg_path:
        artifacts.write(svg_path, render.render_graph(g))
    return {
        "n_vertices": g.n_vertices,
        "n_edges": g.n_edges,
        "n_boundary": int(len(g.boundary_vertices)),
        "graph_hash": g.content_hash(),
    }


def _cmd_weights(opts, artifacts):
    g = _build_graph(opts)
    w = _build_weights(g, opts)
    out = opts.get("out")
    if out:
        lines = ["edge,theta,p" + (",y" if w.y is not None else "")]
        for e in range(g.n_edges):
            row = f"{e},{g.edge_angles[e]:.12g},{w.p[e]:.12g}"
            if w.y is not None:
                row += f",{w.y[e]:.12g}"
            lines.append(row)
        artifacts.write(out, "\n".join(lines) + "\n")
    return {
        "graph_hash": g.content_hash(),
        "model": w.model,
        "beta": w.beta,
        "q": w.q,
        "p_range": [float(w.p.min()), float(w.p.max())],
    }


def _cmd_percolate(opts, artifacts):
    sub = opts.require("subcommand")
    seed = _resolve_seed(opts, required=True)
    g = _build_graph(opts)
    samples = int(opts.get("samples"))
    if sub == "crossing":
        w = _build_weights(g, opts)
        spec = _crossing_spec(g, opts)
        est = percsim.crossing_probability(g, w, spec, samples, seed)
        return {
            "graph_hash": g.content_hash(),
            "estimate": est.value,
            "stderr": est.stderr,
            "n_samples": est.n_samples,
        }
    if sub == "scan":
        betas = _floats(opts.require("betas"))
        table = percsim.near_critical_scan(g, betas, samples, seed)
        out = opts.get("out")
        if out:
            artifacts.write(out, table.to_csv())
        return {
            "graph_hash": g.content_hash(),
            "betas": betas,
            "theta_hat": [float(v) for v in table.theta_hat],
            "largest_fraction": [float(v) for v in table.largest_fraction],
        }
    w = _build_weights(g, opts)
    if sub == "one-arm":
        curve = percsim.one_arm_curve(g, w, _floats(opts.require("radii")), samples, seed)
    elif sub == "volume":
        curve = percsim.volume_tail_curve(g, w, _floats(opts.require("sizes")), samples, seed)
    elif sub == "two-point":
        curve = percsim.two_point_curve(
            g, w, _floats(opts.require("distances")), samples, seed
        )
    else:
        raise ValidationError(f"unknown percolate subcommand {sub!r}")
    summary = _curve_out(curve, opts, artifacts)
    summary["graph_hash"] = g.content_hash()
    return summary


def _cmd_spacetime(opts, artifacts):
    seed = _resolve_seed(opts, required=True)
    alpha = float(opts.require("alpha"))
    n = float(opts.require("n"))
    est = percsim.spacetime_crossing(alpha, n, int(opts.get("samples")), seed)
    return {
        "alpha": alpha,
        "n": n,
        "estimate": est.value,
        "stderr": est.stderr,
        "n_samples": est.n_samples,
    }


def _rc_params(g, opts: Options):
    q = float(opts.get("q"))
    p = opts.get("p")
    if p is not None:
        values = _floats(p)
        if len(values) == 1:
            return rcm.RCParams.homogeneous(g.n_edges, values[0], q)
        return rcm.RCParams(q=q, p=np.asarray(values))
    return rcm.RCParams.canonical(g, q, beta=float(opts.get("beta")))


def _cmd_rc(opts, artifacts):
    sub = opts.require("subcommand")
    g = _build_graph(opts)
    b = _boundary(opts)
    if sub == "exact":
        params = _rc_params(g, opts)
        dist = rcm.exact_rc_distribution(g, params, b)
        result = {
            "graph_hash": g.content_hash(),
            "q": params.q,
            "boundary": b.kind,
            "n_states": int(len(dist.probabilities)),
            "edge_marginals": [float(v) for v in dist.edge_marginals()],
        }
        if len(dist.probabilities) <= 4096:
            result["probabilities"] = [float(v) for v in dist.probabilities]
        return result
    seed = _resolve_seed(opts, required=True)
    if sub == "sample":
        params = _rc_params(g, opts)
        config = rcm.rc_heat_bath_sample(g, params, b, int(opts.get("sweeps")), seed)
        svg_path = opts.get("render")
        if svg_path:
            artifacts.write(
                svg_path, render.render_configuration(g, config, clusters=True)
            )
        return {
            "graph_hash": g.content_hash(),
            "boundary": b.kind,
            "open_edges": int(np.sum(config.open)),
            "n_edges": g.n_edges,
        }
    if sub == "scan":
        p_grid = _floats(opts.require("p_grid"))
        curve, diag = rcm.rc_crossing_scan(
            g,
            float(opts.get("q")),
            p_grid,
            b,
            int(opts.get("samples")),
            seed,
            burn_in=int(opts.get("burn_in")),
            thin=int(opts.get("thin")),
            spec=_crossing_spec(g, opts) if opts.get("box") else None,
        )
        out = opts.get("out")
        if out:
            artifacts.write(out, curve.to_csv())
        diag = dict(diag)
        diag["two_start_gap"] = [float(v) for v in diag["two_start_gap"]]
        return {
            "graph_hash": g.content_hash(),
            "p_grid": p_grid,
            "estimates": [float(v) for v in curve.estimates],
            "stderrs": [float(v) for v in curve.stderrs],
            "diagnostics": diag,
        }
    if sub == "decay":
        report = rcm.rc_two_point_decay(
            g,
            float(opts.get("q")),
            float(opts.get("beta")),
            _floats(opts.require("distances")),
            int(opts.get("samples")),
            seed,
            burn_in=int(opts.get("burn_in")),
            thin=int(opts.get("thin")),
        )
        out = opts.get("out")
        if out:
            artifacts.write(out, report.curve.to_csv())
        return dict(report.to_json(), graph_hash=g.content_hash())
    raise ValidationError(f"unknown rc subcommand {sub!r}")


def _triangle_params(opts: Options):
    model = opts.get("model")
    if model in ("rc", "random-cluster"):
        y = _floats(opts.require("y"))
        if len(y) != 3:
            raise ValidationError("--y takes three comma-separated activities")
        return startriangle.TriangleParams.random_cluster(*y, float(opts.get("q")))
    p = _floats(opts.require("p"))
    if len(p) != 3:
        raise ValidationError("--p takes three comma-separated probabilities")
    return startriangle.TriangleParams.percolation(*p)


def _cmd_star_triangle(opts, artifacts):
    sub = opts.require("subcommand")
    if sub == "verify":
        params = _triangle_params(opts)
        report = startriangle.verify_equivalence(params)
        return report.to_json()
    if sub == "couple":
        seed = _resolve_seed(opts, required=True)
        params = _triangle_params(opts)
        state = [int(v) for v in str(opts.require("state")).split(",")]
        if len(state) != 3 or any(v not in (0, 1) for v in state):
            raise ValidationError("--state takes three comma-separated bits")
        direction = opts.get("direction")
        if direction not in ("triangle-to-star", "star-to-triangle"):
            direction = "triangle-to-star"
        out_state = startriangle.couple_triangle_star(state, direction, params, seed)
        return {"direction": direction, "in": state, "out": [int(v) for v in out_state]}
    if sub == "flip":
        seed = _resolve_seed(opts, required=True)
        # the generic default of "square" tiles with four rhombi per vertex,
        # which never flips; default to a lattice that does
        kind = opts.flags.get("kind") or opts.config.get("kind") or "tri-hex"
        t_opts = Options(argparse.Namespace(), dict(opts.echo(), kind=kind))
        t = _build_tiling(t_opts)
        g = isoradial.build_isoradial(t, int(opts.get("colour_class")), validate=False)
        w = isoradial.percolation_weights(g)
        rng = np.random.default_rng(seed)
        centre = opts.get("center_vertex")
        if centre is None:
            flippable = t.flippable_vertices()
            if len(flippable) == 0:
                raise ValidationError("tiling has no flippable vertex")
            centre = int(flippable[0])
        config = percsim.sample_configuration(w, seed, graph=g)
        g2, w2, config2 = startriangle.apply_switch(g, w, config, int(centre), rng)
        svg_path = opts.get("render")
        if svg_path:
            artifacts.write(
                svg_path, render.render_configuration(g2, config2, clusters=True)
            )
        return {
            "center_vertex": int(centre),
            "hash_before": g.content_hash(),
            "hash_after": g2.content_hash(),
            "open_before": int(np.sum(config.open)),
            "open_after": int(np.sum(config2.open)),
        }
    raise ValidationError(f"unknown star-triangle subcommand {sub!r}")


def _cmd_fit(opts, artifacts):
    path = opts.require("input")
    with open(path) as fh:
        curve = percsim.ObservableCurve.from_csv(
            fh.read(), name=os.path.basename(path), is_probability=False
        )
    kind = opts.get("fit")
    if kind in (None, "none"):
        kind = "power"
    window = opts.get("window")
    window = tuple(_floats(window)) if window else None
    if kind == "power":
        fit = analysis.fit_power_law(curve, window=window)
    elif kind == "exponential":
        fit = analysis.fit_exponential(curve, window=window)
    else:
        raise ValidationError("fit must be power or exponential")
    return fit.to_json()


def _cmd_render(opts, artifacts):
    path = opts.require("input")
    out = opts.require("out")
    with open(path) as fh:
        data = json.load(fh)
    kind = data.get("format")
    if kind == "isoperc-tiling":
        svg = render.render_tiling(
            tiling.RhombicTiling.from_json(data), tracks=bool(opts.get("tracks"))
        )
    elif kind == "isoperc-graph":
        svg = render.render_graph(isoradial.IsoradialGraph.from_json(data))
    else:
        raise ValidationError("input is neither a saved tiling nor a saved graph")
    artifacts.write(out, svg)
    return {"input": path, "out": out}


_HANDLERS = {
    "tile": _cmd_tile,
    "graph": _cmd_graph,
    "weights": _cmd_weights,
    "percolate": _cmd_percolate,
    "spacetime": _cmd_spacetime,
    "rc": _cmd_rc,
    "star-triangle": _cmd_star_triangle,
    "fit": _cmd_fit,
    "render": _cmd_render,
}

_SUBCOMMANDS = {
    "percolate": ("crossing", "one-arm", "volume", "two-point", "scan"),
    "rc": ("exact", "sample", "scan", "decay"),
    "star-triangle": ("verify", "couple", "flip"),
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isoperc",
        description="Percolation and random-cluster experiments on isoradial graphs",
    )
    parser.add_argument("--version", action="version", version=f"isoperc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name)
        if name in _SUBCOMMANDS:
            p.add_argument("subcommand", choices=_SUBCOMMANDS[name])
        p.add_argument("--config", help="JSON file with flat default options")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out")
        p.add_argument("--render", dest="render")
        p.add_argument("--json", dest="json_out")
        p.add_argument("--input")
        p.add_argument("--kind")
        p.add_argument("--graph")
        p.add_argument("--graph-file", dest="graph_file")
        p.add_argument("--size", type=float)
        p.add_argument("--rows", type=int)
        p.add_argument("--cols", type=int)
        p.add_argument("--theta", type=float)
        p.add_argument("--directions")
        p.add_argument("--offsets")
        p.add_argument("--colour-class", dest="colour_class", type=int)
        p.add_argument("--model")
        p.add_argument("--beta", type=float)
        p.add_argument("--q", type=float)
        p.add_argument("--p")
        p.add_argument("--y")
        p.add_argument("--p-grid", dest="p_grid")
        p.add_argument("--betas")
        p.add_argument("--boundary")
        p.add_argument("--box")
        p.add_argument("--box-angle", dest="box_angle", type=float)
        p.add_argument("--direction")
        p.add_argument("--samples", type=int)
        p.add_argument("--sweeps", type=int)
        p.add_argument("--burn-in", dest="burn_in", type=int)
        p.add_argument("--thin", type=int)
        p.add_argument("--radii")
        p.add_argument("--sizes")
        p.add_argument("--distances")
        p.add_argument("--alpha", type=float)
        p.add_argument("--n", type=float)
        p.add_argument("--fit")
        p.add_argument("--window")
        p.add_argument("--state")
        p.add_argument("--center-vertex", dest="center_vertex", type=int)
        p.add_argument("--tracks", action="store_const", const=True)
    return parser


def _run(argv) -> int:
    args = _parser().parse_args(argv)
    config = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValidationError("config file must hold a flat JSON object")
    opts = Options(args, config)
    artifacts = Artifacts()
    results = _HANDLERS[args.command](opts, artifacts)
    manifest = {
        "command": args.command
        + (f" {args.subcommand}" if getattr(args, "subcommand", None) else ""),
        "version": __version__,
        "options": opts.echo(),
        "results": results,
        "artifacts": artifacts.written,
    }
    text = json.dumps(manifest, indent=2, sort_keys=True, default=str)
    json_out = opts.get("json_out")
    if json_out:
        with open(json_out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def main(argv=None) -> int:
    try:
        return _run(argv)
    except IsopercError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
