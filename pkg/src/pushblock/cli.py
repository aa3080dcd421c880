"""Command line entry points: simulators, verification harnesses, plotting.

Every artifact file starts with a schema header carrying the seed and the
full configuration, so a run can be reproduced from its outputs alone.  Exit
codes are the only pass/fail channel: 0 on success, 1 on a failed
verification, 2 on bad flags.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import growth, lpp, particles, pngref, verify
from .core import HeightProfile, ModelParams, Seed, make_noise
from .staircase import (export_state_csv, sample_stationary, simulate_ct,
                        state_from_values)

SCHEMA_TRAJ = "pushblock.trajectory.v1"


def _out_path(raw: str) -> Path:
    base = os.environ.get("PUSHBLOCK_OUT_DIR", ".")
    p = Path(raw)
    return p if p.is_absolute() else Path(base) / p


def _meta(args, params: ModelParams | None = None) -> str:
    bits = [f"seed={args.seed}"]
    if params is not None:
        bits.append(f"params={params.as_dict()}")
    return " ".join(bits)


def trajectory_to_json(traj: growth.GrowthTrajectory, kind: str) -> str:
    key_a, key_b = ("inc", "dec") if kind == "growth" else ("y", "z")
    records = [{"t": t, key_a: list(p.inc), key_b: list(p.dec)}
               for t, p in enumerate(traj.profiles)]
    return json.dumps({
        "schema": SCHEMA_TRAJ,
        "kind": kind,
        "params": traj.params.as_dict(),
        "seed": traj.seed.as_dict() if traj.seed else None,
        "steps": records,
    })


def trajectory_from_json(text: str) -> tuple[growth.GrowthTrajectory, str]:
    payload = json.loads(text)
    if payload.get("schema") != SCHEMA_TRAJ:
        raise ValueError("not a trajectory file")
    kind = payload["kind"]
    key_a, key_b = ("inc", "dec") if kind == "growth" else ("y", "z")
    params = ModelParams(**payload["params"])
    seed = Seed(**payload["seed"]) if payload.get("seed") else None
    profiles = [HeightProfile(inc=tuple(rec[key_a]), dec=tuple(rec[key_b]))
                for rec in payload["steps"]]
    return growth.GrowthTrajectory(params=params, seed=seed,
                                   profiles=tuple(profiles)), kind


def trajectory_to_csv(traj: growth.GrowthTrajectory, meta: str) -> str:
    lines = [f"# {SCHEMA_TRAJ} {meta}".rstrip(), "t,kind,position"]
    for t, p in enumerate(traj.profiles):
        for x in p.inc:
            lines.append(f"{t},inc,{x!r}")
        for x in p.dec:
            lines.append(f"{t},dec,{x!r}")
    return "\n".join(lines) + "\n"


def paths_to_csv(paths, meta: str) -> str:
    lines = [f"# pushblock.paths.v1 {meta}".rstrip(),
             "t,particle_id,species,position"]
    for ev in paths:
        lines.append(f"{ev.t},{ev.particle_id},{ev.species},{ev.position!r}")
    return "\n".join(lines) + "\n"


# --- tiny SVG writer --------------------------------------------------------

def _svg_document(body: list[str], width: int, height: int) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def profile_svg(profile: HeightProfile, width: int = 640, height: int = 240) -> str:
    if profile.is_empty:
        xs = [-1.0, 1.0]
    else:
        lo, hi = profile.support_bounds()
        pad = 0.1 * (hi - lo + 1.0)
        xs = [lo - pad, hi + pad]
    hmax = max(profile.max_height(), 1)

    def sx(x):
        return (x - xs[0]) / (xs[1] - xs[0]) * (width - 20) + 10

    def sy(h):
        return height - 20 - h / hmax * (height - 40)

    pts = [(xs[0], 0)]
    events = sorted([(x, 1) for x in profile.inc] + [(x, -1) for x in profile.dec])
    h = 0
    for x, delta in events:
        pts.append((x, h))
        h += delta
        pts.append((x, h))
    pts.append((xs[1], 0))
    path = " ".join(f"{'M' if i == 0 else 'L'}{sx(x):.2f},{sy(v):.2f}"
                    for i, (x, v) in enumerate(pts))
    body = [f'<path d="{path}" fill="none" stroke="black" stroke-width="1.5"/>',
            f'<line x1="10" y1="{sy(0):.2f}" x2="{width - 10}" y2="{sy(0):.2f}" '
            'stroke="#888" stroke-dasharray="4 3" stroke-width="0.7"/>']
    return _svg_document(body, width, height)


def paths_svg(rows: list[tuple[int, int, str, float]],
              width: int = 640, height: int = 480) -> str:
    """Space-time diagram: one polyline per particle, dots at first sightings."""
    if not rows:
        return _svg_document([], width, height)
    tmax = max(r[0] for r in rows)
    xs = [r[3] for r in rows]
    lo, hi = min(xs), max(xs)
    pad = 0.05 * (hi - lo + 1.0)
    lo, hi = lo - pad, hi + pad

    def sx(x):
        return (x - lo) / (hi - lo) * (width - 20) + 10

    def sy(t):
        return height - 10 - t / max(tmax, 1) * (height - 20)

    by_particle: dict[tuple[int, str], list[tuple[int, float]]] = {}
    for t, pid, species, pos in rows:
        by_particle.setdefault((pid, species), []).append((t, pos))
    body = []
    for (pid, species), pts in sorted(by_particle.items()):
        pts.sort()
        colour = "#b22" if species == "Z" else "#228"
        path = " ".join(f"{'M' if i == 0 else 'L'}{sx(x):.2f},{sy(t):.2f}"
                        for i, (t, x) in enumerate(pts))
        body.append(f'<path d="{path}" fill="none" stroke="{colour}" '
                    'stroke-width="1.2"/>')
        t0, x0 = pts[0]
        body.append(f'<circle cx="{sx(x0):.2f}" cy="{sy(t0):.2f}" r="2.2" '
                    f'fill="{colour}"/>')
    return _svg_document(body, width, height)


# --- subcommand handlers -----------------------------------------------------

def _cmd_sample_lpp(args) -> int:
    params = ModelParams(v=args.v, n=args.n, L=1.0)
    out = _out_path(args.out)
    chunks = []
    for r in range(args.samples):
        seed = Seed(args.seed, r)
        env = lpp.sample_env(params, seed)
        table = lpp.lpp_table(env)
        chunks.append(lpp.export_csv(env, table,
                                     header_meta=f"{_meta(args, params)} replica={r}"))
    out.write_text("".join(chunks))
    print(f"wrote {out}")
    return 0


def _cmd_simulate_growth(args) -> int:
    params = ModelParams(v=args.v, n=args.n, L=args.L, steps=args.steps)
    traj = growth.simulate(params, Seed(args.seed))
    out = _out_path(args.out)
    if args.format == "json":
        out.write_text(trajectory_to_json(traj, "growth"))
    else:
        out.write_text(trajectory_to_csv(traj, _meta(args, params)))
    print(f"wrote {out}")
    return 0


def _cmd_simulate_particles(args) -> int:
    params = ModelParams(v=args.v, n=args.n, L=args.L, steps=args.steps)
    traj, paths = particles.simulate(params, Seed(args.seed), record_paths=True)
    out = _out_path(args.out)
    if args.format == "json":
        out.write_text(trajectory_to_json(traj, "particles"))
    else:
        out.write_text(trajectory_to_csv(traj, _meta(args, params)))
    if args.paths_out:
        _out_path(args.paths_out).write_text(
            paths_to_csv(paths, _meta(args, params)))
    print(f"wrote {out}")
    return 0


def _cmd_simulate_array(args) -> int:
    params = ModelParams(v=args.v, n=args.n, L=1.0)
    start = sample_stationary(params, Seed(args.seed, 1))
    traj = simulate_ct(start, args.T, args.v, Seed(args.seed, 2))
    events = [{"u": ev.time, "anchor": list(ev.anchor), "kind": ev.kind,
               "block": [list(c) for c in ev.block]} for ev in traj.events]
    payload = {"schema": "pushblock.arrayevents.v1", "n": args.n, "v": args.v,
               "T": args.T, "seed": args.seed, "events": events}
    out = _out_path(args.out)
    out.write_text(json.dumps(payload))
    if args.state_out:
        _out_path(args.state_out).write_text(
            export_state_csv(traj.states[-1], header_meta=_meta(args)))
    print(f"wrote {out} ({len(events)} events)")
    return 0


def _cmd_simulate_png(args) -> int:
    M = pngref.sample_nucleations(args.window, Seed(args.seed))
    state = pngref.simulate_png(M, args.T)
    out = _out_path(args.out)
    out.write_text(pngref.export_nucleations_csv(M, header_meta=_meta(args)))
    if args.height_out:
        xs = list(np.linspace(-args.window, args.window, 201))
        _out_path(args.height_out).write_text(
            pngref.export_height_csv(state, xs, header_meta=_meta(args)))
    print(f"wrote {out}")
    return 0


def _cmd_plot(args) -> int:
    text = Path(args.input).read_text()
    out = _out_path(args.out)
    if args.kind == "profile":
        traj, _ = trajectory_from_json(text)
        t = args.step if args.step is not None else len(traj.profiles) - 1
        out.write_text(profile_svg(traj.profiles[t]))
    else:
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("t,"):
                continue
            t, pid, species, pos = line.split(",")
            rows.append((int(t), int(pid), species, float(pos)))
        out.write_text(paths_svg(rows))
    print(f"wrote {out}")
    return 0


def _emit_report(args, report) -> int:
    payload = report.to_json_dict()
    payload["schema"] = "pushblock.report.v1"
    payload["seed"] = args.seed
    payload["passed"] = report.passed
    text = json.dumps(payload, indent=2)
    if getattr(args, "report", None):
        _out_path(args.report).write_text(text)
    print(text)
    return 0 if report.passed else 1


def _cmd_verify(args) -> int:
    seed = Seed(args.seed)
    if args.check == "coupling":
        rep = verify.verify_coupling(n_max=args.n, v=args.v, L=args.L,
                                     samples=args.samples, seed=seed,
                                     jobs=args.jobs)
    elif args.check == "identity":
        rep = verify.verify_identity(n=args.n, v=args.v, L=args.L,
                                     samples=args.samples, seed=seed,
                                     jobs=args.jobs)
    elif args.check == "balance":
        rep = verify.verify_balance([args.n], [args.v], args.samples, seed)
    elif args.check == "stationarity":
        rep = verify.verify_stationarity(n=args.n, v=args.v, T=args.T,
                                         samples=args.samples, seed=seed,
                                         cells=[(1, 1), (2, 2), (1, 2 * args.n)])
    elif args.check == "png-limit":
        n_list = [int(x) for x in args.n_list.split(",")]
        rep = verify.verify_png_limit(n_list, args.samples, seed)
    else:  # pragma: no cover - argparse restricts choices
        raise AssertionError(args.check)
    return _emit_report(args, rep)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pushblock",
        description="Push/block interface growth simulators and verifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, L=None, steps=False, T=False):
        p.add_argument("--n", type=int, default=2)
        p.add_argument("--v", type=float, default=0.5)
        if L is not None:
            p.add_argument("--L", type=float, default=L)
        if steps:
            p.add_argument("--steps", type=int, default=None)
        if T:
            p.add_argument("--T", type=float, default=5.0)
        p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("sample-lpp", help="sample environments and LPP tables")
    common(p)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sample_lpp)

    p = sub.add_parser("simulate-growth", help="run the height dynamics")
    common(p, L=10.0, steps=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(fn=_cmd_simulate_growth)

    p = sub.add_parser("simulate-particles", help="run the particle system")
    common(p, L=10.0, steps=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--paths-out", default=None,
                   help="also write a space-time path CSV")
    p.set_defaults(fn=_cmd_simulate_particles)

    p = sub.add_parser("simulate-array", help="run the staircase array process")
    common(p, T=True)
    p.add_argument("--out", required=True, help="event log JSON")
    p.add_argument("--state-out", default=None, help="final state CSV")
    p.set_defaults(fn=_cmd_simulate_array)

    p = sub.add_parser("simulate-png", help="run the polynuclear reference")
    p.add_argument("--window", type=float, default=4.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="nucleation CSV")
    p.add_argument("--height-out", default=None, help="height snapshot CSV")
    p.set_defaults(fn=_cmd_simulate_png)

    p = sub.add_parser("verify", help="run a verification harness")
    p.add_argument("check", choices=["identity", "coupling", "balance",
                                     "stationarity", "png-limit"])
    common(p, L=20.0, T=True)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--n-list", default="4,8,16,32")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", default=None, help="write the JSON report here")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("plot", help="render an SVG from a trajectory or path file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["profile", "paths"], default="profile")
    p.add_argument("--step", type=int, default=None)
    p.set_defaults(fn=_cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


def entry() -> None:  # console script
    sys.exit(main())


if __name__ == "__main__":
    entry()
