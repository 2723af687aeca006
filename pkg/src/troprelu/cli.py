"""Command-line front end: analyse a network file and check assertions.

    troprelu --network net.nt --spec props.json [--mode zone] [--domain zone]
             [--subdiv x1:2,x2:4] [--track io|all] [--report out.json]
             [--csv y1,y2:proj.csv] [--eps 1e-9] [--no-final-relu]

Exit codes: 0 when every assertion is Verified, 2 when any is Unknown,
1 on usage or input errors.

The spec file is JSON:

    {"input_box": [[lo, hi], ...],
     "assertions": [{"name": "p1", "in_coeffs": [...], "out_coeffs": [...],
                     "const": 0.0, "restrict_box": [[lo, hi] | null, ...]}]}

Reports are deterministic apart from the ``timings`` block: identical
inputs and flags give byte-identical JSON once timings are dropped.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .dbm import Box
from .errors import BadIndex, TropReluError
from .maxplus import DEFAULT_EPS
from .network import (
    AbsDomain,
    AnalysisOptions,
    AnalysisResult,
    ChainMode,
    analyze,
)
from .sherlock import parse_sherlock
from .speccheck import LinearAssertion, check, check_with_subdivision
from .subdivision import SubdivisionGrid


def load_spec_file(path, n_inputs: int, n_outputs: int):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    box_rows = doc.get("input_box")
    if box_rows is None or len(box_rows) != n_inputs:
        raise TropReluError(f"{path}: input_box must list {n_inputs} intervals")
    box = Box([r[0] for r in box_rows], [r[1] for r in box_rows])
    assertions = []
    for i, row in enumerate(doc.get("assertions", [])):
        name = row.get("name", f"assertion_{i}")
        in_c = row.get("in_coeffs", [0.0] * n_inputs)
        out_c = row.get("out_coeffs", [0.0] * n_outputs)
        if len(in_c) != n_inputs or len(out_c) != n_outputs:
            raise TropReluError(f"{path}: coefficient lengths do not match network")
        restrict = None
        if row.get("restrict_box") is not None:
            restrict = tuple(
                None if iv is None else (float(iv[0]), float(iv[1]))
                for iv in row["restrict_box"]
            )
            if len(restrict) != n_inputs:
                raise TropReluError(f"{path}: restrict_box must list {n_inputs} entries")
        assertions.append(
            LinearAssertion(in_c, out_c, float(row.get("const", 0.0)), restrict, name)
        )
    return box, assertions


def _var_names(result: AnalysisResult):
    last = max(s for s, _ in result.var_map)
    names = []
    for s, j in result.var_map:
        if s == 0:
            names.append(f"x{j + 1}")
        elif s == last:
            names.append(f"y{j + 1}")
        else:
            names.append(f"h{s}_{j + 1}")
    return names


def _parse_dim_name(name: str, result: AnalysisResult) -> int:
    names = _var_names(result)
    if name in names:
        return names.index(name)
    raise BadIndex(f"unknown dimension {name!r}; known: {', '.join(names)}")


def emit_projection_csv(result: AnalysisResult, dims, path) -> None:
    """Projected generators plus the corners of the enclosing 2-d zone."""
    d0, d1 = dims
    if min(d0, d1) < 0 or max(d0, d1) >= len(result.var_map) or d0 == d1:
        raise BadIndex("projection needs two distinct tracked dimensions")
    from .tropical import proj_internal

    proj = proj_internal(result.internal, [d0, d1])
    sub = result.zone.slice([d0 + 1, d1 + 1])
    corners = _zone2d_corners(sub.entries)
    names = _var_names(result)
    lines = [f"kind,{names[d0]},{names[d1]}"]
    for g in proj.generators:
        lines.append(f"generator,{g[0] + 0.0:.12g},{g[1] + 0.0:.12g}")
    for u, v in corners:
        lines.append(f"zone_corner,{u + 0.0:.12g},{v + 0.0:.12g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _zone2d_corners(e: np.ndarray):
    """Vertices of {lo <= (u,v) <= hi, u-v <= c, v-u <= d}, counterclockwise."""
    u_lo, u_hi = -e[0, 1], e[1, 0]
    v_lo, v_hi = -e[0, 2], e[2, 0]
    duv, dvu = e[1, 2], e[2, 1]
    cand = [
        (u_lo, max(v_lo, u_lo - duv)),
        (min(u_hi, v_lo + duv), v_lo),
        (u_hi, max(v_lo, u_hi - duv)),
        (u_hi, min(v_hi, u_hi + dvu)),
        (min(u_hi, v_hi + duv), v_hi),
        (u_lo, min(v_hi, u_lo + dvu)),
        (max(u_lo, v_lo - dvu), v_lo),
        (max(u_lo, v_hi - dvu), v_hi),
    ]
    out = []
    for p in cand:
        if (
            u_lo - 1e-9 <= p[0] <= u_hi + 1e-9
            and v_lo - 1e-9 <= p[1] <= v_hi + 1e-9
            and p[0] - p[1] <= duv + 1e-9
            and p[1] - p[0] <= dvu + 1e-9
            and not any(abs(p[0] - q[0]) < 1e-9 and abs(p[1] - q[1]) < 1e-9 for q in out)
        ):
            out.append(p)
    center = (sum(p[0] for p in out) / len(out), sum(p[1] for p in out) / len(out))
    out.sort(key=lambda p: np.arctan2(p[1] - center[1], p[0] - center[0]))
    return out


def _parse_subdiv(text: str, n_inputs: int):
    counts = [1] * n_inputs
    for part in text.split(","):
        name, _, num = part.partition(":")
        name = name.strip()
        if not name.startswith("x"):
            raise TropReluError(f"--subdiv expects input names like x1, got {name!r}")
        idx = int(name[1:]) - 1
        if idx < 0 or idx >= n_inputs:
            raise TropReluError(f"--subdiv: no input named {name}")
        counts[idx] = int(num)
    return counts


def build_report(net_path, spec_path, args, result: AnalysisResult, verdicts, seconds):
    bounds = []
    for stage, box in enumerate(result.bounds):
        if box is None:
            continue
        bounds.append(
            {
                "stage": stage,
                "lo": [round(float(v), 12) + 0.0 for v in box.lo],
                "hi": [round(float(v), 12) + 0.0 for v in box.hi],
            }
        )
    return {
        "network": str(net_path),
        "spec": str(spec_path),
        "mode": args.mode,
        "domain": args.domain,
        "track": args.track,
        "subdiv": args.subdiv or "",
        "eps": args.eps,
        "bounds": bounds,
        "variables": _var_names(result),
        "generators": [
            [round(float(v), 12) + 0.0 for v in g] for g in result.internal.generators
        ],
        "assertions": [
            {
                "name": name,
                "status": v.status.value,
                "minimum": None if not np.isfinite(v.minimum) else round(float(v.minimum), 12) + 0.0,
                "method": v.method,
            }
            for name, v in verdicts
        ],
        "timings": {"seconds": seconds},
    }


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="troprelu",
        description="Sound range analysis of ReLU networks with tropical polyhedra and zones.",
    )
    p.add_argument("--network", required=True, help="Sherlock-format network file")
    p.add_argument("--spec", required=True, help="JSON spec file (input box + assertions)")
    p.add_argument("--mode", choices=["box", "zone", "external"], default="zone")
    p.add_argument("--domain", choices=["zone", "octagon"], default="zone")
    p.add_argument("--subdiv", default=None, help="per-input cell counts, e.g. x1:2,x2:4")
    p.add_argument("--track", choices=["io", "all"], default="io")
    p.add_argument("--report", default=None, help="write a JSON report here")
    p.add_argument("--csv", default=None, help="projection dump, e.g. y1,y2:out.csv")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument(
        "--no-final-relu",
        action="store_true",
        help="treat the last layer as affine only (no output clamp)",
    )
    return p


def run_cli(argv=None) -> int:
    args = make_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        net = parse_sherlock(args.network, final_relu=not args.no_final_relu)
        in_box, assertions = load_spec_file(args.spec, net.n_inputs, net.n_outputs)
        options = AnalysisOptions(
            mode=ChainMode(args.mode),
            domain=AbsDomain(args.domain),
            track_all=args.track == "all",
            eps=args.eps,
        )
        grid = None
        if args.subdiv:
            counts = _parse_subdiv(args.subdiv, net.n_inputs)
            grid = SubdivisionGrid.uniform(in_box, counts)
        result = analyze(net, in_box, options)
        verdicts = []
        for a in assertions:
            if grid is not None:
                v = check_with_subdivision(a, net, in_box, grid, options, eps=args.eps)
            else:
                v = check(a, result, eps=args.eps)
            verdicts.append((a.name, v))
        if args.csv:
            dims_text, _, csv_path = args.csv.partition(":")
            if not csv_path:
                raise TropReluError("--csv expects DIMS:PATH, e.g. y1,y2:out.csv")
            names = dims_text.split(",")
            if len(names) != 2:
                raise TropReluError("--csv needs exactly two dimension names")
            dims = [_parse_dim_name(n.strip(), result) for n in names]
            emit_projection_csv(result, dims, csv_path)
        seconds = time.perf_counter() - t0
        report = build_report(args.network, args.spec, args, result, verdicts, seconds)
        text = json.dumps(report, indent=2, sort_keys=True)
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        for name, v in verdicts:
            extra = "" if not np.isfinite(v.minimum) else f" (min {v.minimum:.6g})"
            print(f"{name}: {v.status.value}{extra}")
        if not args.report:
            print(text)
    except (TropReluError, OSError, json.JSONDecodeError) as exc:
        print(f"troprelu: error: {exc}", file=sys.stderr)
        return 1
    return 0 if all(v.verified for _, v in verdicts) else 2


def main() -> None:
    sys.exit(run_cli())
