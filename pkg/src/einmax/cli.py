"""Command-line front end.

Every subcommand writes JSON with a top-level "schema" field, sorted keys and
floats at 17 significant digits, then a manifest.json last.  Exit codes:
0 success, 1 verification mismatch, 2 usage or parse error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (CFLViolation, ConfigError, EinmaxError, GeometryError, NumericalAbort, ResonanceError,
                     SearchExhausted, SingularSystemError)

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SCHEMA_PREFIX = "einmax"
SCHEMA_VERSION = 1

FAULTS = ("pair-norm", "pair-trace", "field-strength", "h1", "h1-part", "h2", "p2", "h3", "t-vector", "rank")


class UsageError(Exception):
    pass


# -- deterministic JSON -------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = format(x, ".17g")
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted keys and floats rendered at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _schema(name: str) -> str:
    return f"{SCHEMA_PREFIX}.{name}/v{SCHEMA_VERSION}"


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.out = Path(args.out) if args.out else None
        self.files: dict = {}
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    def say(self, text: str) -> None:
        if not self.args.quiet:
            print(text)

    def write_json(self, name: str, obj: dict) -> None:
        text = dumps(obj) + "\n"
        if self.out is None:
            if not self.args.quiet:
                sys.stdout.write(text)
            return
        self._write(name, text.encode("utf-8"))

    def _write(self, name: str, data: bytes) -> None:
        path = self.out / name
        path.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def adopt(self, name: str) -> None:
        """Record a file written by a helper."""
        self.files[name] = hashlib.sha256((self.out / name).read_bytes()).hexdigest()

    def finish(self, status: int) -> int:
        if self.out is None:
            return status
        cfg = self.args.config
        cfg_hash = hashlib.sha256(Path(cfg).read_bytes()).hexdigest() if cfg else None
        manifest = {
            "schema": _schema("manifest"),
            "subcommand": self.command,
            "config": cfg,
            "config_sha256": cfg_hash,
            "seed": self.args.seed,
            "out": str(self.out),
            "version": __version__,
            "exit_status": status,
            "outputs": dict(sorted(self.files.items())),
        }
        (self.out / "manifest.json").write_text(dumps(manifest) + "\n", encoding="utf-8")
        return status


def _load_config(path: str | None) -> dict | None:
    if not path:
        return None
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise UsageError(f"{path}: top level must be a JSON object")
    return obj


# -- verify-appendix ----------------------------------------------------------


def _flip_first(rows):
    """Negate the first nonzero entry of a nested list of exact values."""
    from .tensor import GaussRational

    done = [False]

    def walk(x):
        if isinstance(x, (list, tuple)) and not isinstance(x, GaussRational):
            return [walk(v) for v in x]
        if not done[0] and x is not None and not GaussRational.coerce(x).is_zero():
            done[0] = True
            return -GaussRational.coerce(x)
        return x

    return walk(rows)


def _compare(name: str, computed, expected) -> dict:
    """Entrywise comparison of nested sequences of exact values."""
    from .tensor import GaussRational, format_rational

    def show(v):
        v = GaussRational.coerce(v)
        return format_rational(v.re) if v.is_real() else str(v)

    diffs = []

    def walk(c, e, idx):
        if isinstance(e, (list, tuple)) and not isinstance(e, GaussRational):
            for k, (cc, ee) in enumerate(zip(c, e)):
                walk(cc, ee, idx + (k,))
            return
        if e is None:
            return
        if GaussRational.coerce(c) != GaussRational.coerce(e):
            diffs.append({"entry": list(idx), "expected": show(e), "computed": show(c)})

    walk(computed, expected, ())
    return {"item": name, "status": "MATCH" if not diffs else "MISMATCH", "diffs": diffs}


def verify_appendix(fault: str | None = None) -> dict:
    """Recompute the built-in reference values and compare them entrywise."""
    from . import reference_values as ref
    from .symbols import (h1_parts, h1_symbol, h2_matrix, h3_matrix, independence_determinant, p2_term,
                          pair_norms, t_projection, total_symbol)
    from .tensor import weighted_trace

    P = ref.as_rationals
    items = []

    def check(name, kind, computed, expected, family):
        if fault == family and not any(it["family"] == family for it in items):
            computed = _flip_first(computed)
        res = _compare(name, computed, expected)
        res["kind"] = kind
        res["family"] = family
        items.append(res)

    cfg1 = ref.reference_config(1)
    G = pair_norms(cfg1)
    F = cfg1.field_strengths()
    pairs0 = [(i - 1, j - 1) for i, j in ref.PAIR_ORDER]
    check("pair norms G_ij", "table", [G[i][j] for i, j in pairs0], P(ref.PAIR_NORMS), "pair-norm")
    check("weighted traces Tr(F_i, F_j), set 1", "table", [weighted_trace(F[i], F[j]) for i, j in pairs0],
          P(ref.PAIR_TRACES), "pair-trace")
    for w in range(1, 5):
        exp = [[None] * 4 for _ in range(4)]
        for (a, b), v in ref.FIELD_STRENGTHS_SET1[w].items():
            exp[a][b] = ref.parse_rational(v)
        # unlisted upper-triangle entries are zero
        for a in range(4):
            for b in range(a + 1, 4):
                if exp[a][b] is None:
                    exp[a][b] = 0
        comp = [[F[w - 1][a, b] if b > a else None for b in range(4)] for a in range(4)]
        check(f"field strength {w}, set 1", "field", comp, exp, "field-strength")

    I1, I2, I3 = h1_parts(cfg1)
    for label, M in (("I1", I1), ("I2", I2), ("I3", I3)):
        keys = sorted(ref.H1_PARTS_SET1[label])
        check(f"first-term piece {label}, set 1", "intermediate", [M[a, b] for a, b in keys],
              P(ref.H1_PARTS_SET1[label][k] for k in keys), "h1-part")
    for (p, q), rows in ref.P2_TERMS_SET1.items():
        M = p2_term(cfg1, (p[0] - 1, p[1] - 1), (q[0] - 1, q[1] - 1))
        check(f"pair term {p}x{q}, set 1", "intermediate", M.rows(), ref.as_matrix(rows).rows(), "p2")

    totals = {}
    for a in range(1, 6):
        cfg = ref.reference_config(a)
        h1 = h1_symbol(cfg)
        check(f"first term, set {a}", "matrix", list(t_projection(h1)), P(ref.H1_SLOTS[a]), "h1")
        h2 = h2_matrix(cfg)
        check(f"second term, set {a}", "matrix", h2.rows(), ref.as_matrix(ref.H2_MATRICES[a]).rows(), "h2")
        h3 = h3_matrix(cfg)
        check(f"third term, set {a}", "matrix", h3.rows(), ref.as_matrix(ref.H3_MATRICES[a]).rows(), "h3")
        totals[a] = total_symbol(cfg)

    tvecs = []
    for a in range(1, 6):
        tv = list(t_projection(totals[a]))
        check(f"T-vector, set {a}", "t-vector", tv, P(ref.T_VECTORS[a]), "t-vector")
        # printed first/second/third pieces add up to the printed total
        parts = [P(ref.H1_SLOTS[a])[k] + ref.as_matrix(ref.H2_MATRICES[a])[s]
                 + ref.as_matrix(ref.H3_MATRICES[a])[s] for k, s in enumerate(((0, 2), (0, 3), (1, 2), (1, 3), (2, 3)))]
        check(f"slot sums of the printed pieces, set {a}", "cross-check", parts, P(ref.T_VECTORS[a]), "sum")
        tvecs.append(tv)

    D = independence_determinant(tvecs)
    if fault == "rank":
        D = D * 0
    items.append({"item": "rank-5 independence determinant", "kind": "rank", "family": "rank",
                  "status": "MATCH" if not D.is_zero() else "MISMATCH",
                  "diffs": [] if not D.is_zero() else [{"entry": [], "expected": "nonzero", "computed": str(D)}],
                  "determinant": D.to_json()})

    counts = {}
    for it in items:
        counts[it["kind"]] = counts.get(it["kind"], 0) + 1
    first_bad = next((it for it in items if it["status"] != "MATCH"), None)
    return {
        "schema": _schema("verify-appendix"),
        "ok": first_bad is None,
        "counts": counts,
        "first_mismatch": None if first_bad is None else {"item": first_bad["item"], **first_bad["diffs"][0]},
        "items": items,
    }


def cmd_verify_appendix(args) -> int:
    run = Run(args, "verify-appendix")
    report = verify_appendix(args.inject_fault)
    for it in report["items"]:
        line = f"{it['status']:8s} {it['item']}"
        if it["diffs"]:
            d = it["diffs"][0]
            line += f"  (entry {d['entry']}: expected {d['expected']}, got {d['computed']})"
        run.say(line)
    c = report["counts"]
    run.say(f"{c.get('matrix', 0)} matrices, {c.get('table', 0)} tables, {c.get('t-vector', 0)} T-vectors, "
            f"{c.get('rank', 0)} rank check: {'all MATCH' if report['ok'] else 'MISMATCH'}")
    if run.out is not None:
        run.write_json("verify.json", report)
    if not report["ok"]:
        fm = report["first_mismatch"]
        print(f"first mismatch: {fm['item']} entry {fm['entry']}", file=sys.stderr)
    return run.finish(EXIT_OK if report["ok"] else EXIT_MISMATCH)


# -- symbol -------------------------------------------------------------------


def cmd_symbol(args) -> int:
    from . import reference_values as ref
    from .symbols import InteractionConfig, h1_symbol, h2_interaction_symbol, h3_interaction_symbol, t_projection

    run = Run(args, "symbol")
    obj = _load_config(args.config)
    if obj is None:
        cfg = ref.reference_config(args.reference)
        source = {"reference_set": args.reference}
    else:
        cfg = InteractionConfig.from_json(obj)
        source = {"config": args.config}
    parts = [h1_symbol(cfg), h2_interaction_symbol(cfg), h3_interaction_symbol(cfg)]
    total = parts[0] + parts[1] + parts[2]
    tv = t_projection(total)
    run.say("T = c_pi(" + ", ".join(tv.to_strings()) + ")")
    run.write_json("symbol.json", {
        "schema": _schema("symbol"),
        "input": source,
        "config": cfg.to_json(),
        "units": "c_pi",
        "first": parts[0].to_json(),
        "second": parts[1].to_json(),
        "third": parts[2].to_json(),
        "total": total.to_json(),
        "t_vector": tv.to_json(),
    })
    return run.finish(EXIT_OK)


# -- search -------------------------------------------------------------------


def cmd_search(args) -> int:
    from .tensor import Covector4, parse_rational
    from .variety import SamplingBox, reference_box, search_nondegenerate

    run = Run(args, "search")
    obj = _load_config(args.config) or {}
    unknown = set(obj) - {"target", "centers", "radius", "max_iter", "identical_pol_sets", "reference_pols"}
    if unknown:
        raise UsageError(f"unknown search fields {sorted(unknown)}")
    radius = parse_rational(str(obj.get("radius", "1/8")))
    target, box = reference_box(radius, bool(obj.get("reference_pols", False)))
    if "target" in obj:
        target = Covector4.from_json(obj["target"])
    if "centers" in obj:
        box = SamplingBox([Covector4.from_json(c) for c in obj["centers"]], radius)
    if obj.get("identical_pol_sets"):
        box.identical_pol_sets = True
        box.pol_sets = None
    max_iter = int(obj.get("max_iter", args.max_iter))
    point = search_nondegenerate(target, box, seed=args.seed, max_iter=max_iter)
    run.say(f"nondegenerate at iteration {point.iteration}: D = {point.determinant}")
    run.write_json("search.json", {"schema": _schema("search"), "max_iter": max_iter, "result": point.to_json()})
    return run.finish(EXIT_OK)


# -- simulate -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    from . import weakfield as wf

    run = Run(args, "simulate")
    obj = _load_config(args.config) or {}
    unknown = set(obj) - {"grid", "source"}
    if unknown:
        raise UsageError(f"unknown simulate fields {sorted(unknown)}")
    gopt = dict(obj.get("grid", {}))
    n = int(args.n if args.n is not None else gopt.get("n", 48))
    cfl = float(args.cfl if args.cfl is not None else gopt.get("cfl", 0.5))
    length = float(gopt.get("length", 2.0))
    steps = args.steps if args.steps is not None else gopt.get("steps")
    source_path = args.source
    src_obj = _load_config(source_path) if source_path else obj.get("source", {})
    try:
        spec = wf.ConormalSourceSpec.from_json(src_obj)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad source spec: {exc}") from exc
    grid = wf.GridSpec.cube(n, length, steps=None if steps is None else int(steps), cfl=cfl)
    res = wf.simulate(spec, grid, lam=1.0)
    diag = {k: v for k, v in res.diagnostics.items() if k != "runtime_s"}
    ratio = None
    if not args.no_ratio:
        res2 = wf.simulate(spec, grid, lam=2.0, measure_step=res.measure_step, keep=("g1",), gauge=False)
        ratio = res2.diagnostics["g1_norm"] / res.diagnostics["g1_norm"] if res.diagnostics["g1_norm"] else None
    run.say(f"measured at step {res.measure_step}; tube ratio {diag['tube']['ratio']:.6f}; "
            f"lambda=2 response ratio {ratio if ratio is None else format(ratio, '.6f')}")
    report = {
        "schema": _schema("simulate"),
        "grid": grid.to_json(),
        "source": res.spec.to_json(),
        "diagnostics": diag,
        "quadratic_response_ratio": ratio,
    }
    if run.out is not None:
        g1 = res.snapshots["g1"]
        g1_abs = np.sqrt((g1 ** 2).sum(axis=0))
        h00 = res.snapshots["h2_00"]
        mid = grid.n[1] // 2
        wf.write_slice_csv(run.out / "slice.csv", grid, {"g1_abs": g1_abs, "h2_00": h00}, axis=1, index=mid)
        run.adopt("slice.csv")
        wf.write_pgm(run.out / "g1_abs.pgm", g1_abs[:, mid, :])
        run.adopt("g1_abs.pgm")
        wf.write_pgm(run.out / "h2_00.pgm", h00[:, mid, :])
        run.adopt("h2_00.pgm")
    run.write_json("diagnostics.json", report)
    return run.finish(EXIT_OK)


# -- observe ------------------------------------------------------------------


_DEFAULT_OBSERVE = {
    "metric": {"family": "minkowski"},
    "source": [0.0, 0.0, 0.0, 0.0],
    "observers": [[1.0, 0.0, 0.0], [0.0, 1.2, 0.0], [-0.8, 0.0, 0.5], [0.0, 0.0, -1.0]],
    "t_min": -1.0,
    "t_max": 3.0,
    "radius": 0.1,
    "resolution": [24, 48],
}


def cmd_observe(args) -> int:
    from . import geometry as geo

    run = Run(args, "observe")
    obj = dict(_DEFAULT_OBSERVE)
    user = _load_config(args.config) or {}
    unknown = set(user) - set(_DEFAULT_OBSERVE) - {"horizon"}
    if unknown:
        raise UsageError(f"unknown observe fields {sorted(unknown)}")
    obj.update(user)
    metric = geo.metric_from_json(obj["metric"])
    region = geo.ObserverRegion(tuple(tuple(float(c) for c in p) for p in obj["observers"]),
                                float(obj["t_min"]), float(obj["t_max"]), float(obj["radius"]))
    q = [float(c) for c in obj["source"]]
    if len(q) != 4:
        raise UsageError("source must have four coordinates (t, y1, y2, y3)")
    obs = geo.observation_set(metric, q, region, tuple(int(r) for r in obj["resolution"]), obj.get("horizon"))
    first = geo.earliest_observation_set(obs, metric)
    run.say(f"{len(obs)} observation samples, {len(first)} earliest")
    if run.out is not None:
        geo.write_observation_csv(run.out / "observations.csv", obs, first)
        run.adopt("observations.csv")
        geo.write_observation_csv(run.out / "earliest.csv", first)
        run.adopt("earliest.csv")
    run.write_json("observe.json", {
        "schema": _schema("observe"),
        "metric": metric.to_json(),
        "source": q,
        "region": region.to_json(),
        "resolution": list(obs.resolution),
        "cell_radians": obs.cell,
        "n_samples": len(obs),
        "earliest": [{"observer": s.observer, "ray": s.ray, "point": list(s.point), "distance": s.distance}
                     for s in first.samples],
    })
    return run.finish(EXIT_OK)


# -- entry point --------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--out", default=d(None), help="output directory (default: print JSON to stdout)")
    parser.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    parser.add_argument("--config", default=d(None), help="JSON config file")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="einmax", description="Interaction symbols, variety search, "
                                "weak-field simulation and causal geometry.")
    p.add_argument("--version", action="version", version=f"einmax {__version__}")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        _global_flags(sp, suppress=True)
        return sp

    sp = add("verify-appendix", "recompute the built-in reference values exactly and compare")
    sp.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify_appendix)

    sp = add("symbol", "interaction symbol and T-vector of a configuration")
    sp.add_argument("--reference", type=int, choices=range(1, 6), default=1,
                    help="built-in polarization set used when no --config is given")
    sp.set_defaults(func=cmd_symbol)

    sp = add("search", "search near the reference directions for a nondegenerate configuration")
    sp.add_argument("--max-iter", type=int, default=50)
    sp.set_defaults(func=cmd_search)

    sp = add("simulate", "weak-field simulation with diagnostics, CSV slice and PGM images")
    sp.add_argument("--n", type=int, default=None, help="nodes per axis (default 48)")
    sp.add_argument("--cfl", type=float, default=None, help="dt / h (default 0.5)")
    sp.add_argument("--steps", type=int, default=None, help="time steps (default 2n)")
    sp.add_argument("--source", default=None, help="source description JSON file")
    sp.add_argument("--no-ratio", action="store_true", help="skip the lambda = 2 rerun")
    sp.set_defaults(func=cmd_simulate)

    sp = add("observe", "light observation sets of a point for a family of static observers")
    sp.set_defaults(func=cmd_observe)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigError, CFLViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalAbort, SearchExhausted, SingularSystemError, ResonanceError, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GeometryError, EinmaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
