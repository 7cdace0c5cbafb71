"""Command-line front end.

Subcommands: ``verify``, ``solve``, ``holder``, ``calibrate``, ``convergence``
and ``list-cases``. Settings come from an optional JSON config (validated
against :data:`CONFIG_SCHEMA`); command-line flags override config fields.
Exit codes: 0 success, 1 check or runtime failure, 2 configuration error.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from .cauchy import solution_operator
from .corpus import get_case, registry
from .errors import CalibrationError, DbarError, InvalidArgument, ResourceGuardError
from .field import Point
from .henkin import CALIBRATED_SIGNS, calibrate_signs, op_H
from .harness import (FD_STEP, convergence_study, dumps_sci, holder_report, probe_points,
                      reference_config, run_suite, sector_points)
from .quadrature import check_torus_budget

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n": {"type": "integer", "minimum": 1, "maximum": 6},
        "cases": {"type": "array", "items": {"type": "string"}},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "radial": {"type": "integer", "minimum": 2},
                "angular": {"type": "integer", "minimum": 4, "multipleOf": 2},
                "circle": {"type": "integer", "minimum": 4},
                "torus_m": {"type": "integer", "minimum": 4},
            },
        },
        "fd_step": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.02},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "out": {"type": "string"},
        "points": {"type": "string"},
        "henkin": {"type": "boolean"},
        "resolutions": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 2},
        "pairs_per_scale": {"type": "integer", "minimum": 16},
        "per_sector": {"type": "boolean"},
    },
}


@dataclass
class ExperimentConfig:
    n: Optional[int] = None
    cases: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)
    fd_step: float = FD_STEP
    seed: int = 0
    tolerance: Optional[float] = None
    out: str = "results"
    points: Optional[str] = None
    henkin: bool = False
    resolutions: list = field(default_factory=lambda: [16, 32, 64, 128])
    pairs_per_scale: int = 200
    per_sector: bool = False

    def operator_config(self, n):
        cfg = reference_config(n)
        mapping = {"radial": "radial_count", "angular": "angular_count", "circle": "circle_count",
                   "torus_m": "torus_count"}
        return cfg.with_(**{mapping[k]: v for k, v in self.grid.items()})

    def selected_cases(self, default=None):
        if self.cases:
            return [get_case(c) for c in self.cases]
        cases = registry() if default is None else default
        if self.n is not None:
            cases = [c for c in cases if c.n == self.n]
        return cases

    def validate(self, cases):
        """Apply every module guard before computation; raises on violation."""
        if not 0 < self.fd_step <= 0.02:
            raise InvalidArgument("fd_step must lie in (0, 0.02]")
        for n in sorted({c.n for c in cases} | ({self.n} if self.n else set())):
            cfg = self.operator_config(n)
            check_torus_budget(n, cfg.torus_count)


def _parse_grid(text):
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--grid expects 'radial,angular', got {text!r}") from None
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("--grid expects exactly two integers 'radial,angular'")
    return {"radial": parts[0], "angular": parts[1]}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--case", action="append", dest="cases",
                        help="case id or poly:<file>; repeat for several")
    common.add_argument("--points", help="CSV of points, one complex literal per coordinate")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="sampler seed")
    common.add_argument("--henkin", action="store_true", default=None,
                        help="also evaluate Henkin's formula (solve)")
    common.add_argument("--grid", type=_parse_grid, help="disc rule 'radial,angular'")
    common.add_argument("--fd-step", type=float, dest="fd_step", help="finite-difference step")
    common.add_argument("--tolerance", type=float, help="override every check tolerance")
    common.add_argument("--n", type=int, help="dimension filter / calibration dimension")
    common.add_argument("--resolutions", help="comma-separated radial counts (convergence)")

    parser = argparse.ArgumentParser(prog="polydbar", description="dbar on the polydisc: checks and experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("verify", "run the check suite and write reports"),
                       ("solve", "evaluate the canonical solution at points"),
                       ("holder", "estimate Hölder exponents"),
                       ("calibrate", "calibrate Henkin term signs"),
                       ("convergence", "quadrature convergence table"),
                       ("list-cases", "list registered cases")]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


def load_config(args):
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidArgument(f"cannot read config {args.config}: {exc}") from None
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise InvalidArgument(f"config {args.config}: {exc.message}") from None
    cfg = ExperimentConfig(**{k: v for k, v in data.items()})
    if args.cases:
        cfg.cases = list(args.cases)
    if args.grid:
        cfg.grid = {**cfg.grid, **args.grid}
    for key in ("points", "out", "seed", "henkin", "fd_step", "tolerance", "n"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    if args.resolutions:
        try:
            cfg.resolutions = [int(r) for r in args.resolutions.split(",")]
        except ValueError:
            raise InvalidArgument("--resolutions expects comma-separated integers") from None
    if cfg.seed < 0:
        raise InvalidArgument("seed must be non-negative")
    if cfg.tolerance is not None and not cfg.tolerance > 0:
        raise InvalidArgument("tolerance must be positive")
    # guard checks on the grid happen here, before any computation
    for n in (1, 2, 3):
        cfg.operator_config(n)
    return cfg


def _write(out_dir, name, text):
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)
    return path / name


def _fmt(x):
    return f"{x:.17e}"


def cmd_verify(cfg: ExperimentConfig):
    cases = cfg.selected_cases()
    cfg.validate(cases)
    result = run_suite(cases, cfg_for=cfg.operator_config, seed=cfg.seed, h=cfg.fd_step,
                       tolerance_override=cfg.tolerance)
    _write(cfg.out, "report.json", result.to_json())
    _write(cfg.out, "report.csv", result.to_csv())
    _write(cfg.out, "timings.csv", result.timings_csv())
    for r in result.reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check_id:26s} {r.case_id:16s} "
              f"residual={r.residual:.3e} tol={r.tolerance:.1e}")
    failed = sum(not r.passed for r in result.reports)
    print(f"{len(result.reports) - failed}/{len(result.reports)} checks passed; reports in {cfg.out}")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def read_points(path, n):
    """Points CSV: one row per point, ``n`` complex literals; ``#`` lines are comments."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidArgument(f"cannot read points file {path}: {exc}") from None
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        try:
            coords = [complex(c.strip().replace(" ", "")) for c in row]
        except ValueError:
            raise InvalidArgument(f"{path}:{lineno}: cannot parse {row}") from None
        if len(coords) != n:
            raise InvalidArgument(f"{path}:{lineno}: expected {n} coordinates, got {len(coords)}")
        rows.append(coords)
    return rows


def cmd_solve(cfg: ExperimentConfig):
    if not cfg.points:
        raise InvalidArgument("solve needs --points")
    if len(cfg.cases) != 1:
        raise InvalidArgument("solve needs exactly one --case")
    case = get_case(cfg.cases[0])
    cfg.validate([case])
    op_cfg = cfg.operator_config(case.n)
    points = read_points(cfg.points, case.n)
    sol = solution_operator(case.g, op_cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case_id"] + [f"z{k}" for k in range(case.n)] + ["value_re", "value_im", "method", "status"])
    failed = False
    methods = [("T", lambda z: sol(z))]
    if cfg.henkin:
        methods.append(("H", lambda z: op_H(case.g, z, CALIBRATED_SIGNS, op_cfg)))
    for coords in points:
        for method, fn in methods:
            try:
                z = Point(coords)
                if not z.interior:
                    raise InvalidArgument(f"{coords} is not interior")
                v = complex(fn(z))
                status = "ok"
            except DbarError as exc:
                v = complex("nan")
                status = type(exc).__name__
                failed = True
            w.writerow([case.id] + [repr(complex(c)) for c in coords]
                       + [_fmt(v.real), _fmt(v.imag), method, status])
    path = _write(cfg.out, "solve.csv", buf.getvalue())
    sys.stdout.write(buf.getvalue())
    print(f"wrote {path}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_holder(cfg: ExperimentConfig):
    cases = cfg.selected_cases(default=[c for c in registry() if "rough" in c.tags])
    cfg.validate(cases)
    doc = {"seed": cfg.seed, "estimates": []}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case_id", "function", "scale", "sup_delta"])
    for case in cases:
        out = holder_report(case, cfg.operator_config(case.n), seed=cfg.seed,
                            pairs_per_scale=cfg.pairs_per_scale, per_sector=cfg.per_sector)
        entry = {"case_id": case.id, "alpha_class": case.alpha_class,
                 "g": out[0].to_dict(), "Tg": out[1].to_dict()}
        if cfg.per_sector:
            entry["Tg_by_sector"] = {",".join(map(str, s)): e.to_dict() for s, e in out[2].items()}
        doc["estimates"].append(entry)
        for label, est in (("g", out[0]), ("Tg", out[1])):
            for s, v in est.bins:
                w.writerow([case.id, label, _fmt(s), _fmt(v)])
        flag = " (degenerate)" if out[1].degenerate else ""
        print(f"{case.id:16s} alpha_hat(g)={out[0].alpha_hat:.3f} alpha_hat(Tg)={out[1].alpha_hat:.3f} "
              f"r2={out[1].r2:.3f}{flag}")
    _write(cfg.out, "holder.json", dumps_sci(doc))
    _write(cfg.out, "holder_bins.csv", buf.getvalue())
    return EXIT_OK


def cmd_calibrate(cfg: ExperimentConfig):
    n = cfg.n or 2
    if cfg.cases:
        corpus = [get_case(c) for c in cfg.cases]
    else:
        corpus = [c for c in registry() if c.n == n and c.poly is not None and "zero" not in c.tags]
    if any(c.n != n for c in corpus):
        raise InvalidArgument(f"calibration corpus must have dimension {n}")
    cfg.validate(corpus)
    op_cfg = cfg.operator_config(n)
    points = sector_points(n, 2, seed=cfg.seed)
    try:
        table = calibrate_signs(n, [c.g for c in corpus], points, op_cfg)
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = dumps_sci({"henkin_signs": table.to_json()})
    _write(cfg.out, "signs.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_convergence(cfg: ExperimentConfig):
    cases = [get_case(c) for c in cfg.cases] if cfg.cases else [get_case("mono-n2-conj2")]
    cfg.validate(cases)
    code = EXIT_OK
    parts = []
    for case in cases:
        pts = probe_points(case.n, 20, seed=cfg.seed)
        table = convergence_study(case, cfg.resolutions, pts, cfg.operator_config(case.n))
        text = table.to_csv()
        parts.append(text)
        _write(cfg.out, f"convergence-{case.id.replace(':', '_').replace('/', '_')}.csv", text)
        order = "n/a" if table.fitted_order is None else f"{table.fitted_order:.3f}"
        print(f"{case.id}: fitted order {order}, decreasing={table.decreasing}")
        sys.stdout.write(text)
        if not table.decreasing:
            code = EXIT_FAIL
    return code


def cmd_list_cases(cfg: ExperimentConfig):
    for c in cfg.selected_cases():
        print(f"{c.id:16s} n={c.n} alpha={c.alpha_class:g} tags={','.join(sorted(c.tags))}  {c.description}")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "solve": cmd_solve, "holder": cmd_holder, "calibrate": cmd_calibrate,
            "convergence": cmd_convergence, "list-cases": cmd_list_cases}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (InvalidArgument, ResourceGuardError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DbarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
