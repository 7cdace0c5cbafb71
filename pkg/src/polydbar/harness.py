"""Batch checks of the solution operators against their defining identities.

Every check returns a :class:`CheckReport`; ``passed`` is exactly
``residual <= tolerance``. Tolerances are frozen per check and case kind in
:data:`TOLERANCES` and echoed in every report.
"""

import csv
import io
import json
import re
import time
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .cauchy import (CircleCauchy, DiscCauchy, OperatorConfig, cauchy_torus, parallel_map, solution_operator,
                     stilde_function)
from .errors import InvalidArgument
from .field import Form01, Point, Product, coordinate, partial, wirtinger_fd
from .henkin import CALIBRATED_SIGNS, SignTable, op_H, sector_of
from .holder import PolydiscSampler, estimate_exponent

FD_STEP = 1e-3
PROBE_MARGIN = 0.1
SECTOR_MARGIN = 0.1
HOLDER_LOW_SLACK = 0.1
HOLDER_HIGH_SLACK = 0.15
HOLDER_R2_MIN = 0.9

TOLERANCES = {
    "solution": {"smooth": 1e-3, "rough": 1e-2, "zero": 1e-12},
    "canonical": {"smooth": 1e-3, "rough": 1e-2, "zero": 1e-12},
    "reconstruction": {"smooth": 1e-3, "rough": 1e-3, "zero": 1e-12},
    "exact_agreement": {"smooth": 1e-4, "rough": 1e-4, "zero": 1e-12},
    "henkin": {1: 1e-6, 2: 1e-2, 3: 1e-2, "zero": 1e-12},
    "derivative": {"smooth": 1e-2, "zero": 1e-12},
    "holder": {"rough": 0.0},
}

CHECK_ORDER = ("canonical", "derivative", "exact_agreement", "henkin", "holder", "reconstruction",
               "solution")


@dataclass
class CheckReport:
    check_id: str
    case_id: str
    n: int
    residual: float
    tolerance: float
    passed: bool
    settings: dict
    runtime_ms: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        """Deterministic record (runtime excluded)."""
        return {
            "check_id": self.check_id,
            "case_id": self.case_id,
            "n": self.n,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "settings": self.settings,
            "details": self.details,
        }


def _kind(case):
    if "zero" in case.tags:
        return "zero"
    return "rough" if "rough" in case.tags else "smooth"


def _report(check_id, case, residual, tol, cfg, started, details=None):
    residual = float(residual)
    return CheckReport(check_id, case.id, case.n, residual, float(tol), bool(residual <= tol),
                       cfg.to_dict(), (time.perf_counter() - started) * 1e3, details or {})


def probe_points(n, count=20, seed=0, margin=PROBE_MARGIN):
    """Seeded interior points with every ``|z_i| <= 1 - margin``."""
    return [tuple(p) for p in PolydiscSampler(n, seed=seed, margin=margin).points(count)]


def sector_points(n, per_sector=3, seed=0, margin=PROBE_MARGIN, sector_margin=SECTOR_MARGIN):
    """Seeded interior points, ``per_sector`` in every sector, moduli gaps ``>= sector_margin``."""
    pts = []
    for k, sigma in enumerate(permutations(range(n))):
        s = PolydiscSampler(n, seed=seed + 7919 * k, sector=sigma, sector_margin=sector_margin,
                            margin=margin)
        pts += [tuple(p) for p in s.points(per_sector)]
    return pts


def _check_fd_margin(points, h):
    for p in points:
        if Point(p).margin < 5 * h:
            raise InvalidArgument(f"probe point {p} is closer than 5h = {5 * h:g} to the boundary")


def check_solution(case, points, cfg: OperatorConfig, h=FD_STEP):
    """``max_j |∂̄_j T[g] - g_j|`` with the four-point Wirtinger stencil."""
    started = time.perf_counter()
    _check_fd_margin(points, h)
    sol = solution_operator(case.g, cfg)

    def one(z):
        return max(abs(wirtinger_fd(sol, z, j, h, conjugate=True) - case.g[j](*z)) for j in range(case.n))

    res = max(parallel_map(one, points), default=0.0)
    return _report("solution", case, res, TOLERANCES["solution"][_kind(case)], cfg, started,
                   {"fd_step": h, "points": len(points)})


def check_canonical(case, points, cfg: OperatorConfig):
    """``max |K[T[g]]|`` with the ``torus_count``-point product rule."""
    started = time.perf_counter()
    kt = cauchy_torus(solution_operator(case.g, cfg), cfg)
    vals = kt.evaluate(np.array(points, dtype=complex))
    res = float(np.max(np.abs(vals))) if len(vals) else 0.0
    return _report("canonical", case, res, TOLERANCES["canonical"][_kind(case)], cfg, started,
                   {"torus_count": cfg.torus_count, "points": len(points)})


def check_reconstruction(case, points, cfg: OperatorConfig):
    """``max |T[g] - (u - K[u])|`` for cases with a known ``u``."""
    if case.u_true is None:
        raise InvalidArgument(f"case {case.id} has no u_true")
    started = time.perf_counter()
    pts = np.array(points, dtype=complex)
    t = solution_operator(case.g, cfg).evaluate(pts)
    ku = cauchy_torus(case.u_true, cfg).evaluate(pts)
    res = float(np.max(np.abs(t - (case.u_true.evaluate(pts) - ku)))) if len(pts) else 0.0
    return _report("reconstruction", case, res, TOLERANCES["reconstruction"][_kind(case)], cfg,
                   started, {"points": len(points)})


def check_exact_agreement(case, points, cfg: OperatorConfig):
    """``max |T[g] - exact canonical solution|``."""
    started = time.perf_counter()
    t = solution_operator(case.g, cfg).evaluate(np.array(points, dtype=complex))
    ref = np.array([case.reference_value(z) for z in points])
    res = float(np.max(np.abs(t - ref))) if len(points) else 0.0
    return _report("exact_agreement", case, res, TOLERANCES["exact_agreement"][_kind(case)], cfg,
                   started, {"points": len(points)})


def check_HT(case, points, signs: SignTable, cfg: OperatorConfig):
    """``max |H[g] - T[g]|`` at sector-interior points."""
    started = time.perf_counter()
    sol = solution_operator(case.g, cfg)
    pts = [Point(p) for p in points]
    for p in pts:
        sector_of(p)

    def one(z):
        return abs(op_H(case.g, z, signs, cfg) - sol(z))

    res = max(parallel_map(one, pts), default=0.0)
    tol = TOLERANCES["henkin"]["zero" if _kind(case) == "zero" else case.n]
    return _report("henkin", case, res, tol, cfg, started,
                   {"points": len(pts), "henkin_signs": signs.to_json()})


def derivative_rhs(g: Form01, j, cfg: OperatorConfig, corrected=False):
    """``T[∂g/∂ζ_j] + S_j[S̃_j[g_j] ζ̄_j²]`` as a lazy function (``ζ̄_j = 1/ζ_j`` on the circle).

    Moving ``∂/∂z_j`` inside a boundary integral ``S_j`` produces the tangential
    derivative ``∂_j f - ζ̄_j² ∂̄_j f``, not ``∂_j f``. With ``corrected`` the
    resulting term ``-Σ_{i>j} T_i S̃_i[ζ̄_j² ∂̄_j g_i]`` is included; without it
    the identity holds only when those terms vanish.
    """
    dg = Form01([partial(g[i], j, conjugate=False) for i in range(g.n)], name=f"d{j}g")
    zbar = coordinate(j, g.n, conjugate=True)
    boundary = CircleCauchy(Product(Product(stilde_function(j, g[j], cfg), zbar), zbar), j, cfg)
    rhs = solution_operator(dg, cfg) + boundary
    if corrected:
        for i in range(j + 1, g.n):
            tangential = Product(Product(partial(g[i], j, conjugate=True), zbar), zbar)
            rhs = rhs - DiscCauchy(stilde_function(i, tangential, cfg), i, cfg)
    return rhs


def check_derivative_identity(case, j, points, cfg: OperatorConfig, h=FD_STEP, corrected=False):
    """``max |∂_{z_j} T[g] - (T[∂g/∂ζ_j] + S_j[S̃_j[g_j] ζ̄_j²])|``; smooth data only."""
    if not case.smooth:
        raise InvalidArgument("the derivative identity needs data with one derivative (smooth case)")
    if not 0 <= j < case.n:
        raise InvalidArgument(f"index {j} out of range")
    started = time.perf_counter()
    _check_fd_margin(points, h)
    sol = solution_operator(case.g, cfg)
    rhs = derivative_rhs(case.g, j, cfg, corrected=corrected)

    def one(z):
        return abs(wirtinger_fd(sol, z, j, h, conjugate=False) - rhs(z))

    res = max(parallel_map(one, points), default=0.0)
    check_id = f"derivative-corrected-j{j}" if corrected else f"derivative-j{j}"
    return _report(check_id, case, res, TOLERANCES["derivative"][_kind(case)], cfg, started,
                   {"j": j, "fd_step": h, "points": len(points)})


def holder_report(case, cfg: OperatorConfig, seed=0, pairs_per_scale=200, per_sector=False):
    """Exponent estimates for ``g`` (all components) and ``T[g]``.

    With ``per_sector`` the estimate of ``T[g]`` is also repeated on each
    sector (pairs kept inside one sector) and returned as a third element.
    """
    sol = solution_operator(case.g, cfg)
    sampler = lambda: PolydiscSampler(case.n, seed=seed, rough_points=case.rough_points)  # noqa: E731
    est_g = estimate_exponent(list(case.g.components), sampler(), pairs_per_scale=pairs_per_scale)
    est_t = estimate_exponent(sol, sampler(), pairs_per_scale=pairs_per_scale)
    if not per_sector:
        return est_g, est_t
    sectors = {}
    for sigma in permutations(range(case.n)):
        s = PolydiscSampler(case.n, seed=seed, rough_points=case.rough_points, sector=sigma)
        sectors[sigma] = estimate_exponent(sol, s, pairs_per_scale=pairs_per_scale)
    return est_g, est_t, sectors


def holder_violation(case, est_g, est_t):
    """How far the estimates fall outside the acceptance band (0 when inside)."""
    a = case.alpha_class
    return max(0.0, (a - HOLDER_LOW_SLACK) - est_t.alpha_hat, est_t.alpha_hat - (a + HOLDER_HIGH_SLACK),
               HOLDER_R2_MIN - est_t.r2, (est_g.alpha_hat - HOLDER_LOW_SLACK) - est_t.alpha_hat)


def check_holder(case, cfg: OperatorConfig, seed=0, pairs_per_scale=200):
    started = time.perf_counter()
    est_g, est_t = holder_report(case, cfg, seed=seed, pairs_per_scale=pairs_per_scale)
    res = holder_violation(case, est_g, est_t)
    return _report("holder", case, res, TOLERANCES["holder"]["rough"], cfg, started,
                   {"seed": seed, "alpha_class": case.alpha_class, "g": est_g.to_dict(),
                    "Tg": est_t.to_dict()})


# -- convergence ---------------------------------------------------------------

ERROR_FLOOR = 1e-13


@dataclass
class ConvergenceTable:
    case_id: str
    rows: list  # (resolution, error)
    fitted_order: object  # float or None
    decreasing: bool

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["resolution", "error", "fitted_order"])
        order = "" if self.fitted_order is None else f"{self.fitted_order:.17e}"
        for res, err in self.rows:
            w.writerow([res, f"{err:.17e}", order])
        return buf.getvalue()


def study_config(resolution, base: OperatorConfig = None):
    """Quadrature at one resolution of the convergence study.

    The target-centred disc rule and the trapezoid circle rule are used so
    the error is visible: the spectral defaults are exact on polynomial data.
    """
    base = base or OperatorConfig()
    return base.with_(radial_count=resolution, angular_count=2 * resolution, circle_count=resolution,
                      disc_method="direct", circle_rule="trapezoid")


def convergence_study(case, resolutions, points, base: OperatorConfig = None):
    resolutions = sorted(int(r) for r in resolutions)
    if len(resolutions) < 2:
        raise InvalidArgument("a convergence study needs at least two resolutions")
    ref = np.array([case.reference_value(z) for z in points])
    rows = []
    for res in resolutions:
        cfg = study_config(res, base)
        vals = solution_operator(case.g, cfg).evaluate(np.array(points, dtype=complex))
        rows.append((res, float(np.max(np.abs(vals - ref))) if len(points) else 0.0))
    errs = [e for _, e in rows]
    decreasing = all(max(b, ERROR_FLOOR) <= 1.1 * max(a, ERROR_FLOOR) for a, b in zip(errs, errs[1:]))
    above = [(r, e) for r, e in rows if e > ERROR_FLOOR]
    order = None
    if len(above) >= 2:
        slope = np.polyfit(np.log([r for r, _ in above]), np.log([e for _, e in above]), 1)[0]
        order = float(-slope)
    return ConvergenceTable(case.id, rows, order, decreasing)


# -- suite ---------------------------------------------------------------------

@dataclass
class SuiteResult:
    reports: list
    signs: SignTable
    settings: dict
    seed: int

    @property
    def passed(self):
        return all(r.passed for r in self.reports)

    def to_json(self):
        doc = {
            "seed": self.seed,
            "settings": self.settings,
            "henkin_signs": self.signs.to_json(),
            "passed": self.passed,
            "checks": [r.to_dict() for r in self.reports],
        }
        return dumps_sci(doc)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "case_id", "n", "residual", "tolerance", "passed"])
        for r in self.reports:
            w.writerow([r.check_id, r.case_id, r.n, f"{r.residual:.17e}", f"{r.tolerance:.17e}",
                        "true" if r.passed else "false"])
        return buf.getvalue()

    def timings_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "case_id", "n", "runtime_ms"])
        for r in self.reports:
            w.writerow([r.check_id, r.case_id, r.n, f"{r.runtime_ms:.6e}"])
        return buf.getvalue()


def _plain(obj, floats):
    """Copy of ``obj`` with every float replaced by a placeholder string."""
    if isinstance(obj, dict):
        return {str(k): _plain(v, floats) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v, floats) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        floats.append(f"{x:.17e}" if np.isfinite(x) else f'"{x}"')
        return f"\x00{len(floats) - 1}\x00"
    return obj


def dumps_sci(doc):
    """JSON text with every float in full-precision scientific notation; keys sorted."""
    floats = []
    text = json.dumps(_plain(doc, floats), indent=2, sort_keys=True)
    return re.sub(r'"\\u0000(\d+)\\u0000"', lambda m: floats[int(m.group(1))], text) + "\n"


def reference_config(n):
    """Quadrature used by the suite; spectral rules are exact on the polynomial corpus."""
    if n >= 3:
        return OperatorConfig(radial_count=24, angular_count=32, circle_count=16, torus_count=256,
                              henkin_radial=24, henkin_angular=16)
    return OperatorConfig()


def run_suite(cases, cfg_for=reference_config, seed=0, signs: SignTable = CALIBRATED_SIGNS,
              points_count=20, henkin_max_n=3, h=FD_STEP, tolerance_override=None):
    """Run every applicable check on every case; reports sorted by (check id, case id)."""
    reports = []
    for case in cases:
        cfg = cfg_for(case.n)
        pts = probe_points(case.n, points_count, seed=seed)
        reports.append(check_solution(case, pts, cfg, h))
        reports.append(check_canonical(case, pts, cfg))
        if case.u_true is not None:
            reports.append(check_reconstruction(case, pts, cfg))
        if case.poly is not None:
            reports.append(check_exact_agreement(case, pts, cfg))
        if case.n <= henkin_max_n:
            per = 3 if case.n < 3 else 1
            reports.append(check_HT(case, sector_points(case.n, per, seed=seed), signs, cfg))
        if case.smooth and case.n <= 2:
            for j in range(case.n):
                reports.append(check_derivative_identity(case, j, pts, cfg, h))
                reports.append(check_derivative_identity(case, j, pts, cfg, h, corrected=True))
        if "rough" in case.tags:
            reports.append(check_holder(case, cfg, seed=seed))
    if tolerance_override is not None:
        for r in reports:
            r.tolerance = float(tolerance_override)
            r.passed = bool(r.residual <= r.tolerance)
    reports.sort(key=lambda r: (r.check_id, r.case_id))
    settings = {"fd_step": h, "probe_margin": PROBE_MARGIN, "sector_margin": SECTOR_MARGIN,
                "points": points_count, "tolerances": {k: {str(a): b for a, b in v.items()}
                                                       for k, v in TOLERANCES.items()}}
    return SuiteResult(reports, signs, settings, seed)
