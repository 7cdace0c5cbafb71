"""Registry of test cases with known solutions.

Cases are built by the method of manufactured solutions: pick ``u`` with an
exact ``∂̄u``, set ``g = ∂̄u``. Smooth cases use monomial sums (exact backend
available); rough cases use the principal branch ``(1 - z_i)^α``, which is
holomorphic on the open polydisc and exactly ``C^α`` up to ``z_i = 1``.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidArgument
from .exact import MonomialPoly, exact_dbar, exact_K, exact_opT
from .field import Form01, ScalarFunction, check_dbar_closed, constant, wirtinger_fd

TAGS = ("smooth", "rough", "monomial", "zero")


@dataclass
class TestCase:
    __test__ = False  # not a pytest class

    id: str
    n: int
    g: Form01
    u_true: Optional[ScalarFunction] = None
    alpha_class: float = 1.0
    tags: frozenset = field(default_factory=frozenset)
    poly: Optional[MonomialPoly] = None
    rough_points: tuple = ()
    description: str = ""

    @property
    def smooth(self):
        return "rough" not in self.tags

    def exact_solution(self):
        """Exact canonical solution as a MonomialPoly, or ``None`` without an exact backend."""
        if self.poly is None:
            return None
        return exact_opT(exact_dbar(self.poly))

    def reference_value(self, z):
        """Canonical solution at ``z`` from an exact oracle (polynomial backend or a ``K u = 0`` closed form)."""
        sol = self.exact_solution()
        if sol is not None:
            return complex(sol.evaluate([np.complex128(c) for c in z]))
        if "rough" in self.tags and self.u_true is not None:
            return complex(self.u_true(*z))
        raise InvalidArgument(f"case {self.id} has no exact reference")

    def self_check(self, points, h=1e-4, tol=1e-6):
        """Closedness and ``∂̄u_true = g`` at the probe points; returns the worst residual."""
        worst = check_dbar_closed(self.g, points, h=h)
        if self.u_true is not None:
            for z in points:
                for j in range(self.n):
                    fd = wirtinger_fd(self.u_true, z, j, h=h, conjugate=True)
                    worst = max(worst, abs(fd - self.g[j](*z)))
        if worst > tol:
            raise InvalidArgument(f"case {self.id} fails its self-check (residual {worst:.3g})")
        return worst


def manufactured_case(u, case_id=None, tags=(), description=""):
    """TestCase with ``g = ∂̄u`` and ``u_true = u``.

    ``u`` is a MonomialPoly or a ScalarFunction carrying exact derivatives
    ``(j, True)`` for every ``j``.
    """
    if isinstance(u, MonomialPoly):
        g = exact_dbar(u)
        zero = all(c.is_zero() for c in g)
        tags = set(tags) | {"monomial", "smooth"} | ({"zero"} if zero else set())
        return TestCase(
            id=case_id or "poly",
            n=u.n,
            g=Form01([c.to_function(name=f"g{j}") for j, c in enumerate(g)], name=case_id or "g"),
            u_true=u.to_function(name="u"),
            alpha_class=1.0,
            tags=frozenset(tags),
            poly=u,
            description=description or f"u = {u.to_text().strip()}",
        )
    if not isinstance(u, ScalarFunction):
        raise InvalidArgument("manufactured_case needs a MonomialPoly or a ScalarFunction")
    missing = [j for j in range(u.n) if (j, True) not in u.derivatives]
    if missing:
        raise InvalidArgument(f"u has no exact ∂̄ in coordinates {missing}; cannot manufacture g")
    comps = [u.derivatives[(j, True)] for j in range(u.n)]
    alpha = min((c.alpha for c in comps if c.alpha is not None), default=1.0)
    rough = any(c.smoothness == "hoelder" for c in comps)
    tags = set(tags) | ({"rough"} if rough else {"smooth"})
    return TestCase(
        id=case_id or u.name, n=u.n, g=Form01(comps, alpha_class=alpha, name=case_id or "g"),
        u_true=u, alpha_class=alpha, tags=frozenset(tags), rough_points=u.rough_points,
        description=description,
    )


def _zero_fn(n):
    z = constant(0.0, n)
    for j in range(n):
        for conj in (False, True):
            z.derivatives[(j, conj)] = z
    return z


def branch_power(alpha, i, n, factor_axis=None, rough_points=()):
    """``(1 - z_i)^α`` (principal branch), optionally times ``z̄_{factor_axis}``, with exact derivatives."""
    zero = _zero_fn(n)

    def base(z):
        return np.power(1.0 - z[i], alpha)

    def d_base(z):
        return -alpha * np.power(1.0 - z[i], alpha - 1.0)

    def d2_base(z):
        return alpha * (alpha - 1.0) * np.power(1.0 - z[i], alpha - 2.0)

    d2 = ScalarFunction(d2_base, n, smoothness="unknown", name=f"d2(1-z{i})^{alpha}")
    d1 = ScalarFunction(d_base, n, smoothness="unknown", name=f"d(1-z{i})^{alpha}",
                        derivatives={(k, c): (d2 if (k, c) == (i, False) else zero)
                                     for k in range(n) for c in (False, True)})
    g = ScalarFunction(base, n, smoothness="hoelder", alpha=alpha, name=f"(1-z{i})^{alpha}",
                       rough_points=rough_points,
                       derivatives={(k, c): (d1 if (k, c) == (i, False) else zero)
                                    for k in range(n) for c in (False, True)})
    if factor_axis is None:
        return g
    j = factor_axis

    def u_fn(z):
        return np.power(1.0 - z[i], alpha) * np.conj(z[j])

    def du_fn(z):
        return -alpha * np.power(1.0 - z[i], alpha - 1.0) * np.conj(z[j])

    du = ScalarFunction(du_fn, n, smoothness="unknown", name="du")
    derivs = {(k, c): zero for k in range(n) for c in (False, True)}
    derivs[(j, True)] = g
    derivs[(i, False)] = du
    return ScalarFunction(u_fn, n, smoothness="hoelder", alpha=alpha,
                          name=f"(1-z{i})^{alpha} conj(z{j})", derivatives=derivs,
                          rough_points=rough_points)


def rough_case(alpha, i, j, n=2, case_id=None):
    """``g = (1 - z_i)^α dz̄_j``, ``u_true = (1 - z_i)^α z̄_j`` (0-based axes, ``i != j``)."""
    if not 0 < alpha < 1:
        raise InvalidArgument(f"alpha must lie in the open interval (0, 1), got {alpha}")
    if n < 2:
        raise InvalidArgument("rough cases need n >= 2")
    if i == j:
        raise InvalidArgument("roughness axis and form axis must differ")
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidArgument("axis out of range")
    rough = [0j] * n
    rough[i] = 1.0 + 0j
    rough[j] = 0.8 + 0j
    rough_points = (tuple(rough),)
    u = branch_power(alpha, i, n, factor_axis=j, rough_points=rough_points)
    case = manufactured_case(u, case_id=case_id or f"rough-a{alpha:g}",
                             description=f"u = (1 - z{i})^{alpha:g} conj(z{j})")
    case.alpha_class = alpha
    case.g.alpha_class = alpha
    case.rough_points = rough_points
    return case


def zero_case(n):
    u = MonomialPoly.zero(n)
    case = manufactured_case(u, case_id=f"zero-n{n}", description="g = 0")
    return case


def _mono(*exps, coef=1):
    return MonomialPoly.monomial(tuple(exps), coef)


def _smooth_specs():
    from fractions import Fraction
    from .exact import GaussianRational

    poly = (_mono((1, 0), (0, 1)) + _mono((0, 2), (1, 0), coef=GaussianRational(Fraction(1, 2), 1))
            - _mono((2, 1), (0, 0)) + _mono((1, 1), (2, 1), coef=GaussianRational(0, Fraction(-1, 3))))
    return [
        ("mono-n1-conj", _mono((0, 1)), "u = conj(z0)"),
        ("mono-n1-mix", _mono((1, 2)), "u = z0 conj(z0)^2"),
        ("mono-n2-conj2", _mono((0, 1), (0, 1)), "u = conj(z0) conj(z1)"),
        ("mono-n2-abs1", _mono((1, 1), (0, 0)), "u = z0 conj(z0)"),
        ("mono-n2-mixed", _mono((2, 1), (0, 2)), "u = z0^2 conj(z0) conj(z1)^2"),
        ("mono-n2-dz1", _mono((0, 1), (0, 0)), "u = conj(z0), g = dz̄0"),
        ("mono-n2-dz2", _mono((0, 0), (0, 1)), "u = conj(z1), g = dz̄1"),
        ("mono-n2-poly", poly, "sum of four monomials with Gaussian-rational coefficients"),
        ("mono-n3-conj3", _mono((0, 1), (0, 1), (0, 1)), "u = conj(z0 z1 z2)"),
        ("mono-n3-mix", _mono((1, 1), (0, 1), (2, 0)), "u = z0 conj(z0) conj(z1) z2^2"),
    ]


ROUGH_ALPHAS = (0.3, 0.5, 0.9)


def registry():
    """Deterministic list of every registered case."""
    cases = [zero_case(1)]
    specs = _smooth_specs()
    cases += [manufactured_case(u, cid, description=d) for cid, u, d in specs if u.n == 1]
    cases.append(zero_case(2))
    cases += [manufactured_case(u, cid, description=d) for cid, u, d in specs if u.n == 2]
    cases += [rough_case(a, i=1, j=0) for a in ROUGH_ALPHAS]
    cases.append(zero_case(3))
    cases += [manufactured_case(u, cid, description=d) for cid, u, d in specs if u.n == 3]
    return cases


def case_ids():
    return [c.id for c in registry()]


def load_poly_case(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidArgument(f"cannot read polynomial file {path}: {exc}") from None
    u = MonomialPoly.from_text(text)
    return manufactured_case(u, case_id=f"poly:{path.name}")


def get_case(key):
    """Look up a case id, or ``poly:<file>`` for a MonomialPoly text file."""
    if key.startswith("poly:"):
        return load_poly_case(key[len("poly:"):])
    for case in registry():
        if case.id == key:
            return case
    raise InvalidArgument(f"unknown case id {key!r}; known ids: {', '.join(case_ids())}")
