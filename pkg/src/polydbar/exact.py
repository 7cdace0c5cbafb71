"""Exact operator calculus on polynomials in ``z`` and ``z̄`` with Gaussian-rational coefficients.

A monomial is stored by its exponent vector ``((a_0, b_0), ..., (a_{n-1}, b_{n-1}))``
meaning ``Π z_i^{a_i} z̄_i^{b_i}``. On monomials

* ``S_j``: ``z^a z̄^b ↦ z^{a-b}`` if ``a >= b`` else ``0``  (``ζ̄ = 1/ζ`` on the circle)
* ``T_j``: ``z^a z̄^b ↦ (z^a z̄^{b+1} - [a >= b+1] z^{a-b-1}) / (b+1)``
* ``K``:   ``S`` in every variable.

Text format (one term per line, ``#`` starts a comment)::

    (a0 b0 | a1 b1 | ...) re im

where ``re`` and ``im`` are integers or fractions such as ``-3/4``.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import ClosednessError, InvalidArgument
from .field import Form01, ScalarFunction


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12) if x != int(x) else Fraction(int(x))
    return Fraction(x)


@dataclass(frozen=True)
class GaussianRational:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _frac(self.re))
        object.__setattr__(self, "im", _frac(self.im))

    @classmethod
    def of(cls, value):
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            return cls(_frac(value.real), _frac(value.imag))
        return cls(_frac(value), Fraction(0))

    def __add__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussianRational.of(other))

    def __mul__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.of(other)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return self * GaussianRational(o.re / d, -o.im / d)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        return f"{self.re} {self.im}"


ZERO = GaussianRational()
ONE = GaussianRational(1)


class MonomialPoly:
    """Finite sum of monomials ``c Π z_i^{a_i} z̄_i^{b_i}``; zero coefficients are never stored."""

    __slots__ = ("n", "terms")

    def __init__(self, n, terms=None):
        if n < 1:
            raise InvalidArgument("dimension must be >= 1")
        self.n = n
        self.terms = {}
        for exps, c in (terms or {}).items():
            exps = tuple((int(a), int(b)) for a, b in exps)
            if len(exps) != n or any(a < 0 or b < 0 for a, b in exps):
                raise InvalidArgument(f"bad exponent vector {exps} for n={n}")
            c = GaussianRational.of(c)
            if c:
                self.terms[exps] = self.terms.get(exps, ZERO) + c
                if not self.terms[exps]:
                    del self.terms[exps]

    @classmethod
    def monomial(cls, exps, coef=1):
        exps = tuple(exps)
        return cls(len(exps), {exps: coef})

    @classmethod
    def zero(cls, n):
        return cls(n)

    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((max(max(a, b) for a, b in e) for e in self.terms), default=0)

    def _check(self, other):
        if not isinstance(other, MonomialPoly) or other.n != self.n:
            raise InvalidArgument("polynomials must share the same dimension")

    def __add__(self, other):
        self._check(other)
        out = MonomialPoly(self.n, self.terms)
        for e, c in other.terms.items():
            s = out.terms.get(e, ZERO) + c
            if s:
                out.terms[e] = s
            else:
                out.terms.pop(e, None)
        return out

    def __neg__(self):
        return MonomialPoly(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = GaussianRational.of(c)
        return MonomialPoly(self.n, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, MonomialPoly):
            return self.scale(other)
        self._check(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple((a1 + a2, b1 + b2) for (a1, b1), (a2, b2) in zip(e1, e2))
                out[e] = out.get(e, ZERO) + c1 * c2
        return MonomialPoly(self.n, out)

    __rmul__ = scale

    def __eq__(self, other):
        return isinstance(other, MonomialPoly) and self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return f"MonomialPoly(n={self.n}, 0)"
        return f"MonomialPoly(n={self.n}, {self.to_text().strip()!r})"

    # -- calculus -------------------------------------------------------
    def derivative(self, j, conjugate=False):
        """Exact ``∂/∂z_j`` (or ``∂/∂z̄_j``)."""
        out = {}
        for e, c in self.terms.items():
            a, b = e[j]
            k = b if conjugate else a
            if k == 0:
                continue
            e2 = list(e)
            e2[j] = (a, b - 1) if conjugate else (a - 1, b)
            out[tuple(e2)] = out.get(tuple(e2), ZERO) + c * k
        return MonomialPoly(self.n, out)

    # -- numerics -------------------------------------------------------
    def evaluate(self, z):
        """Evaluate on broadcastable coordinate arrays."""
        z = [np.asarray(x, dtype=complex) for x in z]
        shape = np.broadcast_shapes(*(x.shape for x in z))
        total = np.zeros(shape, dtype=complex)
        deg = self.degree()
        pw = [[x**k for k in range(deg + 1)] for x in z]
        pwc = [[np.conj(x) ** k for k in range(deg + 1)] for x in z]
        for e, c in self.terms.items():
            term = complex(c)
            for i, (a, b) in enumerate(e):
                if a:
                    term = term * pw[i][a]
                if b:
                    term = term * pwc[i][b]
            total = total + term
        return total

    def to_function(self, name=None):
        """ScalarFunction with exact derivatives attached (derivatives are built lazily)."""
        holo = all(b == 0 for e in self.terms for _, b in e)
        poly = self
        f = ScalarFunction(poly.evaluate, self.n,
                           smoothness="holomorphic-component" if holo else "smooth",
                           name=name or "poly")
        f.derivatives = _LazyDerivatives(poly)
        f.poly = poly
        return f

    # -- text -----------------------------------------------------------
    def to_text(self):
        lines = []
        for e in sorted(self.terms):
            ex = " | ".join(f"{a} {b}" for a, b in e)
            lines.append(f"({ex}) {self.terms[e]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, n=None):
        pat = re.compile(r"^\(\s*([^)]*)\)\s+(\S+)\s+(\S+)\s*$")
        terms = {}
        dim = n
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = pat.match(line)
            if not m:
                raise InvalidArgument(f"line {lineno}: expected '(a0 b0 | a1 b1 ...) re im', got {raw!r}")
            groups = [g.split() for g in m.group(1).split("|")]
            if any(len(g) != 2 for g in groups):
                raise InvalidArgument(f"line {lineno}: each variable needs two exponents")
            exps = tuple((int(a), int(b)) for a, b in groups)
            if dim is None:
                dim = len(exps)
            elif len(exps) != dim:
                raise InvalidArgument(f"line {lineno}: dimension {len(exps)} differs from {dim}")
            try:
                coef = GaussianRational(Fraction(m.group(2)), Fraction(m.group(3)))
            except (ValueError, ZeroDivisionError) as exc:
                raise InvalidArgument(f"line {lineno}: bad coefficient ({exc})") from None
            terms[exps] = terms.get(exps, ZERO) + coef
        if dim is None:
            raise InvalidArgument("empty polynomial file needs an explicit dimension")
        return cls(dim, terms)


class _LazyDerivatives(dict):
    """Maps ``(j, conjugate)`` to the exact derivative as a ScalarFunction, on demand."""

    def __init__(self, poly):
        super().__init__()
        self.poly = poly

    def __contains__(self, key):
        j, _ = key
        return 0 <= j < self.poly.n

    def __missing__(self, key):
        j, conj = key
        f = self.poly.derivative(j, conj).to_function()
        self[key] = f
        return f


def exact_S(p: MonomialPoly, j: int):
    out = {}
    for e, c in p.terms.items():
        a, b = e[j]
        if a >= b:
            e2 = list(e)
            e2[j] = (a - b, 0)
            out[tuple(e2)] = out.get(tuple(e2), ZERO) + c
    return MonomialPoly(p.n, out)


def exact_T(p: MonomialPoly, j: int):
    out = {}

    def add(e, c):
        out[e] = out.get(e, ZERO) + c

    for e, c in p.terms.items():
        a, b = e[j]
        scale = GaussianRational(Fraction(1, b + 1))
        e1 = list(e)
        e1[j] = (a, b + 1)
        add(tuple(e1), c * scale)
        if a >= b + 1:
            e2 = list(e)
            e2[j] = (a - b - 1, 0)
            add(tuple(e2), -c * scale)
    return MonomialPoly(p.n, out)


def exact_K(p: MonomialPoly):
    for j in range(p.n):
        p = exact_S(p, j)
    return p


def exact_dbar(p: MonomialPoly):
    return [p.derivative(j, conjugate=True) for j in range(p.n)]


def exact_closed_residual(g):
    """First pair ``(i, j)`` with ``∂̄_j g_i != ∂̄_i g_j``, or ``None``."""
    n = len(g)
    for i in range(n):
        for j in range(i + 1, n):
            if g[i].derivative(j, True) != g[j].derivative(i, True):
                return (i, j)
    return None


def exact_opT(g):
    """``Σ_j T_j S_{j-1} ... S_0 g_j`` for a dbar-closed list of polynomials."""
    g = list(g)
    if not g:
        raise InvalidArgument("empty form")
    n = g[0].n
    if len(g) != n or any(c.n != n for c in g):
        raise InvalidArgument(f"a form on a {n}-dimensional polydisc needs {n} components")
    bad = exact_closed_residual(g)
    if bad is not None:
        raise ClosednessError(bad)
    total = MonomialPoly.zero(n)
    for j, gj in enumerate(g):
        for i in range(j):
            gj = exact_S(gj, i)
        total = total + exact_T(gj, j)
    return total


def poly_form(g, alpha_class=1.0, name="g"):
    """Wrap a list of polynomials as a numeric :class:`Form01`."""
    return Form01([c.to_function(name=f"{name}{i}") for i, c in enumerate(g)], alpha_class=alpha_class, name=name)


def all_monomials(n, max_exp):
    for exps in product(product(range(max_exp + 1), repeat=2), repeat=n):
        yield MonomialPoly.monomial(exps)
