"""Functions and (0,1)-forms on the closed polydisc.

A :class:`ScalarFunction` wraps a vectorised evaluator ``fn(z)`` where ``z`` is
a sequence of ``n`` mutually broadcastable complex arrays (one per
coordinate). Operators in :mod:`polydbar.cauchy` build on the ``grid``
method, which evaluates on a tensor grid given one 1-D array per axis.

Coordinate indices are 0-based throughout the Python API.
"""

import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument, OutOfDomain, StencilOutOfDomain

DOMAIN_TOL = 1e-12
SMOOTHNESS_TAGS = ("holomorphic-component", "smooth", "hoelder", "unknown")
_QUANTUM = 1e-14


class Point:
    """A point of the closed polydisc."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        if isinstance(coords, Point):
            coords = coords.coords
        c = tuple(complex(x) for x in np.atleast_1d(coords))
        if not c:
            raise InvalidArgument("a point needs at least one coordinate")
        for x in c:
            if abs(x) > 1 + DOMAIN_TOL:
                raise OutOfDomain(f"coordinate {x} lies outside the closed unit disc")
        self.coords = c

    @property
    def n(self):
        return len(self.coords)

    @property
    def interior(self):
        return all(abs(x) < 1 for x in self.coords)

    @property
    def margin(self):
        """Distance of the largest coordinate modulus from 1."""
        return 1.0 - max(abs(x) for x in self.coords)

    def with_coord(self, j, value):
        c = list(self.coords)
        c[j] = complex(value)
        return Point(c)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, j):
        return self.coords[j]

    def __eq__(self, other):
        return isinstance(other, Point) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"Point({', '.join(f'{x:.6g}' for x in self.coords)})"


def as_points(points, n=None):
    """Coerce a point or a list of points to a complex array of shape (P, n)."""
    arr = np.asarray([tuple(Point(p)) for p in points], dtype=complex)
    if arr.size == 0:
        return np.zeros((0, n or 0), dtype=complex)
    if n is not None and arr.shape[1] != n:
        raise InvalidArgument(f"expected points of dimension {n}, got {arr.shape[1]}")
    return arr


def axis_coords(axes):
    """Broadcastable per-axis coordinate arrays for a tensor grid."""
    n = len(axes)
    out = []
    for k, a in enumerate(axes):
        shape = [1] * n
        shape[k] = -1
        out.append(np.asarray(a, dtype=complex).reshape(shape))
    return out


def _combined_tag(funcs):
    tags = [f.smoothness for f in funcs]
    if "unknown" in tags:
        return "unknown", None
    if "hoelder" in tags:
        alphas = [f.alpha for f in funcs if f.smoothness == "hoelder" and f.alpha is not None]
        return "hoelder", (min(alphas) if alphas else None)
    if all(t == "holomorphic-component" for t in tags):
        return "holomorphic-component", None
    return "smooth", None


class ScalarFunction:
    """Evaluation oracle for a complex function on the closed polydisc.

    ``derivatives`` optionally maps ``(j, conjugate)`` to a ScalarFunction with
    the exact Wirtinger derivative; ``rough_points`` lists boundary points where
    the function attains its worst Hölder behaviour (used by samplers).
    """

    def __init__(self, fn: Callable, n: int, smoothness="unknown", alpha=None, name=None,
                 derivatives=None, rough_points=()):
        if n < 1:
            raise InvalidArgument("dimension must be >= 1")
        if smoothness not in SMOOTHNESS_TAGS:
            raise InvalidArgument(f"unknown smoothness tag {smoothness!r}")
        if smoothness == "hoelder" and alpha is not None and not 0 < alpha <= 1:
            raise InvalidArgument("Hölder exponent must lie in (0, 1]")
        self.fn = fn
        self.n = n
        self.smoothness = smoothness
        self.alpha = alpha
        self.name = name or getattr(fn, "__name__", "f")
        self.derivatives = dict(derivatives or {})
        self.rough_points = tuple(tuple(complex(c) for c in p) for p in rough_points)
        self._memo = {}
        self._lock = threading.Lock()
        self.cache_hits = 0
        self.cache_misses = 0

    # -- evaluation -----------------------------------------------------
    def values(self, coords):
        """Evaluate on broadcastable coordinate arrays; returns the broadcast shape."""
        coords = [np.asarray(c, dtype=complex) for c in coords]
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        out = np.asarray(self.fn(coords), dtype=complex)
        if out.shape != shape:
            out = np.broadcast_to(out, shape)
        return out

    def grid(self, axes):
        """Values on the tensor grid spanned by one 1-D array per axis."""
        if len(axes) != self.n:
            raise InvalidArgument(f"expected {self.n} axes, got {len(axes)}")
        return np.array(self.values(axis_coords(axes)), dtype=complex)

    def evaluate(self, points):
        """Values at an array of points of shape (P, n)."""
        pts = np.asarray(points, dtype=complex).reshape(-1, self.n)
        if len(pts) == 0:
            return np.zeros(0, dtype=complex)
        return np.array(self.values([pts[:, k] for k in range(self.n)]), dtype=complex)

    def __call__(self, *point):
        if len(point) == 1 and (isinstance(point[0], Point) or np.ndim(point[0]) >= 1):
            point = tuple(point[0])
        if len(point) != self.n:
            raise InvalidArgument(f"expected {self.n} coordinates, got {len(point)}")
        key = tuple((round(complex(c).real / _QUANTUM), round(complex(c).imag / _QUANTUM)) for c in point)
        with self._lock:
            if key in self._memo:
                self.cache_hits += 1
                return self._memo[key]
        value = complex(self.evaluate(np.asarray([point], dtype=complex))[0])
        with self._lock:
            # first writer wins so repeated calls stay bit-identical
            value = self._memo.setdefault(key, value)
            self.cache_misses += 1
        return value

    def clear_cache(self):
        with self._lock:
            self._memo.clear()
            self.cache_hits = self.cache_misses = 0

    # -- algebra --------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, ScalarFunction):
            return LinearCombination([(1.0, self), (1.0, other)])
        return LinearCombination([(1.0, self), (complex(other), constant(1.0, self.n))])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __neg__(self):
        return LinearCombination([(-1.0, self)])

    def __mul__(self, other):
        if isinstance(other, ScalarFunction):
            return Product(self, other)
        return LinearCombination([(complex(other), self)])

    __rmul__ = __mul__

    def __repr__(self):
        return f"ScalarFunction({self.name}, n={self.n}, {self.smoothness})"


class CompositeFunction(ScalarFunction):
    """Base for functions defined through other ScalarFunctions.

    Subclasses implement ``grid``. Point evaluation loops over points with
    singleton axes; subclasses that are cheap to evaluate on a product of
    target sets set ``batch_via_grid``.
    """

    batch_via_grid = False
    max_batch_grid = 200_000

    def __init__(self, n, children, name):
        smooth, alpha = _combined_tag(children)
        super().__init__(self._no_fn, n, smoothness=smooth, alpha=alpha, name=name)
        self.children = tuple(children)
        rough = []
        for c in children:
            rough.extend(c.rough_points)
        self.rough_points = tuple(dict.fromkeys(rough))

    @staticmethod
    def _no_fn(coords):  # pragma: no cover - never called
        raise NotImplementedError

    def values(self, coords):
        coords = np.broadcast_arrays(*[np.asarray(c, dtype=complex) for c in coords])
        shape = coords[0].shape
        pts = np.stack([c.ravel() for c in coords], axis=-1)
        return self.evaluate(pts).reshape(shape)

    def evaluate(self, points):
        pts = np.asarray(points, dtype=complex).reshape(-1, self.n)
        if len(pts) == 0:
            return np.zeros(0, dtype=complex)
        if self.batch_via_grid and len(pts) > 1:
            uniq = [np.unique(pts[:, k], return_inverse=True) for k in range(self.n)]
            size = int(np.prod([len(u[0]) for u in uniq], dtype=float))
            if size <= self.max_batch_grid:
                g = self.grid([u[0] for u in uniq])
                idx = tuple(u[1].ravel() for u in uniq)
                return np.array(g[idx], dtype=complex)
        out = np.empty(len(pts), dtype=complex)
        for i, p in enumerate(pts):
            out[i] = self.grid([p[k:k + 1] for k in range(self.n)]).reshape(())
        return out


class LinearCombination(CompositeFunction):
    def __init__(self, terms):
        terms = [(complex(c), f) for c, f in terms]
        n = terms[0][1].n
        if any(f.n != n for _, f in terms):
            raise InvalidArgument("dimension mismatch in linear combination")
        super().__init__(n, [f for _, f in terms], "lincomb")
        self.terms = terms

    def grid(self, axes):
        out = None
        for c, f in self.terms:
            v = c * f.grid(axes)
            out = v if out is None else out + v
        return out

    def evaluate(self, points):
        out = None
        for c, f in self.terms:
            v = c * f.evaluate(points)
            out = v if out is None else out + v
        return out


class Product(CompositeFunction):
    def __init__(self, left, right):
        if left.n != right.n:
            raise InvalidArgument("dimension mismatch in product")
        super().__init__(left.n, [left, right], "product")
        self.left, self.right = left, right

    def grid(self, axes):
        return self.left.grid(axes) * self.right.grid(axes)

    def evaluate(self, points):
        return self.left.evaluate(points) * self.right.evaluate(points)


def constant(value, n):
    value = complex(value)
    return ScalarFunction(lambda z: np.full((), value), n, smoothness="holomorphic-component",
                          name=f"const({value})")


def coordinate(j, n, conjugate=False):
    """The function ``z_j`` (or ``z̄_j``)."""
    if conjugate:
        f = ScalarFunction(lambda z: np.conj(z[j]), n, smoothness="smooth", name=f"conj(z{j})")
    else:
        f = ScalarFunction(lambda z: z[j], n, smoothness="holomorphic-component", name=f"z{j}")
    return f


@dataclass
class Form01:
    """A (0,1)-form ``Σ g_i dz̄_i``; ``alpha_class`` is its nominal Hölder exponent."""

    components: Sequence[ScalarFunction]
    alpha_class: float = 1.0
    name: str = "g"
    rough_points: tuple = field(default=())

    def __post_init__(self):
        self.components = tuple(self.components)
        if not self.components:
            raise InvalidArgument("a form needs at least one component")
        n = self.components[0].n
        if len(self.components) != n or any(c.n != n for c in self.components):
            raise InvalidArgument(
                f"a (0,1)-form on a {n}-dimensional polydisc needs {n} components of dimension {n}"
            )
        if not self.rough_points:
            rough = []
            for c in self.components:
                rough.extend(c.rough_points)
            self.rough_points = tuple(dict.fromkeys(rough))

    @property
    def n(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def combine(self, scale, other):
        """The form ``scale * self + other``."""
        return Form01([scale * a + b for a, b in zip(self.components, other.components)],
                      alpha_class=min(self.alpha_class, other.alpha_class))


def slice_function(f: ScalarFunction, fixed, free_index: int):
    """One-variable oracle ``ζ ↦ f(z_0, ..., ζ, ..., z_{n-1})`` with the other coordinates frozen."""
    fixed = Point(fixed)
    if fixed.n != f.n:
        raise InvalidArgument(f"point has dimension {fixed.n}, function has {f.n}")
    if not 0 <= free_index < f.n:
        raise InvalidArgument(f"free index {free_index} out of range for n={f.n}")

    def one_var(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        axes = [np.array([c]) for c in fixed]
        axes[free_index] = zeta.ravel()
        return f.grid(axes).reshape(zeta.shape)

    return one_var


def _stencil(z, j, h):
    z = Point(z)
    if h <= 0:
        raise InvalidArgument("finite-difference step must be positive")
    zj = z[j]
    steps = np.array([zj + h, zj - h, zj + 1j * h, zj - 1j * h])
    if np.any(np.abs(steps) > 1 + DOMAIN_TOL):
        raise StencilOutOfDomain(
            f"stencil of width {h:g} around z_{j} = {zj:.6g} leaves the closed disc"
        )
    return z, steps


def _fd_combine(v, h, conjugate):
    dx = v[..., 0] - v[..., 1]
    dy = v[..., 2] - v[..., 3]
    if conjugate:
        return (dx + 1j * dy) / (4 * h)
    return (dx - 1j * dy) / (4 * h)


def wirtinger_fd(f: ScalarFunction, z, j: int, h: float = 1e-3, conjugate: bool = False):
    """Central-difference Wirtinger derivative ``∂f/∂z_j`` (or ``∂f/∂z̄_j``) at ``z``."""
    if not 0 <= j < f.n:
        raise InvalidArgument(f"index {j} out of range for n={f.n}")
    z, steps = _stencil(z, j, h)
    axes = [np.array([c]) for c in z]
    axes[j] = steps
    v = f.grid(axes).reshape(4)
    return complex(_fd_combine(v, h, conjugate))


def partial(f: ScalarFunction, j: int, conjugate=False, h=1e-6):
    """``∂f/∂z_j`` as a ScalarFunction: exact when known, otherwise a central difference.

    The difference fallback evaluates ``f`` slightly outside the polydisc near
    the boundary, so it is only meaningful for functions given by formulas
    that extend past the closed polydisc.
    """
    key = (j, bool(conjugate))
    if key in f.derivatives:
        return f.derivatives[key]

    def fd(z):
        z = list(z)
        vals = []
        for step in (h, -h, 1j * h, -1j * h):
            zz = list(z)
            zz[j] = z[j] + step
            vals.append(f.values(zz))
        v = np.stack(np.broadcast_arrays(*vals), axis=-1)
        return _fd_combine(v, h, conjugate)

    return ScalarFunction(fd, f.n, smoothness=f.smoothness, alpha=f.alpha,
                          name=f"d{'bar' if conjugate else ''}_{j}({f.name})")


def check_dbar_closed(g: Form01, points, h: float = 1e-4):
    """Max over points and pairs ``i < j`` of ``|∂̄_j g_i − ∂̄_i g_j|`` by finite differences."""
    n = g.n
    worst = 0.0
    if n == 1:
        return worst
    for p in points:
        p = Point(p)
        dbar = {}
        for i in range(n):
            for j in range(n):
                if i != j:
                    dbar[i, j] = wirtinger_fd(g[i], p, j, h, conjugate=True)
        for i in range(n):
            for j in range(i + 1, n):
                worst = max(worst, abs(dbar[i, j] - dbar[j, i]))
    return worst
