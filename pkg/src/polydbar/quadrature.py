"""Quadrature rules on the unit disc, the unit circle, product tori and radial profiles."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, ResourceGuardError

TORUS_NODE_LIMIT = 10**8


@dataclass(frozen=True)
class WeightedNodes:
    """Nodes and positive weights; ``integrate`` applies the rule to sampled values.

    For tori ``nodes`` has shape ``(count, dim)``; otherwise it is one-dimensional.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return np.tensordot(np.asarray(values), self.weights, axes=([-1], [0]))


@lru_cache(maxsize=64)
def _leggauss(count):
    x, w = np.polynomial.legendre.leggauss(count)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(a, b, count):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _leggauss(int(count))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def disc_nodes(radial_count, angular_count):
    """Polar product rule on the unit disc.

    Gauss-Legendre in the radius with the Jacobian ``r`` folded into the
    weights, trapezoid in the angle. Integrates ``ζ^a ζ̄^b`` exactly for
    ``|a - b| < angular_count`` and ``a + b <= 2*radial_count - 2``.
    """
    if radial_count < 2 or angular_count < 2:
        raise InvalidArgument("disc_nodes needs radial_count, angular_count >= 2")
    r, wr = gauss_legendre(0.0, 1.0, radial_count)
    theta = 2.0 * np.pi * np.arange(angular_count) / angular_count
    nodes = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = ((wr * r)[:, None] * np.full(angular_count, 2.0 * np.pi / angular_count)).ravel()
    return WeightedNodes(nodes, weights)


def circle_nodes(m):
    """``m`` equispaced nodes on the unit circle with arc-length weights ``2π/m``."""
    if m < 4:
        raise InvalidArgument(f"circle_nodes needs m >= 4, got {m}")
    theta = 2.0 * np.pi * np.arange(m) / m
    return WeightedNodes(np.exp(1j * theta), np.full(m, 2.0 * np.pi / m))


def check_torus_budget(dim, m):
    if dim < 1:
        raise InvalidArgument("torus dimension must be >= 1")
    if m < 4:
        raise InvalidArgument(f"torus rule needs m >= 4, got {m}")
    if float(m) ** dim > TORUS_NODE_LIMIT:
        raise ResourceGuardError(
            f"torus rule with m={m} in dimension {dim} has {float(m) ** dim:.3g} nodes "
            f"(limit {TORUS_NODE_LIMIT:.0e})"
        )


def torus_nodes(dim, m):
    """Product of ``dim`` circle rules; nodes have shape ``(m**dim, dim)``."""
    check_torus_budget(dim, m)
    circle = circle_nodes(m)
    grids = np.meshgrid(*([circle.nodes] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.full(m**dim, (2.0 * np.pi / m) ** dim)
    return WeightedNodes(nodes, weights)


def _graded_panel(a, b, count, singular_left, singular_right, ratio=0.15, per_level=8):
    """Composite Gauss rule on [a, b], geometrically refined toward singular ends."""
    if singular_left and singular_right:
        mid = 0.5 * (a + b)
        n_left = count // 2
        left = _graded_panel(a, mid, n_left, True, False, ratio, per_level)
        right = _graded_panel(mid, b, count - n_left, False, True, ratio, per_level)
        return np.concatenate([left[0], right[0]]), np.concatenate([left[1], right[1]])
    if not (singular_left or singular_right):
        return gauss_legendre(a, b, max(count, 2))

    levels = max(1, count // per_level)
    q = max(2, count // levels)
    length = b - a
    # distances from the singular end, largest first
    marks = length * ratio ** np.arange(levels)
    marks = np.append(marks, 0.0)
    xs, ws = [], []
    for outer, inner in zip(marks[:-1], marks[1:]):
        if singular_right:
            lo, hi = b - outer, b - inner
        else:
            lo, hi = a + inner, a + outer
        x, w = gauss_legendre(lo, hi, q)
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    order = np.argsort(x)
    return x[order], w[order]


def radial_profile_nodes(t_max, count, exclusions=()):
    """Composite Gauss rule on ``[0, t_max]`` with panel breaks at the exclusion radii.

    Panels adjacent to an exclusion are graded geometrically toward it, so
    integrable logarithmic singularities at those radii are resolved. No node
    coincides with an exclusion.
    """
    if not t_max > 0:
        raise InvalidArgument(f"t_max must be positive, got {t_max}")
    if t_max > 1 + 1e-12:
        raise InvalidArgument(f"t_max must be <= 1, got {t_max}")
    if count < 2:
        raise InvalidArgument("radial_profile_nodes needs count >= 2")
    tol = 1e-12
    excl = sorted(float(e) for e in exclusions if -tol <= e <= t_max + tol)
    inner = []
    for e in excl:
        if tol < e < t_max - tol and (not inner or e - inner[-1] > tol):
            inner.append(e)
    if not excl:
        x, w = gauss_legendre(0.0, t_max, count)
        return WeightedNodes(x, w)

    breaks = [0.0] + inner + [float(t_max)]
    singular = set()
    for e in excl:
        for i, bp in enumerate(breaks):
            if abs(bp - e) <= tol:
                singular.add(i)
    xs, ws = [], []
    for i in range(len(breaks) - 1):
        a, b = breaks[i], breaks[i + 1]
        n_panel = max(8, int(round(count * (b - a) / t_max)))
        x, w = _graded_panel(a, b, n_panel, i in singular, (i + 1) in singular)
        xs.append(x)
        ws.append(w)
    return WeightedNodes(np.concatenate(xs), np.concatenate(ws))
