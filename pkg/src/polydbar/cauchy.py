"""One-variable Cauchy transforms and the canonical dbar solution operator.

Operators are built as lazy :class:`~polydbar.field.ScalarFunction` trees and
evaluated on tensor grids: an operator acting in coordinate ``j`` asks its
child for values on a grid whose ``j``-th axis holds quadrature nodes and
contracts that axis against the target values. Iterated circle integrals
therefore become a single product-torus rule.

Orientation: the solid transform is normalised so that ``T[1](z) = z̄``,
i.e. ``T f(z) = -(1/π) ∫_D f(ζ)/(ζ - z) dA(ζ)`` and ``∂̄ T f = f``.

Disc rules
----------
``spectral`` (default)
    For each radius, the angular integral against ``1/(ζ - z)`` is taken
    from the FFT coefficients of the sampled data (Laurent expansion of the
    kernel), so it stays accurate on the circle ``|ζ| = |z|``; the radius is
    integrated by Gauss-Legendre on ``[0, |z|]`` and ``[|z|, 1]``.
``direct``
    Polar coordinates centred at the target: ``ζ = z + s e^{iψ}``. The
    kernel's ``1/s`` cancels against the area element, leaving a bounded
    integrand. Gauss in ``s`` up to the unit circle, trapezoid in ``ψ``.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import InvalidArgument, NearBoundaryError, OutOfDomain
from .field import DOMAIN_TOL, CompositeFunction, Form01, LinearCombination, Point, ScalarFunction
from .quadrature import check_torus_budget, circle_nodes, gauss_legendre

CHUNK_ELEMENTS = 2_000_000
DISC_METHODS = ("spectral", "direct")
CIRCLE_RULES = ("spectral", "trapezoid")


@dataclass(frozen=True)
class OperatorConfig:
    radial_count: int = 32
    angular_count: int = 64
    circle_count: int = 64
    torus_count: int = 256
    subtraction: bool = True
    disc_method: str = "spectral"
    circle_rule: str = "spectral"
    boundary_margin: float = 1e-3
    henkin_radial: int = 48
    henkin_angular: int = 64

    def __post_init__(self):
        if self.radial_count < 2 or self.angular_count < 4 or self.angular_count % 2:
            raise InvalidArgument("disc rule needs radial_count >= 2 and an even angular_count >= 4")
        if self.circle_count < 4 or self.torus_count < 4:
            raise InvalidArgument("circle and torus rules need at least 4 nodes")
        if self.henkin_radial < 2 or self.henkin_angular < 4 or self.henkin_angular % 2:
            raise InvalidArgument("Henkin rule needs henkin_radial >= 2 and an even henkin_angular >= 4")
        if self.disc_method not in DISC_METHODS:
            raise InvalidArgument(f"disc_method must be one of {DISC_METHODS}")
        if self.circle_rule not in CIRCLE_RULES:
            raise InvalidArgument(f"circle_rule must be one of {CIRCLE_RULES}")
        if not 0 < self.boundary_margin < 0.5:
            raise InvalidArgument("boundary_margin must lie in (0, 0.5)")

    @property
    def disc_rule(self):
        return (self.radial_count, self.angular_count)

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


def _thread_count():
    try:
        return max(1, int(os.environ.get("DBAR_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map, parallel across ``DBAR_THREADS`` worker threads."""
    items = list(items)
    workers = min(_thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _moved(values, axis):
    return np.moveaxis(values, axis, -1)


def _map_axis(child, axes, axis, nodes, reducer, out_len):
    """Evaluate ``child`` with ``axes[axis]`` replaced by ``nodes`` and contract that axis.

    ``reducer(vals, chunk_axes)`` receives values with the node axis last and
    returns ``(..., out_len)``. Large requests are split along another axis.
    """
    axes = [np.asarray(a, dtype=complex).ravel() for a in axes]
    sizes = [len(a) for a in axes]
    others = [k for k in range(len(axes)) if k != axis]
    out_shape = list(sizes)
    out_shape[axis] = out_len
    out = np.empty(out_shape, dtype=complex)
    other_total = int(np.prod([sizes[k] for k in others], dtype=float)) if others else 1
    if out_len == 0 or other_total == 0:
        return out
    total = len(nodes) * other_total
    if total <= CHUNK_ELEMENTS or not others:
        chunks = [(None, slice(None))]
    else:
        ck = max(others, key=lambda k: sizes[k])
        per = max(1, int(CHUNK_ELEMENTS // (total / sizes[ck])))
        chunks = [(ck, slice(s, s + per)) for s in range(0, sizes[ck], per)]
    for ck, sl in chunks:
        sub = list(axes)
        if ck is not None:
            sub[ck] = axes[ck][sl]
        req = list(sub)
        req[axis] = nodes
        vals = _moved(child.grid(req), axis)
        red = np.moveaxis(reducer(vals, sub), -1, axis)
        index = [slice(None)] * len(axes)
        if ck is not None:
            index[ck] = sl
        out[tuple(index)] = red
    return out


def _targets_in_domain(t):
    if np.any(np.abs(t) > 1 + DOMAIN_TOL):
        bad = t[np.abs(t) > 1 + DOMAIN_TOL][0]
        raise OutOfDomain(f"target {bad} lies outside the closed unit disc")


class CircleCauchy(CompositeFunction):
    """Boundary Cauchy integral ``S_j`` in coordinate ``axis``.

    With the ``trapezoid`` rule the kernel ``ζ/(ζ - z)`` is summed directly;
    ``strict`` operators refuse targets within ``boundary_margin`` of the
    circle under either rule; non-strict trapezoid operators switch to the
    spectral rule there. The
    ``spectral`` rule keeps the non-negative Fourier modes of the samples
    (``Σ_{k<m/2} c_k z^k``), which is the boundary value from inside when
    ``|z| = 1``.
    """

    batch_via_grid = True

    def __init__(self, child, axis, cfg, m=None, strict=False):
        if not 0 <= axis < child.n:
            raise InvalidArgument(f"axis {axis} out of range for n={child.n}")
        super().__init__(child.n, [child], f"S{axis}({child.name})")
        self.child = child
        self.axis = axis
        self.cfg = cfg
        self.m = m or cfg.circle_count
        self.strict = strict
        if self.m < 4:
            raise InvalidArgument("circle rule needs m >= 4")

    def _matrix(self, t):
        m = self.m
        zeta = circle_nodes(m).nodes
        mat = np.empty((m, len(t)), dtype=complex)
        near = np.abs(t) > 1 - self.cfg.boundary_margin
        if self.strict and np.any(near):
            raise NearBoundaryError(t[near][0], self.cfg.boundary_margin)
        use_trap = np.zeros(len(t), dtype=bool)
        if self.cfg.circle_rule == "trapezoid":
            use_trap = ~near
        if np.any(use_trap):
            tt = t[use_trap]
            mat[:, use_trap] = zeta[:, None] / (zeta[:, None] - tt[None, :]) / m
        if np.any(~use_trap):
            tt = t[~use_trap]
            k = np.arange(m // 2)
            mat[:, ~use_trap] = (zeta[:, None] ** (-k[None, :])) @ (tt[None, :] ** k[:, None]) / m
        return mat

    def grid(self, axes):
        t = np.asarray(axes[self.axis], dtype=complex).ravel()
        _targets_in_domain(t)
        mat = self._matrix(t)
        nodes = circle_nodes(self.m).nodes
        return _map_axis(self.child, axes, self.axis, nodes, lambda v, _: v @ mat, len(t))


class DiscCauchy(CompositeFunction):
    """Solid Cauchy transform ``T_j`` (``kind='T'``) or its z-derivative ``Π_j`` (``kind='Pi'``)."""

    def __init__(self, child, axis, cfg, kind="T"):
        if not 0 <= axis < child.n:
            raise InvalidArgument(f"axis {axis} out of range for n={child.n}")
        if kind not in ("T", "Pi"):
            raise InvalidArgument("kind must be 'T' or 'Pi'")
        super().__init__(child.n, [child], f"{kind}{axis}({child.name})")
        self.child = child
        self.axis = axis
        self.cfg = cfg
        self.kind = kind

    def grid(self, axes):
        t = np.asarray(axes[self.axis], dtype=complex).ravel()
        _targets_in_domain(t)
        out_shape = [len(np.asarray(a).ravel()) for a in axes]
        out = np.empty(out_shape, dtype=complex)
        if self.cfg.disc_method == "direct":
            groups = self._direct_groups(t)
        else:
            rho = np.round(np.minimum(np.abs(t), 1.0), 15)
            groups = [np.flatnonzero(rho == r) for r in np.unique(rho)]
        for idx in groups:
            sub_axes = list(axes)
            sub_axes[self.axis] = t[idx]
            if self.cfg.disc_method == "direct":
                vals = self._direct(sub_axes, t[idx])
            else:
                vals = self._spectral(sub_axes, t[idx])
            index = [slice(None)] * len(axes)
            index[self.axis] = idx
            out[tuple(index)] = vals
        return out

    def _target_values(self, chunk_axes, targets):
        req = list(chunk_axes)
        req[self.axis] = targets
        return _moved(self.child.grid(req), self.axis)

    # -- spectral rule ----------------------------------------------------
    def _spectral(self, axes, targets):
        cfg = self.cfg
        M = cfg.angular_count
        rho = float(min(abs(targets[0]), 1.0))
        n_r = cfg.radial_count
        r_in, w_in = gauss_legendre(0.0, rho, n_r) if rho > 0 else (np.zeros(0), np.zeros(0))
        r_out, w_out = gauss_legendre(rho, 1.0, n_r) if rho < 1 else (np.zeros(0), np.zeros(0))
        p_in = len(r_in)
        radii = np.concatenate([r_in, r_out])
        theta = 2.0 * np.pi * np.arange(M) / M
        nodes = (radii[:, None] * np.exp(1j * theta)[None, :]).ravel()
        phi = np.angle(targets) if rho > 0 else np.zeros(len(targets))

        if self.kind == "T":
            k_out = np.arange(M // 2 - 1)
            out_idx = k_out + 1
            w_outer = w_out[:, None] * (rho / r_out[:, None]) ** k_out[None, :]
            e_outer = np.exp(1j * np.outer(k_out, phi))
            k_in = np.arange(M // 2)
            w_inner = w_in[:, None] * (r_in[:, None] / rho) ** (k_in[None, :] + 1) if p_in else None
            e_inner = np.exp(-1j * np.outer(k_in + 1, phi))
            sign_inner = -1.0
            corr_weight = np.sum(w_in * r_in) / rho if p_in else 0.0
            corr_phase = np.exp(-1j * phi)
        else:
            k_out = np.arange(1, M // 2 - 1)
            out_idx = k_out + 1
            w_outer = w_out[:, None] * k_out[None, :] * (rho / r_out[:, None]) ** (k_out[None, :] - 1) / r_out[:, None]
            e_outer = np.exp(1j * np.outer(k_out - 1, phi))
            k_in = np.arange(M // 2)
            w_inner = (w_in[:, None] * (k_in[None, :] + 1) * (r_in[:, None] / rho) ** (k_in[None, :] + 1) / rho
                       if p_in else None)
            e_inner = np.exp(-1j * np.outer(k_in + 2, phi))
            sign_inner = 1.0
            corr_weight = np.sum(w_in * r_in) / rho**2 if p_in else 0.0
            corr_phase = np.exp(-2j * phi)
        in_idx = (-k_in) % M
        need_target = p_in > 0 and (self.kind == "Pi" or self.cfg.subtraction)

        def reducer(vals, chunk_axes):
            lead = vals.shape[:-1]
            c = np.fft.fft(vals.reshape(lead + (len(radii), M)), axis=-1) / M
            res = np.zeros(lead + (len(targets),), dtype=complex)
            if len(r_out):
                b_out = np.einsum("...pk,pk->...k", c[..., p_in:, :][..., out_idx], w_outer)
                res += b_out @ e_outer
            if p_in:
                b_in = np.einsum("...pk,pk->...k", c[..., :p_in, :][..., in_idx], w_inner)
                res += sign_inner * (b_in @ e_inner)
            res *= -2.0
            if need_target:
                f_t = self._target_values(chunk_axes, targets)
                if self.kind == "T":
                    # (f - f(z)) in the constant mode, exact T[1] = z̄ added back
                    res += -2.0 * f_t * corr_weight * corr_phase + f_t * np.conj(targets)
                else:
                    res += 2.0 * f_t * corr_weight * corr_phase
            return res

        return _map_axis(self.child, axes, self.axis, nodes, reducer, len(targets))

    # -- direct (target-centred polar) rule --------------------------------
    def _direct_groups(self, t):
        per_target = self.cfg.radial_count * self.cfg.angular_count
        step = max(1, CHUNK_ELEMENTS // (4 * per_target))
        return [np.arange(s, min(s + step, len(t))) for s in range(0, len(t), step)]

    def _direct(self, axes, targets):
        cfg = self.cfg
        M, N = cfg.angular_count, cfg.radial_count
        x, wx = gauss_legendre(0.0, 1.0, N)
        psi = 2.0 * np.pi * np.arange(M) / M
        e = np.exp(1j * psi)
        b = np.real(np.conj(targets)[:, None] * e[None, :])
        smax = -b + np.sqrt(np.maximum(b * b + 1.0 - np.abs(targets)[:, None] ** 2, 0.0))
        s = smax[:, :, None] * x[None, None, :]                       # (A, M, N)
        nodes = (targets[:, None, None] + s * e[None, :, None]).reshape(-1)
        ws = smax[:, :, None] * wx[None, None, :] * (2.0 * np.pi / M)
        if self.kind == "T":
            kern = -(1.0 / np.pi) * ws * np.conj(e)[None, :, None]
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                kern = -(1.0 / np.pi) * np.where(s > 0, ws / s, 0.0) * (np.conj(e) ** 2)[None, :, None]
        A = len(targets)
        kern = kern.reshape(A, M * N)
        subtract = self.kind == "Pi" or cfg.subtraction
        kern_sum = kern.sum(axis=1)

        def reducer(vals, chunk_axes):
            lead = vals.shape[:-1]
            v = vals.reshape(lead + (A, M * N))
            res = np.einsum("...aq,aq->...a", v, kern)
            if subtract:
                f_t = self._target_values(chunk_axes, targets)
                res -= f_t * kern_sum
                if self.kind == "T":
                    res += f_t * np.conj(targets)
            return res

        return _map_axis(self.child, axes, self.axis, nodes, reducer, A)


# -- operator constructors ---------------------------------------------------

def _one_var(f):
    if isinstance(f, ScalarFunction):
        if f.n != 1:
            raise InvalidArgument("expected a one-variable function")
        return f
    return ScalarFunction(lambda z: f(z[0]), 1, smoothness="smooth", name=getattr(f, "__name__", "f"))


def stilde_function(j, f: ScalarFunction, cfg: OperatorConfig):
    """``S̃_j f``: identity for ``j = 0``, else the boundary integrals in coordinates ``0..j-1``."""
    if not 0 <= j < f.n:
        raise InvalidArgument(f"index {j} out of range for n={f.n}")
    out = f
    for axis in range(j):
        out = CircleCauchy(out, axis, cfg)
    return out


def solution_operator(g: Form01, cfg: OperatorConfig):
    """The canonical solution ``T[g] = Σ_j T_j S̃_j g_j`` as a lazy ScalarFunction."""
    terms = [(1.0, DiscCauchy(stilde_function(j, g[j], cfg), j, cfg)) for j in range(g.n)]
    return LinearCombination(terms)


def cauchy_torus(u: ScalarFunction, cfg: OperatorConfig):
    """The Cauchy torus integral ``K = S_{n-1} ... S_0`` on a ``torus_count``-point torus rule."""
    check_torus_budget(u.n, cfg.torus_count)
    out = u
    for axis in range(u.n):
        out = CircleCauchy(out, axis, cfg, m=cfg.torus_count)
    return out


def beurling_function(f: ScalarFunction, j: int, cfg: OperatorConfig):
    if f.smoothness == "unknown":
        raise InvalidArgument("Π_j needs data of known smoothness; the principal value may diverge")
    return DiscCauchy(f, j, cfg, kind="Pi")


def _scalar_at(fn, z):
    z = Point(z)
    return complex(fn.grid([np.array([c]) for c in z]).reshape(()))


def _check_disc_target(z):
    if abs(z) >= 1:
        raise OutOfDomain(f"target {z} is not inside the unit disc")


def cauchy_disc_T(f, z, cfg: OperatorConfig):
    """``(1/2πi) ∫_D f(ζ)/(ζ - z) dζ∧dζ̄`` for a one-variable oracle ``f``; ``T[1](z) = z̄``."""
    _check_disc_target(complex(z))
    return _scalar_at(DiscCauchy(_one_var(f), 0, cfg), [z])


def cauchy_circle_S(f, z, cfg: OperatorConfig):
    """``(1/2πi) ∮ f(ζ)/(ζ - z) dζ`` for a one-variable oracle ``f``."""
    _check_disc_target(complex(z))
    return _scalar_at(CircleCauchy(_one_var(f), 0, cfg, strict=True), [z])


def op_Tj(g_comp: ScalarFunction, j, z, cfg: OperatorConfig):
    z = Point(z)
    _check_disc_target(z[j])
    return _scalar_at(DiscCauchy(g_comp, j, cfg), z)


def op_Stilde(j, f: ScalarFunction, z, cfg: OperatorConfig):
    z = Point(z)
    if j == 0:
        return f(z)
    strict = [CircleCauchy(f, 0, cfg, strict=True)]
    for axis in range(1, j):
        strict.append(CircleCauchy(strict[-1], axis, cfg, strict=True))
    return _scalar_at(strict[-1], z)


def op_T(g: Form01, z, cfg: OperatorConfig):
    z = Point(z)
    if not z.interior:
        raise OutOfDomain(f"{z} is not interior")
    return _scalar_at(solution_operator(g, cfg), z)


def op_K(u: ScalarFunction, z, cfg: OperatorConfig):
    z = Point(z)
    if z.margin < cfg.boundary_margin:
        raise NearBoundaryError(max(z, key=abs), cfg.boundary_margin)
    return _scalar_at(cauchy_torus(u, cfg), z)


def op_Pij(f: ScalarFunction, j, z, cfg: OperatorConfig):
    z = Point(z)
    _check_disc_target(z[j])
    return _scalar_at(beurling_function(f, j, cfg), z)


def solve_dbar(g: Form01, points, cfg: OperatorConfig):
    """Evaluate ``T[g]`` at each point; per-point failures are collected, not raised."""
    sol = solution_operator(g, cfg)
    started = time.perf_counter()

    def one(p):
        try:
            pt = Point(p)
            if not pt.interior:
                raise OutOfDomain(f"{pt} is not interior")
            return sol(pt), None
        except Exception as exc:  # noqa: BLE001 - reported per point
            return complex("nan"), f"{type(exc).__name__}: {exc}"

    results = parallel_map(one, list(points))
    values = [v for v, _ in results]
    lookups = sol.cache_hits + sol.cache_misses
    diagnostics = {
        "wall_time_s": time.perf_counter() - started,
        "cache_hit_rate": (sol.cache_hits / lookups) if lookups else 0.0,
        "errors": {i: e for i, (_, e) in enumerate(results) if e is not None},
        "settings": cfg.to_dict(),
    }
    return values, diagnostics
