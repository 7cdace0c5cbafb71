"""Henkin's integral formula on the polydisc, evaluated sector by sector.

On a sector ``|z_{σ(0)}| > ... > |z_{σ(n-1)}|`` each surviving term freezes
the coordinates in an index set ``J`` at ``z_J`` and integrates the remaining
``p = n - r`` coordinates over the skeleton family

    ζ_k = t e^{iθ_k},  0 <= t <= B,  θ ∈ [0, 2π)^p,

with ``B = min_{j∈J} |z_j|`` (``B = 1`` when ``J`` is empty). Pulling back
``dζ̄_{k_s} ∧ dζ_{k_1} ∧ ... ∧ dζ_{k_p}`` to ``(t, θ)`` gives a term

    I = 2 ∫_0^B dt/t  mean_θ[ g_{k_s}(ζ_K, z_J) ζ̄_{k_s} Π_{l∈K} ζ_l / (ζ_l - z_l) ]

and ``H[g](z) = -Σ c(n, r) I`` with signs ``c(n, r) = ±1``.

The angular mean is computed spectrally: after an FFT over the torus, each
Cauchy factor ``ζ/(ζ - z)`` acts diagonally on Fourier modes through its
Laurent expansion, which stays exact when ``t`` crosses ``|z_l|``.
"""

from dataclasses import dataclass
from itertools import combinations, permutations, product

import numpy as np

from .errors import CalibrationError, InvalidArgument, OutOfDomain, SectorTieError
from .field import Form01, Point, ScalarFunction
from .quadrature import radial_profile_nodes

DEFAULT_TIE_TOL = 1e-9
CALIBRATION_TOL = 1e-2
_CHUNK = 1_000_000


@dataclass(frozen=True)
class SectorPermutation:
    """``sigma`` lists coordinate indices by strictly decreasing modulus."""

    sigma: tuple
    margin: float

    def __post_init__(self):
        if sorted(self.sigma) != list(range(len(self.sigma))):
            raise InvalidArgument(f"{self.sigma} is not a permutation of 0..{len(self.sigma) - 1}")

    @property
    def n(self):
        return len(self.sigma)


def sector_of(z, tie_tol=DEFAULT_TIE_TOL):
    z = Point(z)
    if not z.interior:
        raise OutOfDomain(f"{z} is not interior")
    mods = np.abs(np.array(z.coords))
    sigma = tuple(int(i) for i in np.argsort(-mods, kind="stable"))
    gaps = [mods[sigma[i]] - mods[sigma[i + 1]] for i in range(len(sigma) - 1)]
    margin = float(min(gaps)) if gaps else float("inf")
    if margin <= tie_tol:
        raise SectorTieError(f"{z} lies on a sector boundary (modulus gap {margin:.3g})")
    return SectorPermutation(sigma, margin)


@dataclass(frozen=True)
class HenkinTerm:
    """One skeleton integral: ``J`` frozen, ``K`` integrated, ``g_s`` carries the area factor."""

    r: int
    J: tuple
    K: tuple
    s: int
    bound: float


def henkin_terms(z, sigma: SectorPermutation, prefixes_only=False):
    """Non-vanishing terms on the sector of ``z``.

    ``J`` runs over every subset of size ``r < n``, listed in sector order,
    and ``s`` over the complement. ``prefixes_only`` keeps just the sector
    prefixes ``J = sigma[:r]``; that shorter list drops terms that do not
    vanish and is kept only for comparison.
    """
    z = Point(z)
    if sigma.n != z.n:
        raise InvalidArgument("sector and point dimensions differ")
    terms = []
    for r in range(z.n):
        subsets = [sigma.sigma[:r]] if prefixes_only else combinations(sigma.sigma, r)
        for J in subsets:
            K = tuple(k for k in range(z.n) if k not in J)
            bound = min(abs(z[j]) for j in J) if J else 1.0
            for s in K:
                terms.append(HenkinTerm(r, J, K, s, float(bound)))
    return terms


def _kernel_modes(t, zl, M):
    """Fourier weights of ``ζ/(ζ - z)`` on ``|ζ| = t`` paired against mode ``m`` of the data."""
    m = np.fft.fftfreq(M, 1.0 / M).astype(int)
    u = np.zeros((len(t), M), dtype=complex)
    t = np.asarray(t, dtype=float)[:, None]
    if zl == 0:
        u[:, m == 0] = 1.0
    else:
        outer = (t > abs(zl))[:, 0]
        pos = m >= 0
        neg = m <= -1
        u[np.ix_(outer, pos)] = (zl / t[outer]) ** m[pos]
        u[np.ix_(~outer, neg)] = -((t[~outer] / zl) ** (-m[neg]))
    u[:, M // 2] = 0.0
    return u


def skeleton_integral(sample, zK, s, bound, radial, M):
    """``2 ∫_0^bound dt/t mean_θ[F ζ̄_s Π_l ζ_l/(ζ_l - z_l)]`` for ``F = sample(zeta_axes)``.

    ``sample`` receives ``p`` broadcastable arrays of shape ``(T, 1, .., M, .., 1)``
    (the torus axis ``l`` in position ``1 + l``) and returns values of shape
    ``(T, M, ..., M)``.
    """
    p = len(zK)
    rule = radial_profile_nodes(bound, radial, exclusions=[abs(z) for z in zK])
    theta = 2.0 * np.pi * np.arange(M) / M
    circle = np.exp(1j * theta)
    step = max(1, _CHUNK // M**p)
    total = 0.0 + 0.0j
    letters = "abcdefgh"[:p]
    subscripts = "T" + letters + "," + ",".join("T" + c for c in letters) + "->T"
    for lo in range(0, len(rule), step):
        t = rule.nodes[lo:lo + step]
        w = rule.weights[lo:lo + step]
        axes = []
        for l in range(p):
            shape = [len(t)] + [1] * p
            shape[1 + l] = M
            axes.append((t[:, None] * circle[None, :]).reshape(shape))
        F = np.broadcast_to(np.asarray(sample(axes), dtype=complex), (len(t),) + (M,) * p)
        F = F * np.conj(axes[s])
        C = np.fft.fftn(F, axes=tuple(range(1, p + 1))) / M**p
        kernels = [_kernel_modes(t, zl, M) for zl in zK]
        means = np.einsum(subscripts, C, *kernels)
        total += np.sum(w * means / t)
    return 2.0 * total


def eval_henkin_term(g: Form01, z, term: HenkinTerm, cfg):
    z = Point(z)
    comp = g[term.s]
    K, J = term.K, term.J
    pos = {k: i for i, k in enumerate(K)}

    def sample(axes):
        coords = [axes[pos[k]] if k in pos else np.complex128(z[k]) for k in range(z.n)]
        return comp.values(coords)

    return skeleton_integral(sample, [z[k] for k in K], pos[term.s], term.bound,
                             cfg.henkin_radial, cfg.henkin_angular)


class SignTable:
    """Signs ``c(n, r) = ±1`` for the Henkin terms."""

    def __init__(self, signs=None):
        self.signs = {}
        for (n, r), v in (signs or {}).items():
            if v not in (1, -1):
                raise InvalidArgument(f"sign for (n={n}, r={r}) must be ±1, got {v}")
            if not 0 <= r < n:
                raise InvalidArgument(f"r={r} out of range for n={n}")
            self.signs[(int(n), int(r))] = int(v)

    def __getitem__(self, key):
        try:
            return self.signs[key]
        except KeyError:
            raise InvalidArgument(f"no calibrated sign for (n, r) = {key}") from None

    def __eq__(self, other):
        return isinstance(other, SignTable) and self.signs == other.signs

    def __repr__(self):
        return f"SignTable({self.signs})"

    def covers(self, n):
        return all((n, r) in self.signs for r in range(n))

    def merged(self, other):
        return SignTable({**self.signs, **other.signs})

    def to_json(self):
        return [{"n": n, "r": r, "sign": v} for (n, r), v in sorted(self.signs.items())]

    @classmethod
    def from_json(cls, rows):
        return cls({(int(row["n"]), int(row["r"])): int(row["sign"]) for row in rows})


# Found by calibrate_signs against the exact and numeric T on the manufactured
# corpus (every sector, n = 1, 2, 3); each search had exactly one admissible table.
CALIBRATED_SIGNS = SignTable({(1, 0): 1, (2, 0): 1, (2, 1): 1, (3, 0): 1, (3, 1): 1, (3, 2): 1})


def _term_values(g, z, cfg):
    """Per-``r`` sums of the skeleton integrals at ``z``."""
    sigma = sector_of(z)
    sums = np.zeros(g.n, dtype=complex)
    for term in henkin_terms(z, sigma):
        sums[term.r] += eval_henkin_term(g, z, term, cfg)
    return sums


def op_H(g: Form01, z, signs: SignTable, cfg):
    z = Point(z)
    if z.n != g.n:
        raise InvalidArgument("point and form dimensions differ")
    sums = _term_values(g, z, cfg)
    return complex(-sum(signs[(g.n, r)] * sums[r] for r in range(g.n)))


def calibrate_signs(n, corpus, points, cfg, reference=None, tol=CALIBRATION_TOL):
    """Search every sign table for ``n`` and return the single one with ``max |H - T| < tol``.

    ``reference(g, z)`` gives the value of ``T[g](z)``; by default the numeric
    operator is used.
    """
    from .cauchy import op_T

    corpus = list(corpus)
    points = [Point(p) for p in points]
    if not corpus:
        raise InvalidArgument("calibration corpus is empty")
    if not points:
        raise InvalidArgument("calibration needs at least one point")
    if any(g.n != n for g in corpus) or any(p.n != n for p in points):
        raise InvalidArgument(f"calibration corpus and points must have dimension {n}")
    seen = {sector_of(p).sigma for p in points}
    missing = set(permutations(range(n))) - seen
    if missing:
        raise InvalidArgument(f"calibration points miss sectors {sorted(missing)}")
    reference = reference or (lambda g, z: op_T(g, z, cfg))
    rows = []
    for g in corpus:
        for z in points:
            rows.append((_term_values(g, z, cfg), reference(g, z)))
    passing = []
    errors = {}
    for combo in product((1, -1), repeat=n):
        worst = max(abs(-np.dot(combo, sums) - ref) for sums, ref in rows)
        errors[combo] = float(worst)
        if worst < tol:
            passing.append(combo)
    if len(passing) != 1:
        detail = ", ".join(f"{c}: {e:.3g}" for c, e in errors.items())
        kind = "no sign table" if not passing else "more than one sign table"
        raise CalibrationError(f"{kind} passes at tol={tol} (max errors {detail}); enlarge the corpus")
    return SignTable({(n, r): passing[0][r] for r in range(n)})


def op_P(h: ScalarFunction, z, a, b, cfg):
    """Model operator over the skeleton ``|ζ_1| = ... = |ζ_q| <= |a|``.

    ``h`` lives on ``D^q × D × D`` and is evaluated at ``(ζ, a, b)``. The
    first variable carries the area factor, normalised so that ``h = 1`` and
    ``q = 1`` give ``conj(z)`` whenever ``|z| < |a|``.
    """
    zs = [complex(c) for c in np.atleast_1d(z)]
    q = len(zs)
    if h.n != q + 2:
        raise InvalidArgument(f"h must have dimension q + 2 = {q + 2}, got {h.n}")
    a, b = complex(a), complex(b)
    Point(zs + [a, b])
    if not 0 < abs(a) < 1 or any(abs(c) >= 1 for c in zs):
        raise OutOfDomain("P needs 0 < |a| < 1 and interior z")
    mods = sorted([abs(c) for c in zs] + [abs(a)])
    if any(m2 - m1 <= DEFAULT_TIE_TOL for m1, m2 in zip(mods, mods[1:])):
        raise SectorTieError("two of |z_1|, ..., |z_q|, |a| coincide")

    def sample(axes):
        return h.values(list(axes) + [np.complex128(a), np.complex128(b)])

    return complex(-skeleton_integral(sample, zs, 0, abs(a), cfg.henkin_radial, cfg.henkin_angular))
