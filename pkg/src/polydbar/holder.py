"""Empirical Hölder seminorms and exponent fits.

The exponent is read off a log-log fit of ``sup |f(x) - f(y)|`` against the
pair distance ``s`` over dyadic scales. At each scale pairs ``(x, x + s·d)``
are drawn with ``d`` a random unit direction in ``R^{2n}``; pairs leaving the
closed polydisc (or the requested sector) are rejected rather than clamped,
so every recorded pair has distance exactly ``s``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .field import DOMAIN_TOL, ScalarFunction

ALPHA_CAP = 1.05
DEFAULT_SCALES = tuple(2.0**-k for k in range(12, 1, -1))
DEFAULT_SEMINORM_ALPHAS = (0.25, 0.5, 0.75, 1.0)
MIN_PAIRS = 16


@dataclass
class HolderEstimate:
    alpha_hat: float
    r2: float
    bins: list  # (scale, sup |Δf|), sorted by scale
    seminorm_at: dict
    pair_count: int
    dropped_scales: list = field(default_factory=list)
    degenerate: bool = False

    def to_dict(self):
        return {
            "alpha_hat": self.alpha_hat,
            "r2": self.r2,
            "pair_count": self.pair_count,
            "degenerate": self.degenerate,
            "dropped_scales": list(self.dropped_scales),
            "seminorm_at": {f"{a:g}": v for a, v in sorted(self.seminorm_at.items())},
            "bins": [[s, v] for s, v in self.bins],
        }


def _as_vector(fs):
    if isinstance(fs, ScalarFunction):
        return [fs]
    fs = list(fs)
    if not fs or any(not isinstance(f, ScalarFunction) for f in fs):
        raise InvalidArgument("expected a ScalarFunction or a non-empty list of them")
    if len({f.n for f in fs}) != 1:
        raise InvalidArgument("all components must share one dimension")
    return fs


def _differences(fs, X, Y):
    """``max_k |f_k(x) - f_k(y)|`` for each pair (rows of X and Y)."""
    out = np.zeros(len(X))
    for f in fs:
        out = np.maximum(out, np.abs(f.evaluate(X) - f.evaluate(Y)))
    return out


def _distances(X, Y):
    return np.sqrt(np.sum(np.abs(np.asarray(X) - np.asarray(Y)) ** 2, axis=1))


def holder_seminorm(f, pairs, alpha):
    """``max |f(x) - f(y)| / |x - y|^alpha`` over the given pairs (Euclidean distance on R^{2n})."""
    if not 0 < alpha <= 1:
        raise InvalidArgument("alpha must lie in (0, 1]")
    fs = _as_vector(f)
    pairs = list(pairs)
    if not pairs:
        return 0.0
    X = np.array([np.asarray(x, dtype=complex).ravel() for x, _ in pairs])
    Y = np.array([np.asarray(y, dtype=complex).ravel() for _, y in pairs])
    d = _distances(X, Y)
    keep = d > 0
    if not keep.all():
        warnings.warn(f"holder_seminorm skipped {int((~keep).sum())} coincident pair(s)", stacklevel=2)
    if not keep.any():
        return 0.0
    diff = _differences(fs, X[keep], Y[keep])
    return float(np.max(diff / d[keep] ** alpha))


class PolydiscSampler:
    """Seeded pair sampler on the closed polydisc.

    A fraction ``bias`` of base points is drawn within one scale of a rough
    point; the rest are uniform. With ``sector`` set, both ends of every pair
    must order the moduli as ``sector`` does, with gaps of at least
    ``sector_margin``.
    """

    def __init__(self, n, seed=0, rough_points=(), bias=0.5, sector=None, sector_margin=0.0,
                 margin=0.0):
        if n < 1:
            raise InvalidArgument("dimension must be >= 1")
        if not 0 <= bias <= 1:
            raise InvalidArgument("bias must lie in [0, 1]")
        self.n = n
        self.rng = np.random.default_rng(seed)
        self.rough_points = np.array([list(p) for p in rough_points], dtype=complex).reshape(-1, n)
        self.bias = bias if len(self.rough_points) else 0.0
        self.sector = tuple(sector) if sector is not None else None
        self.sector_margin = sector_margin
        self.margin = margin

    def uniform(self, count):
        r = (1.0 - self.margin) * np.sqrt(self.rng.random((count, self.n)))
        th = 2 * np.pi * self.rng.random((count, self.n))
        return r * np.exp(1j * th)

    def _directions(self, count):
        v = self.rng.standard_normal((count, 2 * self.n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v[:, : self.n] + 1j * v[:, self.n:]

    def _ball(self, count, radius):
        v = self._directions(count)
        rad = radius * self.rng.random((count, 1)) ** (1.0 / (2 * self.n))
        return v * rad

    def admissible(self, Z):
        ok = np.all(np.abs(Z) <= 1.0 - self.margin + DOMAIN_TOL, axis=1)
        if self.sector is not None:
            mods = np.abs(Z)[:, list(self.sector)]
            gaps = mods[:, :-1] - mods[:, 1:]
            ok &= np.all(gaps >= self.sector_margin, axis=1) if gaps.shape[1] else True
        return ok

    def points(self, count):
        """``count`` admissible points (uniform part only)."""
        out = np.zeros((0, self.n), dtype=complex)
        for _ in range(200):
            Z = self.uniform(max(count, 64))
            out = np.concatenate([out, Z[self.admissible(Z)]])
            if len(out) >= count:
                return out[:count]
        raise InvalidArgument("could not draw admissible points; sector margin too large?")

    def pairs(self, scale, count, attempts=8):
        """Up to ``count`` admissible pairs at distance ``scale``."""
        n_biased = int(round(self.bias * count))
        Xs, Ys = [], []
        got = 0
        for _ in range(attempts):
            need = count - got
            if need <= 0:
                break
            nb = min(n_biased, need) if n_biased else 0
            base = []
            if nb:
                idx = self.rng.integers(0, len(self.rough_points), nb)
                base.append(self.rough_points[idx] + self._ball(nb, scale))
            if need - nb:
                base.append(self.uniform(need - nb))
            X = np.concatenate(base)
            Y = X + scale * self._directions(len(X))
            ok = self.admissible(X) & self.admissible(Y)
            Xs.append(X[ok])
            Ys.append(Y[ok])
            got += int(ok.sum())
        X = np.concatenate(Xs)[:count]
        Y = np.concatenate(Ys)[:count]
        return X, Y


def estimate_exponent(f, sampler: PolydiscSampler, scales=DEFAULT_SCALES, pairs_per_scale=200,
                      min_pairs=MIN_PAIRS, seminorm_alphas=DEFAULT_SEMINORM_ALPHAS):
    fs = _as_vector(f)
    scales = sorted(float(s) for s in scales)
    if not scales or scales[0] < 2.0**-12 * (1 - 1e-12) or scales[-1] > 0.25 * (1 + 1e-12):
        raise InvalidArgument("scales must lie within [2^-12, 2^-2]")
    if fs[0].n != sampler.n:
        raise InvalidArgument("sampler and function dimensions differ")
    bins, dropped = [], []
    seminorm = {a: 0.0 for a in seminorm_alphas}
    total = 0
    for s in scales:
        X, Y = sampler.pairs(s, pairs_per_scale)
        if len(X) < min_pairs:
            dropped.append(s)
            continue
        diff = _differences(fs, X, Y)
        total += len(X)
        sup = float(diff.max())
        bins.append((s, sup))
        for a in seminorm:
            seminorm[a] = max(seminorm[a], sup / s**a)
    positive = [(s, v) for s, v in bins if v > 0]
    if len(positive) < 2:
        return HolderEstimate(ALPHA_CAP, 1.0, bins, seminorm, total, dropped, degenerate=True)
    x = np.log([s for s, _ in positive])
    y = np.log([v for _, v in positive])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    degenerate = len(positive) < len(bins)
    alpha_hat = float(np.clip(slope, 0.0, ALPHA_CAP))
    return HolderEstimate(alpha_hat, r2, bins, seminorm, total, dropped, degenerate)
