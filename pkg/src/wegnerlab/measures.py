"""Single-site probability laws and their concentration modulus.

Every law here has bounded support and exposes

* ``sample(rng, size)`` -- draws from a :class:`numpy.random.Generator`,
* ``cdf(x)`` -- the distribution function (right-continuous),
* ``modulus(eps)`` -- ``(s, err)`` where ``s`` approximates
  ``sup_E mu([E, E + eps])`` and the true value lies in ``[s, s + err]``.

The four families cover the regimes that matter for continuity of the
integrated density of states: bounded densities (Lipschitz), the
middle-thirds Cantor law (Hoelder with exponent ``log 2 / log 3``), purely
atomic laws (no vanishing modulus) and finite-range correlated
combinations of an iid base law.

Measures round-trip through JSON dictionaries tagged with ``"kind"``; see
``docs/formats.md``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidMeasure

CANTOR_DIMENSION = math.log(2) / math.log(3)
MASS_TOL = 1e-12

# Level of the cell enumeration used for the Cantor modulus (2**16 candidates).
CANTOR_ENUM_DEPTH = 16


def _check_eps(eps):
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps!r}")


@dataclass(frozen=True)
class UniformDensity:
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.hi > self.lo):
            raise InvalidMeasure(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def support(self):
        return (float(self.lo), float(self.hi))

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size=size)

    def cdf(self, x):
        return np.clip((np.asarray(x, float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def modulus(self, eps):
        _check_eps(eps)
        return min(eps / (self.hi - self.lo), 1.0), 0.0

    def affine(self, scale, shift=0.0):
        a, b = sorted((scale * self.lo + shift, scale * self.hi + shift))
        return UniformDensity(a, b)

    def to_dict(self):
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class PiecewiseLinearDensity:
    """Density interpolating linearly between ``knots`` and zero outside.

    ``knots`` is a sequence of ``(point, density)`` pairs with strictly
    increasing points and nonnegative densities integrating to one.
    """

    knots: tuple

    def __post_init__(self):
        pts = np.array([k[0] for k in self.knots], float)
        vals = np.array([k[1] for k in self.knots], float)
        if len(pts) < 2 or np.any(np.diff(pts) <= 0):
            raise InvalidMeasure("knots need at least two strictly increasing points")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise InvalidMeasure("density values must be finite and nonnegative")
        mass = np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts))
        if abs(mass - 1.0) > MASS_TOL:
            raise InvalidMeasure(f"density integrates to {mass!r}, not 1")
        object.__setattr__(self, "knots", tuple((float(p), float(v)) for p, v in self.knots))

    @classmethod
    def normalized(cls, knots):
        pts = np.array([k[0] for k in knots], float)
        vals = np.array([k[1] for k in knots], float)
        mass = np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts))
        if not mass > 0:
            raise InvalidMeasure("density has zero mass")
        return cls(tuple(zip(pts.tolist(), (vals / mass).tolist())))

    @property
    def _arrays(self):
        pts = np.array([k[0] for k in self.knots])
        vals = np.array([k[1] for k in self.knots])
        return pts, vals

    @property
    def support(self):
        return (self.knots[0][0], self.knots[-1][0])

    def density(self, x):
        pts, vals = self._arrays
        return np.interp(x, pts, vals, left=0.0, right=0.0)

    def cdf(self, x):
        pts, vals = self._arrays
        x = np.asarray(x, float)
        widths = np.diff(pts)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * widths)])
        k = np.clip(np.searchsorted(pts, x, side="right") - 1, 0, len(pts) - 2)
        t = np.clip(x - pts[k], 0.0, widths[k])
        slope = (vals[k + 1] - vals[k]) / widths[k]
        out = cum[k] + vals[k] * t + 0.5 * slope * t * t
        out = np.where(x < pts[0], 0.0, out)
        return np.clip(np.where(x >= pts[-1], 1.0, out), 0.0, 1.0)

    def sample(self, rng, size=None):
        pts, vals = self._arrays
        u = rng.random(size)
        widths = np.diff(pts)
        masses = 0.5 * (vals[1:] + vals[:-1]) * widths
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(masses) - 1)
        # solve  f_k t + (slope/2) t^2 = u - cum_k  for t in [0, width_k]
        r = u - cum[k]
        f0 = vals[k]
        slope = (vals[k + 1] - vals[k]) / widths[k]
        disc = np.sqrt(np.maximum(f0 * f0 + 2.0 * slope * r, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(slope) > 1e-14, 2.0 * r / (f0 + disc), r / np.where(f0 > 0, f0, 1.0))
        return pts[k] + np.clip(t, 0.0, widths[k])

    def modulus(self, eps):
        _check_eps(eps)
        pts, vals = self._arrays
        # g(E) = F(E+eps) - F(E) is piecewise quadratic between these breakpoints
        brk = np.unique(np.concatenate([pts, pts - eps]))
        cand = [brk]
        for a, b in zip(brk[:-1], brk[1:]):
            m = 0.5 * (a + b)
            # g' = f(E+eps) - f(E) is linear on (a, b); find its zero
            ga = self.density(a + eps) - self.density(a)
            gb = self.density(b + eps) - self.density(b)
            if ga > 0 >= gb and ga != gb:
                cand.append(np.array([a + (b - a) * ga / (ga - gb)]))
            else:
                cand.append(np.array([m]))
        e = np.concatenate(cand)
        g = self.cdf(e + eps) - self.cdf(e)
        return float(min(g.max(), 1.0)), 1e-12

    def affine(self, scale, shift=0.0):
        if scale == 0:
            raise InvalidMeasure("affine scale must be nonzero")
        new = [(scale * p + shift, v / abs(scale)) for p, v in self.knots]
        if scale < 0:
            new = new[::-1]
        return PiecewiseLinearDensity(tuple(new))

    def to_dict(self):
        return {"kind": "piecewise_linear", "knots": [list(k) for k in self.knots]}


def _cantor_cdf_unit(y, max_digits=60):
    """Cantor function on [0, 1], clipped outside."""
    y = np.clip(np.asarray(y, float), 0.0, 1.0)
    out = np.zeros_like(y)
    scale = np.full_like(y, 0.5)
    active = y < 1.0
    out[~active] = 1.0
    y = np.where(active, y, 0.0)
    for _ in range(max_digits):
        if not active.any():
            break
        y = y * 3.0
        d = np.floor(y)
        y = y - d
        hit_mid = active & (d == 1)
        high = active & (d >= 2)
        out = out + np.where(hit_mid | high, scale, 0.0)
        active = active & ~hit_mid
        scale = scale * 0.5
    return out


@dataclass(frozen=True)
class CantorMeasure:
    """Middle-thirds Cantor law on ``[offset, offset + width]``.

    Samples are drawn from the level-``depth`` approximation: ``depth`` iid
    ternary digits in ``{0, 2}``, so each sample is a left endpoint of a
    level-``depth`` cell (resolution ``3**-depth``).
    """

    depth: int = 30
    offset: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 1:
            raise InvalidMeasure("depth must be a positive integer")
        if not self.width > 0:
            raise InvalidMeasure("width must be positive")

    @property
    def support(self):
        return (self.offset, self.offset + self.width)

    def sample(self, rng, size=None):
        n = 1 if size is None else int(np.prod(size))
        digits = rng.integers(0, 2, size=(n, self.depth)) * 2.0
        weights = 3.0 ** -np.arange(1, self.depth + 1)
        unit = digits @ weights
        out = self.offset + self.width * unit
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def cdf(self, x):
        return _cantor_cdf_unit((np.asarray(x, float) - self.offset) / self.width)

    def modulus(self, eps):
        """Cell-boundary enumeration of ``sup_E mu([E, E+eps])``.

        The supremum is approached with ``E`` in the Cantor set, and moving
        ``E`` to the left endpoint of its level-``d`` cell loses at most
        ``2**-d`` of mass, so the maximum over the ``2**d`` left endpoints is
        within ``2**-d`` of the supremum. The reported bound is ``2 * 2**-d``.
        """
        _check_eps(eps)
        r = eps / self.width
        if r >= 1.0:
            return 1.0, 0.0
        d = min(self.depth, CANTOR_ENUM_DEPTH)
        p3 = 3 ** d
        # left endpoints k -> integer numerators over 3**d with digits in {0, 2}
        k = np.arange(2 ** d, dtype=np.int64)
        num = np.zeros_like(k)
        for bit in range(d):
            num += ((k >> bit) & 1) * 2 * 3 ** bit
        f_left = k / 2.0 ** d
        shift = r * p3
        if abs(shift - round(shift)) < 1e-9 * max(1.0, shift):
            shift = float(round(shift))
        whole = math.floor(shift)
        frac = shift - whole
        q = num + whole
        f_right = _cdf_integer_plus_frac(q, frac, d)
        best = float(np.max(f_right - f_left))
        return min(best, 1.0), 2.0 * 2.0 ** -d

    def affine(self, scale, shift=0.0):
        if scale == 0:
            raise InvalidMeasure("affine scale must be nonzero")
        # the Cantor law is symmetric, so reflection only moves the interval
        lo = min(scale * self.offset, scale * (self.offset + self.width)) + shift
        return CantorMeasure(self.depth, lo, abs(scale) * self.width)

    def to_dict(self):
        return {"kind": "cantor", "depth": self.depth, "offset": self.offset, "width": self.width}


def _cdf_integer_plus_frac(q, frac, d):
    """Cantor function at ``(q + frac) / 3**d`` with exact integer digits."""
    out = np.zeros(q.shape)
    scale = 0.5
    active = q < 3 ** d
    out[~active] = 1.0
    for pos in range(d - 1, -1, -1):
        digit = (q // 3 ** pos) % 3
        mid = active & (digit == 1)
        out += np.where(active & (digit >= 1), scale, 0.0)
        active &= ~mid
        scale *= 0.5
    tail = _cantor_cdf_unit(np.full(q.shape, frac))
    return out + np.where(active, 2.0 * scale * tail, 0.0)


@dataclass(frozen=True)
class Atomic:
    atoms: tuple

    def __post_init__(self):
        if len(self.atoms) == 0:
            raise InvalidMeasure("need at least one atom")
        pts = np.array([a[0] for a in self.atoms], float)
        w = np.array([a[1] for a in self.atoms], float)
        if np.any(w < 0) or not np.all(np.isfinite(pts)):
            raise InvalidMeasure("atom weights must be nonnegative and points finite")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise InvalidMeasure(f"atom weights sum to {w.sum()!r}, not 1")
        order = np.argsort(pts, kind="stable")
        merged = {}
        for p, q in zip(pts[order], w[order]):
            merged[float(p)] = merged.get(float(p), 0.0) + float(q)
        object.__setattr__(self, "atoms", tuple(merged.items()))

    @property
    def points(self):
        return np.array([a[0] for a in self.atoms])

    @property
    def weights(self):
        return np.array([a[1] for a in self.atoms])

    @property
    def support(self):
        return (self.atoms[0][0], self.atoms[-1][0])

    def sample(self, rng, size=None):
        w = self.weights
        return rng.choice(self.points, size=size, p=w / w.sum())

    def cdf(self, x):
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(self.points, np.asarray(x, float), side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def modulus(self, eps):
        _check_eps(eps)
        pts = self.points
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        hi = np.searchsorted(pts, pts + eps, side="right")
        lo = np.arange(len(pts))
        return float(np.max(cum[hi] - cum[lo])), 0.0

    def affine(self, scale, shift=0.0):
        if scale == 0:
            raise InvalidMeasure("affine scale must be nonzero")
        return Atomic(tuple((scale * p + shift, w) for p, w in self.atoms))

    def to_dict(self):
        return {"kind": "atomic", "atoms": [list(a) for a in self.atoms]}


@dataclass(frozen=True)
class ToeplitzCorrelated:
    """Correlated couplings ``eta_j = sum_k alpha_k omega_{j-k}``.

    ``gamma_coeffs`` pairs integer offsets (tuples) with real weights; the
    offset ``0`` must be present and dominate:
    ``sum_{k != 0} |alpha_k| < |alpha_0|``.
    """

    base: object
    gamma_coeffs: tuple = field(default=())

    def __post_init__(self):
        if isinstance(self.base, ToeplitzCorrelated):
            raise InvalidMeasure("base of a correlated law must be a single-site law")
        coeffs = tuple((tuple(int(c) for c in np.atleast_1d(off)), float(a))
                       for off, a in self.gamma_coeffs)
        dims = {len(off) for off, _ in coeffs}
        if len(dims) != 1:
            raise InvalidMeasure("all offsets need the same dimension")
        object.__setattr__(self, "gamma_coeffs", coeffs)
        a0 = self.alpha0
        if a0 == 0:
            raise InvalidMeasure("alpha_0 must be nonzero")
        rest = sum(abs(a) for off, a in coeffs if any(off))
        if not rest < abs(a0):
            raise InvalidMeasure(
                f"dominance fails: sum of |alpha_j|, j != 0, is {rest} >= |alpha_0| = {abs(a0)}")

    @property
    def alpha0(self):
        return sum(a for off, a in self.gamma_coeffs if not any(off))

    @property
    def ndim(self):
        return len(self.gamma_coeffs[0][0])

    @property
    def support(self):
        lo, hi = self.base.support
        total_lo = sum(min(a * lo, a * hi) for _, a in self.gamma_coeffs)
        total_hi = sum(max(a * lo, a * hi) for _, a in self.gamma_coeffs)
        return (total_lo, total_hi)

    def sample(self, rng, size=None):
        """Draw the single-site marginal of ``eta``."""
        n = 1 if size is None else int(np.prod(size))
        omegas = np.stack([np.asarray(self.base.sample(rng, n), float) for _ in self.gamma_coeffs])
        alphas = np.array([a for _, a in self.gamma_coeffs])
        out = alphas @ omegas
        return float(out[0]) if size is None else out.reshape(size)

    def sample_field(self, rng, shape):
        """Draw ``eta`` on a periodic box from iid ``omega`` on the same box."""
        shape = tuple(shape)
        if len(shape) != self.ndim:
            raise InvalidMeasure(f"field shape {shape} does not match offset dimension {self.ndim}")
        omega = np.asarray(self.base.sample(rng, shape), float)
        eta = np.zeros(shape)
        for off, a in self.gamma_coeffs:
            eta += a * np.roll(omega, off, axis=tuple(range(len(shape))))
        return eta

    def cdf(self, x):
        raise NotImplementedError("the marginal CDF of a correlated law is not tabulated")

    def modulus(self, eps):
        return modulus_s(effective_conditional_measure(self), eps)

    def to_dict(self):
        return {"kind": "toeplitz", "base": self.base.to_dict(),
                "gamma_coeffs": [[list(off), a] for off, a in self.gamma_coeffs]}


MEASURE_TYPES = (UniformDensity, PiecewiseLinearDensity, CantorMeasure, Atomic, ToeplitzCorrelated)


def sample(measure, rng, size=None):
    """Draw from ``measure`` using the generator ``rng``."""
    return measure.sample(rng, size)


def sample_field(measure, rng, shape):
    """Couplings on a periodic box: iid for single-site laws, convolved for correlated ones."""
    if isinstance(measure, ToeplitzCorrelated):
        return measure.sample_field(rng, shape)
    return np.asarray(measure.sample(rng, tuple(shape)), float).reshape(shape)


def modulus_s(measure, epsilon):
    """Concentration modulus ``s(eps) = sup_E mu([E, E+eps])``.

    Parameters
    ----------
    measure : measure object
    epsilon : float
        Window length, must be positive.

    Returns
    -------
    value, error_bound : float
        The true modulus lies in ``[value, value + error_bound]``. The bound
        is zero for uniform and atomic laws and at most ``2 * 2**-16`` for
        the Cantor law.
    """
    return measure.modulus(epsilon)


def effective_conditional_measure(corr, shift=0.0):
    """Law of ``eta_j`` given every ``omega_k`` except ``omega_j``.

    Only the ``alpha_0 omega_j`` term stays random, so the conditional law
    is the base law pushed forward by ``w -> alpha_0 w + shift`` where the
    shift collects the frozen neighbours. The modulus does not depend on
    the shift: ``s_eta(eps) = s_base(eps / |alpha_0|)``.
    """
    if not isinstance(corr, ToeplitzCorrelated):
        raise InvalidMeasure("expected a ToeplitzCorrelated law")
    return corr.base.affine(corr.alpha0, shift)


@dataclass(frozen=True)
class ModulusCurve:
    epsilons: np.ndarray
    s_values: np.ndarray
    error_bounds: np.ndarray

    def holder_exponent(self):
        """Least-squares slope of ``log s`` against ``log eps``."""
        slope, _ = np.polyfit(np.log(self.epsilons), np.log(self.s_values), 1)
        return float(slope)


def modulus_curve(measure, epsilons: Sequence[float]) -> ModulusCurve:
    eps = np.sort(np.asarray(epsilons, float))
    vals, errs = zip(*(modulus_s(measure, e) for e in eps))
    return ModulusCurve(eps, np.array(vals), np.array(errs))


def from_dict(data):
    kind = data.get("kind")
    if kind == "uniform":
        return UniformDensity(float(data["lo"]), float(data["hi"]))
    if kind == "piecewise_linear":
        return PiecewiseLinearDensity(tuple(tuple(k) for k in data["knots"]))
    if kind == "cantor":
        return CantorMeasure(int(data.get("depth", 30)), float(data.get("offset", 0.0)),
                             float(data.get("width", 1.0)))
    if kind == "atomic":
        return Atomic(tuple(tuple(a) for a in data["atoms"]))
    if kind == "toeplitz":
        return ToeplitzCorrelated(from_dict(data["base"]),
                                  tuple((tuple(off), a) for off, a in data["gamma_coeffs"]))
    raise InvalidMeasure(f"unknown measure kind {kind!r}")


def dumps(measure):
    return json.dumps(measure.to_dict(), sort_keys=True)


def loads(text):
    return from_dict(json.loads(text))
