"""Trace-norm estimates for localized resolvents and spectral cutoffs.

All quantities are computed exactly for the finite operator: resolvent
powers and smooth functions of ``H0`` go through its eigendecomposition,
and trace norms through the singular values of the localized block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit, NonPositiveData, NotAProjector, ShiftTooSmall, WegnerLabError
from .operators import BoxSpec, LatticeOperator, SingleSitePotential, site_profiles
from .spectra import IntervalPair, SpectralData, eigensolve

SHIFT_MIN = 1e-6


@dataclass(frozen=True)
class CutoffPair:
    """Diagonal cutoffs ``chi_i`` and ``chi_j`` (values in [0, 1]) on the grid."""

    chi_i: np.ndarray
    chi_j: np.ndarray
    separation: float

    def __post_init__(self):
        for c in (self.chi_i, self.chi_j):
            if np.any(c < 0) or np.any(c > 1):
                raise WegnerLabError("cutoff values must lie in [0, 1]")


def _periodic_delta(box, a, b):
    N = box.cells_per_side
    d = (np.asarray(b, float) - np.asarray(a, float)) % N
    return np.minimum(d, N - d)


def cell_cutoff(box: BoxSpec, site, width=1):
    """Indicator of the ``width``-cell cube with lower corner at ``site``."""
    site = np.atleast_1d(site)
    n = box.points_per_cell
    chi = np.zeros(box.shape)
    idx = [np.arange(s * n, (s + width) * n) % box.points_per_side for s in site]
    chi[np.ix_(*idx)] = 1.0
    return chi.ravel()


def cutoff_pair(box: BoxSpec, i, j, width=1):
    i, j = np.atleast_1d(i), np.atleast_1d(j)
    sep = float(np.linalg.norm(_periodic_delta(box, i, j)))
    return CutoffPair(cell_cutoff(box, i, width), cell_cutoff(box, j, width), sep)


def _spectral(H0):
    if isinstance(H0, SpectralData):
        return H0
    return eigensolve(H0, keep_vectors=True)


def trace_norm(M):
    """Sum of singular values."""
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False).sum())


def _localized(F, pair):
    rows = np.flatnonzero(pair.chi_i)
    cols = np.flatnonzero(pair.chi_j)
    return pair.chi_i[rows, None] * F[np.ix_(rows, cols)] * pair.chi_j[None, cols]


def function_of(sd: SpectralData, values):
    """``V diag(values) V^*`` for values given on the eigenvalues."""
    V = sd.vectors()
    return (V * values) @ V.conj().T


def _resolvent_power(sd, M, power):
    shifted = sd.eigenvalues + M
    if shifted[0] < SHIFT_MIN:
        raise ShiftTooSmall(f"min eigenvalue of H0 + M is {shifted[0]:.3g} < {SHIFT_MIN}")
    return function_of(sd, shifted ** (-power))


def cutoff_trace_norm(H0, M, pair: CutoffPair) -> float:
    """``|| chi_i (H0 + M)^{-2} chi_j ||_1``.

    Parameters
    ----------
    H0 : LatticeOperator or SpectralData
    M : float
        Shift with ``H0 + M >= 1e-6``.
    pair : CutoffPair
    """
    return trace_norm(_localized(_resolvent_power(_spectral(H0), M, 2), pair))


def green_decay_rate_1d(M, h=1.0):
    """Decay rate per cell of ``(H0 + M)^{-1}`` for the free 1D lattice Laplacian.

    The kernel of ``(2 - 2cos k)/h**2 + M`` decays as ``exp(-gamma |x|)`` with
    ``cosh(gamma h) = 1 + M h**2 / 2``; ``(H0 + M)^{-2}`` has the same rate
    with a linear prefactor.
    """
    return math.acosh(1.0 + M * h * h / 2.0) / h


def green_kernel_1d(N, M, power=2):
    """Exact ``(H0 + M)^{-power}`` entries ``G(0, x)``, x = 0..N-1, on the N-ring (h = 1)."""
    k = 2 * np.pi * np.arange(N) / N
    symbol = (2 - 2 * np.cos(k) + M) ** (-power)
    return np.real(np.fft.ifft(symbol))


@dataclass(frozen=True)
class DecayFit:
    C0: float
    c0: float
    r_squared: float
    decaying: bool
    stderr_c0: float = 0.0


def decay_fit(separations, norms, min_rate=1e-8) -> DecayFit:
    """Least-squares fit ``log norm = log C0 - c0 * separation``.

    ``decaying`` is False when ``c0 <= min_rate`` (no exponential decay).
    """
    x = np.asarray(separations, float)
    y = np.asarray(norms, float)
    if x.size < 4:
        raise DegenerateFit("need at least 4 points")
    if np.any(y <= 0):
        raise NonPositiveData("norms must be positive for a log fit")
    if np.ptp(x) == 0:
        raise DegenerateFit("all separations are equal")
    ly = np.log(y)
    A = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    dof = max(x.size - 2, 1)
    se = math.sqrt(float(np.sum(resid ** 2)) / dof / float(np.sum((x - x.mean()) ** 2)))
    c0 = float(coef[1])
    if abs(c0) < 1e-12:
        c0 = 0.0
    return DecayFit(float(np.exp(coef[0])), c0, r2, c0 > min_rate, se)


def decay_table(H0, M, box: BoxSpec, separations, origin=0, width=1):
    """Trace norms of ``chi_0 (H0+M)^{-2} chi_s`` for each separation ``s`` (1D and 2D, along x)."""
    sd = _spectral(H0)
    R2 = _resolvent_power(sd, M, 2)
    out = []
    for s in separations:
        i = [origin] + [0] * (box.dimension - 1)
        j = [origin + s] + [0] * (box.dimension - 1)
        out.append(trace_norm(_localized(R2, cutoff_pair(box, i, j, width))))
    return np.array(out)


def write_decay_csv(path, separations, norms, fit: DecayFit):
    import csv

    pred = np.log(fit.C0) - fit.c0 * np.asarray(separations, float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["separation", "trace_norm", "fit_residual"])
        for s, v, p in zip(separations, norms, pred):
            w.writerow([s, repr(float(v)), repr(float(np.log(v) - p))])


def _smoothstep_cinf(x):
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1 - x, 1.0)), 0.0)
    return a / (a + b)


def _smoothstep_poly(x, k):
    """C^k polynomial step of degree 2k+1 on [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    out = np.zeros_like(x)
    for j in range(k + 1):
        out += math.comb(k + j, j) * math.comb(2 * k + 1, k - j) * (-x) ** j
    return out * x ** (k + 1)


@dataclass(frozen=True)
class SmoothCutoff:
    """Plateau function equal to 1 on ``[lo, hi]``, 0 outside ``[lo - ramp, hi + ramp]``.

    ``order=None`` gives a C-infinity ramp; an integer ``k`` gives a C^k
    polynomial ramp.
    """

    lo: float
    hi: float
    ramp: float
    order: int | None = None

    def __call__(self, lam):
        lam = np.asarray(lam, float)
        up = (lam - (self.lo - self.ramp)) / self.ramp
        down = ((self.hi + self.ramp) - lam) / self.ramp
        step = _smoothstep_cinf if self.order is None else (lambda x: _smoothstep_poly(x, self.order))
        return np.minimum(step(up), step(down))


def smooth_kernel_norm(sd0: SpectralData, f, pair: CutoffPair) -> float:
    """``|| chi_i f(H0) chi_j ||_1`` with ``f`` applied spectrally.

    ``f`` is a callable on eigenvalues (e.g. :class:`SmoothCutoff`) or a
    constant.
    """
    vals = f(sd0.eigenvalues) if callable(f) else np.full(sd0.dim, float(f))
    return trace_norm(_localized(function_of(sd0, vals), pair))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


def loglog_slope(x, y) -> SlopeFit:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise NonPositiveData("log-log fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    return SlopeFit(float(slope), float(icpt), 1 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0)


def k0_comparison(sd0: SpectralData, ip: IntervalPair, E_m, psi):
    """Compare ``<psi, E0(D~^c) (H0 - E_m)^{-2} psi>`` with ``K0 <psi, (H0 + M)^{-2} psi>``.

    Returns
    -------
    lhs, rhs, K0 : float
        The comparison holds when ``lhs <= rhs``.
    """
    a, b = ip.delta
    if not a <= E_m <= b:
        raise WegnerLabError(f"E_m={E_m} is not in {ip.delta}")
    lam = sd0.eigenvalues
    if lam[0] + ip.shift_M < SHIFT_MIN:
        raise ShiftTooSmall("H0 + M is not positive")
    w = np.abs(sd0.vectors().conj().T @ np.asarray(psi)) ** 2
    at, bt = ip.delta_tilde
    outside = (lam < at) | (lam > bt)
    lhs = float(np.sum(w[outside] / (lam[outside] - E_m) ** 2))
    K0 = ip.k0()
    rhs = K0 * float(np.sum(w / (lam + ip.shift_M) ** 2))
    return lhs, rhs, K0


def _check_projector(P, tol=1e-8):
    P = np.asarray(P)
    if P.size and (np.max(np.abs(P - P.conj().T)) > tol or np.max(np.abs(P @ P - P)) > tol):
        raise NotAProjector("P is not an orthogonal projector")
    return P


def iterated_trace_coefficients(sigmas):
    """Coefficients ``(a, b)`` with rhs = ``a Tr P + b Tr P K^{2^m}``."""
    sig = np.asarray(sigmas, float)
    if np.any(sig <= 0):
        raise WegnerLabError("sigmas must be positive")
    a = 0.0
    prod = 1.0
    for j, s in enumerate(sig, start=1):
        a += s / (2 ** j * prod)
        prod *= s
    return a, 1.0 / (2 ** len(sig) * prod)


def canonical_sigmas(K0, m):
    """``sigma_j = K0^{-2^{j-1}}``; the ``Tr P`` coefficient becomes ``(1 - 2^{-m}) / K0``."""
    return [K0 ** (-(2 ** (j - 1))) for j in range(1, m + 1)]


def iterated_trace_inequality(P, K_tilde, m, sigmas):
    """Both sides of the iterated Cauchy-Schwarz bound on ``|Tr P K|``.

    Parameters
    ----------
    P : array
        Orthogonal projector.
    K_tilde : array
        Hermitian.
    m : int
        Number of squarings.
    sigmas : sequence of float
        ``m`` positive parameters.

    Returns
    -------
    lhs, rhs : float
    """
    P = _check_projector(P)
    K = np.asarray(K_tilde)
    if len(sigmas) != m:
        raise WegnerLabError(f"need {m} sigmas, got {len(sigmas)}")
    a, b = iterated_trace_coefficients(sigmas)
    Kp = K.copy()
    for _ in range(m):
        Kp = Kp @ Kp
    lhs = abs(np.trace(P @ K))
    rhs = a * float(np.real(np.trace(P))) + b * float(np.real(np.trace(P @ Kp)))
    return float(lhs), float(rhs)


def overlap_matrix(U):
    """``O[i, j] = 1`` when the profiles of sites ``i`` and ``j`` overlap."""
    support = (U > 0).astype(float)
    return (support.T @ support > 0).astype(float)


def k_tilde(box: BoxSpec, u: SingleSitePotential, H0, M):
    """``sum_{i, j: u_i u_j != 0} u_i^2 (H0 + M)^{-2} u_j^2``.

    Equal to ``(H0 + M)^{-2}`` multiplied entrywise by ``U^2 O (U^2)^T``.
    """
    R2 = _resolvent_power(_spectral(H0), M, 2)
    U = site_profiles(box, u)
    U2 = U * U
    W = U2 @ overlap_matrix(U) @ U2.T
    return R2 * W


def k_tilde_power_norm(box, u, H0, M, m):
    """``|| K~^{2^m} ||_1``."""
    K = k_tilde(box, u, H0, M)
    K = 0.5 * (K + K.conj().T)
    w = np.linalg.eigvalsh(K)
    return float(np.sum(np.abs(w) ** (2 ** m)))
