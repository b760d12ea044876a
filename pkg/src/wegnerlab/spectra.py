"""Dense eigendecompositions, counting functions and projector traces.

Energy intervals are closed, ``[a, b]``, throughout. The counting function
is ``N(E) = #{lambda <= E}``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionExceeded, EmptyProjector, VectorsNotRetained, WegnerLabError
from .operators import DENSE_CAP, LatticeOperator


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def vectors(self):
        if self.eigenvectors is None:
            raise VectorsNotRetained("eigenvectors were not kept; call eigensolve(..., keep_vectors=True)")
        return self.eigenvectors

    def window(self, interval):
        """Slice of eigenvalue indices inside the closed interval."""
        a, b = interval
        lo = np.searchsorted(self.eigenvalues, a, side="left")
        hi = np.searchsorted(self.eigenvalues, b, side="right")
        return slice(lo, hi)

    def projector(self, interval):
        V = self.vectors()[:, self.window(interval)]
        return V @ V.conj().T


def _as_matrix(H):
    if isinstance(H, LatticeOperator):
        return H.dense()
    return np.asarray(H)


def eigensolve(H, keep_vectors=True, cap=DENSE_CAP):
    """Full Hermitian eigendecomposition (LAPACK ``*heevd`` via numpy).

    Parameters
    ----------
    H : LatticeOperator or array_like
    keep_vectors : bool
        Keep the eigenvectors (needed for projector quantities).
    cap : int
        Largest dimension accepted.

    Returns
    -------
    SpectralData
        Ascending eigenvalues; eigenvector columns when requested.
    """
    if isinstance(H, LatticeOperator) and H.diagonal:
        d = np.real(H.data)
        order = np.argsort(d, kind="stable")
        vecs = np.eye(len(d))[:, order] if keep_vectors else None
        return SpectralData(d[order], vecs)
    M = _as_matrix(H)
    if M.shape[0] > cap:
        raise DimensionExceeded(f"dimension {M.shape[0]} exceeds dense cap {cap}")
    if keep_vectors:
        w, v = np.linalg.eigh(M)
        return SpectralData(w, v)
    return SpectralData(np.linalg.eigvalsh(M))


def counting_function(sd: SpectralData, E) -> int:
    """Number of eigenvalues ``<= E``."""
    return int(np.searchsorted(sd.eigenvalues, E, side="right"))


def interval_trace(sd: SpectralData, interval) -> int:
    """Number of eigenvalues in the closed interval ``[a, b]``."""
    a, b = interval
    if a > b:
        raise WegnerLabError(f"empty interval [{a}, {b}]")
    s = sd.window(interval)
    return s.stop - s.start


def projector_quadratic_form(sd: SpectralData, interval, phi) -> float:
    """``<phi, E(interval) phi> = sum_{lambda in interval} |<v, phi>|**2``."""
    V = sd.vectors()[:, sd.window(interval)]
    c = V.conj().T @ np.asarray(phi)
    return float(np.real(np.vdot(c, c)))


def ucp_constant(sd0: SpectralData, delta_tilde, tilde_V) -> float:
    """Best constant ``C`` with ``P V~ P >= C P`` for ``P = E_0(delta_tilde)``.

    Computed as the smallest eigenvalue of ``V~`` compressed to the range of
    ``P``.
    """
    V = sd0.vectors()[:, sd0.window(delta_tilde)]
    if V.shape[1] == 0:
        raise EmptyProjector(f"no eigenvalues of H0 in {tuple(delta_tilde)}")
    if isinstance(tilde_V, LatticeOperator):
        if tilde_V.diagonal:
            comp = V.conj().T @ (np.real(tilde_V.data)[:, None] * V)
        else:
            comp = V.conj().T @ tilde_V.data @ V
    else:
        comp = V.conj().T @ np.asarray(tilde_V) @ V
    comp = 0.5 * (comp + comp.conj().T)
    return float(np.linalg.eigvalsh(comp)[0])


@dataclass(frozen=True)
class IntervalPair:
    """Nested energy windows ``delta`` inside ``delta_tilde`` plus a shift.

    ``d_gap`` is the distance from ``delta`` to the complement of
    ``delta_tilde``; ``shift_M`` makes ``H0 + M`` positive.
    """

    delta: tuple
    delta_tilde: tuple
    shift_M: float

    def __post_init__(self):
        a, b = self.delta
        at, bt = self.delta_tilde
        if not (at <= a <= b <= bt):
            raise WegnerLabError(f"{self.delta} is not contained in {self.delta_tilde}")
        if self.d_gap <= 0:
            raise WegnerLabError("delta must sit strictly inside delta_tilde")

    @property
    def d_gap(self):
        return min(self.delta[0] - self.delta_tilde[0], self.delta_tilde[1] - self.delta[1])

    @property
    def delta_plus(self):
        """``max |E|`` over ``delta``."""
        return max(abs(self.delta[0]), abs(self.delta[1]))

    def k0(self):
        """``(1 + (M + Delta_+)/d)**2``, the operator-norm bound on the
        cutoff resolvent product."""
        r = (self.shift_M + self.delta_plus) / self.d_gap
        return 1.0 + 2.0 * r + r * r

    @classmethod
    def around(cls, sd0: SpectralData, delta, d_gap, margin=1e-6):
        """Build with ``M`` chosen so that ``min spec(H0) + M >= margin``."""
        a, b = delta
        M = max(0.0, margin - float(sd0.eigenvalues[0]))
        return cls((a, b), (a - d_gap, b + d_gap), M)


def write_eigenvalues_csv(sd: SpectralData, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigenvalue"])
        for i, lam in enumerate(sd.eigenvalues):
            w.writerow([i, repr(float(lam))])


def read_eigenvalues_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return SpectralData(np.array([float(r["eigenvalue"]) for r in rows]))
