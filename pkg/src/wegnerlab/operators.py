"""Finite Hermitian lattice operators on periodic boxes.

A box of ``L`` unit cells per side carries ``n`` grid points per cell
(spacing ``h = 1/n``). The background operator is the second-order
finite-difference Laplacian ``-Delta_h`` with optional Peierls phases for a
constant magnetic field, plus a cell-periodic potential. Random potentials
are diagonal: ``V(x) = sum_j omega_j u(x - j)`` with lattice sites ``j`` at
the cell corners.

Magnetic phases use the Landau gauge ``A = (-B y, 0)``. On the torus this
needs a twist on the ``y`` bonds that wrap around, and it is consistent
exactly when the total flux ``B L**2 / (2 pi)`` is an integer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionExceeded, DimensionMismatch, FluxNotQuantized, NoAdmissibleFlux,
                     WegnerLabError)

DENSE_CAP = 4096
FLUX_TOL = 1e-9


@dataclass(frozen=True)
class BoxSpec:
    dimension: int
    cells_per_side: int
    points_per_cell: int = 1
    max_points: int = DENSE_CAP

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DimensionMismatch(f"dimension must be 1 or 2, got {self.dimension}")
        if self.cells_per_side < 1 or self.points_per_cell < 1:
            raise WegnerLabError("cells_per_side and points_per_cell must be >= 1")
        if self.n_points > self.max_points:
            raise DimensionExceeded(
                f"{self.n_points} grid points exceed the dense cap {self.max_points}")

    @property
    def h(self):
        return 1.0 / self.points_per_cell

    @property
    def points_per_side(self):
        return self.cells_per_side * self.points_per_cell

    @property
    def shape(self):
        return (self.points_per_side,) * self.dimension

    @property
    def n_points(self):
        return self.points_per_side ** self.dimension

    @property
    def volume(self):
        """Number of unit cells, ``|Lambda|``."""
        return self.cells_per_side ** self.dimension

    @property
    def site_shape(self):
        return (self.cells_per_side,) * self.dimension

    def flux_quanta(self, field_B):
        return field_B * self.cells_per_side ** 2 / (2 * math.pi)


@dataclass
class LatticeOperator:
    """Dense Hermitian matrix, or a diagonal stored as a vector.

    ``tag`` records how the operator was made (``"background"``,
    ``"anderson"``, ``"tilde"``, ``"hamiltonian"`` ...).
    """

    data: np.ndarray
    box: BoxSpec
    tag: str = ""
    diagonal: bool = False

    @property
    def dim(self):
        return self.data.shape[0]

    def dense(self):
        return np.diag(self.data) if self.diagonal else self.data

    def diag(self):
        return self.data if self.diagonal else np.diag(self.data)

    def __add__(self, other):
        if not isinstance(other, LatticeOperator):
            return NotImplemented
        if self.box.shape != other.box.shape:
            raise DimensionMismatch("operators live on different boxes")
        if self.diagonal and other.diagonal:
            return LatticeOperator(self.data + other.data, self.box, "sum", True)
        out = self.dense().copy() if not self.diagonal else other.dense().copy()
        add = other if not self.diagonal else self
        if add.diagonal:
            out[np.diag_indices_from(out)] += add.data
        else:
            out = out + add.data
        return LatticeOperator(out, self.box, "sum")

    def hermiticity_error(self):
        if self.diagonal:
            return float(np.max(np.abs(self.data.imag))) if np.iscomplexobj(self.data) else 0.0
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def dump(self, path):
        """Write the dense matrix as a ``.npy`` file (row-major, native dtype)."""
        np.save(path, self.dense())


def _cell_potential(box, v0):
    if v0 is None:
        return np.zeros(box.shape)
    v0 = np.asarray(v0, float)
    if v0.ndim == 0:
        return np.full(box.shape, float(v0))
    n = box.points_per_cell
    if v0.shape == (n,) * box.dimension:
        return np.tile(v0, (box.cells_per_side,) * box.dimension)
    if v0.shape == box.shape:
        cell = v0[(slice(0, n),) * box.dimension]
        if not np.array_equal(np.tile(cell, (box.cells_per_side,) * box.dimension), v0):
            raise WegnerLabError("v0 on the full grid is not cell-periodic")
        return v0
    raise DimensionMismatch(f"v0 shape {v0.shape} fits neither a cell nor the grid")


def build_background(box: BoxSpec, v0=None, field_B: float = 0.0, gauge_origin=(0, 0)):
    """Periodic finite-difference Schroedinger operator.

    Parameters
    ----------
    box : BoxSpec
    v0 : None, float or array
        Cell-periodic potential: a scalar, samples on one cell (shape
        ``(n,)*d``) or on the whole grid.
    field_B : float
        Magnetic field strength. Nonzero values need ``dimension == 2`` and
        an integer number of flux quanta ``B L**2 / (2 pi)``.
    gauge_origin : pair of int
        Grid point used as origin of the Landau gauge. Changing it permutes
        the sites, so the spectrum does not move.

    Returns
    -------
    LatticeOperator
        Real symmetric for ``B == 0``, complex Hermitian otherwise.
    """
    h2 = box.h ** 2
    N = box.points_per_side
    diag = 2.0 * box.dimension / h2 + _cell_potential(box, v0).ravel()
    if field_B != 0:
        if box.dimension != 2:
            raise DimensionMismatch("a magnetic field needs a two-dimensional box")
        phi = box.flux_quanta(field_B)
        if abs(phi - round(phi)) > FLUX_TOL * max(1.0, abs(phi)):
            raise FluxNotQuantized(
                f"total flux B L^2/(2 pi) = {phi:.12g} is not an integer for L={box.cells_per_side}")
    if box.dimension == 1:
        H = np.diag(diag)
        i = np.arange(N)
        H[(i + 1) % N, i] -= 1.0 / h2
        H[i, (i + 1) % N] -= 1.0 / h2
        return LatticeOperator(H, box, "background")

    alpha = field_B * h2 / (2 * math.pi)
    ox, oy = gauge_origin
    x, y = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    xr = (x - ox) % N
    yr = (y - oy) % N
    site = x * N + y
    dtype = complex if field_B != 0 else float
    H = np.zeros((N * N, N * N), dtype=dtype)
    H[np.diag_indices(N * N)] = diag
    # x bonds (x, y) -> (x+1, y)
    to_x = ((x + 1) % N) * N + y
    ph_x = np.exp(-2j * math.pi * alpha * yr) if field_B != 0 else np.ones_like(xr, float)
    # y bonds (x, y) -> (x, y+1), twisted where the relative coordinate wraps
    to_y = x * N + (y + 1) % N
    if field_B != 0:
        ph_y = np.where(yr == N - 1, np.exp(2j * math.pi * alpha * N * xr), 1.0)
    else:
        ph_y = np.ones_like(xr, float)
    for to, ph in ((to_x, ph_x), (to_y, ph_y)):
        np.add.at(H, (to.ravel(), site.ravel()), -ph.ravel() / h2)
        np.add.at(H, (site.ravel(), to.ravel()), -np.conj(ph.ravel()) / h2)
    return LatticeOperator(H, box, "background" if field_B == 0 else "landau")


def free_spectrum_1d(box: BoxSpec):
    """Closed-form eigenvalues of the free periodic 1D Laplacian, sorted."""
    N = box.points_per_side
    k = np.arange(N)
    return np.sort((2 - 2 * np.cos(2 * np.pi * k / N)) / box.h ** 2)


@dataclass(frozen=True)
class SingleSitePotential:
    """Nonnegative profile ``u`` sampled on grid offsets from its site.

    ``offsets`` has shape ``(k, d)`` in grid points, ``values`` shape
    ``(k,)``.
    """

    offsets: np.ndarray
    values: np.ndarray
    points_per_cell: int
    support_radius: float
    kind: str = "custom"

    def __post_init__(self):
        values = np.asarray(self.values, float)
        offsets = np.atleast_2d(np.asarray(self.offsets, int))
        if offsets.shape[0] != values.shape[0]:
            raise WegnerLabError("offsets and values disagree in length")
        if np.any(values < 0):
            raise WegnerLabError("single-site potential must be nonnegative")
        if values.max(initial=0.0) > 1.0 + 1e-15:
            raise WegnerLabError("single-site potential must satisfy sup |u| <= 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dimension(self):
        return self.offsets.shape[1]

    @property
    def sup_norm(self):
        return float(self.values.max(initial=0.0))

    @property
    def is_nonzero(self):
        return bool(np.any(self.values > 0))

    def to_dict(self):
        return {"kind": self.kind, "radius": self.support_radius}


def _offsets_within(dimension, n, radius):
    reach = int(math.floor(radius * n + 1e-12))
    axes = [np.arange(-reach, reach + 1)] * dimension
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dimension)
    r = np.linalg.norm(grid / n, axis=1)
    return grid, r


def cosine_bump(dimension, points_per_cell=1, radius=0.4):
    """Raised-cosine bump ``(1 + cos(pi r / R)) / 2`` for ``r < R`` (cells)."""
    grid, r = _offsets_within(dimension, points_per_cell, radius)
    keep = r < radius
    vals = 0.5 * (1 + np.cos(np.pi * r[keep] / radius))
    return SingleSitePotential(grid[keep], vals, points_per_cell, radius, "bump")


def cell_indicator(dimension, points_per_cell=1):
    """Indicator of the unit cell ``[j, j+1)^d``; its translates tile the box."""
    axes = [np.arange(points_per_cell)] * dimension
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dimension)
    return SingleSitePotential(grid, np.ones(len(grid)), points_per_cell,
                               math.sqrt(dimension), "indicator")


def profile_from_function(func, dimension, points_per_cell, radius, kind="custom"):
    """Sample ``func(r_vector_in_cells)`` on grid offsets with ``|r| <= radius``."""
    grid, r = _offsets_within(dimension, points_per_cell, radius)
    keep = r <= radius
    vals = np.array([func(g / points_per_cell) for g in grid[keep]], float)
    nz = vals > 0
    return SingleSitePotential(grid[keep][nz], vals[nz], points_per_cell, radius, kind)


def single_site_from_dict(data, dimension, points_per_cell):
    kind = data.get("kind", "bump")
    if kind == "bump":
        return cosine_bump(dimension, points_per_cell, float(data.get("radius", 0.4)))
    if kind == "indicator":
        return cell_indicator(dimension, points_per_cell)
    if kind == "zero":
        return SingleSitePotential(np.zeros((1, dimension), int), np.zeros(1),
                                   points_per_cell, 0.0, "zero")
    raise WegnerLabError(f"unknown single-site kind {kind!r}")


def _check_profile(box, u):
    if u.dimension != box.dimension or u.points_per_cell != box.points_per_cell:
        raise DimensionMismatch("single-site potential was sampled for a different grid")
    span = u.offsets.max(axis=0) - u.offsets.min(axis=0) + 1
    if np.any(span > box.points_per_side):
        raise WegnerLabError("single-site support wraps onto itself in this box")


def assemble_anderson(box: BoxSpec, u: SingleSitePotential, couplings) -> LatticeOperator:
    """Diagonal of ``V(x) = sum_j omega_j u(x - j)`` on the periodic grid."""
    _check_profile(box, u)
    omega = np.asarray(couplings, float)
    if omega.shape != box.site_shape:
        raise DimensionMismatch(f"couplings shape {omega.shape} != sites {box.site_shape}")
    placed = np.zeros(box.shape)
    n = box.points_per_cell
    placed[(slice(None, None, n),) * box.dimension] = omega
    V = np.zeros(box.shape)
    axes = tuple(range(box.dimension))
    for off, val in zip(u.offsets, u.values):
        V += val * np.roll(placed, tuple(off), axis=axes)
    return LatticeOperator(V.ravel(), box, "anderson", diagonal=True)


def assemble_tilde(box: BoxSpec, u: SingleSitePotential) -> LatticeOperator:
    """All couplings set to one: ``V~(x) = sum_j u(x - j)``."""
    op = assemble_anderson(box, u, np.ones(box.site_shape))
    op.tag = "tilde"
    return op


def site_profiles(box: BoxSpec, u: SingleSitePotential):
    """Matrix ``U[x, j] = u(x - j)`` of shape (grid points, sites)."""
    _check_profile(box, u)
    n_sites = box.volume
    U = np.zeros((box.n_points, n_sites))
    for j, site in enumerate(np.ndindex(*box.site_shape)):
        e = np.zeros(box.site_shape)
        e[site] = 1.0
        U[:, j] = assemble_anderson(box, u, e).data
    return U


def d0_constant(tilde: LatticeOperator) -> float:
    """Smallest ``D0`` with ``V~^2 <= D0 V~``: the largest diagonal entry."""
    d = np.real(tilde.diag())
    if np.any(d < 0):
        raise WegnerLabError("V~ must be nonnegative")
    return float(d.max(initial=0.0))


def common_field(cells_per_side_values, flux_quanta_at_smallest=None, even=True):
    """Smallest positive field with integer flux for every listed box size.

    ``B / (2 pi)`` must be a multiple of ``1 / gcd(L_i**2)``. With
    ``flux_quanta_at_smallest`` the multiple is chosen so the smallest box
    carries that many quanta (it must be compatible).
    """
    Ls = sorted(int(L) for L in cells_per_side_values)
    g = 0
    for L in Ls:
        g = math.gcd(g, L * L)
    m = 1
    if flux_quanta_at_smallest is not None:
        m = flux_quanta_at_smallest * g / Ls[0] ** 2
        if abs(m - round(m)) > FLUX_TOL:
            raise NoAdmissibleFlux(
                f"{flux_quanta_at_smallest} quanta at L={Ls[0]} is not admissible for {Ls}")
        m = int(round(m))
    if even:
        while any((m * L * L // g) % 2 for L in Ls):
            m += 1
    return 2 * math.pi * m / g


@dataclass
class OperatorSpec:
    """JSON-serializable recipe for ``H0 + V`` on boxes of varying size."""

    dimension: int = 1
    points_per_cell: int = 1
    single_site: dict = field(default_factory=lambda: {"kind": "bump", "radius": 0.4})
    v0: object = None
    field_B: float = 0.0

    def box(self, L, max_points=DENSE_CAP):
        return BoxSpec(self.dimension, int(L), self.points_per_cell, max_points)

    def single_site_potential(self):
        return single_site_from_dict(self.single_site, self.dimension, self.points_per_cell)

    def background(self, L):
        return build_background(self.box(L), self.v0, self.field_B)

    def to_dict(self):
        v0 = self.v0.tolist() if isinstance(self.v0, np.ndarray) else self.v0
        return {"dimension": self.dimension, "points_per_cell": self.points_per_cell,
                "single_site": dict(self.single_site), "v0": v0, "field_B": self.field_B}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data.get("dimension", 1)), int(data.get("points_per_cell", 1)),
                   dict(data.get("single_site", {"kind": "bump", "radius": 0.4})),
                   data.get("v0"), float(data.get("field_B", 0.0)))
