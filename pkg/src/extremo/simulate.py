"""
Exact simulation of the Brown-Resnick space-time process on a regular grid.

The simulator follows the extremal-functions construction: grid points are
visited in turn and, at each point, spectral functions rooted there are
drawn from a Poisson sequence until they can no longer exceed the running
maximum. A single Cholesky factorization of the Gaussian increment
covariance is shared by all roots; re-rooting at ``p_k`` is done by
subtracting ``W(p_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
import logging

import numpy as np
from scipy.linalg import blas

from .core import DependenceParams, DomainError, ExtremoError, GridSpec

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1

#: spectral draws allowed at a single site before giving up
MAX_DRAWS_PER_SITE = 10**6


class FactorizationError(ExtremoError):
    """Increment covariance could not be factorized."""


class SimulationError(ExtremoError):
    """Simulation aborted (iteration cap hit)."""


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0

    def seed_sequence(self):
        return np.random.SeedSequence(self.seed & _MASK64,
                                      spawn_key=(self.stream_id & _MASK64,))

    def generator(self):
        """Fresh counter-based generator; same ids give the same output."""
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def substream(self, k: int) -> "RngStream":
        """Stream derived from this one, e.g. per replication or per block."""
        mixed = np.random.SeedSequence(
            [self.seed & _MASK64, self.stream_id & _MASK64, int(k) & _MASK64])
        sid = int(mixed.generate_state(2, np.uint64)[0])
        return RngStream(self.seed, sid)


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


@dataclass
class SpaceTimeField:
    """Gridded observations indexed by ``(i1, i2, t)`` (zero-based)."""

    grid: GridSpec
    values: np.ndarray
    margin_tag: str = "frechet"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise DomainError(
                f"values shape {self.values.shape} != grid {self.grid.shape}")
        if self.margin_tag not in ("frechet", "raw"):
            raise DomainError(f"unknown margin tag {self.margin_tag!r}")
        if self.margin_tag == "frechet" and not np.all(self.values > 0):
            raise DomainError("Frechet-margined field must be strictly positive")

    def subfield(self, block) -> "SpaceTimeField":
        """Restrict to a block given as a tuple of three slices."""
        vals = self.values[block]
        if vals.shape[0] != vals.shape[1]:
            raise DomainError("blocks must be square in space")
        return SpaceTimeField(GridSpec(vals.shape[0], vals.shape[2]),
                              vals.copy(), self.margin_tag)


# ----------------------------------------------------------------------------
# Gaussian increments
# ----------------------------------------------------------------------------

def _delta_from(points, ref, params):
    """delta(||p_space - ref_space||, |p_t - ref_t|) for all rows of ``points``."""
    d = points - np.asarray(ref)[None, :]
    sq = (d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]).astype(float)
    dt = np.abs(d[:, 2]).astype(float)
    return (2.0 * params.theta1 * np.power(sq, params.alpha1 / 2.0)
            + 2.0 * params.theta2 * np.power(dt, params.alpha2))


def variogram_covariance(points, params: DependenceParams, root: int):
    """
    Covariance delta(p) + delta(q) - delta(p - q) of W pinned at ``points[root]``.
    """
    points = np.asarray(points, dtype=np.int64)
    d0 = _delta_from(points, points[root], params)
    ds0 = points[:, 0][:, None] - points[:, 0][None, :]
    sq = ds0 * ds0
    del ds0
    ds1 = points[:, 1][:, None] - points[:, 1][None, :]
    sq += ds1 * ds1
    del ds1
    cov = np.power(sq.astype(float), params.alpha1 / 2.0)
    del sq
    cov *= -2.0 * params.theta1
    dt = np.abs(points[:, 2][:, None] - points[:, 2][None, :]).astype(float)
    cov -= 2.0 * params.theta2 * np.power(dt, params.alpha2)
    del dt
    cov += d0[:, None]
    cov += d0[None, :]
    # exact zeros on the pinned row/column
    cov[root, :] = 0.0
    cov[:, root] = 0.0
    return cov


@dataclass(frozen=True)
class VariogramFactorization:
    """Lower-triangular ``factor`` with ``factor @ factor.T`` = increment covariance."""

    points: np.ndarray
    root: int
    factor: np.ndarray
    params: DependenceParams
    jitter: float = 0.0
    grid: GridSpec | None = dc_field(default=None, compare=False)

    @property
    def size(self):
        return self.points.shape[0]


def build_variogram_covariance(grid: GridSpec, params: DependenceParams,
                               root=0) -> VariogramFactorization:
    """
    Factorize the covariance of the Gaussian increments on ``grid``.

    Parameters
    ----------
    grid : GridSpec
    params : DependenceParams
    root : int or tuple of 3 ints
        Point where W is pinned to zero, either a row-major index or
        zero-based ``(i1, i2, t)`` coordinates.

    Returns
    -------
    VariogramFactorization
        The root row of the factor is identically zero.
    """
    points = grid.points()
    if isinstance(root, (tuple, list, np.ndarray)):
        coords = tuple(int(c) for c in root)
        if not all(0 <= c < s for c, s in zip(coords, grid.shape)) or len(coords) != 3:
            raise DomainError(f"root {root} is not a point of {grid}")
        root = int(np.ravel_multi_index(coords, grid.shape))
    root = int(root)
    if not 0 <= root < grid.size:
        raise DomainError(f"root index {root} outside grid of {grid.size} points")

    n_pts = points.shape[0]
    factor = np.zeros((n_pts, n_pts))
    jitter = 0.0
    if n_pts > 1:
        cov = variogram_covariance(points, params, root)
        keep = np.arange(n_pts) != root
        sub = cov[np.ix_(keep, keep)]
        del cov
        jitter = 1e-10 * float(np.max(np.diag(sub)))
        sub[np.diag_indices_from(sub)] += jitter
        try:
            low = np.linalg.cholesky(sub)
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(
                f"increment covariance is not positive definite for {params} "
                f"on {grid}") from exc
        factor[np.ix_(keep, keep)] = low
    factor = np.asfortranarray(factor)
    return VariogramFactorization(points, root, factor, params, jitter, grid)


def sample_increment_field(fact: VariogramFactorization, rng, size=None):
    """
    Draw W = factor @ z with z i.i.d. standard normal.

    Returns a vector over ``fact.points`` (or an ``(N, size)`` array). The
    entry at the root is exactly zero.
    """
    gen = _as_generator(rng)
    n_pts = fact.size
    if size is None:
        return fact.factor @ gen.standard_normal(n_pts)
    z = np.asfortranarray(gen.standard_normal((n_pts, size)))
    # triangular product, half the flops of a dense matmul
    return blas.dtrmm(1.0, fact.factor, z, lower=1)


class _IncrementPool:
    """Hands out increment vectors, generated in BLAS-sized batches."""

    def __init__(self, fact, gen, batch):
        self.fact = fact
        self.gen = gen
        self.batch = batch
        self._buf = np.empty((fact.size, 0))
        self._pos = 0

    def next(self):
        if self._pos >= self._buf.shape[1]:
            self._buf = sample_increment_field(self.fact, self.gen, self.batch)
            self._pos = 0
        col = self._buf[:, self._pos]
        self._pos += 1
        return col


# ----------------------------------------------------------------------------
# Brown-Resnick simulation
# ----------------------------------------------------------------------------

def simulate_brown_resnick(grid: GridSpec, params: DependenceParams, rng,
                           factorization: VariogramFactorization | None = None,
                           order=None, max_draws: int = MAX_DRAWS_PER_SITE,
                           batch: int = 128) -> SpaceTimeField:
    """
    One exact realization of the Brown-Resnick process with unit Frechet margins.

    Parameters
    ----------
    grid : GridSpec
    params : DependenceParams
    rng : RngStream or numpy.random.Generator
    factorization : VariogramFactorization, optional
        Reuse a factorization built for the same grid and params (any root).
    order : array of int, optional
        Permutation of row-major point indices giving the visiting order.
        Defaults to row-major order.
    max_draws : int
        Cap on spectral draws at a single site.
    batch : int
        Number of Gaussian vectors generated per matrix product.
    """
    if factorization is None:
        factorization = build_variogram_covariance(grid, params)
    elif factorization.params != params or factorization.size != grid.size:
        raise DomainError("factorization does not match grid/params")

    gauss_ss, poisson_ss = _as_seed_sequence(rng).spawn(2)
    pool = _IncrementPool(factorization,
                          np.random.Generator(np.random.Philox(gauss_ss)), batch)
    pgen = np.random.Generator(np.random.Philox(poisson_ss))

    points = factorization.points
    n_pts = points.shape[0]
    if order is None:
        order = np.arange(n_pts)
    else:
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(n_pts)):
            raise DomainError("order must be a permutation of the grid points")

    z = np.zeros(n_pts)
    total = 0
    for k in range(n_pts):
        pk = order[k]
        dk = _delta_from(points, points[pk], params)
        prev = order[:k]
        gamma = pgen.standard_exponential()
        zeta = 1.0 / gamma
        draws = 0
        while zeta > z[pk]:
            draws += 1
            if draws > max_draws:
                raise SimulationError(
                    f"more than {max_draws} spectral draws at site {pk}")
            w = pool.next()
            y = zeta * np.exp(w - w[pk] - dk)
            if k == 0 or np.all(y[prev] < z[prev]):
                np.maximum(z, y, out=z)
            gamma += pgen.standard_exponential()
            zeta = 1.0 / gamma
        total += draws
    logger.debug("simulated %d sites with %d spectral draws", n_pts, total)
    return SpaceTimeField(grid, z.reshape(grid.shape), "frechet")


def _as_seed_sequence(rng):
    if isinstance(rng, RngStream):
        return rng.seed_sequence()
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(0, 2**63)))
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


def add_observational_noise(field: SpaceTimeField, sd: float, rng) -> SpaceTimeField:
    """Add ``|eps|``, eps ~ N(0, sd^2) i.i.d. per cell; result is tagged raw."""
    if field.margin_tag != "frechet":
        raise DomainError("noise is added to Frechet-margined fields only")
    if not sd > 0:
        raise DomainError(f"noise sd must be positive, got {sd}")
    gen = _as_generator(rng)
    eps = np.abs(gen.normal(0.0, sd, size=field.values.shape))
    return SpaceTimeField(field.grid, field.values + eps, "raw")
