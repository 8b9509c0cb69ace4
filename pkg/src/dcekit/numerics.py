"""Complex-matrix substrate: seeded draws, null-space bases, random semi-unitaries.

Everything operates on plain ``numpy`` ``complex128`` arrays.  The only state
in this module is :class:`RngStream`, a thin splittable wrapper over numpy's
counter-based Philox bit generator so that Monte Carlo code can hand
independent, reproducible substreams to workers without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ComplexMatrix",
    "DegenerateMatrixError",
    "RngStream",
    "null_space_basis",
    "random_gaussian",
    "random_semiunitary",
]

# Readability alias for signatures; entries are complex128.
ComplexMatrix = np.ndarray

# Relative singular-value cutoff below which an input counts as rank deficient.
RANK_RTOL = 1e-8


class DegenerateMatrixError(ValueError):
    """Input matrix is rank deficient where a full-rank matrix is required."""


@dataclass
class RngStream:
    """Seeded random stream identified by ``(seed, stream_id)``.

    Two streams built with the same identifiers replay the same draw sequence;
    streams with different ``stream_id`` are statistically independent.  The
    underlying bit generator is Philox (counter based), so creating thousands
    of streams is cheap and workers never have to share generator state.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def generator(self) -> np.random.Generator:
        """The live numpy generator for this stream (created on first use)."""
        if self._gen is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
            self._gen = np.random.Generator(np.random.Philox(seq))
        return self._gen


def random_gaussian(
    rows: int, cols: int, variance: float, rng: RngStream
) -> ComplexMatrix:
    """Draw a ``rows x cols`` matrix of iid circular complex Gaussians.

    Each entry is CN(0, ``variance``): real and imaginary parts are
    independent N(0, ``variance``/2).  ``variance`` = 0 gives the zero matrix
    (the stream still advances, so draw order stays reproducible).
    """
    if rows <= 0 or cols <= 0:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    parts = rng.generator.standard_normal((rows, cols, 2))
    z = parts[..., 0] + 1j * parts[..., 1]
    return z * np.sqrt(variance / 2.0)


def null_space_basis(mat: ComplexMatrix) -> ComplexMatrix:
    """Orthonormal basis of the left null space of a tall full-rank matrix.

    For ``mat`` of shape ``(n, m)`` with ``n > m`` and full column rank,
    returns ``K`` of shape ``(n, n - m)`` with ``K^H mat = 0`` and
    ``K^H K = I``.  Columns are the trailing left singular vectors, so the
    basis is deterministic for a given input.

    Raises :class:`DegenerateMatrixError` when the smallest singular value
    falls below ``1e-8`` times the largest (rank-deficient input), and
    ``ValueError`` for non-tall shapes.
    """
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={mat.ndim}")
    n, m = mat.shape
    if n <= m:
        raise ValueError(
            f"matrix must be tall (rows > cols) to have a left null space, got {n}x{m}"
        )
    u, s, _ = np.linalg.svd(mat, full_matrices=True)
    if s[0] == 0.0 or s[-1] < RANK_RTOL * s[0]:
        raise DegenerateMatrixError(
            f"matrix is rank deficient (singular values {s.min():.3e} .. {s.max():.3e})"
        )
    return np.ascontiguousarray(u[:, m:])


def random_semiunitary(tau: int, n: int, rng: RngStream) -> ComplexMatrix:
    """Haar-distributed ``tau x n`` semi-unitary matrix (``C^H C = I_n``).

    Computed as the Q factor of a complex Gaussian matrix with the R diagonal
    phase-normalized, which makes the distribution invariant under right
    multiplication by any fixed ``n x n`` unitary.
    """
    if n <= 0:
        raise ValueError(f"column count must be positive, got {n}")
    if tau < n:
        raise ValueError(
            f"need at least as many rows as columns for orthonormal columns, got {tau}x{n}"
        )
    z = random_gaussian(tau, n, 1.0, rng)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    phase = np.where(d == 0, 1.0 + 0j, d / np.abs(d))
    return q * phase.conj()
