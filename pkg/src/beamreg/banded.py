"""Banded matrix storage and LU solves for the beam system matrices.

Hermite cubics on a uniform 1-D mesh couple only adjacent nodes' (value,
slope) pairs, so every assembled matrix has lower and upper bandwidth 3.
Storage follows the LAPACK general-band convention: entry (i, j) lives at
band[ku + i - j, j].  Factorization uses LAPACK gbtrf/gbtrs (partial
pivoting within the band, fill-in bandwidth kl + ku), which is robust for
the nonsymmetric axial matrix.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import get_lapack_funcs

_gbtrf, _gbtrs = get_lapack_funcs(("gbtrf", "gbtrs"), (np.empty(0, dtype=float),))


class SingularMatrixError(RuntimeError):
    pass


class BandedMatrix:
    """Real n*n band matrix with bandwidths (kl, ku)."""

    def __init__(self, n: int, kl: int, ku: int):
        self.n = n
        self.kl = kl
        self.ku = ku
        self.band = np.zeros((kl + ku + 1, n))

    @classmethod
    def from_dense(cls, a: np.ndarray, kl: int, ku: int) -> "BandedMatrix":
        n = a.shape[0]
        m = cls(n, kl, ku)
        for d in range(-kl, ku + 1):
            diag = np.diagonal(a, offset=d)
            j = np.arange(max(d, 0), max(d, 0) + len(diag))
            m.band[ku - d, j] = diag
        return m

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for d in range(-self.kl, self.ku + 1):
            j = np.arange(max(d, 0), min(self.n, self.n + d))
            a[j - d, j] = self.band[self.ku - d, j]
        return a

    def copy(self) -> "BandedMatrix":
        m = BandedMatrix(self.n, self.kl, self.ku)
        m.band[:] = self.band
        return m

    def scaled_add(self, other: "BandedMatrix", alpha: float = 1.0) -> "BandedMatrix":
        """self + alpha * other as a new matrix (bandwidths must agree)."""
        if (other.n, other.kl, other.ku) != (self.n, self.kl, self.ku):
            raise ValueError("banded shape mismatch")
        m = self.copy()
        m.band += alpha * other.band
        return m

    def scale(self, alpha: float) -> "BandedMatrix":
        m = self.copy()
        m.band *= alpha
        return m

    def symmetry_defect(self) -> float:
        """max |A - A^T| entry; cheap nonsymmetry probe."""
        a = self.to_dense()
        return float(np.max(np.abs(a - a.T)))


def band_matvec(a: BandedMatrix, x: np.ndarray) -> np.ndarray:
    if len(x) != a.n:
        raise ValueError(f"dimension mismatch: matrix {a.n}, vector {len(x)}")
    y = np.zeros(a.n)
    for d in range(-a.kl, a.ku + 1):
        j = np.arange(max(d, 0), min(a.n, a.n + d))
        y[j - d] += a.band[a.ku - d, j] * x[j]
    return y


class BandedLU:
    """Banded LU factors with pivot indices, immutable after construction."""

    def __init__(self, lu_band: np.ndarray, ipiv: np.ndarray, kl: int, ku: int):
        self._lu = lu_band
        self._ipiv = ipiv
        self._kl = kl
        self._ku = ku

    def solve(self, b: np.ndarray) -> np.ndarray:
        x, info = _gbtrs(self._lu, self._kl, self._ku, b, self._ipiv)
        if info != 0:
            raise SingularMatrixError(f"gbtrs failed with info={info}")
        return x


def band_lu(a: BandedMatrix) -> BandedLU:
    """Factor with partial pivoting; raises SingularMatrixError on an exact
    zero pivot."""
    kl, ku, n = a.kl, a.ku, a.n
    ab = np.zeros((2 * kl + ku + 1, n), order="F")
    ab[kl:, :] = a.band
    lu, ipiv, info = _gbtrf(ab, kl, ku)
    if info < 0:
        raise ValueError(f"gbtrf illegal argument {-info}")
    if info > 0:
        raise SingularMatrixError(f"zero pivot at column {info}")
    return BandedLU(lu, ipiv, kl, ku)


def band_solve(lu: BandedLU, b: np.ndarray) -> np.ndarray:
    return lu.solve(np.asarray(b, dtype=float))
