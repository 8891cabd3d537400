"""Greater-than sign matrices, the shifted Hilbert matrix, and their norms.

Indices are 1-based in every formula and docstring; arrays are stored
0-based, so entry ``(j, k)`` lives at ``entries[j - 1, k - 1]``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

__all__ = [
    "Orientation",
    "SignMatrix",
    "HilbertMatrix",
    "SpectralNormError",
    "gt_hankel",
    "gt_toeplitz",
    "hilbert",
    "l1_norm",
    "hilbert_l1_by_diagonals",
    "spectral_norm_symmetric",
    "fsum_array",
]

# Dense matvec below this size, FFT-based Hankel matvec above.
_DENSE_MATVEC_MAX = 1024


class Orientation(str, enum.Enum):
    HANKEL = "HankelGT"
    TOEPLITZ = "ToeplitzGT"


class SpectralNormError(RuntimeError):
    """Raised when the spectral-norm iteration hits its cap.

    ``estimate`` and ``vector`` hold the last iterate.
    """

    def __init__(self, message, estimate, vector):
        super().__init__(message)
        self.estimate = estimate
        self.vector = vector


def fsum_array(a) -> complex | float:
    """Correctly rounded sum of all entries of ``a`` (real or complex)."""
    a = np.asarray(a).ravel()
    if np.iscomplexobj(a):
        return complex(math.fsum(a.real.tolist()), math.fsum(a.imag.tolist()))
    return math.fsum(a.tolist())


def _check_size(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"matrix size must be a positive integer, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class SignMatrix:
    """An ``n x n`` matrix of signs with its greater-than orientation."""

    n: int
    entries: np.ndarray
    orientation: Orientation

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "orientation": self.orientation.value,
                "entries": self.entries.astype(int).ravel().tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SignMatrix":
        d = json.loads(text)
        n = int(d["n"])
        entries = np.asarray(d["entries"], dtype=np.float64).reshape(n, n)
        entries.setflags(write=False)
        return cls(n, entries, Orientation(d["orientation"]))


def _index_grid(n):
    j = np.arange(1, n + 1)
    return j[:, None], j[None, :]


def gt_hankel(n: int) -> SignMatrix:
    """Signed greater-than matrix in Hankel form: ``+1`` iff ``j + k <= n``."""
    n = _check_size(n)
    j, k = _index_grid(n)
    entries = np.where(j + k <= n, 1.0, -1.0)
    entries.setflags(write=False)
    return SignMatrix(n, entries, Orientation.HANKEL)


def gt_toeplitz(n: int) -> SignMatrix:
    """Signed greater-than matrix in Toeplitz form: ``+1`` iff ``j >= k``."""
    n = _check_size(n)
    j, k = _index_grid(n)
    entries = np.where(j >= k, 1.0, -1.0)
    entries.setflags(write=False)
    return SignMatrix(n, entries, Orientation.TOEPLITZ)


@dataclass(frozen=True)
class HilbertMatrix:
    """Shifted Hilbert matrix with entries ``1 / (n + 1/2 - j - k)``.

    Entries depend only on ``s = j + k``; ``antidiag[s - 2]`` holds the value
    for ``s = 2, ..., 2n``. The dense array is built lazily.
    """

    n: int
    antidiag: np.ndarray
    _dense: list = field(default_factory=list, repr=False, compare=False)

    @property
    def entries(self) -> np.ndarray:
        if not self._dense:
            j, k = _index_grid(self.n)
            dense = self.antidiag[j + k - 2]
            dense.setflags(write=False)
            self._dense.append(dense)
        return self._dense[0]

    def __array__(self, dtype=None, copy=None):
        e = self.entries
        return e if dtype is None else e.astype(dtype)

    @property
    def shape(self):
        return (self.n, self.n)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """``H @ v``; FFT correlation for large ``n``."""
        n = self.n
        if n <= _DENSE_MATVEC_MAX:
            return self.entries @ v
        # (Hv)_j = sum_k h[j + k] v_k is a convolution of h with reversed v.
        size = scipy.fft.next_fast_len(3 * n - 2)
        conv = scipy.fft.irfft(
            scipy.fft.rfft(self.antidiag, size) * scipy.fft.rfft(v[::-1], size), size
        )
        return conv[n - 1 : 2 * n - 1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "orientation": "Hilbert",
                "entries": [repr(float(v)) for v in self.entries.ravel()],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "HilbertMatrix":
        d = json.loads(text)
        n = int(d["n"])
        entries = np.array([float(s) for s in d["entries"]]).reshape(n, n)
        antidiag = np.concatenate([entries[0, :], entries[1:, -1]])
        return cls(n, antidiag)


def hilbert(n: int) -> HilbertMatrix:
    n = _check_size(n)
    s = np.arange(2, 2 * n + 1)
    antidiag = 1.0 / (n + 0.5 - s)
    antidiag.setflags(write=False)
    return HilbertMatrix(n, antidiag)


def l1_norm(M) -> float:
    """Entrywise l1 norm ``sum |M[j, k]|`` with correctly rounded summation.

    A :class:`HilbertMatrix` is summed one anti-diagonal at a time (each
    anti-diagonal is constant), so no dense array is formed.
    """
    if isinstance(M, HilbertMatrix):
        n = M.n
        s = np.arange(2, 2 * n + 1)
        counts = np.minimum(s - 1, 2 * n + 1 - s)
        return math.fsum((counts * np.abs(M.antidiag)).tolist())
    return fsum_array(np.abs(np.asarray(M, dtype=np.float64)))


def hilbert_l1_by_diagonals(n: int) -> float:
    """``||H_n||_1`` from the anti-diagonal counts.

    Anti-diagonal ``j + k = n + 1 - l`` (``1 <= l <= n - 1``) has ``n - l``
    entries of modulus ``1 / (l - 1/2)``; ``j + k = n + 1 + l``
    (``0 <= l <= n - 1``) has ``n - l`` entries of modulus ``1 / (l + 1/2)``.
    """
    n = _check_size(n)
    terms = [(n - l) / (l - 0.5) for l in range(1, n)]
    terms += [(n - l) / (l + 0.5) for l in range(n)]
    return math.fsum(terms)


def _as_operator(M):
    if isinstance(M, HilbertMatrix):
        return M.n, M.matvec
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
        raise ValueError("matrix is not symmetric")
    return A.shape[0], A.__matmul__


def _lanczos_pass(matvec, v0, krylov_dim):
    """One Lanczos cycle with full reorthogonalisation.

    Returns the Ritz value of largest modulus, its Ritz vector, and the
    number of matrix-vector products spent.
    """
    n = v0.shape[0]
    V = np.zeros((krylov_dim, n))
    AV = np.zeros((krylov_dim, n))
    V[0] = v0 / np.linalg.norm(v0)
    m = krylov_dim
    for i in range(krylov_dim):
        AV[i] = matvec(V[i])
        if i + 1 == krylov_dim:
            break
        w = AV[i].copy()
        for _ in range(2):
            w -= V[: i + 1].T @ (V[: i + 1] @ w)
        beta = np.linalg.norm(w)
        if beta <= 1e-13 * np.linalg.norm(AV[i]):
            m = i + 1  # invariant subspace found
            break
        V[i + 1] = w / beta
    Q, AQ = V[:m], AV[:m]
    proj = Q @ AQ.T
    proj = 0.5 * (proj + proj.T)
    theta, S = np.linalg.eigh(proj)
    top = int(np.argmax(np.abs(theta)))
    u = S[:, top] @ Q
    return float(theta[top]), u / np.linalg.norm(u), m


def spectral_norm_symmetric(M, tol: float = 1e-10, max_iter: int = 10**6, seed: int = 0) -> float:
    """Largest singular value of a symmetric matrix.

    Restarted Lanczos with full reorthogonalisation, run twice: from the
    normalised all-ones vector and from a seeded Gaussian vector. A run stops
    when the Ritz residual ``||M u - theta u||`` is at most ``tol * |theta|``,
    which places an eigenvalue within ``tol`` relative of ``theta``. The
    larger of the two runs is returned.

    ``M`` may be a dense symmetric array or a :class:`HilbertMatrix`.
    ``max_iter`` caps matrix-vector products per run; hitting the cap raises
    :class:`SpectralNormError` carrying the last iterate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n, matvec = _as_operator(M)
    if n == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    starts = [np.ones(n), rng.standard_normal(n)]
    krylov_dim = min(n, 64)
    best = 0.0
    for v in starts:
        used = 0
        while True:
            theta, u, m = _lanczos_pass(matvec, v, krylov_dim)
            used += m + 1
            resid = np.linalg.norm(matvec(u) - theta * u)
            if resid <= tol * abs(theta) or abs(theta) == 0.0:
                break
            if used >= max_iter:
                raise SpectralNormError(
                    f"no convergence after {used} matrix-vector products "
                    f"(residual {resid:.3e})",
                    abs(theta),
                    u,
                )
            v = u
        best = max(best, abs(theta))
    return best
