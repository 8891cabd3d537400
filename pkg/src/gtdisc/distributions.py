"""Distributions over matrix entries: mu*, the bit-sampling distribution eta, and plumbing.

A distribution on ``[n] x [n]`` is an ``n x n`` array of nonnegative weights
summing to one; ``weights[j - 1, k - 1]`` is the mass of cell ``(j, k)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .matrices import hilbert, l1_norm

__all__ = [
    "EntryDistribution",
    "EtaSpec",
    "mu_star",
    "eta_pmf",
    "eta_sample",
    "eta_sample_many",
    "eta_threshold",
    "eta_witness_vectors",
    "eta_witness_value",
    "eta_witness_factors",
    "uniform_distribution",
    "random_distribution",
    "point_mass",
]

SUM_TOL = 1e-12
# Dense eta tables are 4**m cells.
ETA_DENSE_MAX_M = 12


@dataclass(frozen=True)
class EntryDistribution:
    n: int
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.n, self.n):
            raise ValueError(f"weights must be {self.n}x{self.n}, got {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        total = math.fsum(w.ravel().tolist())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def kind(self) -> str:
        return self.meta.get("kind", "custom")

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "weights": self.weights.ravel().tolist(), "meta": self.meta}
        )

    @classmethod
    def from_json(cls, text: str) -> "EntryDistribution":
        d = json.loads(text)
        n = int(d["n"])
        return cls(n, np.asarray(d["weights"], dtype=np.float64).reshape(n, n), d.get("meta", {}))


def _normalise(w):
    # exact-sum normalisation keeps the total within a few ulps of 1
    return w / math.fsum(w.ravel().tolist())


def mu_star(n: int) -> EntryDistribution:
    """``|H[j, k]| / ||H||_1`` for the shifted Hilbert matrix (Hankel frame)."""
    H = hilbert(n)
    w = np.abs(H.entries) / l1_norm(H)
    return EntryDistribution(H.n, w, {"kind": "mu_star", "frame": "hankel"})


def uniform_distribution(n: int) -> EntryDistribution:
    if n < 1:
        raise ValueError("n must be positive")
    return EntryDistribution(n, np.full((n, n), 1.0 / (n * n)), {"kind": "uniform"})


def random_distribution(n: int, seed: int) -> EntryDistribution:
    """Symmetric Dirichlet(1) weights over the ``n**2`` cells, fixed by ``seed``."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    w = rng.standard_exponential((n, n))
    return EntryDistribution(n, _normalise(w), {"kind": "random", "seed": int(seed)})


def point_mass(n: int, j: int, k: int) -> EntryDistribution:
    w = np.zeros((n, n))
    w[j - 1, k - 1] = 1.0
    return EntryDistribution(n, w, {"kind": "point", "cell": [j, k]})


@dataclass(frozen=True)
class EtaSpec:
    """Bit-sampling distribution on ``n = 2**m`` points.

    Point ``j`` is identified with the ``m``-bit binary expansion of ``j - 1``,
    coordinate 1 being the most significant bit. ``host_n`` embeds the
    ``2**m`` points as the first rows/columns of a larger ``host_n x host_n``
    grid when the requested size is not a power of two.
    """

    m: int
    host_n: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.host_n is not None and self.host_n < 2**self.m:
            raise ValueError("host_n must be at least 2**m")

    @property
    def n(self) -> int:
        return 2**self.m

    @property
    def embedded(self) -> bool:
        return self.host_n is not None and self.host_n != self.n

    @classmethod
    def for_size(cls, n: int, embed: bool = False) -> "EtaSpec":
        """Parameters for ``n`` points; non-powers of two need ``embed=True``."""
        if n < 2:
            raise ValueError("eta needs n >= 2")
        m = n.bit_length() - 1
        if 2**m == n:
            return cls(m)
        if not embed:
            raise ValueError(
                f"n={n} is not a power of two; pass embed=True to use the "
                f"largest power of two below it ({2**m})"
            )
        return cls(m, host_n=n)


def eta_pmf(spec: EtaSpec) -> EntryDistribution:
    """Dense probability table of eta.

    For ``j != k`` whose most significant differing coordinate is ``i``,
    the mass is ``2**-m * (1/m) * 2**-(m - i)``; the diagonal is empty.
    """
    m = spec.m
    if m > ETA_DENSE_MAX_M:
        raise ValueError(f"dense eta table limited to m <= {ETA_DENSE_MAX_M}")
    n = spec.n
    idx = np.arange(n)
    diff = idx[:, None] ^ idx[None, :]
    # bit index (from the least significant end) of the highest differing bit
    top_bit = np.array([int(d).bit_length() - 1 for d in range(n)])[diff]
    w = np.where(diff > 0, np.ldexp(1.0 / m, -m - top_bit), 0.0)
    meta = {"kind": "eta", "m": m}
    if spec.embedded:
        padded = np.zeros((spec.host_n, spec.host_n))
        padded[:n, :n] = w
        meta["host_n"] = spec.host_n
        return EntryDistribution(spec.host_n, padded, meta)
    return EntryDistribution(n, w, meta)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _random_bits(rng, count):
    if count == 0:
        return 0
    nbytes = (count + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "little") & ((1 << count) - 1)


def eta_sample(spec: EtaSpec, seed) -> tuple[int, int]:
    """One draw ``(j, k)`` (1-based) from eta.

    ``j`` is uniform, coordinate ``i`` is uniform on ``[m]``; ``k`` copies
    ``j`` above ``i``, flips it at ``i`` and is fresh below ``i``.
    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    rng = _rng(seed)
    m = spec.m
    j = _random_bits(rng, m)
    i = int(rng.integers(1, m + 1))
    low = m - i  # number of coordinates after i
    flip = 1 << low
    k = (j & ~(2 * flip - 1)) | ((j & flip) ^ flip) | _random_bits(rng, low)
    return j + 1, k + 1


def eta_sample_many(spec: EtaSpec, size: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised sampler for ``m <= 62``; same process as :func:`eta_sample`."""
    m = spec.m
    if m > 62:
        raise ValueError("vectorised sampler limited to m <= 62")
    rng = _rng(seed)
    j = rng.integers(0, 2**m, size=size, dtype=np.int64)
    i = rng.integers(1, m + 1, size=size, dtype=np.int64)
    low = m - i
    flip = np.left_shift(np.int64(1), low)
    fresh = rng.integers(0, 2**m, size=size, dtype=np.int64) & (flip - 1)
    k = (j & ~(2 * flip - 1)) | ((j & flip) ^ flip) | fresh
    return j + 1, k + 1


def eta_threshold(m: int) -> int:
    """Smallest Hamming weight with at least ``m/2 + sqrt(m)`` ones."""
    return math.ceil(m / 2 + math.sqrt(m))


def eta_witness_vectors(spec: EtaSpec) -> tuple[np.ndarray, np.ndarray]:
    """``x`` = indicator of heavy strings, ``y`` = all ones (length ``2**m``)."""
    n = spec.n
    weights = np.array([bin(j).count("1") for j in range(n)])
    x = (weights >= eta_threshold(spec.m)).astype(np.float64)
    return x, np.ones(n)


def _witness_sums(m):
    thr = eta_threshold(m)
    heavy = sum(math.comb(m, w) for w in range(thr, m + 1))
    signed = sum(math.comb(m, w) * (2 * w - m) for w in range(thr, m + 1))
    ones = sum(math.comb(m, w) * w for w in range(thr, m + 1))
    return heavy, signed, ones


def eta_witness_value(spec: EtaSpec) -> float:
    """Exact witness value ``sum_{w >= thr} C(m, w) 2**-m (2w/m - 1)``.

    This is ``sum G[j, k] eta[j, k] x_j y_k`` for the heavy-string indicator
    ``x`` and all-ones ``y`` against the Toeplitz greater-than matrix.
    """
    m = spec.m
    _, signed, _ = _witness_sums(m)
    return float(Fraction(signed, m * 2**m))


def eta_witness_factors(spec: EtaSpec) -> tuple[float, float]:
    """``(Pr[x_j = 1], Pr[j_i = 1 | x_j = 1])`` under eta, exactly rounded."""
    m = spec.m
    heavy, _, ones = _witness_sums(m)
    if heavy == 0:
        return 0.0, float("nan")
    return float(Fraction(heavy, 2**m)), float(Fraction(ones, m * heavy))
