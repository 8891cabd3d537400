"""Weighted bilinear forms of the greater-than matrix and their maximisers.

The maximand is ``|sum_{j,k} G[j,k] mu[j,k] x_j y_k|`` over sup-norm-one
vectors, either boolean (``x, y`` in ``{-1, +1}^n``) or complex unimodular.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import kernels
from .distributions import EntryDistribution
from .matrices import (
    SignMatrix,
    fsum_array,
    gt_toeplitz,
    hilbert,
    l1_norm,
    spectral_norm_symmetric,
)

__all__ = [
    "WitnessPair",
    "BooleanWitnessPair",
    "ScanResult",
    "eval_bilinear",
    "weighted_matrix",
    "disc_exact_boolean",
    "alternating_ascent",
    "disc_alternating",
    "diagonal_aggregates",
    "character_witness_scan",
    "round_witness",
    "spectral_upper_bound",
    "hankel_to_toeplitz",
    "toeplitz_to_hankel",
    "witness_toeplitz_to_hankel",
    "BOOLEAN_MAX_N",
]

BOOLEAN_MAX_N = 28
# Gray-code counters per work unit; fixed so results do not depend on threads.
_CHUNK = 1 << 15


def _complex_pairs(v):
    v = np.asarray(v, dtype=np.complex128)
    return [[float(z.real), float(z.imag)] for z in v]


@dataclass(frozen=True)
class WitnessPair:
    x: np.ndarray
    y: np.ndarray
    value: float

    def to_dict(self) -> dict:
        return {"x": _complex_pairs(self.x), "y": _complex_pairs(self.y), "value": self.value}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "WitnessPair":
        def unpack(pairs):
            a = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
            return a[:, 0] + 1j * a[:, 1]

        return cls(unpack(d["x"]), unpack(d["y"]), float(d["value"]))


@dataclass(frozen=True)
class BooleanWitnessPair:
    x: np.ndarray
    y: np.ndarray
    value: float

    def to_dict(self) -> dict:
        return {
            "x": self.x.astype(int).tolist(),
            "y": self.y.astype(int).tolist(),
            "value": self.value,
        }


def weighted_matrix(G: SignMatrix, mu: EntryDistribution) -> np.ndarray:
    """Entrywise product ``G * mu``."""
    if G.n != mu.n:
        raise ValueError(f"size mismatch: G is {G.n}, mu is {mu.n}")
    return np.asarray(G.entries) * mu.weights


def eval_bilinear(G: SignMatrix, mu: EntryDistribution, x, y) -> complex:
    """``sum_{j,k} G[j,k] mu[j,k] x_j y_k`` with correctly rounded summation."""
    W = weighted_matrix(G, mu)
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != (G.n,) or y.shape != (G.n,):
        raise ValueError("witness vectors must have length n")
    return complex(fsum_array(x[:, None] * W * y[None, :]))


def _x_from_counter(n, counter):
    g = counter ^ (counter >> 1)
    x = np.ones(n)
    for r in range(1, n):
        if (g >> (r - 1)) & 1:
            x[r] = -1.0
    return x


def disc_exact_boolean(G: SignMatrix, mu: EntryDistribution, threads: int | None = None,
                       scan=None) -> BooleanWitnessPair:
    """Exact boolean discrepancy by Gray-code enumeration.

    For fixed ``x`` the best ``y`` is the sign pattern of the column sums
    ``c = W^T x``, so the value is ``max_x sum_k |c_k|``. The sign vectors
    with ``x_1 = +1`` are walked in Gray-code order (one row update of
    ``c`` per step); ``-x`` gives the same value. Zero column sums get
    ``y_k = +1``.

    ``scan`` overrides the kernel (defaults to :data:`gtdisc.kernels.gray_scan`).
    """
    n = G.n
    if n > BOOLEAN_MAX_N:
        raise ValueError(f"exhaustive enumeration limited to n <= {BOOLEAN_MAX_N}")
    W = np.ascontiguousarray(weighted_matrix(G, mu))
    scan = scan or kernels.gray_scan
    total = 1 << (n - 1)
    ranges = [(a, min(a + _CHUNK, total)) for a in range(0, total, _CHUNK)]
    if threads is None:
        threads = os.cpu_count() or 1
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: scan(W, r[0], r[1]), ranges))
    else:
        results = [scan(W, a, b) for a, b in ranges]
    # chunks are in counter order, so strict > keeps the earliest maximiser
    best_val, best_i = results[0]
    for val, i in results[1:]:
        if val > best_val:
            best_val, best_i = val, i
    x = _x_from_counter(n, best_i)
    cols = [math.fsum((W[:, k] * x).tolist()) for k in range(n)]
    y = np.where(np.asarray(cols) < 0, -1.0, 1.0)
    value = abs(eval_bilinear(G, mu, x, y))
    return BooleanWitnessPair(x, y, value)


def _unit_phase(v):
    mag = np.abs(v)
    out = np.ones_like(v, dtype=np.complex128)
    nz = mag > 0
    out[nz] = np.conj(v[nz]) / mag[nz]
    return out


def alternating_ascent(W: np.ndarray, x0, max_iters: int = 1000, rtol: float = 1e-14):
    """Alternate exact half-steps on ``|x^T W y|`` from ``x0``.

    Returns ``(x, y, history)`` where ``history`` lists the objective after
    every half-step; it is nondecreasing.
    """
    W = np.asarray(W, dtype=np.complex128)
    x = np.asarray(x0, dtype=np.complex128)
    c = x @ W
    y = _unit_phase(c)
    history = [float(np.abs(c).sum())]
    for _ in range(max_iters):
        r = W @ y
        x = _unit_phase(r)
        history.append(float(np.abs(r).sum()))
        c = x @ W
        y = _unit_phase(c)
        history.append(float(np.abs(c).sum()))
        if history[-1] - history[-3] <= rtol * history[-1]:
            break
    return x, y, history


def disc_alternating(G: SignMatrix, mu: EntryDistribution, restarts: int = 8,
                     max_iters: int = 1000, seed: int = 0, x0=None) -> WitnessPair:
    """Heuristic complex discrepancy by alternating maximisation.

    The first restart starts from ``x0`` (all ones by default), the others
    from uniform random phases. Not guaranteed optimal.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    n = G.n
    W = weighted_matrix(G, mu)
    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        if r == 0:
            start = np.ones(n) if x0 is None else np.asarray(x0)
        else:
            start = np.exp(2j * np.pi * rng.random(n))
        x, y, hist = alternating_ascent(W, start, max_iters)
        if best is None or hist[-1] > best[2]:
            best = (x, y, hist[-1])
    x, y, _ = best
    return WitnessPair(x, y, abs(eval_bilinear(G, mu, x, y)))


def diagonal_aggregates(mu: EntryDistribution) -> np.ndarray:
    """``a[d + n - 1] = sum_{j - k = d} G[j,k] mu[j,k]`` (Toeplitz frame), ``|d| < n``."""
    n = mu.n
    w = mu.weights
    out = np.empty(2 * n - 1)
    for d in range(-(n - 1), n):
        s = math.fsum(np.diagonal(w, offset=-d).tolist())
        out[d + n - 1] = s if d >= 0 else -s
    return out


@dataclass(frozen=True)
class ScanResult:
    t: float
    value: float
    witness: WitnessPair
    grid: int


def _character_witness(n, t):
    idx = np.arange(1, n + 1)
    return np.exp(2j * np.pi * idx * t), np.exp(-2j * np.pi * idx * t)


def character_witness_scan(mu: EntryDistribution, T: int) -> ScanResult:
    """Maximise ``|Phi(t)|`` over ``t = s/T`` with ``Phi(t) = sum_d a_d e^{2 pi i d t}``.

    ``Phi(t)`` is the Toeplitz-frame bilinear form at the character witness
    ``x_j = e^{2 pi i j t}``, ``y_k = e^{-2 pi i k t}``.
    """
    n = mu.n
    if T < 2 * n:
        raise ValueError(f"grid T={T} must be at least 2n={2 * n}")
    a = diagonal_aggregates(mu)
    buf = np.zeros(T, dtype=np.complex128)
    d = np.arange(-(n - 1), n)
    buf[d % T] = a
    phi = scipy.fft.ifft(buf) * T
    s = int(np.argmax(np.abs(phi)))
    t = s / T
    x, y = _character_witness(n, t)
    G = gt_toeplitz(n)
    value = abs(eval_bilinear(G, mu, x, y))
    return ScanResult(t, value, WitnessPair(x, y, value), T)


def round_witness(pair: WitnessPair, G: SignMatrix, mu: EntryDistribution,
                  trials: int = 32, seed: int = 0) -> BooleanWitnessPair:
    """Round a complex witness to signs via random global phases.

    Trial ``r`` uses phases ``theta, phi`` (zero for the first trial) and
    sets ``x'_j = sign(Re(e^{i theta} x_j))`` with ties to ``+1``; likewise
    ``y``. The best trial by exact re-evaluation is returned.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    x = np.asarray(pair.x, dtype=np.complex128)
    y = np.asarray(pair.y, dtype=np.complex128)
    best = None
    for r in range(trials):
        theta, phi = (0.0, 0.0) if r == 0 else 2 * np.pi * rng.random(2)
        bx = np.where((np.exp(1j * theta) * x).real >= 0, 1.0, -1.0)
        by = np.where((np.exp(1j * phi) * y).real >= 0, 1.0, -1.0)
        val = abs(eval_bilinear(G, mu, bx, by))
        if best is None or val > best.value:
            best = BooleanWitnessPair(bx, by, val)
    return best


def spectral_upper_bound(n: int, tol: float = 1e-10) -> tuple[float, float]:
    """``(pi n / ||H||_1, n sigma_max(H) / ||H||_1)`` for the mu* distribution."""
    if n < 2:
        raise ValueError("n must be at least 2")
    H = hilbert(n)
    l1 = l1_norm(H)
    sigma = spectral_norm_symmetric(H, tol=tol)
    return math.pi * n / l1, n * sigma / l1


def hankel_to_toeplitz(mu: EntryDistribution) -> EntryDistribution:
    """Move a Hankel-frame distribution to the Toeplitz frame.

    Reversing the rows of the Hankel matrix gives ``-G_T^T`` (``G_T`` the
    Toeplitz matrix), so ``mu_T[a, b] = mu_H[n + 1 - b, a]``. Bilinear values
    keep their modulus under the matching witness map
    (:func:`witness_toeplitz_to_hankel`).
    """
    w = mu.weights[::-1, :].T
    meta = dict(mu.meta, frame="toeplitz")
    return EntryDistribution(mu.n, np.ascontiguousarray(w), meta)


def toeplitz_to_hankel(mu: EntryDistribution) -> EntryDistribution:
    w = mu.weights.T[::-1, :]
    meta = dict(mu.meta, frame="hankel")
    return EntryDistribution(mu.n, np.ascontiguousarray(w), meta)


def witness_toeplitz_to_hankel(pair):
    """Map a Toeplitz-frame witness to the Hankel frame: ``x_H[j] = y_T[n+1-j]``, ``y_H = x_T``."""
    cls = type(pair)
    return cls(np.asarray(pair.y)[::-1].copy(), np.asarray(pair.x).copy(), pair.value)
