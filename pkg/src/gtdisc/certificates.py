"""Minimal-norm circle measures and discrepancy lower-bound certificates.

A measure lives on the grid ``t_s = s/T`` of ``[0, 1)``: atom ``v_s`` carries
mass ``v_s / T``. Its Fourier coefficients are
``nu_hat(l) = (1/T) sum_s v_s e^{2 pi i l t_s}`` and its norm is
``(1/T) sum_s |v_s|``.

If ``nu_hat(l) = 1`` for ``0 <= l <= n`` and ``0`` for ``-n <= l < 0``, then
for every distribution ``mu`` on the Toeplitz greater-than matrix with
``Pr_mu[j >= k] >= 1/2``::

    1/2 <= |sum G mu nu_hat(j - k)| = |(1/T) sum_s v_s Phi_mu(t_s)|
        <= ||nu|| * max_s |Phi_mu(t_s)|

and ``Phi_mu(t)`` is the bilinear form at a character witness, so the
discrepancy of ``mu`` is at least ``1 / (2 ||nu||)``.
"""

from __future__ import annotations

import enum
import io
import json
import math
import struct
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .discrepancy import (
    WitnessPair,
    character_witness_scan,
    diagonal_aggregates,
    hankel_to_toeplitz,
)
from .distributions import EntryDistribution

__all__ = [
    "Side",
    "FourierTarget",
    "SolverParams",
    "CircleMeasure",
    "LowerBoundCertificate",
    "CertificateError",
    "MeasureCache",
    "DEFAULT_CACHE",
    "default_grid",
    "synthesize_measure",
    "measure_fourier",
    "measure_norm",
    "fourier_residual",
    "certified_lower_bound",
    "reflect_measure",
    "verify_certificate",
    "write_measure_binary",
    "read_measure_binary",
    "RESIDUAL_TOL",
]

RESIDUAL_TOL = 1e-8
BINARY_MAGIC = b"CMES1"


class Side(str, enum.Enum):
    NONNEGATIVE = "NonnegativeHalf"
    NEGATIVE = "NegativeHalf"

    @property
    def other(self) -> "Side":
        return Side.NEGATIVE if self is Side.NONNEGATIVE else Side.NONNEGATIVE


@dataclass(frozen=True)
class FourierTarget:
    """Half-line indicator on ``[-n, n]``."""

    n: int
    side: Side = Side.NONNEGATIVE

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("degree must be nonnegative")
        object.__setattr__(self, "side", Side(self.side))

    def value(self, ell):
        ell = np.asarray(ell)
        if self.side is Side.NONNEGATIVE:
            return (ell >= 0).astype(np.float64)
        return (ell < 0).astype(np.float64)


@dataclass(frozen=True)
class SolverParams:
    max_iters: int | None = None  # None means 50 * T
    step: float = 1.0
    tol: float = 1e-10


def default_grid(n: int) -> int:
    return 8 * n + 1


@dataclass(frozen=True)
class CircleMeasure:
    n: int
    side: Side
    T: int
    atoms: np.ndarray
    norm: float
    converged: bool = True
    iterations: int = 0
    solver: dict = field(default_factory=dict)

    @property
    def target(self) -> FourierTarget:
        return FourierTarget(self.n, self.side)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "side": self.side.value,
            "T": self.T,
            "atoms": [[float(z.real), float(z.imag)] for z in self.atoms],
            "norm": self.norm,
            "solver": self.solver,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "CircleMeasure":
        a = np.asarray(d["atoms"], dtype=np.float64).reshape(-1, 2)
        return cls(
            int(d["n"]), Side(d["side"]), int(d["T"]), a[:, 0] + 1j * a[:, 1],
            float(d["norm"]), bool(d.get("converged", True)),
            int(d.get("iterations", 0)), dict(d.get("solver", {})),
        )


class CertificateError(RuntimeError):
    def __init__(self, message, diagnostics):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


def _l1(atoms):
    return math.fsum(np.abs(atoms).tolist()) / atoms.shape[0]


def _constraint_setup(target: FourierTarget, T: int):
    n = target.n
    ell = np.arange(-n, n + 1)
    idx = ell % T
    return idx, target.value(ell).astype(np.complex128)


def _projector(target, T):
    idx, vals = _constraint_setup(target, T)

    def project(v):
        coef = scipy.fft.ifft(v)
        delta = np.zeros(T, dtype=np.complex128)
        delta[idx] = vals - coef[idx]
        return v + scipy.fft.fft(delta)

    return project


def fourier_residual(measure: CircleMeasure) -> float:
    """``max_{|l| <= n} |nu_hat(l) - target(l)|``."""
    idx, vals = _constraint_setup(measure.target, measure.T)
    coef = scipy.fft.ifft(measure.atoms)
    return float(np.max(np.abs(coef[idx] - vals)))


def synthesize_measure(target: FourierTarget, T: int | None = None,
                       solver: SolverParams | dict | None = None) -> CircleMeasure:
    """Approximate minimum-norm measure with the target Fourier coefficients.

    Douglas-Rachford splitting of ``(1/T) sum |v_s|`` and the affine
    constraint set. The projection adds ``sum_l (target(l) - v_hat(l))
    e^{-2 pi i l t_s}`` (the grid characters are orthonormal), two FFTs per
    iteration; the proximal step shrinks each atom's modulus by ``step``.
    Every projected iterate is feasible; the one of least norm is returned.

    Stops when the best norm improves by less than ``tol`` (relative) over
    100 iterations, or after ``max_iters`` (then ``converged`` is False).
    """
    if isinstance(solver, dict):
        solver = SolverParams(**solver)
    solver = solver or SolverParams()
    n = target.n
    T = default_grid(n) if T is None else int(T)
    if T < 4 * n + 1:
        raise ValueError(f"grid T={T} must be at least 4n+1={4 * n + 1}")
    max_iters = 50 * T if solver.max_iters is None else int(solver.max_iters)
    step = float(solver.step)
    project = _projector(target, T)

    z = np.zeros(T, dtype=np.complex128)
    best = project(z)
    best_norm = float(np.mean(np.abs(best)))
    checkpoint = best_norm
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        x = project(z)
        nrm = float(np.mean(np.abs(x)))
        if nrm < best_norm:
            best_norm = nrm
            best = x
        w = 2.0 * x - z
        mag = np.abs(w)
        shrink = np.maximum(mag - step, 0.0) / np.where(mag > 0, mag, 1.0)
        z = z + (w * shrink - x)
        if it % 100 == 0:
            if checkpoint - best_norm < solver.tol * best_norm:
                converged = True
                break
            checkpoint = best_norm

    atoms = project(best)
    measure = CircleMeasure(
        n, target.side, T, atoms, _l1(atoms), converged, it,
        {"max_iters": max_iters, "step": step, "tol": solver.tol},
    )
    if fourier_residual(measure) > RESIDUAL_TOL:
        raise RuntimeError("final projection failed to reach the residual tolerance")
    return measure


def measure_fourier(measure: CircleMeasure, ell: int) -> complex:
    T = measure.T
    if abs(ell) > T / 2:
        raise ValueError(f"frequency {ell} aliases on a grid of {T} points")
    phase = np.exp(2j * np.pi * ell * np.arange(T) / T)
    terms = measure.atoms * phase
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist())) / T


def measure_norm(measure: CircleMeasure) -> float:
    return _l1(np.asarray(measure.atoms))


def certified_lower_bound(measure: CircleMeasure) -> float:
    """``1 / (2 ||nu||)``.

    For a degree-``n`` nonnegative-half measure this bounds the complex
    discrepancy of ``G_n`` from below for every distribution: those with
    ``Pr[j >= k] >= 1/2`` directly, the rest through
    :func:`reflect_measure`, which has the same norm and degree ``n - 1``.
    """
    return 1.0 / (2.0 * measure.norm)


def reflect_measure(measure: CircleMeasure) -> CircleMeasure:
    """Map a degree-``n`` measure to a degree-``n-1`` measure of the other side.

    ``v'_s = v_{-s} e^{2 pi i s / T}`` gives ``nu'_hat(l) = nu_hat(-l - 1)``,
    which swaps the half-line targets; the norm is unchanged.
    """
    if measure.n < 1:
        raise ValueError("cannot reflect a degree-0 measure")
    T = measure.T
    s = np.arange(T)
    atoms = measure.atoms[(-s) % T] * np.exp(2j * np.pi * s / T)
    return CircleMeasure(
        measure.n - 1, measure.side.other, T, atoms, _l1(atoms), measure.converged,
        measure.iterations, dict(measure.solver, reflected_from=measure.n),
    )


class MeasureCache:
    """Synthesised measures keyed by ``(n, side, T, solver params)``.

    Lookups are concurrent; each key is synthesised by at most one thread.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._items = {}
        self._pending = {}

    @staticmethod
    def key(target: FourierTarget, T: int, solver: SolverParams):
        return (target.n, target.side.value, T, solver.max_iters, solver.step, solver.tol)

    def get(self, target: FourierTarget, T: int | None = None,
            solver: SolverParams | None = None) -> CircleMeasure:
        solver = solver or SolverParams()
        T = default_grid(target.n) if T is None else T
        k = self.key(target, T, solver)
        with self._lock:
            if k in self._items:
                return self._items[k]
            gate = self._pending.setdefault(k, threading.Lock())
        with gate:
            with self._lock:
                if k in self._items:
                    return self._items[k]
            measure = synthesize_measure(target, T, solver)
            with self._lock:
                self._items[k] = measure
                self._pending.pop(k, None)
        return measure

    def __len__(self):
        with self._lock:
            return len(self._items)


DEFAULT_CACHE = MeasureCache()


@dataclass(frozen=True)
class LowerBoundCertificate:
    measure: CircleMeasure
    claimed_disc_lower: float
    witness: WitnessPair
    mu_id: dict
    pr_geq: float
    identity_sum: complex
    scan_t: float
    scan_grid: int

    def to_dict(self) -> dict:
        return {
            "claimed_disc_lower": self.claimed_disc_lower,
            "witness": self.witness.to_dict(),
            "mu_id": self.mu_id,
            "pr_geq": self.pr_geq,
            "identity_sum": [self.identity_sum.real, self.identity_sum.imag],
            "scan_t": self.scan_t,
            "scan_grid": self.scan_grid,
            "measure": self.measure.to_dict(),
        }


def verify_certificate(mu: EntryDistribution, measure: CircleMeasure, T_scan: int | None = None,
                       cache: MeasureCache | None = DEFAULT_CACHE) -> LowerBoundCertificate:
    """Check the lower-bound chain for ``mu`` and return an explicit witness.

    ``mu`` is read in the Toeplitz frame; a distribution tagged
    ``frame="hankel"`` is moved there first. If ``Pr_mu[j >= k] < 1/2`` the
    other side is needed: it is obtained by :func:`reflect_measure` when the
    degree allows, otherwise synthesised with the same grid and solver.
    """
    mu_id = dict(mu.meta)
    if mu.meta.get("frame") == "hankel":
        mu = hankel_to_toeplitz(mu)
        mu_id["bridged"] = "hankel->toeplitz"
    n = mu.n
    if measure.n < n - 1:
        raise ValueError(f"measure degree {measure.n} below n-1={n - 1}")
    if T_scan is not None and T_scan < 2 * n:
        raise ValueError(f"scan grid {T_scan} below 2n={2 * n}")

    pr_geq = math.fsum(np.tril(mu.weights).ravel().tolist())
    side = Side.NONNEGATIVE if pr_geq >= 0.5 else Side.NEGATIVE
    if measure.side is not side:
        if measure.n - 1 >= n - 1:
            measure = reflect_measure(measure)
        else:
            params = SolverParams(**{k: measure.solver[k] for k in ("max_iters", "step", "tol")})
            target = FourierTarget(measure.n, side)
            measure = (cache.get(target, measure.T, params) if cache is not None
                       else synthesize_measure(target, measure.T, params))

    a = diagonal_aggregates(mu)
    d = np.arange(-(n - 1), n)
    coef = scipy.fft.ifft(measure.atoms)[d % measure.T]
    terms = a * coef
    identity = complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))
    diagnostics = {"pr_geq": pr_geq, "norm": measure.norm, "identity_sum": abs(identity)}
    if abs(identity) < 0.5 - 1e-10:
        raise CertificateError("Fourier identity below 1/2", diagnostics)

    # the measure's own grid is where the averaging argument guarantees success
    grids = [measure.T] if T_scan is None or T_scan == measure.T else [T_scan, measure.T]
    grids = [g for g in grids if g >= 2 * n] or [2 * n]
    scans = [character_witness_scan(mu, g) for g in grids]
    scan = max(scans, key=lambda r: r.value)
    threshold = (0.5 - 1e-6) / measure.norm
    diagnostics["scan_max"] = scan.value
    if scan.value < threshold:
        raise CertificateError("character scan below 1/(2 ||nu||)", diagnostics)
    return LowerBoundCertificate(
        measure, certified_lower_bound(measure), scan.witness, mu_id, pr_geq,
        identity, scan.t, scan.grid,
    )


def write_measure_binary(measure: CircleMeasure, fh) -> None:
    """``CMES1`` + u32 header length + JSON header + little-endian (re, im) doubles."""
    header = json.dumps({
        "n": measure.n, "side": measure.side.value, "T": measure.T, "norm": measure.norm,
        "solver": measure.solver, "converged": measure.converged,
        "iterations": measure.iterations,
    }).encode()
    fh.write(BINARY_MAGIC)
    fh.write(struct.pack("<I", len(header)))
    fh.write(header)
    pairs = np.empty((measure.T, 2), dtype="<f8")
    pairs[:, 0] = measure.atoms.real
    pairs[:, 1] = measure.atoms.imag
    fh.write(pairs.tobytes())


def read_measure_binary(fh) -> CircleMeasure:
    if isinstance(fh, (bytes, bytearray)):
        fh = io.BytesIO(fh)
    if fh.read(len(BINARY_MAGIC)) != BINARY_MAGIC:
        raise ValueError("not a CMES1 measure file")
    (hlen,) = struct.unpack("<I", fh.read(4))
    h = json.loads(fh.read(hlen).decode())
    T = int(h["T"])
    raw = fh.read(16 * T)
    if len(raw) != 16 * T:
        raise ValueError("truncated measure file")
    pairs = np.frombuffer(raw, dtype="<f8").reshape(T, 2)
    atoms = pairs[:, 0] + 1j * pairs[:, 1]
    return CircleMeasure(
        int(h["n"]), Side(h["side"]), T, atoms, float(h["norm"]),
        bool(h["converged"]), int(h.get("iterations", 0)), dict(h["solver"]),
    )
