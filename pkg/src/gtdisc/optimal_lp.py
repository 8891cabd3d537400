"""Exact boolean minimax discrepancy by column generation, and the bound table."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .certificates import DEFAULT_CACHE, FourierTarget, SolverParams, certified_lower_bound, default_grid
from .discrepancy import disc_exact_boolean, spectral_upper_bound
from .distributions import EntryDistribution
from .matrices import SignMatrix, gt_hankel
from .simplex import CutLP, LPNumericalError

__all__ = [
    "Cut",
    "CutSet",
    "MinimaxResult",
    "lp_solve",
    "optimal_distribution",
    "sandwich_table",
    "TABLE_COLUMNS",
    "LP_MAX_N",
    "LPNumericalError",
]

LP_MAX_N = 14
TABLE_COLUMNS = ["n", "lower", "upper_loose", "upper_tight", "lp_value", "reference"]


@dataclass(frozen=True)
class Cut:
    x: np.ndarray
    y: np.ndarray
    iteration: int

    def vector(self, G: SignMatrix) -> np.ndarray:
        """``G[j,k] x_j y_k`` flattened row-major."""
        return (np.asarray(G.entries) * np.outer(self.x, self.y)).ravel()


class CutSet:
    """Sign-pattern pairs, deduplicated up to ``(x, y) ~ (-x, -y)``."""

    def __init__(self):
        self._cuts = []
        self._keys = set()

    @staticmethod
    def _canonical(x, y):
        x = np.where(np.asarray(x) < 0, -1.0, 1.0)
        y = np.where(np.asarray(y) < 0, -1.0, 1.0)
        if x[0] < 0:
            x, y = -x, -y
        return x, y

    def add(self, x, y, iteration: int = 0) -> bool:
        """Add a cut; return False if an equivalent cut is already present."""
        x, y = self._canonical(x, y)
        key = (x.astype(np.int8).tobytes(), y.astype(np.int8).tobytes())
        if key in self._keys:
            return False
        self._keys.add(key)
        self._cuts.append(Cut(x, y, iteration))
        return True

    def __iter__(self):
        return iter(self._cuts)

    def __len__(self):
        return len(self._cuts)

    def __getitem__(self, i):
        return self._cuts[i]


@dataclass(frozen=True)
class MinimaxResult:
    mu_opt: EntryDistribution
    value: float
    gap: float
    iterations: int
    cuts: CutSet
    lp_history: list = field(default_factory=list)
    oracle_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "gap": self.gap,
            "iterations": self.iterations,
            "n_cuts": len(self.cuts),
            "lp_history": self.lp_history,
            "oracle_history": self.oracle_history,
            "mu_opt": self.mu_opt.weights.ravel().tolist(),
        }


def _distribution(G, mu, meta):
    return EntryDistribution(G.n, mu.reshape(G.n, G.n), meta)


def lp_solve(cuts: CutSet, G: SignMatrix, eps_lp: float = 1e-9):
    """``min t`` s.t. ``+-sum G mu x y <= t`` for every cut, ``mu`` a distribution.

    Returns ``(mu, t)``; raises :class:`LPNumericalError` carrying the basis
    on numerical failure.
    """
    if len(cuts) == 0:
        raise ValueError("at least one cut is required")
    lp = CutLP(G.n * G.n, eps=eps_lp)
    for cut in cuts:
        lp.add_cut(cut.vector(G))
    mu, t = lp.solve()
    return _distribution(G, mu, {"kind": "lp", "n_cuts": len(cuts)}), t


def optimal_distribution(G: SignMatrix, eps: float = 1e-6, max_iter: int = 10**6,
                         eps_lp: float = 1e-9, threads: int | None = None) -> MinimaxResult:
    """Boolean minimax ``inf_mu disc_mu(G)`` by cutting planes.

    Starts from the all-ones cut; each round solves the restricted LP and
    asks :func:`disc_exact_boolean` for the most violated sign pattern. Stops
    once the oracle value is within ``eps`` of the LP value; the returned
    ``value`` is that oracle value.
    """
    n = G.n
    if n > LP_MAX_N:
        raise ValueError(f"exact minimax limited to n <= {LP_MAX_N}")
    cuts = CutSet()
    cuts.add(np.ones(n), np.ones(n), 0)
    lp = CutLP(n * n, eps=eps_lp)
    lp.add_cut(cuts[0].vector(G))
    lp_hist, oracle_hist = [], []
    for it in range(1, max_iter + 1):
        mu_vec, t = lp.solve()
        mu = _distribution(G, mu_vec, {"kind": "minimax", "orientation": G.orientation.value})
        sep = disc_exact_boolean(G, mu, threads=threads)
        lp_hist.append(t)
        oracle_hist.append(sep.value)
        if sep.value <= t + eps:
            return MinimaxResult(mu, sep.value, sep.value - t, it, cuts, lp_hist, oracle_hist)
        if not cuts.add(sep.x, sep.y, it):
            raise LPNumericalError(
                f"oracle returned an existing cut (oracle {sep.value}, lp {t})", list(lp.basis)
            )
        lp.add_cut(cuts[len(cuts) - 1].vector(G))
    raise RuntimeError(f"column generation did not converge in {max_iter} iterations")


def sandwich_table(n_list, output: str | None = None, fmt: str | None = None,
                   T: int | None = None, solver: SolverParams | None = None,
                   lp_max_n: int = LP_MAX_N, lp_eps: float = 1e-6, cache=DEFAULT_CACHE):
    """Lower and upper bounds on ``disc(G_n)`` next to ``pi / (2 ln n)``.

    Returns ``(rows, report)``; ``report`` adds provenance. When ``output``
    is given the table is written there as CSV or JSON (by ``fmt`` or the
    file suffix).
    """
    solver = solver or SolverParams()
    started = time.time()
    rows, provenance = [], []
    for n in n_list:
        n = int(n)
        if n < 2:
            raise ValueError("table rows need n >= 2")
        grid = default_grid(n) if T is None else T
        measure = cache.get(FourierTarget(n), grid, solver)
        loose, tight = spectral_upper_bound(n)
        lp_value = None
        if n <= lp_max_n:
            lp_value = optimal_distribution(gt_hankel(n), lp_eps).value
        rows.append({
            "n": n,
            "lower": certified_lower_bound(measure),
            "upper_loose": loose,
            "upper_tight": tight,
            "lp_value": lp_value,
            "reference": math.pi / (2 * math.log(n)),
        })
        provenance.append({
            "n": n,
            "measure_key": list(cache.key(FourierTarget(n), grid, solver)),
            "measure_norm": measure.norm,
            "measure_converged": measure.converged,
            "measure_iterations": measure.iterations,
        })
    report = {
        "tool": "gtdisc",
        "version": __version__,
        "command": "table",
        "parameters": {
            "n": [int(n) for n in n_list],
            "T": T,
            "solver": {"max_iters": solver.max_iters, "step": solver.step, "tol": solver.tol},
            "lp_max_n": lp_max_n,
            "lp_eps": lp_eps,
            "seeds": {"spectral_restart": 0},
        },
        "rows": rows,
        "provenance": provenance,
        "wall_clock_seconds": time.time() - started,
    }
    if output is not None:
        fmt = fmt or ("json" if str(output).endswith(".json") else "csv")
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(table_json(report) if fmt == "json" else table_csv(rows, report))
    return rows, report


def table_csv(rows, report=None) -> str:
    buf = io.StringIO()
    if report is not None:
        meta = {k: report[k] for k in ("tool", "version", "parameters", "wall_clock_seconds")}
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row[k] is None else repr(row[k])) for k in TABLE_COLUMNS})
    return buf.getvalue()


def table_json(report) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
