"""Dense tableau simplex for the cut-generated minimax LP.

The minimax LP over cuts ``B_c`` (each ``B_c[cell] = G[cell] x_j y_k``) is

    min t   s.t.  +-<B_c, mu> <= t,  sum(mu) = 1,  mu >= 0.

It is solved through its dual

    max u   s.t.  u <= sum_{c,s} lam_{c,s} s B_c[cell]  for every cell,
                  sum(lam) = 1,  lam >= 0,

written with ``w = u + 1 >= 0`` so that every row has right-hand side 1.
Cuts become columns, so adding a cut keeps the current basis feasible and
the next solve warm-starts. ``mu`` is read off the reduced costs of the
cell-row slacks.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["CutLP", "LPNumericalError"]

_ZERO = 1e-13  # rhs values below this are exact zeros
_TIE = 1e-12  # relative tolerance for ratio-test ties


class LPNumericalError(RuntimeError):
    def __init__(self, message, basis):
        super().__init__(message)
        self.basis = basis


class CutLP:
    """Warm-startable tableau for the dual LP.

    Pricing is Dantzig's most negative reduced cost; after ``bland_after``
    consecutive degenerate pivots it switches to Bland's rule (lowest-index
    entering and leaving variables) until a pivot makes progress, which
    rules out cycling.
    """

    def __init__(self, n_cells: int, eps: float = 1e-9, max_pivots: int = 10**6,
                 refactor_every: int = 100, bland_after: int = 50,
                 perturb: float = 1e-7):
        self.n_cells = N = n_cells
        self.eps = eps
        self.max_pivots = max_pivots
        self.refactor_every = refactor_every
        self.bland_after = bland_after
        self.m = m = N + 1
        # column layout: 0 = w, 1..N = cell slacks, N+1 = artificial, N+2.. = lambdas
        self._first_lam = N + 2
        self.ncols = N + 2
        cap = N + 2 + 64
        self._tab = np.zeros((m + 1, cap))
        self._rhs = np.zeros(m + 1)
        self._tab[:N, 0] = 1.0
        self._tab[:m, 1 : N + 2] = np.eye(m)
        self._rhs[:m] = 1.0
        self._tab[m, 0] = -1.0  # objective: minimise -w
        # original columns and costs, kept for refactorisation
        self._A = self._tab[:m].copy()
        self._cost = self._tab[m].copy()
        self._b = self._rhs[:m].copy()
        # a small distinct perturbation of the cell-row rhs breaks degeneracy;
        # it is removed on a copy of the tableau before the solution is read
        rng = np.random.default_rng(12345)
        self._b_work = self._b.copy()
        self._b_work[:N] += perturb * rng.random(N)
        self._rhs[:m] = self._b_work
        self.basis = list(range(1, N + 2))
        self._started = False
        self.pivots = 0

    @property
    def n_lambda(self) -> int:
        return self.ncols - self._first_lam

    def _binv(self):
        return self._tab[: self.m, 1 : self.n_cells + 2]

    def add_cut(self, b: np.ndarray) -> None:
        """Append the two columns ``lam_{c,+}`` and ``lam_{c,-}`` for cut vector ``b``."""
        b = np.asarray(b, dtype=np.float64).ravel()
        if b.shape != (self.n_cells,):
            raise ValueError("cut vector has wrong length")
        cols = np.zeros((self.m, 2))
        cols[: self.n_cells, 0] = -b
        cols[: self.n_cells, 1] = b
        cols[self.n_cells, :] = 1.0
        need = self.ncols + 2
        if need > self._tab.shape[1]:
            cap = max(need, 2 * self._tab.shape[1])
            grown = np.zeros((self.m + 1, cap))
            grown[:, : self.ncols] = self._tab[:, : self.ncols]
            self._tab = grown
            grown = np.zeros((self.m, cap))
            grown[:, : self.ncols] = self._A[:, : self.ncols]
            self._A = grown
            self._cost = np.concatenate([self._cost, np.zeros(cap - self._cost.shape[0])])
        self._A[:, self.ncols : need] = cols
        binv = self._binv()
        self._tab[: self.m, self.ncols : need] = binv @ cols
        # reduced cost c_j - y^T A_j, with -y read off the identity columns
        self._tab[self.m, self.ncols : need] = self._tab[self.m, 1 : self.n_cells + 2] @ cols
        self.ncols = need

    def _pivot(self, r, e):
        tab, rhs = self._tab[:, : self.ncols], self._rhs
        p = tab[r, e]
        tab[r] /= p
        rhs[r] /= p
        col = tab[:, e].copy()
        col[r] = 0.0
        tab -= np.outer(col, tab[r])
        rhs -= col * rhs[r]
        tab[:, e] = 0.0
        tab[r, e] = 1.0
        self.basis[r] = e
        self.pivots += 1
        if self.pivots % self.refactor_every == 0:
            self._refactor()
        else:
            self._snap()

    def _snap(self):
        # consistent zero decisions keep the ratio test from cycling on roundoff
        rhs = self._rhs[: self.m]
        rhs[np.abs(rhs) <= _ZERO] = 0.0

    def _refactor(self):
        """Rebuild the tableau as ``B^{-1} A`` from the original columns."""
        m, nc = self.m, self.ncols
        A = self._A[:, :nc]
        B = A[:, self.basis]
        try:
            binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise LPNumericalError("singular basis", list(self.basis)) from exc
        tab = binv @ A
        tab[:, self.basis] = np.eye(m)
        cb = self._cost[self.basis]
        self._tab[:m, :nc] = tab
        self._tab[m, :nc] = self._cost[:nc] - cb @ tab
        self._tab[m, self.basis] = 0.0
        self._rhs[:m] = binv @ self._b_work
        self._rhs[m] = -cb @ self._rhs[:m]
        self._snap()

    def solve(self):
        """Run primal simplex to optimality; return ``(mu, t)``."""
        if self.n_lambda == 0:
            raise ValueError("at least one cut is required")
        if not self._started:
            # lam of the first cut enters the convexity row; rhs stays
            # 1 + b >= 0 on cell rows, so the basis is feasible
            self._pivot(self.n_cells, self._first_lam)
            self._started = True
        eps = self.eps
        m = self.m
        art = self.n_cells + 1
        degenerate_run = 0
        while True:
            if self.pivots > self.max_pivots:
                raise LPNumericalError("pivot limit exceeded", list(self.basis))
            red = self._tab[m, : self.ncols]
            candidates = np.flatnonzero(red < -eps)
            candidates = candidates[candidates != art]
            if candidates.size == 0:
                break
            bland = degenerate_run >= self.bland_after
            if bland:
                e = int(candidates[0])  # lowest index enters
            else:
                e = int(candidates[np.argmin(red[candidates])])
            col = self._tab[:m, e]
            pos = np.flatnonzero(col > eps)
            if pos.size == 0:
                raise LPNumericalError("unbounded direction in a bounded LP", list(self.basis))
            ratios = self._rhs[pos] / col[pos]
            rmin = ratios.min()
            ties = pos[ratios <= rmin + _TIE * max(1.0, abs(rmin))]
            # among ties, the row whose basic variable has the lowest index
            r = int(min(ties, key=lambda i: self.basis[i]))
            degenerate_run = degenerate_run + 1 if rmin <= _TIE else 0
            self._pivot(r, e)
        if np.any(self._rhs[:m] < -1e3 * eps):
            raise LPNumericalError("basis lost primal feasibility", list(self.basis))
        return self._read_unperturbed()

    def _read_unperturbed(self):
        """Restore the true rhs on a copy, repair with dual simplex, read ``(mu, t)``."""
        saved = (self._tab.copy(), self._rhs.copy(), list(self.basis), self.pivots, self._b_work)
        try:
            self._b_work = self._b
            self._refactor()
            m, eps, art = self.m, self.eps, self.n_cells + 1
            for _ in range(self.max_pivots):
                rhs = self._rhs[:m]
                r = int(np.argmin(rhs))
                if rhs[r] >= -_ZERO:
                    break
                row = self._tab[r, : self.ncols]
                cand = np.flatnonzero(row < -eps)
                cand = cand[cand != art]
                if cand.size == 0:
                    raise LPNumericalError("restored rhs is infeasible", list(self.basis))
                red = np.maximum(self._tab[m, cand], 0.0)
                ratios = red / -row[cand]
                e = int(cand[np.argmin(ratios)])
                self._pivot(r, e)
            else:
                raise LPNumericalError("pivot limit exceeded in cleanup", list(self.basis))
            mu = np.clip(self._tab[m, 1 : self.n_cells + 1], 0.0, None)
            w = next(self._rhs[i] for i, v in enumerate(self.basis) if v == 0)
        finally:
            self._tab, self._rhs, self.basis, self.pivots, self._b_work = saved
        total = math.fsum(mu.tolist())
        if not total > 0:
            raise LPNumericalError("degenerate dual solution", list(self.basis))
        mu = mu / total
        cut_rows = self._A[: self.n_cells, self._first_lam : self.ncols : 2]
        t = float(np.max(np.abs(mu @ cut_rows)))
        # the LP value and the exact max over cuts agree at optimality
        if abs(t - (w - 1.0)) > 1e3 * eps * max(1.0, abs(t)):
            raise LPNumericalError(f"primal {w - 1.0} and dual {t} values disagree", list(self.basis))
        return mu, t
