"""Independent reference computations used only by the tests.

They share no code paths with the package kernels: plain loops, dense
enumeration and third-party solvers.
"""

import itertools
import math

import numpy as np

# Minimum norm of a degree-1 nonnegative-half measure on a 4096-point grid,
# from the dual second-order cone program solved by CLARABEL (see
# ``n1_measure_norm_cvxpy``); 2/sqrt(3) to the solver's accuracy.
N1_MEASURE_NORM = 1.1547006067773709


def naive_boolean_disc(W):
    """``max |x^T W y|`` over all sign vectors, by direct double sums."""
    n = W.shape[0]
    best = 0.0
    for xs in itertools.product((1.0, -1.0), repeat=n):
        for ys in itertools.product((1.0, -1.0), repeat=n):
            s = 0.0
            for j in range(n):
                for k in range(n):
                    s += W[j, k] * xs[j] * ys[k]
            best = max(best, abs(s))
    return best


def naive_boolean_disc_fast(W):
    """Same maximum with the inner ``y`` solved in closed form; for n up to 12."""
    n = W.shape[0]
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    return float(np.max(np.abs(signs @ W).sum(axis=1)))


def complex_phase_grid(W, points=64):
    """``max |x^T W y|`` at n = 2 over a phase grid, global phase fixed by ``x_1 = 1``."""
    assert W.shape == (2, 2)
    ph = np.exp(2j * np.pi * np.arange(points) / points)
    best = 0.0
    for a in ph:
        x = np.array([1.0, a])
        c = x @ W  # column sums; y phases on the grid
        vals = np.abs(c[0] * ph[:, None] + c[1] * ph[None, :])
        best = max(best, float(vals.max()))
    return best


def full_lp_minimax(G):
    """Boolean minimax with every sign pattern as a constraint, by HiGHS."""
    from scipy.optimize import linprog

    n = G.n
    E = np.asarray(G.entries, dtype=float)
    rows = []
    for xs in itertools.product((1.0, -1.0), repeat=n - 1):
        x = np.array((1.0,) + xs)
        for ys in itertools.product((1.0, -1.0), repeat=n):
            v = (E * np.outer(x, ys)).ravel()
            rows.append(v)
            rows.append(-v)
    A = np.array(rows)
    N = n * n
    # variables: mu (N), t
    A_ub = np.hstack([A, -np.ones((A.shape[0], 1))])
    b_ub = np.zeros(A.shape[0])
    A_eq = np.hstack([np.ones((1, N)), np.zeros((1, 1))])
    c = np.zeros(N + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * N + [(None, None)], method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0
    return res.fun


def n1_measure_norm_cvxpy(T=4096):
    """Dual SOCP for the degree-1 minimum-norm measure: max Re<target, p>, |E p| <= 1."""
    import cvxpy as cp

    n = 1
    s = np.arange(T)
    p = cp.Variable(2 * n + 1, complex=True)
    E = np.exp(-2j * np.pi * np.outer(s, np.arange(-n, n + 1)) / T)
    tgt = np.array([1.0 if ell >= 0 else 0.0 for ell in range(-n, n + 1)])
    prob = cp.Problem(cp.Maximize(cp.real(tgt @ p)), [cp.abs(E @ p) <= 1])
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def pi_squared_partial(L):
    return 8.0 * math.fsum(1.0 / (2 * ell + 1) ** 2 for ell in range(L + 1))


def eta_direct_value(m):
    """``sum G eta x y`` with the heavy-string witness, by explicit loops over the pmf support."""
    n = 2**m
    thr = math.ceil(m / 2 + math.sqrt(m))
    total = 0.0
    terms = []
    for j in range(n):
        xj = 1.0 if bin(j).count("1") >= thr else 0.0
        if xj == 0.0:
            continue
        for k in range(n):
            d = j ^ k
            if d == 0:
                continue
            top = d.bit_length() - 1
            w = (1.0 / m) * 2.0 ** (-m - top)
            g = 1.0 if j >= k else -1.0
            terms.append(g * w)
    total = math.fsum(terms)
    return total
