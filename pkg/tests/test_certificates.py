import io
import json
import math
import threading

import numpy as np
import pytest

from gtdisc.certificates import (
    CertificateError,
    CircleMeasure,
    FourierTarget,
    MeasureCache,
    Side,
    SolverParams,
    certified_lower_bound,
    fourier_residual,
    measure_fourier,
    measure_norm,
    read_measure_binary,
    reflect_measure,
    synthesize_measure,
    verify_certificate,
    write_measure_binary,
)
from gtdisc.discrepancy import (
    alternating_ascent,
    eval_bilinear,
    hankel_to_toeplitz,
    spectral_upper_bound,
    weighted_matrix,
)
from gtdisc.distributions import (
    EntryDistribution,
    mu_star,
    point_mass,
    random_distribution,
    uniform_distribution,
)
from gtdisc.matrices import gt_toeplitz

from oracles import N1_MEASURE_NORM

_MEASURES = {}


def measure(n, side=Side.NONNEGATIVE, T=None, solver=None):
    key = (n, side, T, solver)
    if key not in _MEASURES:
        _MEASURES[key] = synthesize_measure(FourierTarget(n, side), T, solver)
    return _MEASURES[key]


def constant_measure(T=9):
    atoms = np.ones(T, dtype=complex)
    return CircleMeasure(0, Side.NONNEGATIVE, T, atoms, 1.0)


def test_degree_zero_is_constant():
    m = synthesize_measure(FourierTarget(0), 7)
    assert m.norm == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(m.atoms, np.ones(7), atol=1e-12)


def test_grid_guard():
    with pytest.raises(ValueError):
        synthesize_measure(FourierTarget(4), 16)


def test_fourier_coefficients_of_constant():
    m = constant_measure()
    assert measure_fourier(m, 0) == pytest.approx(1.0)
    assert abs(measure_fourier(m, 3)) < 1e-15
    with pytest.raises(ValueError):
        measure_fourier(m, 9)
    assert measure_norm(m) == 1.0


def test_norm_homogeneous():
    m = measure(3)
    doubled = CircleMeasure(m.n, m.side, m.T, 2 * m.atoms, 2 * m.norm)
    assert measure_norm(doubled) == pytest.approx(2 * measure_norm(m), rel=1e-15)


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32, 64])
def test_synthesised_norm_within_log_bound(n):
    m = measure(n)
    assert fourier_residual(m) <= 1e-8
    assert 1.0 <= m.norm <= math.log(n) / math.pi + 2
    assert abs(measure_fourier(m, -n)) <= 1e-8
    assert measure_fourier(m, n) == pytest.approx(1.0, abs=1e-8)
    assert m.norm == pytest.approx(measure_norm(m), rel=1e-12)


def test_degree_one_matches_conic_oracle():
    m = synthesize_measure(FourierTarget(1), 4096, SolverParams(max_iters=40000, step=100.0))
    assert m.norm == pytest.approx(N1_MEASURE_NORM, abs=1e-4)
    assert m.norm >= N1_MEASURE_NORM - 1e-9  # a feasible measure cannot beat the optimum


@pytest.mark.slow
def test_conic_oracle_value_is_reproducible():
    pytest.importorskip("cvxpy")
    from oracles import n1_measure_norm_cvxpy

    assert n1_measure_norm_cvxpy() == pytest.approx(N1_MEASURE_NORM, abs=1e-7)


def test_norm_nondecreasing_in_degree():
    norms = [measure(n).norm for n in range(0, 13)]
    assert all(b >= a - 1e-4 for a, b in zip(norms, norms[1:]))


def test_certified_bound_values():
    assert certified_lower_bound(constant_measure()) == 0.5
    m = measure(64)
    assert certified_lower_bound(m) == pytest.approx(0.5 / m.norm)
    assert certified_lower_bound(m) >= 0.5 / (math.log(64) / math.pi + 2)


@pytest.mark.parametrize("n", range(2, 13))
def test_lower_bound_below_upper_bound(n):
    assert certified_lower_bound(measure(n)) <= spectral_upper_bound(n)[1] + 1e-6


@pytest.mark.parametrize("n", [1, 3, 8])
def test_reflection_maps_sides(n):
    m = measure(n)
    r = reflect_measure(m)
    assert r.side is Side.NEGATIVE and r.n == n - 1
    assert r.norm == pytest.approx(m.norm, rel=1e-13)
    for ell in range(-(n - 1), n):
        assert measure_fourier(r, ell) == pytest.approx(1.0 if ell < 0 else 0.0, abs=1e-8)


@pytest.mark.parametrize("n", [2, 5, 9])
def test_negative_side_norm_sandwiched(n):
    T = 8 * (n + 1) + 1
    solver = SolverParams(step=10.0)
    lo = measure(n - 1, T=T, solver=solver).norm
    mid = measure(n, Side.NEGATIVE, T=T, solver=solver).norm
    hi = measure(n + 1, T=T, solver=solver).norm
    assert lo - 1e-4 <= mid <= hi + 1e-4


def test_point_mass_certificate():
    mu = point_mass(5, 4, 2)
    cert = verify_certificate(mu, measure(5))
    assert cert.identity_sum == pytest.approx(1.0, abs=1e-8)
    assert cert.witness.value == pytest.approx(1.0, abs=1e-12)


def test_uniform_certificate_n8():
    m = measure(8)
    cert = verify_certificate(uniform_distribution(8), m)
    assert cert.witness.value >= (0.5 - 1e-6) / m.norm
    assert cert.claimed_disc_lower <= cert.witness.value + 1e-6


def test_mu_star_sixteen_through_bridge():
    m = measure(16)
    cert = verify_certificate(mu_star(16), m, T_scan=64)
    assert cert.mu_id["bridged"] == "hankel->toeplitz"
    assert cert.witness.value >= 1 / (2 * m.norm) - 1e-6
    mu_t = hankel_to_toeplitz(mu_star(16))
    v = abs(eval_bilinear(gt_toeplitz(16), mu_t, cert.witness.x, cert.witness.y))
    assert v == pytest.approx(cert.witness.value, abs=1e-10)


def test_random_fuzz_n16():
    m = measure(16)
    for seed in range(20):
        cert = verify_certificate(random_distribution(16, seed), m)
        assert cert.witness.value >= (0.5 - 1e-6) / m.norm


def test_negative_side_uses_reflection():
    n = 6
    w = np.triu(np.ones((n, n)), 1)
    mu = EntryDistribution(n, w / w.sum(), {"kind": "upper"})
    cert = verify_certificate(mu, measure(n))
    assert cert.pr_geq == 0.0
    assert cert.measure.side is Side.NEGATIVE
    assert cert.measure.norm == pytest.approx(measure(n).norm)


def test_negative_side_low_degree_synthesises():
    n = 6
    w = np.triu(np.ones((n, n)), 1)
    mu = EntryDistribution(n, w / w.sum(), {"kind": "upper"})
    cache = MeasureCache()
    low = measure(n - 1, T=8 * n + 1)
    cert = verify_certificate(mu, low, cache=cache)
    assert cert.measure.side is Side.NEGATIVE and len(cache) == 1


def test_bad_measure_reports_diagnostics():
    n = 4
    m = measure(n)
    bad = CircleMeasure(n, Side.NONNEGATIVE, m.T, 0.1 * m.atoms, 0.1 * m.norm)
    with pytest.raises(CertificateError) as info:
        verify_certificate(uniform_distribution(n), bad)
    assert {"pr_geq", "norm", "identity_sum"} <= set(info.value.diagnostics)


def test_certificate_rejects_low_degree_and_small_grid():
    with pytest.raises(ValueError):
        verify_certificate(uniform_distribution(8), measure(3))
    with pytest.raises(ValueError):
        verify_certificate(uniform_distribution(8), measure(8), T_scan=10)


@pytest.mark.parametrize("n", [2, 5, 8, 12])
def test_scan_witness_seeds_complex_ascent(n):
    m = measure(n)
    G = gt_toeplitz(n)
    for mu in [uniform_distribution(n), random_distribution(n, n)]:
        cert = verify_certificate(mu, m)
        x, y, hist = alternating_ascent(weighted_matrix(G, mu), cert.witness.x)
        assert hist[-1] >= (0.5 - 1e-6) / m.norm


def test_measure_cache_single_synthesis_under_threads():
    cache = MeasureCache()
    target = FourierTarget(5)
    results = []

    def worker():
        results.append(cache.get(target, 41))

    threads = [threading.Thread(target=worker) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(cache) == 1
    assert all(r is results[0] for r in results)


def test_measure_json_round_trip():
    m = measure(3)
    back = CircleMeasure.from_dict(json.loads(m.to_json()))
    assert np.array_equal(back.atoms, m.atoms)
    assert back.side is m.side and back.norm == m.norm and back.converged == m.converged


def test_measure_binary_round_trip():
    m = measure(4)
    buf = io.BytesIO()
    write_measure_binary(m, buf)
    raw = buf.getvalue()
    assert raw[:5] == b"CMES1"
    back = read_measure_binary(raw)
    assert np.array_equal(back.atoms, m.atoms) and back.T == m.T
    with pytest.raises(ValueError):
        read_measure_binary(b"XXXXX")
    with pytest.raises(ValueError):
        read_measure_binary(raw[:-8])


def test_nonconverged_flag_when_budget_exhausted():
    m = synthesize_measure(FourierTarget(6), 49, SolverParams(max_iters=50))
    assert not m.converged
    assert fourier_residual(m) <= 1e-8
