import math

import numpy as np
import pytest
from scipy.special import comb

from spinmix.fock import enumerate_sector, number_sector, reduced_basis
from spinmix.model import ReducedModelParams, build_reduced, ladder_parity
from spinmix.observe import (BasisMismatchError, ClassifierThresholds, amplitude_profile,
                             analytic_overlap, classify_profile, entropy, ghz_score,
                             number_stats, observe, reference_state, schmidt_rank_bound,
                             spin1_css_spinor)
from spinmix.solve import ground_state_symmetrized


def uniform(N):
    return np.full(N + 1, 1 / math.sqrt(N + 1))


def cat(N):
    v = np.zeros(N + 1)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return v


def corner(N, k=0):
    v = np.zeros(N + 1)
    v[k] = 1.0
    return v


def binomial_amplitudes(N):
    k = np.arange(N + 1)
    return np.sqrt(comb(N, k) / 2.0 ** N)


def test_uniform_fluctuation():
    mean, fl = number_stats(uniform(100), reduced_basis(100))
    assert fl[1] == pytest.approx(math.sqrt(850), rel=1e-12)
    assert mean[1] == pytest.approx(50)
    assert fl[0] == 0 and fl[5] == 0


def test_cat_fluctuation():
    mean, fl = number_stats(cat(100), reduced_basis(100))
    assert np.allclose(mean[[1, 2, 3, 4]], 50) and fl[1] == pytest.approx(50)


def test_unnormalized_rejected():
    with pytest.raises(ValueError):
        number_stats(2 * uniform(4), reduced_basis(4))
    with pytest.raises(BasisMismatchError):
        number_stats(uniform(4), reduced_basis(6))


def test_profiles():
    p = amplitude_profile(uniform(100), reduced_basis(100))
    assert np.allclose(p.weights, 1 / 101) and p.labels == list(range(101))
    assert amplitude_profile(corner(10, 3), reduced_basis(10)).weights[3] == 1
    assert np.allclose(amplitude_profile(binomial_amplitudes(2), reduced_basis(2)).weights,
                       [0.25, 0.5, 0.25])
    full = amplitude_profile(np.eye(8)[0], enumerate_sector(2, 2, 0))
    assert full.labels[0][1] == enumerate_sector(2, 2, 0).states[0]
    assert abs(full.weights.sum() - 1) < 1e-12


def test_entropy_examples():
    b = reduced_basis(20)
    assert entropy(corner(20, 10), b).raw == 0.0
    e = entropy(uniform(20), b)
    assert e.normalized == pytest.approx(1.0, abs=1e-12) and e.rank_bound == 21
    e = entropy(cat(20), b)
    assert e.raw == pytest.approx(1.0, abs=1e-12)
    assert e.normalized == pytest.approx(1 / math.log2(21), abs=1e-12)
    with pytest.raises(ValueError):
        entropy(cat(20), b, cut="C")


def test_entropy_against_svd_oracle():
    b = number_sector(1, 1)
    rng = np.random.default_rng(7)
    v = rng.standard_normal(9)
    v /= np.linalg.norm(v)
    M = np.zeros((3, 3))
    for amp, s in zip(v, b.states):
        M[s[:3].index(1), s[3:].index(1)] = amp
    sv = np.linalg.svd(M, compute_uv=False) ** 2
    oracle = -sum(x * math.log2(x) for x in sv if x > 0)
    assert entropy(v, b, "A").raw == pytest.approx(oracle, abs=1e-12)
    assert entropy(v, b, "B").raw == pytest.approx(oracle, abs=1e-12)


def test_schmidt_rank_bounds():
    assert schmidt_rank_bound(reduced_basis(12)) == 13
    assert schmidt_rank_bound(enumerate_sector(2, 2, 0)) == 6
    assert schmidt_rank_bound(number_sector(1, 2)) == 3


def test_ghz_scores():
    assert ghz_score(cat(100)) == pytest.approx(1.0)
    assert ghz_score(uniform(100)) == pytest.approx(2 / 101)
    assert ghz_score(corner(100)) == 0.0
    scores = [ghz_score(uniform(N)) for N in (10, 20, 40, 80)]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_classification():
    assert classify_profile(np.full(101, 1 / 101)) == "uniform"
    assert classify_profile(binomial_amplitudes(100) ** 2) == "gaussian"
    w = np.zeros(101)
    w[0] = w[-1] = 0.5
    assert classify_profile(w) == "bimodal"
    assert classify_profile(corner(50) ** 2) == "corner_fock"
    w = np.zeros(11)
    w[2], w[5] = 0.5, 0.5
    assert classify_profile(w) == "other"
    assert classify_profile(np.array([0.85, 0.15])) == "other"
    assert classify_profile(np.array([0.85, 0.15]), ClassifierThresholds(corner_max=0.8)) == "corner_fock"


def test_overlaps():
    b = reduced_basis(10)
    assert analytic_overlap(uniform(10), b, "uniform") == pytest.approx(1.0)
    assert analytic_overlap(corner(10), b, "cat") == pytest.approx(0.5)
    with pytest.raises(BasisMismatchError):
        analytic_overlap(np.eye(8)[0], enumerate_sector(2, 2, 0), "cat")
    with pytest.raises(ValueError):
        analytic_overlap(uniform(10), b, "squeezed")


def test_coherent_product_projection():
    ref = reference_state("coherent_product", reduced_basis(4), gamma1_sign=1.0)
    k = np.arange(5)
    expect = (-1.0) ** k * comb(4, k)
    assert np.allclose(ref, expect / np.linalg.norm(expect))
    ref = reference_state("coherent_product", reduced_basis(4), gamma1_sign=-1.0)
    assert np.all(ref > 0)


def test_spin1_css_amplitudes():
    eps = spin1_css_spinor(math.pi / 2, 0.0)
    assert np.allclose(eps, [0.5, 1 / math.sqrt(2), 0.5])
    b = number_sector(2, 0)
    ref = reference_state("spin1_css", b, theta=math.pi / 2, phi=0.0)
    # sqrt(2!/(1!1!)) * eps_+1 * eps_0
    assert ref[b.lookup((1, 1, 0, 0, 0, 0))] == pytest.approx(0.5)
    full = enumerate_sector(2, 2, 4)
    assert analytic_overlap(np.array([1.0]), full, "spin1_css", theta=0.0) == pytest.approx(1.0)
    with pytest.raises(BasisMismatchError):
        reference_state("spin1_css", enumerate_sector(2, 2, 0), theta=0.0)


def test_spin1_css_phase():
    eps = spin1_css_spinor(1.0, 0.7)
    assert abs(np.linalg.norm(eps) - 1) < 1e-12
    assert np.angle(eps[0]) == pytest.approx(-0.7) and np.angle(eps[2]) == pytest.approx(0.7)


def test_observe_report_invariants():
    N = 20
    r = ground_state_symmetrized(build_reduced(ReducedModelParams(1.0, -0.3, N)), ladder_parity(N))
    rep = observe(r.amplitudes, reduced_basis(N))
    assert rep.mean_occ[:3].sum() == pytest.approx(N, abs=1e-9)
    assert rep.mean_occ[3:].sum() == pytest.approx(N, abs=1e-9)
    assert np.all(rep.fluct_occ >= 0) and 0 <= rep.entropy_normalized <= 1
    assert rep.classification == "gaussian"
    row = rep.as_row()
    assert row["n_mean_A0"] == rep.mean_occ[1] and row["classification"] == "gaussian"
