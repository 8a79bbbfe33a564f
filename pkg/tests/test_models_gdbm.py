"""GDBM energy, mean-field inference, and patch denoising."""

import itertools
import math

import numpy as np
import pytest

from patchdenoise.errors import ShapeError
from patchdenoise.models import (
    GdbmParams,
    exact_log_partition,
    exact_posterior_small,
    gdbm_denoise_patch,
    gdbm_energy,
    gdbm_mean_field,
    mean_field_sweep,
    sigmoid,
)

from conftest import random_gdbm


def energy_by_terms(v, h, p):
    """Independent term-by-term energy evaluation (loops, no linear algebra)."""
    total = 0.0
    for i in range(p.n_visible):
        total += -((v[i] - p.b[i]) ** 2) / (2.0 * p.sigma2)
    for i in range(p.n_visible):
        for j in range(p.layer_sizes[0]):
            total += v[i] / p.sigma2 * p.W[i, j] * h[0][j]
    for l in range(p.n_layers):
        for j in range(p.layer_sizes[l]):
            total += p.c[l][j] * h[l][j]
    for l in range(p.n_layers - 1):
        for j in range(p.layer_sizes[l]):
            for k in range(p.layer_sizes[l + 1]):
                total += h[l][j] * p.U[l][j, k] * h[l + 1][k]
    return -total


def all_hidden_configs(sizes):
    total = sum(sizes)
    for bits in itertools.product((0.0, 1.0), repeat=total):
        out = []
        start = 0
        for n in sizes:
            out.append(np.asarray(bits[start:start + n]))
            start += n
        yield out


class TestEnergy:
    def test_zero_parameters_give_zero_energy(self):
        v = np.array([0.3, -0.7])
        p = GdbmParams(W=np.zeros((2, 2)), U=[np.zeros((2, 2))], b=v.copy(),
                       c=[np.zeros(2), np.zeros(2)])
        for h in all_hidden_configs([2, 2]):
            assert gdbm_energy(v, h, p) == 0.0

    def test_hand_evaluated_single_unit_chain(self):
        # 1 visible, two 1-unit layers, all couplings 1, v = 2:
        # -E = -v^2/2 + v*w*h1 + h1*u*h2 = -2 + 2 + 1, so E = -1
        p = GdbmParams(W=np.array([[1.0]]), U=[np.array([[1.0]])],
                       b=np.array([0.0]), c=[np.zeros(1), np.zeros(1)])
        e = gdbm_energy(np.array([2.0]), [np.array([1.0]), np.array([1.0])], p)
        assert e == pytest.approx(-1.0, abs=1e-12)

    def test_matches_term_by_term_oracle(self, rng):
        for _ in range(5):
            p = random_gdbm(rng, n_visible=3, sizes=(2, 2), scale=0.7)
            v = rng.standard_normal(3)
            for h in all_hidden_configs([2, 2]):
                assert gdbm_energy(v, h, p) == pytest.approx(
                    energy_by_terms(v, h, p), abs=1e-12)

    def test_boltzmann_normalization_by_quadrature(self, rng):
        # sum over all 16 hidden configs and integrate v on a Legendre grid:
        # total probability mass must be 1
        p = random_gdbm(rng, n_visible=2, sizes=(2, 2), scale=0.3)
        nodes, wts = np.polynomial.legendre.leggauss(120)
        lo, hi = -10.0, 10.0
        x = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * wts
        v1, v2 = np.meshgrid(x, x, indexing="ij")
        w2 = np.outer(w, w)
        z = math.exp(exact_log_partition(p))
        total = 0.0
        for h in all_hidden_configs([2, 2]):
            a = p.W @ h[0]
            g = p.c[0] @ h[0] + p.c[1] @ h[1] + h[0] @ p.U[0] @ h[1]
            neg_e = (-((v1 - p.b[0]) ** 2 + (v2 - p.b[1]) ** 2) / (2 * p.sigma2)
                     + (v1 * a[0] + v2 * a[1]) / p.sigma2 + g)
            total += np.sum(np.exp(neg_e) * w2)
        assert total / z == pytest.approx(1.0, abs=1e-6)

    def test_positive_bias_favours_active_unit(self, rng):
        # with zero couplings and positive c, configurations with the unit
        # on carry strictly larger Boltzmann weight
        p = GdbmParams(W=np.zeros((2, 2)), U=[np.zeros((2, 1))],
                       b=np.zeros(2), c=[np.array([0.8, 0.0]), np.zeros(1)])
        v = np.array([0.1, -0.2])
        on = gdbm_energy(v, [np.array([1.0, 0.0]), np.zeros(1)], p)
        off = gdbm_energy(v, [np.array([0.0, 0.0]), np.zeros(1)], p)
        assert on < off
        marg = exact_posterior_small(v, p)
        assert marg[0][0] > 0.5
        assert marg[0][1] == pytest.approx(0.5, abs=1e-12)

    def test_shape_errors(self, rng):
        p = random_gdbm(rng, n_visible=3, sizes=(2, 2))
        with pytest.raises(ShapeError):
            gdbm_energy(np.zeros(4), [np.zeros(2), np.zeros(2)], p)
        with pytest.raises(ShapeError):
            gdbm_energy(np.zeros(3), [np.zeros(2)], p)

    def test_parameter_containers_reject_bad_values(self):
        with pytest.raises(ShapeError):
            GdbmParams(W=np.full((2, 2), np.nan), U=[np.zeros((2, 2))],
                       b=np.zeros(2), c=[np.zeros(2), np.zeros(2)])
        with pytest.raises(ShapeError):
            GdbmParams(W=np.zeros((2, 2)), U=[np.zeros((2, 2))],
                       b=np.zeros(2), c=[np.zeros(2), np.zeros(2)],
                       sigma2=0.0)
        with pytest.raises(ShapeError):  # one hidden layer is not a GDBM
            GdbmParams(W=np.zeros((2, 2)), U=[], b=np.zeros(2),
                       c=[np.zeros(2)])
        with pytest.raises(ShapeError):  # chained dimensions must agree
            GdbmParams(W=np.zeros((2, 2)), U=[np.zeros((3, 2))],
                       b=np.zeros(2), c=[np.zeros(2), np.zeros(2)])


class TestMeanField:
    def test_decoupled_units_settle_at_sigmoid_bias(self):
        c1, c2 = np.array([0.4, -1.2]), np.array([0.9])
        p = GdbmParams(W=np.zeros((2, 2)), U=[np.zeros((2, 1))],
                       b=np.zeros(2), c=[c1, c2])
        state = gdbm_mean_field(np.array([0.5, 0.5]), p)
        np.testing.assert_allclose(state.mu[0], sigmoid(c1), atol=1e-15)
        np.testing.assert_allclose(state.mu[1], sigmoid(c2), atol=1e-15)

    def test_near_factorial_regime_matches_enumeration(self, rng):
        for _ in range(5):
            p = random_gdbm(rng, n_visible=4, sizes=(3, 3), scale=1e-2)
            v = rng.standard_normal(4)
            state = gdbm_mean_field(v, p)
            exact = exact_posterior_small(v, p)
            for mu, ex in zip(state.mu, exact):
                np.testing.assert_allclose(mu, ex, atol=1e-3)

    def test_converged_state_is_fixed_point(self, rng):
        p = random_gdbm(rng, n_visible=4, sizes=(3, 3), scale=0.3)
        v = rng.standard_normal(4)
        state = gdbm_mean_field(v, p, max_iters=200)
        _, delta = mean_field_sweep(v, state.mu, p)
        assert delta <= 1e-6

    def test_means_stay_in_unit_interval(self, rng):
        p = random_gdbm(rng, n_visible=4, sizes=(3, 3), scale=2.0)
        v = 3.0 * rng.standard_normal((7, 4))
        state = gdbm_mean_field(v, p)
        for mu in state.mu:
            assert np.all(mu >= 0.0) and np.all(mu <= 1.0)


class TestDenoisePatch:
    def test_zero_weights_return_visible_bias(self, rng):
        b = np.array([0.2, -0.4, 1.0])
        p = GdbmParams(W=np.zeros((3, 2)), U=[np.zeros((2, 2))],
                       b=b, c=[np.zeros(2), np.zeros(2)])
        out = gdbm_denoise_patch(rng.standard_normal(3), p)
        np.testing.assert_allclose(out, b, atol=1e-15)

    def test_deterministic(self, rng):
        p = random_gdbm(rng, n_visible=4, sizes=(3, 3))
        v = rng.standard_normal(4)
        np.testing.assert_array_equal(gdbm_denoise_patch(v, p),
                                      gdbm_denoise_patch(v, p))

    def test_matches_exact_posterior_expectation(self, rng):
        # E[v | noisy] = W E[h1 | noisy] + b with exact layer-1 marginals
        for _ in range(5):
            p = random_gdbm(rng, n_visible=4, sizes=(3, 3), scale=1e-2)
            v = rng.standard_normal(4)
            expected = p.W @ exact_posterior_small(v, p)[0] + p.b
            np.testing.assert_allclose(gdbm_denoise_patch(v, p), expected,
                                       atol=2e-3)
