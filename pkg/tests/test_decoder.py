"""
Unit tests for the receiver.
"""

import numpy as np
import pytest
from scipy.special import logsumexp
from scipy.stats import norm

from src.channel.noise import NoiseStream, StreamRole, stream_for
from src.decoding import decoder
from src.decoding.decoder import (
    DecoderSettings,
    decode,
    decode_batch,
    decode_genie_batch,
    decode_nofeedback,
    decode_nofeedback_batch,
    phase1_loglik,
    phase2_loglik_table,
    phase2_posterior_loglik,
    phase2_posterior_loglik_batch,
)
from src.errors import ParameterError
from src.exponents.bounds import gaussian_tail
from src.geometry.codebook import make_simplex
from src.protocol.params import TAU0_ALWAYS_CASE1, params_for_energy
from src.protocol.session import SessionStreams, run_session, run_session_batch
from src.protocol.transmitter import (
    SchemeCodebooks,
    build_phase2_code,
    decide_batch,
    rank_distances,
    switching_decision,
)


@pytest.fixture
def params():
    """M=4 scheme at nA=12."""
    return params_for_energy(12.0, 4, 0.3, 0.3, 0.2)


@pytest.fixture
def settings():
    return DecoderSettings(inner_samples=64)


@pytest.fixture
def decoder_stream():
    return stream_for(11, 0, StreamRole.DECODER)


# Phase I

def test_phase1_argmax_is_nearest_codeword(params):
    """Equal-energy simplex: correlation argmax equals the nearest codeword."""
    cb = SchemeCodebooks.from_params(params).phase1
    rng = np.random.default_rng(2)
    for _ in range(50):
        y = rng.standard_normal(cb.dim) * 3.0
        assert int(np.argmax(phase1_loglik(y, cb))) == decode_nofeedback(y, cb)


def test_phase1_exact_codeword_wins(params):
    """y1 = x_3: message 3 maximizes."""
    cb = SchemeCodebooks.from_params(params).phase1

    assert int(np.argmax(phase1_loglik(cb.vectors[3], cb))) == 3


def test_phase1_pair_difference_statistic(params):
    """ll_1 - ll_0 = -A3 + (x_1 - x_0, xi) when message 0 is sent."""
    cb = SchemeCodebooks.from_params(params).phase1
    xi = np.random.default_rng(8).standard_normal(cb.dim)
    ll = phase1_loglik(cb.vectors[0] + xi, cb)

    assert ll[1] - ll[0] == pytest.approx(-params.A3 + (cb.vectors[1] - cb.vectors[0]) @ xi)


# Phase II

def test_noiseless_feedback_posterior_is_exact(settings, decoder_stream):
    """sigma = 0: the mixture collapses to the single codebook seen by the transmitter."""
    p = params_for_energy(12.0, 4, 0.0, 0.3, 0.2)
    codes = SchemeCodebooks.from_params(p)
    rng = np.random.default_rng(5)
    for _ in range(10):
        y1 = rng.standard_normal(3) * 2.0
        y2 = rng.standard_normal(3)
        rk = rank_distances(codes.phase1, y1)
        _, case = switching_decision(rk, p)
        cb = build_phase2_code(rk, case, p, codes)

        expected = y2 @ cb.vectors.T - 0.5 * p.A2
        got = phase2_posterior_loglik(y1, y2, p, settings, decoder_stream)
        assert np.allclose(got, expected)


@pytest.mark.parametrize("S", [1, 5, 64])
def test_always_case1_posterior_is_simplex_likelihood(S, decoder_stream):
    """tau0 = inf: the integrand is constant, any S gives the simplex likelihood."""
    p = params_for_energy(12.0, 4, 0.5, 0.3, TAU0_ALWAYS_CASE1)
    codes = SchemeCodebooks.from_params(p)
    y1 = np.array([0.4, -1.0, 2.0])
    y2 = np.array([1.0, 0.5, -0.3])

    got = phase2_posterior_loglik(y1, y2, p, DecoderSettings(inner_samples=S), decoder_stream)
    expected = y2 @ codes.phase2_simplex.vectors.T - 0.5 * p.A2
    assert np.allclose(got, expected)


def test_noise_free_session_decodes_correctly(params, settings):
    """All noise zero: every message is decoded correctly."""
    for m in range(params.M):
        t = run_session(m, params, SessionStreams.for_unit(0, 0, zero=True))
        assert decode(t.y1, t.y2, params, settings, NoiseStream(0, 4, zero=True)) == m


def test_case2_pair_decided_by_sign(settings, decoder_stream):
    """sigma = 0, Case 2: the top pair is split by the sign of y2 on the pair axis."""
    p = params_for_energy(12.0, 3, 0.0, 0.3, 0.0)
    codes = SchemeCodebooks.from_params(p)
    y1 = 0.5 * (codes.phase1.vectors[0] + codes.phase1.vectors[1]) + np.array([1e-6, 0.0])
    rk = rank_distances(codes.phase1, y1)
    assert set(rk.top2) == {0, 1}

    axis = np.array([0.0, 10.0 * codes.pair_amplitude])
    assert decode(y1, axis, p, settings, decoder_stream) == 0
    assert decode(y1, -axis, p, settings, decoder_stream) == 1


def test_batch_decode_matches_scalar(params, settings, decoder_stream):
    """Row 0 of decode_batch equals the scalar decode on the same stream."""
    batch = run_session_batch(np.array([1, 2, 0, 3]), params, SessionStreams.for_unit(3, 1))
    decoded = decode_batch(batch.y1, batch.y2, params, settings, decoder_stream)

    assert decoded.shape == (4,)
    assert decoded[0] == decode(batch.y1[0], batch.y2[0], params, settings, decoder_stream)


def test_decoder_is_deterministic_given_stream(params, settings, decoder_stream):
    """Shared randomness: same inputs and stream give identical log-likelihoods."""
    y1, y2 = np.array([0.2, 1.0, -0.5]), np.array([0.1, 0.0, 1.2])
    a = phase2_posterior_loglik(y1, y2, params, settings, decoder_stream)
    b = phase2_posterior_loglik(y1, y2, params, settings, decoder_stream)

    assert np.array_equal(a, b)


def test_independent_samples_per_hypothesis(params, decoder_stream):
    """Without shared randomness every hypothesis still gets a finite score."""
    s = DecoderSettings(inner_samples=16, shared_randomness=False)
    batch = run_session_batch(np.array([0, 1]), params, SessionStreams.for_unit(2, 0))
    ll = phase2_posterior_loglik_batch(batch.y1, batch.y2, params, s, decoder_stream)

    assert ll.shape == (2, params.M)
    assert np.all(np.isfinite(ll))


@pytest.mark.parametrize("shared", [True, False])
def test_blocked_posterior_matches_single_block(monkeypatch, params, decoder_stream, shared):
    """Splitting the rows into blocks leaves every posterior value unchanged."""
    s = DecoderSettings(inner_samples=32, shared_randomness=shared)
    batch = run_session_batch(np.arange(7) % params.M, params, SessionStreams.for_unit(4, 0))
    whole = phase2_posterior_loglik_batch(batch.y1, batch.y2, params, s, decoder_stream)

    monkeypatch.setattr(decoder, 'BLOCK_ELEMENTS', 1)
    blocked = phase2_posterior_loglik_batch(batch.y1, batch.y2, params, s, decoder_stream)

    assert np.allclose(blocked, whole, rtol=1e-12, atol=1e-12)


def _grid_posterior(p, y1, y2, half_width=7.0, steps=701):
    """Posterior mixture by a tensor-product rule over the feedback noise (M = 3)."""
    codes = SchemeCodebooks.from_params(p)
    u = np.linspace(-half_width, half_width, steps)
    u1, u2 = np.meshgrid(u, u, indexing='ij')
    offsets = np.stack([u1.ravel(), u2.ravel()], axis=-1)
    log_w = norm.logpdf(offsets).sum(axis=1)
    log_w -= logsumexp(log_w)

    z = y1 + p.sigma * offsets
    case1, low, high, _ = decide_batch(codes, p, z[None])
    table = phase2_loglik_table(codes, p, y2[None], case1, low, high)[0]
    return logsumexp(table + log_w[:, None], axis=0)


def test_posterior_converges_to_quadrature():
    """M = 3, S = 1e5: the sampled posterior agrees with a dense grid rule."""
    p = params_for_energy(12.0, 3, 0.3, 0.3, 0.2)
    codes = SchemeCodebooks.from_params(p)
    # Near the boundary between messages 0 and 1, so both phase-II codebooks matter
    y1 = 0.5 * (codes.phase1.vectors[0] + codes.phase1.vectors[1]) + np.array([0.1, -0.2])
    y2 = np.array([0.4, -0.3])

    reference = _grid_posterior(p, y1, y2)
    sampled = phase2_posterior_loglik(y1, y2, p, DecoderSettings(inner_samples=100_000),
                                      stream_for(17, 0, StreamRole.DECODER))

    assert np.allclose(sampled, reference, atol=0.02)


def test_posterior_error_shrinks_with_samples():
    """Mean error against a long reference run falls as S grows through 1, 10, 100, 1000."""
    p = params_for_energy(12.0, 3, 0.3, 0.3, 0.2)
    batch = run_session_batch(np.arange(200) % 3, p, SessionStreams.for_unit(9, 0))
    reference = phase2_posterior_loglik_batch(batch.y1, batch.y2, p, DecoderSettings(inner_samples=20_000),
                                              stream_for(9, 1, StreamRole.DECODER))

    errors = []
    for S in (1, 10, 100, 1000):
        got = phase2_posterior_loglik_batch(batch.y1, batch.y2, p, DecoderSettings(inner_samples=S),
                                            stream_for(9, 0, StreamRole.DECODER))
        errors.append(np.mean(np.abs(got - reference)))

    assert errors[0] > errors[1] > errors[2] > errors[3]


@pytest.mark.parametrize("total_energy", [1e4, 1e5])
def test_posterior_is_finite_at_large_energy(total_energy, decoder_stream):
    """Log-likelihoods far beyond exp's range stay finite and still decode."""
    p = params_for_energy(total_energy, 4, 0.2, 0.3, 0.2)
    s = DecoderSettings(inner_samples=64)
    for m in range(p.M):
        t = run_session(m, p, SessionStreams.for_unit(1, m))
        ll = phase2_posterior_loglik(t.y1, t.y2, p, s, decoder_stream)

        assert np.all(np.isfinite(ll))
        assert np.max(np.abs(ll)) > 700
        assert decode(t.y1, t.y2, p, s, decoder_stream) == m


def test_genie_decoder_noise_free(params):
    """Genie decoding of noise-free sessions returns the true messages."""
    messages = np.arange(params.M)
    batch = run_session_batch(messages, params, SessionStreams.for_unit(0, 0, zero=True))
    decoded = decode_genie_batch(batch.y1, batch.y2, params, batch.case1, batch.pair_low, batch.pair_high)

    assert np.array_equal(decoded, messages)


def test_noiseless_feedback_matches_genie(decoder_stream):
    """sigma = 0: FullBayes and the genie agree on 10^4 noisy sessions."""
    p = params_for_energy(12.0, 3, 0.0, 0.3, 0.2)
    messages = stream_for(6, 0, StreamRole.MESSAGE).integers(p.M, 10_000)
    batch = run_session_batch(messages, p, SessionStreams.for_unit(6, 0))

    full = decode_batch(batch.y1, batch.y2, p, DecoderSettings(inner_samples=8), decoder_stream)
    genie = decode_genie_batch(batch.y1, batch.y2, p, batch.case1, batch.pair_low, batch.pair_high)

    assert np.sum(full != genie) == 0


def test_settings_validation():
    """inner_samples must be at least 1."""
    with pytest.raises(ParameterError):
        DecoderSettings(inner_samples=0)


# No-feedback baseline

def test_nofeedback_exact_codeword():
    """y = x_k decodes to k."""
    cb = make_simplex(6, 2.0, 5)
    for k in range(6):
        assert decode_nofeedback(cb.vectors[k], cb) == k


def test_nofeedback_antipodal_error_rate():
    """M=2 antipodal at energy nA = 4: P_e = Phi(-2)."""
    trials = 200_000
    cb = make_simplex(2, 4.0, 1)
    rng = np.random.default_rng(21)
    sent = rng.integers(0, 2, trials)
    y = cb.vectors[sent] + rng.standard_normal((trials, 1))

    p_hat = np.mean(decode_nofeedback_batch(y, cb) != sent)
    p = gaussian_tail(2.0)
    assert abs(p_hat - p) < 3 * np.sqrt(p * (1 - p) / trials)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
