"""
Unit tests for scheme parameters, the transmitter and full sessions.
"""

import json

import numpy as np
import pytest

from src.errors import ContractViolation, ParameterError
from src.geometry.codebook import gram_check
from src.protocol.params import TAU0_ALWAYS_CASE1, derive_params, params_for_energy
from src.protocol.session import (
    SessionStreams,
    replay_session,
    run_session,
    run_session_batch,
    transcripts_from_batch,
)
from src.protocol.transmitter import (
    Case,
    SchemeCodebooks,
    build_phase2_code,
    decide_batch,
    rank_distances,
    rank_top3_batch,
    squared_distances,
    switching_decision,
)


@pytest.fixture
def params3():
    """M=3 scheme at nA=12 with moderate feedback noise."""
    return params_for_energy(12.0, 3, 0.3, 0.3, 0.1)


@pytest.fixture
def params5():
    """M=5 scheme at nA=16."""
    return params_for_energy(16.0, 5, 0.2, 0.4, 0.2)


# Parameters

def test_derived_energies():
    """A=1, n=10, M=3, beta=0.5: A1=20/3, A2=10/3, A3=10, A4=5, mu=1/3."""
    p = derive_params(1.0, 10, 3, 0.1, 0.5, 0.1)

    assert p.A1 == pytest.approx(20.0 / 3.0)
    assert p.A2 == pytest.approx(10.0 / 3.0)
    assert p.A3 == pytest.approx(10.0)
    assert p.A4 == pytest.approx(5.0)
    assert p.mu == pytest.approx(1.0 / 3.0)
    assert p.A1 + p.A2 == pytest.approx(p.total_energy)


def test_mu_and_gamma():
    """mu = (M-1) beta / M; gamma = 1/(4 sigma^2)."""
    assert derive_params(1.0, 10, 6, 0.1, 0.3, 0.1).mu == pytest.approx(0.25)
    assert derive_params(1.0, 4, 3, 0.5, 0.3, 0.1).gamma == pytest.approx(1.0)
    assert derive_params(1.0, 4, 3, 0.0, 0.3, 0.1).gamma == float('inf')


@pytest.mark.parametrize("kwargs", [
    dict(A=0.0), dict(n=1), dict(M=2), dict(beta=0.0), dict(tau0=-0.1), dict(sigma=-1.0), dict(M=5, n=6),
])
def test_parameter_errors(kwargs):
    """Invalid scalars are rejected."""
    base = dict(A=1.0, n=10, M=3, sigma=0.1, beta=0.3, tau0=0.1)
    base.update(kwargs)

    with pytest.raises(ParameterError):
        derive_params(**base)


def test_quasi_mode_allows_large_M():
    """quasi_equidistant lifts the n >= 2M-2 requirement but not for sessions."""
    p = derive_params(1.0, 6, 5, 0.1, 0.3, 0.1, quasi_equidistant=True)

    assert p.M == 5
    with pytest.raises(ParameterError):
        SchemeCodebooks.from_params(p)


# Ranking and switching

def test_rank_exact_codeword(params3):
    """Observation equal to codeword 1 ranks message 1 first at distance 0."""
    codes = SchemeCodebooks.from_params(params3)
    rk = rank_distances(codes.phase1, codes.phase1.vectors[1])

    assert rk.permutation[0] == 1
    assert rk.distances[0] == pytest.approx(0.0, abs=1e-12)


def test_rank_tie_goes_to_lowest_index(params3):
    """Midpoint of codewords 0 and 1: tie broken to 0 first."""
    codes = SchemeCodebooks.from_params(params3)
    mid = 0.5 * (codes.phase1.vectors[0] + codes.phase1.vectors[1])
    rk = rank_distances(codes.phase1, mid)

    assert list(rk.permutation[:2]) == [0, 1]
    assert rk.top2 == (0, 1)


def test_rank_matches_brute_force_sort(params5):
    """Sorted distances equal a brute-force sort of raw distances."""
    codes = SchemeCodebooks.from_params(params5)
    rng = np.random.default_rng(0)
    for _ in range(20):
        obs = rng.standard_normal(params5.phase_dim) * 3.0
        rk = rank_distances(codes.phase1, obs)
        raw = np.sum((codes.phase1.vectors - obs) ** 2, axis=1)

        assert np.allclose(rk.distances, np.sort(raw))
        assert np.allclose(rk.raw_distances, raw)


def test_batch_distances_match_direct_differences(params5):
    """Distances for a (T, S, dim) batch equal the direct sum of squared differences."""
    cb = SchemeCodebooks.from_params(params5).phase1
    obs = np.random.default_rng(6).standard_normal((4, 7, params5.phase_dim)) * 3.0
    direct = np.sum((obs[..., None, :] - cb.vectors) ** 2, axis=-1)

    got = squared_distances(cb, obs)
    assert got.shape == (4, 7, params5.M)
    assert np.allclose(got, direct, rtol=1e-12, atol=1e-9)
    assert squared_distances(cb, 1e8 * cb.vectors[2]).min() >= 0.0


def test_rank_dimension_mismatch(params3):
    """Observation of the wrong dimension violates the contract."""
    codes = SchemeCodebooks.from_params(params3)

    with pytest.raises(ContractViolation):
        rank_distances(codes.phase1, np.zeros(5))


def test_zero_threshold_gives_case2():
    """tau0 = 0 with a strict ranking: Case 2."""
    p = params_for_energy(12.0, 4, 0.1, 0.3, 0.0)
    codes = SchemeCodebooks.from_params(p)
    rk = rank_distances(codes.phase1, np.array([0.3, -0.7, 1.1]))

    tau, case = switching_decision(rk, p)
    assert tau > 0
    assert case == Case.CASE2


def test_tied_second_and_third_gives_case1(params3):
    """d(3) = d(2): tau_stat = 0 and Case 1 for any tau0."""
    p = params_for_energy(12.0, 3, 0.3, 0.3, 0.0)
    codes = SchemeCodebooks.from_params(p)
    rk = rank_distances(codes.phase1, codes.phase1.vectors[2])

    tau, case = switching_decision(rk, p)
    assert tau == 0.0
    assert case == Case.CASE1


def test_infinite_threshold_always_case1():
    """tau0 = inf forces Case 1."""
    p = params_for_energy(12.0, 4, 0.1, 0.3, TAU0_ALWAYS_CASE1)
    codes = SchemeCodebooks.from_params(p)
    rng = np.random.default_rng(1)
    for _ in range(10):
        _, case = switching_decision(rank_distances(codes.phase1, rng.standard_normal(3) * 5), p)
        assert case == Case.CASE1


def test_batch_decision_matches_scalar(params5):
    """decide_batch agrees with rank_distances + switching_decision."""
    codes = SchemeCodebooks.from_params(params5)
    obs = np.random.default_rng(4).standard_normal((50, params5.phase_dim)) * 2.0
    case1, low, high, tau = decide_batch(codes, params5, obs)

    for t in range(len(obs)):
        rk = rank_distances(codes.phase1, obs[t])
        tau_t, case = switching_decision(rk, params5)
        assert case1[t] == (case == Case.CASE1)
        assert (low[t], high[t]) == rk.top2
        assert tau[t] == pytest.approx(tau_t)


def test_batch_near_ties_follow_scalar_rule(params5):
    """Distances equal to within TIE_RTOL rank the lower index first in both paths."""
    codes = SchemeCodebooks.from_params(params5)
    vectors = codes.phase1.vectors
    pairs = [(0, 1), (1, 3), (2, 4), (0, 4)]
    # Nudge each midpoint towards the higher index by far less than TIE_RTOL
    obs = np.array([0.5 * (vectors[i] + vectors[j]) + 1e-15 * (vectors[j] - vectors[i]) for i, j in pairs])
    top, _ = rank_top3_batch(codes.phase1, obs)
    case1, low, high, _ = decide_batch(codes, params5, obs[None])

    for t, (i, j) in enumerate(pairs):
        rk = rank_distances(codes.phase1, obs[t])
        assert top[t, 0] == rk.permutation[0] == i
        assert top[t, 1] == rk.permutation[1] == j
        assert (low[0, t], high[0, t]) == rk.top2
        assert case1[0, t] == (switching_decision(rk, params5)[1] == Case.CASE1)


def test_switching_decision_scales_with_energy():
    """Scaling energy by c^2 and the observation by c leaves the decision unchanged."""
    c = 3.0
    p = params_for_energy(12.0, 5, 0.2, 0.4, 0.2)
    q = params_for_energy(12.0 * c ** 2, 5, 0.2, 0.4, 0.2)
    obs = np.random.default_rng(12).standard_normal((200, p.phase_dim)) * 2.0

    case_p, low_p, high_p, tau_p = decide_batch(SchemeCodebooks.from_params(p), p, obs)
    case_q, low_q, high_q, tau_q = decide_batch(SchemeCodebooks.from_params(q), q, c * obs)

    assert q.A3 == pytest.approx(c ** 2 * p.A3)
    assert np.array_equal(case_p, case_q)
    assert np.array_equal(low_p, low_q) and np.array_equal(high_p, high_q)
    assert np.allclose(tau_q, c ** 2 * tau_p, rtol=1e-9, atol=1e-9)
    assert 0 < case_p.sum() < len(obs)


def test_noiseless_feedback_rankings_agree():
    """sigma = 0: the transmitter ranks exactly what the receiver got."""
    p = params_for_energy(12.0, 5, 0.0, 0.4, 0.2)
    codes = SchemeCodebooks.from_params(p)
    messages = np.array([0, 3, 1, 4, 2, 2])
    streams = SessionStreams.for_unit(8, 2)
    batch = run_session_batch(messages, p, streams, codes)
    case1, low, high, _ = decide_batch(codes, p, batch.y1)

    assert np.array_equal(batch.z1, batch.y1)
    assert np.array_equal(batch.case1, case1)
    assert np.array_equal(batch.pair_low, low) and np.array_equal(batch.pair_high, high)
    for t in transcripts_from_batch(batch, p, streams, len(messages), codes):
        receiver = rank_distances(codes.phase1, t.y1)
        assert np.array_equal(t.transmitter_ranking.permutation, receiver.permutation)


# Phase-II codebooks

def test_case2_code_structure():
    """Case 2, M=4: pair antipodal, remaining two at -A2, zero cross products."""
    p = params_for_energy(12.0, 4, 0.1, 0.3, 0.0)
    codes = SchemeCodebooks.from_params(p)
    rk = rank_distances(codes.phase1, np.array([0.3, -0.7, 1.1]))
    cb = build_phase2_code(rk, Case.CASE2, p, codes)
    low, high = rk.top2
    rest = [k for k in range(4) if k not in (low, high)]
    gram = cb.vectors @ cb.vectors.T

    assert cb.energy == pytest.approx(p.A2)
    assert gram[low, high] == pytest.approx(-p.A2)
    assert np.sum((cb.vectors[low] - cb.vectors[high]) ** 2) == pytest.approx(4.0 * p.A2)
    assert gram[rest[0], rest[1]] == pytest.approx(-p.A2)
    for r in rest:
        assert gram[r, low] == pytest.approx(0.0, abs=1e-12)
        assert gram[r, high] == pytest.approx(0.0, abs=1e-12)
    assert cb.vectors[low, 3 - 1] > 0


def test_case1_code_is_simplex(params5):
    """Case 1 code is equidistant with cosine -1/(M-1)."""
    codes = SchemeCodebooks.from_params(params5)
    rk = rank_distances(codes.phase1, np.zeros(params5.phase_dim))
    cb = build_phase2_code(rk, Case.CASE1, params5, codes)
    report = gram_check(cb)

    assert report.is_equidistant
    assert report.max_abs_offdiag_cosine == pytest.approx(1.0 / 4.0)
    assert cb.energy == pytest.approx(params5.A2)


# Sessions

def test_noiseless_session_takes_case1():
    """sigma = 0, zero forward noise: d_i - d_1 = 2 A3 for all others, so Case 1."""
    p = params_for_energy(12.0, 4, 0.0, 0.3, 0.5)
    t = run_session(2, p, SessionStreams.for_unit(0, 0, zero=True))

    assert t.case_taken == Case.CASE1
    assert t.tau_stat == 0.0
    assert t.transmitter_ranking.permutation[0] == 2
    assert t.transmitter_ranking.distances[1] == pytest.approx(2.0 * p.A3)
    assert np.array_equal(t.z1, t.y1)


def test_session_energy_accounting(params5):
    """Every session transmits total energy nA."""
    for unit in range(30):
        t = run_session(unit % 5, params5, SessionStreams.for_unit(9, unit))
        assert t.transmitted_energy == pytest.approx(params5.total_energy, rel=1e-9)


def test_session_determinism(params3):
    """Same seeds give identical transcripts."""
    a = run_session(1, params3, SessionStreams.for_unit(5, 3))
    b = run_session(1, params3, SessionStreams.for_unit(5, 3))

    assert np.array_equal(a.y1, b.y1)
    assert np.array_equal(a.z1, b.z1)
    assert np.array_equal(a.y2, b.y2)
    assert a.case_taken == b.case_taken


def test_replay_is_bit_identical(params5):
    """Replaying a transcript from its seeds reproduces it exactly."""
    streams = SessionStreams.for_unit(77, 2)
    batch = run_session_batch(np.array([0, 3, 4, 1]), params5, streams)
    original = transcripts_from_batch(batch, params5, streams, 4)[2]
    replayed = replay_session(original)

    assert replayed.true_message == 4
    assert np.array_equal(replayed.y1, original.y1)
    assert np.array_equal(replayed.z1, original.z1)
    assert np.array_equal(replayed.y2, original.y2)
    assert np.array_equal(replayed.phase2_code.vectors, original.phase2_code.vectors)
    assert replayed.case_taken == original.case_taken


def test_batch_row_matches_scalar_session(params5):
    """Row 0 of a batch equals the scalar session on the same streams."""
    streams = SessionStreams.for_unit(13, 0)
    batch = run_session_batch(np.array([3, 0, 2]), params5, streams)
    single = run_session(3, params5, streams)

    assert np.array_equal(batch.y1[0], single.y1)
    assert np.array_equal(batch.y2[0], single.y2)
    assert bool(batch.case1[0]) == (single.case_taken == Case.CASE1)


def test_session_rejects_bad_message(params3):
    """Message indices must lie in [0, M)."""
    with pytest.raises(ContractViolation):
        run_session_batch(np.array([3]), params3, SessionStreams.for_unit(0, 0))


def test_transcript_serializes(params3):
    """Transcripts convert to JSON."""
    t = run_session(0, params3, SessionStreams.for_unit(1, 1))
    data = json.loads(json.dumps(t.to_dict()))

    assert data['true_message'] == 0
    assert data['case_taken'] in ('Case1', 'Case2')
    assert len(data['y1']) == 2


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
