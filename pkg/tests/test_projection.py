"""Candidate generation and decorrelated selection."""

import math

import numpy as np
import pytest

from slm import dft, projection as pj
from slm.errors import EnvelopeCollapseError


def _score(coeffs_list, costs):
    """Wrap integer vectors as scored ProjectionVectors."""
    out = []
    for coeffs, loss in zip(coeffs_list, costs):
        coeffs = np.asarray(coeffs, dtype=np.int64)
        out.append(
            pj.ProjectionVector(
                coeffs_int=coeffs,
                unit=coeffs / np.linalg.norm(coeffs),
                cost=dft.SplitEvaluation(threshold=0.0, loss=float(loss), n_left=1, n_right=1),
            )
        )
    return out


# ---------------------------------------------------------------------------
# envelope / selection probabilities
# ---------------------------------------------------------------------------

def test_envelope_paper_setup():
    params = pj.ProjectionParams(a_int=10.0, alpha=0.5)
    a1 = pj.envelope(params, 1)
    assert a1 == pytest.approx(10.0 * math.exp(-0.5), rel=1e-15)
    assert a1 == pytest.approx(6.065, abs=1e-3)
    assert math.floor(a1) == 6  # dynamic range {0, +-1, ..., +-6}


def test_envelope_flat_limit():
    params = pj.ProjectionParams(a_int=10.0, alpha=1e-9)
    for d in (1, 5, 50):
        assert pj.envelope(params, d) == pytest.approx(10.0, rel=1e-6)


def test_envelope_far_rank_collapses():
    params = pj.ProjectionParams(a_int=10.0, alpha=0.5)
    a10 = pj.envelope(params, 10)
    assert a10 == pytest.approx(0.0674, abs=1e-4)
    assert math.floor(a10) == 0


def test_selection_probabilities_uniform_limit():
    params = pj.ProjectionParams(beta=0.0)
    probs = pj.selection_probabilities(params, 5)
    assert np.allclose(probs, 0.2)


def test_selection_probabilities_ln2():
    probs = pj.selection_probabilities(pj.ProjectionParams(beta=math.log(2)), 2)
    assert probs[0] == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert probs[1] == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_selection_probabilities_normalized():
    rng = np.random.default_rng(0)
    for _ in range(20):
        params = pj.ProjectionParams(beta=float(rng.uniform(0, 3)))
        d0 = int(rng.integers(1, 30))
        probs = pj.selection_probabilities(params, d0)
        assert abs(probs.sum() - 1.0) < 1e-12
        assert np.all(np.diff(probs) <= 0)


# ---------------------------------------------------------------------------
# sample_candidates
# ---------------------------------------------------------------------------

def _node(n=30, d=2, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = (x.sum(axis=1) > 0).astype(int)
    return x, y


def test_single_dimension_exhaustive_is_one_vector():
    x, y = _node(d=1)
    params = pj.ProjectionParams(a_int=3.9, alpha=0.3, r=1, p=8)
    cands = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(0))
    assert len(cands) == 1
    assert cands[0].key == (1,)


def test_exhaustive_count_two_dims_unit_caps():
    x, y = _node(d=2)
    # floor(A_1) = floor(A_2) = 1  ->  (3*3 - 1) / 2 = 4 canonical vectors
    params = pj.ProjectionParams(a_int=1.8, alpha=0.2, r=2, p=64)
    caps = pj.envelope_caps(params.a_int, params.alpha, 2)
    assert list(caps) == [1, 1]
    cands = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(0))
    assert sorted(c.key for c in cands) == [(0, 1), (1, -1), (1, 0), (1, 1)]


def test_exhaustive_mode_ignores_rng():
    x, y = _node(d=3)
    params = pj.ProjectionParams(a_int=2.5, alpha=0.4, r=2, p=16)
    a = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(1))
    b = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(999))
    assert [c.key for c in a] == [c.key for c in b]


def test_sampled_mode_deterministic_under_seed():
    x, y = _node(n=60, d=6, seed=3)
    params = pj.ProjectionParams(a_int=8.0, alpha=0.2, r=3, p=32, exhaustive_limit=0)
    a = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(7))
    b = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(7))
    assert [c.key for c in a] == [c.key for c in b]
    assert 1 <= len(a) <= params.p


def test_collapsed_envelope_raises():
    x, y = _node(d=2)
    params = pj.ProjectionParams(a_int=0.5, alpha=1.0, r=2)
    with pytest.raises(EnvelopeCollapseError):
        pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(0))


def test_sampled_vectors_respect_invariants():
    # acceptance: 10^4 sampled vectors, unit norm, envelope bounds, canonical
    x, y = _node(n=40, d=8, seed=5)
    params = pj.ProjectionParams(
        a_int=9.0, alpha=0.25, r=4, p=200, beta=0.4, exhaustive_limit=0
    )
    caps = pj.envelope_caps(params.a_int, params.alpha, 8)
    rng = np.random.default_rng(11)
    total = 0
    rank_one_hits = 0
    rank_last_hits = 0
    while total < 10_000:
        cands = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, rng)
        for c in cands:
            total += 1
            assert abs(np.linalg.norm(c.unit) - 1.0) <= 1e-12
            assert np.all(np.abs(c.coeffs_int) <= caps)
            nz = np.flatnonzero(c.coeffs_int)
            assert nz.size > 0 and c.coeffs_int[nz[0]] > 0
            if c.coeffs_int[0] != 0:
                rank_one_hits += 1
            if c.coeffs_int[-1] != 0:
                rank_last_hits += 1
    assert rank_one_hits > rank_last_hits


def test_multiple_rounds_combine_candidates():
    x, y = _node(n=50, d=5, seed=9)
    params = pj.ProjectionParams(
        a_int=6.0,
        alpha=0.3,
        r=2,
        p=30,
        exhaustive_limit=0,
        rounds=((0.3, 0.2, 2), (0.8, 1.0, 3)),
    )
    cands = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(2))
    assert len(cands) <= params.p
    assert len({c.key for c in cands}) == len(cands)


def test_all_candidates_carry_scores():
    x, y = _node()
    params = pj.ProjectionParams(a_int=1.8, alpha=0.2, r=2)
    cands = pj.sample_candidates(x, y, dft.EntropyLoss(2), 16, params, np.random.default_rng(0))
    for c in cands:
        assert c.cost.feasible and math.isfinite(c.cost.loss)


# ---------------------------------------------------------------------------
# select_decorrelated
# ---------------------------------------------------------------------------

def test_select_orthogonal_pair():
    cands = _score([(1, 0), (0, 1)], [0.1, 0.2])
    out = pj.select_decorrelated(cands, q_max=2, theta_minimax=0.5)
    assert [c.key for c in out] == [(1, 0), (0, 1)]


def test_select_rejects_duplicates():
    cands = _score([(1, 1), (1, 1)], [0.1, 0.1])
    out = pj.select_decorrelated(cands, q_max=2, theta_minimax=0.99)
    assert len(out) == 1


def test_select_three_at_45_degrees():
    # vectors at 0, 45 and 90 degrees; best cost first, then the orthogonal
    # one, then the diagonal is admitted iff max |cos| = cos(45) <= theta
    cands = _score([(1, 0), (1, 1), (0, 1)], [0.1, 0.2, 0.3])
    out = pj.select_decorrelated(cands, q_max=3, theta_minimax=0.8)
    assert [c.key for c in out] == [(1, 0), (0, 1), (1, 1)]
    out_tight = pj.select_decorrelated(cands, q_max=3, theta_minimax=0.5)
    assert [c.key for c in out_tight] == [(1, 0), (0, 1)]


def test_select_first_pick_ties_break_lexicographically():
    cands = _score([(1, 0), (0, 1)], [0.5, 0.5])
    out = pj.select_decorrelated(cands, q_max=1, theta_minimax=0.9)
    assert out[0].key == (0, 1)


def test_select_requires_finite_costs():
    bad = _score([(1, 0)], [math.inf])
    with pytest.raises(ValueError):
        pj.select_decorrelated(bad, 1, 0.5)


def _brute_force_selection(cands, q_max, theta):
    """Independent re-derivation of the greedy minimax selection."""
    def cos(a, b):
        return min(abs(float(np.dot(a.unit, b.unit))), 1.0)

    chosen = [min(range(len(cands)), key=lambda i: (cands[i].cost.loss, cands[i].key))]
    remaining = [i for i in range(len(cands)) if i != chosen[0]]
    while remaining and len(chosen) < q_max:
        scored = []
        for i in remaining:
            m = max(cos(cands[i], cands[j]) for j in chosen)
            scored.append(((m, cands[i].cost.loss, cands[i].key), i))
        scored.sort()
        (m, _, _), i = scored[0]
        if m > theta:
            break
        chosen.append(i)
        remaining.remove(i)
    return [cands[i].key for i in chosen]


def test_select_against_brute_force_on_random_pools():
    # acceptance: 500 random pools, pairwise |cos| <= theta; exact match of
    # the greedy order against an independent implementation for pools <= 8
    rng = np.random.default_rng(77)
    for trial in range(500):
        d = int(rng.integers(2, 5))
        n = int(rng.integers(1, 9))
        coeffs = []
        seen = set()
        while len(coeffs) < n:
            c = rng.integers(-3, 4, size=d)
            if not c.any():
                continue
            key = tuple(int(v) for v in c)
            if key in seen:
                continue
            seen.add(key)
            coeffs.append(c)
        costs = rng.uniform(0.0, 1.0, size=n)
        cands = _score(coeffs, costs)
        theta = float(rng.uniform(0.3, 1.0))
        q_max = int(rng.integers(1, 5))
        out = pj.select_decorrelated(cands, q_max, theta)
        units = np.array([c.unit for c in out])
        gram = np.abs(units @ units.T)
        for i in range(len(out)):
            for j in range(i + 1, len(out)):
                assert min(gram[i, j], 1.0) <= theta + 1e-12
        assert [c.key for c in out] == _brute_force_selection(cands, q_max, theta)
