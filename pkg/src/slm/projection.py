"""Probabilistic generation of oblique projection candidates.

Candidates are integer coefficient vectors over discriminance-ranked
dimensions: rank d gets an exponentially decaying magnitude envelope and
an exponentially decaying chance of being active. Small search spaces are
enumerated exhaustively; otherwise coefficient vectors are drawn at
random. A greedy minimax-cosine pass then picks up to q_max decorrelated
winners.

Vectors are kept in a canonical form: sign flipped so the first nonzero
coefficient is positive (a and -a describe the same split family) and
divided by the gcd of the coefficients (proportional vectors describe the
same direction).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from slm import dft
from slm.errors import EnvelopeCollapseError

log = logging.getLogger(__name__)

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class ProjectionParams:
    d0: int | None = None
    p: int = 64
    r: int = 2
    alpha: float = 0.5
    a_int: float = 10.0
    beta: float = 0.5
    q_max: int = 2
    theta_minimax: float = 0.7
    rounds: tuple[tuple[float, float, int], ...] = ()
    exhaustive_limit: int = 512

    def __post_init__(self):
        if self.d0 is not None and self.d0 < 1:
            raise ValueError("d0 must be >= 1")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.a_int <= 0:
            raise ValueError("a_int must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0 (0 means uniform selection)")
        if self.q_max < 1:
            raise ValueError("q_max must be >= 1")
        if not 0.0 < self.theta_minimax <= 1.0:
            raise ValueError("theta_minimax must be in (0, 1]")
        if self.exhaustive_limit < 0:
            raise ValueError("exhaustive_limit must be >= 0")
        object.__setattr__(self, "rounds", tuple(tuple(r) for r in self.rounds))


@dataclass(frozen=True)
class ProjectionVector:
    coeffs_int: np.ndarray
    unit: np.ndarray
    cost: dft.SplitEvaluation

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.coeffs_int)


def envelope(params: ProjectionParams, d: int) -> float:
    """Magnitude bound for the coefficient at rank d (1-based)."""
    if d < 1:
        raise ValueError("rank index starts at 1")
    return params.a_int * math.exp(-params.alpha * d)


def selection_probabilities(params: ProjectionParams, d0: int) -> np.ndarray:
    """Activation probabilities over ranks 1..d0, normalized to sum 1."""
    if d0 < 1:
        raise ValueError("d0 must be >= 1")
    weights = np.exp(-params.beta * np.arange(1, d0 + 1, dtype=np.float64))
    return weights / weights.sum()


def envelope_caps(a_int: float, alpha: float, d0: int) -> np.ndarray:
    """Integer coefficient bound floor(A_d) per rank."""
    ranks = np.arange(1, d0 + 1, dtype=np.float64)
    return np.floor(a_int * np.exp(-alpha * ranks)).astype(np.int64)


def search_space_bounds(caps: np.ndarray, r: int) -> tuple[int, int]:
    """(upper, lower) bounds on a single round's fixed-support search space:
    the products of (2*floor(A_d)+1) over the r largest and r smallest
    envelopes."""
    sizes = 2 * caps + 1
    r = min(r, len(caps))
    ub = int(np.prod(sizes[:r], dtype=object))
    lb = int(np.prod(sizes[-r:], dtype=object))
    return ub, lb


def _canonical_count(caps: np.ndarray, r: int) -> int:
    """Number of sign-canonical nonzero vectors with at most r active
    coefficients, each within its envelope cap."""
    ways = [0] * (r + 1)
    ways[0] = 1
    for cap in caps:
        nz = 2 * int(cap)
        for j in range(min(r, len(ways) - 1), 0, -1):
            ways[j] += ways[j - 1] * nz
    total_nonzero = sum(ways) - 1
    return total_nonzero // 2


def _canonicalize(coeffs: np.ndarray) -> np.ndarray | None:
    """Sign-canonical, gcd-reduced copy; None for the zero vector."""
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        return None
    out = coeffs.copy()
    if out[nz[0]] < 0:
        out = -out
    g = int(np.gcd.reduce(np.abs(out[nz])))
    if g > 1:
        out = out // g
    return out


def _enumerate_canonical(caps: np.ndarray, r: int):
    """All sign-canonical nonzero coefficient vectors with <= r active
    dimensions, in deterministic lexicographic order."""
    d0 = len(caps)
    coeffs = np.zeros(d0, dtype=np.int64)

    def rec(d, budget, leading_zeros):
        if d == d0:
            if not leading_zeros:
                yield coeffs.copy()
            return
        cap = int(caps[d])
        lo = 0 if leading_zeros else -cap
        for v in range(lo, cap + 1):
            if v != 0 and budget == 0:
                continue
            coeffs[d] = v
            yield from rec(d + 1, budget - (v != 0), leading_zeros and v == 0)
        coeffs[d] = 0

    yield from rec(0, r, True)


def sample_candidates(
    features_ranked: np.ndarray,
    targets: np.ndarray,
    loss_kind: dft.LossKind,
    bins: int,
    params: ProjectionParams,
    rng: np.random.Generator,
) -> list[ProjectionVector]:
    """Generate and score candidate projections over ranked node features.

    `features_ranked` has columns already ordered by ascending per-dimension
    split cost. Each configured round contributes candidates; a round whose
    canonical search space fits within exhaustive_limit is enumerated fully
    (independent of the rng), otherwise its share of p vectors is drawn.
    Duplicates (after canonicalization) are dropped, keeping first
    occurrence.
    """
    n_samples, d0 = features_ranked.shape
    if n_samples < 2:
        raise ValueError("candidate sampling needs at least 2 samples")
    rounds = params.rounds or ((params.alpha, params.beta, params.r),)
    base, extra = divmod(params.p, len(rounds))
    seen: dict[tuple[int, ...], None] = {}
    raw: list[np.ndarray] = []
    any_live_round = False
    for i, (alpha, beta, r) in enumerate(rounds):
        caps = envelope_caps(params.a_int, alpha, d0)
        r_eff = min(int(r), d0)
        if caps.max() < 1:
            continue
        any_live_round = True
        ub, lb = search_space_bounds(caps, r_eff)
        count = _canonical_count(caps, r_eff)
        log.debug(
            "round %d: caps=%s search space %d (bounds ub=%d lb=%d)",
            i, caps.tolist(), count, ub, lb,
        )
        if count <= params.exhaustive_limit:
            draws = _enumerate_canonical(caps, r_eff)
        else:
            p_round = base + (1 if i < extra else 0)
            draws = _draw_candidates(caps, r_eff, beta, p_round, rng)
        for coeffs in draws:
            canon = _canonicalize(coeffs)
            if canon is None:
                continue
            key = tuple(int(c) for c in canon)
            if key not in seen:
                seen[key] = None
                raw.append(canon)
    if not raw:
        if not any_live_round:
            raise EnvelopeCollapseError(
                "every coefficient envelope floors to 0; raise a_int or lower alpha"
            )
        return []
    units = np.array([c / np.linalg.norm(c) for c in raw])
    columns = np.ascontiguousarray(units @ features_ranked.T)
    evals = dft.dft_cost_many(columns, targets, bins, loss_kind)
    return [
        ProjectionVector(coeffs_int=c, unit=u, cost=e)
        for c, u, e in zip(raw, units, evals)
    ]


def _draw_candidates(caps, r_eff, beta, p_round, rng):
    d0 = len(caps)
    probs = np.exp(-beta * np.arange(1, d0 + 1, dtype=np.float64))
    probs = probs / probs.sum()
    out = []
    for _ in range(p_round):
        for attempt in range(_MAX_REDRAWS + 1):
            active = rng.choice(d0, size=r_eff, replace=False, p=probs)
            coeffs = np.zeros(d0, dtype=np.int64)
            for d in active:
                cap = int(caps[d])
                coeffs[d] = rng.integers(-cap, cap + 1)
            if coeffs.any():
                out.append(coeffs)
                break
        else:
            raise EnvelopeCollapseError(
                f"drew the zero vector {_MAX_REDRAWS} times in a row; "
                "the envelopes admit almost no nonzero coefficients"
            )
    return out


def select_decorrelated(
    candidates: list[ProjectionVector],
    q_max: int,
    theta_minimax: float,
) -> list[ProjectionVector]:
    """Greedy minimax-cosine selection of up to q_max candidates.

    The first pick has the smallest cost (ties: lexicographically smallest
    coefficient vector). Each later pick minimizes its maximum absolute
    cosine similarity to everything already chosen and is admitted only if
    that minimax value does not exceed theta_minimax.
    """
    if not candidates:
        raise ValueError("select_decorrelated needs a nonempty candidate list")
    if any(not math.isfinite(c.cost.loss) for c in candidates):
        raise ValueError("all candidates must carry a finite cost")
    order = sorted(range(len(candidates)), key=lambda i: (candidates[i].cost.loss, candidates[i].key))
    chosen = [order[0]]
    remaining = [i for i in order[1:]]

    units = np.array([c.unit for c in candidates])
    cos = np.abs(units @ units.T)
    np.fill_diagonal(cos, 1.0)
    cos = np.minimum(cos, 1.0)

    while remaining and len(chosen) < q_max:
        best_i = None
        best_key = None
        for i in remaining:
            m = float(cos[i, chosen].max())
            key = (m, candidates[i].cost.loss, candidates[i].key)
            if best_key is None or key < best_key:
                best_key = key
                best_i = i
        if best_key[0] > theta_minimax:
            break
        chosen.append(best_i)
        remaining.remove(best_i)
    return [candidates[i] for i in chosen]
