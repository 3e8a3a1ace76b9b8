"""Matching costs, optimal assignment and dense (multi-round) matching.

Cost matrices have predictions on rows and ground truths on columns. ``+inf``
marks a forbidden pairing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import Infeasible, LengthMismatch, NotEnoughProposals
from .losses import (DEFAULT_ALPHA1, DEFAULT_ALPHA2, DEFAULT_LAMBDA, _check_scores, l_bbox, l_fd, l_sd)

TIE_RTOL = 1e-12


class Proposal(NamedTuple):
    fd: np.ndarray
    score: float


class CostTerms(NamedTuple):
    cls: float
    sd: float
    fd: float
    bbox: float
    reg: float
    total: float


def pair_cost_terms(pred: Proposal, gt, lam: float = DEFAULT_LAMBDA, alpha1: float = DEFAULT_ALPHA1,
                    alpha2: float = DEFAULT_ALPHA2, n: int = 400) -> CostTerms:
    _check_scores(np.asarray([pred.score], dtype=np.float64))
    cls = -math.log(pred.score)
    sd = l_sd(pred.fd, gt, n)
    fd = l_fd(pred.fd, gt)
    bbox = l_bbox(pred.fd, gt, n)
    reg = sd + alpha1 * fd + alpha2 * bbox
    return CostTerms(cls, sd, fd, bbox, reg, cls + lam * reg)


def pair_cost(pred: Proposal, gt, lam: float = DEFAULT_LAMBDA, alpha1: float = DEFAULT_ALPHA1,
              alpha2: float = DEFAULT_ALPHA2, n: int = 400) -> float:
    """``-log(s) + lam * (L_SD + alpha1 * L_FD + alpha2 * L_bbox)``."""
    return pair_cost_terms(pred, gt, lam, alpha1, alpha2, n).total


def cost_matrix(proposals: Sequence[Proposal], gts: Sequence, lam: float = DEFAULT_LAMBDA,
                alpha1: float = DEFAULT_ALPHA1, alpha2: float = DEFAULT_ALPHA2, n: int = 400) -> np.ndarray:
    cost = np.empty((len(proposals), len(gts)))
    for i, p in enumerate(proposals):
        for j, g in enumerate(gts):
            cost[i, j] = pair_cost(p, g, lam, alpha1, alpha2, n)
    return cost


def _shortest_augmenting_path(cost: np.ndarray):
    """Min-cost assignment of every row of a rows <= cols matrix.

    Returns ``(col4row, u, v)`` where ``u``, ``v`` are feasible duals
    (``u_i + v_j <= cost_ij``, tight on the assignment, ``v <= 0`` and ``v = 0``
    on unassigned columns).
    """
    n, m = cost.shape
    u = np.zeros(n)
    v = np.zeros(m)
    col4row = np.full(n, -1)
    row4col = np.full(m, -1)
    for cur in range(n):
        shortest = np.full(m, np.inf)
        path = np.full(m, -1)
        in_rows = np.zeros(n, dtype=bool)
        in_cols = np.zeros(m, dtype=bool)
        min_val = 0.0
        i = cur
        sink = -1
        while sink < 0:
            in_rows[i] = True
            reduced = min_val + cost[i] - u[i] - v
            better = ~in_cols & (reduced < shortest)
            path[better] = i
            shortest[better] = reduced[better]
            open_cols = np.flatnonzero(~in_cols)
            vals = shortest[open_cols]
            min_val = vals.min()
            if not np.isfinite(min_val):
                raise Infeasible("no finite-cost assignment covers every row")
            ties = open_cols[vals == min_val]
            free = ties[row4col[ties] < 0]
            j = int(free[0] if free.size else ties[0])
            in_cols[j] = True
            if row4col[j] < 0:
                sink = j
            else:
                i = row4col[j]
        u[cur] += min_val
        others = in_rows.copy()
        others[cur] = False
        rows = np.flatnonzero(others)
        u[rows] += min_val - shortest[col4row[rows]]
        v[in_cols] -= min_val - shortest[in_cols]
        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            col4row[i], j = j, col4row[i]
            if i == cur:
                break
    return col4row, u, v


def _solve(cost: np.ndarray):
    """Optimal pairs (sorted by row) plus edge reduced costs for a rectangular matrix."""
    a, b = cost.shape
    if a <= b:
        col4row, u, v = _shortest_augmenting_path(cost)
        pairs = [(i, int(col4row[i])) for i in range(a)]
        reduced = cost - u[:, None] - v[None, :]
    else:
        col4row, u, v = _shortest_augmenting_path(cost.T)
        pairs = sorted((int(col4row[j]), j) for j in range(b))
        reduced = cost - v[:, None] - u[None, :]
    return pairs, reduced


def _total(cost: np.ndarray, pairs) -> float:
    return math.fsum(cost[i, j] for i, j in pairs)


def hungarian(cost) -> list[tuple[int, int]]:
    """Minimum-cost one-to-one assignment covering ``min(a, b)`` pairs.

    Among several optimal assignments the lexicographically smallest list of
    ``(row, col)`` pairs (sorted by row) is returned. Rows that are entirely
    ``+inf`` are never matched.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or 0 in cost.shape:
        raise ValueError(f"cost matrix must be non-empty 2-D, got shape {cost.shape}")
    if np.any(np.isnan(cost)) or np.any(cost == -np.inf):
        raise ValueError("cost matrix entries must be finite or +inf")
    pairs, reduced = _solve(cost)
    best = _total(cost, pairs)
    tol = TIE_RTOL * max(1.0, float(np.max(np.abs(cost[np.isfinite(cost)]))) * min(cost.shape))
    return _lexicographic(cost, pairs, best, reduced, tol)


def _lexicographic(cost, witness, best, reduced, tol):
    """Walk rows in order, pinning the smallest column still compatible with optimality."""
    a, b = cost.shape
    target = len(witness)
    fixed: list[tuple[int, int]] = []
    dropped: set[int] = set()
    current = dict(witness)
    for r in range(a):
        if len(fixed) == target:
            break
        used_cols = {c for _, c in fixed}
        limit = current.get(r, b)
        choice = None
        for c in range(limit):
            if c in used_cols or not np.isfinite(cost[r, c]) or reduced[r, c] > tol:
                continue
            attempt = _completion(cost, fixed + [(r, c)], dropped, r, target)
            if attempt is not None and abs(_total(cost, attempt) - best) <= tol:
                current = dict(attempt)
                choice = c
                break
        if choice is None:
            choice = current.get(r)
        if choice is None:
            dropped.add(r)
        else:
            fixed.append((r, choice))
    return sorted(current.items())


def _completion(cost, fixed, dropped, last_row, target):
    """Best full assignment containing ``fixed`` and avoiding decided rows, or None."""
    a, b = cost.shape
    rows = [i for i in range(last_row + 1, a) if i not in dropped]
    cols = [j for j in range(b) if j not in {c for _, c in fixed}]
    need = target - len(fixed)
    if need == 0:
        return list(fixed)
    if len(rows) < need or len(cols) < need:
        return None
    sub = cost[np.ix_(rows, cols)]
    try:
        pairs, _ = _solve(sub)
    except Infeasible:
        return None
    if len(pairs) != need:
        return None
    return sorted(list(fixed) + [(rows[i], cols[j]) for i, j in pairs])


@dataclass
class MatchResult:
    positives: list[tuple[int, int]]
    negatives: list[int]
    # per-round assignments, in round order
    rounds: list[list[tuple[int, int]]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"positives": [list(p) for p in self.positives], "negatives": list(self.negatives)}


def dense_match(cost, n_m: int = 3) -> MatchResult:
    """Repeat optimal assignment ``n_m`` times, retiring matched predictions each round.

    A round sees only predictions not yet matched, so it pairs
    ``min(remaining, n_gt)`` of them. The caller's matrix is left untouched.
    """
    if n_m < 1:
        raise ValueError("n_m must be >= 1")
    cost = np.array(cost, dtype=np.float64)
    a = cost.shape[0]
    remaining = list(range(a))
    rounds = []
    for _ in range(n_m):
        live = [i for i in remaining if np.any(np.isfinite(cost[i]))]
        if not live:
            break
        sub = hungarian(cost[live])
        matched = [(live[i], j) for i, j in sub]
        rounds.append(matched)
        done = {i for i, _ in matched}
        cost[sorted(done)] = np.inf
        remaining = [i for i in remaining if i not in done]
    positives = sorted(p for r in rounds for p in r)
    matched_rows = {p for p, _ in positives}
    negatives = [i for i in range(a) if i not in matched_rows]
    return MatchResult(positives, negatives, rounds)


def select_top_proposals(scores: Sequence[float], fds: Sequence, n_q: int = 300) -> tuple[list[int], list[Proposal]]:
    """Indices and proposals of the ``n_q`` highest scores, descending, ties by index."""
    if len(scores) != len(fds):
        raise LengthMismatch(f"{len(scores)} scores vs {len(fds)} descriptors")
    if n_q > len(scores):
        raise NotEnoughProposals(f"asked for {n_q} proposals, only {len(scores)} available")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))[:n_q]
    return order, [Proposal(np.asarray(fds[i], dtype=np.float64), float(scores[i])) for i in order]
