"""Instance-dependent permutation complexity of a set of loss vectors.

Given one loss vector per hypothesis (a :class:`LossMatrix`), the
permutation complexity is the minimum number of permutations of the data
indices needed so that every row is sorted (non-decreasingly) by at least
one of them.  A permutation sorts a row iff it is a linear extension of the
row's tie-aware weak order, so the problem is a set cover over distinct
weak orders:

* :func:`exact_min_permutations` enumerates all n! permutations and solves
  the cover exactly by depth-first branch and bound (limits: n <= 8,
  at most 64 rows);
* :func:`greedy_min_permutations` covers greedily using only the rows' own
  sorting permutations, giving an upper bound that never exceeds the
  number of distinct weak orders;
* :func:`monte_carlo_permutation_complexity` averages instance values over
  fresh data draws.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import FormatError, InvalidLoss, TooLarge
from .seeds import rng_from

__all__ = [
    "WeakOrder",
    "LossMatrix",
    "weak_order",
    "permutation_sorts",
    "exact_min_permutations",
    "greedy_min_permutations",
    "PermComplexityEstimate",
    "monte_carlo_permutation_complexity",
    "load_loss_matrix_csv",
]

EXACT_MAX_N = 8
EXACT_MAX_ROWS = 64


@dataclass(frozen=True)
class WeakOrder:
    """Tie-aware ranking of indices induced by a loss vector.

    ``ranks`` uses consecutive values starting at 0; equal losses share a
    rank.  A permutation sorts the order iff ranks are non-decreasing along
    it.
    """

    ranks: tuple[int, ...]


def weak_order(losses) -> WeakOrder:
    """Dense tie-aware ranks of a loss vector."""
    arr = np.asarray(losses, dtype=np.float64)
    if np.any(np.isnan(arr)):
        raise InvalidLoss("loss vector contains NaN")
    _, inverse = np.unique(arr, return_inverse=True)
    return WeakOrder(ranks=tuple(int(r) for r in inverse))


def permutation_sorts(perm: Sequence[int], order: WeakOrder) -> bool:
    """True iff the permutation lists the indices in non-decreasing rank order."""
    ranks = order.ranks
    return all(ranks[perm[i]] <= ranks[perm[i + 1]] for i in range(len(perm) - 1))


@dataclass(frozen=True)
class LossMatrix:
    """One loss vector per hypothesis, evaluated on a shared dataset."""

    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.rows, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise FormatError("loss matrix must be 2-D and non-empty")
        if not np.all(np.isfinite(arr)):
            raise InvalidLoss("loss matrix entries must be finite")
        object.__setattr__(self, "rows", arr)

    @property
    def n_hypotheses(self) -> int:
        return self.rows.shape[0]

    @property
    def n_points(self) -> int:
        return self.rows.shape[1]

    def distinct_weak_orders(self) -> list[WeakOrder]:
        seen: dict[tuple[int, ...], WeakOrder] = {}
        for row in self.rows:
            w = weak_order(row)
            seen.setdefault(w.ranks, w)
        return list(seen.values())


def _cover_masks(perms: np.ndarray, orders: list[WeakOrder]) -> list[int]:
    """Bitmask over weak orders (bit j) sorted by each permutation (row)."""
    ranks = np.asarray([w.ranks for w in orders], dtype=np.intp)
    k = ranks.shape[0]
    ok = np.empty((perms.shape[0], k), dtype=bool)
    for j in range(k):
        r = ranks[j][perms]
        ok[:, j] = np.all(r[:, 1:] >= r[:, :-1], axis=1)
    shifted = ok.astype(np.uint64) << np.arange(k, dtype=np.uint64)
    return [int(v) for v in shifted.sum(axis=1, dtype=np.uint64)]


def greedy_min_permutations(m: LossMatrix) -> tuple[int, list[tuple[int, ...]]]:
    """Greedy set-cover upper bound with per-row sorting permutations.

    Candidates are the rows' own stable argsort permutations (ties broken
    by original index), so the cover is always feasible and the result is
    at most the number of distinct weak orders.
    """
    orders = m.distinct_weak_orders()
    universe = (1 << len(orders)) - 1
    perms_arr = np.stack([np.argsort(row, kind="stable") for row in m.rows])
    masks = _cover_masks(perms_arr, orders)
    candidates: dict[tuple[int, ...], int] = {}
    for perm_row, mask in zip(perms_arr, masks):
        candidates.setdefault(tuple(int(i) for i in perm_row), mask)
    chosen: list[tuple[int, ...]] = []
    remaining = universe
    pool = list(candidates.items())
    while remaining:
        perm, mask = max(pool, key=lambda kv: (kv[1] & remaining).bit_count())
        gained = mask & remaining
        if not gained:  # cannot happen: every order's own perm covers it
            raise AssertionError("greedy cover stalled")
        chosen.append(perm)
        remaining &= ~mask
    return len(chosen), chosen


def exact_min_permutations(m: LossMatrix) -> tuple[int, list[tuple[int, ...]]]:
    """Exact minimum permutation count with a witness set.

    Enumerates all n! permutations, reduces to distinct maximal cover sets
    over the distinct weak orders, and solves the set cover by depth-first
    branch and bound seeded with the greedy solution.  Feasible because
    every weak order is sorted by at least its own argsort permutation.
    """
    n = m.n_points
    if n > EXACT_MAX_N:
        raise TooLarge(
            f"exact solver enumerates n! permutations and is limited to n <= "
            f"{EXACT_MAX_N}; got n = {n}. Use greedy_min_permutations instead."
        )
    if m.n_hypotheses > EXACT_MAX_ROWS:
        raise TooLarge(
            f"exact solver is limited to {EXACT_MAX_ROWS} hypotheses; "
            f"got {m.n_hypotheses}. Use greedy_min_permutations instead."
        )
    orders = m.distinct_weak_orders()
    n_orders = len(orders)
    universe = (1 << n_orders) - 1

    # Distinct cover masks, keeping the lexicographically first witness each.
    all_perms = np.asarray(list(itertools.permutations(range(n))), dtype=np.intp)
    masks_per_perm = _cover_masks(all_perms, orders)
    mask_to_perm: dict[int, tuple[int, ...]] = {}
    for perm_row, mask in zip(all_perms, masks_per_perm):
        if mask and mask not in mask_to_perm:
            mask_to_perm[mask] = tuple(int(i) for i in perm_row)

    # Only maximal masks can appear in some optimal cover.
    masks = sorted(mask_to_perm, key=lambda mk: mk.bit_count(), reverse=True)
    maximal: list[int] = []
    for mk in masks:
        if not any(mk != other and (mk & other) == mk for other in maximal):
            maximal.append(mk)

    by_element: list[list[int]] = [
        [mk for mk in maximal if mk >> j & 1] for j in range(n_orders)
    ]
    best_count, best_perms = greedy_min_permutations(m)
    best: list[int] = []  # masks of the incumbent (greedy witness used if never improved)
    max_cover = max(mk.bit_count() for mk in maximal)

    def dfs(remaining: int, chosen: list[int]) -> None:
        nonlocal best_count, best
        if not remaining:
            if len(chosen) < best_count:
                best_count = len(chosen)
                best = list(chosen)
            return
        lower = len(chosen) + math.ceil(remaining.bit_count() / max_cover)
        if lower >= best_count:
            return
        # Branch on the uncovered order with the fewest covering masks.
        pick, fewest = -1, None
        r = remaining
        while r:
            j = (r & -r).bit_length() - 1
            k = sum(1 for mk in by_element[j] if mk & remaining)
            if fewest is None or k < fewest:
                pick, fewest = j, k
            r &= r - 1
        cands = sorted(
            (mk for mk in by_element[pick]),
            key=lambda mk: (mk & remaining).bit_count(),
            reverse=True,
        )
        for mk in cands:
            chosen.append(mk)
            dfs(remaining & ~mk, chosen)
            chosen.pop()

    dfs(universe, [])
    if best:
        witnesses = [mask_to_perm[mk] for mk in best]
    else:
        witnesses = best_perms
    return best_count, witnesses


@dataclass(frozen=True)
class PermComplexityEstimate:
    """Monte Carlo estimate of the expected permutation complexity."""

    mean: float
    stderr: float
    values: np.ndarray
    solvers: tuple[str, ...]

    @property
    def reps(self) -> int:
        return self.values.shape[0]


def monte_carlo_permutation_complexity(
    loss_fns: Sequence[Callable[[np.ndarray, np.ndarray], np.ndarray]],
    sample_data: Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]],
    n: int,
    reps: int,
    seed: int,
    allow_greedy: bool = False,
) -> PermComplexityEstimate:
    """Average instance complexity over fresh n-point data draws.

    Uses the exact solver when the instance is small enough; larger
    instances require ``allow_greedy`` (the estimate is then an upper
    bound) and otherwise raise :class:`TooLarge`.
    """
    values = np.empty(reps)
    solvers = []
    for r in range(reps):
        rng = rng_from(seed, "perm_rep", r)
        x, y = sample_data(rng, n)
        m = LossMatrix(np.stack([fn(x, y) for fn in loss_fns]))
        if n <= EXACT_MAX_N and m.n_hypotheses <= EXACT_MAX_ROWS:
            count, _ = exact_min_permutations(m)
            solvers.append("exact")
        elif allow_greedy:
            count, _ = greedy_min_permutations(m)
            solvers.append("greedy")
        else:
            raise TooLarge(
                f"instance (n={n}, rows={m.n_hypotheses}) exceeds the exact "
                "solver limits; pass allow_greedy=True for an upper-bound estimate"
            )
        values[r] = count
    stderr = float(np.std(values, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return PermComplexityEstimate(
        mean=float(np.mean(values)),
        stderr=stderr,
        values=values,
        solvers=tuple(solvers),
    )


def load_loss_matrix_csv(path) -> LossMatrix:
    """Load a loss matrix: rows = hypotheses, columns = data points."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if i == 0:
                    continue  # header row
                raise FormatError(f"{path}: row {i + 1}: not numeric: {row!r}") from None
    if not rows:
        raise FormatError(f"{path}: no numeric rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(f"{path}: row {i + 1}: expected {width} columns, got {len(row)}")
    return LossMatrix(np.asarray(rows))
