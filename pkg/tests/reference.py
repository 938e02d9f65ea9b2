"""Independent reference implementations used to cross-check the package.

Everything here is written from the documented contracts only: brute-force
enumeration, closed-form algebra and exhaustive KKT case analysis. None of
it shares code with primseq beyond the public feature map.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from primseq import features as F
from primseq.world import NULL_ID, Action, ObjectState, Primitive, TaskSpec, WorldState


# ---------------------------------------------------------------------------
# Geometry


def ref_interval_overlap(lo1: float, hi1: float, lo2: float, hi2: float) -> bool:
    """Open-interval intersection test."""
    return min(hi1, hi2) - max(lo1, lo2) > 0.0


def ref_overlap_topview(a: ObjectState, b: ObjectState) -> bool:
    """Positive-area intersection of the two footprint rectangles."""
    ok = True
    for axis in (0, 1):
        lo1 = a.center[axis] - a.dims[axis] / 2.0
        hi1 = a.center[axis] + a.dims[axis] / 2.0
        lo2 = b.center[axis] - b.dims[axis] / 2.0
        hi2 = b.center[axis] + b.dims[axis] / 2.0
        ok = ok and ref_interval_overlap(lo1, hi1, lo2, hi2)
    return ok


# ---------------------------------------------------------------------------
# Inference by exhaustive enumeration


def ref_actions(state: WorldState) -> list[Action]:
    """Every candidate action, generated by plain nested loops."""
    ids = sorted(state.objects)
    out = []
    for p in Primitive:
        if p.arity == 0:
            out.append(Action(p))
        elif p.arity == 1:
            out.extend(Action(p, i) for i in ids)
        else:
            for i in ids:
                for j in ids:
                    if i != j:
                        out.append(Action(p, i, j))
    return out


def ref_loss(truth: Action, predicted: Action) -> float:
    """One point per mismatched slot among primitive, a1 and a2."""
    return (
        (truth.primitive != predicted.primitive)
        + (truth.a1 != predicted.a1)
        + (truth.a2 != predicted.a2)
    )


def ref_score(weights: np.ndarray, state: WorldState, spec: TaskSpec, action: Action, history) -> float:
    return float(np.dot(weights, F.assemble(state, spec, action, history)))


def ref_best_score(weights: np.ndarray, state: WorldState, spec: TaskSpec, history) -> float:
    """Highest plain score over the full action set."""
    return max(ref_score(weights, state, spec, a, history) for a in ref_actions(state))


def ref_best_augmented(
    weights: np.ndarray, state: WorldState, spec: TaskSpec, history, truth: Action
) -> float:
    """Highest score-plus-loss over the full action set."""
    return max(
        ref_score(weights, state, spec, a, history) + ref_loss(truth, a)
        for a in ref_actions(state)
    )


# ---------------------------------------------------------------------------
# Quadratic program
#
# Primal:  min over w, xi >= 0 of  0.5*||w||^2 + C*xi
#          subject to  w . d_i >= b_i - xi  for every constraint i.
# Dual:    max over alpha >= 0, sum(alpha) <= C of  b . alpha - 0.5 a'G a,
#          with G = D D' and w = D' alpha.
#
# For a handful of constraints the exact optimum is found by enumerating
# every candidate support set and solving the KKT equations for the two
# cases sum(alpha) < C and sum(alpha) = C.


def ref_qp(deltas: np.ndarray, losses: np.ndarray, C: float):
    """Exact small-scale QP solution via support-set enumeration.

    Returns (weights, xi, alpha, dual_objective, primal_objective).
    """
    D = np.atleast_2d(np.asarray(deltas, dtype=float))
    b = np.asarray(losses, dtype=float)
    m = len(b)
    if m == 0:
        return np.zeros(D.shape[1]), 0.0, np.zeros(0), 0.0, 0.0
    G = D @ D.T
    tol = 1e-9 * max(1.0, float(np.abs(G).max()), float(np.abs(b).max()))

    def dual_objective(alpha: np.ndarray) -> float:
        return float(b @ alpha - 0.5 * alpha @ G @ alpha)

    def kkt_ok(alpha: np.ndarray, mu: float, support: tuple[int, ...]) -> bool:
        if np.any(alpha < -tol) or mu < -tol:
            return False
        if alpha.sum() > C + tol:
            return False
        grad = b - G @ alpha
        off = [i for i in range(m) if i not in support]
        return all(grad[i] <= mu + 1e-7 for i in off)

    best_alpha = np.zeros(m)
    best_obj = dual_objective(best_alpha) if kkt_ok(best_alpha, 0.0, ()) else -np.inf
    for size in range(1, m + 1):
        for support in combinations(range(m), size):
            S = list(support)
            Gss = G[np.ix_(S, S)]
            # Interior case: the budget constraint is slack and mu = 0.
            sol, *_ = np.linalg.lstsq(Gss, b[S], rcond=None)
            if np.allclose(Gss @ sol, b[S], atol=1e-7):
                alpha = np.zeros(m)
                alpha[S] = sol
                if alpha.sum() <= C + tol and kkt_ok(alpha, 0.0, support):
                    obj = dual_objective(alpha)
                    if obj > best_obj:
                        best_obj, best_alpha = obj, alpha
            # Tight case: sum(alpha) = C with budget multiplier mu >= 0.
            A = np.zeros((size + 1, size + 1))
            A[:size, :size] = Gss
            A[:size, size] = 1.0
            A[size, :size] = 1.0
            rhs = np.concatenate([b[S], [C]])
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            if np.allclose(A @ sol, rhs, atol=1e-7):
                alpha = np.zeros(m)
                alpha[S] = sol[:size]
                mu = float(sol[size])
                if kkt_ok(alpha, mu, support):
                    obj = dual_objective(alpha)
                    if obj > best_obj:
                        best_obj, best_alpha = obj, alpha
    w = D.T @ best_alpha
    xi = max(0.0, float(np.max(b - D @ w)))
    primal = 0.5 * float(w @ w) + C * xi
    return w, xi, best_alpha, best_obj, primal


def ref_qp_single(delta: np.ndarray, loss_value: float, C: float):
    """Closed-form optimum for exactly one constraint."""
    d = np.asarray(delta, dtype=float)
    sq = float(d @ d)
    alpha = C if sq == 0.0 else min(C, max(0.0, loss_value / sq))
    if sq == 0.0 and loss_value <= 0.0:
        alpha = 0.0
    w = alpha * d
    xi = max(0.0, loss_value - float(w @ d))
    return w, xi, alpha
