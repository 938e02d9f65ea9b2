"""Max-margin training: cutting-plane outer loop over a small dual QP.

The trainer maintains one averaged margin constraint per outer iteration
(each averages the feature gap and loss of the worst violator at every
demonstration step) and re-solves the dual after each addition. Training is
deterministic: no randomness enters the loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import features as F
from .corpus import Sequence, replay_sequence
from .model import StepContext, multiclass_features, multiclass_scores
from .world import Action, Primitive, TaskSpec


@dataclass(frozen=True)
class TrainConfig:
    C: float = 100.0
    epsilon: float = 0.01
    max_iterations: int = 500
    qp_tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.C <= 0 or self.epsilon <= 0 or self.qp_tolerance <= 0:
            raise ValueError("C, epsilon and qp_tolerance must be positive")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class CuttingPlaneConstraint:
    """Averaged margin requirement: w . delta_psi >= mean_loss - xi."""

    delta_psi: np.ndarray
    mean_loss: float


@dataclass
class QPSolution:
    weights: np.ndarray
    xi: float
    alpha: np.ndarray
    objective: float
    dual_objective: float


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    xi: float
    violation: float
    working_set: int
    alpha_sum: float


@dataclass
class TrainReport:
    weights: np.ndarray
    xi: float
    dual_values: np.ndarray
    iterations: int
    converged: bool
    final_violation: float
    final_objective: float
    records: list[IterationRecord] = field(default_factory=list)


def _kkt_residual(G: np.ndarray, b: np.ndarray, C: float, alpha: np.ndarray) -> float:
    """Largest violation of the dual optimality conditions at alpha."""
    g = b - G @ alpha
    active = alpha > 0.0
    tight = C - float(alpha.sum()) <= 1e-12 * max(1.0, C)
    mu = max(0.0, float(g[active].max())) if tight and active.any() else 0.0
    worst = float(np.abs(g[active] - mu).max()) if active.any() else 0.0
    if (~active).any():
        worst = max(worst, float((g[~active] - mu).max()))
    return worst


def _subspace_step(
    G: np.ndarray, b: np.ndarray, C: float, W: np.ndarray, tight: bool
) -> tuple[np.ndarray, bool]:
    """Target point (or ascent ray endpoint) for the dual restricted to W.

    Solves the equality KKT system on the working set; when the system is
    inconsistent (singular Gram, loss with a component outside its range)
    the restricted dual is unbounded, so the projection of the loss onto
    the feasible null space is returned as an ascent ray instead.
    """
    Gw = G[np.ix_(W, W)]
    bw = b[W]
    n = len(W)
    if tight:
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = Gw
        A[:n, n] = A[n, :n] = 1.0
        rhs = np.append(bw, C)
        sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        scale = max(1.0, float(np.abs(rhs).max()), float(np.abs(A).max()))
        if float(np.abs(A @ sol - rhs).max()) <= 1e-9 * scale:
            if sol[n] >= 0.0:
                return sol[:n], True
            # Negative budget multiplier: the cap should not bind, so fall
            # through and aim at the interior optimum instead.
        else:
            K = np.vstack([Gw, np.ones((1, n))])
            ray = bw - np.linalg.pinv(K) @ (K @ bw)
            if float(np.abs(ray).max()) > 1e-12 * max(1.0, float(np.abs(bw).max())):
                return ray, False
    sol, *_ = np.linalg.lstsq(Gw, bw, rcond=None)
    scale = max(1.0, float(np.abs(bw).max()), float(np.abs(Gw).max()))
    if float(np.abs(Gw @ sol - bw).max()) <= 1e-9 * scale:
        return sol, True
    return bw - Gw @ sol, False


def _active_set_solution(
    G: np.ndarray, b: np.ndarray, C: float, alpha0: np.ndarray, tolerance: float
) -> np.ndarray:
    """Active-set ascent for the dual, warm started at alpha0.

    Coordinate exchanges crawl when the Gram matrix is near singular, so on
    a stall each pass here moves straight toward the working-set optimum
    with an exact line search, clipped at the first bound or the budget
    cap. The dual value never decreases; the best point seen is returned.
    """
    m = len(b)
    cap_slack = 1e-12 * max(1.0, C)

    def dual(a: np.ndarray) -> float:
        return float(b @ a - 0.5 * a @ G @ a)

    alpha = np.clip(alpha0, 0.0, None)
    if alpha.sum() > C:
        alpha = alpha * (C / alpha.sum())
    best, best_value = alpha.copy(), dual(alpha)
    for _ in range(8 * m + 32):
        g = b - G @ alpha
        total = float(alpha.sum())
        tight = C - total <= cap_slack
        active = alpha > 0.0
        mu = max(0.0, float(g[active].max())) if tight and active.any() else 0.0
        worst = float(np.abs(g[active] - mu).max()) if active.any() else 0.0
        if (~active).any():
            worst = max(worst, float((g[~active] - mu).max()))
        if worst <= tolerance:
            break
        W = set(int(i) for i in np.flatnonzero(active))
        outside = [i for i in range(m) if i not in W]
        if outside:
            entrant = max(outside, key=lambda i: g[i])
            if g[entrant] > mu:
                W.add(entrant)
        if not W:
            break
        W = np.array(sorted(W), dtype=int)
        target, finite = _subspace_step(G, b, C, W, tight)
        d = (target - alpha[W]) if finite else target
        if not d.any():
            break
        Gd = G[:, W] @ d
        slope = float(g[W] @ d)
        curve = float(d @ Gd[W])
        if slope <= 0.0:
            break
        step = slope / curve if curve > 0.0 else np.inf
        shrinking = d < 0.0
        if shrinking.any():
            step = min(step, float((alpha[W][shrinking] / -d[shrinking]).min()))
        growth = float(d.sum())
        if not tight and growth > 0.0:
            step = min(step, (C - total) / growth)
        if not np.isfinite(step) or step <= 0.0:
            break
        alpha[W] = np.clip(alpha[W] + step * d, 0.0, None)
        if alpha.sum() > C:
            alpha *= C / alpha.sum()
        value = dual(alpha)
        if value > best_value:
            best, best_value = alpha.copy(), value
    return best


def _pairwise_ascent(
    G: np.ndarray,
    b: np.ndarray,
    C: float,
    alpha: np.ndarray,
    tolerance: float,
) -> np.ndarray:
    """Exact 1-D line maximizations over coordinates and transfer pairs.

    Ascends along single coordinates while budget remains, and along
    e_j - e_k transfer directions once the budget cap is tight (single
    coordinates cannot exchange mass at the cap). Stops when the largest
    KKT violation is at most `tolerance` or progress dies out.
    """
    m = len(b)
    diag = np.diag(G).copy()
    h = G @ alpha
    cap_slack = 1e-12 * max(1.0, C)

    max_moves = 20_000 + 500 * m
    for move in range(max_moves):
        if move % 256 == 255:
            h = G @ alpha  # shed accumulated float drift
        g = b - h
        total = float(alpha.sum())
        tight = C - total <= cap_slack
        active = alpha > 0.0
        mu = max(0.0, float(g[active].max())) if tight and active.any() else 0.0

        worst = 0.0
        if active.any():
            worst = float(np.abs(g[active] - mu).max())
        if (~active).any():
            worst = max(worst, float((g[~active] - mu).max()))
        if worst <= tolerance:
            break

        if not tight:
            desire = np.where(g > 0, g, np.where(active, -g, 0.0))
            j = int(np.argmax(desire))
            headroom = alpha[j] + (C - total)
            if diag[j] > 0.0:
                target = alpha[j] + g[j] / diag[j]
            else:
                target = headroom if g[j] > 0 else 0.0
            new = min(max(target, 0.0), headroom)
            step = new - alpha[j]
            if step == 0.0:
                break  # float resolution exhausted
            alpha[j] = new
            h += step * G[:, j]
        else:
            j = int(np.argmax(g))
            masked = np.where(active, g, np.inf)
            k = int(np.argmin(masked))
            if j == k or not active.any():
                break
            if g[j] <= 0.0 and g[k] < 0.0:
                # No coordinate wants more mass: release budget instead of
                # shuffling it, otherwise an interior optimum is unreachable.
                target = alpha[k] + g[k] / diag[k] if diag[k] > 0.0 else 0.0
                new = min(max(target, 0.0), alpha[k])
                step = new - alpha[k]
                if step == 0.0:
                    break
                alpha[k] = new
                h += step * G[:, k]
                continue
            denom = diag[j] + diag[k] - 2.0 * G[j, k]
            if denom > 0.0:
                t = (g[j] - g[k]) / denom
            else:
                t = alpha[k]
            t = min(max(t, 0.0), alpha[k])
            if t == 0.0:
                break
            alpha[j] += t
            alpha[k] -= t
            h += t * (G[:, j] - G[:, k])
    return alpha


def solve_qp(
    constraints: list[CuttingPlaneConstraint],
    C: float,
    tolerance: float = 1e-8,
    warm_start: np.ndarray | None = None,
) -> QPSolution:
    """Dual ascent for min 1/2 ||w||^2 + C xi over the working set.

    Maximizes b.a - 1/2 a'Ga over {a >= 0, sum(a) <= C}, mainly by pairwise
    coordinate ascent; when that stalls short of the KKT tolerance (near
    singular Gram matrices make the exchanges crawl) it alternates with
    direct active-set refits until the residual clears. Both components
    only ever increase the dual, so the alternation is safe.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    m = len(constraints)
    if m == 0:
        return QPSolution(np.zeros(0), 0.0, np.zeros(0), 0.0, 0.0)
    D = np.stack([c.delta_psi for c in constraints])
    b = np.array([c.mean_loss for c in constraints])
    G = D @ D.T
    alpha = np.zeros(m)
    if warm_start is not None:
        n = min(len(warm_start), m)
        alpha[:n] = np.clip(warm_start[:n], 0.0, None)
        total = alpha.sum()
        if total > C:
            alpha *= C / total

    for _ in range(4):
        alpha = _pairwise_ascent(G, b, C, alpha, tolerance)
        if _kkt_residual(G, b, C, alpha) <= tolerance:
            break
        alpha = _active_set_solution(G, b, C, alpha, tolerance)
        if _kkt_residual(G, b, C, alpha) <= tolerance:
            break
    weights = D.T @ alpha
    slack = float(max(0.0, np.max(b - D @ weights)))
    objective = 0.5 * float(weights @ weights) + C * slack
    dual_objective = float(alpha @ b) - 0.5 * float(weights @ weights)
    return QPSolution(weights, slack, alpha, objective, dual_objective)


# ---------------------------------------------------------------------------
# Constraint generation from demonstrations


@dataclass
class TrainStep:
    spec: TaskSpec
    history: F.History
    truth: Action
    ctx: StepContext
    truth_features: np.ndarray
    loss_vec: np.ndarray


def prepare_steps(sequences: list[Sequence]) -> list[TrainStep]:
    """Flatten demonstrations into per-step contexts by replaying each one."""
    steps: list[TrainStep] = []
    for seq in sequences:
        states = replay_sequence(seq)
        history = F.EMPTY_HISTORY
        for state, action in zip(states, seq.actions):
            ctx = StepContext(state, seq.spec, history)
            steps.append(
                TrainStep(
                    spec=seq.spec,
                    history=history,
                    truth=action,
                    ctx=ctx,
                    truth_features=F.assemble(state, seq.spec, action, history),
                    loss_vec=ctx.loss_vector(action),
                )
            )
            history = history.advance(action)
    return steps


def most_violated(
    weights: np.ndarray, xi: float, steps: list[TrainStep]
) -> tuple[CuttingPlaneConstraint, float]:
    """Averaged most-violating constraint and its violation margin."""
    delta = np.zeros(F.DIMENSION)
    total_loss = 0.0
    for st in steps:
        augmented = st.ctx.scores(weights) + st.loss_vec
        best = int(np.argmax(augmented))
        total_loss += st.loss_vec[best]
        delta += st.truth_features
        delta -= st.ctx.features_at(best)
    m = len(steps)
    constraint = CuttingPlaneConstraint(delta / m, total_loss / m)
    violation = constraint.mean_loss - float(weights @ constraint.delta_psi) - xi
    return constraint, violation


def train(sequences: list[Sequence], config: TrainConfig = TrainConfig(), log=None) -> TrainReport:
    """Cutting-plane training over full candidate actions."""
    return _train_loop(prepare_steps(sequences), config, log, _FullStepOracle())


def train_multiclass(
    sequences: list[Sequence], config: TrainConfig = TrainConfig(), log=None
) -> TrainReport:
    """Same trainer restricted to bare primitives with zero-argument features."""
    steps: list[_MulticlassStep] = []
    for seq in sequences:
        history = F.EMPTY_HISTORY
        for action in seq.actions:
            feats = np.stack([multiclass_features(seq.spec, p, history) for p in Primitive])
            steps.append(_MulticlassStep(seq.spec, history, action.primitive, feats))
            history = history.advance(action)
    return _train_loop(steps, config, log, _MulticlassOracle())


@dataclass
class _MulticlassStep:
    spec: TaskSpec
    history: F.History
    truth: Primitive
    features: np.ndarray  # (|P|, DIMENSION)


class _FullStepOracle:
    def most_violated(self, weights, xi, steps):
        return most_violated(weights, xi, steps)


class _MulticlassOracle:
    def most_violated(self, weights, xi, steps):
        delta = np.zeros(F.DIMENSION)
        total_loss = 0.0
        for st in steps:
            scores = multiclass_scores(weights, st.spec, st.history)
            losses = np.array([float(p != st.truth) for p in Primitive])
            best = int(np.argmax(scores + losses))
            total_loss += losses[best]
            delta += st.features[int(st.truth)]
            delta -= st.features[best]
        m = len(steps)
        constraint = CuttingPlaneConstraint(delta / m, total_loss / m)
        violation = constraint.mean_loss - float(weights @ constraint.delta_psi) - xi
        return constraint, violation


def _train_loop(steps, config: TrainConfig, log, oracle) -> TrainReport:
    if not steps:
        raise ValueError("no training steps")
    weights = np.zeros(F.DIMENSION)
    xi = 0.0
    alpha = np.zeros(0)
    working: list[CuttingPlaneConstraint] = []
    records: list[IterationRecord] = []
    converged = False
    violation = 0.0
    objective = 0.0
    iteration = 0
    for iteration in range(1, config.max_iterations + 1):
        constraint, violation = oracle.most_violated(weights, xi, steps)
        if violation <= config.epsilon:
            converged = True
            iteration -= 1
            break
        working.append(constraint)
        sol = solve_qp(working, config.C, config.qp_tolerance, warm_start=alpha)
        weights, xi, alpha, objective = sol.weights, sol.xi, sol.alpha, sol.objective
        if np.any(alpha < -1e-9) or alpha.sum() > config.C * (1 + 1e-9):
            raise AssertionError("dual iterate left the feasible set")
        records.append(
            IterationRecord(
                iteration=iteration,
                objective=objective,
                xi=xi,
                violation=violation,
                working_set=len(working),
                alpha_sum=float(alpha.sum()),
            )
        )
        if log is not None:
            log(
                f"iter={iteration} objective={objective:.9g} xi={xi:.9g} "
                f"violation={violation:.9g} working_set={len(working)}"
            )
    if log is not None:
        log(f"final converged={converged} iterations={iteration} violation={violation:.9g}")
    return TrainReport(
        weights=weights,
        xi=xi,
        dual_values=alpha,
        iterations=iteration,
        converged=converged,
        final_violation=violation,
        final_objective=objective,
        records=records,
    )
