"""Classical outer loop: momentum gradient descent and the adaptive
structure search.

The search alternates rounds of {insert identity-initialized gates from the
dictionary, descend to a plateau, probabilistically delete gates that do
not pull their weight, accept or reject the round Metropolis-style against
the best cost so far, compress}. A note on the deletion test: gates whose
removal barely moves the cost are deleted with probability
exp(-beta1 dC1 / C), so harmless gates go and load-bearing ones stay.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .ansatz import FsvffAnsatz, compress_adjacent, insert_identity_gates, remove_gate
from .cost import cost_eval, draw_times, gradient_vector
from .exceptions import DivergenceError
from .statevector import Circuit
from .utils import derive_seed, rng_stream


@dataclass
class OptimizerConfig:
    learning_rate: float = 0.1
    momentum: float = 0.0
    max_iters: int = 500
    plateau_window: int = 20
    plateau_tol: float = 1e-3
    minibatch: int | None = None
    seed: int = 0
    # halve the learning rate on plateau instead of stopping, down to lr/2^10
    lr_halving: bool = False
    target_cost: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")


@dataclass
class StructureSearchConfig:
    beta1: float = 10.0
    beta2: float = 10.0
    insert_count: int = 3
    lam: float = 1e3
    gate_dictionary: tuple = ("rz", "rzz", "givens")
    nearest_neighbor_only: bool = False
    max_rounds: int = 20
    seed: int = 0
    target_cost: float | None = None

    def __post_init__(self):
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise ValueError("beta1 and beta2 must be > 0")
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lambda must be > 0 (or None to disable)")
        if not self.gate_dictionary:
            raise ValueError("gate dictionary must be nonempty")


@dataclass
class TrainingResult:
    theta_opt: np.ndarray
    gamma_opt: np.ndarray
    final_cost: float
    cost_trace: list
    final_circuit: Circuit
    accepted_rounds: int = 0
    grad_norms: list = field(default_factory=list)


def init_params(ansatz: FsvffAnsatz, seed: int = 0) -> FsvffAnsatz:
    """Near-identity start: theta ~ U(-0.1, 0.1), gamma = 0."""
    rng = rng_stream(seed, "init")
    theta = rng.uniform(-0.1, 0.1, len(ansatz.theta))
    return ansatz.with_params(theta=theta, gammas=np.zeros(len(ansatz.gammas)))


def plateau_detector(trace, window: int, tol: float) -> bool:
    """True when the relative improvement over the last `window` entries is
    below tol."""
    if window < 2:
        raise ValueError("window must be >= 2")
    if len(trace) < window:
        return False
    first = trace[-window]
    last = trace[-1]
    return (first - last) / max(abs(first), 1e-300) < tol


@dataclass
class _EvalPlan:
    variant: str
    shots: int | None
    t_max: float | None
    batch: int | None
    bias: float


def _iteration_terms(plan, ts, cfg, iteration):
    """Cost-term selection for one iteration: a cycling minibatch of k's for
    the step-grid cost, or freshly drawn times for the randomized one."""
    if plan.variant == "randomized":
        rs = draw_times(
            plan.batch or 2,
            plan.bias,
            rng_stream(cfg.seed, "r-draw", iteration),
        )
        return None, rs
    if cfg.minibatch is None or cfg.minibatch >= ts.n_eig:
        return None, None
    m = cfg.minibatch
    ks = [(iteration * m + j) % ts.n_eig + 1 for j in range(m)]
    return ks, None


def _eval_cost(plan, ts, ansatz, seed, k_indices=None, r_values=None):
    return cost_eval(
        ts,
        ansatz,
        plan.variant,
        shots=plan.shots,
        seed=seed,
        k_indices=k_indices,
        r_values=r_values,
        t_max=plan.t_max,
        batch=plan.batch,
        bias=plan.bias,
    ).value


def gradient_descent(
    ts,
    ansatz: FsvffAnsatz,
    cfg: OptimizerConfig,
    cost_variant: str = "global",
    shots: int | None = None,
    t_max: float | None = None,
    batch: int | None = None,
    bias: float = 0.75,
) -> TrainingResult:
    """Velocity update v <- momentum v - lr grad; params <- params + v.

    Stops at max_iters, on plateau (unless lr halving still has room), or
    when target_cost is reached. Raises DivergenceError when the cost turns
    non-finite or exceeds 1."""
    plan = _EvalPlan(cost_variant, shots, t_max, batch, bias)
    theta = ansatz.theta.copy()
    gamma = ansatz.gammas.copy()
    v_theta = np.zeros_like(theta)
    v_gamma = np.zeros_like(gamma)
    trace = []
    grad_norms = []
    lr = cfg.learning_rate
    halvings = 0
    window_start = 0
    for it in range(cfg.max_iters):
        current = ansatz.with_params(theta=theta, gammas=gamma)
        ks, rs = _iteration_terms(plan, ts, cfg, it)
        c = _eval_cost(plan, ts, current, derive_seed(cfg.seed, "eval", it), ks, rs)
        trace.append(c)
        if not np.isfinite(c) or c > 1 + 1e-6:
            raise DivergenceError(f"cost diverged to {c} at iteration {it}", trace)
        if cfg.target_cost is not None and c <= cfg.target_cost:
            break
        if len(trace) - window_start >= cfg.plateau_window and plateau_detector(
            trace, cfg.plateau_window, cfg.plateau_tol
        ):
            if cfg.lr_halving and halvings < 10:
                lr /= 2.0
                halvings += 1
                window_start = len(trace)
            else:
                break
        g_theta, g_gamma = gradient_vector(
            ts,
            current,
            "randomized" if plan.variant == "randomized" else "global",
            shots=plan.shots,
            seed=derive_seed(cfg.seed, "grad", it),
            k_indices=ks,
            r_values=rs,
            t_max=plan.t_max,
        )
        grad_norms.append(
            float(np.sqrt(np.sum(g_theta**2) + np.sum(g_gamma**2)))
        )
        v_theta = cfg.momentum * v_theta - lr * g_theta
        v_gamma = cfg.momentum * v_gamma - lr * g_gamma
        theta = theta + v_theta
        gamma = gamma + v_gamma
    final = ansatz.with_params(theta=theta, gammas=gamma)
    final_cost = _eval_cost(
        plan, ts, final, derive_seed(cfg.seed, "final"), None, None
    )
    return TrainingResult(theta, gamma, final_cost, trace, final.w, 0, grad_norms)


def _regularized(cost, circuit, lam):
    if lam is None:
        return cost
    return cost * (1.0 + len(circuit.gates) / lam)


def adaptive_structure_search(
    ts,
    seed_ansatz: FsvffAnsatz,
    opt_cfg: OptimizerConfig,
    ss_cfg: StructureSearchConfig,
    cost_variant: str = "global",
    shots: int | None = None,
    t_max: float | None = None,
    batch: int | None = None,
    bias: float = 0.75,
    eval_batch: int | None = None,
) -> TrainingResult:
    plan = _EvalPlan(cost_variant, shots, t_max, batch, bias)
    # structure decisions need a stable estimate: the stochastic cost keeps
    # its small training batch, but accept/delete tests draw a bigger one
    if eval_batch is None and cost_variant == "randomized":
        eval_batch = max(batch or 2, 32)
    eval_plan = _EvalPlan(cost_variant, shots, t_max, eval_batch or batch, bias)
    rng = rng_stream(ss_cfg.seed, "structure")
    current = seed_ansatz
    eval_seed = derive_seed(ss_cfg.seed, "decision-eval")
    best_cost = _eval_cost(eval_plan, ts, current, eval_seed)
    best = (current.w, current.theta.copy(), current.gammas.copy(), best_cost)
    trace_all = []
    accepted = 0
    for rnd in range(ss_cfg.max_rounds):
        if ss_cfg.target_cost is not None and best[3] <= ss_cfg.target_cost:
            break
        w, theta, gamma, _ = best
        # 1. grow: identity-initialized gates at random positions
        positions = [int(p) for p in rng.integers(0, len(w.gates) + 1, ss_cfg.insert_count)]
        kinds = [str(k) for k in rng.choice(ss_cfg.gate_dictionary, ss_cfg.insert_count)]
        w_grown = insert_identity_gates(
            w,
            positions,
            kinds,
            rng_seed=derive_seed(ss_cfg.seed, "insert", rnd),
            nearest_neighbor_only=ss_cfg.nearest_neighbor_only,
        )
        theta_grown = np.concatenate([theta, np.zeros(w_grown.n_params - w.n_params)])
        grown = FsvffAnsatz(w_grown, current.d.with_gammas(gamma), theta_grown)
        # 2. descend to plateau
        inner_cfg = dataclasses.replace(
            opt_cfg, seed=derive_seed(opt_cfg.seed, "round", rnd)
        )
        res = gradient_descent(
            ts, grown, inner_cfg, cost_variant, shots, t_max, batch, bias
        )
        trace_all.extend(res.cost_trace)
        w_cur = res.final_circuit
        theta_cur = res.theta_opt
        gamma_cur = res.gamma_opt
        tuned = FsvffAnsatz(w_cur, current.d.with_gammas(gamma_cur), theta_cur)
        eval_seed_rnd = derive_seed(ss_cfg.seed, "eval", rnd)
        c_cur = _eval_cost(eval_plan, ts, tuned, eval_seed_rnd)
        # 3. deletion pass, gates tested in circuit order
        i = 0
        while i < len(w_cur.gates):
            gate = w_cur.gates[i]
            w_try = remove_gate(w_cur, i)
            theta_try = (
                np.delete(theta_cur, gate.param_index)
                if gate.param_index is not None
                else theta_cur
            )
            cand = FsvffAnsatz(w_try, current.d.with_gammas(gamma_cur), theta_try)
            c_try = _eval_cost(eval_plan, ts, cand, eval_seed_rnd)
            d_c1 = _regularized(c_try, w_try, ss_cfg.lam) - _regularized(
                c_cur, w_cur, ss_cfg.lam
            )
            denom = max(_regularized(c_cur, w_cur, ss_cfg.lam), 1e-300)
            if rng.random() < np.exp(-ss_cfg.beta1 * d_c1 / denom):
                w_cur, theta_cur, c_cur = w_try, theta_try, c_try
            else:
                i += 1
        # 4. accept or reject the round against the best snapshot
        d_c2 = _regularized(c_cur, w_cur, ss_cfg.lam) - _regularized(
            best[3], best[0], ss_cfg.lam
        )
        denom = max(_regularized(best[3], best[0], ss_cfg.lam), 1e-300)
        accept = d_c2 <= 0 or rng.random() < np.exp(-ss_cfg.beta2 * d_c2 / denom)
        if accept:
            w_cur, theta_cur = compress_adjacent(w_cur, theta_cur)
            best = (w_cur, theta_cur, gamma_cur, c_cur)
            accepted += 1
    w, theta, gamma, c = best
    return TrainingResult(theta, gamma, c, trace_all, w, accepted)
