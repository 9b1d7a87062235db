"""The stochastic branching process of states.

A history samples one branch per actual event with Born probabilities; a tree
enumerates all of them.  Sibling branches carry different (generally
non-commuting) future event families, which is what separates this process
from a classical branching process: each node's event is computed from that
node's own collapsed state.

The path measure assigns to an ordered event sequence the weight

    mu(xi_1..xi_n | X) = omega(pi_1 ... pi_n  X X*  pi_n ... pi_1),

which reproduces tree path weights for X = 1 and satisfies a marginalization
sum rule (Kolmogorov consistency) because every projection lies in the
centralizer of the state it acts on.  Reversing the operator order gives a
second measure; the relative entropy between the two is non-negative and
vanishes when all event projections commute across times, so it serves as an
irreversibility diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import (
    ChainModel,
    chain_initial_state,
    gate_cnot,
    gate_controlled_projection_flip,
    singlet_pair_density,
)
from .errors import DepthExceeded, OutOfRange, TreeTooLarge
from .linalg import SIGMA_X, SIGMA_Z, embed_site_operator, kron_all
from .states import (
    EventDetection,
    State,
    collapse,
    detect_event,
    incoherence_residual,
)
from .trace import fingerprint

WEIGHT_EPS = 1e-8


def _detect(
    model: ChainModel,
    state: State,
    t: int,
    weight_eps: float,
    engine: str,
    rng_seed: int = 0,
) -> EventDetection:
    if engine == "reduced":
        return model.detect_event_reduced(state, t, weight_eps)
    if engine == "generic":
        return detect_event(
            state, model.algebra_at(t).algebra, t, weight_eps, rng_seed=rng_seed
        )
    raise ValueError(f"unknown detection engine '{engine}'")


def _draw_branch(weights, weight_eps: float, u: float) -> int:
    """Pick a branch index by Born weights; zero-weight branches are skipped."""
    total = sum(w for w in weights if w > weight_eps)
    acc = 0.0
    last = None
    for i, w in enumerate(weights):
        if w <= weight_eps:
            continue
        acc += w / total
        last = i
        if u < acc:
            return i
    return last


# ---------------------------------------------------------------------------
# single histories


@dataclass(frozen=True)
class HistoryStep:
    t: int
    event: object | None  # EventFamily when an actual event happened
    weights: tuple[float, ...]
    chosen_label: str | None
    weight: float
    entropy: float
    post_state_fingerprint: str


@dataclass(frozen=True)
class History:
    steps: tuple[HistoryStep, ...]
    final_state: State
    seed: int


def missing_information(weights) -> float:
    """Shannon entropy -sum w ln w of an event's Born weights, 0 ln 0 = 0."""
    total = 0.0
    s = 0.0
    for w in weights:
        if w < -1e-12:
            raise ValueError(f"negative weight {w}")
        s += w
        if w > 0.0:
            total -= w * math.log(w)
    if s > 1.0 + 1e-9:
        raise ValueError(f"weights sum to {s} > 1")
    return total


def sample_history(
    model: ChainModel,
    horizon: int | None = None,
    seed: int = 0,
    weight_eps: float = WEIGHT_EPS,
    engine: str = "reduced",
) -> History:
    """One Born-rule sample of the branching process up to ``horizon``.

    Steps without an actual event leave the state untouched; the state only
    changes through collapse.
    """
    horizon = model.horizon if horizon is None else horizon
    if horizon > model.horizon:
        raise OutOfRange("horizon exceeds the model horizon")
    rng = np.random.default_rng(seed)
    state = model.initial_state
    steps = []
    for t in range(1, horizon + 1):
        det = _detect(model, state, t, weight_eps, engine)
        if det.actual:
            u = float(rng.random())
            k = _draw_branch(det.weights, weight_eps, u)
            state = collapse(state, det.event.projections[k], weight_eps)
            steps.append(
                HistoryStep(
                    t=t,
                    event=det.event,
                    weights=det.weights,
                    chosen_label=det.event.labels[k],
                    weight=det.weights[k],
                    entropy=missing_information(det.weights),
                    post_state_fingerprint=fingerprint(state.density),
                )
            )
        else:
            steps.append(
                HistoryStep(
                    t=t,
                    event=None,
                    weights=(),
                    chosen_label=None,
                    weight=1.0,
                    entropy=0.0,
                    post_state_fingerprint=fingerprint(state.density),
                )
            )
    return History(tuple(steps), state, seed)


# ---------------------------------------------------------------------------
# exhaustive trees


@dataclass
class TreeNode:
    t: int
    state: State
    path_weight: float
    event: object | None = None
    weights: tuple[float, ...] = ()
    entropy: float = 0.0
    children: dict = field(default_factory=dict)


@dataclass
class HistoryTree:
    root: TreeNode
    horizon: int
    prune_eps: float
    pruned_mass: float
    node_count: int

    def nodes_at_depth(self, depth: int):
        level = [self.root]
        for _ in range(depth):
            level = [c for n in level for c in n.children.values()]
        return level

    def depth_weights(self):
        """Total unpruned path weight at every depth (1.0 minus pruned mass)."""
        return [
            sum(n.path_weight for n in self.nodes_at_depth(d))
            for d in range(self.horizon + 1)
        ]

    def step_paths(self):
        """All root-to-leaf paths, one entry per time step.

        Each entry is (t, label, projection, conditional_weight).  Steps
        without an actual event carry label None, the identity projection and
        weight 1: the trivial partition, which leaves every measure value
        unchanged.  This keeps path depth uniform even when some branches
        stop producing events.
        """
        paths = []
        dim = self.root.state.dim
        eye = np.eye(dim, dtype=np.complex128)

        def walk(node, acc):
            if not node.children:
                paths.append(acc)
                return
            if node.event is None:
                child = next(iter(node.children.values()))
                walk(child, acc + [(node.t + 1, None, eye, 1.0)])
                return
            for label, child in node.children.items():
                k = node.event.labels.index(label)
                step = (node.t + 1, label, node.event.projections[k], node.weights[k])
                walk(child, acc + [step])

        walk(self.root, [])
        return paths

    @property
    def has_events(self) -> bool:
        return any(
            step[1] is not None for path in self.step_paths() for step in path
        )


def enumerate_tree(
    model: ChainModel,
    horizon: int | None = None,
    prune_eps: float | None = None,
    weight_eps: float = WEIGHT_EPS,
    engine: str = "reduced",
    max_nodes: int = 100_000,
) -> HistoryTree:
    """Depth-first expansion of every branch with weight above ``prune_eps``.

    Each node's event family is recomputed from that node's collapsed state;
    pruned probability mass is tracked, never silently dropped.
    """
    horizon = model.horizon if horizon is None else horizon
    if horizon > model.horizon:
        raise OutOfRange("horizon exceeds the model horizon")
    if prune_eps is None:
        prune_eps = weight_eps
    count = 0
    pruned = 0.0

    def expand(node: TreeNode):
        nonlocal count, pruned
        if node.t >= horizon:
            return
        det = _detect(model, node.state, node.t + 1, weight_eps, engine)
        if det.actual:
            node.event = det.event
            node.weights = det.weights
            node.entropy = missing_information(det.weights)
            for k, label in enumerate(det.event.labels):
                w = det.weights[k]
                if w <= prune_eps:
                    pruned += node.path_weight * max(w, 0.0)
                    continue
                child = TreeNode(
                    t=node.t + 1,
                    state=collapse(node.state, det.event.projections[k], weight_eps),
                    path_weight=node.path_weight * w,
                )
                node.children[label] = child
                count += 1
                if count > max_nodes:
                    raise TreeTooLarge(f"tree exceeded {max_nodes} nodes")
                expand(child)
        else:
            child = TreeNode(
                t=node.t + 1, state=node.state, path_weight=node.path_weight
            )
            node.children[None] = child
            count += 1
            if count > max_nodes:
                raise TreeTooLarge(f"tree exceeded {max_nodes} nodes")
            expand(child)

    root = TreeNode(t=0, state=model.initial_state, path_weight=1.0)
    count = 1
    expand(root)
    return HistoryTree(root, horizon, prune_eps, pruned, count)


# ---------------------------------------------------------------------------
# the path measure and its diagnostics


def history_measure(root: State, projections, x: np.ndarray | None = None) -> float:
    """mu(xi_1..xi_n | X) = omega(pi_1...pi_n XX* pi_n...pi_1), ordered as given."""
    d = root.dim
    m = np.eye(d, dtype=np.complex128)
    for p in projections:
        if p.shape != (d, d):
            raise ValueError("projection dimension mismatch")
        m = m @ p
    if x is None:
        cond = np.eye(d, dtype=np.complex128)
    else:
        cond = np.asarray(x, dtype=np.complex128) @ np.asarray(x, dtype=np.complex128).conj().T
    val = np.trace(root.density @ m @ cond @ m.conj().T)
    return float(val.real)


def reversed_measure(root: State, projections) -> float:
    """Same sequence with the events applied in reversed order."""
    d = root.dim
    m = np.eye(d, dtype=np.complex128)
    for p in projections:
        m = m @ p
    val = np.trace(root.density @ m.conj().T @ m)
    return float(val.real)


def _unique_prefixes(paths, length: int, match=None):
    """Distinct label prefixes of step paths, optionally sharing ``match``."""
    seen = {}
    for p in paths:
        if len(p) < length:
            continue
        labels = tuple(step[1] for step in p[:length])
        if match is not None and labels[: len(match)] != match:
            continue
        seen.setdefault(labels, p[:length])
    return seen


def check_sum_rule(tree: HistoryTree, root: State, x: np.ndarray | None = None) -> float:
    """Largest violation of the marginalization identity over the tree.

    For every path and every 1 <= k <= m <= n, summing the measure over the
    middle labels xi_{k+1}..xi_m (with the fixed tail folded into the
    conditioning operator) must reproduce the length-k marginal.  Labels
    outside a node's own event space carry zero projections and drop out by
    construction of the enumeration.
    """
    paths = tree.step_paths()
    if not paths:
        return 0.0
    n = len(paths[0])
    worst = 0.0
    full = _unique_prefixes(paths, n)
    for labels, path in full.items():
        projs = [step[2] for step in path]
        for m in range(1, n + 1):
            tail = np.eye(root.dim, dtype=np.complex128)
            for p in projs[m:]:
                tail = tail @ p
            x_cond = tail if x is None else tail @ np.asarray(x, dtype=np.complex128)
            for k in range(1, m + 1):
                rhs = history_measure(root, projs[:k], x_cond)
                lhs = 0.0
                for mid_labels, mid_path in _unique_prefixes(
                    paths, m, match=labels[:k]
                ).items():
                    lhs += history_measure(root, [s[2] for s in mid_path], x_cond)
                worst = max(worst, abs(lhs - rhs))
    return worst


def missing_information_per_event(tree: HistoryTree, root: State, n: int) -> float:
    """sigma_n = -(1/n) sum over depth-n label sequences of mu ln mu."""
    if n <= 0:
        return 0.0
    paths = tree.step_paths()
    depth = len(paths[0]) if paths else 0
    if n > depth:
        raise DepthExceeded(f"tree has depth {depth}, requested {n}")
    total = 0.0
    for labels, path in _unique_prefixes(paths, n).items():
        mu = history_measure(root, [s[2] for s in path])
        if mu > 0.0:
            total -= mu * math.log(mu)
    return total / n


def relative_entropy_vs_reversed(root: State, tree: HistoryTree, n: int) -> float:
    """S_n(mu || mu_reversed) over depth-n label sequences; +inf if the
    reversed measure vanishes on the support of mu."""
    if n <= 0:
        return 0.0
    paths = tree.step_paths()
    depth = len(paths[0]) if paths else 0
    if n > depth:
        raise DepthExceeded(f"tree has depth {depth}, requested {n}")
    floor = 1e-15
    total = 0.0
    for labels, path in _unique_prefixes(paths, n).items():
        projs = [s[2] for s in path]
        mu = history_measure(root, projs)
        if mu <= floor:
            continue
        opp = reversed_measure(root, projs)
        if opp <= floor:
            return math.inf
        total += mu * (math.log(mu) - math.log(opp))
    return total


# ---------------------------------------------------------------------------
# the two-particle filter demonstration


@dataclass(frozen=True)
class EprReport:
    """Unitary-only versus branch-conditional description of the spin pair."""

    theta_filter: float
    unitary_marginals: tuple[float, ...]
    strict_actual: bool
    strict_weights: tuple[float, ...]
    filter_weights: tuple[float, ...]
    incoherence_residual: float
    conditional_spin: tuple[float, ...]
    samples: int
    empirical_correlation: float
    branch_counts: tuple[int, ...]


def _qubit_axis_projections(theta: float):
    n = np.sin(theta) * SIGMA_X + np.cos(theta) * SIGMA_Z
    plus = (np.eye(2) + n) / 2.0
    minus = (np.eye(2) - n) / 2.0
    return plus, minus


def epr_demo(theta_filter: float = 0.0, seed: int = 0, samples: int = 10_000) -> EprReport:
    """Spin-singlet pair with a filter probe on one particle.

    The Heisenberg-picture expectation of the other particle's spin-z stays
    exactly zero for all times, yet conditioning on the filter branch gives
    spin values of +-1 that are perfectly anticorrelated with the filter
    outcome.  Both descriptions are reported side by side.

    The exact singlet makes the two filter branches carry weight 1/2 each, a
    degenerate spectrum, so the strict center-of-centralizer criterion merges
    them into one sector and reports no actual event.  The filter-sector
    family still satisfies the incoherent-superposition identity on the
    future algebra (residual reported, numerically zero), and branching is
    sampled from that family.
    """
    s, p, big_t = 4, 2, 2
    plus, minus = _qubit_axis_projections(theta_filter)
    ctrl = kron_all([plus, np.eye(2)])  # filter reads the first particle
    gate1 = gate_controlled_projection_flip(s, p, ctrl)
    gate2 = gate_cnot(s, p, control_states=[1, 3])  # probe 2 records P's z-bit
    init = chain_initial_state(singlet_pair_density(), s, p, big_t)
    model = ChainModel(s, p, big_t, [gate1, gate2], init)

    site_dims = [s, p, p]
    sz_p = embed_site_operator(kron_all([np.eye(2), SIGMA_Z]), 0, site_dims)
    marginals = []
    for t in range(big_t + 1):
        u = model.propagator(t, 0)
        heis = u.conj().T @ sz_p @ u
        marginals.append(float(np.trace(init.density @ heis).real))

    strict = model.detect_event_reduced(init, 1)

    c1 = model.propagator(1, 0)
    branch_projs = []
    for pr in (plus, minus):
        emb = embed_site_operator(kron_all([pr, np.eye(2)]), 0, site_dims)
        branch_projs.append(c1.conj().T @ emb @ c1)
    from .states import EventFamily  # local import to avoid cycle at module load

    family = EventFamily(tuple(branch_projs), ("t1:e0", "t1:e1"), time_index=1)
    residual = incoherence_residual(init, model.algebra_at(1).algebra, family)
    weights = tuple(float(init.expect(pi).real) for pi in family.projections)

    cond_spin = []
    branch_states = []
    for pi in family.projections:
        st = collapse(init, pi)
        branch_states.append(st)
        cond_spin.append(float(st.expect(sz_p).real))

    # Probability that the second probe clicks (records P's z-bit 1) inside
    # each filter branch; for the z-aligned filter it is exactly 0 or 1.
    c2 = model.propagator(2, 0)
    pointer1 = c2.conj().T @ embed_site_operator(
        np.diag([0.0, 1.0]).astype(np.complex128), 2, site_dims
    ) @ c2
    branch_click = [float(st.expect(pointer1).real) for st in branch_states]

    rng = np.random.default_rng(seed)
    counts = [0, 0]
    f_vals = np.empty(samples)
    m_vals = np.empty(samples)
    for i in range(samples):
        b = 0 if rng.random() < weights[0] else 1
        counts[b] += 1
        f_vals[i] = 1.0 - 2.0 * b
        m_vals[i] = 1.0 - 2.0 * (rng.random() < branch_click[b])
    if samples and counts[0] and counts[1]:
        corr = float(np.corrcoef(f_vals, m_vals)[0, 1])
    else:
        corr = math.nan

    return EprReport(
        theta_filter=theta_filter,
        unitary_marginals=tuple(marginals),
        strict_actual=strict.actual,
        strict_weights=strict.weights,
        filter_weights=weights,
        incoherence_residual=residual,
        conditional_spin=tuple(cond_spin),
        samples=samples,
        empirical_correlation=corr,
        branch_counts=tuple(counts),
    )
