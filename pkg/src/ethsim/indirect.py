"""Indirect measurement: protocols, non-demolition statistics, quantum jumps.

A conserved system quantity A (commuting with the interaction) is measured
indirectly by letting fresh probes interact one per step and reading each
probe's pointer after its interaction.  Restricted to the shrinking future
algebras, each step branches the system over the clustered spectral sectors
of its unconditional post-step state; the collapsed branch fixes the probe's
conditional pointer distribution, which is what the detector samples.

Because A commutes with every step, the sector never changes after the first
collapse ("purification"), the pointer frequencies converge to the
sector-conditional distributions p(.|alpha), and the sector itself is Born
distributed with respect to the initial state.  A slow drift that fails to
commute with A turns the sector into a Markov jump process.

Long protocols never materialize the full chain: one fresh probe at a time is
mathematically identical to the chain construction as long as probes start
pure, and it has no horizon cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyProtocol,
    NoEventError,
    OutOfRange,
    SeparationFailure,
    ValidationError,
)
from .chain import ChainModel, embed_system_probe, ground_density
from .linalg import dagger, freeze, hermitian_eig, operator_norm, partial_trace
from .recording import PhysicalQuantity
from .states import State

WEIGHT_EPS = 1e-8
CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class MeasurementProtocol:
    """Sequence of recorded pointer values (spectrum indices) and their times."""

    values: tuple[int, ...]
    times: tuple[int, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.values)


def frequencies(protocol: MeasurementProtocol, k: int) -> list[Fraction]:
    """f_eta = (1/n) sum_j [eta_j == eta] for eta = 0..k, as exact rationals."""
    n = len(protocol.values)
    if n == 0:
        raise EmptyProtocol("protocol has no recorded values")
    counts = [0] * (k + 1)
    for v in protocol.values:
        if not 0 <= v <= k:
            raise ValueError(f"value {v} outside spectrum 0..{k}")
        counts[v] += 1
    return [Fraction(c, n) for c in counts]


@dataclass(frozen=True)
class NdmScenario:
    """Repeated indirect measurement of a conserved system quantity."""

    system_dim: int
    probe_dim: int
    gate: np.ndarray  # unitary on system x probe
    conserved: np.ndarray  # Hermitian A on the system, [gate, A x 1] = 0
    quantity: PhysicalQuantity  # pointer family on the system x probe factor
    initial_system: State
    runs: int = 100
    steps: int = 25
    probe_density: np.ndarray | None = None
    weight_eps: float = WEIGHT_EPS

    def __post_init__(self):
        s, p = self.system_dim, self.probe_dim
        gate = np.asarray(self.gate, dtype=np.complex128)
        if gate.shape != (s * p, s * p):
            raise DimensionMismatch("gate must act on system x probe")
        if operator_norm(gate @ dagger(gate) - np.eye(s * p)) > 1e-9:
            raise ValidationError("gate is not unitary")
        a = np.asarray(self.conserved, dtype=np.complex128)
        if a.shape != (s, s):
            raise DimensionMismatch("conserved quantity must act on the system")
        if operator_norm(a - dagger(a)) > 1e-9:
            raise ValidationError("conserved quantity must be Hermitian")
        if operator_norm(gate @ np.kron(a, np.eye(p)) - np.kron(a, np.eye(p)) @ gate) > 1e-9:
            raise ValidationError("gate does not conserve the quantity")
        if self.initial_system.dim != s:
            raise DimensionMismatch("initial system state dimension mismatch")
        if self.quantity.projections[0].shape != (s * p, s * p):
            raise DimensionMismatch("quantity must live on the system x probe factor")
        object.__setattr__(self, "gate", freeze(gate))
        object.__setattr__(self, "conserved", freeze(a))
        probe = self.probe_density
        if probe is None:
            probe = ground_density(p)
        object.__setattr__(self, "probe_density", freeze(np.asarray(probe, complex)))

    @property
    def sector_projections(self) -> tuple[np.ndarray, ...]:
        return hermitian_eig(self.conserved).projections

    def exact_pointer_distributions(self) -> np.ndarray:
        """p(eta | alpha): exact per-sector pointer distributions.

        Computed by sector conditioning: with the system pinned in sector
        alpha (maximally mixed within it), one interaction fixes the pointer
        statistics, and conservation makes them stationary.
        """
        sectors = self.sector_projections
        k = self.quantity.size
        out = np.zeros((len(sectors), k))
        for a_idx, p_a in enumerate(sectors):
            rho = p_a / np.trace(p_a).real
            sigma = self.gate @ np.kron(rho, self.probe_density) @ dagger(self.gate)
            for e_idx, q in enumerate(self.quantity.projections):
                out[a_idx, e_idx] = float(np.trace(sigma @ q).real)
        return out

    def check_separation(self, tol: float = 1e-9) -> np.ndarray:
        p = self.exact_pointer_distributions()
        n = p.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                if np.abs(p[i] - p[j]).sum() < tol:
                    raise SeparationFailure(
                        f"sectors {i} and {j} share one pointer distribution"
                    )
        return p


def _spectral_branches(rho: np.ndarray, cluster_tol: float = CLUSTER_TOL):
    """Clustered spectral sectors of a density matrix: (projections, weights)."""
    vals, vecs = np.linalg.eigh((rho + dagger(rho)) / 2.0)
    gap = cluster_tol * (1.0 + float(np.max(np.abs(vals))))
    projections, weights = [], []
    start = 0
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[k] - vals[k - 1] > gap:
            block = vecs[:, start:k]
            projections.append(block @ block.conj().T)
            weights.append(max(0.0, float(np.sum(vals[start:k]))))
            start = k
    return projections, weights


@dataclass
class StepOutcome:
    eta: int
    branched: bool
    branch_weight: float
    new_system: np.ndarray


def _measurement_step(
    rho_s: np.ndarray,
    scn: NdmScenario,
    rng: np.random.Generator,
) -> StepOutcome:
    """One probe interaction: branch on the post-step system sectors, then
    sample the pointer from the collapsed joint state."""
    s, p = scn.system_dim, scn.probe_dim
    sigma = scn.gate @ np.kron(rho_s, scn.probe_density) @ dagger(scn.gate)
    rho_post = partial_trace(sigma, [s, p], keep=[0])
    projections, weights = _spectral_branches(rho_post)
    positive = [k for k, w in enumerate(weights) if w > scn.weight_eps]
    if len(positive) == 1 and np.abs(projections[positive[0]] - np.eye(s)).max() < 1e-9:
        # No sector structure at all: nothing happens, nothing clicks.
        return StepOutcome(eta=0, branched=False, branch_weight=1.0, new_system=rho_post)
    if len(positive) >= 2:
        total = sum(weights[k] for k in positive)
        u = rng.random() * total
        acc = 0.0
        chosen = positive[-1]
        for k in positive:
            acc += weights[k]
            if u < acc:
                chosen = k
                break
        branched = True
    else:
        chosen = positive[0]
        branched = False
    pi = projections[chosen]
    w = weights[chosen]
    sigma_branch = np.kron(pi, np.eye(p)) @ sigma @ np.kron(pi, np.eye(p)) / w
    pointer = np.array(
        [float(np.trace(sigma_branch @ q).real) for q in scn.quantity.projections]
    )
    pointer = np.clip(pointer, 0.0, None)
    pointer /= pointer.sum()
    u = rng.random()
    acc = 0.0
    eta = len(pointer) - 1
    for k, q in enumerate(pointer):
        acc += q
        if u < acc:
            eta = k
            break
    new_rho = partial_trace(sigma_branch, [s, p], keep=[0])
    return StepOutcome(eta=eta, branched=branched, branch_weight=w, new_system=new_rho)


def purification_metric(state: State, conserved: np.ndarray, system_dim: int | None = None) -> float:
    """1 - max_alpha tr(rho_S P_alpha); zero once one sector holds everything."""
    a = np.asarray(conserved, dtype=np.complex128)
    s = a.shape[0] if system_dim is None else system_dim
    rho = state.density
    if state.dim != s:
        if state.dim % s != 0:
            raise DimensionMismatch("state does not factor over the system")
        rho = partial_trace(rho, [s, state.dim // s], keep=[0])
    best = max(float(np.trace(rho @ p).real) for p in hermitian_eig(a).projections)
    return 1.0 - best


def _purification_of(rho_s: np.ndarray, sectors) -> float:
    return 1.0 - max(float(np.trace(rho_s @ p).real) for p in sectors)


@dataclass
class NdmRun:
    protocol: MeasurementProtocol
    first_event_step: int | None
    branch_steps: tuple[int, ...]
    purification: np.ndarray  # per-step metric
    conserved_expectation: np.ndarray  # per-step tr(rho A), jumps only at branches
    classified: int


@dataclass
class NdmReport:
    scenario: NdmScenario
    p_exact: np.ndarray  # (sectors, pointer values)
    born_exact: np.ndarray  # Born weights of the sectors in the initial state
    runs: list[NdmRun]
    classified_counts: np.ndarray
    frequency_curves: list[np.ndarray]  # running frequencies for sampled runs

    @property
    def empirical_distribution(self) -> np.ndarray:
        return self.classified_counts / self.classified_counts.sum()


def classify_frequencies(freq: np.ndarray, p_exact: np.ndarray, prev: int | None = None) -> int:
    """Nearest sector by L1 distance; exact ties keep the previous value."""
    dists = np.abs(p_exact - freq[None, :]).sum(axis=1)
    best = int(np.argmin(dists))
    if prev is not None:
        tied = np.flatnonzero(np.abs(dists - dists[best]) < 1e-12)
        if len(tied) > 1 and prev in tied:
            return prev
    return best


def run_ndm_protocol(
    scn: NdmScenario, seed: int, steps: int | None = None, collect_purification: bool = True
) -> NdmRun:
    """One full indirect-measurement run of ``steps`` probe interactions."""
    steps = scn.steps if steps is None else steps
    rng = np.random.default_rng(seed)
    sectors = scn.sector_projections
    a = np.asarray(scn.conserved)
    rho = np.asarray(scn.initial_system.density)
    values, purif, a_expect, branch_steps = [], [], [], []
    first_event = None
    for j in range(1, steps + 1):
        out = _measurement_step(rho, scn, rng)
        rho = out.new_system
        values.append(out.eta)
        if out.branched:
            branch_steps.append(j)
            if first_event is None:
                first_event = j
        if collect_purification:
            purif.append(_purification_of(rho, sectors))
            a_expect.append(float(np.trace(rho @ a).real))
    protocol = MeasurementProtocol(tuple(values), tuple(range(1, steps + 1)), seed)
    freq = np.array(
        [float(f) for f in frequencies(protocol, scn.quantity.size - 1)]
    )
    p_exact = scn.exact_pointer_distributions()
    classified = classify_frequencies(freq, p_exact)
    return NdmRun(
        protocol=protocol,
        first_event_step=first_event,
        branch_steps=tuple(branch_steps),
        purification=np.array(purif),
        conserved_expectation=np.array(a_expect),
        classified=classified,
    )


def ndm_experiment(
    scn: NdmScenario,
    master_seed: int = 0,
    curve_samples: int = 20,
) -> NdmReport:
    """Independent runs, classified against the exact sector distributions.

    Reports per-run convergence curves (for the first ``curve_samples`` runs),
    the empirical distribution of classified sectors, the exact Born weights
    of the sectors for comparison, and per-run purification trajectories.
    """
    p_exact = scn.check_separation()
    sectors = scn.sector_projections
    born = np.array(
        [float(np.trace(scn.initial_system.density @ p).real) for p in sectors]
    )
    seeds = np.random.SeedSequence(master_seed).generate_state(scn.runs)
    runs = []
    counts = np.zeros(len(sectors), dtype=np.int64)
    curves = []
    for r in range(scn.runs):
        run = run_ndm_protocol(scn, int(seeds[r]))
        runs.append(run)
        counts[run.classified] += 1
        if r < curve_samples:
            vals = np.array(run.protocol.values)
            k = scn.quantity.size
            running = np.zeros((len(vals), k))
            for eta in range(k):
                running[:, eta] = np.cumsum(vals == eta) / np.arange(1, len(vals) + 1)
            curves.append(running)
    return NdmReport(
        scenario=scn,
        p_exact=p_exact,
        born_exact=born,
        runs=runs,
        classified_counts=counts,
        frequency_curves=curves,
    )


# ---------------------------------------------------------------------------
# chain-backed protocols (finite horizon, the full filtration machinery)


def run_protocol(
    model: ChainModel,
    quantity: PhysicalQuantity,
    n: int,
    seed: int = 0,
    weight_eps: float = WEIGHT_EPS,
) -> MeasurementProtocol:
    """Repeated projective recording along a chain model.

    Per step: detect the event on the shrinking future algebra; on a branch,
    collapse with Born probability.  The recorded value is the pointer of the
    step's probe read after its interaction, i.e. sampled from the collapsed
    state's distribution over U(j,0)* Q_eta U(j,0).  Steps with no sector
    structure record the null outcome 0.
    """
    if n > model.horizon:
        raise OutOfRange("protocol length exceeds the model horizon")
    rng = np.random.default_rng(seed)
    state = model.initial_state
    values = []
    for j in range(1, n + 1):
        det = model.detect_event_reduced(state, j, weight_eps)
        weights = det.weights
        positive = [k for k, w in enumerate(weights) if w > weight_eps]
        trivial = len(positive) == 1 and (
            np.abs(
                det.event.projections[positive[0]] - np.eye(model.dim)
            ).max()
            < 1e-9
        )
        if trivial:
            values.append(0)
            continue
        if len(positive) >= 2:
            total = sum(weights[k] for k in positive)
            u = rng.random() * total
            acc, chosen = 0.0, positive[-1]
            for k in positive:
                acc += weights[k]
                if u < acc:
                    chosen = k
                    break
            pi = det.event.projections[chosen]
            rho = pi @ state.density @ pi / weights[chosen]
            state = State((rho + dagger(rho)) / 2.0)
        # single proper positive branch: collapse is the identity on the state
        c = model.propagator(j, 0)
        dist = []
        for q in quantity.projections:
            emb = embed_system_probe(q, j, model.s, model.p, model.horizon)
            heis = c.conj().T @ emb @ c
            dist.append(float(state.expect(heis).real))
        dist = np.clip(np.array(dist), 0.0, None)
        dist /= dist.sum()
        u = rng.random()
        acc, eta = 0.0, len(dist) - 1
        for k, q in enumerate(dist):
            acc += q
            if u < acc:
                eta = k
                break
        values.append(eta)
    return MeasurementProtocol(tuple(values), tuple(range(1, n + 1)), seed)


# ---------------------------------------------------------------------------
# weak measurement / quantum jumps


@dataclass
class JumpTrajectory:
    etas: tuple[int, ...]
    window: int
    window_estimates: tuple[int, ...]
    jump_count: int
    dwell_fractions: np.ndarray
    transition_matrix: np.ndarray  # exact per-step sector transition probabilities
    seed: int


def sector_transition_matrix(scn: NdmScenario, drift: np.ndarray) -> np.ndarray:
    """Exact one-step sector transition probabilities under drift + branching.

    Entry [a, b] is the probability that a system pinned in sector a lands in
    sector b after one drift rotation and one measurement step.
    """
    sectors = scn.sector_projections
    s, p = scn.system_dim, scn.probe_dim
    n = len(sectors)
    out = np.zeros((n, n))
    for a_idx, p_a in enumerate(sectors):
        rho = p_a / np.trace(p_a).real
        rho = drift @ rho @ dagger(drift)
        sigma = scn.gate @ np.kron(rho, scn.probe_density) @ dagger(scn.gate)
        rho_post = partial_trace(sigma, [s, p], keep=[0])
        for b_idx, p_b in enumerate(sectors):
            out[a_idx, b_idx] = float(np.trace(rho_post @ p_b).real)
    return out


def weak_measurement_trajectory(
    scn: NdmScenario,
    drift_angle: float,
    n: int,
    window: int,
    seed: int = 0,
) -> JumpTrajectory:
    """Slow coherent drift interleaved with repeated probe measurements.

    The drift rotates the system by ``drift_angle`` per step in a plane that
    fails to commute with the conserved quantity; the repeated measurements
    pin the state to a sector, producing a piecewise-constant trajectory with
    occasional jumps.  The per-window estimate is the classification of the
    window's pointer frequencies, ties keeping the previous value.
    """
    if drift_angle > 0.2:
        raise ValidationError("drift_angle must satisfy <= 0.2 (weak drift)")
    if window < 10:
        raise ValidationError("window must be at least 10")
    if scn.system_dim != 2:
        raise ValidationError("the built-in drift requires a two-level system")
    p_exact = scn.check_separation(tol=1e-9)
    c, s_ = np.cos(drift_angle), np.sin(drift_angle)
    drift = np.array([[c, -s_], [s_, c]], dtype=np.complex128)
    rng = np.random.default_rng(seed)
    rho = np.asarray(scn.initial_system.density)
    etas = []
    any_event = False
    for _ in range(n):
        rho = drift @ rho @ dagger(drift)
        out = _measurement_step(rho, scn, rng)
        rho = out.new_system
        etas.append(out.eta)
        any_event = any_event or out.branched or out.branch_weight < 1.0 - 1e-12
    if not any_event and drift_angle > 0.0:
        raise NoEventError("no events occurred along the trajectory")
    k = scn.quantity.size
    estimates = []
    prev = None
    for w0 in range(0, n - window + 1, window):
        chunk = etas[w0 : w0 + window]
        freq = np.array([chunk.count(e) / window for e in range(k)])
        est = classify_frequencies(freq, p_exact, prev)
        estimates.append(est)
        prev = est
    jumps = sum(1 for a, b in zip(estimates, estimates[1:]) if a != b)
    n_sec = p_exact.shape[0]
    dwell = np.array([estimates.count(a) / len(estimates) for a in range(n_sec)])
    return JumpTrajectory(
        etas=tuple(etas),
        window=window,
        window_estimates=tuple(estimates),
        jump_count=jumps,
        dwell_fractions=dwell,
        transition_matrix=sector_transition_matrix(scn, drift),
        seed=seed,
    )
