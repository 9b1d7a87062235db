"""States, centralizers, event detection, collapse and conditional expectations.

A state is a density matrix Omega with evaluation omega(X) = tr(Omega X).  An
event is a family of disjoint orthogonal projections summing to the identity.
A potential event becomes actual when its projections span the center of the
centralizer of the current state on the future algebra and at least two
branches carry strictly positive weight; the state then collapses onto one
branch with Born probability.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import algebra as alg
from .algebra import StarAlgebra, contains
from .errors import (
    DegenerateWeightWarning,
    DimensionMismatch,
    NotMember,
    NonConvergence,
    TooManyProjections,
    ZeroProbability,
)
from .linalg import dagger, freeze, is_projection, operator_norm

WEIGHT_EPS = 1e-8
STATE_TOL = 1e-10


@dataclass(frozen=True)
class State:
    """Density matrix: Hermitian, positive semidefinite, unit trace."""

    density: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.density, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionMismatch(f"density must be square, got {rho.shape}")
        scale = 1.0 + operator_norm(rho)
        if operator_norm(rho - dagger(rho)) > STATE_TOL * scale:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > STATE_TOL * scale:
            raise ValueError(f"density trace {tr} is not 1")
        min_eig = float(np.linalg.eigvalsh((rho + dagger(rho)) / 2)[0])
        if min_eig < -STATE_TOL * scale:
            raise ValueError(f"density has negative eigenvalue {min_eig}")
        object.__setattr__(self, "density", freeze(rho))

    @property
    def dim(self) -> int:
        return self.density.shape[0]

    def expect(self, x: np.ndarray) -> complex:
        """omega(X) = tr(Omega X)."""
        return complex(np.trace(self.density @ x))


@dataclass(frozen=True)
class EventFamily:
    """Disjoint orthogonal projections with labels; a partition of unity."""

    projections: tuple[np.ndarray, ...]
    labels: tuple[str, ...]
    time_index: int = -1

    def __post_init__(self):
        if len(self.projections) != len(self.labels):
            raise ValueError("labels and projections must align")
        object.__setattr__(
            self, "projections", tuple(freeze(p) for p in self.projections)
        )

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def __len__(self) -> int:
        return len(self.projections)

    def validate(self, tol: float = 1e-9):
        d = self.dim
        total = np.zeros((d, d), dtype=np.complex128)
        for i, p in enumerate(self.projections):
            if not is_projection(p, tol):
                raise ValueError(f"member {i} is not an orthogonal projection")
            total += p
        if operator_norm(total - np.eye(d)) > tol * (1.0 + 1.0):
            raise ValueError("projections do not sum to the identity")
        for a, b in combinations(range(len(self.projections)), 2):
            if operator_norm(self.projections[a] @ self.projections[b]) > tol:
                raise ValueError(f"members {a} and {b} are not disjoint")


@dataclass(frozen=True)
class EventDetection:
    """Outcome of event detection on a state over an algebra.

    ``actual`` is true iff the center of the centralizer is non-trivial and
    at least two branch weights exceed the positivity threshold.
    ``incoherence_residual`` is the largest violation of the incoherent
    superposition identity over the algebra basis (diagnostic only).
    """

    centralizer: StarAlgebra | None
    center_of_centralizer: StarAlgebra | None
    event: EventFamily | None
    weights: tuple[float, ...]
    actual: bool
    incoherence_residual: float = 0.0


def born_weights(omega: State, event: EventFamily) -> list[float]:
    """w_xi = omega(pi_xi); nonnegative up to tolerance, summing to one."""
    if event.dim != omega.dim:
        raise DimensionMismatch("event and state dimensions differ")
    weights = [float(omega.expect(p).real) for p in event.projections]
    for w in weights:
        if w < -1e-10 or w > 1.0 + 1e-10:
            raise ValueError(f"Born weight {w} outside [0, 1]")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError(f"Born weights sum to {sum(weights)}")
    return weights


def collapse(omega: State, projection: np.ndarray, weight_eps: float = 1e-12) -> State:
    """State conditioned on one branch: pi Omega pi / tr(Omega pi)."""
    p = np.asarray(projection, dtype=np.complex128)
    if p.shape != (omega.dim, omega.dim):
        raise DimensionMismatch("projection and state dimensions differ")
    if not is_projection(p, 1e-9):
        raise ValueError("collapse requires an orthogonal projection")
    prob = float(omega.expect(p).real)
    if prob <= weight_eps:
        raise ZeroProbability(f"branch probability {prob} below threshold")
    rho = p @ omega.density @ p / prob
    return State((rho + dagger(rho)) / 2.0)


def centralizer_of_state(
    omega: State, m: StarAlgebra, rel_tol: float = alg.SVD_TOL
) -> StarAlgebra:
    """{Y in M : omega([Y, X]) = 0 for all X in M}.

    Computed as the null space of the map Y -> (tr([Omega, Y] B_i))_i over the
    span of M.  The result is *-closed by construction; multiplicative closure
    is verified rather than assumed, because for non-faithful states the null
    space can in principle pick up non-algebra elements.  If closure fails the
    subspace is shrunk to its largest multiplicatively closed part.
    """
    if m.ambient_dim != omega.dim:
        raise DimensionMismatch("state and algebra dimensions differ")
    basis = m.tensor
    rho = omega.density
    comms = rho @ basis - basis @ rho  # [Omega, B_a] stacked over a
    # T[i, a] = tr([Omega, B_a] B_i)
    t = np.einsum("amn,inm->ia", comms, basis)
    cols = alg._null_columns(t, rel_tol)
    vecs = np.tensordot(cols.T, basis, axes=(1, 0))
    sub = StarAlgebra(m.ambient_dim, tuple(freeze(v) for v in vecs))
    closed = _largest_closed_subspace(sub)
    return closed


def _product_closed(sub: StarAlgebra, tol: float = alg.MEMBER_TOL) -> bool:
    basis = sub.tensor
    k = len(basis)
    if k == 0:
        return True
    # chunked over left factors to bound peak memory on large centralizers
    chunk = max(1, (1 << 22) // max(1, k * basis.shape[1] ** 2))
    for start in range(0, k, chunk):
        left = basis[start : start + chunk]
        prods = np.einsum("aij,bjk->abik", left, basis).reshape(len(left) * k, -1)
        proj = (sub.stack.conj() @ prods.T).T @ sub.stack
        if float(np.abs(prods - proj).max()) > tol:
            return False
    return True


def _largest_closed_subspace(sub: StarAlgebra, max_rounds: int = 16) -> StarAlgebra:
    """Shrink a *-closed subspace to its largest multiplicatively closed part."""
    current = sub
    for _ in range(max_rounds):
        if _product_closed(current):
            return current
        d = current.ambient_dim
        basis = current.tensor
        k = len(basis)
        if k == 0:
            return current
        # Y stays iff Y*B and B*Y remain in the current span for every basis B.
        rows = []
        p_perp = np.eye(d * d, dtype=np.complex128) - current.stack.T @ current.stack.conj()
        for b in basis:
            left = np.kron(np.eye(d), b.T)  # vec(Y b)
            right = np.kron(b, np.eye(d))  # vec(b Y)
            rows.append(p_perp @ left @ current.stack.T)
            rows.append(p_perp @ right @ current.stack.T)
        m = np.concatenate(rows, axis=0)
        cols = alg._null_columns(m)
        if cols.shape[1] == k:
            # no shrink but not closed: tolerance deadlock
            raise NonConvergence("centralizer closure repair did not shrink")
        vecs = np.tensordot(cols.T, basis, axes=(1, 0))
        current = StarAlgebra(d, tuple(freeze(v) for v in vecs))
    raise NonConvergence("centralizer closure repair exceeded its round cap")


def center_of_centralizer(
    omega: State, m: StarAlgebra, rel_tol: float = alg.SVD_TOL
) -> StarAlgebra:
    return alg.center(centralizer_of_state(omega, m, rel_tol), rel_tol)


def event_labels(t: int, count: int) -> list[str]:
    return [f"t{t}:e{k}" for k in range(count)]


def _order_event(projections, weights, t: int) -> tuple[EventFamily, tuple[float, ...]]:
    """Canonical branch order: descending weight, ascending trace, then input order."""
    idx = sorted(
        range(len(projections)),
        key=lambda i: (
            -round(weights[i], 12),
            round(float(np.trace(projections[i]).real), 6),
            i,
        ),
    )
    projs = tuple(projections[i] for i in idx)
    ws = tuple(weights[i] for i in idx)
    family = EventFamily(projs, tuple(event_labels(t, len(projs))), time_index=t)
    return family, ws


def incoherence_residual(omega: State, m: StarAlgebra, event: EventFamily) -> float:
    """max over basis X of |omega(X) - sum_xi omega(pi_xi X pi_xi)|."""
    rho = omega.density
    worst = 0.0
    for x in m.basis:
        direct = np.trace(rho @ x)
        diag = sum(
            np.trace(rho @ (p @ x @ p)) for p in event.projections
        )
        worst = max(worst, abs(direct - diag) / (1.0 + operator_norm(x)))
    return float(worst)


def detect_event(
    omega: State,
    future_algebra: StarAlgebra,
    t: int,
    weight_eps: float = WEIGHT_EPS,
    rng_seed: int = 0,
    rel_tol: float = alg.SVD_TOL,
) -> EventDetection:
    """Find the event that starts to happen at time ``t``, if any.

    Computes the center of the centralizer of the state on the future algebra,
    extracts its minimal projections, evaluates Born weights, and applies the
    actuality criterion: a non-trivial center and at least two weights above
    ``weight_eps``.
    """
    if not 0.0 < weight_eps < 0.5:
        raise ValueError("weight_eps must lie in (0, 0.5)")
    centralizer = centralizer_of_state(omega, future_algebra, rel_tol)
    z = alg.center(centralizer, rel_tol)
    projections = alg.minimal_projections_retry(z, rng_seed)
    weights = [max(0.0, float(omega.expect(p).real)) for p in projections]
    family, ws = _order_event(list(projections), weights, t)
    positive = sum(1 for w in ws if w > weight_eps)
    actual = z.dim >= 2 and positive >= 2
    residual = incoherence_residual(omega, future_algebra, family) if actual else 0.0
    return EventDetection(
        centralizer=centralizer,
        center_of_centralizer=z,
        event=family,
        weights=ws,
        actual=actual,
        incoherence_residual=residual,
    )


def conditional_expectation(
    omega: State,
    m: StarAlgebra | None,
    event: EventFamily,
    x: np.ndarray,
    weight_eps: float = WEIGHT_EPS,
    member_tol: float = alg.MEMBER_TOL,
) -> np.ndarray:
    """Project ``x`` onto the abelian event algebra, weighted by the state.

    eps(X) = sum_xi [omega(pi_xi X) / omega(pi_xi)] pi_xi.  Zero-weight
    projections contribute nothing (the state does not see that sector); they
    are flagged with DegenerateWeightWarning.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (omega.dim, omega.dim):
        raise DimensionMismatch("operator and state dimensions differ")
    if m is not None and not contains(m, x, member_tol):
        raise NotMember("operator lies outside the reference algebra")
    rho = omega.density
    out = np.zeros_like(x)
    degenerate = False
    for p in event.projections:
        w = float(np.trace(rho @ p).real)
        if w <= weight_eps:
            degenerate = True
            continue
        out += (np.trace(rho @ p @ x) / w) * p
    if degenerate:
        warnings.warn(
            "zero-weight sector met in conditional expectation; term set to 0",
            DegenerateWeightWarning,
            stacklevel=2,
        )
    return out


def dist_to_event_algebra(
    omega: State,
    m: StarAlgebra | None,
    event: EventFamily,
    x: np.ndarray,
    weight_eps: float = WEIGHT_EPS,
) -> float:
    """dist(X, Z) = ||X - eps(X)|| in operator norm."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWeightWarning)
        eps = conditional_expectation(omega, m, event, x, weight_eps)
    return operator_norm(x - eps)


def nearest_projection_in_event(
    q: np.ndarray,
    event: EventFamily,
    omega: State | None = None,
    method: str = "auto",
) -> tuple[np.ndarray, float]:
    """Closest projection (operator norm) in the lattice of sums of branches.

    Exhaustive subset search up to 20 branches; beyond that a greedy rule
    includes each branch pi with ||pi q - pi|| < 1/2.
    """
    q = np.asarray(q, dtype=np.complex128)
    if not is_projection(q, 1e-8):
        raise ValueError("nearest_projection_in_event requires a projection")
    n = len(event.projections)
    exhaustive = method in ("auto", "exhaustive") and n <= 20
    if method == "exhaustive" and n > 20:
        raise TooManyProjections(f"{n} projections exceed the exhaustive cap")
    if exhaustive:
        d = event.dim
        best_p = np.zeros((d, d), dtype=np.complex128)
        best = operator_norm(q - best_p)
        for r in range(1, n + 1):
            for subset in combinations(range(n), r):
                p = sum(event.projections[i] for i in subset)
                dist = operator_norm(q - p)
                if dist < best - 1e-15:
                    best, best_p = dist, p
        return freeze(best_p), float(best)
    if method in ("auto", "greedy"):
        p = np.zeros((event.dim, event.dim), dtype=np.complex128)
        for pi in event.projections:
            if operator_norm(pi @ q - pi) < 0.5:
                p = p + pi
        return freeze(p), float(operator_norm(q - p))
    raise TooManyProjections("exhaustive and greedy search both disabled")
