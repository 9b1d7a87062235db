"""Finite-dimensional *-algebras of matrices.

An algebra is stored as an orthonormal basis under the Hilbert-Schmidt inner
product <A,B> = tr(A*B).  All algebras handled here are unital and *-closed;
commutants, relative commutants, centers and the minimal projections of
abelian algebras are computed numerically with SVD rank decisions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    DimensionMismatch,
    GenericityFailure,
    NonConvergence,
    NotAbelian,
)
from .linalg import freeze, hermitian_eig, hs_norm, identity

SVD_TOL = 1e-9
MEMBER_TOL = 1e-8
CLOSURE_ROUNDS = 64

# Internal seed for the generic elements used to accelerate commutant
# computations.  Fixed so that results are reproducible across runs.
_GENERIC_SEED = 0x5EED


def _svd_threshold(singular_values: np.ndarray, rel_tol: float) -> float:
    top = float(singular_values[0]) if len(singular_values) else 0.0
    return rel_tol * (1.0 + top)


def orthonormalize(mats, ambient_dim: int, rel_tol: float = SVD_TOL) -> np.ndarray:
    """Orthonormal basis (stacked as (k, D, D)) of the span of ``mats``."""
    if len(mats) == 0:
        return np.zeros((0, ambient_dim, ambient_dim), dtype=np.complex128)
    stack = np.stack([np.asarray(m, dtype=np.complex128).reshape(-1) for m in mats])
    _, s, vh = np.linalg.svd(stack, full_matrices=False)
    rank = int(np.sum(s > _svd_threshold(s, rel_tol)))
    return vh[:rank].reshape(rank, ambient_dim, ambient_dim)


def _null_columns(mat: np.ndarray, rel_tol: float = SVD_TOL) -> np.ndarray:
    """Orthonormal columns spanning the right null space of ``mat``."""
    if mat.shape[0] == 0:
        return np.eye(mat.shape[1], dtype=np.complex128)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    thr = _svd_threshold(s, rel_tol)
    rank = int(np.sum(s > thr))
    return vh[rank:].conj().T


@dataclass(frozen=True)
class StarAlgebra:
    """A unital *-closed span of matrices with an HS-orthonormal basis."""

    ambient_dim: int
    basis: tuple[np.ndarray, ...]
    contains_unit: bool = True

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def stack(self) -> np.ndarray:
        """Basis as rows of length ambient_dim**2."""
        n = self.ambient_dim * self.ambient_dim
        if not self.basis:
            return np.zeros((0, n), dtype=np.complex128)
        return np.stack([b.reshape(-1) for b in self.basis])

    @cached_property
    def tensor(self) -> np.ndarray:
        """Basis as a (k, D, D) array."""
        d = self.ambient_dim
        return self.stack.reshape(self.dim, d, d)

    def project(self, x: np.ndarray) -> np.ndarray:
        """HS-orthogonal projection of ``x`` onto the span."""
        v = np.asarray(x, dtype=np.complex128).reshape(-1)
        coeffs = self.stack.conj() @ v
        return (self.stack.T @ coeffs).reshape(self.ambient_dim, self.ambient_dim)

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        return self.stack.conj() @ np.asarray(x, dtype=np.complex128).reshape(-1)


def from_span(mats, ambient_dim: int, rel_tol: float = SVD_TOL) -> StarAlgebra:
    basis = orthonormalize(mats, ambient_dim, rel_tol)
    return StarAlgebra(ambient_dim, tuple(freeze(b) for b in basis))


def contains(algebra: StarAlgebra, x: np.ndarray, tol: float = MEMBER_TOL) -> bool:
    """Membership up to ``tol * (1 + ||x||_HS)`` in HS norm."""
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (algebra.ambient_dim, algebra.ambient_dim):
        raise DimensionMismatch(
            f"operator of shape {x.shape} against ambient dimension {algebra.ambient_dim}"
        )
    return hs_norm(x - algebra.project(x)) <= tol * (1.0 + hs_norm(x))


def span_equal(a: StarAlgebra, b: StarAlgebra, tol: float = MEMBER_TOL) -> bool:
    if a.ambient_dim != b.ambient_dim:
        return False
    if a.dim != b.dim:
        return False
    return all(contains(b, x, tol) for x in a.basis) and all(
        contains(a, x, tol) for x in b.basis
    )


def span_distance(a: StarAlgebra, b: StarAlgebra) -> float:
    """Largest HS distance of a basis element of either span from the other."""
    d = 0.0
    for x in a.basis:
        d = max(d, hs_norm(x - b.project(x)))
    for x in b.basis:
        d = max(d, hs_norm(x - a.project(x)))
    return d


def generate_algebra(
    generators, ambient_dim: int, rel_tol: float = SVD_TOL
) -> StarAlgebra:
    """Smallest unital *-algebra containing ``generators``.

    Alternates adjoint and pairwise-product closure with HS
    re-orthonormalization until the dimension stabilizes.
    """
    mats = [identity(ambient_dim)]
    for g in generators:
        g = np.asarray(g, dtype=np.complex128)
        if g.shape != (ambient_dim, ambient_dim):
            raise DimensionMismatch(
                f"generator shape {g.shape} against ambient dimension {ambient_dim}"
            )
        mats.append(g)
        mats.append(g.conj().T)
    basis = orthonormalize(mats, ambient_dim, rel_tol)
    for _ in range(CLOSURE_ROUNDS):
        k = len(basis)
        products = np.einsum("aij,bjk->abik", basis, basis).reshape(
            k * k, ambient_dim, ambient_dim
        )
        adjoints = basis.conj().transpose(0, 2, 1)
        new_basis = orthonormalize(
            np.concatenate([basis, adjoints, products]), ambient_dim, rel_tol
        )
        if len(new_basis) == k:
            return StarAlgebra(ambient_dim, tuple(freeze(b) for b in new_basis))
        basis = new_basis
    raise NonConvergence(
        f"algebra closure did not stabilize in {CLOSURE_ROUNDS} rounds"
    )


def _commutant_of_hermitian(h: np.ndarray, cluster_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (r, D, D) of {X : [X, h] = 0} for Hermitian ``h``.

    The commutant of a Hermitian matrix is the block algebra over its
    clustered eigenspaces, so it comes straight from one eigendecomposition.
    """
    d = h.shape[0]
    vals, vecs = np.linalg.eigh(h)
    gap = cluster_tol * (1.0 + float(np.max(np.abs(vals))))
    blocks = []
    start = 0
    for k in range(1, d + 1):
        if k == d or vals[k] - vals[k - 1] > gap:
            v = vecs[:, start:k]
            m = v.shape[1]
            blocks.append(
                np.einsum("ai,bj->ijab", v, v.conj()).reshape(m * m, d, d)
            )
            start = k
    return np.concatenate(blocks, axis=0)


def commutant(algebra: StarAlgebra, rel_tol: float = SVD_TOL) -> StarAlgebra:
    """{X : [X, B] = 0 for every basis element B}.

    The null space of the stacked commutator map is computed by sequential
    intersection: start from the commutant of one generic Hermitian element of
    the algebra (cheap, via its eigenblocks) and shrink it against every basis
    element with small SVD rank decisions.
    """
    d = algebra.ambient_dim
    if algebra.dim == 0:
        return full_matrix_algebra(d)
    basis = algebra.tensor
    rng = np.random.default_rng(_GENERIC_SEED)
    c = rng.standard_normal(algebra.dim) + 1j * rng.standard_normal(algebra.dim)
    g = np.tensordot(c, basis, axes=(0, 0))
    current = _commutant_of_hermitian((g + g.conj().T) / 2.0)
    elems = [(g - g.conj().T) / 2.0j] + list(basis)
    for b in elems:
        if len(current) == 0:
            break
        comms = current @ b - b @ current
        mat = comms.reshape(len(current), d * d).T
        cols = _null_columns(mat, rel_tol)
        if cols.shape[1] == len(current):
            continue
        current = np.tensordot(cols.T, current, axes=(1, 0))
    return StarAlgebra(d, tuple(freeze(b) for b in current))


def _full_matrix_units(d: int):
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = 1.0
            yield e


def intersect_spans(
    a: StarAlgebra, b: StarAlgebra, cos_tol: float = 1e-8
) -> StarAlgebra:
    """Intersection of the two HS subspaces via principal angles."""
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("ambient dimensions differ")
    d = a.ambient_dim
    if a.dim == 0 or b.dim == 0:
        return StarAlgebra(d, ())
    m = b.stack.conj() @ a.stack.T
    _, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s >= 1.0 - cos_tol
    vecs = vh[keep].conj() @ a.stack
    basis = orthonormalize(vecs.reshape(-1, d, d), d)
    return StarAlgebra(d, tuple(freeze(x) for x in basis))


def relative_commutant(
    a: StarAlgebra, b: StarAlgebra, rel_tol: float = SVD_TOL
) -> StarAlgebra:
    """commutant(a) intersected with the span of ``b``."""
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("ambient dimensions differ")
    return intersect_spans(commutant(a, rel_tol), b)


def center(algebra: StarAlgebra, rel_tol: float = SVD_TOL) -> StarAlgebra:
    return relative_commutant(algebra, algebra, rel_tol)


def is_abelian(algebra: StarAlgebra, tol: float = MEMBER_TOL) -> bool:
    basis = algebra.tensor
    comms = np.einsum("aij,bjk->abik", basis, basis) - np.einsum(
        "bij,ajk->abik", basis, basis
    )
    return float(np.max(np.abs(comms))) <= tol


def _canonical_projection_order(projections):
    """Descending rank (trace), ties broken by rounded-entry lexicographic order."""

    def key(p):
        tr = round(float(np.trace(p).real), 6)
        flat = np.round(p.reshape(-1), 9)
        return (-tr, tuple(zip(flat.real.tolist(), flat.imag.tolist())))

    return sorted(projections, key=key)


def minimal_projections(
    algebra: StarAlgebra,
    rng_seed: int = 0,
    tol: float = MEMBER_TOL,
) -> tuple[np.ndarray, ...]:
    """The unique family of disjoint projections spanning an abelian algebra.

    Spectrally decomposes a random Hermitian combination of the basis with
    generic, seed-dependent coefficients.  Each resulting projection is
    membership-checked; a failure (non-generic draw) raises
    GenericityFailure so the caller can retry with a new seed.
    """
    if not is_abelian(algebra, tol):
        raise NotAbelian("minimal projections require an abelian algebra")
    rng = np.random.default_rng(rng_seed)
    k = algebra.dim
    c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    g = np.tensordot(c, algebra.tensor, axes=(0, 0))
    h = (g + g.conj().T) / 2.0
    eig = hermitian_eig(h, tol=1e-8)
    if len(eig.projections) != k:
        raise GenericityFailure(
            f"random combination produced {len(eig.projections)} levels for a "
            f"{k}-dimensional algebra"
        )
    for p in eig.projections:
        if not contains(algebra, p, tol):
            raise GenericityFailure("an eigenprojection left the algebra span")
    return tuple(_canonical_projection_order(eig.projections))


def minimal_projections_retry(
    algebra: StarAlgebra,
    rng_seed: int = 0,
    tol: float = MEMBER_TOL,
    attempts: int = 8,
) -> tuple[np.ndarray, ...]:
    last: Exception | None = None
    for k in range(attempts):
        try:
            return minimal_projections(algebra, rng_seed + k, tol)
        except GenericityFailure as exc:  # non-generic draw, try the next seed
            last = exc
    raise GenericityFailure(f"no generic draw in {attempts} attempts: {last}")


def full_matrix_algebra(dim: int) -> StarAlgebra:
    units = [freeze(e) for e in _full_matrix_units(dim)]
    return StarAlgebra(dim, tuple(units))


def scalar_algebra(dim: int) -> StarAlgebra:
    return StarAlgebra(dim, (freeze(np.eye(dim) / np.sqrt(dim)),))
