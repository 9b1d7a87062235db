"""Dense complex matrix kernel.

Everything in the package runs on square ``numpy`` arrays of ``complex128``.
Matrices handed out by this module are frozen (``writeable=False``) so they can
be shared safely between concurrent runs.  Tolerances follow an
absolute-plus-relative convention ``tol * (1 + scale)`` so behaviour does not
depend on the overall size of a scenario.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotHermitian

DEFAULT_TOL = 1e-9
CLUSTER_TOL = 1e-8


def freeze(m: np.ndarray) -> np.ndarray:
    """Return a read-only complex128 copy-if-needed view of ``m``."""
    out = np.ascontiguousarray(m, dtype=np.complex128)
    if out is m:
        out = out.copy()
    out.flags.writeable = False
    return out


def as_operator(entries, dim: int | None = None) -> np.ndarray:
    """Validate and freeze a square finite complex matrix."""
    m = np.asarray(entries, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {m.shape[0]}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValueError("matrix entries must be finite")
    return freeze(m)


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(a* b)."""
    return complex(np.vdot(a, b))


def hs_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def operator_norm(m: np.ndarray) -> float:
    """Largest singular value."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def identity(dim: int) -> np.ndarray:
    return freeze(np.eye(dim, dtype=np.complex128))


SIGMA_X = freeze(np.array([[0, 1], [1, 0]], dtype=np.complex128))
SIGMA_Y = freeze(np.array([[0, -1j], [1j, 0]], dtype=np.complex128))
SIGMA_Z = freeze(np.array([[1, 0], [0, -1]], dtype=np.complex128))


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return operator_norm(m - dagger(m)) <= tol * (1.0 + operator_norm(m))


def is_projection(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    scale = 1.0 + operator_norm(m)
    return (
        operator_norm(m - dagger(m)) <= tol * scale
        and operator_norm(m @ m - m) <= tol * scale
    )


@dataclass(frozen=True)
class HermitianEigensystem:
    """Clustered spectral decomposition of a Hermitian matrix.

    ``eigenvalues`` are ascending cluster representatives (weighted means);
    ``projections`` are the orthogonal projections onto the clustered
    eigenspaces.  They are mutually disjoint and sum to the identity.
    """

    eigenvalues: tuple[float, ...]
    projections: tuple[np.ndarray, ...]

    def reconstruct(self) -> np.ndarray:
        dim = self.projections[0].shape[0]
        out = np.zeros((dim, dim), dtype=np.complex128)
        for lam, p in zip(self.eigenvalues, self.projections):
            out += lam * p
        return out


def hermitian_eig(
    m: np.ndarray,
    tol: float = DEFAULT_TOL,
    cluster_tol: float | None = None,
) -> HermitianEigensystem:
    """Spectral decomposition with near-degenerate eigenvalues merged.

    Eigenvalues closer than ``cluster_tol * (1 + ||m||)`` are treated as a
    single degenerate level; the clustering threshold must be generous enough
    that numerically split degeneracies yield one projection, otherwise
    center detection downstream breaks.
    """
    m = np.asarray(m, dtype=np.complex128)
    scale = 1.0 + operator_norm(m)
    if operator_norm(m - dagger(m)) > tol * scale:
        raise NotHermitian(f"matrix is not Hermitian within {tol}")
    if cluster_tol is None:
        cluster_tol = CLUSTER_TOL
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2.0)
    gap = cluster_tol * scale
    eigenvalues: list[float] = []
    projections: list[np.ndarray] = []
    start = 0
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[k] - vals[k - 1] > gap:
            block = vecs[:, start:k]
            projections.append(freeze(block @ block.conj().T))
            eigenvalues.append(float(np.mean(vals[start:k])))
            start = k
    return HermitianEigensystem(tuple(eigenvalues), tuple(projections))


def kron_all(factors) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def embed_site_operator(op: np.ndarray, site: int, site_dims) -> np.ndarray:
    """Embed ``op`` at ``site`` of a tensor chain, identity elsewhere.

    Site 0 is the leftmost (most significant) Kronecker factor.
    """
    site_dims = list(site_dims)
    if site < 0 or site >= len(site_dims):
        raise DimensionMismatch(f"site {site} outside chain of length {len(site_dims)}")
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (site_dims[site], site_dims[site]):
        raise DimensionMismatch(
            f"operator shape {op.shape} does not match site dimension {site_dims[site]}"
        )
    factors = [np.eye(d, dtype=np.complex128) for d in site_dims]
    factors[site] = op
    return freeze(kron_all(factors))


def partial_trace(rho: np.ndarray, dims, keep) -> np.ndarray:
    """Trace out all factors except ``keep`` (indices into ``dims``, order kept)."""
    dims = list(dims)
    keep = sorted(keep)
    n = len(dims)
    reshaped = np.asarray(rho).reshape(dims + dims)
    # einsum label layout: row axes 0..n-1, column axes n..2n-1
    row = list(range(n))
    col = [i + n if i in keep else i for i in range(n)]
    out_labels = [i for i in keep] + [i + n for i in keep]
    out = np.einsum(reshaped, row + col, out_labels)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return out.reshape(d, d)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or fixed-rank) density matrix, Haar-ish."""
    r = dim if rank is None else rank
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    rho = g @ g.conj().T
    return freeze(rho / np.trace(rho).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return freeze(q)
