"""Dense complex matrix kernel: Hermitian terms, exact unitary exponentials, norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, ResourceError

HERMITIAN_TOL = 1e-12
MAX_DIM = 64


def as_matrix(a) -> np.ndarray:
    """Validate ``a`` as a finite square complex matrix and return a read-only copy."""
    arr = np.array(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix has non-finite entries")
    arr.setflags(write=False)
    return arr


def spectral_norm(a) -> float:
    """Largest singular value (the operator 2-norm)."""
    arr = as_matrix(a)
    return float(np.linalg.norm(arr, 2))


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[0]:
        raise InvalidInputError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def operator_distance(u, v) -> float:
    """Spectral norm of ``u - v``."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise InvalidInputError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.linalg.norm(u - v, 2))


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(a))))
    return float(np.max(np.abs(a - a.conj().T))) <= tol * scale


@dataclass(frozen=True, eq=False)
class HermitianTerm:
    """A Hermitian matrix with its spectral norm and a cached eigendecomposition.

    The eigendecomposition is computed on first use and reused by every
    exponential of this term, so a schedule with thousands of factors costs
    one ``eigh`` per term.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = as_matrix(self.matrix)
        if not is_hermitian(mat):
            raise InvalidInputError("matrix is not Hermitian")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        w, v = np.linalg.eigh(self.matrix)
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v

    @cached_property
    def norm(self) -> float:
        w, _ = self.eig
        return float(np.max(np.abs(w)))

    def scaled(self, factor: float) -> "HermitianTerm":
        # Reuses eigenvectors: eig(c*H) = (c*w, V).
        out = HermitianTerm(self.matrix * factor)
        w, v = self.eig
        out.__dict__["eig"] = (w * factor, v)
        return out


def hermitian_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian term."""
    if not isinstance(h, HermitianTerm):
        h = HermitianTerm(h)
    return h.eig


def unitary_exp(h, theta: float) -> np.ndarray:
    """Return ``exp(-1j * theta * H)`` from the eigendecomposition of ``H``."""
    if not np.isfinite(theta):
        raise InvalidInputError("theta must be finite")
    w, v = hermitian_eig(h)
    return (v * np.exp(-1j * theta * w)) @ v.conj().T


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """Terms ``H_1 .. H_m`` sorted by descending norm plus the evolution time.

    ``permutation[i]`` is the index, in the order supplied by the caller, of
    the term now stored at position ``i``.
    """

    terms: tuple[HermitianTerm, ...]
    time: float
    permutation: tuple[int, ...] = field(default=())

    def __post_init__(self):
        terms = [t if isinstance(t, HermitianTerm) else HermitianTerm(t) for t in self.terms]
        if not terms:
            raise InvalidInputError("a system needs at least one term")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise InvalidInputError(f"terms have mismatched dimensions {sorted(dims)}")
        if not (np.isfinite(self.time) and self.time > 0):
            raise InvalidInputError("time must be positive and finite")
        order = sorted(range(len(terms)), key=lambda i: -terms[i].norm)
        base = self.permutation or tuple(range(len(terms)))
        if len(base) != len(terms):
            raise InvalidInputError("permutation length does not match the number of terms")
        if terms[order[0]].norm <= 0:
            raise InvalidInputError("all terms are zero")
        object.__setattr__(self, "terms", tuple(terms[i] for i in order))
        object.__setattr__(self, "permutation", tuple(base[i] for i in order))
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_matrices(cls, matrices: Sequence, time: float) -> "HamiltonianSystem":
        return cls(tuple(HermitianTerm(m) for m in matrices), time)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    @property
    def norms(self) -> tuple[float, ...]:
        return tuple(t.norm for t in self.terms)

    @property
    def norm1(self) -> float:
        return self.terms[0].norm

    @property
    def norm2(self) -> float:
        return self.terms[1].norm if self.m > 1 else 0.0

    @property
    def tau(self) -> float:
        """Normalized evolution time ``||H_1|| t``."""
        return self.norm1 * self.time

    @cached_property
    def normalized_terms(self) -> tuple[HermitianTerm, ...]:
        scale = 1.0 / self.norm1
        return tuple(t.scaled(scale) for t in self.terms)

    def total(self) -> np.ndarray:
        return sum((t.matrix for t in self.terms), np.zeros((self.dim, self.dim), complex))

    def sum_norm(self) -> float:
        return spectral_norm(self.total())


def check_dim(dim: int, limit: int = MAX_DIM) -> None:
    if dim > limit:
        raise ResourceError(f"dense dimension {dim} exceeds the limit {limit}")


def random_hermitian(dim: int, norm: float = 1.0, rng=None) -> np.ndarray:
    """``(G + G^H)/2`` for a standard complex Gaussian ``G``, rescaled to ``norm``."""
    rng = np.random.default_rng(rng)
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    a = (g + g.conj().T) / 2
    return a * (norm / np.max(np.abs(np.linalg.eigvalsh(a))))


def random_system(dim: int, norms: Sequence[float], time: float = 1.0, rng=None) -> HamiltonianSystem:
    rng = np.random.default_rng(rng)
    return HamiltonianSystem.from_matrices([random_hermitian(dim, n, rng) for n in norms], time)
