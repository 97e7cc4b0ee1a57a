"""Dense complex linear algebra over small composite Hilbert spaces.

Operators and states are plain complex numpy arrays; this module provides the
tensor-product bookkeeping, the Hermitian eigendecomposition with a fixed
phase convention, and the Lindblad superoperator primitive used by the master
equation right-hand side.

Basis ordering convention: the emitter (QD) factor is the major, slowest
index and the cavity Fock index is minor, i.e. the composite basis is
|qd, n> = |qd> (x) |n> with flat index qd * (n_max + 1) + n.  All operator
embeddings rely on this ordering.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import prod

import numpy as np

logger = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-6


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of finite-dimensional factors."""

    factor_dims: tuple[int, ...]

    def __post_init__(self):
        if len(self.factor_dims) == 0:
            raise ValueError("need at least one factor")
        if any(int(d) != d or d < 1 for d in self.factor_dims):
            raise ValueError(f"factor dims must be positive integers: {self.factor_dims}")
        object.__setattr__(self, "factor_dims", tuple(int(d) for d in self.factor_dims))

    @property
    def total_dim(self) -> int:
        return prod(self.factor_dims)

    def identity(self) -> np.ndarray:
        return np.eye(self.total_dim, dtype=complex)

    def embed(self, op: np.ndarray, factor: int) -> np.ndarray:
        """Embed a single-factor operator into the composite space.

        Identities are placed on every other factor, preserving the
        major-to-minor ordering of ``factor_dims``.
        """
        op = np.asarray(op, dtype=complex)
        if op.shape != (self.factor_dims[factor],) * 2:
            raise ValueError(
                f"operator shape {op.shape} does not match factor dim "
                f"{self.factor_dims[factor]}"
            )
        out = np.eye(1, dtype=complex)
        for i, d in enumerate(self.factor_dims):
            out = np.kron(out, op if i == factor else np.eye(d, dtype=complex))
        return out

    def basis_state(self, *indices: int) -> np.ndarray:
        """Ket |i0, i1, ...> as a flat complex vector."""
        if len(indices) != len(self.factor_dims):
            raise ValueError("need one index per factor")
        flat = 0
        for idx, d in zip(indices, self.factor_dims):
            if not 0 <= idx < d:
                raise ValueError(f"index {idx} out of range for factor dim {d}")
            flat = flat * d + idx
        ket = np.zeros(self.total_dim, dtype=complex)
        ket[flat] = 1.0
        return ket


@dataclass
class EigenDecomposition:
    """Hermitian eigendecomposition, eigenvalues ascending.

    The eigenvector phase is fixed so the largest-magnitude component of each
    column is real and positive, which makes the output deterministic.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; the left factor is the major index."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def destroy(dim: int) -> np.ndarray:
    """Bosonic annihilation operator on a Fock space truncated at dim - 1."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def is_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * max(1.0, np.max(np.abs(a))))


def eig_hermitian(h: np.ndarray, tol: float = HERMITICITY_TOL) -> EigenDecomposition:
    """Diagonalize a Hermitian matrix with a deterministic phase convention.

    Raises ValueError when the input fails the Hermiticity check, since a
    silent eigh of a non-Hermitian matrix would hide upstream bugs.
    """
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(h))))
    herm_err = float(np.max(np.abs(h - h.conj().T)))
    if herm_err > tol * scale:
        raise ValueError(f"matrix is not Hermitian: max |H - H^dag| = {herm_err:.3e}")
    vals, vecs = np.linalg.eigh(h)
    # Phase convention: largest-magnitude component of each column real-positive.
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    phases = np.where(np.abs(lead) > 0, lead / np.maximum(np.abs(lead), 1e-300), 1.0)
    vecs = vecs / phases[np.newaxis, :]
    return EigenDecomposition(vals.astype(float), vecs)


def lindblad(a: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Bare Lindblad superoperator 2 A rho A^dag - A^dag A rho - rho A^dag A.

    The master equation applies the conventional 1/2 prefactor per collapse
    channel on top of this.
    """
    ad = a.conj().T
    ada = ad @ a
    return 2.0 * (a @ rho @ ad) - ada @ rho - rho @ ada


def expectation(a: np.ndarray, rho: np.ndarray) -> complex:
    """Tr[A rho]."""
    return complex(np.einsum("ij,ji->", a, rho))


def check_density_matrix(
    rho: np.ndarray,
    positivity_tol: float = POSITIVITY_TOL,
    trace_tol: float = TRACE_TOL,
    herm_tol: float = HERMITICITY_TOL,
    context: str = "",
) -> list[str]:
    """Validate density-matrix invariants, returning violation messages.

    Positivity violations are reported but never corrected: the weak-coupling
    master equation is not guaranteed completely positive and small negative
    eigenvalues are diagnostic information.
    """
    problems = []
    herm_err = float(np.max(np.abs(rho - rho.conj().T)))
    if herm_err > herm_tol:
        problems.append(f"hermiticity violation {herm_err:.3e}")
    tr_err = abs(complex(np.trace(rho)) - 1.0)
    if tr_err > trace_tol:
        problems.append(f"trace deviation {tr_err:.3e}")
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if min_eig < -positivity_tol:
        problems.append(f"negative eigenvalue {min_eig:.3e}")
    for msg in problems:
        logger.warning("density matrix check%s: %s", f" ({context})" if context else "", msg)
    return problems
