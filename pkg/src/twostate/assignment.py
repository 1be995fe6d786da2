"""Deterministic measurement-outcome assignment for two-state pairs.

A pair of states (one labelled forward, one backward) assigns outcome ``a``
exactly when the two squared overlaps with ``a`` sum to more than 1; the
mixed-state form replaces the overlaps with Tr[(rho_fwd + rho_bwd) P_a].
At most one element of an orthonormal basis can satisfy the rule, so the
assignment is deterministic; it may also be empty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import (
    DensityMatrix,
    HermitianOperator,
    OrthonormalBasis,
    Projector,
    StateVector,
    inner,
    trace_product,
)

__all__ = [
    "TwoStatePairPure",
    "TwoStatePairMixed",
    "AssignmentResult",
    "WeakValueResult",
    "MultipleOutcomesError",
    "OrthogonalPostSelectionError",
    "satisfies_pure",
    "satisfies_mixed",
    "assign_over_basis",
    "collapse",
    "time_reverse",
    "weak_value",
]


class MultipleOutcomesError(RuntimeError):
    """Two or more basis elements satisfied the rule.

    Impossible for an orthonormal basis; raised loudly because it can only
    mean the inputs violated a model invariant.
    """


class OrthogonalPostSelectionError(ValueError):
    """Weak value requested for a (numerically) orthogonal post-selection."""


@dataclass(frozen=True, eq=False)
class TwoStatePairPure:
    forward: StateVector
    backward: StateVector

    def __post_init__(self):
        if self.forward.dim != self.backward.dim:
            raise ValueError(f"dimension mismatch: {self.forward.dim} vs {self.backward.dim}")

    @property
    def dim(self) -> int:
        return self.forward.dim


@dataclass(frozen=True, eq=False)
class TwoStatePairMixed:
    forward: DensityMatrix
    backward: DensityMatrix

    def __post_init__(self):
        if self.forward.dim != self.backward.dim:
            raise ValueError(f"dimension mismatch: {self.forward.dim} vs {self.backward.dim}")

    @property
    def dim(self) -> int:
        return self.forward.dim

    @classmethod
    def from_pure(cls, pair: TwoStatePairPure) -> "TwoStatePairMixed":
        return cls(DensityMatrix.pure(pair.forward), DensityMatrix.pure(pair.backward))


@dataclass(frozen=True)
class AssignmentResult:
    """Either ``Assigned(index)`` or ``NoOutcome`` (index is None)."""

    index: int | None

    @property
    def assigned(self) -> bool:
        return self.index is not None

    @classmethod
    def no_outcome(cls) -> "AssignmentResult":
        return cls(None)


@dataclass(frozen=True)
class WeakValueResult:
    value: complex
    event_probability: float


def _check_tie_tol(tie_tol: float) -> None:
    if tie_tol < 0.0:
        raise ValueError(f"tie tolerance must be >= 0, got {tie_tol!r}")


def satisfies_pure(pair: TwoStatePairPure, a: StateVector, tie_tol: float = 0.0) -> bool:
    """True iff |<fwd|a>|^2 + |<bwd|a>|^2 > 1 + tie_tol."""
    _check_tie_tol(tie_tol)
    if pair.dim != a.dim:
        raise ValueError(f"dimension mismatch: {pair.dim} vs {a.dim}")
    p = abs(inner(pair.forward, a)) ** 2
    q = abs(inner(pair.backward, a)) ** 2
    return p + q > 1.0 + tie_tol


def satisfies_mixed(pair: TwoStatePairMixed, p: Projector, tie_tol: float = 0.0) -> bool:
    """True iff Tr[(rho_fwd + rho_bwd) P] > 1 + tie_tol."""
    _check_tie_tol(tie_tol)
    if pair.dim != p.dim:
        raise ValueError(f"dimension mismatch: {pair.dim} vs {p.dim}")
    total = trace_product(pair.forward.entries + pair.backward.entries, p)
    return total > 1.0 + tie_tol


def _rule_sums(pair, basis: OrthonormalBasis) -> np.ndarray:
    """Per-outcome values of the rule's left-hand side, one per basis vector."""
    bmat = basis.as_matrix()
    if isinstance(pair, TwoStatePairPure):
        p = np.abs(bmat.conj() @ pair.forward.entries) ** 2
        q = np.abs(bmat.conj() @ pair.backward.entries) ** 2
        return p + q
    total = pair.forward.entries + pair.backward.entries
    # Tr[(rho_f + rho_b) |a_k><a_k|] = <a_k| (rho_f + rho_b) |a_k>
    vals = np.einsum("ki,ij,kj->k", bmat.conj(), total, bmat)
    return vals.real


def _pick_unique(flags: np.ndarray) -> AssignmentResult:
    hits = np.flatnonzero(flags)
    if hits.size == 0:
        return AssignmentResult.no_outcome()
    if hits.size > 1:
        raise MultipleOutcomesError(
            f"outcomes {hits.tolist()} all satisfied the rule; the inputs violate orthonormality"
        )
    return AssignmentResult(int(hits[0]))


def assign_over_basis(pair, basis: OrthonormalBasis, tie_tol: float = 0.0) -> AssignmentResult:
    """Assign the unique satisfying basis index, or NoOutcome.

    Evaluates the rule for every basis element so that exclusivity is checked
    on every call; a second satisfying index raises MultipleOutcomesError.
    """
    _check_tie_tol(tie_tol)
    if pair.dim != basis.dim:
        raise ValueError(f"dimension mismatch: {pair.dim} vs {basis.dim}")
    sums = _rule_sums(pair, basis)
    return _pick_unique(sums > 1.0 + tie_tol)


def collapse(pair, a: StateVector) -> TwoStatePairPure:
    """Post-measurement pair: both components equal the observed outcome state."""
    return TwoStatePairPure(a, a)


def time_reverse(pair):
    """Swap forward and backward components; an involution."""
    if isinstance(pair, TwoStatePairPure):
        return TwoStatePairPure(pair.backward, pair.forward)
    if isinstance(pair, TwoStatePairMixed):
        return TwoStatePairMixed(pair.backward, pair.forward)
    raise TypeError(f"not a two-state pair: {type(pair).__name__}")


def weak_value(
    a: HermitianOperator,
    forward: StateVector,
    final: StateVector,
    singular_tol: float = 1e-12,
) -> WeakValueResult:
    """<final|A|forward> / <final|forward>, plus the post-selection probability.

    Raises OrthogonalPostSelectionError when the post-selection amplitude is
    below ``singular_tol`` in magnitude, where the quotient is singular.
    """
    if a.dim != forward.dim or forward.dim != final.dim:
        raise ValueError("dimension mismatch between observable and states")
    amplitude = complex(np.vdot(final.entries, forward.entries))
    if abs(amplitude) < singular_tol:
        raise OrthogonalPostSelectionError(
            f"post-selection amplitude {abs(amplitude):.3e} below {singular_tol:.1e}"
        )
    numerator = complex(np.vdot(final.entries, a.entries @ forward.entries))
    probability = abs(complex(np.vdot(forward.entries, final.entries))) ** 2
    return WeakValueResult(numerator / amplitude, probability)
