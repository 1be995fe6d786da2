"""Equiangular projector sets from clock-and-shift orbits.

A fiducial state is orbited under the d^2 displacement operators X^j Z^k to
produce d^2 rank-1 projectors; a valid set has pairwise trace overlap
1/(d+1) and sums to d times the identity. The module also expands Hermitian
matrices in such a set, applies the lambda_k > 1 - 1/d form of the outcome
rule, and searches for fiducials numerically by minimizing the frame
potential down to its Welch bound 2 d^3 / (d+1).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .assignment import TwoStatePairMixed
from .qcore import StateVector, UnitaryOperator
from .sampling import RngStream, haar_states

__all__ = [
    "SicPovm",
    "SicCoefficients",
    "SicValidationReport",
    "FiducialSearchReport",
    "InvalidSicError",
    "wh_displacements",
    "sic_from_fiducial",
    "builtin_fiducial",
    "validate_sic",
    "sic_expand",
    "sic_reconstruct",
    "sic_rule_check",
    "sic_distinguish",
    "frame_potential",
    "welch_bound",
    "search_fiducial",
]


class InvalidSicError(ValueError):
    """The projector set fails the equiangularity/identity validation."""


def welch_bound(d: int) -> float:
    """Minimum frame potential of d^2 unit vectors in dimension d."""
    return 2.0 * d**3 / (d + 1)


@dataclass(frozen=True, eq=False)
class SicPovm:
    """d^2 rank-1 projectors generated from a fiducial state.

    Construction does not certify equiangularity; run ``validate_sic``.
    """

    dim: int
    projectors: np.ndarray
    fiducial: StateVector

    def __post_init__(self):
        proj = np.asarray(self.projectors, dtype=complex)
        d = self.dim
        if proj.shape != (d * d, d, d):
            raise ValueError(f"expected {d * d} projectors of shape ({d},{d}), got {proj.shape}")
        proj = proj.copy()
        proj.setflags(write=False)
        object.__setattr__(self, "projectors", proj)


@dataclass(frozen=True)
class SicValidationReport:
    max_pair_deviation: float
    identity_deviation: float
    passed: bool


@dataclass(frozen=True, eq=False)
class SicCoefficients:
    """Expansion coefficients of a Hermitian matrix over a projector set."""

    lambdas: np.ndarray
    trace_of_rho: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        total = float(lam.sum())
        if abs(total - self.trace_of_rho) > 1e-10:
            raise ValueError(
                f"coefficients sum to {total!r} but the expanded matrix has trace {self.trace_of_rho!r}"
            )
        lam = lam.copy()
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)


@dataclass(frozen=True, eq=False)
class FiducialSearchReport:
    fiducial: StateVector
    frame_potential: float
    lower_bound: float
    iterations: int
    restarts: int
    converged: bool

    def __post_init__(self):
        if self.frame_potential < self.lower_bound - 1e-9:
            raise ValueError(
                f"frame potential {self.frame_potential!r} undercuts the bound {self.lower_bound!r}"
            )


def wh_displacements(d: int) -> list[UnitaryOperator]:
    """The d^2 operators X^j Z^k, indexed m = j*d + k; m = 0 is the identity.

    X is the cyclic shift |m> -> |m+1 mod d| and Z = diag(1, w, ..., w^(d-1))
    with w = exp(2 pi i / d).
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    omega = np.exp(2j * np.pi / d)
    clock = np.diag(omega ** np.arange(d))
    out = []
    xj = np.eye(d, dtype=complex)
    for _ in range(d):
        zk = np.eye(d, dtype=complex)
        for _ in range(d):
            out.append(UnitaryOperator(xj @ zk))
            zk = zk @ clock
        xj = shift @ xj
    return out


def _displacement_stack(d: int) -> np.ndarray:
    return np.array([u.entries for u in wh_displacements(d)])


def _orbit(fiducial: np.ndarray, d: int) -> np.ndarray:
    """Rows are the d^2 orbit states of the fiducial."""
    return _displacement_stack(d) @ fiducial


def sic_from_fiducial(f: StateVector) -> SicPovm:
    """Orbit |f> under all displacements and project each member."""
    d = f.dim
    states = _orbit(f.entries, d)
    projectors = states[:, :, None] * states[:, None, :].conj()
    return SicPovm(d, projectors, f)


def builtin_fiducial(d: int) -> StateVector:
    """Known-good fiducials for d = 2 and d = 3."""
    if d == 2:
        # Bloch vector (1,1,1)/sqrt(3)
        theta = np.arccos(1.0 / np.sqrt(3.0))
        return StateVector(
            np.array([np.cos(theta / 2.0), np.exp(1j * np.pi / 4.0) * np.sin(theta / 2.0)])
        )
    if d == 3:
        return StateVector(np.array([0.0, 1.0, -1.0]) / np.sqrt(2.0))
    raise ValueError(f"no built-in fiducial for dimension {d}; run search_fiducial")


def builtin_sic(d: int) -> SicPovm:
    return sic_from_fiducial(builtin_fiducial(d))


def validate_sic(s: SicPovm, tol: float) -> SicValidationReport:
    """Check pairwise overlaps against 1/(d+1) and the sum against d*I."""
    d = s.dim
    proj = s.projectors
    overlaps = np.einsum("kij,lji->kl", proj, proj).real
    off = overlaps - 1.0 / (d + 1)
    np.fill_diagonal(off, 0.0)
    max_pair = float(np.max(np.abs(off)))
    identity_dev = float(np.linalg.norm(proj.sum(axis=0) - d * np.eye(d)))
    return SicValidationReport(max_pair, identity_dev, max_pair <= tol and identity_dev <= tol)


def _require_valid(s: SicPovm, tol: float = 1e-8) -> None:
    report = validate_sic(s, tol)
    if not report.passed:
        raise InvalidSicError(
            f"projector set fails validation at {tol:.1e}: pair deviation {report.max_pair_deviation:.3e}, "
            f"identity deviation {report.identity_deviation:.3e}"
        )


def sic_expand(r, s: SicPovm) -> SicCoefficients:
    """Coefficients lambda_k = [(d+1) Tr(r P_k) - Tr r] / d.

    The linear combination sum_k lambda_k P_k reconstructs ``r``; for a
    density-matrix input every coefficient lies in [-1/d, 1].
    """
    _require_valid(s)
    mat = np.asarray(getattr(r, "entries", r), dtype=complex)
    d = s.dim
    if mat.shape != (d, d):
        raise ValueError(f"dimension mismatch: matrix {mat.shape} vs projectors ({d},{d})")
    traces = np.einsum("ij,kji->k", mat, s.projectors)
    if float(np.max(np.abs(traces.imag))) > 1e-10:
        raise ValueError("projector traces have imaginary residue; input is not Hermitian")
    total = complex(np.trace(mat))
    if abs(total.imag) > 1e-10:
        raise ValueError(f"input trace {total!r} is not real")
    lambdas = ((d + 1) * traces.real - total.real) / d
    return SicCoefficients(lambdas, float(lambdas.sum()))


def sic_reconstruct(c: SicCoefficients, s: SicPovm) -> np.ndarray:
    """sum_k lambda_k P_k."""
    if len(c.lambdas) != s.projectors.shape[0]:
        raise ValueError(
            f"coefficient count {len(c.lambdas)} does not match projector count {s.projectors.shape[0]}"
        )
    return np.tensordot(c.lambdas, s.projectors, axes=1)


def sic_rule_check(c: SicCoefficients, k: int, d: int) -> bool:
    """Outcome rule for a projector-set element: lambda_k > 1 - 1/d.

    Applies to the expansion of a summed forward+backward pair, so the
    coefficients must total 2.
    """
    if abs(c.trace_of_rho - 2.0) > 1e-8:
        raise ValueError(f"rule applies to trace-2 sums; got trace {c.trace_of_rho!r}")
    if not 0 <= k < len(c.lambdas):
        raise ValueError(f"index {k} out of range for {len(c.lambdas)} coefficients")
    return float(c.lambdas[k]) > 1.0 - 1.0 / d


def sic_distinguish(pair0: TwoStatePairMixed, pair1: TwoStatePairMixed, s: SicPovm):
    """First element index whose rule value differs between the two pairs.

    Returns None when no element separates them; distinct pairs with equal
    summed matrices are legitimately inseparable.
    """
    if pair0.dim != pair1.dim or pair0.dim != s.dim:
        raise ValueError(f"dimension mismatch: pairs {pair0.dim}/{pair1.dim} vs set {s.dim}")
    d = s.dim
    sum0 = pair0.forward.entries + pair0.backward.entries
    sum1 = pair1.forward.entries + pair1.backward.entries
    lam0 = sic_expand(sum0, s)
    lam1 = sic_expand(sum1, s)
    for k in range(d * d):
        if sic_rule_check(lam0, k, d) != sic_rule_check(lam1, k, d):
            return k
    return None


def frame_potential(states) -> float:
    """sum_{k,l} |<psi_k|psi_l>|^4 over all ordered pairs, diagonal included."""
    if isinstance(states, np.ndarray):
        mat = np.asarray(states, dtype=complex)
    else:
        rows = [np.asarray(getattr(v, "entries", v), dtype=complex) for v in states]
        dims = {r.shape for r in rows}
        if len(dims) != 1:
            raise ValueError(f"states have mixed dimensions: {sorted(dims)}")
        mat = np.array(rows)
    norms = np.linalg.norm(mat, axis=1)
    if float(np.max(np.abs(norms - 1.0))) > 1e-9:
        raise ValueError("states must be normalized")
    gram = mat.conj() @ mat.T
    return float(np.sum(np.abs(gram) ** 4))


# --- fiducial search -------------------------------------------------------


def _orbit_potential_and_grad(x: np.ndarray, disp: np.ndarray, disp_h: np.ndarray):
    """Frame potential of the displacement orbit of x/|x| and its gradient.

    Uses the group collapse FP(f) = d^2 * sum_m |<f|D_m|f>|^4 and the scale
    invariance of the normalized objective, so x can roam all of C^d.
    """
    d = disp.shape[-1]
    nsq = float(np.vdot(x, x).real)
    dx = disp @ x
    c = dx @ x.conj()
    abs2 = np.abs(c) ** 2
    g = float(np.sum(abs2**2))

    dhx = disp_h @ x
    gbar = 2.0 * ((abs2 * c.conj()) @ dx + (abs2 * c) @ dhx)
    hbar = (gbar - 4.0 * g * x / nsq) / nsq**4
    value = d * d * g / nsq**4
    grad = d * d * np.concatenate([2.0 * hbar.real, 2.0 * hbar.imag])
    return value, grad


def search_fiducial(d: int, restarts: int, max_iters: int, seed: int) -> FiducialSearchReport:
    """Minimize the orbit frame potential from seeded random starts.

    Runs every restart, keeps the one with the smallest potential (ties to
    the lowest restart index), and reports convergence against the Welch
    bound plus 1e-6. One progress line per restart goes to stderr.
    """
    if not 2 <= d <= 8:
        raise ValueError(f"supported dimensions are 2..8, got {d}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")

    disp = _displacement_stack(d)
    disp_h = disp.conj().transpose(0, 2, 1)
    bound = welch_bound(d)
    starts = haar_states(d, RngStream(seed, stream_index=0), 0, restarts)

    def objective(t: np.ndarray):
        x = t[:d] + 1j * t[d:]
        return _orbit_potential_and_grad(x, disp, disp_h)

    best_potential = np.inf
    best_x = None
    iterations = 0
    for r in range(restarts):
        t0 = np.concatenate([starts[r].real, starts[r].imag])
        res = minimize(
            objective,
            t0,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iters, "ftol": 1e-16, "gtol": 1e-12},
        )
        iterations += int(res.nit)
        pot = float(res.fun)
        print(f"[fiducial-search d={d}] restart {r}: potential {pot:.12f}", file=sys.stderr)
        if pot < best_potential:
            best_potential = pot
            best_x = res.x

    fiducial = StateVector.normalized(best_x[:d] + 1j * best_x[d:])
    orbit = _orbit(fiducial.entries, d)
    potential = frame_potential(orbit)
    return FiducialSearchReport(
        fiducial=fiducial,
        frame_potential=potential,
        lower_bound=bound,
        iterations=iterations,
        restarts=restarts,
        converged=potential <= bound + 1e-6,
    )
