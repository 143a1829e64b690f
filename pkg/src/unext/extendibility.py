"""k-extendibility of small bipartite states by alternating projections.

A bipartite state is k-extendible when it admits a global state on one A
factor and k B factors that is invariant under permutations of the B factors
and reduces to the original state on (A, B_1). Membership is decided by
Dykstra-corrected alternating projections between the PSD cone and the affine
set of permutation-invariant unit-trace extensions with the right reduction.

A Feasible verdict carries the extension found, which is an independently
checkable certificate. An InfeasibleSignal verdict is heuristic: it reports
that the distance between the two constraint sets stabilized well above the
tolerance, which alternating projections cannot turn into a proof. Callers
that need reliability keep their query points away from the feasibility
boundary.

The projection loop uses the LAPACK eigensolver: profiling puts the Jacobi
path at 4.5-300 ms per eigendecomposition over the relevant sizes (dimension
8 to 64) against 0.03-0.9 ms for LAPACK, and a single query can need tens of
thousands of projections.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import permutations
from typing import Callable, Optional

import numpy as np

from . import linalg
from .linalg import frobenius, hermitize, kron, partial_trace, permutation_operator
from .states import DensityMatrix, isotropic, max_entangled, erasure_family

MAX_EXTENSION_DIM = 4096
_SYM_TOL = 1e-12
_AFFINE_TOL = 1e-12


class VerdictStatus(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE_SIGNAL = "infeasible-signal"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ExtendibilityVerdict:
    status: VerdictStatus
    certificate: Optional[np.ndarray]
    residual: float
    iterations: int


@dataclass(frozen=True)
class ExtensionProblem:
    """A feasibility query: is rho k-extendible on its B side?"""

    rho: DensityMatrix
    k: int
    tol: float = 1e-7
    max_iter: int = 50000

    def __post_init__(self):
        if len(self.rho.dims) != 2:
            raise ValueError("extendibility is defined for bipartite states")
        if self.k < 2:
            raise ValueError("extension order must be >= 2")
        d_a, d_b = self.rho.dims
        if d_a * d_b**self.k > MAX_EXTENSION_DIM:
            raise ValueError(
                f"extension dimension {d_a * d_b ** self.k} exceeds the solver guard "
                f"{MAX_EXTENSION_DIM}"
            )
        if self.tol <= 0.0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")


@lru_cache(maxsize=None)
def _conj_indices(d_a: int, d_b: int, k: int, perm: tuple[int, ...]) -> np.ndarray:
    """Index array src with W omega W^dagger == omega[ix_(src, src)] for the lifted permutation."""
    wb = permutation_operator(d_b, k, perm).real
    j_of_row = np.argmax(wb, axis=1)
    block = d_b**k
    src = (np.arange(d_a)[:, None] * block + j_of_row[None, :]).reshape(-1)
    return src


def _generator_perms(k: int) -> list[tuple[int, ...]]:
    gens = []
    for i in range(k - 1):
        p = list(range(k))
        p[i], p[i + 1] = p[i + 1], p[i]
        gens.append(tuple(p))
    return gens


def symmetrize(omega: np.ndarray, d_a: int, d_b: int, k: int) -> np.ndarray:
    """Average omega over permutations of the k B factors.

    Full group average for k <= 5 (120 index gathers beat the alternative by
    an order of magnitude at the dimensions the scale guard admits); past that
    the average is reached by iterating the mean over adjacent-transposition
    generators to convergence, which scales where enumerating k! terms stops
    being sensible.
    """
    dim = d_a * d_b**k
    omega = np.asarray(omega, dtype=complex)
    if omega.shape != (dim, dim):
        raise ValueError(f"omega shape {omega.shape} does not match dims ({d_a}, {d_b}^{k})")
    if k <= 5:
        acc = np.zeros_like(omega)
        for perm in permutations(range(k)):
            src = _conj_indices(d_a, d_b, k, perm)
            acc += omega[np.ix_(src, src)]
        return acc / math.factorial(k)
    gens = [_conj_indices(d_a, d_b, k, g) for g in _generator_perms(k)]
    x = omega
    scale = max(1.0, float(np.max(np.abs(omega))))
    # the downstream reduction constraint amplifies asymmetry by d_b^(k-1),
    # so the generator average is driven well below the 1e-12 contract; the
    # floor sits a few ulp above zero for O(1) entries
    stop = 5e-15 * scale
    for _ in range(20000):
        acc = x.copy()
        defect = 0.0
        for src in gens:
            moved = x[np.ix_(src, src)]
            defect = max(defect, float(np.max(np.abs(moved - x))))
            acc += moved
        if defect <= stop:
            return x
        x = acc / (len(gens) + 1)
    raise ArithmeticError("generator averaging failed to converge")


def symmetry_defect(omega: np.ndarray, d_a: int, d_b: int, k: int) -> float:
    """Max-entry deviation of omega from invariance under the B-factor transpositions."""
    defect = 0.0
    for g in _generator_perms(k):
        src = _conj_indices(d_a, d_b, k, g)
        defect = max(defect, float(np.max(np.abs(omega[np.ix_(src, src)] - omega))))
    return defect


def affine_project(omega: np.ndarray, rho: DensityMatrix, k: int) -> np.ndarray:
    """Frobenius projection onto the affine extension set of rho.

    The set consists of Hermitian matrices that are permutation-invariant on
    the B factors and whose reduction onto (A, B_1) equals rho (unit trace
    follows). Projecting onto the symmetric subspace first is lossless since
    the set lies inside it; the reduction constraint is then restored by the
    minimum-norm symmetric correction, which has a closed form: with residual
    R = rho - reduction and d = d_B, the correction is the symmetrization of
    (k/d^(k-1)) R - ((k-1)/d^k) (Tr_B R (x) I_B1), tensored with identities.
    One pass lands on the set to rounding accuracy; the loop is a safeguard.
    """
    d_a, d_b = rho.dims
    dims_ext = (d_a,) + (d_b,) * k
    eye_rest = np.eye(d_b ** (k - 1), dtype=complex)
    x = symmetrize(hermitize(omega), d_a, d_b, k)
    for _ in range(50):
        resid = rho.matrix - partial_trace(x, dims_ext, keep=(0, 1))
        if float(np.max(np.abs(resid))) <= _AFFINE_TOL:
            return x
        marg = partial_trace(resid, (d_a, d_b), keep=[0])
        lam = (k / d_b ** (k - 1)) * resid - ((k - 1) / d_b**k) * kron(
            marg, np.eye(d_b, dtype=complex)
        )
        x = x + symmetrize(kron(lam, eye_rest), d_a, d_b, k)
    raise ArithmeticError("affine projection did not reach its joint residual")


def check_k_extendible(
    prob: ExtensionProblem,
    start: Optional[np.ndarray] = None,
) -> ExtendibilityVerdict:
    """Decide k-extendibility by Dykstra-corrected alternating projections.

    Feasible when the gap between the PSD iterate and the affine iterate falls
    below tol; the affine iterate is then a certificate satisfying all three
    extension conditions within tol. InfeasibleSignal (heuristic) when the gap
    stabilizes above 10*tol across 200 consecutive iterations. Inconclusive
    when the iteration budget runs out first.
    """
    rho = prob.rho
    d_a, d_b = rho.dims
    k = prob.k
    if start is not None:
        x = affine_project(start, rho, k)
    else:
        marginal = partial_trace(rho.matrix, rho.dims, keep=[1])
        guess = rho.matrix
        for _ in range(k - 1):
            guess = kron(guess, marginal)
        x = affine_project(guess, rho, k)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    gap = float("inf")
    window: deque[float] = deque(maxlen=200)
    for it in range(1, prob.max_iter + 1):
        y = linalg.psd_project(hermitize(x + p), method="lapack")
        p = x + p - y
        x = affine_project(y + q, rho, k)
        q = y + q - x
        gap = frobenius(y - x)
        if gap <= prob.tol:
            return ExtendibilityVerdict(VerdictStatus.FEASIBLE, x, gap, it)
        window.append(gap)
        if (
            len(window) == window.maxlen
            and min(window) > 10.0 * prob.tol
            and window[0] - gap <= 1e-4 * gap
        ):
            return ExtendibilityVerdict(VerdictStatus.INFEASIBLE_SIGNAL, None, gap, it)
    return ExtendibilityVerdict(VerdictStatus.INCONCLUSIVE, None, gap, prob.max_iter)


def certificate_defects(cert: np.ndarray, rho: DensityMatrix, k: int) -> dict[str, float]:
    """Independently measurable violations of the three extension conditions."""
    d_a, d_b = rho.dims
    dims_ext = (d_a,) + (d_b,) * k
    eigs = np.linalg.eigvalsh(hermitize(cert))
    reduction = partial_trace(cert, dims_ext, keep=(0, 1))
    return {
        "psd": max(0.0, -float(eigs[0])),
        "symmetry": symmetry_defect(cert, d_a, d_b, k),
        "reduction": float(np.max(np.abs(reduction - rho.matrix))),
        "trace": abs(complex(np.trace(cert)) - 1.0),
    }


def threshold_bisect(
    family: Callable[[float], DensityMatrix],
    k: int,
    lo: float,
    hi: float,
    *,
    xtol: float = 0.005,
    tol: float = 1e-7,
    max_iter: int = 50000,
) -> float:
    """Locate the extendibility boundary of a monotone one-parameter family.

    family(lo) must be Feasible and family(hi) InfeasibleSignal; the returned
    parameter is the interval midpoint once the bracket has width <= 2*xtol.
    An Inconclusive midpoint is treated as not-confirmed-feasible, which can
    only bias the boundary toward the feasible side; for the sigma choices
    built on these thresholds that is the sound direction.
    """
    v_lo = check_k_extendible(ExtensionProblem(family(lo), k, tol=tol, max_iter=max_iter))
    if v_lo.status is not VerdictStatus.FEASIBLE:
        raise ValueError(f"family({lo}) is not Feasible (got {v_lo.status.value})")
    v_hi = check_k_extendible(ExtensionProblem(family(hi), k, tol=tol, max_iter=max_iter))
    if v_hi.status is not VerdictStatus.INFEASIBLE_SIGNAL:
        raise ValueError(f"family({hi}) is not InfeasibleSignal (got {v_hi.status.value})")
    warm = v_lo.certificate
    while abs(hi - lo) > 2.0 * xtol:
        mid = 0.5 * (lo + hi)
        verdict = check_k_extendible(
            ExtensionProblem(family(mid), k, tol=tol, max_iter=max_iter), start=warm
        )
        if verdict.status is VerdictStatus.FEASIBLE:
            lo = mid
            warm = verdict.certificate
        else:
            hi = mid
    return 0.5 * (lo + hi)


def erasure_certificate(k: int) -> np.ndarray:
    """Constructive k-extension of the half-erased maximally entangled family.

    Places the entangled pair on (A, B_i) and the erasure flag on every other
    B factor, uniformly over i. The reduction onto (A, B_1) is the family
    state with erased weight 1 - 1/k. All three extension conditions are
    verified before returning.
    """
    if k < 2:
        raise ValueError("extension order must be >= 2")
    if 2 * 3**k > MAX_EXTENSION_DIM:
        raise ValueError(f"certificate dimension {2 * 3 ** k} exceeds {MAX_EXTENSION_DIM}")
    phi_emb = erasure_family(0.0).matrix  # entangled pair on dims (2, 3)
    flag = np.zeros((3, 3), dtype=complex)
    flag[2, 2] = 1.0
    flags = np.eye(1, dtype=complex)
    for _ in range(k - 1):
        flags = kron(flags, flag)
    base = kron(phi_emb, flags)  # pair on (A, B_1), flags elsewhere
    acc = base.copy()
    for i in range(1, k):
        swap = list(range(k))
        swap[0], swap[i] = swap[i], swap[0]
        src = _conj_indices(2, 3, k, tuple(swap))
        acc += base[np.ix_(src, src)]
    cert = acc / k

    target = erasure_family(1.0 - 1.0 / k)
    defects = certificate_defects(cert, target, k)
    if max(defects.values()) > 1e-10:
        raise ArithmeticError(f"certificate construction violated its contract: {defects}")
    return cert


def twirl_uu(rho: DensityMatrix) -> DensityMatrix:
    """Project a state on (d, d) onto the span of the maximally entangled projector and identity.

    This is the closed form of averaging over conjugations by U (x) conj(U):
    the output is the isotropic state whose entangled-projector overlap
    matches the input.
    """
    if len(rho.dims) != 2 or rho.dims[0] != rho.dims[1]:
        raise ValueError(f"twirl requires a square bipartition, got dims {rho.dims}")
    d = rho.dims[0]
    phi = max_entangled(d).matrix
    overlap = float(np.real(np.trace(phi @ rho.matrix)))
    overlap = min(max(overlap, 0.0), 1.0)
    return isotropic(overlap, d)
