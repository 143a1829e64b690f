"""Named bipartite states and qubit channels.

Constructors here produce validated density matrices on declared subsystem
dimensions. The erasure channel enlarges Bob's qubit to dimension 3, with the
third basis vector acting as the erasure flag, so its bipartite outputs live
on dims (2, 3).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .linalg import DEFAULT_TOL

# PSD validation by eigenvalue scan is skipped above this dimension; the
# cheap checks (Hermiticity, trace, dims) always run.
_PSD_CHECK_MAX_DIM = 256

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, PSD matrix with a declared tensor factorization."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        n = int(np.prod(dims))
        if any(d < 1 for d in dims):
            raise ValueError("subsystem dimensions must be >= 1")
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if linalg.hermiticity_defect(m) > DEFAULT_TOL.hermiticity * scale:
            raise ValueError("density matrix is not Hermitian")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > DEFAULT_TOL.trace:
            raise ValueError(f"trace {tr} is not 1 within {DEFAULT_TOL.trace}")
        if n <= _PSD_CHECK_MAX_DIM:
            lo = float(np.linalg.eigvalsh(linalg.hermitize(m))[0])
            if lo < -DEFAULT_TOL.psd:
                raise ValueError(f"minimum eigenvalue {lo:.3e} below -{DEFAULT_TOL.psd}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ChannelSpec:
    """A qubit channel family: depolarizing or erasure, with one probability parameter."""

    kind: str
    p: float

    def __post_init__(self):
        if self.kind not in ("depolarizing", "erasure"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"channel parameter {self.p} outside [0, 1]")


def max_entangled(m: int) -> DensityMatrix:
    """Maximally entangled state of Schmidt rank m on dims (m, m)."""
    if m < 1:
        raise ValueError("Schmidt rank must be >= 1")
    vec = np.zeros(m * m, dtype=complex)
    vec[:: m + 1] = 1.0 / np.sqrt(m)
    return DensityMatrix(np.outer(vec, vec.conj()), (m, m))


def _phi_projector(d: int) -> np.ndarray:
    return max_entangled(d).matrix


def isotropic(t: float, d: int) -> DensityMatrix:
    """Mixture t*Phi + (1-t)*(I - Phi)/(d^2 - 1) of the rank-d maximally entangled state."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"fidelity parameter {t} outside [0, 1]")
    if d < 2:
        raise ValueError("local dimension must be >= 2")
    phi = _phi_projector(d)
    rest = (np.eye(d * d, dtype=complex) - phi) / (d * d - 1)
    return DensityMatrix(t * phi + (1.0 - t) * rest, (d, d))


def depolarizing_kraus(p: float) -> list[np.ndarray]:
    """Kraus operators of the qubit depolarizing channel with parameter p."""
    return [
        np.sqrt(1.0 - p) * np.eye(2, dtype=complex),
        np.sqrt(p / 3.0) * PAULI_X,
        np.sqrt(p / 3.0) * PAULI_Y,
        np.sqrt(p / 3.0) * PAULI_Z,
    ]


def erasure_kraus(p: float) -> list[np.ndarray]:
    """Kraus operators of the qubit erasure channel; output dimension 3 (flag = basis vector 2)."""
    keep = np.zeros((3, 2), dtype=complex)
    keep[0, 0] = keep[1, 1] = np.sqrt(1.0 - p)
    e0 = np.zeros((3, 2), dtype=complex)
    e0[2, 0] = np.sqrt(p)
    e1 = np.zeros((3, 2), dtype=complex)
    e1[2, 1] = np.sqrt(p)
    return [keep, e0, e1]


def apply_channel_b(rho: DensityMatrix, kraus: Sequence[np.ndarray]) -> DensityMatrix:
    """Apply a channel given by Kraus operators to the second subsystem of a bipartite state."""
    if len(rho.dims) != 2:
        raise ValueError("apply_channel_b expects a bipartite state")
    d_a, d_b = rho.dims
    out_dim = kraus[0].shape[0]
    if any(k.shape != (out_dim, d_b) for k in kraus):
        raise ValueError("inconsistent Kraus operator shapes")
    ident = np.eye(d_a, dtype=complex)
    out = np.zeros((d_a * out_dim, d_a * out_dim), dtype=complex)
    for k in kraus:
        lifted = linalg.kron(ident, k)
        out += lifted @ rho.matrix @ lifted.conj().T
    return DensityMatrix(linalg.hermitize(out), (d_a, out_dim))


def depolarizing_choi(p: float) -> DensityMatrix:
    """Choi state of the qubit depolarizing channel: (id (x) D^p)(Phi_2)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing parameter {p} outside [0, 1]")
    return apply_channel_b(max_entangled(2), depolarizing_kraus(p))


def erasure_output(p: float) -> DensityMatrix:
    """(id (x) erasure_p)(Phi_2) on dims (2, 3)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"erasure probability {p} outside [0, 1]")
    return apply_channel_b(max_entangled(2), erasure_kraus(p))


def erasure_family(q: float) -> DensityMatrix:
    """(1-q)*Phi + q*(I_A/2 (x) |e><e|) on dims (2, 3); equals erasure_output(q).

    Built directly from the mixture rather than through the channel, so the
    two constructors cross-check each other.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"mixing weight {q} outside [0, 1]")
    embed = np.zeros((6, 4), dtype=complex)  # B qubit -> first two levels of the 3-dim B
    # basis map |a b> (b in 0..1) -> index 3a + b
    for a in range(2):
        for b in range(2):
            embed[3 * a + b, 2 * a + b] = 1.0
    phi = embed @ _phi_projector(2) @ embed.conj().T
    flag = np.zeros((3, 3), dtype=complex)
    flag[2, 2] = 1.0
    erased = linalg.kron(np.eye(2, dtype=complex) / 2, flag)
    return DensityMatrix((1.0 - q) * phi + q * erased, (2, 3))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Quantum fidelity (trace-norm of sqrt(rho) sqrt(sigma), squared)."""
    if rho.dims != sigma.dims:
        raise ValueError(f"dimension mismatch: {rho.dims} vs {sigma.dims}")
    w, v = linalg.eig_hermitian(rho.matrix)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sqrt_rho @ sigma.matrix @ sqrt_rho
    wi, _ = linalg.eig_hermitian(linalg.hermitize(inner))
    # eigenvalues at rounding-noise level would contribute O(1e-8) after the
    # square root; zero them instead
    wi = np.where(wi > 1e-14 * max(1.0, float(wi[-1])), wi, 0.0)
    val = float(np.sum(np.sqrt(wi)) ** 2)
    return min(max(val, 0.0), 1.0)


def tensor_power(rho: DensityMatrix, n: int) -> DensityMatrix:
    """n-fold tensor power; subsystem dims are repeated n times."""
    if n < 1:
        raise ValueError("tensor power requires n >= 1")
    out = rho.matrix
    for _ in range(n - 1):
        out = linalg.kron(out, rho.matrix)
    return DensityMatrix(out, rho.dims * n)


def parse_state_spec(spec: str) -> DensityMatrix:
    """Parse a named-state constructor string.

    Accepted forms: "max-entangled:m", "isotropic:t:d", "depolarizing-choi:p",
    "erasure:q". Raises ValueError on anything else.
    """
    parts = spec.split(":")
    name, args = parts[0], parts[1:]
    try:
        if name == "max-entangled" and len(args) == 1:
            return max_entangled(int(args[0]))
        if name == "isotropic" and len(args) == 2:
            return isotropic(float(args[0]), int(args[1]))
        if name == "depolarizing-choi" and len(args) == 1:
            return depolarizing_choi(float(args[0]))
        if name == "erasure" and len(args) == 1:
            return erasure_family(float(args[0]))
    except (ValueError, TypeError) as exc:
        raise ValueError(f"bad state spec {spec!r}: {exc}") from exc
    raise ValueError(f"unrecognized state spec {spec!r}")
