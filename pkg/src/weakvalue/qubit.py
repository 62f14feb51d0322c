"""Single-qubit states, Pauli operators and closed-form 2x2 Hermitian algebra.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex128``. Bloch components use the Pauli convention (eigenvalues
+1/-1), so every pure state has a unit Bloch vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
DEGENERACY_TOL = 1e-12
ZERO_PROB = 1e-15
# amplitudes below this are treated as zero when fixing the global phase
_PHASE_CUTOFF = 1e-14

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.flags.writeable = False


class NonHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""


def as_matrix(a) -> np.ndarray:
    """Validate and convert ``a`` into a finite 2x2 complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def _canonical_phase(up: complex, down: complex) -> tuple[complex, complex]:
    up_leads = abs(up) > _PHASE_CUTOFF
    lead = up if up_leads else down
    if abs(lead) == 0.0:
        return up, down
    phase = lead / abs(lead)
    up, down = up / phase, down / phase
    # the leading amplitude is real by construction; drop rounding residue
    if up_leads:
        up = complex(up.real, 0.0)
    else:
        down = complex(down.real, 0.0)
    return up, down


@dataclass(frozen=True)
class PureState:
    """Normalized qubit ket ``up|0> + down|1>`` in canonical global phase.

    The first amplitude with non-negligible modulus is made real and
    non-negative, so two kets describing the same physical state compare
    equal up to rounding.
    """

    up: complex
    down: complex

    def __post_init__(self):
        up, down = complex(self.up), complex(self.down)
        if not (np.isfinite(up) and np.isfinite(down)):
            raise ValueError("amplitudes must be finite")
        norm = abs(up) ** 2 + abs(down) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm!r})")
        up, down = _canonical_phase(up, down)
        object.__setattr__(self, "up", up)
        object.__setattr__(self, "down", down)

    @classmethod
    def from_vector(cls, v, normalize: bool = True) -> "PureState":
        v = np.asarray(v, dtype=complex).reshape(2)
        if normalize:
            n = np.linalg.norm(v)
            if n == 0.0:
                raise ValueError("cannot normalize the zero vector")
            v = v / n
        return cls(v[0], v[1])

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.up, self.down], dtype=complex)

    def projector(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, np.conj(v))

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.projector())

    def overlap(self, other: "PureState") -> complex:
        """Inner product ``<self|other>``."""
        return complex(np.vdot(self.vector, other.vector))

    def isclose(self, other: "PureState", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.vector, other.vector, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite 2x2 matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix).copy()
        if np.max(np.abs(m - adjoint(m))) > NORM_TOL:
            raise NonHermitianError("density matrix must be Hermitian")
        if abs(np.trace(m) - 1.0) > NORM_TOL:
            raise ValueError("density matrix must have unit trace")
        if np.min(np.linalg.eigvalsh(m)) < -NORM_TOL:
            raise ValueError("density matrix must be positive semidefinite")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "DensityMatrix":
        return cls((IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z) / 2)


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(IDENTITY / 2)


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


UP = PureState(1.0, 0.0)
DOWN = PureState(0.0, 1.0)
PLUS = PureState(1 / math.sqrt(2), 1 / math.sqrt(2))
MINUS = PureState(1 / math.sqrt(2), -1 / math.sqrt(2))


def make_tilted_state(alpha: float) -> PureState:
    """Return ``cos(alpha/2)|up> + sin(alpha/2)|down>`` (alpha in radians)."""
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return PureState(math.cos(alpha / 2), math.sin(alpha / 2))


def bloch_vector(state: Union[PureState, DensityMatrix]) -> BlochVector:
    """Pauli expectation values ``(<sx>, <sy>, <sz>)`` of a state."""
    if isinstance(state, PureState):
        u, d = state.up, state.down
        cross = np.conj(u) * d
        return BlochVector(
            float(2 * cross.real),
            float(2 * cross.imag),
            float(abs(u) ** 2 - abs(d) ** 2),
        )
    rho = state.matrix
    return BlochVector(
        float(2 * rho[0, 1].real),
        float(-2 * rho[0, 1].imag),
        float((rho[0, 0] - rho[1, 1]).real),
    )


class Eigensystem(NamedTuple):
    m1: float
    m2: float
    v1: PureState
    v2: PureState


def _orthogonal(v: PureState) -> PureState:
    return PureState(-np.conj(v.down), np.conj(v.up))


def eig_hermitian2(m) -> Eigensystem:
    """Closed-form eigen-decomposition of a Hermitian 2x2 matrix.

    Eigenvalues come back in descending order with eigenvectors in
    canonical phase. When the two eigenvalues agree within
    ``DEGENERACY_TOL`` the computational basis is returned.

    Raises
    ------
    NonHermitianError
        If ``m`` deviates from its adjoint by more than ``HERMITIAN_TOL``.
    """
    m = as_matrix(m)
    if np.max(np.abs(m - adjoint(m))) > HERMITIAN_TOL:
        raise NonHermitianError("eig_hermitian2 requires a Hermitian matrix")
    a, d = m[0, 0].real, m[1, 1].real
    b = 0.5 * (m[0, 1] + np.conj(m[1, 0]))
    half_trace = 0.5 * float(a + d)
    half_gap = math.hypot(0.5 * float(a - d), abs(b))
    m1, m2 = half_trace + half_gap, half_trace - half_gap
    if 2 * half_gap <= DEGENERACY_TOL:
        return Eigensystem(m1, m2, UP, DOWN)
    # two candidate null vectors of (M - m1); keep the larger for conditioning
    c1 = np.array([b, m1 - a])
    c2 = np.array([m1 - d, np.conj(b)])
    v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
    v1 = PureState.from_vector(v)
    return Eigensystem(m1, m2, v1, _orthogonal(v1))


class KrausResult(NamedTuple):
    prob: float
    post: PureState | None


def apply_kraus(state: PureState, op) -> KrausResult:
    """Apply one Kraus operator: outcome probability and renormalized post-state.

    ``post`` is ``None`` when the probability is at most ``ZERO_PROB``.
    """
    mat = getattr(op, "matrix", op)
    out = np.asarray(mat) @ state.vector
    prob = float(np.vdot(out, out).real)
    if prob <= ZERO_PROB:
        return KrausResult(prob, None)
    return KrausResult(prob, PureState.from_vector(out / math.sqrt(prob), normalize=True))
