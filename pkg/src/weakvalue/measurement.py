"""Measurement operators for the weak-x / strong-z experiment.

A weak x-basis measurement is described by a family of outcomes ``k``,
each with a calibration weight ``P_k`` (its probability for the maximally
mixed state) and a signed fidelity ``F_k`` (positive favours ``|+>``).
Each weak outcome is followed by a projective z measurement with outcome
``l`` in ``{1, 2}`` (``1`` = up, ``2`` = down).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .qubit import (
    IDENTITY,
    PureState,
    adjoint,
    eig_hermitian2,
)

F_CAP = 0.999999
SUPPORT_SIGMAS = 8
MODEL_TOL = 1e-12


class DomainError(ValueError):
    """A parameter lies outside the domain of a model constructor."""


class WeakOutcome(NamedTuple):
    k: int
    P: float
    F: float


@dataclass(frozen=True, eq=False)
class WeakModel:
    """Discrete outcome family of a weak x-basis measurement.

    Stored as parallel read-only arrays ``k``, ``p``, ``f``. The model must be
    normalized, symmetric under ``k -> -k`` (``P`` even, ``F`` odd) and have
    ``|F| < 1``; pass ``strict=False`` to skip those checks, e.g. to build a
    deliberately broken model for diagnostics.
    """

    k: np.ndarray
    p: np.ndarray
    f: np.ndarray
    f_avg: float = math.nan
    k_rms: float = math.nan
    strict: bool = field(default=True, repr=False)

    def __post_init__(self):
        k = np.array(self.k, dtype=np.int64).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        f = np.array(self.f, dtype=float).reshape(-1)
        if not (len(k) == len(p) == len(f)) or len(k) == 0:
            raise DomainError("k, p and f must be non-empty and of equal length")
        order = np.argsort(k, kind="stable")
        k, p, f = k[order], p[order], f[order]
        if np.any(np.diff(k) == 0):
            raise DomainError("outcome indices must be unique")
        if self.strict:
            _check_model(k, p, f)
        for a in (k, p, f):
            a.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "_index", {int(v): i for i, v in enumerate(k)})

    def __len__(self) -> int:
        return len(self.k)

    @property
    def outcomes(self) -> list[WeakOutcome]:
        return [WeakOutcome(int(k), float(p), float(f)) for k, p, f in zip(self.k, self.p, self.f)]

    def index(self, k: int) -> int:
        try:
            return self._index[int(k)]
        except KeyError:
            raise DomainError(f"outcome k={k} is outside the model support") from None

    def outcome(self, k: int) -> WeakOutcome:
        i = self.index(k)
        return WeakOutcome(int(self.k[i]), float(self.p[i]), float(self.f[i]))


def _check_model(k, p, f):
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise DomainError("outcome weights must be positive and finite")
    if np.any(np.abs(f) >= 1) or not np.all(np.isfinite(f)):
        raise DomainError("outcome fidelities must satisfy |F| < 1")
    if abs(p.sum() - 1.0) > MODEL_TOL:
        raise DomainError(f"outcome weights sum to {p.sum()!r}, not 1")
    if abs(np.dot(p, f)) > MODEL_TOL:
        raise DomainError("sum of P*F must vanish for a complete measurement")
    lookup = {int(kk): i for i, kk in enumerate(k)}
    for i, kk in enumerate(k):
        j = lookup.get(-int(kk))
        if j is None or p[j] != p[i] or f[j] != -f[i]:
            raise DomainError(f"model is not symmetric under k -> -k at k={kk}")


def gaussian_model(f_avg: float, k_rms: float) -> WeakModel:
    """Gaussian pointer model with fidelity linear in ``k``.

    ``P_k ~ exp(-k^2 / (2 k_rms^2))`` and ``F_k = sqrt(pi/2) f_avg k / k_rms``.
    The support is cut at ``|k| <= min(ceil(8 k_rms), K_F)`` where ``K_F`` is
    the last index with ``|F| <= F_CAP``, and the weights are renormalized.
    """
    if not (math.isfinite(f_avg) and 0 < f_avg < 0.5):
        raise DomainError(f"f_avg must lie in (0, 0.5), got {f_avg!r}")
    if not (math.isfinite(k_rms) and k_rms >= 10):
        raise DomainError(f"k_rms must be >= 10, got {k_rms!r}")
    slope = math.sqrt(math.pi / 2) * f_avg / k_rms
    k_f = math.floor(F_CAP / slope)
    while (k_f + 1) * slope <= F_CAP:
        k_f += 1
    while k_f * slope > F_CAP:
        k_f -= 1
    kmax = min(math.ceil(SUPPORT_SIGMAS * k_rms), k_f)
    half = np.arange(1, kmax + 1)
    w_half = np.exp(-(half.astype(float) ** 2) / (2 * k_rms**2))
    # build from the positive half so P_{-k} == P_k and F_{-k} == -F_k bit-for-bit
    norm = 1.0 + 2.0 * w_half[::-1].sum()
    p_half = w_half / norm
    f_half = slope * half
    k = np.concatenate([-half[::-1], [0], half])
    p = np.concatenate([p_half[::-1], [1.0 / norm], p_half])
    f = np.concatenate([-f_half[::-1], [0.0], f_half])
    return WeakModel(k, p, f, f_avg=float(f_avg), k_rms=float(k_rms))


def uniform_model(f: float) -> WeakModel:
    """Two equally likely outcomes ``k = -1, +1`` with fidelities ``-f, +f``."""
    if not (math.isfinite(f) and 0 <= f < 1):
        raise DomainError(f"uniform fidelity must lie in [0, 1), got {f!r}")
    return WeakModel([-1, 1], [0.5, 0.5], [-f, f], f_avg=float(f))


def average_fidelity(model: WeakModel) -> float:
    """Outcome-averaged fidelity ``sum_k P_k |F_k|``."""
    return float(np.dot(model.p, np.abs(model.f)))


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    matrix: np.ndarray
    label: tuple

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


def _weak_matrix(P, F):
    """Entries of the weak Kraus operator; vectorizes over ``P`` and ``F``."""
    a = np.sqrt(1 + F)
    b = np.sqrt(1 - F)
    s = np.sqrt(P) / 2
    diag = s * (a + b)
    off = s * (a - b)
    return np.stack([np.stack([diag, off], -1), np.stack([off, diag], -1)], -2)


def weak_operator(P: float, F: float) -> MeasurementOperator:
    """Kraus operator ``sqrt(P) (sqrt(1+F)|+><+| + sqrt(1-F)|-><-|)``."""
    if not (math.isfinite(P) and 0 < P <= 1):
        raise DomainError(f"P must lie in (0, 1], got {P!r}")
    if not (math.isfinite(F) and -1 <= F <= 1):
        raise DomainError(f"F must lie in [-1, 1], got {F!r}")
    return MeasurementOperator(_weak_matrix(P, F).astype(complex), ("x", None))


_PROJ = {
    1: np.array([[1, 0], [0, 0]], dtype=complex),
    2: np.array([[0, 0], [0, 1]], dtype=complex),
}


def strong_z_operators() -> tuple[MeasurementOperator, MeasurementOperator]:
    """Projectors onto ``|up>`` (l=1) and ``|down>`` (l=2)."""
    return (
        MeasurementOperator(_PROJ[1], ("z", 1)),
        MeasurementOperator(_PROJ[2], ("z", 2)),
    )


def _check_l(l: int) -> None:
    if l not in (1, 2):
        raise DomainError(f"strong outcome l must be 1 or 2, got {l!r}")


def weak_operators(model: WeakModel) -> np.ndarray:
    """All weak Kraus operators of ``model`` as an ``(n, 2, 2)`` array."""
    return _weak_matrix(model.p, model.f).astype(complex)


def total_operator(model: WeakModel, k: int, l: int) -> MeasurementOperator:
    """Combined operator: strong projector ``l`` applied after weak outcome ``k``."""
    _check_l(l)
    out = model.outcome(k)
    u_x = _weak_matrix(out.P, out.F).astype(complex)
    return MeasurementOperator(_PROJ[l] @ u_x, ("xz", out.k, l))


def povm_matrices(model: WeakModel) -> np.ndarray:
    """Numeric ``U_total^dagger U_total`` for every outcome pair.

    Returns an array of shape ``(2, n, 2, 2)``; axis 0 is ``l - 1`` and axis 1
    follows ``model.k``.
    """
    u_x = weak_operators(model)
    out = np.empty((2, len(model), 2, 2), dtype=complex)
    for l in (1, 2):
        tot = _PROJ[l] @ u_x
        out[l - 1] = np.conj(np.swapaxes(tot, -1, -2)) @ tot
    return out


def basis_angle(F) -> np.ndarray:
    """Measurement basis tilt ``theta`` with ``sin(theta) = F``."""
    return np.arcsin(F)


def povm_closed_form(P, F, l: int) -> np.ndarray:
    """Rank-one closed form ``P |psi_l><psi_l|`` of a combined POVM element.

    ``psi_1 = (cos(theta/2), sin(theta/2))``, ``psi_2 = (sin(theta/2),
    cos(theta/2))`` with ``sin(theta) = F``. Vectorizes over ``P`` and ``F``.
    """
    _check_l(l)
    P = np.asarray(P, dtype=float)
    F = np.asarray(F, dtype=float)
    root = np.sqrt(1 - F**2)
    big = (1 + root) / 2  # cos^2(theta/2)
    small = (1 - root) / 2  # sin^2(theta/2)
    off = F / 2  # sin(theta/2) cos(theta/2)
    if l == 1:
        rows = [[big, off], [off, small]]
    else:
        rows = [[small, off], [off, big]]
    m = np.stack([np.stack(r, -1) for r in rows], -2)
    return (P[..., None, None] * m).astype(complex)


def basis_state(F: float, l: int) -> PureState:
    """Eigenvector of the combined POVM element for outcome pair ``(k, l)``."""
    _check_l(l)
    half = basis_angle(F) / 2
    c, s = math.cos(half), math.sin(half)
    return PureState(c, s) if l == 1 else PureState(s, c)


@dataclass(frozen=True, eq=False)
class PovmElement:
    M: np.ndarray
    m1: float
    m2: float
    psi: PureState
    psi_bar: PureState
    theta: float
    k: int
    l: int


def povm_element(model: WeakModel, k: int, l: int) -> PovmElement:
    """Combined POVM element ``M_{k,l}`` with its eigenbasis and basis angle."""
    tot = total_operator(model, k, l).matrix
    M = adjoint(tot) @ tot
    eig = eig_hermitian2(M)
    out = model.outcome(k)
    M.flags.writeable = False
    return PovmElement(
        M=M,
        m1=eig.m1,
        m2=eig.m2,
        psi=eig.v1,
        psi_bar=eig.v2,
        theta=float(basis_angle(out.F)),
        k=out.k,
        l=l,
    )


def completeness_defect(model: WeakModel) -> float:
    """Largest entrywise deviation of ``sum_{k,l} M_{k,l}`` from the identity."""
    total = povm_matrices(model).sum(axis=(0, 1))
    return float(np.max(np.abs(total - IDENTITY)))


@dataclass(frozen=True, eq=False)
class RotatedDetector:
    """Strong two-reading detector whose axis is tilted by ``eta`` from z.

    Reading 1 projects onto ``cos(eta/2)|up> + sin(eta/2)|down>``, reading 0
    onto the orthogonal state.
    """

    eta: float

    @property
    def axis(self) -> PureState:
        return PureState(math.cos(self.eta / 2), math.sin(self.eta / 2))

    @property
    def anti_axis(self) -> PureState:
        return PureState(math.sin(self.eta / 2), -math.cos(self.eta / 2))

    def projector(self, reading: int) -> MeasurementOperator:
        if reading == 1:
            return MeasurementOperator(self.axis.projector(), ("detector", 1))
        if reading == 0:
            return MeasurementOperator(self.anti_axis.projector(), ("detector", 0))
        raise DomainError(f"detector reading must be 0 or 1, got {reading!r}")

    def prob_one(self, state: PureState) -> float:
        """Born probability of reading 1."""
        p = abs(self.axis.overlap(state)) ** 2
        return min(1.0, max(0.0, p))


def rotated_detector(eta: float) -> RotatedDetector:
    """Detector tilted by ``eta`` radians in the x-z plane."""
    if not math.isfinite(eta):
        raise DomainError("eta must be finite")
    return RotatedDetector(float(eta))
