"""Exact outcome distributions and the statistics computed from them.

Everything here works from either an exact :class:`JointTable` (the full
Born distribution over the truncated outcome support) or from simulated
records; the exact path is the ground truth every Monte-Carlo estimate is
compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy import optimize, stats

from .measurement import DomainError, WeakModel, average_fidelity, povm_matrices
from .qubit import SIGMA_X, SIGMA_Z, DensityMatrix, PureState, bloch_vector
from .simulator import RecordBatch, RunRecord


class NoPostSelectedEvents(ValueError):
    """The requested post-selection kept no events."""


@dataclass(frozen=True, eq=False)
class JointTable:
    """Exact probabilities ``p(k, l)``; ``prob[:, 0]`` is l=1, ``prob[:, 1]`` is l=2."""

    k: np.ndarray
    prob: np.ndarray

    @property
    def k_marginal(self) -> np.ndarray:
        return self.prob.sum(axis=1)

    @property
    def l_marginal(self) -> np.ndarray:
        return self.prob.sum(axis=0)

    def p(self, k: int, l: int) -> float:
        i = np.searchsorted(self.k, k)
        if i >= len(self.k) or self.k[i] != k:
            return 0.0
        return float(self.prob[i, l - 1])

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(k), l): float(self.prob[i, l - 1]) for i, k in enumerate(self.k) for l in (1, 2)}


def _rho(state: Union[PureState, DensityMatrix]) -> np.ndarray:
    return state.projector() if isinstance(state, PureState) else state.matrix


def exact_joint_distribution(initial: Union[PureState, DensityMatrix], model: WeakModel) -> JointTable:
    """Born probabilities ``tr(M_{k,l} rho)`` over the whole outcome support."""
    M = povm_matrices(model)
    p = np.einsum("lnij,ji->nl", M, _rho(initial)).real
    p = np.maximum(p, 0.0)
    p.flags.writeable = False
    return JointTable(model.k, p)


def weak_marginal(initial: Union[PureState, DensityMatrix], model: WeakModel) -> np.ndarray:
    """Probability of each weak outcome, ``P_k (1 + F_k x)``."""
    x = bloch_vector(initial).x
    return model.p * (1 + model.f * x)


@dataclass(frozen=True)
class PostSelectionStats:
    """Mean of ``k`` among events with strong outcome ``l_selected``.

    In exact mode ``n_selected`` is the selected probability mass and
    ``stderr_k`` is zero.
    """

    l_selected: int
    n_selected: float
    mean_k: float
    sd_k: float
    stderr_k: float
    exact: bool


def _as_batch(records) -> RecordBatch:
    if isinstance(records, RecordBatch):
        return records
    return RecordBatch.from_records(records)


def post_selected_mean(data: Union[JointTable, RecordBatch, Iterable[RunRecord]], l: int) -> PostSelectionStats:
    """Mean weak outcome conditioned on the strong outcome ``l``."""
    if l not in (1, 2):
        raise DomainError(f"l must be 1 or 2, got {l!r}")
    if isinstance(data, JointTable):
        w = data.prob[:, l - 1]
        mass = float(w.sum())
        if mass <= 1e-300:
            raise NoPostSelectedEvents(f"no post-selected events for l={l}")
        k = data.k.astype(float)
        mean = float(np.dot(w, k) / mass)
        sd = math.sqrt(float(np.dot(w, (k - mean) ** 2) / mass))
        return PostSelectionStats(l, mass, mean, sd, 0.0, True)
    batch = _as_batch(data)
    sel = batch.k[batch.l == l].astype(float)
    n = len(sel)
    if n == 0:
        raise NoPostSelectedEvents(f"no post-selected events for l={l}")
    sd = float(sel.std(ddof=1)) if n > 1 else math.nan
    return PostSelectionStats(l, n, float(sel.mean()), sd, sd / math.sqrt(n), False)


def mean_k_for_state(state: Union[PureState, DensityMatrix], model: WeakModel) -> float:
    """Ensemble mean of ``k`` for a state, ignoring the strong outcome."""
    x = bloch_vector(state).x
    return float(x * np.dot(model.k * model.p, model.f))


@dataclass(frozen=True)
class TradeoffReport:
    fx: float
    fz: float
    sum_sq: float


def fidelity_tradeoff(model: WeakModel) -> TradeoffReport:
    """x fidelity of the weak stage and residual z fidelity of the strong stage."""
    fx = average_fidelity(model)
    fz = float(np.dot(model.p, np.sqrt(1 - model.f**2)))
    return TradeoffReport(fx, fz, fx * fx + fz * fz)


def gaussian_fz_leading_order(f_avg: float) -> float:
    return 1 - math.pi * f_avg**2 / 4


def gaussian_sumsq_leading_order(f_avg: float) -> float:
    return 1 - (math.pi - 2) / 2 * f_avg**2


@dataclass(frozen=True, eq=False)
class TomographyResult:
    """Least-squares estimate of the x and z Bloch components.

    ``cov`` is the sandwich covariance of the estimate under multinomial
    sampling (zero for exact tables). Components listed in ``unidentified``
    are ``nan``; y is never identifiable in this setup.
    """

    x_hat: float
    z_hat: float
    cov: np.ndarray
    n_records: int | None
    degenerate: bool
    unidentified: tuple[str, ...] = ()
    y_status: str = "unidentifiable"

    @property
    def stderr_x(self) -> float:
        return math.sqrt(self.cov[0, 0])

    @property
    def stderr_z(self) -> float:
        return math.sqrt(self.cov[1, 1])


def _design(model: WeakModel):
    """Affine model ``p = c + A @ (x, z)`` flattened over (k, l), l fastest."""
    M = povm_matrices(model)
    c = 0.5 * np.einsum("lnii->nl", M).real
    ax = 0.5 * np.einsum("lnij,ji->nl", M, SIGMA_X).real
    az = 0.5 * np.einsum("lnij,ji->nl", M, SIGMA_Z).real
    return c.reshape(-1), np.stack([ax.reshape(-1), az.reshape(-1)], axis=1)


def empirical_frequencies(batch: RecordBatch, model: WeakModel) -> np.ndarray:
    """Counts of each ``(k, l)`` cell, shaped like ``JointTable.prob``."""
    idx = np.searchsorted(model.k, batch.k)
    bad = (idx >= len(model.k)) | (model.k[np.minimum(idx, len(model.k) - 1)] != batch.k)
    if np.any(bad) or np.any((batch.l != 1) & (batch.l != 2)):
        raise DomainError("records contain outcomes outside the model support")
    counts = np.zeros((len(model.k), 2), dtype=np.int64)
    np.add.at(counts, (idx, batch.l - 1), 1)
    return counts


def _project_to_disk(theta: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Closest point of the unit disk to ``theta`` in the metric ``H``.

    This is the constrained least-squares solution: on the boundary it is
    ``(H + mu I)^-1 H theta`` with ``mu >= 0`` chosen to give unit norm.
    """
    if np.linalg.norm(theta) <= 1:
        return theta
    rhs = H @ theta
    eye = np.eye(len(theta))

    def excess(mu):
        return np.linalg.norm(np.linalg.solve(H + mu * eye, rhs)) - 1

    hi = max(1.0, float(np.max(np.abs(H))))
    while excess(hi) > 0:
        hi *= 2
    mu = optimize.brentq(excess, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    out = np.linalg.solve(H + mu * eye, rhs)
    return out / max(1.0, np.linalg.norm(out))


def tomography(data: Union[JointTable, RecordBatch, Iterable[RunRecord]], model: WeakModel) -> TomographyResult:
    """Fit ``(x, z)`` to observed ``(k, l)`` frequencies by linear least squares.

    An estimate outside the unit disk is replaced by the constrained
    least-squares optimum on its boundary.
    Directions with no support in the design are reported in
    ``unidentified`` instead of being set to zero.
    """
    if isinstance(data, JointTable):
        if len(data.k) != len(model.k) or np.any(data.k != model.k):
            raise DomainError("table support does not match the model")
        freq = data.prob.reshape(-1)
        n = None
    else:
        counts = empirical_frequencies(_as_batch(data), model)
        n = int(counts.sum())
        if n == 0:
            raise DomainError("no records to fit")
        freq = (counts / n).reshape(-1)
    c, A = _design(model)
    col_norm = np.linalg.norm(A, axis=0)
    scale = max(col_norm.max(), 1e-300)
    usable = col_norm > 1e-12 * scale
    names = ("x", "z")
    unidentified = tuple(nm for nm, ok in zip(names, usable) if not ok)

    theta = np.full(2, math.nan)
    cov = np.full((2, 2), math.nan)
    if usable.any():
        Au = A[:, usable]
        H = Au.T @ Au
        theta_u = np.linalg.solve(H, Au.T @ (freq - c))
        theta[usable] = _project_to_disk(theta_u, H)
        cov_u = np.zeros((len(theta_u), len(theta_u)))
        if n is not None:
            p = np.clip(c + Au @ theta[usable], 0, None)
            p = p / p.sum()
            g = Au.T @ p
            meat = ((Au.T * p) @ Au - np.outer(g, g)) / n
            Hinv = np.linalg.inv(H)
            cov_u = Hinv @ meat @ Hinv
        cov[np.ix_(usable, usable)] = cov_u
    l_mass = freq.reshape(-1, 2).sum(axis=0)
    degenerate = bool(unidentified) or bool(np.any(l_mass == 0))
    return TomographyResult(float(theta[0]), float(theta[1]), cov, n, degenerate, unidentified)


def naive_spin_inference(prob_one: float) -> float:
    """Spin value a user infers from a detector calibrated at 50.25%/49.75%.

    No clamping: readings outside the calibration range map to values far
    outside [-1/2, 1/2].
    """
    if not (0 <= prob_one <= 1):
        raise DomainError(f"prob_one must lie in [0, 1], got {prob_one!r}")
    return (prob_one - 0.5) * 200


def pooled_chisquare(counts: np.ndarray, expected_prob: np.ndarray, min_expected: float = 5.0):
    """Chi-square goodness of fit after pooling adjacent sparse cells.

    Cells are merged left to right until each pool expects at least
    ``min_expected`` events; a short trailing pool joins its neighbour.
    Returns ``(statistic, dof, pvalue)``.
    """
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    exp = np.asarray(expected_prob, dtype=float) * n / np.sum(expected_prob)
    obs_pools, exp_pools = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(counts, exp):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_pools.append(o_acc)
            exp_pools.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_pools:
            obs_pools[-1] += o_acc
            exp_pools[-1] += e_acc
        else:
            obs_pools.append(o_acc)
            exp_pools.append(e_acc)
    res = stats.chisquare(obs_pools, exp_pools)
    return float(res.statistic), len(obs_pools) - 1, float(res.pvalue)


def cell_zscores(batch: RecordBatch, table: JointTable, min_expected: float = 100.0) -> np.ndarray:
    """Binomial z-scores of each ``(k, l)`` cell with enough expected events."""
    model_k = table.k
    idx = np.searchsorted(model_k, batch.k)
    counts = np.zeros(table.prob.shape, dtype=np.int64)
    np.add.at(counts, (idx, batch.l - 1), 1)
    n = len(batch)
    exp = table.prob * n
    keep = exp >= min_expected
    p = table.prob[keep]
    return (counts[keep] - exp[keep]) / np.sqrt(n * p * (1 - p))
