"""Divergence formulas, degrees of freedom and Stein's unbiased risk estimate.

All divergence functions take the singular values ``d`` (non-increasing)
and the matrix dimensions ``p >= q``. They refuse degenerate spectra with
:class:`DegenerateSpectrum` instead of returning a meaningless number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSpectrum,
    InvalidInput,
    LowRankSureError,
    ThresholdAtSingularValue,
    ZeroSingularValueWithRectangular,
)
from .estimators import (
    Custom,
    HardThreshold,
    ReducedRank,
    SoftThreshold,
    SpectralEstimator,
    apply_estimator,
    validate_stein_conditions,
)
from .matrix import DEFAULT_GAP_TOL, MatrixObs, SvdFactors, check_distinct, frobenius_norm_sq, svd_decompose


def _prepare(d, p, q, gap_tol):
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.size != q:
        raise InvalidInput(f"expected {q} singular values, got shape {d.shape}")
    if p < q or q < 1:
        raise InvalidInput(f"need p >= q >= 1, got p={p}, q={q}")
    if np.any(d < 0) or np.any(np.diff(d) > 0):
        raise InvalidInput("singular values must be non-negative and non-increasing")
    rep = check_distinct(d, gap_tol)
    if not rep.distinct:
        raise DegenerateSpectrum(rep.min_relative_gap, gap_tol)
    return d


def _inverse_gap_sums(d):
    """``s_k = sum_{l != k} 1 / (d_k^2 - d_l^2)`` for a distinct spectrum."""
    d2 = d * d
    diff = d2[:, None] - d2[None, :]
    np.fill_diagonal(diff, np.inf)
    return (1.0 / diff).sum(axis=1)


def divergence_reduced_rank(d, p: int, q: int, r: int, gap_tol: float = DEFAULT_GAP_TOL) -> float:
    """Divergence of the rank-``r`` truncation.

    ``p r + sum_{k <= r} sum_{l > r} (d_k^2 + d_l^2) / (d_k^2 - d_l^2)``.
    The boundary ranks are fixed by convention: 0 for r = 0 and ``p q`` for
    r = q (the zero map and the identity).
    """
    if isinstance(r, bool) or int(r) != r or not 0 <= r <= q:
        raise InvalidInput(f"rank must be an integer in [0, {q}], got {r!r}")
    r = int(r)
    if r == 0:
        return 0.0
    if r == q:
        return float(p * q)
    d = _prepare(d, p, q, gap_tol)
    top = d[:r, None] ** 2
    bottom = d[None, r:] ** 2
    return float(p * r + np.sum((top + bottom) / (top - bottom)))


def divergence_hard(d, p: int, q: int, lam: float, gap_tol: float = DEFAULT_GAP_TOL) -> float:
    """Divergence of singular value hard thresholding, away from its jumps.

    ``(p - q + 1) #{d_k >= lam} + 2 sum_{k != l} d_k^2 1(d_k >= lam) / (d_k^2 - d_l^2)``.
    This is what the pointwise formula gives; it is not an unbiased
    degrees-of-freedom estimate for this estimator.
    """
    d = _prepare(d, p, q, gap_tol)
    lam = float(lam)
    tol = gap_tol * max(d[0], 1.0)
    near = np.flatnonzero(np.abs(d - lam) <= tol)
    if near.size:
        k = int(near[0])
        raise ThresholdAtSingularValue(lam, k, float(d[k]))
    keep = d >= lam
    s = _inverse_gap_sums(d)
    return float((p - q + 1) * np.count_nonzero(keep) + 2.0 * np.sum(np.where(keep, d * d * s, 0.0)))


def divergence_soft(d, p: int, q: int, lam: float, gap_tol: float = DEFAULT_GAP_TOL) -> float:
    """Divergence of singular value soft thresholding.

    ``(p - q) sum_k (1 - lam/d_k)_+ + #{d_k >= lam} + 2 sum_{k != l} d_k (d_k - lam)_+ / (d_k^2 - d_l^2)``.
    A zero singular value contributes ``(1 - lam/0)_+ = 1`` when lam = 0 and
    0 otherwise.
    """
    d = _prepare(d, p, q, gap_tol)
    lam = float(lam)
    shrunk = np.maximum(d - lam, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d > 0, shrunk / np.where(d > 0, d, 1.0), 1.0 if lam == 0 else 0.0)
    s = _inverse_gap_sums(d)
    return float((p - q) * np.sum(ratio) + np.count_nonzero(d >= lam) + 2.0 * np.sum(d * shrunk * s))


def divergence_spectral_general(d, p: int, q: int, g, gp, gap_tol: float = DEFAULT_GAP_TOL) -> float:
    """Divergence of a general spectral-function estimator.

    ``g[k] = f_k(d_k)`` and ``gp[k] = f_k'(d_k)``. Returns
    ``(p - q) sum_k g_k / d_k + sum_k gp_k + 2 sum_{k != l} d_k g_k / (d_k^2 - d_l^2)``.

    With p > q and ``d_q = 0`` the ratio ``g_q / d_q`` is replaced by its
    limit ``gp_q`` provided ``g_q = 0``; otherwise the term is undefined and
    :class:`ZeroSingularValueWithRectangular` is raised.
    """
    d = _prepare(d, p, q, gap_tol)
    g = np.asarray(g, dtype=float)
    gp = np.asarray(gp, dtype=float)
    if g.shape != d.shape or gp.shape != d.shape:
        raise InvalidInput("g and gp must have one entry per singular value")
    ratio = np.zeros(q)
    pos = d > 0
    ratio[pos] = g[pos] / d[pos]
    if p > q and not pos.all():
        zero = ~pos
        if np.any(g[zero] != 0):
            raise ZeroSingularValueWithRectangular(
                "p > q with a zero singular value and f_q(0) != 0: g_q / d_q is undefined"
            )
        ratio[zero] = gp[zero]
    s = _inverse_gap_sums(d)
    return float((p - q) * np.sum(ratio) + np.sum(gp) + 2.0 * np.sum(d * g * s))


def divergence(f: SvdFactors, est: SpectralEstimator, p: int | None = None) -> float:
    """Dispatch to the divergence formula matching ``est``."""
    d, q = f.d, f.q
    p = f.p if p is None else p
    if isinstance(est, ReducedRank):
        return divergence_reduced_rank(d, p, q, est.r, f.gap_tol)
    if isinstance(est, HardThreshold):
        return divergence_hard(d, p, q, est.lam, f.gap_tol)
    if isinstance(est, SoftThreshold):
        return divergence_soft(d, p, q, est.lam, f.gap_tol)
    if isinstance(est, Custom):
        return divergence_spectral_general(d, p, q, est.values(d), est.derivatives(d), f.gap_tol)
    raise TypeError(f"not a spectral estimator: {est!r}")


@dataclass(frozen=True)
class RiskReport:
    """SURE and its ingredients for one estimator at one observation."""

    estimator: str
    divergence: float
    rss: float
    sure: float
    sigma2: float
    stein_valid: bool
    distinct: bool

    @classmethod
    def build(cls, estimator, divergence, rss, sigma2, p, q, stein_valid, distinct):
        sure = rss - sigma2 * p * q + 2.0 * sigma2 * divergence
        return cls(estimator, float(divergence), float(rss), float(sure), float(sigma2), bool(stein_valid), bool(distinct))

    @property
    def df(self) -> float:
        return self.divergence

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "rss": self.rss,
            "divergence": self.divergence,
            "df": self.divergence,
            "sure": self.sure,
            "stein_valid": self.stein_valid,
            "distinct": self.distinct,
        }


def _report(Y: MatrixObs, f: SvdFactors, est: SpectralEstimator) -> RiskReport:
    distinct = check_distinct(f).distinct
    mu_hat = apply_estimator(f, est)
    div = divergence(f, est)
    rss = frobenius_norm_sq(Y.entries - mu_hat)
    stein = validate_stein_conditions(est, d_max=max(float(f.d[0]), 1.0)).stein_valid
    return RiskReport.build(est.spec, div, rss, Y.sigma2, Y.p, Y.q, stein, distinct)


def sure_estimate(Y: MatrixObs, est: SpectralEstimator, gap_tol: float = DEFAULT_GAP_TOL) -> RiskReport:
    """``SURE = ||Y - mu_hat||_F^2 - sigma^2 p q + 2 sigma^2 div(mu_hat)``.

    Raises on degenerate spectra (and for hard thresholding, a threshold
    sitting on a singular value) rather than returning an invalid value.
    """
    return _report(Y, svd_decompose(Y, gap_tol), est)


@dataclass(frozen=True)
class PathEntry:
    estimator: SpectralEstimator
    report: RiskReport | None
    error: LowRankSureError | None = None

    @property
    def ok(self) -> bool:
        return self.report is not None


@dataclass(frozen=True)
class SurePath:
    """SURE over a grid of estimators, with the two argmin choices.

    ``best_valid`` is the argmin over entries whose estimator satisfies the
    Stein conditions; ``best_any`` ignores that flag. Either is None when no
    eligible entry exists. Exact ties resolve to the earliest grid index.
    """

    entries: list[PathEntry]
    best_valid: int | None
    best_any: int | None


def _argmin(entries, pred):
    best, best_val = None, np.inf
    for i, e in enumerate(entries):
        if e.ok and pred(e.report) and e.report.sure < best_val:
            best, best_val = i, e.report.sure
    return best


def sure_path(Y: MatrixObs, grid: Sequence[SpectralEstimator], gap_tol: float = DEFAULT_GAP_TOL) -> SurePath:
    """Evaluate SURE for every estimator in ``grid`` off a single SVD.

    Per-entry failures are stored on the entry instead of aborting the sweep.
    """
    if not grid:
        raise InvalidInput("grid must be non-empty")
    f = svd_decompose(Y, gap_tol)
    entries = []
    for est in grid:
        try:
            entries.append(PathEntry(est, _report(Y, f, est)))
        except LowRankSureError as exc:
            entries.append(PathEntry(est, None, exc))
    return SurePath(entries, _argmin(entries, lambda r: r.stein_valid), _argmin(entries, lambda r: True))
