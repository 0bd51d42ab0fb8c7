"""Spectral-function estimators ``mu_hat = sum_k f_k(d_k) u_k v_k^T``.

Four variants are provided: :class:`ReducedRank`, :class:`HardThreshold`,
:class:`SoftThreshold` and :class:`Custom`. Each knows its spectral values
``f_k(d_k)`` and the derivatives ``f_k'(d_k)`` needed by the divergence
formulas in :mod:`lowrank_sure.risk`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InvalidInput, SpectralDomainError
from .matrix import DEFAULT_GAP_TOL, SvdFactors, svd_decompose

SpectralFunction = Callable[[float], float]


@dataclass(frozen=True)
class ReducedRank:
    """Keep the ``r`` largest singular values, zero the rest."""

    r: int

    def __post_init__(self):
        if isinstance(self.r, bool) or int(self.r) != self.r or self.r < 0:
            raise InvalidInput(f"rank must be a non-negative integer, got {self.r!r}")
        object.__setattr__(self, "r", int(self.r))

    def values(self, d):
        d = np.asarray(d, dtype=float)
        if self.r > d.size:
            raise InvalidInput(f"rank {self.r} exceeds q = {d.size}")
        g = d.copy()
        g[self.r:] = 0.0
        return g

    def derivatives(self, d):
        d = np.asarray(d, dtype=float)
        return (np.arange(d.size) < self.r).astype(float)

    @property
    def spec(self) -> str:
        return f"rr:{self.r}"


@dataclass(frozen=True)
class _Threshold:
    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not np.isfinite(lam) or lam < 0:
            raise InvalidInput(f"threshold must be a finite real >= 0, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class HardThreshold(_Threshold):
    """Keep singular values with ``d_k >= lam`` (ties kept)."""

    def values(self, d):
        d = np.asarray(d, dtype=float)
        return np.where(d >= self.lam, d, 0.0)

    def derivatives(self, d):
        return (np.asarray(d, dtype=float) >= self.lam).astype(float)

    @property
    def spec(self) -> str:
        return f"hard:{self.lam!r}"


@dataclass(frozen=True)
class SoftThreshold(_Threshold):
    """Shrink every singular value by ``lam`` and clip at zero."""

    def values(self, d):
        return np.maximum(np.asarray(d, dtype=float) - self.lam, 0.0)

    def derivatives(self, d):
        # The kink at d == lam gets the closed indicator, as in the divergence formula.
        return (np.asarray(d, dtype=float) >= self.lam).astype(float)

    @property
    def spec(self) -> str:
        return f"soft:{self.lam!r}"


@dataclass(frozen=True)
class Custom:
    """User-supplied spectral functions, one value and one derivative per index.

    Callables must be thread-safe and map scalars to scalars. Derivatives are
    taken as given; nothing is differentiated numerically.
    """

    fs: Sequence[SpectralFunction]
    dfs: Sequence[SpectralFunction]
    name: str = "custom"

    def __post_init__(self):
        fs, dfs = tuple(self.fs), tuple(self.dfs)
        if len(fs) != len(dfs) or not fs:
            raise InvalidInput(f"need matching non-empty fs/dfs, got {len(fs)} and {len(dfs)}")
        object.__setattr__(self, "fs", fs)
        object.__setattr__(self, "dfs", dfs)

    @classmethod
    def identical(cls, f: SpectralFunction, df: SpectralFunction, q: int, name="custom"):
        return cls([f] * q, [df] * q, name)

    def _check_q(self, d):
        if d.size != len(self.fs):
            raise InvalidInput(f"custom estimator has {len(self.fs)} functions but q = {d.size}")

    def values(self, d):
        d = np.asarray(d, dtype=float)
        self._check_q(d)
        g = np.array([float(f(x)) for f, x in zip(self.fs, d)])
        bad = ~np.isfinite(g) | (g < 0)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise SpectralDomainError(f"f_{k + 1}({d[k]!r}) = {g[k]!r} is negative or non-finite")
        return g

    def derivatives(self, d):
        d = np.asarray(d, dtype=float)
        self._check_q(d)
        gp = np.array([float(df(x)) for df, x in zip(self.dfs, d)])
        if not np.all(np.isfinite(gp)):
            raise SpectralDomainError("derivative function returned a non-finite value")
        return gp

    @property
    def spec(self) -> str:
        return self.name


SpectralEstimator = Union[ReducedRank, HardThreshold, SoftThreshold, Custom]


def spectral_values(est: SpectralEstimator, d) -> np.ndarray:
    """Return ``(f_1(d_1), ..., f_q(d_q))`` for ``est``."""
    return est.values(d)


def apply_estimator(f: SvdFactors, est: SpectralEstimator) -> np.ndarray:
    """Evaluate ``sum_k g_k u_k v_k^T`` with ``g = spectral_values(est, f.d)``."""
    g = spectral_values(est, f.d)
    return (f.U * g) @ f.V.T


def estimate(Y, est: SpectralEstimator, gap_tol: float = DEFAULT_GAP_TOL) -> np.ndarray:
    """Decompose ``Y`` and apply ``est`` in one step."""
    return apply_estimator(svd_decompose(Y, gap_tol), est)


@dataclass(frozen=True)
class SteinConditionReport:
    monotone_across_k: bool
    derivative_nonneg: bool
    continuous: bool
    stein_valid: bool


_ANALYTIC = {
    ReducedRank: SteinConditionReport(True, True, True, True),
    SoftThreshold: SteinConditionReport(True, True, True, True),
    HardThreshold: SteinConditionReport(True, True, False, False),
}


def validate_stein_conditions(est: SpectralEstimator, d_max: float = 1.0, grid_n: int = 200) -> SteinConditionReport:
    """Check the monotonicity/smoothness conditions under which SURE is unbiased.

    Built-in variants get analytic answers: reduced rank and soft
    thresholding pass, hard thresholding does not.

    For :class:`Custom` the functions are sampled on ``grid_n`` equispaced
    points of ``(0, d_max]``. The jump detector flags a step larger than
    ten times the largest sampled ``|f_k'|`` times the grid spacing. This is
    grid evidence only: behaviour at 0 and between grid points is not
    verified. Never raises; evaluation failures yield a failing report.
    """
    if not isinstance(est, Custom):
        return _ANALYTIC[type(est)]
    if not d_max > 0 or grid_n < 2:
        return SteinConditionReport(False, False, False, False)
    x = np.linspace(d_max / grid_n, d_max, grid_n)
    h = x[1] - x[0]
    try:
        F = np.array([[float(f(t)) for t in x] for f in est.fs])
        DF = np.array([[float(df(t)) for t in x] for df in est.dfs])
    except Exception:
        return SteinConditionReport(False, False, False, False)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(DF))):
        return SteinConditionReport(False, False, False, False)
    scale = max(1.0, float(np.abs(F).max()))
    slack = 1e-12 * scale
    nonneg = bool(np.all(F >= -slack))
    # Adjacent comparisons suffice: f_k >= f_{k+1} pointwise is transitive.
    monotone = bool(np.all(F[:-1] >= F[1:] - slack))
    deriv_nonneg = bool(np.all(DF >= -slack))
    steps = np.abs(np.diff(F, axis=1))
    slope = np.abs(DF).max(axis=1, keepdims=True)
    continuous = bool(np.all(steps <= 10.0 * slope * h + slack))
    return SteinConditionReport(monotone, deriv_nonneg, continuous, nonneg and monotone and deriv_nonneg and continuous)


_PREFIXES = {"rr": ReducedRank, "hard": HardThreshold, "soft": SoftThreshold}


def parse_estimator(spec: str) -> SpectralEstimator:
    """Parse ``"rr:<r>"``, ``"hard:<lambda>"`` or ``"soft:<lambda>"``."""
    kind, sep, arg = spec.strip().partition(":")
    if not sep or kind not in _PREFIXES:
        raise InvalidInput(f"bad estimator spec {spec!r}; expected rr:<r>, hard:<lambda> or soft:<lambda>")
    try:
        if kind == "rr":
            return ReducedRank(int(arg))
        return _PREFIXES[kind](float(arg))
    except ValueError as exc:
        raise InvalidInput(f"bad estimator spec {spec!r}: {exc}") from None


def family_estimator(family: str, param) -> SpectralEstimator:
    """Build the estimator of ``family`` ("rr", "hard", "soft") at ``param``."""
    if family == "rr":
        if float(param) != int(param):
            raise InvalidInput(f"rank must be an integer, got {param!r}")
        return ReducedRank(int(param))
    if family in ("hard", "soft"):
        return _PREFIXES[family](float(param))
    raise InvalidInput(f"unknown estimator family {family!r}")
