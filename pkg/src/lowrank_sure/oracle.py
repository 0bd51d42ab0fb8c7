"""Independent ground truth: finite-difference divergence and covariance df.

Nothing here reuses the analytic divergence formulas. The finite-difference
route only calls the estimators themselves, and :func:`covariance_df` needs
the true mean, so it is a validation tool and not usable on real data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegenerateSpectrum, InvalidInput
from .estimators import SpectralEstimator, apply_estimator
from .matrix import DEFAULT_GAP_TOL, MatrixObs, check_distinct, svd_decompose

MatrixMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FdConfig:
    h: float = 1e-5
    scheme: str = "central"

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidInput(f"finite-difference step must be positive, got {self.h!r}")
        if self.scheme != "central":
            raise InvalidInput(f"only the central scheme is supported, got {self.scheme!r}")


def _as_entries(Y) -> np.ndarray:
    return Y.entries if isinstance(Y, MatrixObs) else MatrixObs(Y).entries


def finite_difference_divergences(
    ests: Sequence[SpectralEstimator | MatrixMap],
    Y,
    cfg: FdConfig = FdConfig(),
    gap_tol: float = DEFAULT_GAP_TOL,
) -> np.ndarray:
    """Central-difference divergences of several maps at ``Y``.

    ``sum_i [m_i(Y + h e_i) - m_i(Y - h e_i)] / (2h)`` for each map. Spectral
    estimators share one SVD per perturbed point; plain callables
    ``ndarray -> ndarray`` are evaluated directly and skip the degeneracy
    check. Accumulation runs over coordinates in row-major order.
    """
    Y = _as_entries(Y)
    h = cfg.h
    if h < 1e-9 * max(1.0, float(np.abs(Y).max())):
        raise InvalidInput(f"step h={h!r} is too small for an input of this scale")
    spectral = [not callable(e) for e in ests]
    total = np.zeros(len(ests))
    P = Y.copy()
    p, q = Y.shape
    for i in range(p):
        for j in range(q):
            vals = np.empty((2, len(ests)))
            for side, sign in enumerate((1.0, -1.0)):
                P[i, j] = Y[i, j] + sign * h
                f = None
                if any(spectral):
                    f = svd_decompose(P, gap_tol)
                    rep = check_distinct(f)
                    if not rep.distinct:
                        raise DegenerateSpectrum(rep.min_relative_gap, gap_tol, coordinate=(i, j))
                for n, est in enumerate(ests):
                    out = apply_estimator(f, est) if spectral[n] else np.asarray(est(P.copy()), dtype=float)
                    vals[side, n] = out[i, j]
            P[i, j] = Y[i, j]
            total += (vals[0] - vals[1]) / (2.0 * h)
    return total


def finite_difference_divergence(est: SpectralEstimator | MatrixMap, Y, cfg: FdConfig = FdConfig(), gap_tol: float = DEFAULT_GAP_TOL) -> float:
    """Central-difference divergence of one estimator (or matrix map) at ``Y``."""
    return float(finite_difference_divergences([est], Y, cfg, gap_tol)[0])


def covariance_term(Y, mu_hat, mu, sigma2: float) -> float:
    """``tr(mu_hat^T (Y - mu)) / sigma^2`` for a single replicate."""
    Y, mu_hat, mu = (np.asarray(a, dtype=float) for a in (Y, mu_hat, mu))
    if not (Y.shape == mu_hat.shape == mu.shape):
        raise InvalidInput(f"dimension mismatch: Y {Y.shape}, mu_hat {mu_hat.shape}, mu {mu.shape}")
    return float(np.sum(mu_hat * (Y - mu))) / sigma2


def covariance_df(replicates: Iterable[tuple[np.ndarray, np.ndarray]], mu, sigma2: float) -> float:
    """Covariance-definition df estimate from replicates ``(Y_b, mu_hat_b)``.

    ``(1 / (B sigma^2)) sum_b tr(mu_hat_b^T (Y_b - mu))``. Unbiased for the
    degrees of freedom whether or not Stein's lemma applies.
    """
    if not sigma2 > 0:
        raise InvalidInput("sigma2 must be positive")
    mu = np.asarray(mu, dtype=float)
    terms = [covariance_term(Yb, mb, mu, sigma2) for Yb, mb in replicates]
    if not terms:
        raise InvalidInput("need at least one replicate")
    return float(np.mean(terms))
