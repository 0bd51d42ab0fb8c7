"""Monte Carlo check of divergence-based degrees of freedom.

Each replicate ``Y_b = mu + sigma Z_b`` is decomposed once. For every grid
point the analytic divergence and the covariance term
``tr(mu_hat_b^T (Y_b - mu)) / sigma^2`` are computed from the same draw, and
the bias of the divergence is estimated from their paired differences.

Replicate ``b`` draws from a Philox-4x64 counter-based generator keyed by
``SeedSequence(seed, spawn_key=(b,))``, so its stream depends only on
``(seed, b)`` and results do not depend on how replicates are split across
threads.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .errors import DegenerateSpectrum, InvalidInput, SimulationAborted, ThresholdAtSingularValue
from .estimators import family_estimator
from .matrix import DEFAULT_GAP_TOL, MatrixObs, check_distinct, svd_decompose
from .risk import divergence

FAMILIES = ("rr", "hard", "soft")
THREADS_ENV = "LOWRANK_SURE_THREADS"
CSV_COLUMNS = ("family", "param", "df_div", "df_cov", "bias", "se", "ci_lo", "ci_hi", "n_skipped", "B", "p", "q", "seed")


def default_lambda_grid(n: int = 40, upper: float = 10.0) -> list[float]:
    """``n`` equispaced thresholds in ``(0, upper]``."""
    return [float(x) for x in np.linspace(upper / n, upper, n)]


@dataclass(frozen=True)
class SimConfig:
    p: int
    q: int
    B: int
    seed: int
    family: str
    grid: Sequence[float]
    sigma2: float = 1.0
    mu: np.ndarray | None = None
    gap_tol: float = DEFAULT_GAP_TOL

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int) and self.p >= self.q >= 1):
            raise InvalidInput(f"need integers p >= q >= 1, got p={self.p!r}, q={self.q!r}")
        if not isinstance(self.B, int) or self.B < 2:
            raise InvalidInput(f"need B >= 2 replicates, got {self.B!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInput("seed must fit in an unsigned 64-bit integer")
        if self.family not in FAMILIES:
            raise InvalidInput(f"family must be one of {FAMILIES}, got {self.family!r}")
        grid = tuple(self.grid)
        if not grid:
            raise InvalidInput("grid must be non-empty")
        if self.family == "rr":
            if any(float(r) != int(r) or not 0 <= int(r) <= self.q for r in grid):
                raise InvalidInput(f"reduced-rank grid must be integers in [0, {self.q}]")
            grid = tuple(int(r) for r in grid)
        else:
            grid = tuple(float(x) for x in grid)
            if any(not np.isfinite(x) or x < 0 for x in grid):
                raise InvalidInput("threshold grid must be finite and non-negative")
        object.__setattr__(self, "grid", grid)
        if not self.sigma2 >= 0:
            raise InvalidInput("sigma2 must be non-negative")
        if self.mu is not None:
            mu = np.array(self.mu, dtype=float)
            if mu.shape != (self.p, self.q):
                raise InvalidInput(f"mu has shape {mu.shape}, expected {(self.p, self.q)}")
            mu.setflags(write=False)
            object.__setattr__(self, "mu", mu)

    def mean(self) -> np.ndarray:
        return np.zeros((self.p, self.q)) if self.mu is None else self.mu


@dataclass(frozen=True)
class GridPointResult:
    param: float
    df_div: float
    df_cov: float
    bias: float
    se: float
    ci_lo: float
    ci_hi: float
    n_skipped: int


@dataclass(frozen=True)
class SimulationResult:
    config: SimConfig
    points: list[GridPointResult]
    divergences: np.ndarray | None = field(default=None, repr=False)
    cov_terms: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self) -> str:
        cfg = self.config
        out = io.StringIO()
        out.write(",".join(CSV_COLUMNS) + "\n")
        for pt in self.points:
            param = str(pt.param) if cfg.family == "rr" else f"{pt.param:.10g}"
            nums = (pt.df_div, pt.df_cov, pt.bias, pt.se, pt.ci_lo, pt.ci_hi)
            row = [cfg.family, param, *(f"{x:.10g}" for x in nums), str(pt.n_skipped), str(cfg.B), str(cfg.p), str(cfg.q), str(cfg.seed)]
            out.write(",".join(row) + "\n")
        return out.getvalue()


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(b),))))


def sample_gaussian_matrix(p: int, q: int, mu=None, sigma2: float = 1.0, rng: np.random.Generator | None = None) -> MatrixObs:
    """Draw ``Y_ij = mu_ij + sigma Z_ij`` with iid standard normal ``Z``."""
    if rng is None:
        rng = np.random.default_rng()
    if sigma2 < 0:
        raise InvalidInput("sigma2 must be non-negative")
    mu = np.zeros((p, q)) if mu is None else np.asarray(mu, dtype=float)
    Z = rng.standard_normal((p, q))
    return MatrixObs(mu + np.sqrt(sigma2) * Z, sigma2)


def bias_confidence(paired_diffs, level: float = 0.95) -> tuple[float, float, float, float]:
    """Mean, standard error and normal-approximation CI of paired differences.

    The standard error uses the ``n - 1`` sample standard deviation.
    """
    x = np.asarray(paired_diffs, dtype=float)
    if x.size < 2:
        raise InvalidInput("need at least 2 paired differences")
    if not 0 < level < 1:
        raise InvalidInput("level must lie in (0, 1)")
    z = NormalDist().inv_cdf(0.5 + level / 2)
    mean = float(x.mean())
    se = float(x.std(ddof=1) / np.sqrt(x.size))
    return mean, se, mean - z * se, mean + z * se


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env is None:
            return os.cpu_count() or 1
        try:
            threads = int(env)
        except ValueError:
            raise InvalidInput(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
    if threads < 1:
        raise InvalidInput(f"thread count must be a positive integer, got {threads!r}")
    return threads


def _run_block(cfg: SimConfig, ests, mu, centred_mu, start, stop, div, cov):
    for b in range(start, stop):
        Y = sample_gaussian_matrix(cfg.p, cfg.q, mu, cfg.sigma2, replicate_rng(cfg.seed, b))
        f = svd_decompose(Y, cfg.gap_tol)
        if not check_distinct(f).distinct:
            continue
        # u_k^T mu v_k, so that tr(mu_hat^T (Y - mu)) = sum_k g_k (d_k - c_k).
        c = np.einsum("ik,ij,jk->k", f.U, mu, f.V) if centred_mu else 0.0
        resid = f.d - c
        for j, est in enumerate(ests):
            try:
                div[b, j] = divergence(f, est)
            except (DegenerateSpectrum, ThresholdAtSingularValue):
                continue
            cov[b, j] = np.dot(est.values(f.d), resid) / cfg.sigma2


def run_simulation(cfg: SimConfig, threads: int | None = None, keep_replicates: bool = False) -> SimulationResult:
    """Run the paired divergence-vs-covariance experiment described by ``cfg``.

    Replicates with a degenerate spectrum are skipped for every grid point;
    a threshold landing on a singular value skips that grid point only.
    More than ``B / 100`` skips at any grid point aborts the run.
    """
    if not cfg.sigma2 > 0:
        raise InvalidInput("simulation needs sigma2 > 0")
    ests = [family_estimator(cfg.family, x) for x in cfg.grid]
    mu = cfg.mean()
    centred_mu = bool(np.any(mu != 0))
    div = np.full((cfg.B, len(ests)), np.nan)
    cov = np.full((cfg.B, len(ests)), np.nan)
    n_workers = min(resolve_threads(threads), cfg.B)
    bounds = np.linspace(0, cfg.B, n_workers + 1).astype(int)
    if n_workers == 1:
        _run_block(cfg, ests, mu, centred_mu, 0, cfg.B, div, cov)
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            futures = [pool.submit(_run_block, cfg, ests, mu, centred_mu, lo, hi, div, cov) for lo, hi in zip(bounds[:-1], bounds[1:])]
            for fut in futures:
                fut.result()

    points = []
    for j, param in enumerate(cfg.grid):
        ok = ~np.isnan(div[:, j])
        n_skipped = int(cfg.B - ok.sum())
        if n_skipped > cfg.B / 100:
            raise SimulationAborted(f"{n_skipped} of {cfg.B} replicates skipped at grid point {param!r}")
        df_div = float(np.mean(div[ok, j]))
        df_cov = float(np.mean(cov[ok, j]))
        _, se, _, _ = bias_confidence(div[ok, j] - cov[ok, j])
        bias = df_div - df_cov
        half = NormalDist().inv_cdf(0.975) * se
        points.append(GridPointResult(param, df_div, df_cov, bias, se, bias - half, bias + half, n_skipped))
    if keep_replicates:
        return SimulationResult(cfg, points, div, cov)
    return SimulationResult(cfg, points)
