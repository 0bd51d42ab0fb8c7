"""Observation container, thin SVD adapter, and matrix CSV I/O."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from os import PathLike

import numpy as np

from .errors import InvalidInput, NumericalFailure

DEFAULT_GAP_TOL = 1e-8
_TINY = np.finfo(float).tiny


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MatrixObs:
    """A p x q observation (p >= q) with known noise variance ``sigma2``.

    ``entries`` is stored as a read-only float array of shape (p, q).
    """

    entries: np.ndarray
    sigma2: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise InvalidInput(f"observation must be a non-empty 2-D matrix, got shape {a.shape}")
        p, q = a.shape
        if p < q:
            raise InvalidInput(f"observation is {p}x{q}; p >= q is required (transpose first)")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("observation has non-finite entries")
        sigma2 = float(self.sigma2)
        # sigma2 == 0 is admitted for noiseless draws; SURE then reduces to the RSS.
        if not np.isfinite(sigma2) or sigma2 < 0:
            raise InvalidInput(f"sigma2 must be a non-negative real, got {self.sigma2!r}")
        object.__setattr__(self, "entries", _frozen(a))
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @property
    def q(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``Y = U diag(d) V^T`` with ``d`` sorted non-increasing.

    ``U`` is p x q and ``V`` is q x q; columns ``U[:, k]`` and ``V[:, k]``
    are the singular vectors belonging to ``d[k]``.
    """

    U: np.ndarray
    d: np.ndarray
    V: np.ndarray
    gap_tol: float = DEFAULT_GAP_TOL

    def __post_init__(self):
        for name in ("U", "d", "V"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def p(self) -> int:
        return self.U.shape[0]

    @property
    def q(self) -> int:
        return self.d.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.d) @ self.V.T

    def with_signs(self, signs) -> "SvdFactors":
        """Return the factors with ``(u_k, v_k)`` negated wherever ``signs[k] < 0``."""
        s = np.where(np.asarray(signs) < 0, -1.0, 1.0)
        return SvdFactors(self.U * s, self.d, self.V * s, self.gap_tol)


@dataclass(frozen=True)
class DistinctnessReport:
    distinct: bool
    min_relative_gap: float
    gap_tol: float = field(default=DEFAULT_GAP_TOL)


def _as_array(Y) -> np.ndarray:
    if isinstance(Y, MatrixObs):
        return Y.entries
    return MatrixObs(Y).entries


def svd_decompose(Y, gap_tol: float = DEFAULT_GAP_TOL) -> SvdFactors:
    """Thin SVD of an observation.

    ``Y`` may be a :class:`MatrixObs` or anything array-like satisfying the
    same invariants. LAPACK non-convergence raises :class:`NumericalFailure`.
    """
    a = _as_array(Y)
    if gap_tol < 0:
        raise InvalidInput("gap_tol must be non-negative")
    try:
        U, d, Vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(U)) and np.all(np.isfinite(Vh))):
        raise NumericalFailure("SVD produced non-finite factors")
    # LAPACK already returns descending values; this guards against ties reordered by noise.
    order = np.argsort(-d, kind="stable")
    return SvdFactors(U[:, order], d[order], Vh[order].T, gap_tol)


def frobenius_norm_sq(A) -> float:
    a = np.asarray(A, dtype=float)
    return float(np.sum(a * a))


def relative_gaps(d, *, scale=None) -> np.ndarray:
    """Adjacent gaps ``(d_k - d_{k+1}) / max(d_1, tiny)``."""
    d = np.asarray(d, dtype=float)
    if scale is None:
        scale = d[0] if d.size else 0.0
    return (d[:-1] - d[1:]) / max(scale, _TINY)


def check_distinct(f: SvdFactors | np.ndarray, gap_tol: float | None = None) -> DistinctnessReport:
    """Classify whether the singular values are pairwise distinct.

    Only adjacent gaps matter because ``d`` is sorted; ``d_q = 0`` is
    allowed. For q = 1 the spectrum is trivially distinct.
    """
    if isinstance(f, SvdFactors):
        d = f.d
        tol = f.gap_tol if gap_tol is None else gap_tol
    else:
        d = np.asarray(f, dtype=float)
        tol = DEFAULT_GAP_TOL if gap_tol is None else gap_tol
    gaps = relative_gaps(d)
    min_gap = float(gaps.min()) if gaps.size else float("inf")
    return DistinctnessReport(min_gap > tol, min_gap, tol)


def read_matrix_csv(source: str | PathLike | io.TextIOBase) -> np.ndarray:
    """Parse the matrix CSV format: comma-separated rows, optional leading '#' header."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    lines = text.splitlines()
    if lines and lines[0].lstrip().startswith("#"):
        lines = lines[1:]
    rows = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise InvalidInput(f"bad number on data line {lineno}: {exc}") from None
    if not rows:
        raise InvalidInput("matrix CSV has no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInput(f"ragged matrix CSV: row lengths {sorted(widths)}")
    a = np.array(rows, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix CSV has non-finite entries")
    return a


def write_matrix_csv(A, target, header: str | None = None) -> None:
    a = np.asarray(A, dtype=float)
    out = io.StringIO()
    if header is not None:
        out.write(f"# {header}\n")
    for row in a:
        out.write(",".join(repr(float(x)) for x in row) + "\n")
    if hasattr(target, "write"):
        target.write(out.getvalue())
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(out.getvalue())
