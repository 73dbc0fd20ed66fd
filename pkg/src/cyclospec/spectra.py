"""Eigenvalue multisets: canonical ordering, algebra and comparison metrics.

The canonical order is descending absolute value, ties broken by descending
signed value; this is the order in which truncated spectra are displayed and
compared.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import InsufficientEntriesError, NotSelfadjointError

HERMITICITY_TOL = 1e-9
REL_FLOOR = 1e-12


def _canonical(values: Iterable[float]) -> np.ndarray:
    vals = [float(v) for v in values]
    vals.sort(key=lambda v: (-abs(v), -v))
    return np.asarray(vals, dtype=float)


class EVMultiset:
    """Finite real eigenvalue multiset stored in canonical order."""

    __slots__ = ("values", "source")

    def __init__(self, values: Iterable[float], source: str = "empirical"):
        self.values = _canonical(values)
        self.source = source

    def __len__(self) -> int:
        return int(self.values.size)

    def __iter__(self):
        return iter(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EVMultiset):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.all(self.values == other.values)
        )

    __hash__ = None

    def __repr__(self) -> str:
        head = ", ".join(f"{v:.6g}" for v in self.values[:6])
        tail = ", ..." if len(self) > 6 else ""
        return f"EVMultiset([{head}{tail}], n={len(self)}, source={self.source!r})"

    def to_list(self) -> list[float]:
        return [float(v) for v in self.values]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for v in self.values:
                fh.write(f"{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path, source: str = "empirical") -> "EVMultiset":
        with open(path, "r", encoding="utf-8") as fh:
            vals = [float(line) for line in fh if line.strip()]
        return cls(vals, source=source)


def hermitian_spectrum(matrix: np.ndarray, source: str = "empirical") -> EVMultiset:
    """All eigenvalues (with multiplicity) of a Hermitian matrix.

    The matrix must be Hermitian within ``1e-9`` in the entrywise maximum;
    rounding-level asymmetry is removed before the solver runs.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSelfadjointError("spectrum needs a square matrix")
    residual = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if residual > HERMITICITY_TOL:
        raise NotSelfadjointError(
            f"matrix is not Hermitian: max entry deviation {residual:.3e}"
        )
    sym = (m + m.conj().T) / 2.0
    return EVMultiset(np.linalg.eigvalsh(sym), source=source)


def scale(c: float, s: EVMultiset) -> EVMultiset:
    return EVMultiset(float(c) * s.values, source=s.source)


def disjoint_union(s: EVMultiset, t: EVMultiset) -> EVMultiset:
    source = s.source if s.source == t.source else "predicted"
    return EVMultiset(np.concatenate([s.values, t.values]), source=source)


def truncate(s: EVMultiset, m: int) -> EVMultiset:
    if m < 0:
        raise ValueError("truncation length must be >= 0")
    return EVMultiset(s.values[:m], source=s.source)


def multiset_moment(s: EVMultiset, k: int) -> float:
    """Sum of the k-th powers of the entries."""
    if k < 1:
        raise ValueError("moment order must be >= 1")
    return float(np.sum(s.values**k))


def match_distance(s: EVMultiset, t: EVMultiset, m: int) -> dict:
    """Compare the first ``m`` canonical entries of ``s`` against ``t``.

    ``t`` plays the reference role: the relative error divides by ``|t_i|``
    floored at ``1e-12``.  ``m = 0`` returns zeros by convention.
    """
    if m < 0:
        raise ValueError("comparison length must be >= 0")
    if m == 0:
        return {"max_abs": 0.0, "max_rel": 0.0}
    if len(s) < m or len(t) < m:
        raise InsufficientEntriesError(
            f"need {m} entries but have {len(s)} and {len(t)}"
        )
    diff = np.abs(s.values[:m] - t.values[:m])
    denom = np.maximum(np.abs(t.values[:m]), REL_FLOOR)
    return {"max_abs": float(np.max(diff)), "max_rel": float(np.max(diff / denom))}
