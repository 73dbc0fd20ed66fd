"""Matrices over the polynomial algebra and the eigenvalue-multiset recipes.

The reduction step replaces a pure-B matrix by the scalar matrix of its
entrywise state values.  Chain traces are evaluated twice over: a reduced
path (fold the scalar matrices into coefficients, evaluate the remaining
pure-A polynomial with the weight) and an unreduced path (expand everything
and hand each word to the moment oracle).  The two paths are deliberately
independent so they can cross-check each other.

Each closed-form recipe returns a :class:`Prediction` carrying the eigenvalue
multiset together with the derived scalar quantities it used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ncalg
from .cmcalc import (
    Spectrum,
    TraceClassModel,
    TracialState,
    cm_moment,
    omega_a_eval,
    tau_eval,
)
from .errors import (
    ComplexEigenvaluesError,
    DimensionMismatchError,
    NotInDomainError,
    NotPositiveError,
    NotSelfadjointError,
)
from .ncalg import FAMILY_A, FAMILY_B, NCPolynomial
from .spectra import EVMultiset, disjoint_union, hermitian_spectrum, scale

GRAM_PSD_TOL = 1e-10
EIGENVALUE_IMAG_TOL = 1e-9
NUMERIC_HERMITICITY_TOL = 1e-9
CHAIN_IMAG_REL_TOL = 1e-8


class AlgMatrix:
    """Square or rectangular matrix with polynomial entries."""

    def __init__(self, rows: Sequence[Sequence], symbols=None):
        entries: list[list[NCPolynomial]] = []
        width = None
        for row in rows:
            out_row = []
            for cell in row:
                if isinstance(cell, NCPolynomial):
                    out_row.append(cell)
                elif isinstance(cell, (int, float, complex)):
                    out_row.append(NCPolynomial.scalar(cell))
                elif isinstance(cell, str):
                    syms = symbols if symbols is not None else ncalg.auto_symbols(cell)
                    out_row.append(
                        NCPolynomial.zero() if cell.strip() == "0"
                        else ncalg.parse_expression(cell, syms)
                    )
                else:
                    raise TypeError(f"cannot use {type(cell).__name__} as a matrix entry")
            if width is None:
                width = len(out_row)
            elif len(out_row) != width:
                raise DimensionMismatchError("ragged matrix rows")
            entries.append(out_row)
        if not entries or width == 0:
            raise DimensionMismatchError("matrix must be nonempty")
        self.entries = entries
        self.shape = (len(entries), width)

    @classmethod
    def identity(cls, n: int) -> "AlgMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def entry(self, i: int, j: int) -> NCPolynomial:
        return self.entries[i][j]

    def purity(self) -> str:
        """One of ``"a"``, ``"b"`` or ``"mixed"``.

        Pure-A matrices must not contain the unit word; scalar entries are
        compatible with the B-side algebra, which contains the unit.
        """
        families = set()
        has_unit = False
        for row in self.entries:
            for poly in row:
                families |= poly.families()
                has_unit = has_unit or poly.contains_unit()
        if FAMILY_A in families:
            return "mixed" if (FAMILY_B in families or has_unit) else FAMILY_A
        return FAMILY_B

    def adjoint(self) -> "AlgMatrix":
        n, m = self.shape
        return AlgMatrix(
            [[self.entries[j][i].adjoint() for j in range(n)] for i in range(m)]
        )

    def is_selfadjoint(self, selfadjoint_generators=None) -> bool:
        n, m = self.shape
        if n != m:
            return False
        for i in range(n):
            for j in range(n):
                diff = self.entries[i][j] - self.entries[j][i].adjoint()
                if not _rewrite_is_zero(diff, selfadjoint_generators):
                    return False
        return True

    def __matmul__(self, other) -> "AlgMatrix":
        if isinstance(other, AlgMatrix):
            if self.shape[1] != other.shape[0]:
                raise DimensionMismatchError("matrix product dimension mismatch")
            rows = []
            for i in range(self.shape[0]):
                row = []
                for j in range(other.shape[1]):
                    acc = NCPolynomial.zero()
                    for p in range(self.shape[1]):
                        acc = acc + self.entries[i][p] * other.entries[p][j]
                    row.append(acc)
                rows.append(row)
            return AlgMatrix(rows)
        scalar = np.asarray(other, dtype=complex)
        if scalar.ndim != 2 or self.shape[1] != scalar.shape[0]:
            raise DimensionMismatchError("matrix product dimension mismatch")
        rows = []
        for i in range(self.shape[0]):
            row = []
            for j in range(scalar.shape[1]):
                acc = NCPolynomial.zero()
                for p in range(self.shape[1]):
                    c = scalar[p, j]
                    if c != 0:
                        acc = acc + self.entries[i][p] * c
                row.append(acc)
            rows.append(row)
        return AlgMatrix(rows)

    def __rmatmul__(self, other) -> "AlgMatrix":
        scalar = np.asarray(other, dtype=complex)
        if scalar.ndim != 2 or scalar.shape[1] != self.shape[0]:
            raise DimensionMismatchError("matrix product dimension mismatch")
        rows = []
        for i in range(scalar.shape[0]):
            row = []
            for j in range(self.shape[1]):
                acc = NCPolynomial.zero()
                for p in range(self.shape[0]):
                    c = scalar[i, p]
                    if c != 0:
                        acc = acc + c * self.entries[p][j]
                row.append(acc)
            rows.append(row)
        return AlgMatrix(rows)

    def __pow__(self, m: int) -> "AlgMatrix":
        if m < 1:
            raise ValueError("matrix power must be >= 1")
        if self.shape[0] != self.shape[1]:
            raise DimensionMismatchError("matrix power needs a square matrix")
        out = self
        for _ in range(m - 1):
            out = out @ self
        return out

    def trace(self) -> NCPolynomial:
        if self.shape[0] != self.shape[1]:
            raise DimensionMismatchError("trace needs a square matrix")
        acc = NCPolynomial.zero()
        for i in range(self.shape[0]):
            acc = acc + self.entries[i][i]
        return acc


def _rewrite_is_zero(p: NCPolynomial, selfadjoint_generators) -> bool:
    """True iff ``p`` is zero after rewriting ``x* -> x`` for the given generators."""
    if selfadjoint_generators is None:
        bases = None
    else:
        bases = {(l.family, l.index) for l in selfadjoint_generators}
    out: dict = {}
    for word, coeff in p.terms.items():
        new = tuple(
            l.base() if l.star and (bases is None or (l.family, l.index) in bases) else l
            for l in word
        )
        acc = out.get(new, 0j) + coeff
        if acc == 0:
            out.pop(new, None)
        else:
            out[new] = acc
    return not out


@dataclass
class Prediction:
    """An eigenvalue-multiset prediction with the scalars that produced it."""

    multiset: EVMultiset
    recipe: str
    parameters: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "recipe": self.recipe,
            "parameters": _jsonable(self.parameters),
            "provenance": _jsonable(self.provenance),
            "eigenvalues": self.multiset.to_list(),
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value) and np.max(np.abs(value.imag), initial=0) > 0:
            return [_jsonable(v) for v in value.tolist()]
        return np.real(value).tolist()
    if isinstance(value, complex):
        return [value.real, value.imag] if value.imag else value.real
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


# ---------------------------------------------------------------------------
# reduction and chain traces
# ---------------------------------------------------------------------------


def reduce_b_matrix(b_matrix: AlgMatrix, b_state: TracialState) -> np.ndarray:
    """Entrywise state evaluation of a pure-B matrix."""
    if b_matrix.purity() != FAMILY_B:
        raise NotInDomainError("reduction applies to pure-B matrices only")
    n, m = b_matrix.shape
    out = np.zeros((n, m), dtype=complex)
    for i in range(n):
        for j in range(m):
            acc = 0j
            for word, coeff in b_matrix.entries[i][j].sorted_terms():
                acc += coeff * tau_eval(b_state, word)
            out[i, j] = acc
    return out


def _validate_chain(chain: Sequence[AlgMatrix]) -> int:
    if len(chain) < 2 or len(chain) % 2 != 0:
        raise DimensionMismatchError("chain must alternate A- and B-matrices in pairs")
    dim = None
    for pos, mat in enumerate(chain):
        if mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError("chain matrices must be square")
        if dim is None:
            dim = mat.shape[0]
        elif mat.shape[0] != dim:
            raise DimensionMismatchError("chain matrices must share one dimension")
        if pos % 2 == 0:
            if mat.purity() != FAMILY_A:
                raise NotInDomainError(
                    "A-positions must hold pure-A matrices without the unit word"
                )
        elif mat.purity() != FAMILY_B:
            raise NotInDomainError("B-positions must hold pure-B matrices")
    return dim


def chain_moment(
    chain: Sequence[AlgMatrix],
    m: int,
    a_model: TraceClassModel,
    b_state: TracialState,
) -> complex:
    """Trace moment of an alternating chain after reducing every B-matrix.

    The scalar matrices fold into coefficients, the chain power stays a
    matrix of pure-A polynomials, and each diagonal word is evaluated by the
    weight.
    """
    _validate_chain(chain)
    if m < 1:
        raise ValueError("moment order must be >= 1")
    reduced = None
    for pos in range(0, len(chain), 2):
        scalar = reduce_b_matrix(chain[pos + 1], b_state)
        step = chain[pos] @ scalar
        reduced = step if reduced is None else reduced @ step
    powered = reduced**m
    total = 0j
    for word, coeff in powered.trace().sorted_terms():
        total += coeff * omega_a_eval(a_model, word)
    return total


def chain_moment_unreduced(
    chain: Sequence[AlgMatrix],
    m: int,
    a_model: TraceClassModel,
    b_state: TracialState,
) -> complex:
    """Cross-check path: expand the unreduced chain and use the moment oracle.

    Exponential in the chain length; intended for small verification
    instances, not production evaluation.
    """
    _validate_chain(chain)
    if m < 1:
        raise ValueError("moment order must be >= 1")
    product = None
    for mat in chain:
        product = mat if product is None else product @ mat
    powered = product**m
    total = 0j
    for word, coeff in powered.trace().sorted_terms():
        total += coeff * cm_moment(word, a_model, b_state)
    return total


# ---------------------------------------------------------------------------
# numeric realization helpers
# ---------------------------------------------------------------------------


def realize_a(a, truncation: int | None = None) -> np.ndarray:
    """Numeric matrix for one A-generator description.

    Accepts a :class:`Spectrum` (diagonal truncation), a square matrix, or a
    one-dimensional array of eigenvalues.
    """
    if isinstance(a, Spectrum):
        n = truncation if truncation is not None else a.count
        return np.diag(a.eigenvalues(n)).astype(complex)
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 1:
        return np.diag(arr)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        if truncation is not None and truncation != arr.shape[0]:
            raise DimensionMismatchError(
                f"matrix has dimension {arr.shape[0]}, not the requested {truncation}"
            )
        return arr
    raise DimensionMismatchError("cannot realize this object as an A-generator")


def eigenvalue_multiset(a, truncation: int | None = None, source: str = "predicted") -> EVMultiset:
    """Eigenvalue multiset of one A-generator description."""
    if isinstance(a, Spectrum):
        n = truncation if truncation is not None else a.count
        return EVMultiset(a.eigenvalues(n), source=source)
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 1:
        return EVMultiset(arr.real, source=source)
    return hermitian_spectrum(realize_a(a, truncation), source=source)


def sqrtm_psd(gram: np.ndarray, tol: float = GRAM_PSD_TOL) -> np.ndarray:
    """Spectral square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-tol, 0]`` are clamped to zero (rounding from sampled
    Gram matrices); anything below ``-tol`` raises ``NotPositiveError``.
    """
    g = np.asarray(gram, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionMismatchError("Gram matrix must be square")
    if float(np.max(np.abs(g - g.conj().T), initial=0.0)) > tol:
        raise NotSelfadjointError("Gram matrix is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh((g + g.conj().T) / 2.0)
    if float(np.min(vals)) < -tol:
        raise NotPositiveError(
            f"Gram matrix has eigenvalue {float(np.min(vals)):.3e} below -{tol}"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    pos = 0
    for b in blocks:
        out[pos : pos + b.shape[0], pos : pos + b.shape[0]] = b
        pos += b.shape[0]
    return out


def _realized_blocks(a_list, truncation):
    blocks = [realize_a(a, truncation) for a in a_list]
    dims = {b.shape[0] for b in blocks}
    if len(dims) != 1:
        raise DimensionMismatchError("A-generator realizations must share one dimension")
    return blocks, dims.pop()


# ---------------------------------------------------------------------------
# eigenvalue recipes
# ---------------------------------------------------------------------------


def ev_sum_bab(a_list, gram, truncation: int | None = None) -> Prediction:
    """Multiset of the Gram-sandwiched block diagonal of the generators.

    ``gram[i, j]`` holds the state value of ``b_i* b_j``; the prediction is
    the spectrum of ``sqrt(gram) . blockdiag(a_1..a_k) . sqrt(gram)``.
    """
    gram = np.asarray(gram, dtype=complex)
    root = sqrtm_psd(gram)
    blocks, n = _realized_blocks(a_list, truncation)
    if gram.shape[0] != len(blocks):
        raise DimensionMismatchError("Gram size must match the number of generators")
    lift = np.kron(root, np.eye(n))
    matrix = lift @ _block_diag(blocks) @ lift
    multiset = hermitian_spectrum(matrix, source="predicted")
    return Prediction(
        multiset=multiset,
        recipe="sum_bab",
        parameters={"k": len(blocks), "truncation": n},
        provenance={"gram": gram},
    )


def ev_sum_aba(a_list, taus, truncation: int | None = None) -> Prediction:
    """Multiset of ``sum_i tau(b_i) a_i a_i*`` realized numerically."""
    taus = np.asarray(taus, dtype=complex)
    if np.max(np.abs(taus.imag), initial=0.0) > 1e-12:
        raise NotSelfadjointError("state values tau(b_i) must be real (selfadjoint b_i)")
    taus = taus.real
    blocks, n = _realized_blocks(a_list, truncation)
    if taus.shape[0] != len(blocks):
        raise DimensionMismatchError("need one state value per generator")
    acc = np.zeros((n, n), dtype=complex)
    for t, block in zip(taus, blocks):
        acc += t * (block @ block.conj().T)
    multiset = hermitian_spectrum(acc, source="predicted")
    return Prediction(
        multiset=multiset,
        recipe="sum_aba",
        parameters={"k": len(blocks), "truncation": n},
        provenance={"taus": taus},
    )


def ev_anticommutator(a, tau_b: float, tau_b2: float, truncation: int | None = None) -> Prediction:
    """Multiset of ``a b + b a`` from the two derived slopes."""
    if tau_b2 < 0:
        raise NotPositiveError("tau(b^2) must be nonnegative")
    root = float(np.sqrt(tau_b2))
    p = root + float(tau_b)
    q = -root + float(tau_b)
    base = eigenvalue_multiset(a, truncation)
    multiset = disjoint_union(scale(p, base), scale(q, base))
    return Prediction(
        multiset=multiset,
        recipe="anticommutator",
        parameters={"tau_b": float(tau_b), "tau_b2": float(tau_b2)},
        provenance={"p": p, "q": q},
    )


def ev_commutator(a, tau_b: float, tau_b2: float, truncation: int | None = None) -> Prediction:
    """Multiset of ``i(a b - b a)``; the slope is the standard deviation of b."""
    variance = float(tau_b2) - float(tau_b) ** 2
    if variance < -1e-12:
        raise NotPositiveError(
            "tau(b^2) - tau(b)^2 is negative beyond tolerance; inconsistent state table"
        )
    r = float(np.sqrt(max(variance, 0.0)))
    base = eigenvalue_multiset(a, truncation)
    multiset = disjoint_union(scale(r, base), scale(-r, base))
    return Prediction(
        multiset=multiset,
        recipe="commutator",
        parameters={"tau_b": float(tau_b), "tau_b2": float(tau_b2)},
        provenance={"r": r},
    )


def ev_sum_bac(a, bprime, truncation: int | None = None) -> Prediction:
    """Multiset of ``sum_i b_i a c_i``: scaled copies of the base spectrum.

    ``bprime[i, j]`` holds the state value of ``c_i b_j``; its eigenvalues
    are the scaling factors.  Eigenvalues with imaginary part beyond
    tolerance refuse the prediction.
    """
    bprime = np.asarray(bprime, dtype=complex)
    if bprime.ndim != 2 or bprime.shape[0] != bprime.shape[1]:
        raise DimensionMismatchError("reduced matrix must be square")
    if float(np.max(np.abs(bprime - bprime.conj().T))) <= 1e-14:
        lams = np.linalg.eigvalsh(bprime).astype(complex)
    else:
        lams = np.linalg.eigvals(bprime)
    if float(np.max(np.abs(lams.imag), initial=0.0)) > EIGENVALUE_IMAG_TOL:
        raise ComplexEigenvaluesError(
            "reduced matrix has complex eigenvalues; prediction refused"
        )
    lams = np.sort(lams.real)[::-1]
    base = eigenvalue_multiset(a, truncation)
    multiset = None
    for lam in lams:
        piece = scale(float(lam), base)
        multiset = piece if multiset is None else disjoint_union(multiset, piece)
    return Prediction(
        multiset=multiset,
        recipe="sum_bac",
        parameters={"k": int(bprime.shape[0])},
        provenance={"bprime": bprime, "lambdas": lams},
    )


def ev_conjugated_sum(a_list, c_taus, gram, truncation: int | None = None) -> Prediction:
    """Multiset of ``sum_i b_i a_i c_i a_i* b_i*`` via the modified diagonal."""
    c_taus = np.asarray(c_taus, dtype=complex)
    if np.max(np.abs(c_taus.imag), initial=0.0) > 1e-12:
        raise NotSelfadjointError("state values tau(c_i) must be real (selfadjoint c_i)")
    c_taus = c_taus.real
    blocks, n = _realized_blocks(a_list, truncation)
    if c_taus.shape[0] != len(blocks):
        raise DimensionMismatchError("need one state value per generator")
    modified = [t * (block @ block.conj().T) for t, block in zip(c_taus, blocks)]
    inner = ev_sum_bab(modified, gram, truncation=n)
    return Prediction(
        multiset=inner.multiset,
        recipe="conjugated_sum",
        parameters={"k": len(blocks), "truncation": n},
        provenance={"gram": np.asarray(gram, dtype=complex), "c_taus": c_taus},
    )


def ev_chain(
    b0: AlgMatrix,
    chain: Sequence[AlgMatrix],
    a_model: TraceClassModel,
    b_state: TracialState,
    truncation: int | None = None,
    check_selfadjoint: bool = True,
    selfadjoint_generators=None,
) -> Prediction:
    """Multiset of ``B0 A1 B1 ... Ak Bk`` via the reduction of every B-matrix.

    The trailing B-matrix absorbs ``B0`` (traciality rotation); the interior
    B-matrices reduce to scalars; each A-generator is realized at the given
    truncation and the spectrum of the assembled numeric matrix is returned.

    The product must be selfadjoint for the spectrum to be real; by default
    this is verified symbolically treating the given generators (or all
    generators) as selfadjoint.
    """
    dim = _validate_chain(chain)
    if b0.shape != (dim, dim):
        raise DimensionMismatchError("leading B-matrix must match the chain dimension")
    if b0.purity() != FAMILY_B:
        raise NotInDomainError("leading matrix must be pure-B")
    if check_selfadjoint:
        product = b0
        for mat in chain:
            product = product @ mat
        if not product.is_selfadjoint(selfadjoint_generators):
            raise NotSelfadjointError("chain product is not selfadjoint")

    k = len(chain) // 2
    reduced_blocks = []
    for pos in range(k):
        b_mat = chain[2 * pos + 1]
        if pos == k - 1:
            b_mat = b_mat @ b0
        reduced_blocks.append(reduce_b_matrix(b_mat, b_state))

    realizations: dict[int, np.ndarray] = {}

    def realize_letter(letter):
        if letter.index not in realizations:
            realizations[letter.index] = np.asarray(
                a_model.realization(letter.index, truncation), dtype=complex
            )
        mat = realizations[letter.index]
        return mat.conj().T if letter.star else mat

    def realize_a_matrix(alg: AlgMatrix, n_inner: int) -> np.ndarray:
        out = np.zeros((dim * n_inner, dim * n_inner), dtype=complex)
        for i in range(dim):
            for j in range(dim):
                acc = np.zeros((n_inner, n_inner), dtype=complex)
                for word, coeff in alg.entries[i][j].sorted_terms():
                    prod = np.eye(n_inner, dtype=complex)
                    for letter in word:
                        prod = prod @ realize_letter(letter)
                    acc += coeff * prod
                out[i * n_inner : (i + 1) * n_inner, j * n_inner : (j + 1) * n_inner] = acc
        return out

    letters = [
        letter
        for pos in range(k)
        for row in chain[2 * pos].entries
        for poly in row
        for word in poly.terms
        for letter in word
    ]
    if not letters:
        raise NotInDomainError("chain contains no A-generators to realize")
    n_inner = realize_letter(letters[0]).shape[0]

    numeric = None
    for pos in range(k):
        block = realize_a_matrix(chain[2 * pos], n_inner)
        block = block @ np.kron(reduced_blocks[pos], np.eye(n_inner))
        numeric = block if numeric is None else numeric @ block

    residual = float(np.max(np.abs(numeric - numeric.conj().T)))
    if residual <= NUMERIC_HERMITICITY_TOL:
        multiset = hermitian_spectrum(numeric, source="predicted")
    else:
        lams = np.linalg.eigvals(numeric)
        radius = float(np.max(np.abs(lams), initial=0.0))
        if float(np.max(np.abs(lams.imag), initial=0.0)) > CHAIN_IMAG_REL_TOL * max(radius, 1e-300):
            raise NotSelfadjointError(
                "chain realization has eigenvalues with large imaginary parts"
            )
        multiset = EVMultiset(lams.real, source="predicted")
    return Prediction(
        multiset=multiset,
        recipe="chain",
        parameters={"k": k, "dim": dim, "truncation": n_inner},
        provenance={"reduced_blocks": [b for b in reduced_blocks]},
    )
