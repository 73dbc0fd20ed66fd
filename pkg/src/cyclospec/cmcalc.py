"""State models for both generator families and the brute-force moment oracle.

The oracle evaluates mixed moments through the defining factorization: a word
is decomposed into maximal A-runs and B-runs, a leading B-run is rotated into
the trailing one (traciality), and the value is the weight of the concatenated
A-letters times the product of the state values of the B-runs.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping

import numpy as np

from .ensembles import sample_haar_unitary
from .errors import (
    DegreeExceededError,
    DimensionMismatchError,
    NotInDomainError,
)
from .ncalg import (
    FAMILY_A,
    FAMILY_B,
    Letter,
    Word,
    alternating_form,
    auto_symbols,
    is_pure,
    min_cyclic_rotation,
    parse_expression,
    word_adjoint,
    word_str,
)

DEFAULT_TRUNCATION = 64


# ---------------------------------------------------------------------------
# eigenvalue sequences for the trace-class side
# ---------------------------------------------------------------------------


class Spectrum:
    """A real eigenvalue sequence; subclasses provide truncations and power sums."""

    count: int | None

    def eigenvalues(self, n: int | None = None) -> np.ndarray:
        raise NotImplementedError

    def power_sum(self, m: int, n: int | None = None) -> float:
        raise NotImplementedError


class GeometricSpectrum(Spectrum):
    """Eigenvalues ``scale * ratio**k`` for ``k = 0, 1, ...``.

    ``count=None`` selects the exact analytic mode where power sums are the
    closed-form geometric series; otherwise the sequence is truncated after
    ``count`` entries (default 64).
    """

    def __init__(self, scale: float, ratio: float, count: int | None = DEFAULT_TRUNCATION):
        if abs(ratio) >= 1:
            raise ValueError("|ratio| must be < 1")
        if count is not None and count < 1:
            raise ValueError("count must be >= 1")
        self.scale = float(scale)
        self.ratio = float(ratio)
        self.count = count

    def eigenvalues(self, n: int | None = None) -> np.ndarray:
        n = n if n is not None else self.count
        if n is None:
            raise ValueError("analytic spectrum needs an explicit truncation")
        return self.scale * np.power(self.ratio, np.arange(n))

    def power_sum(self, m: int, n: int | None = None) -> float:
        n = n if n is not None else self.count
        if n is None:
            return self.scale**m / (1.0 - self.ratio**m)
        return float(np.sum(self.eigenvalues(n) ** m))

    def __repr__(self):
        return f"GeometricSpectrum(scale={self.scale}, ratio={self.ratio}, count={self.count})"


class ExplicitSpectrum(Spectrum):
    """Finite list of eigenvalues."""

    def __init__(self, values: Iterable[float]):
        self.values = np.asarray(list(values), dtype=float)
        if self.values.size < 1:
            raise ValueError("spectrum must contain at least one value")
        self.count = int(self.values.size)

    def eigenvalues(self, n: int | None = None) -> np.ndarray:
        if n is None or n == self.count:
            return self.values.copy()
        if n > self.count:
            raise DimensionMismatchError(
                f"asked for {n} eigenvalues but only {self.count} are recorded"
            )
        return self.values[:n].copy()

    def power_sum(self, m: int, n: int | None = None) -> float:
        return float(np.sum(self.eigenvalues(n) ** m))

    def __repr__(self):
        return f"ExplicitSpectrum({self.values.tolist()!r})"


# ---------------------------------------------------------------------------
# tracial states on the B-family
# ---------------------------------------------------------------------------


class TracialState:
    """Evaluator of the unital tracial state on pure-B words."""

    def tau(self, w: Word) -> complex:
        raise NotImplementedError


def _check_pure_b(w: Word) -> None:
    if not is_pure(w, FAMILY_B):
        raise NotInDomainError(f"state is defined on pure-B words only: {word_str(w)}")


class MomentTable(TracialState):
    """Finite table of state values on pure-B words up to a degree cap.

    Keys are canonicalized to their minimal cyclic rotation (traciality), and
    the adjoint of a stored word is looked up as the conjugate value.  Entries
    that collide after canonicalization must agree within ``1e-12``.
    """

    def __init__(self, moments: Mapping[Word, complex], degree_cap: int | None = None):
        table: dict[Word, complex] = {}
        max_degree = 0
        for word, value in moments.items():
            word = tuple(word)
            _check_pure_b(word)
            value = complex(value)
            if not word:
                if abs(value - 1) > 1e-12:
                    raise ValueError("the state of the unit word must be 1")
                continue
            max_degree = max(max_degree, len(word))
            canon = min_cyclic_rotation(word)
            if canon in table and abs(table[canon] - value) > 1e-12:
                raise ValueError(
                    f"inconsistent values for the rotation class of {word_str(word)}"
                )
            table[canon] = value
        for canon, value in table.items():
            conj_key = min_cyclic_rotation(word_adjoint(canon))
            if conj_key in table and abs(table[conj_key] - value.conjugate()) > 1e-12:
                raise ValueError(
                    f"adjoint inconsistency for {word_str(canon)}: "
                    "stored values violate tau(w*) = conj(tau(w))"
                )
        self._table = table
        self.degree_cap = degree_cap if degree_cap is not None else max_degree

    @classmethod
    def from_b_powers(cls, powers: Mapping[int, complex], index: int = 1) -> "MomentTable":
        """Table for a single generator given ``{m: tau(b**m)}``."""
        letter = Letter(FAMILY_B, index)
        return cls({(letter,) * m: value for m, value in powers.items()})

    @classmethod
    def from_json_doc(cls, doc: Mapping, symbols: Mapping[str, Letter] | None = None) -> "MomentTable":
        """Load ``{"degree_cap": d, "moments": {"b1*b1": [re, im], ...}}``."""
        moments = {}
        for key, value in doc.get("moments", {}).items():
            syms = symbols if symbols is not None else auto_symbols(key)
            poly = parse_expression(key, syms)
            if len(poly.terms) != 1:
                raise ValueError(f"moment key {key!r} must be a single word")
            (word, coeff), = poly.terms.items()
            if coeff != 1:
                raise ValueError(f"moment key {key!r} must have coefficient 1")
            if isinstance(value, (list, tuple)):
                value = complex(value[0], value[1] if len(value) > 1 else 0.0)
            moments[word] = complex(value)
        return cls(moments, degree_cap=doc.get("degree_cap"))

    @classmethod
    def from_json(cls, path) -> "MomentTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_doc(json.load(fh))

    def to_json_doc(self) -> dict:
        return {
            "degree_cap": self.degree_cap,
            "moments": {
                word_str(w): [v.real, v.imag] for w, v in sorted(
                    self._table.items(), key=lambda item: word_str(item[0])
                )
            },
        }

    def tau(self, w: Word) -> complex:
        _check_pure_b(w)
        if not w:
            return 1 + 0j
        if len(w) > self.degree_cap:
            raise DegreeExceededError(
                f"word degree {len(w)} exceeds table cap {self.degree_cap}"
            )
        canon = min_cyclic_rotation(w)
        if canon in self._table:
            return self._table[canon]
        conj_key = min_cyclic_rotation(word_adjoint(w))
        if conj_key in self._table:
            return self._table[conj_key].conjugate()
        raise DegreeExceededError(f"no table entry for {word_str(w)}")


class TraceMatrixState(TracialState):
    """Concrete matrix model: the state is the normalized trace."""

    def __init__(self, matrices: Mapping[int, np.ndarray]):
        if not matrices:
            raise ValueError("matrix model needs at least one generator")
        mats = {}
        dim = None
        for index, mat in matrices.items():
            arr = np.asarray(mat, dtype=complex)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise DimensionMismatchError("state matrices must be square")
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise DimensionMismatchError("state matrices must share one dimension")
            mats[int(index)] = arr
        self.matrices = mats
        self.dim = dim
        self._cache: dict[Word, complex] = {}

    def tau(self, w: Word) -> complex:
        _check_pure_b(w)
        if not w:
            return 1 + 0j
        cached = self._cache.get(w)
        if cached is not None:
            return cached
        prod = np.eye(self.dim, dtype=complex)
        for letter in w:
            if letter.index not in self.matrices:
                raise NotInDomainError(f"no matrix for generator {letter.label()}")
            mat = self.matrices[letter.index]
            prod = prod @ (mat.conj().T if letter.star else mat)
        value = complex(np.trace(prod)) / self.dim
        self._cache[w] = value
        return value


def tau_eval(state: TracialState, w: Word) -> complex:
    """State value of a pure-B word (the unit word evaluates to 1)."""
    return state.tau(tuple(w))


# ---------------------------------------------------------------------------
# trace-class models for the A-family
# ---------------------------------------------------------------------------


class TraceClassModel:
    """Evaluator of the tracial weight on pure-A words, plus numeric truncations."""

    truncation: int | None

    def indices(self) -> set:
        raise NotImplementedError

    def omega(self, w: Word) -> complex:
        raise NotImplementedError

    def realization(self, index: int, size: int | None = None) -> np.ndarray:
        raise NotImplementedError


def _check_pure_a_nonempty(w: Word) -> None:
    if not w:
        raise NotInDomainError("the unit word is not in the domain of the weight")
    if not is_pure(w, FAMILY_A):
        raise NotInDomainError(f"weight is defined on pure-A words only: {word_str(w)}")


class SpectrumFamily(TraceClassModel):
    """Commuting family of selfadjoint generators, simultaneously diagonal.

    Each generator carries its own eigenvalue sequence; words evaluate as
    entrywise products of the sequences.  All spectra must agree on the
    truncation count, or all be analytic geometric sequences.
    """

    def __init__(self, spectra: Mapping[int, Spectrum]):
        if not spectra:
            raise ValueError("spectrum family needs at least one generator")
        self.spectra = {int(i): s for i, s in spectra.items()}
        counts = {s.count for s in self.spectra.values()}
        if len(counts) > 1:
            raise DimensionMismatchError(
                "all spectra in a family must share one truncation count"
            )
        self.truncation = counts.pop()

    def indices(self) -> set:
        return set(self.spectra)

    def _spectrum(self, index: int) -> Spectrum:
        spec = self.spectra.get(index)
        if spec is None:
            raise NotInDomainError(f"no spectrum for generator index {index}")
        return spec

    def omega(self, w: Word) -> complex:
        _check_pure_a_nonempty(w)
        for letter in w:
            self._spectrum(letter.index)
        if self.truncation is None:
            scale = 1.0
            ratio = 1.0
            for letter in w:
                spec = self.spectra[letter.index]
                scale *= spec.scale
                ratio *= spec.ratio
            return complex(scale / (1.0 - ratio))
        vals = np.ones(self.truncation)
        for letter in w:
            vals = vals * self.spectra[letter.index].eigenvalues(self.truncation)
        return complex(np.sum(vals))

    def realization(self, index: int, size: int | None = None) -> np.ndarray:
        spec = self._spectrum(index)
        n = size if size is not None else self.truncation
        if n is None:
            raise ValueError("analytic spectra need an explicit truncation to realize")
        return np.diag(spec.eigenvalues(n)).astype(complex)


class MatrixTraceFamily(TraceClassModel):
    """Concrete matrix family; the weight is the unnormalized trace.

    Hermitian matrices give the selfadjoint semantics the recipes expect,
    but general square matrices are accepted for oracle cross-checks.
    """

    def __init__(self, matrices: Mapping[int, np.ndarray]):
        if not matrices:
            raise ValueError("matrix family needs at least one generator")
        mats = {}
        dim = None
        for index, mat in matrices.items():
            arr = np.asarray(mat, dtype=complex)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise DimensionMismatchError("family matrices must be square")
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise DimensionMismatchError("family matrices must share one dimension")
            mats[int(index)] = arr
        self.matrices = mats
        self.truncation = dim

    def indices(self) -> set:
        return set(self.matrices)

    def omega(self, w: Word) -> complex:
        _check_pure_a_nonempty(w)
        prod = np.eye(self.truncation, dtype=complex)
        for letter in w:
            if letter.index not in self.matrices:
                raise NotInDomainError(f"no matrix for generator {letter.label()}")
            mat = self.matrices[letter.index]
            prod = prod @ (mat.conj().T if letter.star else mat)
        return complex(np.trace(prod))

    def realization(self, index: int, size: int | None = None) -> np.ndarray:
        if index not in self.matrices:
            raise NotInDomainError(f"no matrix for generator index {index}")
        mat = self.matrices[index]
        if size is not None and size != mat.shape[0]:
            raise DimensionMismatchError(
                f"matrix generator has dimension {mat.shape[0]}, not {size}"
            )
        return mat


class HaarConjugatedFamily(TraceClassModel):
    """Limit model of independently rotated copies with given spectra.

    Mixed words (two or more distinct generator indices) evaluate to exactly
    0, the limiting value; single-generator words evaluate through the
    spectrum power sums.  Numeric realizations conjugate each truncated
    diagonal by a fixed seeded Haar unitary (the lowest index is left
    unrotated, which is a global-basis choice that leaves every prediction
    spectrum unchanged).
    """

    def __init__(self, spectra: Mapping[int, Spectrum], realization_seed: int = 0):
        if not spectra:
            raise ValueError("family needs at least one generator")
        self.spectra = {int(i): s for i, s in spectra.items()}
        counts = {s.count for s in self.spectra.values()}
        if len(counts) > 1:
            raise DimensionMismatchError(
                "all spectra in a family must share one truncation count"
            )
        self.truncation = counts.pop()
        self.realization_seed = int(realization_seed)
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def indices(self) -> set:
        return set(self.spectra)

    def omega(self, w: Word) -> complex:
        _check_pure_a_nonempty(w)
        seen = set()
        for letter in w:
            if letter.index not in self.spectra:
                raise NotInDomainError(f"no spectrum for generator {letter.label()}")
            seen.add(letter.index)
        if len(seen) > 1:
            return 0j
        index = seen.pop()
        return complex(self.spectra[index].power_sum(len(w)))

    def realization(self, index: int, size: int | None = None) -> np.ndarray:
        if index not in self.spectra:
            raise NotInDomainError(f"no spectrum for generator index {index}")
        n = size if size is not None else self.truncation
        if n is None:
            raise ValueError("analytic spectra need an explicit truncation to realize")
        key = (index, n)
        if key not in self._cache:
            diag = np.diag(self.spectra[index].eigenvalues(n)).astype(complex)
            if index == min(self.spectra):
                self._cache[key] = diag
            else:
                rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=self.realization_seed, spawn_key=(index,))
                )
                u = sample_haar_unitary(n, rng)
                self._cache[key] = u @ diag @ u.conj().T
        return self._cache[key]


def omega_a_eval(model: TraceClassModel, w: Word) -> complex:
    """Weight of a nonempty pure-A word."""
    return model.omega(tuple(w))


# ---------------------------------------------------------------------------
# the cyclic-monotone moment oracle
# ---------------------------------------------------------------------------


def cm_moment(w: Word, a_model: TraceClassModel, b_state: TracialState) -> complex:
    """Mixed moment of a word through the factorization formula.

    The word is decomposed into maximal runs; a leading B-run is rotated into
    the trailing one by traciality.  The value is the weight of the A-letters
    in order, times the product of the state values of the B-runs.
    """
    w = tuple(w)
    if not any(letter.family == FAMILY_A for letter in w):
        raise NotInDomainError(
            f"word {word_str(w)} contains no A-letter, so it lies outside the weight domain"
        )
    form = alternating_form(w)
    a_word: list[Letter] = []
    value = 1 + 0j
    blocks = form.blocks
    for pos, (a_block, b_block) in enumerate(blocks):
        a_word.extend(a_block)
        run = b_block + form.leading_b if pos == len(blocks) - 1 else b_block
        if run:
            value *= b_state.tau(run)
    return value * a_model.omega(tuple(a_word))


def poly_moment(p, m: int, a_model: TraceClassModel, b_state: TracialState) -> complex:
    """Linear extension of :func:`cm_moment` over the expansion of ``p**m``."""
    if m < 1:
        raise ValueError("moment order must be >= 1")
    expanded = p**m
    total = 0j
    for word, coeff in expanded.sorted_terms():
        total += coeff * cm_moment(word, a_model, b_state)
    return total


def collapse_internal_b_runs(w: Word, b_state: TracialState) -> tuple[complex, Word]:
    """Replace each interior maximal B-run of ``w`` by its state value.

    ``w`` must begin and end with A-letters.  Returns the scalar product of
    the collapsed state values and the concatenated A-letters; seen as a
    composite A-element, the replacement leaves every mixed moment unchanged.
    """
    w = tuple(w)
    if not w or w[0].family != FAMILY_A or w[-1].family != FAMILY_A:
        raise NotInDomainError(
            "collapse requires a word that begins and ends with A-letters"
        )
    form = alternating_form(w)
    scalar = 1 + 0j
    reduced: list[Letter] = []
    for a_block, b_block in form.blocks:
        reduced.extend(a_block)
        if b_block:
            scalar *= b_state.tau(b_block)
    return scalar, tuple(reduced)


class CompositeFamily(TraceClassModel):
    """Derived A-generators of the form ``a-word . c-word . (a-word)*``.

    Registered composites behave like ordinary A-letters; their moments are
    evaluated by expanding the definitions and handing the mixed word to the
    oracle.  Base-family generators pass through unchanged, so composite and
    original letters can be mixed freely in one word.
    """

    def __init__(self, base: TraceClassModel, b_state: TracialState):
        self.base = base
        self.b_state = b_state
        self._defs: dict[int, Word] = {}
        base_indices = base.indices()
        self._next_index = max(base_indices, default=0) + 1
        self.truncation = base.truncation

    def indices(self) -> set:
        return self.base.indices() | set(self._defs)

    def register(self, a_word: Word, c_word: Word) -> Letter:
        """Register ``a_word * c_word * adjoint(a_word)`` as a new A-generator."""
        a_word = tuple(a_word)
        c_word = tuple(c_word)
        if not a_word or not is_pure(a_word, FAMILY_A):
            raise NotInDomainError("composite needs a nonempty pure-A left factor")
        if not is_pure(c_word, FAMILY_B):
            raise NotInDomainError("composite core must be a pure-B word (or the unit)")
        index = self._next_index
        self._next_index += 1
        self._defs[index] = a_word + c_word + word_adjoint(a_word)
        return Letter(FAMILY_A, index)

    def definition(self, index: int) -> Word:
        return self._defs[index]

    def omega(self, w: Word) -> complex:
        _check_pure_a_nonempty(w)
        expanded: list[Letter] = []
        for letter in w:
            if letter.index in self._defs:
                body = self._defs[letter.index]
                expanded.extend(word_adjoint(body) if letter.star else body)
            else:
                expanded.append(letter)
        return cm_moment(tuple(expanded), self.base, self.b_state)

    def realization(self, index: int, size: int | None = None) -> np.ndarray:
        if index in self._defs:
            raise NotInDomainError(
                "composite generators carry no direct numeric realization"
            )
        return self.base.realization(index, size)


def conjugate_composite(family: CompositeFamily, a_word: Word, c_word: Word) -> Letter:
    """Register a conjugated composite generator on ``family`` and return its letter."""
    return family.register(a_word, c_word)
