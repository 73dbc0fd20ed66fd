"""Words and noncommutative *-polynomials over two generator families.

Generators split into an A-family (trace-class side) and a B-family (state
side).  Words are tuples of :class:`Letter`; polynomials are canonical
word-to-coefficient maps.  A small expression grammar provides the text
front end used by the CLI and by moment-table documents::

    expr   := ('+'|'-')? term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := scalar | generator | generator "'" | '(' expr ')'

Scalars are decimal literals or the imaginary unit token ``i``; a trailing
apostrophe marks the adjoint of a generator.  The leading sign is accepted
as a convenience on top of the core grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

FAMILY_A = "a"
FAMILY_B = "b"


class Letter(NamedTuple):
    """A single generator occurrence: family, 1-based index, adjoint flag."""

    family: str
    index: int
    star: bool = False

    def adjoint(self) -> "Letter":
        return self._replace(star=not self.star)

    def base(self) -> "Letter":
        return self._replace(star=False)

    def label(self) -> str:
        return f"{self.family}{self.index}" + ("'" if self.star else "")


def a_gen(index: int, star: bool = False) -> Letter:
    """A-family generator with ``index >= 1``."""
    if index < 1:
        raise ValueError("generator index must be >= 1")
    return Letter(FAMILY_A, index, star)


def b_gen(index: int, star: bool = False) -> Letter:
    """B-family generator with ``index >= 1``."""
    if index < 1:
        raise ValueError("generator index must be >= 1")
    return Letter(FAMILY_B, index, star)


# A word is a tuple of letters; the empty tuple is the unit.
Word = tuple  # tuple[Letter, ...]

UNIT: Word = ()


def word_adjoint(w: Word) -> Word:
    return tuple(letter.adjoint() for letter in reversed(w))


def word_key(w: Word):
    """Sort key implementing the canonical letter-lexicographic term order."""
    return tuple((letter.family, letter.index, letter.star) for letter in w)


def min_cyclic_rotation(w: Word) -> Word:
    """Lexicographically smallest rotation of ``w`` (used for tracial lookup)."""
    if len(w) < 2:
        return w
    rotations = (w[j:] + w[:j] for j in range(len(w)))
    return min(rotations, key=word_key)


def word_families(w: Word) -> set:
    return {letter.family for letter in w}


def is_pure(w: Word, family: str) -> bool:
    return all(letter.family == family for letter in w)


def word_str(w: Word) -> str:
    if not w:
        return "1"
    return "*".join(letter.label() for letter in w)


def _format_real(x: float) -> str:
    if abs(x) < 1e15 and x == int(x):
        return str(int(x))
    return repr(x)


def _format_coefficient(c: complex) -> tuple[str, str]:
    """Return (sign, factor_text); factor_text is '' when the factor is 1."""
    re_, im = c.real, c.imag
    if im == 0:
        sign = "-" if re_ < 0 else "+"
        mag = abs(re_)
        return sign, "" if mag == 1 else _format_real(mag)
    if re_ == 0:
        sign = "-" if im < 0 else "+"
        mag = abs(im)
        return sign, "i" if mag == 1 else f"{_format_real(mag)}*i"
    inner_sign = "+" if im > 0 else "-"
    text = f"({_format_real(re_)}{inner_sign}{_format_real(abs(im))}*i)"
    return "+", text


class NCPolynomial:
    """Finite complex-linear combination of words, stored canonically.

    Zero coefficients are never stored, so two equal polynomials have
    identical term maps.  Instances are immutable by convention; all
    arithmetic returns new objects.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Word, complex] | None = None):
        collected: dict[Word, complex] = {}
        if terms:
            for word, coeff in terms.items():
                c = complex(coeff)
                if c != 0:
                    acc = collected.get(word, 0j) + c
                    if acc == 0:
                        collected.pop(word, None)
                    else:
                        collected[word] = acc
        self.terms = collected

    @classmethod
    def zero(cls) -> "NCPolynomial":
        return cls()

    @classmethod
    def scalar(cls, c: complex) -> "NCPolynomial":
        return cls({UNIT: c})

    @classmethod
    def one(cls) -> "NCPolynomial":
        return cls.scalar(1)

    @classmethod
    def from_word(cls, word: Iterable[Letter], coeff: complex = 1) -> "NCPolynomial":
        return cls({tuple(word): coeff})

    @classmethod
    def from_letter(cls, letter: Letter) -> "NCPolynomial":
        return cls({(letter,): 1})

    def sorted_terms(self) -> list[tuple[Word, complex]]:
        """Terms in the canonical order (deterministic iteration)."""
        return sorted(self.terms.items(), key=lambda item: word_key(item[0]))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def contains_unit(self) -> bool:
        return UNIT in self.terms

    def families(self) -> set:
        fams: set = set()
        for word in self.terms:
            fams |= word_families(word)
        return fams

    def adjoint(self) -> "NCPolynomial":
        return NCPolynomial(
            {word_adjoint(w): complex(c).conjugate() for w, c in self.terms.items()}
        )

    def __add__(self, other) -> "NCPolynomial":
        other = _coerce(other)
        out = dict(self.terms)
        for word, coeff in other.terms.items():
            acc = out.get(word, 0j) + coeff
            if acc == 0:
                out.pop(word, None)
            else:
                out[word] = acc
        result = NCPolynomial.zero()
        result.terms = out
        return result

    __radd__ = __add__

    def __neg__(self) -> "NCPolynomial":
        return NCPolynomial({w: -c for w, c in self.terms.items()})

    def __sub__(self, other) -> "NCPolynomial":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "NCPolynomial":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "NCPolynomial":
        if isinstance(other, (int, float, complex)):
            return NCPolynomial({w: c * other for w, c in self.terms.items()})
        other = _coerce(other)
        out: dict[Word, complex] = {}
        for wu, cu in self.terms.items():
            for wv, cv in other.terms.items():
                word = wu + wv
                acc = out.get(word, 0j) + cu * cv
                if acc == 0:
                    out.pop(word, None)
                else:
                    out[word] = acc
        result = NCPolynomial.zero()
        result.terms = out
        return result

    def __rmul__(self, other) -> "NCPolynomial":
        if isinstance(other, (int, float, complex)):
            return self * other
        return _coerce(other) * self

    def __pow__(self, m: int) -> "NCPolynomial":
        return power(self, m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NCPolynomial):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def __repr__(self) -> str:
        return f"NCPolynomial({format_expression(self)!r})"

    def __str__(self) -> str:
        return format_expression(self)


def _coerce(value) -> NCPolynomial:
    if isinstance(value, NCPolynomial):
        return value
    if isinstance(value, (int, float, complex)):
        return NCPolynomial.scalar(value)
    raise TypeError(f"cannot combine NCPolynomial with {type(value).__name__}")


def multiply(p: NCPolynomial, q: NCPolynomial) -> NCPolynomial:
    """Bilinear word-concatenation product."""
    return p * q


def power(p: NCPolynomial, m: int) -> NCPolynomial:
    if m < 1:
        raise ValueError("power exponent must be >= 1")
    out = p
    for _ in range(m - 1):
        out = out * p
    return out


def adjoint(p: NCPolynomial) -> NCPolynomial:
    return p.adjoint()


def is_selfadjoint(p: NCPolynomial, selfadjoint_generators: Iterable[Letter] | None = None) -> bool:
    """True iff ``p* == p`` after rewriting ``x* -> x`` for the given generators.

    ``selfadjoint_generators`` is a collection of letters (adjoint flags are
    ignored); ``None`` declares every generator selfadjoint.
    """
    if selfadjoint_generators is None:
        bases = None
    else:
        bases = {(letter.family, letter.index) for letter in selfadjoint_generators}

    def rewrite(poly: NCPolynomial) -> NCPolynomial:
        out: dict[Word, complex] = {}
        for word, coeff in poly.terms.items():
            new = tuple(
                letter.base()
                if letter.star and (bases is None or (letter.family, letter.index) in bases)
                else letter
                for letter in word
            )
            acc = out.get(new, 0j) + coeff
            if acc == 0:
                out.pop(new, None)
            else:
                out[new] = acc
        result = NCPolynomial.zero()
        result.terms = out
        return result

    return rewrite(p) == rewrite(p.adjoint())


@dataclass(frozen=True)
class AlternatingForm:
    """Maximal-run decomposition ``leading_b . (a_block, b_block)*`` of a word."""

    leading_b: Word
    blocks: tuple  # tuple[tuple[Word, Word], ...]

    def reconstruct(self) -> Word:
        out = list(self.leading_b)
        for a_block, b_block in self.blocks:
            out.extend(a_block)
            out.extend(b_block)
        return tuple(out)


def alternating_form(w: Word) -> AlternatingForm:
    """Decompose a nonempty word into maximal A-runs and B-runs."""
    if not w:
        raise ValueError("alternating_form requires a nonempty word")
    runs: list[tuple[str, list[Letter]]] = []
    for letter in w:
        if runs and runs[-1][0] == letter.family:
            runs[-1][1].append(letter)
        else:
            runs.append((letter.family, [letter]))
    leading_b: Word = UNIT
    idx = 0
    if runs[0][0] == FAMILY_B:
        leading_b = tuple(runs[0][1])
        idx = 1
    blocks = []
    while idx < len(runs):
        a_block = tuple(runs[idx][1])
        idx += 1
        if idx < len(runs) and runs[idx][0] == FAMILY_B:
            b_block = tuple(runs[idx][1])
            idx += 1
        else:
            b_block = UNIT
        blocks.append((a_block, b_block))
    return AlternatingForm(leading_b=leading_b, blocks=tuple(blocks))


# ---------------------------------------------------------------------------
# expression parsing
# ---------------------------------------------------------------------------


class ExpressionSyntaxError(ValueError):
    """Malformed expression text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownSymbolError(ValueError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown generator {name!r} (at position {position})")
        self.name = name
        self.position = position


class EmptyInputError(ValueError):
    def __init__(self):
        super().__init__("empty expression")


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[+\-*()'])"
    r")"
)

_GENERATOR_NAME_RE = re.compile(r"^([ab])([0-9]+)$")


def make_symbols(a: Iterable[str] = (), b: Iterable[str] = ()) -> dict[str, Letter]:
    """Build a symbol table; indices are assigned positionally from 1."""
    table: dict[str, Letter] = {}
    for family, names in ((FAMILY_A, a), (FAMILY_B, b)):
        for pos, name in enumerate(names, start=1):
            if name in table:
                raise ValueError(f"duplicate generator name {name!r}")
            table[name] = Letter(family, pos)
    return table


def auto_symbols(text: str) -> dict[str, Letter]:
    """Declare every identifier of the form ``a<k>``/``b<k>`` found in ``text``."""
    table: dict[str, Letter] = {}
    for match in re.finditer(r"[A-Za-z_][A-Za-z_0-9]*", text):
        name = match.group(0)
        m = _GENERATOR_NAME_RE.match(name)
        if m and name not in table:
            index = int(m.group(2))
            if index >= 1:
                table[name] = Letter(m.group(1), index)
    return table


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            match = _TOKEN_RE.match(text, pos)
            if match is None or match.end() == pos:
                stripped = text[pos:].lstrip()
                if not stripped:
                    break
                bad_at = len(text) - len(stripped)
                raise ExpressionSyntaxError(f"unexpected character {text[bad_at]!r}", bad_at)
            kind = match.lastgroup
            self.items.append((kind, match.group(kind), match.start(kind)))
            pos = match.end()
        self.cursor = 0

    def peek(self):
        if self.cursor < len(self.items):
            return self.items[self.cursor]
        return (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        self.cursor += 1
        return tok


def parse_expression(text: str, symbols: Mapping[str, Letter]) -> NCPolynomial:
    """Parse expression text into a canonical polynomial.

    Parameters
    ----------
    text :
        Expression in the module grammar.
    symbols :
        Mapping from generator names to letters (see :func:`make_symbols`,
        :func:`auto_symbols`).

    Raises
    ------
    EmptyInputError, ExpressionSyntaxError, UnknownSymbolError
    """
    if not text or not text.strip():
        raise EmptyInputError()
    tokens = _Tokens(text)
    result = _parse_expr(tokens, symbols)
    kind, value, pos = tokens.peek()
    if kind is not None:
        raise ExpressionSyntaxError(f"unexpected token {value!r}", pos)
    return result


def _parse_expr(tokens: _Tokens, symbols) -> NCPolynomial:
    sign = 1
    kind, value, _ = tokens.peek()
    if kind == "op" and value in "+-":
        tokens.next()
        sign = -1 if value == "-" else 1
    result = _parse_term(tokens, symbols) * sign
    while True:
        kind, value, _ = tokens.peek()
        if kind == "op" and value in "+-":
            tokens.next()
            term = _parse_term(tokens, symbols)
            result = result + (term if value == "+" else -term)
        else:
            return result


def _parse_term(tokens: _Tokens, symbols) -> NCPolynomial:
    result = _parse_factor(tokens, symbols)
    while True:
        kind, value, _ = tokens.peek()
        if kind == "op" and value == "*":
            tokens.next()
            result = result * _parse_factor(tokens, symbols)
        else:
            return result


def _parse_factor(tokens: _Tokens, symbols) -> NCPolynomial:
    kind, value, pos = tokens.next()
    if kind == "number":
        return NCPolynomial.scalar(float(value))
    if kind == "name":
        if value == "i":
            return NCPolynomial.scalar(1j)
        letter = symbols.get(value)
        if letter is None:
            raise UnknownSymbolError(value, pos)
        nkind, nvalue, _ = tokens.peek()
        if nkind == "op" and nvalue == "'":
            tokens.next()
            letter = letter.adjoint()
        return NCPolynomial.from_letter(letter)
    if kind == "op" and value == "(":
        inner = _parse_expr(tokens, symbols)
        ckind, cvalue, cpos = tokens.next()
        if not (ckind == "op" and cvalue == ")"):
            raise ExpressionSyntaxError("expected ')'", cpos)
        return inner
    raise ExpressionSyntaxError(
        f"expected scalar, generator or '(' but found {value!r}" if kind else "unexpected end of input",
        pos,
    )


def format_expression(p: NCPolynomial) -> str:
    """Render a polynomial in the grammar; parses back to an equal polynomial."""
    if p.is_zero():
        return "0"
    pieces: list[str] = []
    for word, coeff in p.sorted_terms():
        sign, factor = _format_coefficient(coeff)
        if not word:
            body = factor if factor else "1"
        elif factor:
            body = f"{factor}*{word_str(word)}"
        else:
            body = word_str(word)
        if not pieces:
            pieces.append(body if sign == "+" else f"-{body}")
        else:
            pieces.append(f" {sign} {body}")
    return "".join(pieces)


def words_of(p: NCPolynomial) -> Iterator[Word]:
    for word, _ in p.sorted_terms():
        yield word
