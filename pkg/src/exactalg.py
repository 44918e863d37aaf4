"""
Exact arithmetic substrate: homogeneous polynomials in x, y, z over Q,
linear algebra over Q, and Smith/Hermite normal forms over Z.

Polynomials live in a sparse sympy ring with graded-lexicographic order;
everything exposed to callers is a Fraction or a plain int.
"""

import logging
import operator
from dataclasses import dataclass
from fractions import Fraction
from math import floor, gcd, lcm, log10, perm
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from sympy import SympifyError, sympify
from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.orderings import grlex
from sympy.polys.polyerrors import ExactQuotientFailed
from sympy.polys.rings import PolyElement, ring

logger = logging.getLogger(__name__)

Monomial = Tuple[int, int, int]
RationalVector = Tuple[Fraction, ...]
IntVector = Tuple[int, ...]

RING, _X, _Y, _Z = ring("x,y,z", QQ, grlex)

_LOG10_2 = log10(2)


def to_qq(value) -> Any:
    """Convert an int or Fraction to a sympy QQ element."""
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def from_qq(value) -> Fraction:
    """Convert a sympy QQ (or ZZ) element to a Fraction."""
    return Fraction(int(value.numerator), int(value.denominator))


def dim(k: int) -> int:
    """Number of monomials of degree k in three variables."""
    return (k + 2) * (k + 1) // 2


def monomials(k: int) -> List[Monomial]:
    """Exponent triples of degree k, graded-lex descending."""
    return [
        (a, b, k - a - b)
        for a in range(k, -1, -1)
        for b in range(k - a, -1, -1)
    ]


def _total_degree(poly: PolyElement) -> int:
    return sum(next(iter(poly.itermonoms())))


class PowerCache:
    """
    Products P^a Q^b R^c for a fixed triple, built incrementally.

    Works over any ring whose elements are combined with `mul`; the modular
    filter uses it with dense GF(p) lists.
    """

    def __init__(self, triple: Sequence[Any], one: Any,
                 mul: Callable[[Any, Any], Any] = operator.mul):
        self._triple = tuple(triple)
        self._powers = [[one] for _ in range(3)]
        self._pairs: Dict[Tuple[int, int], Any] = {}
        self._mul = mul

    def power(self, i: int, k: int) -> Any:
        powers = self._powers[i]
        while len(powers) <= k:
            powers.append(self._mul(powers[-1], self._triple[i]))
        return powers[k]

    def image(self, a: int, b: int, c: int) -> Any:
        pair = self._pairs.get((a, b))
        if pair is None:
            pair = self._mul(self.power(0, a), self.power(1, b))
            self._pairs[(a, b)] = pair
        if c == 0:
            return pair
        return self._mul(pair, self.power(2, c))


class HomPoly3:
    """
    A homogeneous polynomial in x, y, z with exact rational coefficients.

    Coefficients are stored over QQ as given; sympy keeps them reduced but
    no content is factored out. integral_scale() gives the scalar that
    turns the polynomial into coprime integers with a positive leading
    coefficient, and PlaneBirationalMap.integral_components() does the same
    for a whole triple. Exact gcd and composition run on the QQ form.

    The zero polynomial keeps an explicit degree tag so that zero components
    of a map still know their degree.
    """

    __slots__ = ("_poly", "_deg")

    def __init__(self, poly: PolyElement, deg: Optional[int] = None):
        if poly.ring != RING:
            raise ValueError("polynomial must belong to the QQ[x,y,z] ring")
        if not poly:
            if deg is None or deg < 0:
                raise ValueError("the zero polynomial needs an explicit degree")
        else:
            degrees = {sum(m) for m in poly.itermonoms()}
            if len(degrees) != 1:
                raise ValueError("polynomial is not homogeneous")
            actual = degrees.pop()
            if deg is not None and deg != actual:
                raise ValueError(f"degree tag {deg} does not match degree {actual}")
            deg = actual
        self._poly = poly
        self._deg = deg

    @classmethod
    def _wrap(cls, poly: PolyElement, deg: int) -> "HomPoly3":
        obj = object.__new__(cls)
        obj._poly = poly
        obj._deg = deg
        return obj

    # construction

    @classmethod
    def zero(cls, deg: int) -> "HomPoly3":
        return cls(RING.zero, deg)

    @classmethod
    def constant(cls, value) -> "HomPoly3":
        return cls._wrap(RING.ground_new(to_qq(value)), 0)

    @classmethod
    def gens(cls) -> Tuple["HomPoly3", "HomPoly3", "HomPoly3"]:
        return (cls._wrap(_X, 1), cls._wrap(_Y, 1), cls._wrap(_Z, 1))

    @classmethod
    def monomial(cls, exponents: Monomial, coeff=1) -> "HomPoly3":
        return cls.from_terms({tuple(exponents): coeff})

    @classmethod
    def from_terms(cls, terms: Dict[Monomial, Any], deg: Optional[int] = None) -> "HomPoly3":
        """Build from a mapping exponent triple -> rational coefficient."""
        data = {}
        for exps, coeff in terms.items():
            value = Fraction(coeff)
            if value:
                data[tuple(int(e) for e in exps)] = to_qq(value)
        return cls(RING.from_dict(data) if data else RING.zero, deg)

    @classmethod
    def parse(cls, text: str, deg: Optional[int] = None) -> "HomPoly3":
        """Parse a polynomial expression in x, y, z such as "y**2 - x*z"."""
        try:
            poly = RING.from_expr(sympify(text))
        except (SympifyError, ValueError, TypeError) as exc:
            raise ValueError(f"cannot parse polynomial {text!r}") from exc
        return cls(poly, deg)

    # accessors

    @property
    def deg(self) -> int:
        return self._deg

    @property
    def poly(self) -> PolyElement:
        return self._poly

    @property
    def is_zero(self) -> bool:
        return not self._poly

    def terms(self) -> List[Tuple[Monomial, Fraction]]:
        """Nonzero terms in graded-lex descending order."""
        return [(m, from_qq(c)) for m, c in self._poly.terms()]

    def coefficient(self, exponents: Monomial) -> Fraction:
        return from_qq(self._poly.get(tuple(exponents), QQ.zero))

    @property
    def leading_coefficient(self) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return from_qq(self._poly.LC)

    def __len__(self) -> int:
        return len(self._poly)

    # arithmetic

    def _check_same_degree(self, other: "HomPoly3") -> None:
        if self._deg != other._deg:
            raise ValueError(f"degree mismatch: {self._deg} vs {other._deg}")

    def __add__(self, other):
        if not isinstance(other, HomPoly3):
            return NotImplemented
        self._check_same_degree(other)
        return HomPoly3._wrap(self._poly + other._poly, self._deg)

    def __sub__(self, other):
        if not isinstance(other, HomPoly3):
            return NotImplemented
        self._check_same_degree(other)
        return HomPoly3._wrap(self._poly - other._poly, self._deg)

    def __neg__(self):
        return HomPoly3._wrap(-self._poly, self._deg)

    def __mul__(self, other):
        if isinstance(other, HomPoly3):
            return HomPoly3._wrap(self._poly * other._poly, self._deg + other._deg)
        if isinstance(other, (int, Fraction)):
            return HomPoly3._wrap(self._poly.mul_ground(to_qq(other)), self._deg)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.__mul__(other)
        return NotImplemented

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("exponent must be a non-negative integer")
        return HomPoly3._wrap(self._poly ** exponent, self._deg * exponent)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomPoly3):
            return NotImplemented
        return self._deg == other._deg and self._poly == other._poly

    def __hash__(self) -> int:
        return hash((self._deg, frozenset(self._poly.items())))

    def monic(self) -> "HomPoly3":
        """Scale so the graded-lex leading coefficient is 1."""
        if self.is_zero:
            return self
        return HomPoly3._wrap(self._poly.monic(), self._deg)

    def exquo(self, other: "HomPoly3") -> "HomPoly3":
        """Exact quotient; ValueError if other does not divide self."""
        if other.is_zero:
            raise ValueError("division by the zero polynomial")
        deg = self._deg - other._deg
        if deg < 0:
            raise ValueError("divisor has larger degree")
        if self.is_zero:
            return HomPoly3.zero(deg)
        try:
            quotient = self._poly.exquo(other._poly)
        except ExactQuotientFailed as exc:
            raise ValueError("inexact polynomial division") from exc
        return HomPoly3._wrap(quotient, deg)

    def divides(self, other: "HomPoly3") -> bool:
        try:
            other.exquo(self)
        except ValueError:
            return False
        return True

    def diff(self, var: int) -> "HomPoly3":
        """Partial derivative with respect to x (0), y (1) or z (2)."""
        if self._deg == 0:
            raise ValueError("cannot differentiate a degree-0 polynomial homogeneously")
        return HomPoly3._wrap(self._poly.diff(RING.gens[var]), self._deg - 1)

    def evaluate(self, point: Sequence) -> Fraction:
        """Value at a point with rational coordinates."""
        coords = [Fraction(c) for c in point]
        total = Fraction(0)
        for (a, b, c), coeff in self._poly.items():
            total += from_qq(coeff) * coords[0] ** a * coords[1] ** b * coords[2] ** c
        return total

    def integral_scale(self) -> Fraction:
        """
        Scalar s such that s*self has coprime integer coefficients and a
        positive leading coefficient.
        """
        if self.is_zero:
            return Fraction(1)
        coeffs = [from_qq(c) for c in self._poly.values()]
        den = lcm(*(c.denominator for c in coeffs))
        num = gcd(*(c.numerator for c in coeffs))
        scale = Fraction(den, num)
        if self.leading_coefficient < 0:
            scale = -scale
        return scale

    def coefficient_digits(self) -> int:
        """Approximate number of decimal digits stored in the coefficients."""
        bits = 0
        for coeff in self._poly.values():
            bits += int(coeff.numerator).bit_length() + int(coeff.denominator).bit_length()
        return int(bits * _LOG10_2) + len(self._poly)

    def reduce_mod(self, p: int) -> Optional[Dict[Monomial, int]]:
        """Coefficients mod p, or None if p divides a denominator."""
        reduced = {}
        for exps, coeff in self._poly.items():
            den = int(coeff.denominator)
            if den % p == 0:
                return None
            value = int(coeff.numerator) * pow(den, -1, p) % p
            if value:
                reduced[exps] = value
        return reduced

    # serialization

    def to_json(self) -> List[List[int]]:
        """[a, b, c, numerator, denominator] records in graded-lex order."""
        return [
            [a, b, c, int(coeff.numerator), int(coeff.denominator)]
            for (a, b, c), coeff in self._poly.terms()
        ]

    @classmethod
    def from_json(cls, records: Iterable[Sequence[int]], deg: Optional[int] = None) -> "HomPoly3":
        terms: Dict[Monomial, Fraction] = {}
        for record in records:
            if len(record) != 5:
                raise ValueError(f"malformed term record {record!r}")
            a, b, c, num, den = (int(v) for v in record)
            if min(a, b, c) < 0:
                raise ValueError(f"negative exponent in {record!r}")
            if den == 0:
                raise ValueError(f"zero denominator in {record!r}")
            terms[(a, b, c)] = terms.get((a, b, c), Fraction(0)) + Fraction(num, den)
        return cls.from_terms(terms, deg)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        return str(self._poly.as_expr())

    def __repr__(self) -> str:
        return f"HomPoly3({self}, deg={self._deg})"


def _common_degree(triple: Sequence[HomPoly3]) -> int:
    if len(triple) != 3:
        raise ValueError("expected three polynomials")
    degrees = {t.deg for t in triple}
    if len(degrees) != 1:
        raise ValueError(f"degree mismatch among substituted polynomials: {sorted(degrees)}")
    return degrees.pop()


def compose_raw(F: HomPoly3, cache: PowerCache) -> PolyElement:
    """F evaluated on the triple behind cache."""
    result = RING.zero
    for (a, b, c), coeff in F.poly.items():
        result = result + cache.image(a, b, c).mul_ground(coeff)
    return result


def poly_compose3(F: HomPoly3, triple: Sequence[HomPoly3]) -> HomPoly3:
    """
    Substitute (P, Q, R) for (x, y, z) in F.

    Args:
        F: Homogeneous polynomial of degree e
        triple: Three homogeneous polynomials of a common degree d

    Returns:
        HomPoly3: F(P, Q, R), homogeneous of degree e*d
    """
    d = _common_degree(triple)
    cache = PowerCache([t.poly for t in triple], RING.one)
    return HomPoly3._wrap(compose_raw(F, cache), F.deg * d)


def compose_triple(outer: Sequence[HomPoly3],
                   inner: Sequence[HomPoly3]) -> Tuple[HomPoly3, ...]:
    """Substitute inner into each polynomial of outer, sharing powers."""
    d = _common_degree(inner)
    cache = PowerCache([t.poly for t in inner], RING.one)
    return tuple(HomPoly3._wrap(compose_raw(F, cache), F.deg * d) for F in outer)


def monomial_images(k: int, inner: Sequence[HomPoly3]) -> List[HomPoly3]:
    """mu(P, Q, R) for every monomial mu of degree k, in monomials(k) order."""
    d = _common_degree(inner)
    cache = PowerCache([t.poly for t in inner], RING.one)
    return [HomPoly3._wrap(cache.image(a, b, c), k * d) for a, b, c in monomials(k)]


def poly_gcd(F: HomPoly3, G: HomPoly3) -> HomPoly3:
    """
    Greatest common divisor, monic in graded-lex order.

    Raises:
        ValueError: If both inputs are zero
    """
    if F.is_zero and G.is_zero:
        raise ValueError("gcd of two zero polynomials is undefined")
    if F.is_zero:
        h = G.poly
    elif G.is_zero:
        h = F.poly
    else:
        h = F.poly.gcd(G.poly)
    h = h.monic()
    return HomPoly3._wrap(h, _total_degree(h))


def poly_gcd_many(polys: Sequence[HomPoly3]) -> HomPoly3:
    """gcd of several polynomials, sparsest first, stopping at a constant."""
    nonzero = sorted((p for p in polys if not p.is_zero), key=len)
    if not nonzero:
        raise ValueError("gcd of zero polynomials is undefined")
    result = nonzero[0].monic()
    for poly in nonzero[1:]:
        if result.deg == 0:
            break
        result = poly_gcd(result, poly)
    return result


def derivative_row(exponents_list: Sequence[Monomial], order: Monomial,
                   point: Sequence) -> List[Fraction]:
    """
    Row of the condition "d^order F vanishes at point" in the monomial basis.

    Entry for x^a y^b z^c is the value of its (i, j, l)-th partial at point.
    """
    i, j, l = order
    coords = [Fraction(c) for c in point]
    row = []
    for a, b, c in exponents_list:
        if a < i or b < j or c < l:
            row.append(Fraction(0))
            continue
        factor = perm(a, i) * perm(b, j) * perm(c, l)
        row.append(factor * coords[0] ** (a - i) * coords[1] ** (b - j) * coords[2] ** (c - l))
    return row


# linear algebra over Q

@dataclass(frozen=True)
class QMatrix:
    """Rectangular matrix of exact rationals."""
    rows: int
    cols: int
    entries: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entries do not match the declared shape")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: Optional[int] = None) -> "QMatrix":
        data = tuple(tuple(Fraction(v) for v in row) for row in rows)
        if cols is None:
            if not data:
                raise ValueError("column count required for an empty matrix")
            cols = len(data[0])
        return cls(len(data), cols, data)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "QMatrix":
        return cls(rows, cols, tuple((Fraction(0),) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)], n)

    def __getitem__(self, index: Tuple[int, int]) -> Fraction:
        i, j = index
        return self.entries[i][j]

    def to_domain(self) -> DomainMatrix:
        return DomainMatrix(
            [[to_qq(v) for v in row] for row in self.entries],
            (self.rows, self.cols), QQ,
        )

    def rref(self) -> Tuple[List[List[Fraction]], Tuple[int, ...]]:
        """Reduced row echelon form and pivot columns."""
        if self.rows == 0 or self.cols == 0:
            return [list(r) for r in self.entries], ()
        reduced, pivots = self.to_domain().rref()
        table = [[from_qq(v) for v in row] for row in reduced.to_list()]
        return table, tuple(pivots)

    def rank(self) -> int:
        return len(self.rref()[1])

    def apply(self, vector: Sequence) -> RationalVector:
        vec = [Fraction(v) for v in vector]
        if len(vec) != self.cols:
            raise ValueError("vector length does not match column count")
        return tuple(sum((a * b for a, b in zip(row, vec)), Fraction(0)) for row in self.entries)

    def transpose(self) -> "QMatrix":
        return QMatrix.from_rows([list(col) for col in zip(*self.entries)], self.rows)

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        cols = list(zip(*other.entries))
        return QMatrix.from_rows(
            [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols]
             for row in self.entries],
            other.cols,
        )


def kernel_basis(M: QMatrix) -> List[RationalVector]:
    """
    Exact basis of the right kernel of M.

    One vector per non-pivot column of the reduced row echelon form, with
    a 1 in that column. Empty when M is injective.
    """
    if M.cols == 0:
        return []
    table, pivots = M.rref()
    pivot_set = set(pivots)
    basis = []
    for free in range(M.cols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * M.cols
        vec[free] = Fraction(1)
        for row, col in enumerate(pivots):
            vec[col] = -table[row][free]
        basis.append(tuple(vec))
    return basis


def solve_rational(A: QMatrix, b: Sequence) -> RationalVector:
    """Unique solution of A x = b; ValueError if singular or inconsistent."""
    rhs = [Fraction(v) for v in b]
    if len(rhs) != A.rows:
        raise ValueError("right-hand side length does not match row count")
    augmented = QMatrix.from_rows([list(row) + [v] for row, v in zip(A.entries, rhs)], A.cols + 1)
    table, pivots = augmented.rref()
    if A.cols in pivots:
        raise ValueError("inconsistent linear system")
    if len(pivots) != A.cols:
        raise ValueError("singular linear system")
    solution = [Fraction(0)] * A.cols
    for row, col in enumerate(pivots):
        solution[col] = table[row][A.cols]
    return tuple(solution)


def determinant(M: QMatrix) -> Fraction:
    if M.rows != M.cols:
        raise ValueError("determinant of a non-square matrix")
    if M.rows == 0:
        return Fraction(1)
    return from_qq(M.to_domain().det())


def is_positive_definite(G: QMatrix) -> bool:
    """Sylvester's criterion on a symmetric rational matrix."""
    if G.rows != G.cols or G != G.transpose():
        return False
    for k in range(1, G.rows + 1):
        minor = QMatrix.from_rows([row[:k] for row in G.entries[:k]], k)
        if determinant(minor) <= 0:
            return False
    return True


# linear algebra over Z

@dataclass(frozen=True)
class ZMatrix:
    """Rectangular integer matrix."""
    rows: int
    cols: int
    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entries do not match the declared shape")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: Optional[int] = None) -> "ZMatrix":
        data = []
        for row in rows:
            converted = []
            for v in row:
                if isinstance(v, Fraction):
                    if v.denominator != 1:
                        raise ValueError(f"non-integral entry {v}")
                    v = v.numerator
                converted.append(int(v))
            data.append(tuple(converted))
        if cols is None:
            if not data:
                raise ValueError("column count required for an empty matrix")
            cols = len(data[0])
        return cls(len(data), cols, tuple(data))

    @classmethod
    def identity(cls, n: int) -> "ZMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)], n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "ZMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    def __getitem__(self, index: Tuple[int, int]) -> int:
        i, j = index
        return self.entries[i][j]

    def __matmul__(self, other: "ZMatrix") -> "ZMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        cols = list(zip(*other.entries))
        return ZMatrix.from_rows(
            [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in self.entries],
            other.cols,
        )

    def apply(self, vector: Sequence[int]) -> IntVector:
        if len(vector) != self.cols:
            raise ValueError("vector length does not match column count")
        return tuple(sum(a * b for a, b in zip(row, vector)) for row in self.entries)

    def transpose(self) -> "ZMatrix":
        return ZMatrix.from_rows([list(col) for col in zip(*self.entries)], self.rows)

    def column(self, j: int) -> IntVector:
        return tuple(row[j] for row in self.entries)

    def to_qmatrix(self) -> QMatrix:
        return QMatrix.from_rows(self.entries, self.cols)

    def det(self) -> int:
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        if self.rows == 0:
            return 1
        return int(DomainMatrix([[ZZ(v) for v in row] for row in self.entries],
                                (self.rows, self.cols), ZZ).det())

    def inverse(self) -> "ZMatrix":
        """Inverse of a unimodular matrix."""
        if self.rows != self.cols or abs(self.det()) != 1:
            raise ValueError("matrix is not unimodular")
        inv = self.to_qmatrix().to_domain().inv()
        return ZMatrix.from_rows([[from_qq(v) for v in row] for row in inv.to_list()], self.cols)


def smith_normal_form(M: ZMatrix) -> Tuple[ZMatrix, ZMatrix, ZMatrix]:
    """
    Smith normal form with transforms.

    Returns:
        Tuple[ZMatrix, ZMatrix, ZMatrix]: (U, S, V) with U*M*V = S, U and V
        unimodular, S diagonal with nonnegative entries each dividing the next
    """
    m, n = M.rows, M.cols
    a = [list(row) for row in M.entries]
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i: int, j: int) -> None:
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i: int, j: int) -> None:
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(target: int, source: int, k: int) -> None:
        a[target] = [x + k * y for x, y in zip(a[target], a[source])]
        u[target] = [x + k * y for x, y in zip(u[target], u[source])]

    def add_col(target: int, source: int, k: int) -> None:
        for row in a:
            row[target] += k * row[source]
        for row in v:
            row[target] += k * row[source]

    for t in range(min(m, n)):
        candidates = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, n) if a[i][j]]
        if not candidates:
            break
        _, i0, j0 = min(candidates)
        swap_rows(t, i0)
        swap_cols(t, j0)
        while True:
            changed = False
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // a[t][t]))
                    if a[i][t]:
                        swap_rows(t, i)
                        changed = True
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // a[t][t]))
                    if a[t][j]:
                        swap_cols(t, j)
                        changed = True
            if changed:
                continue
            offender = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % a[t][t]),
                None,
            )
            if offender is None:
                break
            add_row(t, offender, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]

    return ZMatrix.from_rows(u, m), ZMatrix.from_rows(a, n), ZMatrix.from_rows(v, n)


def _snf_rank(S: ZMatrix) -> int:
    return sum(1 for i in range(min(S.rows, S.cols)) if S[i, i])


def integer_kernel_basis(M: ZMatrix) -> List[IntVector]:
    """Z-basis of {u in Z^n : M u = 0}."""
    _, S, V = smith_normal_form(M)
    r = _snf_rank(S)
    return [V.column(j) for j in range(r, M.cols)]


def _gram_or_identity(gram: Optional[Sequence[Sequence]], n: int) -> QMatrix:
    if gram is None:
        return QMatrix.identity(n)
    G = gram if isinstance(gram, QMatrix) else QMatrix.from_rows(gram, n)
    if G.rows != n or G.cols != n:
        raise ValueError(f"norm must be a {n}x{n} matrix")
    if not is_positive_definite(G):
        raise ValueError("norm is not positive definite")
    return G


def _quadratic(G: QMatrix, u: Sequence, w: Sequence) -> Fraction:
    return sum((Fraction(a) * b for a, b in zip(u, G.apply(w))), Fraction(0))


def minimal_preimage(phi: ZMatrix, v: Sequence[int],
                     norm: Optional[Sequence[Sequence]] = None,
                     snf: Optional[Tuple[ZMatrix, ZMatrix, ZMatrix]] = None) -> Optional[IntVector]:
    """
    Integer solution of phi*u = v with bounded coordinates.

    With U*phi*V = S, the solution is u = V x where x_i = (U v)_i / s_i on the
    nonzero part of the diagonal and 0 elsewhere, so |x_i| <= |(U v)_i|. The
    result is then size-reduced against the integer kernel of phi in the
    given norm, which never increases the norm.

    Args:
        phi: Integer matrix
        v: Target vector
        norm: Positive-definite Gram matrix on the source space (identity
            when omitted)
        snf: Precomputed smith_normal_form(phi) for repeated solves

    Returns:
        Optional[IntVector]: A preimage, or None when v is not in phi(Z^n)
    """
    if len(v) != phi.rows:
        raise ValueError("target length does not match row count")
    U, S, V = snf if snf is not None else smith_normal_form(phi)
    w = U.apply([int(c) for c in v])
    r = _snf_rank(S)
    if any(w[i] for i in range(r, phi.rows)):
        return None
    x = [0] * phi.cols
    for i in range(r):
        if w[i] % S[i, i]:
            return None
        x[i] = w[i] // S[i, i]
    u = list(V.apply(x))
    G = _gram_or_identity(norm, phi.cols)

    kernel = [V.column(j) for j in range(r, phi.cols)]
    improved = True
    while improved and kernel:
        improved = False
        for k in kernel:
            kk = _quadratic(G, k, k)
            c = floor(_quadratic(G, u, k) / kk + Fraction(1, 2))
            if c:
                candidate = [a - c * b for a, b in zip(u, k)]
                if _quadratic(G, candidate, candidate) < _quadratic(G, u, u):
                    u = candidate
                    improved = True
    return tuple(u)


def _basis_spread(G: QMatrix) -> Fraction:
    """Rational C^2 with C^-2 |x|^2 <= x^T G x <= C^2 |x|^2."""
    r = G.rows
    if r == 0:
        return Fraction(1)
    trace = sum((G[i, i] for i in range(r)), Fraction(0))
    return max(trace, trace ** (r - 1) / determinant(G))


def preimage_bound_constant(phi: ZMatrix, norm: Optional[Sequence[Sequence]] = None) -> Fraction:
    """
    C(phi)^2 such that minimal_preimage(phi, v) has norm^2 at most
    C(phi)^2 * norm^2 of v.

    Both norms use the supplied Gram matrix when phi is square, the
    identity on the target otherwise.
    """
    G_source = _gram_or_identity(norm, phi.cols)
    G_target = G_source if phi.rows == phi.cols else QMatrix.identity(phi.rows)
    U, _, V = smith_normal_form(phi)
    Vq = V.to_qmatrix()
    Uinv = U.inverse().to_qmatrix()
    spread_source = _basis_spread(Vq.transpose() @ G_source @ Vq)
    spread_target = _basis_spread(Uinv.transpose() @ G_target @ Uinv)
    return spread_source * spread_target


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> List[IntVector]:
    """
    Row-style Hermite normal form of the lattice spanned by rows.

    Nonzero rows only; pivots positive, entries above each pivot reduced
    into [0, pivot).
    """
    a = [list(int(x) for x in row) for row in rows]
    m = len(a)
    n = len(a[0]) if a else 0
    r = 0
    for col in range(n):
        if r == m:
            break
        while True:
            live = [i for i in range(r, m) if a[i][col]]
            if not live:
                break
            i0 = min(live, key=lambda k: abs(a[k][col]))
            a[r], a[i0] = a[i0], a[r]
            clean = True
            for k in range(r + 1, m):
                if a[k][col]:
                    q = a[k][col] // a[r][col]
                    a[k] = [x - q * y for x, y in zip(a[k], a[r])]
                    if a[k][col]:
                        clean = False
            if clean:
                break
        if a[r][col] == 0:
            continue
        if a[r][col] < 0:
            a[r] = [-x for x in a[r]]
        for k in range(r):
            q = a[k][col] // a[r][col]
            if q:
                a[k] = [x - q * y for x, y in zip(a[k], a[r])]
        r += 1
    return [tuple(row) for row in a[:r]]


def hnf_reduce(vector: Sequence[int], hnf: Sequence[Sequence[int]]) -> IntVector:
    """Canonical representative of vector modulo the row lattice of hnf."""
    v = [int(x) for x in vector]
    for row in hnf:
        pivot = next(j for j, x in enumerate(row) if x)
        q = v[pivot] // row[pivot]
        if q:
            v = [x - q * y for x, y in zip(v, row)]
    return tuple(v)
