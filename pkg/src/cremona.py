"""
Plane birational maps as primitive triples [P:Q:R] of homogeneous
polynomials: composition, inversion, degree sequences and growth
classification.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from math import gcd, lcm
from typing import Any, Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_add, gf_gcd, gf_mul, gf_mul_ground, gf_quo, gf_strip

from .codec import seed_stream
from .config import DEFAULT_BUDGET_DIGITS
from .exactalg import (
    HomPoly3,
    Monomial,
    PowerCache,
    QMatrix,
    compose_triple,
    determinant,
    kernel_basis,
    monomial_images,
    monomials,
    poly_gcd_many,
)

logger = logging.getLogger(__name__)

Point = Tuple[int, int, int]

ELLIPTIC = "elliptic"
JONQUIERES = "jonquieres"
HALPHEN = "halphen"
LOXODROMIC = "loxodromic"
UNKNOWN = "unknown"
PROVED = "proved"
HEURISTIC = "heuristic"

# deg(f^2) beyond this multiple of deg(f) forces exponential growth
LOXODROMIC_CERTIFICATE_FACTOR = 3 ** 19
# degree_sequence inverts f itself to vet the prime only up to this degree
INVERSE_CHECK_MAX_DEGREE = 4


class InvalidMapError(ValueError):
    """A triple that does not define a dominant rational map of the plane."""


class BudgetExceededError(RuntimeError):
    """Coefficient growth passed the configured digit budget."""

    def __init__(self, message: str, last_n: int, degrees: Sequence[int]):
        super().__init__(message)
        self.last_n = last_n
        self.degrees = list(degrees)


def normalize_point(coords: Sequence) -> Optional[Point]:
    """
    Projective point with coprime integer coordinates, first nonzero
    coordinate positive; None for (0, 0, 0).
    """
    values = [Fraction(c) for c in coords]
    if len(values) != 3:
        raise ValueError("a plane point has three coordinates")
    if not any(values):
        return None
    den = lcm(*(v.denominator for v in values))
    ints = [int(v * den) for v in values]
    common = gcd(*ints)
    ints = [v // common for v in ints]
    if next(v for v in ints if v) < 0:
        ints = [-v for v in ints]
    return tuple(ints)


class PlaneBirationalMap:
    """
    A rational self-map of the plane given by a primitive triple [P:Q:R].

    The stored representative has no common factor and its first nonzero
    component has graded-lex leading coefficient 1.
    """

    __slots__ = ("_components", "_integral")

    def __init__(self, components: Sequence[HomPoly3], reduce: bool = True):
        comps = tuple(components)
        if len(comps) != 3 or not all(isinstance(c, HomPoly3) for c in comps):
            raise InvalidMapError("a plane map needs three HomPoly3 components")
        if len({c.deg for c in comps}) != 1:
            raise InvalidMapError("components must have equal degree")
        if all(c.is_zero for c in comps):
            raise InvalidMapError("all components vanish identically")
        if reduce:
            common = poly_gcd_many(comps)
            if common.deg > 0:
                comps = tuple(c.exquo(common) for c in comps)
        if comps[0].deg < 1:
            raise InvalidMapError("map is constant (degree 0 after reduction)")
        lead = next(c for c in comps if not c.is_zero).leading_coefficient
        if lead != 1:
            comps = tuple(c * (1 / lead) for c in comps)
        self._components = comps
        self._integral: Optional[Tuple[HomPoly3, ...]] = None

    @classmethod
    def identity(cls) -> "PlaneBirationalMap":
        return cls(HomPoly3.gens(), reduce=False)

    @classmethod
    def linear(cls, matrix: Sequence[Sequence]) -> "PlaneBirationalMap":
        """Map [x:y:z] -> M [x:y:z] for an invertible 3x3 rational matrix."""
        M = matrix if isinstance(matrix, QMatrix) else QMatrix.from_rows(matrix, 3)
        if M.rows != 3 or M.cols != 3:
            raise InvalidMapError("linear maps need a 3x3 matrix")
        if determinant(M) == 0:
            raise InvalidMapError("singular matrix does not define a birational map")
        gens = HomPoly3.gens()
        comps = []
        for row in M.entries:
            comp = HomPoly3.zero(1)
            for coeff, gen in zip(row, gens):
                if coeff:
                    comp = comp + gen * coeff
            comps.append(comp)
        return cls(comps, reduce=False)

    @classmethod
    def parse(cls, texts: Sequence[str]) -> "PlaneBirationalMap":
        """Build from three expressions such as ["y*z", "x*z", "x*y"]."""
        if len(texts) != 3:
            raise InvalidMapError("a plane map needs three components")
        parsed: List[Optional[HomPoly3]] = []
        for text in texts:
            try:
                parsed.append(HomPoly3.parse(text))
            except ValueError:
                # a bare zero carries no degree yet
                if not HomPoly3.parse(text, 0).is_zero:
                    raise
                parsed.append(None)
        nonzero = [p.deg for p in parsed if p is not None]
        if not nonzero:
            raise InvalidMapError("all components vanish identically")
        deg = nonzero[0]
        polys = [HomPoly3.zero(deg) if p is None else p for p in parsed]
        return cls(polys)

    @property
    def components(self) -> Tuple[HomPoly3, ...]:
        return self._components

    @property
    def degree(self) -> int:
        return self._components[0].deg

    def __getitem__(self, i: int) -> HomPoly3:
        return self._components[i]

    def integral_components(self) -> Tuple[HomPoly3, ...]:
        """The representative scaled to coprime integer coefficients."""
        if self._integral is None:
            coeffs = [c for comp in self._components for _, c in comp.terms()]
            den = lcm(*(c.denominator for c in coeffs))
            num = gcd(*(c.numerator for c in coeffs))
            scale = Fraction(den, num)
            self._integral = tuple(comp * scale for comp in self._components)
        return self._integral

    def coefficient_digits(self) -> int:
        return sum(c.coefficient_digits() for c in self.integral_components())

    def linear_matrix(self) -> QMatrix:
        """The 3x3 matrix of a degree-1 map."""
        if self.degree != 1:
            raise ValueError("only degree-1 maps have a matrix")
        rows = []
        for comp in self._components:
            rows.append([comp.coefficient(e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))])
        return QMatrix.from_rows(rows, 3)

    def is_identity(self) -> bool:
        return self == PlaneBirationalMap.identity()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "degree": self.degree,
            "components": [c.to_json() for c in self._components],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PlaneBirationalMap":
        try:
            deg = int(data["degree"])
            records = data["components"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidMapError("map JSON needs 'degree' and 'components'") from exc
        if len(records) != 3:
            raise InvalidMapError("map JSON needs three components")
        return cls([HomPoly3.from_json(r, deg) for r in records])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlaneBirationalMap):
            return NotImplemented
        return self._components == other._components

    def __hash__(self) -> int:
        return hash(self._components)

    def __str__(self) -> str:
        return "[" + " : ".join(str(c) for c in self._components) + "]"

    def __repr__(self) -> str:
        return f"PlaneBirationalMap({self}, degree={self.degree})"


def standard_involution() -> PlaneBirationalMap:
    """sigma = [yz : xz : xy]."""
    x, y, z = HomPoly3.gens()
    return PlaneBirationalMap((y * z, x * z, x * y))


def _composed_triple(f: PlaneBirationalMap, g: PlaneBirationalMap) -> Tuple[HomPoly3, ...]:
    triple = compose_triple(f.integral_components(), g.integral_components())
    if all(c.is_zero for c in triple):
        raise InvalidMapError("composition vanishes identically; inner map is not dominant")
    return triple


def compose(f: PlaneBirationalMap, g: PlaneBirationalMap) -> PlaneBirationalMap:
    """
    f o g as a primitive triple.

    Args:
        f: Outer map
        g: Inner map

    Returns:
        PlaneBirationalMap: The reduced composite, of degree <= deg f * deg g

    Raises:
        InvalidMapError: If the formal composite is identically zero
    """
    return PlaneBirationalMap(_composed_triple(f, g))


def composition_drop(f: PlaneBirationalMap, g: PlaneBirationalMap) -> HomPoly3:
    """
    The common factor removed from f(g) when reducing it.

    Its degree is deg f * deg g - deg(f o g); it vanishes on the curves
    that g contracts into the indeterminacy points of f.
    """
    return poly_gcd_many(_composed_triple(f, g))


def apply(f: PlaneBirationalMap, point: Sequence) -> Optional[Point]:
    """Image of a point, or None when the point is indeterminate for f."""
    if not any(Fraction(c) for c in point):
        raise ValueError("(0, 0, 0) is not a projective point")
    return normalize_point([c.evaluate(point) for c in f.components])


def invert(f: PlaneBirationalMap, degree_guess: int) -> Optional[PlaneBirationalMap]:
    """
    Find the inverse of f among maps of degree at most degree_guess.

    The unknown coefficients of (P', Q', R') satisfy the linear identities
    P'(f) y - Q'(f) x = 0 and P'(f) z - R'(f) x = 0. Any kernel vector is the
    inverse times a common factor, which the primitive reduction removes.

    Returns:
        Optional[PlaneBirationalMap]: The inverse, or None when no map of
        that degree inverts f
    """
    if degree_guess < 1:
        raise ValueError("degree_guess must be at least 1")
    basis = monomials(degree_guess)
    n = len(basis)
    images = monomial_images(degree_guess, f.integral_components())
    x, y, z = HomPoly3.gens()

    rows: Dict[Tuple[int, Monomial], Dict[int, Fraction]] = defaultdict(dict)

    def accumulate(equation: int, poly: HomPoly3, column: int, sign: int) -> None:
        for mono, coeff in poly.terms():
            row = rows[(equation, mono)]
            row[column] = row.get(column, Fraction(0)) + sign * coeff

    for idx, image in enumerate(images):
        image_x = image * x
        accumulate(0, image * y, idx, 1)
        accumulate(0, image_x, n + idx, -1)
        accumulate(1, image * z, idx, 1)
        accumulate(1, image_x, 2 * n + idx, -1)

    keys = sorted(rows)
    system = QMatrix.from_rows(
        [[rows[key].get(col, Fraction(0)) for col in range(3 * n)] for key in keys], 3 * n
    )
    kernel = kernel_basis(system)
    if not kernel:
        logger.debug("no inverse of degree <= %d for %s", degree_guess, f)
        return None
    vec = kernel[0]
    comps = [
        HomPoly3.from_terms(dict(zip(basis, vec[i * n:(i + 1) * n])), degree_guess)
        for i in range(3)
    ]
    try:
        candidate = PlaneBirationalMap(comps)
        if compose(candidate, f).is_identity():
            return candidate
    except InvalidMapError:
        pass
    logger.debug("kernel vector for %s does not invert it", f)
    return None


def jacobian_determinant(f: PlaneBirationalMap) -> HomPoly3:
    """Determinant of the matrix of partials, of degree 3(deg f - 1)."""
    J = [[comp.diff(i) for i in range(3)] for comp in f.components]
    return (
        J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1])
        - J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0])
        + J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0])
    )


# mod-p filter

LineState = Optional[Tuple[Tuple[List[int], ...], int]]


def _reduce_binary(polys: Sequence[List[int]], formal_degree: int, p: int) -> LineState:
    """
    Remove the common factor of three binary forms given in the chart s = 1.

    A form of formal degree E stored as a univariate polynomial of degree
    e < E carries the factor s^(E - e).
    """
    nonzero = [q for q in polys if q]
    if not nonzero:
        return None
    deficiency = min(formal_degree - (len(q) - 1) for q in nonzero)
    common = nonzero[0]
    for q in nonzero[1:]:
        common = gf_gcd(common, q, p, ZZ)
    reduced = tuple(gf_quo(q, common, p, ZZ) if q else [] for q in polys)
    return reduced, formal_degree - deficiency - (len(common) - 1)


class ModularLineChain:
    """
    Iterates of f restricted to random lines over GF(p).

    Each line carries the reduced restriction of f^n as three univariate
    polynomials with a formal degree. Reduction mod p, restriction to a line
    and removal of common factors can only lower the degree, so each reduced
    degree is a lower bound for deg(f^n).
    """

    def __init__(self, f: PlaneBirationalMap, p: int, lines: int = 2, seed: int = 0):
        self.p = p
        self.degree_of_map = f.degree
        self._terms = []
        for comp in f.integral_components():
            reduced = comp.reduce_mod(p)
            self._terms.append(sorted(reduced.items()) if reduced else [])
        rng = seed_stream(seed, "modp-lines", p)
        self._states: List[LineState] = []
        for _ in range(lines):
            base = [rng.randrange(p) for _ in range(3)]
            direction = [rng.randrange(p) for _ in range(3)]
            line = tuple(gf_strip([v, u]) for u, v in zip(base, direction))
            self._states.append((line, 1))
        self.n = 0
        self.lower_bound = 1

    @classmethod
    def start(cls, f: PlaneBirationalMap, p: int, lines: int = 2, seed: int = 0,
              inverse: Optional[PlaneBirationalMap] = None) -> Optional["ModularLineChain"]:
        """
        A chain positioned at n = 1, or None when p is a bad prime for f
        (or for the supplied inverse): reduction lowered the degree.
        """
        chain = cls(f, p, lines, seed)
        if chain.advance() != f.degree:
            logger.warning("prime %d rejected: reduction lowers deg(f) = %d", p, f.degree)
            return None
        if inverse is not None:
            check = cls(inverse, p, lines, seed + 1)
            if check.advance() != inverse.degree:
                logger.warning("prime %d rejected: reduction lowers the inverse degree", p)
                return None
        return chain

    def advance(self) -> int:
        """Step to the next iterate; return the best lower bound (0 if degenerate)."""
        p = self.p

        def mul(a: List[int], b: List[int]) -> List[int]:
            return gf_mul(a, b, p, ZZ)

        best = 0
        states: List[LineState] = []
        for state in self._states:
            if state is None:
                states.append(None)
                continue
            polys, formal = state
            cache = PowerCache(polys, [1], mul)
            composed = []
            for terms in self._terms:
                acc: List[int] = []
                for (a, b, c), coeff in terms:
                    acc = gf_add(acc, gf_mul_ground(cache.image(a, b, c), coeff, p, ZZ), p, ZZ)
                composed.append(acc)
            reduced = _reduce_binary(composed, formal * self.degree_of_map, p)
            states.append(reduced)
            if reduced is not None:
                best = max(best, reduced[1])
        self._states = states
        self.n += 1
        self.lower_bound = best
        return best


def modular_degree_bounds(f: PlaneBirationalMap, n_max: int, p: int,
                          lines: int = 2,
                          inverse: Optional[PlaneBirationalMap] = None) -> Optional[List[int]]:
    """
    Lower bounds for deg(f^n), n = 0..n_max, from the mod-p line chain alone.

    None when p is a bad prime for f (or for inverse, when given).
    """
    chain = ModularLineChain.start(f, p, lines, inverse=inverse)
    if chain is None:
        return None
    bounds = [1, chain.lower_bound]
    for _ in range(2, n_max + 1):
        bounds.append(chain.advance())
    return bounds[: n_max + 1]


# degree reports

@total_ordering
class RootBound:
    """The real number radicand^(1/index), compared exactly."""

    __slots__ = ("radicand", "index")

    def __init__(self, radicand: int, index: int):
        if radicand < 1 or index < 1:
            raise ValueError("radicand and index must be positive")
        self.radicand = radicand
        self.index = index

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = RootBound(other, 1)
        if not isinstance(other, RootBound):
            return NotImplemented
        return self.radicand ** other.index == other.radicand ** self.index

    def __lt__(self, other) -> bool:
        if isinstance(other, int):
            other = RootBound(other, 1)
        if not isinstance(other, RootBound):
            return NotImplemented
        return self.radicand ** other.index < other.radicand ** self.index

    __hash__ = None  # type: ignore[assignment]

    def __float__(self) -> float:
        return float(self.radicand) ** (1.0 / self.index)

    def to_list(self) -> List[int]:
        return [self.radicand, self.index]

    def __repr__(self) -> str:
        return f"RootBound({self.radicand}, {self.index})"


@dataclass(frozen=True)
class Classification:
    label: str
    certificate: str

    def to_dict(self) -> Dict[str, str]:
        return {"label": self.label, "certificate": self.certificate}


@dataclass
class DegreeReport:
    """deg(f^n) for n = 0..horizon with its classification."""
    degrees: List[int]
    classification: Optional[Classification] = None
    modp_prime: Optional[int] = None
    filter_hits: List[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.degrees or self.degrees[0] != 1:
            raise ValueError("degrees[0] must be 1")

    @property
    def horizon(self) -> int:
        return len(self.degrees) - 1

    @property
    def dynamical_degree_upper_bounds(self) -> List[RootBound]:
        return dynamical_degree_upper_bounds(self)

    def is_submultiplicative(self) -> bool:
        d = self.degrees
        return all(
            d[a + b] <= d[a] * d[b]
            for a in range(1, len(d))
            for b in range(1, len(d) - a)
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "degrees": list(self.degrees),
            "classification": self.classification.to_dict() if self.classification else None,
            "dynamical_degree_upper_bounds": [b.to_list() for b in self.dynamical_degree_upper_bounds],
            "modp_prime": self.modp_prime,
            "filter_hits": list(self.filter_hits),
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DegreeReport":
        label = data.get("classification")
        return cls(
            degrees=[int(v) for v in data["degrees"]],
            classification=Classification(**label) if label else None,
            modp_prime=data.get("modp_prime"),
            filter_hits=[int(v) for v in data.get("filter_hits", [])],
        )


def _differences(values: Sequence[int]) -> List[int]:
    return [b - a for a, b in zip(values, values[1:])]


def _is_periodic(window: Sequence[int]) -> bool:
    """The window repeats with some period p <= len(window) // 2 (p = 1: constant)."""
    return any(
        all(window[i] == window[i + p] for i in range(len(window) - p))
        for p in range(1, len(window) // 2 + 1)
    )


def classify(report: DegreeReport) -> Classification:
    """
    Growth type from a degree sequence.

    A degree-1 map is elliptic and deg(f^2) > 3^19 deg(f) forces loxodromic
    growth; both are proved. Everything else is read off the tail window
    of max(4, ceil(n/2)) entries and labelled heuristic.

    Raises:
        ValueError: If the report stops before n = 4
    """
    degrees = report.degrees
    n_max = len(degrees) - 1
    if n_max < 4:
        raise ValueError(f"classification needs n_max >= 4, got {n_max}")
    if degrees[1] == 1:
        return Classification(ELLIPTIC, PROVED)
    if degrees[2] > LOXODROMIC_CERTIFICATE_FACTOR * degrees[1]:
        return Classification(LOXODROMIC, PROVED)

    width = max(4, -(-n_max // 2))
    window = degrees[n_max + 1 - width:]
    first = _differences(window)
    second = _differences(first)
    third = _differences(second)

    if _is_periodic(window):
        label = ELLIPTIC
    elif len(set(first)) == 1 and first[0] > 0:
        label = JONQUIERES
    elif len(set(second)) == 1 and second[0] > 0:
        label = HALPHEN
    elif all(v > 0 for v in first + second + third):
        label = LOXODROMIC
    else:
        label = UNKNOWN
    return Classification(label, HEURISTIC)


def dynamical_degree_upper_bounds(report: DegreeReport) -> List[RootBound]:
    """deg(f^n)^(1/n) for n >= 1; each one bounds the dynamical degree from above."""
    return [RootBound(deg, n) for n, deg in enumerate(report.degrees) if n >= 1]


def running_infimum(bounds: Sequence[RootBound]) -> List[RootBound]:
    result: List[RootBound] = []
    for bound in bounds:
        result.append(bound if not result or bound < result[-1] else result[-1])
    return result


def degree_sequence(f: PlaneBirationalMap, n_max: int, modp_filter: Optional[int] = None,
                    budget: int = DEFAULT_BUDGET_DIGITS,
                    inverse: Optional[PlaneBirationalMap] = None) -> DegreeReport:
    """
    Exact deg(f^n) for n <= n_max by left-iterated composition f o f^(n-1).

    With modp_filter set, each step is first tracked on random lines mod p;
    when the modular degree reaches deg(f^(n-1)) * deg(f) the exact step is
    skipped. Skipped iterates are rebuilt exactly only if a later step needs
    them. The prime is dropped when reduction lowers deg(f) or deg(f^-1);
    the inverse is computed here for deg(f) <= INVERSE_CHECK_MAX_DEGREE
    unless supplied.

    Raises:
        BudgetExceededError: When an exact iterate stores more coefficient
            digits than budget
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    d = f.degree
    degrees = [1, d]
    chain = None
    if modp_filter:
        if inverse is None and d <= INVERSE_CHECK_MAX_DEGREE:
            inverse = invert(f, d)
        chain = ModularLineChain.start(f, modp_filter, inverse=inverse)
    hits: List[int] = []
    exact_n, exact = 1, f
    for n in range(2, n_max + 1):
        bound = degrees[-1] * d
        if chain is not None and chain.advance() == bound:
            degrees.append(bound)
            hits.append(n)
            logger.debug("deg(f^%d) = %d certified mod %d", n, bound, modp_filter)
            continue
        while exact_n < n:
            exact = compose(f, exact)
            exact_n += 1
            if exact.coefficient_digits() > budget:
                raise BudgetExceededError(
                    f"iterate {exact_n} exceeds the coefficient budget of {budget} digits",
                    last_n=len(degrees) - 1,
                    degrees=degrees,
                )
        degrees.append(exact.degree)
        logger.debug("deg(f^%d) = %d (exact)", n, exact.degree)

    report = DegreeReport(degrees=degrees, modp_prime=modp_filter if chain else None,
                          filter_hits=hits)
    if n_max >= 4:
        report.classification = classify(report)
    return report
