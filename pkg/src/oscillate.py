"""
Synthesis of plane maps with prescribed degree dips.

A target D (finitely many gaps s with positive weights) is realized as
h = g o A o g^-1, where A is a linear map of infinite order and g a
Jonquieres map whose simple base points come in pairs (q_j, A^s_j(q_j)).
Each pair lowers deg(h^n) by one exactly at n = s_j.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

from sympy import Rational, multiplicity, primefactors

from .codec import seed_stream
from .config import DEFAULT_MATRIX_BOX, DEFAULT_MAX_TRIES, DEFAULT_PRIME, DEFAULT_SAMPLE_BOX
from .cremona import (
    InvalidMapError,
    ModularLineChain,
    PlaneBirationalMap,
    Point,
    apply,
    compose,
    degree_sequence,
    invert,
    normalize_point,
)
from .exactalg import (
    HomPoly3,
    QMatrix,
    compose_triple,
    derivative_row,
    determinant,
    kernel_basis,
    monomials,
    poly_compose3,
    poly_gcd_many,
)

logger = logging.getLogger(__name__)

DEFAULT_LINEAR_MAP = ((2, 0, 0), (0, 3, 0), (0, 0, 1))
BASE_POINT = (1, 1, 1)
# pick_linear_map rejects M when M^k is scalar for some k <= this order
TORSION_CHECK_ORDER = 36


class JonquieresError(ValueError):
    """The linear system of the requested Jonquieres map is degenerate."""


class SamplingExhaustedError(RuntimeError):
    """No admissible point configuration was found within the try budget."""

    def __init__(self, message: str, failures: Counter):
        super().__init__(message)
        self.failures = failures


@dataclass
class OscillationTarget:
    """Finitely supported map s -> D(s) on positive integers."""
    support: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for key, value in self.support.items():
            s, weight = int(key), int(value)
            if s < 1:
                raise ValueError(f"gap {s} must be a positive integer")
            if weight < 1:
                raise ValueError(f"weight D({s}) = {weight} must be positive")
            cleaned[s] = weight
        self.support = dict(sorted(cleaned.items()))

    def __call__(self, n: int) -> int:
        return self.support.get(n, 0)

    @property
    def block_count(self) -> int:
        return sum(self.support.values())

    @property
    def max_gap(self) -> int:
        return max(self.support, default=0)

    def to_dict(self) -> Dict[str, Any]:
        return {"support": {str(s): w for s, w in self.support.items()}}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OscillationTarget":
        return cls(support=dict(data.get("support", {})))


@dataclass
class OverlapDecomposition:
    """Two-element blocks {a, a + s}; each contributes a unit dip at n = s."""
    blocks: List[Tuple[int, int]]

    def overlap(self, n: int) -> int:
        """Sum over blocks of |T^n(G) & G| for the unit translation T."""
        total = 0
        for a, s in self.blocks:
            block = {a, a + s}
            total += len({v + n for v in block} & block)
        return total

    @property
    def gaps(self) -> List[int]:
        return [s for _, s in self.blocks]


def decompose_overlaps(target: OscillationTarget) -> OverlapDecomposition:
    """
    One block per unit of D(s), anchored so that blocks are disjoint.

    Only the gaps matter for the overlap function; anchors are the smallest
    free integers.
    """
    blocks = []
    used: set = set()
    anchor = 1
    for s, weight in target.support.items():
        for _ in range(weight):
            while anchor in used or anchor + s in used:
                anchor += 1
            blocks.append((anchor, s))
            used.update((anchor, anchor + s))
    return OverlapDecomposition(blocks)


def _is_scalar(M: QMatrix) -> bool:
    first = M[0, 0]
    return all(M[i, j] == (first if i == j else 0) for i in range(M.rows) for j in range(M.cols))


def pick_linear_map(seed: int = 0, box: int = DEFAULT_MATRIX_BOX) -> PlaneBirationalMap:
    """
    A linear map of infinite order.

    Seed 0 gives diag(2, 3, 1). Other seeds draw integer matrices with
    entries in [-box, box], rejecting singular ones and those with a power
    of order at most TORSION_CHECK_ORDER that is scalar.
    """
    if seed == 0:
        return PlaneBirationalMap.linear(DEFAULT_LINEAR_MAP)
    attempt = 0
    while True:
        rng = seed_stream(seed, "linear-map", attempt)
        attempt += 1
        M = QMatrix.from_rows([[rng.randint(-box, box) for _ in range(3)] for _ in range(3)], 3)
        if determinant(M) == 0:
            continue
        power = M
        torsion = False
        for _ in range(TORSION_CHECK_ORDER):
            if _is_scalar(power):
                torsion = True
                break
            power = M @ power
        if not torsion:
            return PlaneBirationalMap.linear(M)


@dataclass
class IncidenceTable:
    """
    Pairs (i, j) with A^n(p_i) = p_j for some n >= 1.

    When complete is set the hits are exact for every n; otherwise only
    n <= horizon were examined.
    """
    points: List[Point]
    horizon: int
    complete: bool
    hits: Dict[Tuple[int, int], List[int]] = field(default_factory=dict)

    def delta(self, i: int, j: int, n: int) -> int:
        return int(n in self.hits.get((i, j), ()))

    def pairs_at(self, n: int) -> List[Tuple[int, int]]:
        return [pair for pair, ns in self.hits.items() if n in ns]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "points": [list(p) for p in self.points],
            "horizon": self.horizon,
            "complete": self.complete,
            "hits": [[i, j, ns] for (i, j), ns in sorted(self.hits.items())],
        }


def _diagonal_entries(A: PlaneBirationalMap) -> Optional[Tuple[Fraction, ...]]:
    M = A.linear_matrix()
    if any(M[i, j] for i in range(3) for j in range(3) if i != j):
        return None
    return tuple(M[i, i] for i in range(3))


def _valuation(value: Fraction, prime: int) -> int:
    return multiplicity(prime, Rational(abs(value.numerator), value.denominator))


def _diagonal_exponent(diag: Sequence[Fraction], p: Point, q: Point) -> Optional[int]:
    """The unique n >= 1 with diag^n p = q projectively, if any."""
    support = [i for i in range(3) if p[i]]
    if support != [i for i in range(3) if q[i]]:
        return None
    for i, k in combinations(support, 2):
        mu = diag[i] / diag[k]
        if abs(mu) == 1:
            continue
        rho = Fraction(q[i] * p[k], q[k] * p[i])
        prime = primefactors(mu.numerator * mu.denominator)[0]
        step = _valuation(mu, prime)
        target = _valuation(rho, prime)
        if target % step or target // step < 1:
            return None
        n = target // step
        image = normalize_point([d ** n * c for d, c in zip(diag, p)])
        return n if image == q else None
    return None


def orbit_incidences(A: PlaneBirationalMap, points: Sequence, n_max: int,
                     require_infinite: bool = True) -> IncidenceTable:
    """
    Incidence table delta(A^n(p_i), p_j).

    For a diagonal A whose eigenvalue ratios all have absolute value other
    than 1, each question A^n p = q has at most one candidate n, found from
    a prime valuation and confirmed exactly; the table is then complete.
    Other linear maps are iterated up to n_max.

    Raises:
        ValueError: If require_infinite and some point is fixed or periodic
    """
    if A.degree != 1:
        raise ValueError("orbit incidences need a linear map")
    normalized = []
    for p in points:
        point = normalize_point(p)
        if point is None:
            raise ValueError("(0, 0, 0) is not a projective point")
        normalized.append(point)

    diag = _diagonal_entries(A)
    complete = diag is not None and all(
        abs(diag[i] / diag[k]) != 1 for i, k in combinations(range(3), 2)
    )
    hits: Dict[Tuple[int, int], List[int]] = {}
    if complete:
        for i, p in enumerate(normalized):
            if sum(1 for c in p if c) < 2:
                if require_infinite:
                    raise ValueError(f"point {p} is fixed by the linear map")
                hits[(i, i)] = [1]
                continue
            for j, q in enumerate(normalized):
                n = _diagonal_exponent(diag, p, q)
                if n is not None:
                    hits[(i, j)] = [n]
    else:
        index = {p: j for j, p in enumerate(normalized)}
        for i, p in enumerate(normalized):
            image = p
            for n in range(1, n_max + 1):
                image = apply(A, image)
                if image in index:
                    hits.setdefault((i, index[image]), []).append(n)
        logger.debug("incidences for a non-diagonal map are limited to n <= %d", n_max)

    if require_infinite:
        periodic = sorted(i for (i, j) in hits if i == j)
        if periodic:
            raise ValueError(f"point {normalized[periodic[0]]} is periodic for the linear map")
    return IncidenceTable(normalized, n_max, complete, hits)


@dataclass(frozen=True)
class JonquieresCheck:
    ok: bool
    condition: Optional[str] = None
    witness: Tuple[Point, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _point_rows(k: int, points: Sequence[Point]) -> List[List[Fraction]]:
    basis = monomials(k)
    return [derivative_row(basis, (0, 0, 0), p) for p in points]


def _multiplicity_rows(k: int, point: Point, multiplicity: int) -> List[List[Fraction]]:
    """All partials of order multiplicity - 1 vanish at point (Euler gives the lower ones)."""
    if multiplicity < 1:
        return []
    basis = monomials(k)
    return [derivative_row(basis, order, point) for order in monomials(multiplicity - 1)]


def check_jon_conditions(q0: Sequence, points: Sequence, m: int) -> JonquieresCheck:
    """
    General position of q0 and 2m simple points for a degree m+1 Jonquieres map.

    No three of the points are collinear, and for 2 <= k <= m no curve of
    degree k with multiplicity k-1 at q0 passes through 2k+1 of the simple
    points.
    """
    if len(points) != 2 * m:
        raise ValueError(f"expected {2 * m} points, got {len(points)}")
    base = normalize_point(q0)
    simple = [normalize_point(p) for p in points]
    everything = [base] + simple
    if None in everything or len(set(everything)) != len(everything):
        return JonquieresCheck(False, "distinct", tuple(p for p in everything if p))

    for triple in combinations(everything, 3):
        if determinant(QMatrix.from_rows(triple, 3)) == 0:
            return JonquieresCheck(False, "collinear", triple)

    for k in range(2, m + 1):
        conditions = _multiplicity_rows(k, base, k - 1)
        for subset in combinations(simple, 2 * k + 1):
            M = QMatrix.from_rows(conditions + _point_rows(k, subset), len(monomials(k)))
            if M.rank() < M.cols:
                return JonquieresCheck(False, f"degree-{k} curve", (base,) + subset)
    return JonquieresCheck(True)


def _build_jonquieres_pair(q0: Point, points: Sequence[Point]
                           ) -> Tuple[PlaneBirationalMap, PlaneBirationalMap]:
    m = len(points) // 2
    degree = m + 1
    rows = _multiplicity_rows(degree, q0, m) + _point_rows(degree, points)
    basis = monomials(degree)
    kernel = kernel_basis(QMatrix.from_rows(rows, len(basis)))
    if len(kernel) != 3:
        raise JonquieresError(f"net has dimension {len(kernel)}, expected 3")
    comps = [HomPoly3.from_terms(dict(zip(basis, vec)), degree) for vec in kernel]
    try:
        g = PlaneBirationalMap(comps)
    except InvalidMapError as exc:
        raise JonquieresError(f"degenerate net: {exc}") from exc
    if g.degree != degree:
        raise JonquieresError(f"net has a fixed component; degree {g.degree} != {degree}")
    g_inv = invert(g, degree)
    if g_inv is None:
        raise JonquieresError("net does not define a birational map")
    return g, g_inv


def build_jonquieres(q0: Sequence, points: Sequence) -> PlaneBirationalMap:
    """
    The Jonquieres map of degree m+1 with a point of multiplicity m at q0
    and simple base points at the 2m given points.

    Args:
        q0: Point of multiplicity m
        points: The 2m simple base points

    Returns:
        PlaneBirationalMap: The map given by a basis of the net

    Raises:
        JonquieresError: If the net is not 3-dimensional, has a fixed
            component or does not invert
    """
    if not points or len(points) % 2:
        raise ValueError("a Jonquieres net needs an even, positive number of simple points")
    base = normalize_point(q0)
    simple = [normalize_point(p) for p in points]
    check = check_jon_conditions(base, simple, len(simple) // 2)
    if not check:
        raise JonquieresError(f"points fail the {check.condition} condition: {check.witness}")
    return _build_jonquieres_pair(base, simple)[0]


def preserves_line_pencil(g: PlaneBirationalMap, q0: Sequence,
                          avoid: Sequence = ()) -> bool:
    """
    Lines through q0 map to lines through a common point.

    Three lines through q0 missing the points in avoid are restricted to,
    stripped of their fixed part and checked to be linear and concurrent.
    """
    base = normalize_point(q0)
    others = [normalize_point(p) for p in avoid]
    x, y, _ = HomPoly3.gens()
    normals = []
    for direction in ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 2, 0), (2, 0, 1), (0, 1, 3),
                      (1, -1, 2), (3, 1, -1)):
        if normalize_point(direction) == base:
            continue
        plane = [base, direction]
        if any(determinant(QMatrix.from_rows(plane + [p], 3)) == 0 for p in others):
            continue
        line = tuple(x * base[i] + y * direction[i] for i in range(3))
        try:
            restricted = [poly_compose3(c, line) for c in g.components]
            common = poly_gcd_many(restricted)
        except ValueError:
            continue
        linear = [r.exquo(common) for r in restricted]
        if linear[0].deg != 1:
            return False
        a = [c.coefficient((1, 0, 0)) for c in linear]
        b = [c.coefficient((0, 1, 0)) for c in linear]
        normals.append((
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ))
        if len(normals) == 3:
            return determinant(QMatrix.from_rows(normals, 3)) == 0
    return False


@dataclass
class PointConfiguration:
    """Base points of g together with the linear map A they are designed for."""
    linear_map: PlaneBirationalMap
    q0: Point
    orbit_seeds: List[Point]
    gaps: List[int]
    derived_points: List[Point]
    verification_horizon: int

    @property
    def m(self) -> int:
        return len(self.orbit_seeds)

    @property
    def all_points(self) -> List[Point]:
        return [self.q0] + list(self.derived_points)

    @property
    def multiplicities(self) -> List[int]:
        return [self.m] + [1] * len(self.derived_points)

    def designed_hits(self) -> Dict[Tuple[int, int], List[int]]:
        """(2j-1, 2j) at n = s_j, indices into all_points."""
        return {(2 * j + 1, 2 * j + 2): [s] for j, s in enumerate(self.gaps)}

    @classmethod
    def from_seeds(cls, A: PlaneBirationalMap, q0: Sequence, seeds: Sequence,
                   gaps: Sequence[int], horizon: int) -> "PointConfiguration":
        if len(seeds) != len(gaps):
            raise ValueError("one orbit seed per gap is required")
        derived = []
        for seed_point, s in zip(seeds, gaps):
            point = normalize_point(seed_point)
            image = point
            for _ in range(s):
                image = apply(A, image)
            derived.extend([point, image])
        return cls(A, normalize_point(q0), [normalize_point(p) for p in seeds],
                   list(gaps), derived, horizon)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "linear_map": self.linear_map.to_dict(),
            "q0": list(self.q0),
            "orbit_seeds": [list(p) for p in self.orbit_seeds],
            "gaps": list(self.gaps),
            "derived_points": [list(p) for p in self.derived_points],
            "multiplicities": self.multiplicities,
            "verification_horizon": self.verification_horizon,
        }


def predicted_degrees(config: PointConfiguration, n_max: int,
                      table: Optional[IncidenceTable] = None) -> List[int]:
    """
    deg(g o A^n o g^-1) = deg(g)^2 - sum a_i a_j delta(A^n p_i, p_j), n = 1..n_max.
    """
    if table is None:
        table = orbit_incidences(config.linear_map, config.all_points, n_max)
    weights = config.multiplicities
    top = (config.m + 1) ** 2
    return [
        top - sum(weights[i] * weights[j] for i, j in table.pairs_at(n))
        for n in range(1, n_max + 1)
    ]


def conjugate_power_degrees(g: PlaneBirationalMap, A: PlaneBirationalMap,
                            g_inv: PlaneBirationalMap, n_max: int,
                            modp: Optional[int] = DEFAULT_PRIME) -> List[int]:
    """
    deg(g o A^n o g_inv) for n = 1..n_max, each by a single composition.

    With modp set, the unreduced composite is first restricted to random
    lines mod p; reaching its formal degree there certifies it.
    """
    degrees = []
    inner = g_inv
    for n in range(1, n_max + 1):
        inner = compose(A, inner)
        triple = compose_triple(g.integral_components(), inner.integral_components())
        formal = triple[0].deg
        if modp is not None:
            unreduced = PlaneBirationalMap(triple, reduce=False)
            if ModularLineChain(unreduced, modp).advance() == formal:
                degrees.append(formal)
                logger.debug("deg(h^%d) = %d certified mod %d", n, formal, modp)
                continue
        degrees.append(PlaneBirationalMap(triple).degree)
        logger.debug("deg(h^%d) = %d (exact)", n, degrees[-1])
    return degrees


@dataclass
class OscillationResult:
    """
    h = g o A o g^-1 with the predicted degrees, degree_sequence(h) and,
    when verify="both", the degrees of g o A^n o g^-1 as a cross-check.
    """
    target: OscillationTarget
    map: PlaneBirationalMap
    d: int
    predicted: List[int]
    degrees: List[int]
    horizon: int
    tries: int
    complete: bool = True
    configuration: Optional[PointConfiguration] = None
    jonquieres: Optional[PlaneBirationalMap] = None
    failures: Counter = field(default_factory=Counter)
    conjugate_degrees: Optional[List[int]] = None

    @property
    def verified(self) -> bool:
        if self.conjugate_degrees is not None and self.conjugate_degrees != self.degrees:
            return False
        return self.predicted == self.degrees and all(
            deg == self.d - self.target(n) for n, deg in enumerate(self.degrees, start=1)
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target": self.target.to_dict(),
            "map": self.map.to_dict(),
            "d": self.d,
            "predicted": list(self.predicted),
            "degrees": list(self.degrees),
            "conjugate_degrees": (
                list(self.conjugate_degrees) if self.conjugate_degrees is not None else None
            ),
            "verified": self.verified,
            "horizon": self.horizon,
            "horizon_limited": not self.complete,
            "tries": self.tries,
            "configuration": self.configuration.to_dict() if self.configuration else None,
            "jonquieres": self.jonquieres.to_dict() if self.jonquieres else None,
            "failures": dict(self.failures),
        }


def _sample_seeds(rng, m: int, box: int) -> List[Point]:
    values = [v for v in range(-box, box + 1) if v]
    return [(rng.choice(values), rng.choice(values), 1) for _ in range(m)]


def synthesize_oscillation(target: OscillationTarget, seed: int = 0,
                           box: int = DEFAULT_SAMPLE_BOX,
                           max_tries: int = DEFAULT_MAX_TRIES,
                           horizon: Optional[int] = None,
                           linear_map: Optional[PlaneBirationalMap] = None,
                           verify: str = "both",
                           modp: Optional[int] = DEFAULT_PRIME) -> OscillationResult:
    """
    Build h with deg(h^n) = d - D(n) and check it by composition.

    Sampling retries only while the configuration fails its genericity or
    incidence audits. Once g is built, a disagreement between prediction
    and composition is returned as an unverified result.

    Args:
        target: The dips D
        seed: Run seed for point sampling
        box: Orbit seeds are (a, b, 1) with 0 < |a|, |b| <= box
        max_tries: Sampling attempts before giving up
        horizon: Verification horizon, default 2 * max gap + 5
        linear_map: A, default diag(2, 3, 1)
        verify: "iterate" runs degree_sequence on h; "both" also computes
            g o A^n o g^-1 for each n and requires the two to agree
        modp: Prime for the modular filter, None for exact only

    Returns:
        OscillationResult: The map, d = (m+1)^2 and the degree lists

    Raises:
        SamplingExhaustedError: When no configuration passed within max_tries
    """
    if verify not in ("both", "iterate"):
        raise ValueError(f"unknown verification mode {verify!r}")
    A = linear_map if linear_map is not None else pick_linear_map(0)
    if A.degree != 1:
        raise ValueError("the conjugated map must be linear")
    if horizon is None:
        horizon = 2 * target.max_gap + 5

    if not target.support:
        degrees = degree_sequence(A, horizon).degrees[1:]
        return OscillationResult(target, A, 1, [1] * horizon, degrees, horizon, 0)

    A_inv = invert(A, 1)
    decomposition = decompose_overlaps(target)
    m = len(decomposition.blocks)
    failures: Counter = Counter()
    for attempt in range(1, max_tries + 1):
        rng = seed_stream(seed, "oscillate-points", attempt)
        seeds = _sample_seeds(rng, m, box)
        config = PointConfiguration.from_seeds(A, BASE_POINT, seeds, decomposition.gaps, horizon)

        check = check_jon_conditions(config.q0, config.derived_points, m)
        if not check:
            failures[check.condition] += 1
            logger.warning("attempt %d rejected: %s %s", attempt, check.condition, check.witness)
            continue
        try:
            table = orbit_incidences(A, config.all_points, horizon)
        except ValueError as exc:
            failures["periodic point"] += 1
            logger.warning("attempt %d rejected: %s", attempt, exc)
            continue
        if table.hits != config.designed_hits():
            failures["extra incidence"] += 1
            logger.warning("attempt %d rejected: incidences %s", attempt, table.hits)
            continue
        try:
            g, g_inv = _build_jonquieres_pair(config.q0, config.derived_points)
        except JonquieresError as exc:
            failures["degenerate net"] += 1
            logger.warning("attempt %d rejected: %s", attempt, exc)
            continue

        h = compose(g, compose(A, g_inv))
        h_inv = compose(g, compose(A_inv, g_inv))
        predicted = predicted_degrees(config, horizon, table)
        degrees = degree_sequence(h, horizon, modp, inverse=h_inv).degrees[1:]
        conjugate = None
        if verify == "both":
            conjugate = conjugate_power_degrees(g, A, g_inv, horizon, modp)
        result = OscillationResult(
            target, h, (m + 1) ** 2, predicted, degrees, horizon, attempt,
            complete=table.complete, configuration=config, jonquieres=g, failures=failures,
            conjugate_degrees=conjugate,
        )
        if result.verified:
            logger.info("synthesized degree-%d map for %s after %d tries",
                        h.degree, target.support, attempt)
        else:
            logger.error("predicted %s but computed %s (conjugate %s)",
                         predicted, degrees, conjugate)
        return result

    reason = failures.most_common(1)[0][0] if failures else "none"
    raise SamplingExhaustedError(
        f"no admissible configuration in {max_tries} tries (most frequent failure: {reason})",
        failures,
    )
