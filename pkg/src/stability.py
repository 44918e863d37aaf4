"""
Algebraic stability of plane maps and the named example families.

A map f of degree d is algebraically stable when deg(f^n) = d^n; stability
is certified here up to a finite horizon only.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from sympy import Rational, multiplicity, primefactors
from sympy.polys.domains import QQ
from sympy.polys.orderings import lex
from sympy.polys.rings import PolyElement, ring

from .codec import fraction_from_json, seed_stream
from .config import (
    DEFAULT_BUDGET_DIGITS,
    DEFAULT_HORIZON,
    DEFAULT_MATRIX_BOX,
    DEFAULT_PRIME,
    DEFAULT_STABILITY_TRIALS,
)
from .cremona import (
    PlaneBirationalMap,
    apply,
    compose,
    degree_sequence,
    invert,
    modular_degree_bounds,
)
from .exactalg import HomPoly3, QMatrix, determinant, from_qq, to_qq

logger = logging.getLogger(__name__)

UNI, _U = ring("u", QQ, lex)

Coefficients = Sequence  # low degree first


@dataclass
class StabilityCertificate:
    """deg(f^n) against deg(f)^n up to a horizon."""
    map: PlaneBirationalMap
    horizon: int
    degrees: List[int]
    postcomposition: Optional[PlaneBirationalMap] = None
    trial: Optional[int] = None
    drop_profile: List[int] = field(init=False)

    def __post_init__(self):
        d = self.map.degree
        self.drop_profile = [d ** n - deg for n, deg in enumerate(self.degrees) if n >= 1]

    @property
    def verified(self) -> bool:
        return not any(self.drop_profile)

    @property
    def not_regularizable(self) -> bool:
        """A stable map of degree >= 2 is not conjugate to an automorphism (horizon-limited)."""
        return self.verified and self.map.degree >= 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "map": self.map.to_dict(),
            "postcomposition": self.postcomposition.to_dict() if self.postcomposition else None,
            "trial": self.trial,
            "horizon": self.horizon,
            "degrees": list(self.degrees),
            "verified": self.verified,
            "drop_profile": list(self.drop_profile),
            "not_regularizable": self.not_regularizable,
            "horizon_limited": True,
        }


def is_algebraically_stable_up_to(f: PlaneBirationalMap, N: int,
                                  modp: Optional[int] = DEFAULT_PRIME,
                                  budget: int = DEFAULT_BUDGET_DIGITS) -> StabilityCertificate:
    """
    Compare deg(f^n) with deg(f)^n for n <= N.

    Raises:
        ValueError: If N < 2
        BudgetExceededError: If an exact iterate outgrows the budget
    """
    if N < 2:
        raise ValueError("stability needs a horizon N >= 2")
    report = degree_sequence(f, N, modp, budget)
    return StabilityCertificate(map=f, horizon=N, degrees=report.degrees)


def _random_invertible(rng, box: int) -> QMatrix:
    while True:
        M = QMatrix.from_rows([[rng.randint(-box, box) for _ in range(3)] for _ in range(3)], 3)
        if determinant(M) != 0:
            return M


def stabilize_by_postcomposition(f: PlaneBirationalMap, seed: int = 0,
                                 trials: int = DEFAULT_STABILITY_TRIALS,
                                 N: int = DEFAULT_HORIZON,
                                 box: int = DEFAULT_MATRIX_BOX,
                                 modp: Optional[int] = DEFAULT_PRIME,
                                 budget: int = DEFAULT_BUDGET_DIGITS
                                 ) -> Optional[Tuple[PlaneBirationalMap, StabilityCertificate]]:
    """
    Search for a linear A such that A o f is algebraically stable up to N.

    Trial 0 is the identity; trials 1 onward are seeded integer matrices
    with entries in [-box, box]. Candidates are screened with the modular
    degree bounds and certified with degree_sequence.

    Returns:
        Optional[Tuple[PlaneBirationalMap, StabilityCertificate]]: The first
        A that works with its certificate, or None after `trials` attempts
    """
    d = f.degree
    if d < 2:
        raise ValueError("stabilization needs deg(f) >= 2")
    target = [d ** n for n in range(N + 1)]
    for trial in range(trials):
        if trial == 0:
            A = PlaneBirationalMap.identity()
        else:
            A = PlaneBirationalMap.linear(_random_invertible(seed_stream(seed, "stabilizer", trial), box))
        candidate = compose(A, f)
        if modp is not None:
            bounds = modular_degree_bounds(candidate, N, modp)
            if bounds is not None and bounds != target:
                logger.debug("trial %d screened out: modular bounds %s", trial, bounds)
                continue
        certificate = is_algebraically_stable_up_to(candidate, N, modp, budget)
        if certificate.verified:
            certificate.postcomposition = A
            certificate.trial = trial
            logger.info("stable post-composition found at trial %d", trial)
            return A, certificate
        logger.debug("trial %d not stable: %s", trial, certificate.degrees)
    logger.info("no stabilizing post-composition in %d trials", trials)
    return None


# example families

def make_henon_map() -> PlaneBirationalMap:
    """[yz : y^2 - xz : z^2], the affine map (x, y) -> (y, y^2 - x)."""
    return PlaneBirationalMap.parse(["y*z", "y**2 - x*z", "z**2"])


def make_family_fa(a) -> PlaneBirationalMap:
    """f_a(x, y) = (x + a, yx / (x + 1)) as [(x+az)(x+z) : xy : (x+z)z]."""
    a = fraction_from_json(a)
    x, y, z = HomPoly3.gens()
    return PlaneBirationalMap(((x + z * a) * (x + z), x * y, (x + z) * z))


def family_fa_is_elliptic(a) -> bool:
    """True iff some nonzero integer multiple of a equals 1."""
    a = fraction_from_json(a)
    return a != 0 and a.numerator in (1, -1)


def _uni(coeffs: Coefficients) -> PolyElement:
    return UNI.from_dict({(i,): to_qq(fraction_from_json(c)) for i, c in enumerate(coeffs)
                          if fraction_from_json(c)})


def _coefficients(poly: PolyElement) -> List[Fraction]:
    if not poly:
        return [Fraction(0)]
    coeffs = [Fraction(0)] * (poly.degree() + 1)
    for (i,), c in poly.terms():
        coeffs[i] = from_qq(c)
    return coeffs


def _rescale(poly: PolyElement, t: Fraction) -> PolyElement:
    """p(t u)."""
    return UNI.from_dict({(i,): c * to_qq(t ** i) for (i,), c in poly.terms()})


def _reduced_quotient(num: PolyElement, den: PolyElement) -> Tuple[PolyElement, PolyElement]:
    if not den:
        raise ValueError("denominator of q is zero")
    if not num:
        raise ValueError("q is identically zero")
    common = num.gcd(den)
    num, den = num.exquo(common), den.exquo(common)
    lead = den.LC
    return num.quo_ground(lead), den.quo_ground(lead)


def _homogenize(poly: PolyElement, e: int) -> HomPoly3:
    """sum c_i x^i z^(e-i)."""
    return HomPoly3.from_terms({(i, 0, e - i): from_qq(c) for (i,), c in poly.terms()}, e)


def _check_alpha(alpha) -> Fraction:
    alpha = fraction_from_json(alpha)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    if abs(alpha) == 1:
        raise ValueError(f"alpha = {alpha} is a root of unity")
    return alpha


def _falpha_from_polys(alpha: Fraction, num: PolyElement, den: PolyElement) -> PlaneBirationalMap:
    num, den = _reduced_quotient(num, den)
    if num.degree() <= 0 and den.degree() <= 0:
        raise ValueError("q must be non-constant")
    e = max(num.degree(), den.degree())
    x, y, z = HomPoly3.gens()
    N, D = _homogenize(num, e), _homogenize(den, e)
    return PlaneBirationalMap((x * D * alpha, N * y, z * D))


def make_family_falpha(alpha, q_num: Coefficients, q_den: Coefficients = (1,)) -> PlaneBirationalMap:
    """
    f_alpha(x, y) = (alpha x, q(x) y) in the affine chart z = 1.

    Args:
        alpha: Nonzero rational other than +-1
        q_num: Numerator coefficients of q, constant term first
        q_den: Denominator coefficients of q, constant term first

    Returns:
        PlaneBirationalMap: [alpha x D : N y : z D] with N, D homogenized to
        degree deg q

    Raises:
        ValueError: If alpha is 0 or a root of unity, or q is constant
    """
    return _falpha_from_polys(_check_alpha(alpha), _uni(q_num), _uni(q_den))


def _iterate_factor(alpha: Fraction, num: PolyElement, den: PolyElement,
                    n: int) -> Tuple[PolyElement, PolyElement]:
    qn_num, qn_den = UNI.one, UNI.one
    for j in range(n):
        qn_num = qn_num * _rescale(num, alpha ** j)
        qn_den = qn_den * _rescale(den, alpha ** j)
    return _reduced_quotient(qn_num, qn_den)


def falpha_iterate_factor(alpha, q_num: Coefficients, q_den: Coefficients,
                          n: int) -> Tuple[List[Fraction], List[Fraction]]:
    """
    q_n(x) = prod_{j<n} q(alpha^j x), so that f_alpha^n = (alpha^n x, q_n(x) y).

    Returns:
        Tuple[List[Fraction], List[Fraction]]: Reduced numerator and monic
        denominator, constant term first
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    alpha = _check_alpha(alpha)
    num, den = _iterate_factor(alpha, _uni(q_num), _uni(q_den), n)
    return _coefficients(num), _coefficients(den)


def rational_degree(num: Coefficients, den: Coefficients) -> int:
    """max(deg numerator, deg denominator) after cancellation."""
    n, d = _reduced_quotient(_uni(num), _uni(den))
    return max(n.degree(), d.degree())


def make_falpha_iterate(alpha, q_num: Coefficients, q_den: Coefficients,
                        n: int) -> PlaneBirationalMap:
    """(alpha^n x, q_n(x) y) from the product formula."""
    if n < 1:
        raise ValueError("n must be at least 1")
    alpha = _check_alpha(alpha)
    num, den = _iterate_factor(alpha, _uni(q_num), _uni(q_den), n)
    return _falpha_from_polys(alpha ** n, num, den)


def _is_power_of(value: Fraction, base: Fraction) -> bool:
    """value = base^k for some integer k; base is not 0 or +-1."""
    if value == 0:
        return False
    prime = primefactors(base.numerator * base.denominator)[0]
    step = multiplicity(prime, Rational(abs(base.numerator), base.denominator))
    target = multiplicity(prime, Rational(abs(value.numerator), value.denominator))
    if target % step:
        return False
    return base ** (target // step) == value


def falpha_is_jonquieres_twist(alpha, zero, pole) -> bool:
    """
    For q = (x - zero)/(x - pole), whether deg(q_n) grows linearly in n.

    Factors of q_n cancel exactly when pole/zero is an integral power of
    alpha; otherwise deg(q_n) = n.
    """
    alpha = _check_alpha(alpha)
    zero, pole = fraction_from_json(zero), fraction_from_json(pole)
    if zero == pole:
        raise ValueError("q must be non-constant")
    if zero == 0 or pole == 0:
        return True
    return not _is_power_of(pole / zero, alpha)


def _root_product(roots: Sequence[Fraction]) -> PolyElement:
    s = UNI.one
    for r in roots:
        s = s * (_U - to_qq(r))
    return s


def verify_falpha_conjugacy(alpha, q_num: Coefficients, q_den: Coefficients, m: int,
                            roots: Optional[Sequence] = None) -> bool:
    """
    Check that h o f_alpha o h^-1 = g_{alpha,m} for h(x, y) = (x, s(x) y).

    g_{alpha,m}(x, y) = (alpha x, q(x) s_m(alpha x) / s_m(x) y) with
    s_m(x) = (x - 1)(x - alpha)...(x - alpha^m). The roots of s default to
    those of s_m; passing others tests a different h against the same g.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    alpha = _check_alpha(alpha)
    canonical = [alpha ** j for j in range(m + 1)]
    s = _root_product([fraction_from_json(r) for r in roots] if roots is not None else canonical)
    s_m = _root_product(canonical)
    e = s.degree()
    x, y, z = HomPoly3.gens()
    h = PlaneBirationalMap((x * z ** e, _homogenize(s, e) * y, z ** (e + 1)))
    h_inv = invert(h, e + 1)
    if h_inv is None:
        return False
    num, den = _uni(q_num), _uni(q_den)
    f = _falpha_from_polys(alpha, num, den)
    expected = _falpha_from_polys(alpha, num * _rescale(s_m, alpha), den * s_m)
    return compose(h, compose(f, h_inv)) == expected


# renormalization

def make_renormalization_quadratic(a, b) -> PlaneBirationalMap:
    """(x, y) -> (ax + y^2, by)."""
    a, b = fraction_from_json(a), fraction_from_json(b)
    x, y, z = HomPoly3.gens()
    return PlaneBirationalMap((x * z * a + y * y, y * z * b, z * z))


def make_renormalization_loxodromic(a, b) -> PlaneBirationalMap:
    """(x, y) -> (ax + (y + x^2)^2, by + bx^2)."""
    a, b = fraction_from_json(a), fraction_from_json(b)
    x, y, z = HomPoly3.gens()
    w = y * z + x * x
    return PlaneBirationalMap((x * z ** 3 * a + w * w, (y * z ** 3 + x * x * z * z) * b, z ** 4))


def make_renormalization_jonquieres(a, b) -> PlaneBirationalMap:
    """(x, y) -> (a(1 + y)x, by)."""
    a, b = fraction_from_json(a), fraction_from_json(b)
    x, y, z = HomPoly3.gens()
    return PlaneBirationalMap(((z + y) * x * a, y * z * b, z * z))


ORIGIN = (0, 0, 1)


def _check_fixed_origin(f: PlaneBirationalMap) -> None:
    if apply(f, ORIGIN) != ORIGIN:
        raise ValueError("the origin is not a fixed point of f")
    inverse = invert(f, f.degree)
    if inverse is None:
        raise ValueError("f has no inverse of its own degree")
    if apply(inverse, ORIGIN) != ORIGIN:
        raise ValueError("the inverse of f is not defined at the origin")


def linear_part_at_origin(f: PlaneBirationalMap) -> QMatrix:
    """Df at the fixed origin of the chart z = 1, as a 2x2 matrix."""
    if apply(f, ORIGIN) != ORIGIN:
        raise ValueError("the origin is not a fixed point of f")
    P, Q, R = f.components
    r0 = R.evaluate(ORIGIN)
    rows = [[comp.diff(i).evaluate(ORIGIN) / r0 for i in range(2)] for comp in (P, Q)]
    return QMatrix.from_rows(rows, 2)


def renormalize_at_fixed_point(f: PlaneBirationalMap, t) -> PlaneBirationalMap:
    """
    M_t^-1 o f o M_t for M_t(x, y) = (tx, ty).

    A term of total affine degree k in the first two components picks up
    t^(k-1), so as t -> 0 the conjugates tend to the linear part at the
    origin.

    Raises:
        ValueError: If t = 0 or the origin is not a non-degenerate fixed point
    """
    t = fraction_from_json(t)
    if t == 0:
        raise ValueError("t must be nonzero")
    _check_fixed_origin(f)
    M_t = PlaneBirationalMap.linear([[t, 0, 0], [0, t, 0], [0, 0, 1]])
    M_inv = PlaneBirationalMap.linear([[1 / t, 0, 0], [0, 1 / t, 0], [0, 0, 1]])
    return compose(M_inv, compose(f, M_t))
