"""
The lattice Z^{1,9} of a rational surface with an elliptic fibration.

Vectors are written in the basis e0, e1, ..., e9 with e0^2 = 1 and
ei^2 = -1. The anticanonical class xi = 3e0 - e1 - ... - e9 is isotropic;
isometries fixing it act on the horosphere {u : u^2 = 1, u.xi = 3} and
their degree is read off the translation they induce there.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from .codec import fraction_from_json, fraction_to_json
from .config import DEFAULT_IRR_BOUND
from .exactalg import (
    IntVector,
    QMatrix,
    ZMatrix,
    hermite_normal_form,
    hnf_reduce,
    integer_kernel_basis,
    minimal_preimage,
    preimage_bound_constant,
    smith_normal_form,
    solve_rational,
)

logger = logging.getLogger(__name__)

RANK = 10

Permutation = Tuple[int, ...]  # images of 1..9


class ModelError(ValueError):
    """A Halphen model, or an isometry tested against it, is inconsistent."""


@dataclass(frozen=True)
class NSVector:
    """A class a0 e0 + a1 e1 + ... + a9 e9 with rational coordinates."""
    coords: Tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.coords) != RANK:
            raise ValueError(f"NS vectors have {RANK} coordinates, got {len(self.coords)}")
        object.__setattr__(self, "coords", tuple(Fraction(c) for c in self.coords))

    @classmethod
    def of(cls, *coords) -> "NSVector":
        return cls(tuple(coords))

    @classmethod
    def zero(cls) -> "NSVector":
        return cls((0,) * RANK)

    def __getitem__(self, i: int) -> Fraction:
        return self.coords[i]

    def __add__(self, other: "NSVector") -> "NSVector":
        return NSVector(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "NSVector") -> "NSVector":
        return NSVector(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "NSVector":
        return NSVector(tuple(-a for a in self.coords))

    def __mul__(self, scalar) -> "NSVector":
        scalar = Fraction(scalar)
        return NSVector(tuple(a * scalar for a in self.coords))

    __rmul__ = __mul__

    def dot(self, other: "NSVector") -> Fraction:
        return intersection(self, other)

    @property
    def square(self) -> Fraction:
        return intersection(self, self)

    @property
    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coords)

    def integer_coords(self) -> IntVector:
        if not self.is_integral:
            raise ValueError(f"{self} is not integral")
        return tuple(int(c) for c in self.coords)

    def to_list(self) -> List[Any]:
        return [fraction_to_json(c) for c in self.coords]

    @classmethod
    def from_list(cls, values: Sequence) -> "NSVector":
        return cls(tuple(fraction_from_json(v) for v in values))

    def __str__(self) -> str:
        return "(" + "; ".join([str(self.coords[0]), ", ".join(str(c) for c in self.coords[1:])]) + ")"


def E(i: int) -> NSVector:
    """Basis vector e_i, i = 0..9."""
    if not 0 <= i < RANK:
        raise ValueError(f"no basis vector e{i}")
    return NSVector(tuple(int(j == i) for j in range(RANK)))


XI = NSVector.of(3, *([-1] * 9))


def intersection(u: NSVector, v: NSVector) -> Fraction:
    """u0 v0 - sum_{i>=1} ui vi."""
    return u.coords[0] * v.coords[0] - sum(
        (a * b for a, b in zip(u.coords[1:], v.coords[1:])), Fraction(0)
    )


def gram_matrix() -> ZMatrix:
    return ZMatrix.from_rows([[1 if i == j == 0 else -1 if i == j else 0 for j in range(RANK)]
                              for i in range(RANK)], RANK)


@dataclass(frozen=True)
class NSIsometry:
    """Integer 10x10 matrix acting on coordinate columns."""
    matrix: ZMatrix

    @classmethod
    def identity(cls) -> "NSIsometry":
        return cls(ZMatrix.identity(RANK))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "NSIsometry":
        M = ZMatrix.from_rows(rows, RANK)
        if M.rows != RANK:
            raise ValueError(f"isometries are {RANK}x{RANK}")
        return cls(M)

    @classmethod
    def from_images(cls, images: Sequence[NSVector]) -> "NSIsometry":
        """The matrix sending e_j to images[j]."""
        if len(images) != RANK:
            raise ValueError(f"need the images of all {RANK} basis vectors")
        columns = [v.integer_coords() for v in images]
        return cls(ZMatrix.from_rows([list(row) for row in zip(*columns)], RANK))

    def __call__(self, v: NSVector) -> NSVector:
        return NSVector(tuple(
            sum((Fraction(a) * b for a, b in zip(row, v.coords)), Fraction(0))
            for row in self.matrix.entries
        ))

    def __matmul__(self, other: "NSIsometry") -> "NSIsometry":
        return NSIsometry(self.matrix @ other.matrix)

    def preserves_form(self) -> bool:
        J = gram_matrix()
        return self.matrix.transpose() @ J @ self.matrix == J

    def fixes(self, v: NSVector) -> bool:
        return self(v) == v

    def inverse(self) -> "NSIsometry":
        """J M^T J, valid for isometries."""
        if not self.preserves_form():
            raise ValueError("matrix does not preserve the intersection form")
        J = gram_matrix()
        return NSIsometry(J @ self.matrix.transpose() @ J)

    def to_list(self) -> List[List[int]]:
        return [list(row) for row in self.matrix.entries]


def permutation_isometry(perm: Sequence[int]) -> NSIsometry:
    """e0 fixed, e_i -> e_perm(i); perm lists the images of 1..9."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, RANK)):
        raise ValueError(f"not a permutation of 1..9: {perm}")
    return NSIsometry.from_images([E(0)] + [E(p) for p in perm])


def quadratic_involution(i: int, j: int, k: int) -> NSIsometry:
    """
    Action of the quadratic map based at points i, j, k:
    e0 -> 2e0 - ei - ej - ek and ei -> e0 - ej - ek (and cyclically).
    """
    base = (i, j, k)
    if len(set(base)) != 3 or not all(1 <= b < RANK for b in base):
        raise ValueError("need three distinct indices in 1..9")
    images = [E(0) * 2 - E(i) - E(j) - E(k)]
    for n in range(1, RANK):
        if n in base:
            others = [b for b in base if b != n]
            images.append(E(0) - E(others[0]) - E(others[1]))
        else:
            images.append(E(n))
    return NSIsometry.from_images(images)


def translation_isometry(gamma: NSVector) -> NSIsometry:
    """
    alpha -> alpha + (alpha.xi) gamma - ((alpha.gamma) + gamma^2/2 (alpha.xi)) xi.

    An isometry fixing xi for integral gamma orthogonal to xi (gamma^2 is
    even there). It depends on gamma modulo xi and is additive in gamma.
    """
    if not gamma.is_integral:
        raise ValueError("translation vector must be integral")
    if intersection(gamma, XI) != 0:
        raise ValueError("translation vector must be orthogonal to xi")
    half_square = gamma.square / 2
    images = []
    for j in range(RANK):
        alpha = E(j)
        a_xi = intersection(alpha, XI)
        images.append(alpha + gamma * a_xi - XI * (intersection(alpha, gamma) + half_square * a_xi))
    return NSIsometry.from_images(images)


def is_parabolic_isometry(M: NSIsometry) -> bool:
    """Preserves the intersection form and fixes xi."""
    return M.preserves_form() and M.fixes(XI)


def isometry_degree(M: NSIsometry) -> int:
    """e0 . M(e0)."""
    return int(intersection(E(0), M(E(0))))


def horosphere_point(w: NSVector) -> NSVector:
    """
    e0 + w - (w^2 / 6) xi, a point of {u : u^2 = 1, u.xi = 3}.

    Raises:
        ValueError: If w is not orthogonal to both xi and e0
    """
    if intersection(w, XI) != 0 or intersection(w, E(0)) != 0:
        raise ValueError("w must be orthogonal to xi and e0")
    return E(0) + w - XI * (w.square / 6)


def q_norm(w1: NSVector, w2: NSVector) -> Fraction:
    """Squared distance -(w1 - w2)^2 between two points of the horosphere quotient."""
    if intersection(w1, XI) != 3 or intersection(w2, XI) != 3:
        raise ValueError("representatives must satisfy w.xi = 3")
    return -(w1 - w2).square


def project_to_w(v: NSVector) -> NSVector:
    """
    q_P(v) = v - (v.e0 / 3) xi for v orthogonal to xi.

    W = xi^perp & e0^perp is a complement of xi in xi^perp, so this
    identifies xi^perp / xi with W.
    """
    if intersection(v, XI) != 0:
        raise ValueError("vector must be orthogonal to xi")
    return v - XI * (v.coords[0] / 3)


def norm_w(v: NSVector) -> Fraction:
    """Positive norm -v^2 on W."""
    return -v.square


def _w_coordinates(w: NSVector) -> Tuple[Fraction, ...]:
    """Coordinates in the basis e_k - e_{k+1} (k = 1..8) of W: partial sums."""
    sums = []
    running = Fraction(0)
    for c in w.coords[1:RANK - 1]:
        running += c
        sums.append(running)
    return tuple(sums)


def _from_w_coordinates(values: Sequence[Fraction]) -> NSVector:
    values = list(values)
    coords = [Fraction(0), values[0]]
    coords += [values[k] - values[k - 1] for k in range(1, len(values))]
    coords.append(-values[-1])
    return NSVector(tuple(coords))


def enumerate_irr_candidates(m: int, degree_bound: int) -> List[NSVector]:
    """
    All c with c^2 = -2, c.xi = 0 and 0 <= c.e0 <= degree_bound, then xi and m*xi.

    For fixed c0 the remaining coordinates satisfy sum ci = -3 c0 and
    sum ci^2 = c0^2 + 2; partial assignments are pruned with
    (remaining sum)^2 <= (remaining count) * (remaining squares).
    """
    if degree_bound < 0:
        raise ValueError("degree_bound must be non-negative")
    if m < 1:
        raise ValueError("the index m must be at least 1")
    found: List[NSVector] = []

    def extend(prefix: List[int], remaining_sum: int, remaining_sq: int, c0: int) -> None:
        slots = RANK - 1 - len(prefix)
        if slots == 0:
            if remaining_sum == 0 and remaining_sq == 0:
                found.append(NSVector.of(c0, *prefix))
            return
        if remaining_sum * remaining_sum > slots * remaining_sq:
            return
        bound = int(remaining_sq ** 0.5) + 1
        for value in range(-bound, bound + 1):
            if value * value <= remaining_sq:
                prefix.append(value)
                extend(prefix, remaining_sum - value, remaining_sq - value * value, c0)
                prefix.pop()

    for c0 in range(degree_bound + 1):
        extend([], -3 * c0, c0 * c0 + 2, c0)
    found.append(XI)
    if m != 1:
        found.append(XI * m)
    return found


def root_classes_mod_xi() -> List[NSVector]:
    """Representatives with c0 in {0, 1, 2} of the (-2)-classes modulo xi."""
    return [c for c in enumerate_irr_candidates(1, 2) if c.square == -2]


@dataclass
class HalphenModel:
    """
    Lattice data of a Halphen surface of index m.

    irr holds the fibre-component classes, r_basis spans R(X) (which
    contains xi).
    """
    index: int
    irr: List[NSVector]
    r_basis: List[NSVector]
    irr_bound: int = DEFAULT_IRR_BOUND
    _hnf: Optional[List[IntVector]] = field(default=None, init=False, repr=False, compare=False)

    @classmethod
    def trivial(cls, m: int = 1) -> "HalphenModel":
        """All fibres irreducible: Irr = {xi, m xi}, R(X) = <xi>."""
        irr = [XI] if m == 1 else [XI, XI * m]
        return cls(m, irr, [XI])

    @property
    def degree_bound(self) -> int:
        return 3 * self.index

    def validate(self) -> "HalphenModel":
        if self.index < 1:
            raise ModelError("index must be at least 1")
        if len(self.irr) > self.irr_bound:
            raise ModelError(f"{len(self.irr)} classes exceed the bound {self.irr_bound}")
        multiples = {XI, XI * self.index}
        for c in self.irr:
            if not c.is_integral:
                raise ModelError(f"class {c} is not integral")
            if intersection(c, XI) != 0:
                raise ModelError(f"class {c} is not orthogonal to xi")
            if c.square == 0:
                if c not in multiples:
                    raise ModelError(f"isotropic class {c} is not xi or m*xi")
            elif c.square == -2:
                if not 0 <= c.coords[0] <= self.degree_bound:
                    raise ModelError(f"class {c} has degree outside [0, {self.degree_bound}]")
            else:
                raise ModelError(f"class {c} has square {c.square}, expected 0 or -2")
        for r in self.r_basis:
            if not r.is_integral or intersection(r, XI) != 0:
                raise ModelError(f"R(X) generator {r} is not an integral vector orthogonal to xi")
        if any(hnf_reduce(XI.integer_coords(), self.r_hnf())):
            raise ModelError("xi is not in R(X)")
        if hermite_normal_form([c.integer_coords() for c in self.irr]) != self.r_hnf():
            raise ModelError("R(X) generators do not span the lattice of the Irr classes")
        return self

    def r_hnf(self) -> List[IntVector]:
        if self._hnf is None:
            self._hnf = hermite_normal_form([r.integer_coords() for r in self.r_basis])
        return self._hnf

    def coset_representative(self, v: NSVector) -> NSVector:
        """Canonical representative of v modulo R(X)."""
        return NSVector(hnf_reduce(v.integer_coords(), self.r_hnf()))

    def preserves_irr(self, M: NSIsometry) -> bool:
        classes = set(self.irr)
        return {M(c) for c in classes} == classes

    def preserves_r_lattice(self, M: NSIsometry) -> bool:
        hnf = self.r_hnf()
        return all(not any(hnf_reduce(M(r).integer_coords(), hnf)) for r in self.r_basis)

    def axis_lattice(self) -> "AxisLattice":
        return AxisLattice.for_model(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "irr": [c.to_list() for c in self.irr],
            "r_basis": [r.to_list() for r in self.r_basis],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HalphenModel":
        try:
            model = cls(
                index=int(data["index"]),
                irr=[NSVector.from_list(v) for v in data["irr"]],
                r_basis=[NSVector.from_list(v) for v in data["r_basis"]],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model: {exc}") from exc
        return model.validate()


def translation_action(gamma: NSVector, alpha: NSVector, model: HalphenModel) -> NSVector:
    """Class of alpha + (alpha.xi) gamma modulo R(X), as its canonical representative."""
    if intersection(gamma, XI) != 0:
        raise ValueError("gamma must be orthogonal to xi")
    return model.coset_representative(alpha + gamma * intersection(alpha, XI))


def _w_inner(u: NSVector, v: NSVector) -> Fraction:
    return -intersection(u, v)


def _independent(vectors: Sequence[NSVector]) -> List[NSVector]:
    chosen: List[NSVector] = []
    for v in vectors:
        trial = chosen + [v]
        if QMatrix.from_rows([_w_coordinates(u) for u in trial], RANK - 2).rank() == len(trial):
            chosen = trial
    return chosen


def axis_translation_vector(gamma: NSVector, model: HalphenModel) -> NSVector:
    """
    3 a(gamma): three times the orthogonal projection of q_P(gamma) onto
    the part of W orthogonal to R(X).

    Raises:
        ModelError: If the Gram matrix of R(X) in W is singular
    """
    w = project_to_w(gamma)
    span = _independent([project_to_w(r) for r in model.r_basis])
    if span:
        gram = QMatrix.from_rows([[_w_inner(a, b) for b in span] for a in span], len(span))
        try:
            weights = solve_rational(gram, [_w_inner(a, w) for a in span])
        except ValueError as exc:
            raise ModelError(f"degenerate R(X) in the horosphere quotient: {exc}") from exc
        for weight, a in zip(weights, span):
            w = w - a * weight
    return w * 3


@dataclass(frozen=True)
class TranslationPart:
    """v -> L v + t on W, the chart of the horosphere quotient centred at e0."""
    linear: QMatrix
    translation: NSVector


def translation_part(M: NSIsometry, model: Optional[HalphenModel] = None) -> TranslationPart:
    """
    Decompose the affine action of M on the horosphere quotient.

    L is q_P o M on W in the basis e_k - e_{k+1}; t = q_P(M e0 - e0).

    Raises:
        ValueError: If M does not fix xi
    """
    if not is_parabolic_isometry(M):
        raise ValueError("isometry must preserve the form and fix xi")
    if model is not None and not model.preserves_r_lattice(M):
        raise ModelError("isometry does not preserve R(X)")
    columns = []
    for k in range(1, RANK - 1):
        image = project_to_w(M(E(k) - E(k + 1)))
        columns.append(_w_coordinates(image))
    linear = QMatrix.from_rows([list(row) for row in zip(*columns)], RANK - 2)
    return TranslationPart(linear, project_to_w(M(E(0)) - E(0)))


def verify_degree_identity(M: NSIsometry, model: Optional[HalphenModel] = None) -> bool:
    """deg(M) = 1 + |t|^2 / 2 for the translation t of M at e0."""
    if not is_parabolic_isometry(M):
        return False
    try:
        t = translation_part(M, model).translation
    except ModelError:
        return False
    return isometry_degree(M) == 1 + norm_w(t) / 2


def solve_conjugacy_translation(L_g: ZMatrix, s_prime: Sequence[int],
                                gram: Optional[Sequence[Sequence]] = None,
                                snf=None) -> Optional[IntVector]:
    """
    s with (L_g - Id) s = s_prime, of norm at most C * |s_prime|.

    Returns:
        Optional[IntVector]: A bounded solution, or None when s_prime is
        not in the image
    """
    phi = ZMatrix.from_rows(
        [[L_g[i, j] - int(i == j) for j in range(L_g.cols)] for i in range(L_g.rows)], L_g.cols
    )
    return minimal_preimage(phi, s_prime, gram, snf)


def _hnf_coordinates(vector: Sequence[int], hnf: Sequence[IntVector]) -> Optional[IntVector]:
    v = list(vector)
    coords = []
    for row in hnf:
        pivot = next(j for j, x in enumerate(row) if x)
        if v[pivot] % row[pivot]:
            return None
        q = v[pivot] // row[pivot]
        coords.append(q)
        if q:
            v = [a - q * b for a, b in zip(v, row)]
    return tuple(coords) if not any(v) else None


@dataclass
class AxisLattice:
    """
    q_P of the translations that fix every class of Irr, with a Z-basis.

    Translations T_delta with delta orthogonal to xi and to all of Irr fix
    Irr pointwise; their images in W form a lattice, stored through the
    Hermite form of 3 times its W-coordinates.
    """
    basis: List[NSVector]
    hnf: List[IntVector]
    gram: QMatrix

    @classmethod
    def for_model(cls, model: HalphenModel) -> "AxisLattice":
        J = gram_matrix()
        constraints = [J.apply(c.integer_coords()) for c in [XI] + list(model.irr)]
        kernel = integer_kernel_basis(ZMatrix.from_rows(constraints, RANK))
        scaled = [[int(3 * c) for c in _w_coordinates(project_to_w(NSVector(tuple(k))))]
                  for k in kernel]
        hnf = hermite_normal_form(scaled)
        basis = [_from_w_coordinates([Fraction(c, 3) for c in row]) for row in hnf]
        gram = QMatrix.from_rows([[_w_inner(a, b) for b in basis] for a in basis], len(basis))
        return cls(basis, hnf, gram)

    @property
    def rank(self) -> int:
        return len(self.basis)

    def coordinates(self, w: NSVector) -> Optional[IntVector]:
        """Integer coordinates of w in the basis, None if w is off the lattice."""
        scaled = [3 * c for c in _w_coordinates(w)]
        if any(c.denominator != 1 for c in scaled):
            return None
        return _hnf_coordinates([int(c) for c in scaled], self.hnf)

    def vector(self, coords: Sequence[int]) -> NSVector:
        total = NSVector.zero()
        for c, b in zip(coords, self.basis):
            total = total + b * c
        return total

    def matrix_of(self, M: NSIsometry) -> Optional[ZMatrix]:
        """Matrix of q_P o M on the lattice, None if M does not preserve it."""
        columns = []
        for b in self.basis:
            coords = self.coordinates(project_to_w(M(b)))
            if coords is None:
                return None
            columns.append(coords)
        return ZMatrix.from_rows([list(row) for row in zip(*columns)], self.rank)


def lift_translation(w: NSVector) -> NSVector:
    """An integral delta orthogonal to xi with q_P(delta) = w."""
    for d0 in range(3):
        delta = w + XI * Fraction(d0, 3)
        if delta.is_integral:
            return delta
    raise ValueError(f"{w} is not the projection of an integral vector")


def decompose_modelled(M: NSIsometry) -> Optional[Tuple[Permutation, NSVector]]:
    """
    (pi, gamma) with M = T_gamma o P_pi, or None when M has no such form.

    q_P(M(ei - e1)) = e_pi(i) - e_pi(1) recovers pi, and
    M e0 - e0 = 3 gamma - k xi recovers gamma modulo xi.
    """
    if not is_parabolic_isometry(M):
        return None
    differences = [project_to_w(M(E(i) - E(1))) for i in range(2, RANK)]
    first = None
    targets = []
    for d in differences:
        minus = [i for i in range(1, RANK) if d.coords[i] == -1]
        plus = [i for i in range(1, RANK) if d.coords[i] == 1]
        if len(minus) != 1 or len(plus) != 1 or sum(1 for c in d.coords if c) != 2:
            return None
        if first is None:
            first = minus[0]
        elif minus[0] != first:
            return None
        targets.append(plus[0])
    perm = (first,) + tuple(targets)
    if sorted(perm) != list(range(1, RANK)):
        return None
    shift = M(E(0)) - E(0)
    for k in range(3):
        gamma = (shift + XI * k) * Fraction(1, 3)
        if gamma.is_integral:
            break
    else:
        return None
    if translation_isometry(gamma) @ permutation_isometry(perm) != M:
        return None
    return perm, gamma


def _cycles(perm: Permutation) -> List[Tuple[int, ...]]:
    seen, cycles = set(), []
    for start in range(1, RANK):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        nxt = perm[start - 1]
        while nxt != start:
            cycle.append(nxt)
            seen.add(nxt)
            nxt = perm[nxt - 1]
        cycles.append(tuple(cycle))
    return cycles


def _conjugators(pi: Permutation, rho: Permutation) -> Iterator[Permutation]:
    """Every c with c pi c^-1 = rho, identity-like alignments first."""
    by_length: Dict[int, Tuple[List[Tuple[int, ...]], List[Tuple[int, ...]]]] = {}
    for cycle in _cycles(pi):
        by_length.setdefault(len(cycle), ([], []))[0].append(cycle)
    for cycle in _cycles(rho):
        by_length.setdefault(len(cycle), ([], []))[1].append(cycle)
    if any(len(a) != len(b) for a, b in by_length.values()):
        return
    lengths = sorted(by_length)
    choices = []
    for length in lengths:
        source, target = by_length[length]
        options = []
        for order in permutations(range(len(target))):
            for shifts in product(range(length), repeat=len(source)):
                options.append((order, shifts))
        choices.append(options)
    for picks in product(*choices):
        c = [0] * (RANK - 1)
        for length, (order, shifts) in zip(lengths, picks):
            source, target = by_length[length]
            for idx, cycle in enumerate(source):
                image = target[order[idx]]
                for pos, point in enumerate(cycle):
                    c[point - 1] = image[(pos + shifts[idx]) % length]
        yield tuple(c)


def _matching_permutations(wa: NSVector, wb: NSVector) -> Iterator[Permutation]:
    """Permutations c with c(wa) = wb coordinatewise on e1..e9."""
    classes: Dict[Fraction, Tuple[List[int], List[int]]] = {}
    for i in range(1, RANK):
        classes.setdefault(wa.coords[i], ([], []))[0].append(i)
        classes.setdefault(wb.coords[i], ([], []))[1].append(i)
    if any(len(a) != len(b) for a, b in classes.values()):
        return
    groups = list(classes.values())
    for orders in product(*(permutations(target) for _, target in groups)):
        c = [0] * (RANK - 1)
        for (source, _), order in zip(groups, orders):
            for s, t in zip(source, order):
                c[s - 1] = t
        yield tuple(c)


@dataclass
class ConjugacyResult:
    """h with h o f o h^-1 = g and the model's degree bound."""
    h: NSIsometry
    degree: int
    a_model: Fraction
    within_bound: bool
    conjugator: Permutation
    translation: NSVector

    def to_dict(self) -> Dict[str, Any]:
        return {
            "h": self.h.to_list(),
            "degree": self.degree,
            "a_model": fraction_to_json(self.a_model),
            "within_bound": self.within_bound,
            "conjugator": list(self.conjugator),
            "translation": self.translation.to_list(),
        }


def conjugacy_search(f: NSIsometry, g: NSIsometry,
                     model: Optional[HalphenModel] = None,
                     linear_parts: Optional[Sequence[Permutation]] = None
                     ) -> Optional[ConjugacyResult]:
    """
    Find h = T_delta o P_c with h o f o h^-1 = g.

    Both maps are split as T_a o P_pi and T_b o P_rho. Conjugating by
    T_delta o P_c gives T_(delta + c a - rho delta) o P_(c pi c^-1), so c
    ranges over the conjugators of pi to rho (restricted to linear_parts
    when given, and to those preserving Irr) and delta solves
    (rho - Id) delta = c a - b on the axis lattice with the bounded
    preimage. The first h found is verified by matrix multiplication.

    Returns:
        Optional[ConjugacyResult]: h with deg(h) and the bound
        A_model (deg f + deg g), or None if no modelled conjugator exists

    Raises:
        ModelError: If f or g is not parabolic or moves the Irr set
    """
    model = model or HalphenModel.trivial()
    for name, M in (("f", f), ("g", g)):
        if not is_parabolic_isometry(M):
            raise ModelError(f"{name} does not preserve the form and fix xi")
        if not model.preserves_irr(M):
            raise ModelError(f"{name} does not preserve the model's Irr set")
    split_f, split_g = decompose_modelled(f), decompose_modelled(g)
    if split_f is None or split_g is None:
        raise ModelError("isometry is not a translation composed with a permutation")
    pi, a = split_f
    rho, b = split_g

    lattice = model.axis_lattice()
    P_rho = permutation_isometry(rho)
    L_rho = lattice.matrix_of(P_rho)
    if L_rho is None:
        raise ModelError("linear part does not preserve the axis lattice")
    phi = ZMatrix.from_rows(
        [[L_rho[i, j] - int(i == j) for j in range(lattice.rank)] for i in range(lattice.rank)],
        lattice.rank,
    )
    snf = smith_normal_form(phi)
    c_phi = preimage_bound_constant(phi, lattice.gram)
    a_model = 2 * c_phi + 1
    deg_sum = isometry_degree(f) + isometry_degree(g)

    wa, wb = project_to_w(a), project_to_w(b)
    if linear_parts is not None:
        allowed = {tuple(p) for p in linear_parts}
        candidates: Iterator[Permutation] = (c for c in _conjugators(pi, rho) if c in allowed)
    elif rho == tuple(range(1, RANK)) and pi == rho:
        candidates = _matching_permutations(wa, wb)
    else:
        candidates = _conjugators(pi, rho)

    tried = 0
    for c in candidates:
        tried += 1
        P_c = permutation_isometry(c)
        if not model.preserves_irr(P_c):
            continue
        target = lattice.coordinates(project_to_w(P_c(a)) - wb)
        if target is None:
            continue
        solution = solve_conjugacy_translation(L_rho, target, lattice.gram, snf)
        if solution is None:
            continue
        delta = lift_translation(lattice.vector(solution))
        h = translation_isometry(delta) @ P_c
        if h @ f != g @ h:
            logger.warning("candidate conjugator %s failed verification", c)
            continue
        degree = isometry_degree(h)
        logger.info("conjugator found after %d candidates, degree %d", tried, degree)
        return ConjugacyResult(h, degree, a_model, degree <= a_model * deg_sum, c, delta)
    logger.info("no modelled conjugator among %d candidates", tried)
    return None
