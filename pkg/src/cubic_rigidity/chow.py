"""Numerical intersection theory on X = P(E) over the projective line and on
the cubic-surface fibration V in |3L + mG|.

Pic X = ZL + ZG with G^2 = 0, L^3.G = 1 and L^4 = a1 + a2 + a3.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InputError

# degree of the fibres (cubic surfaces)
FIBRE_DEGREE = 3


@dataclass(frozen=True)
class BundleModel:
    a1: int
    a2: int
    a3: int
    m: int
    # carried as data; never checked against actual geometry
    general_position: bool = True

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "m"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise InputError(f"{name} must be an integer, got {v!r}")
        if not 0 <= self.a1 <= self.a2 <= self.a3:
            raise InputError(f"twists must satisfy 0 <= a1 <= a2 <= a3, got {(self.a1, self.a2, self.a3)}")

    @property
    def c1(self) -> int:
        return self.a1 + self.a2 + self.a3


@dataclass(frozen=True)
class XDivClass:
    l: int
    g: int


@dataclass(frozen=True)
class VDivClass:
    """k*(-K_V) + f*F."""
    k: int
    f: int


@dataclass(frozen=True)
class VCycleClass:
    """s*(section) + f*(line in a fibre)."""
    s: int
    f: int


def monomial_degree(model: BundleModel, i: int, j: int) -> Fraction:
    """Degree of L^i G^j with i + j = 4."""
    if i < 0 or j < 0 or i + j != 4:
        raise InputError(f"L^{i} G^{j} is not a top-degree monomial")
    if j >= 2:
        return Fraction(0)
    if j == 1:
        return Fraction(1)
    return Fraction(model.c1)


def chow_product(model: BundleModel, factors) -> Fraction:
    """Top intersection number of four divisor classes on X."""
    factors = list(factors)
    if len(factors) != 4:
        raise InputError(f"need exactly 4 divisor classes on the fourfold X, got {len(factors)}")
    # expand prod(l_k L + g_k G); only G-degree 0 and 1 survive
    coeff_L4 = Fraction(1)
    for d in factors:
        coeff_L4 *= d.l
    coeff_L3G = Fraction(0)
    for k, d in enumerate(factors):
        t = Fraction(d.g)
        for j, other in enumerate(factors):
            if j != k:
                t *= other.l
        coeff_L3G += t
    return coeff_L4 * monomial_degree(model, 4, 0) + coeff_L3G * monomial_degree(model, 3, 1)


def class_of_V(model: BundleModel) -> XDivClass:
    return XDivClass(FIBRE_DEGREE, model.m)


def canonical_class_V(model: BundleModel) -> XDivClass:
    """Class on X restricting to K_V."""
    return XDivClass(-1, model.m + model.c1 - 2)


def k2_dot_L(model: BundleModel) -> Fraction:
    K = canonical_class_V(model)
    return chow_product(model, [K, K, XDivClass(1, 0), class_of_V(model)])


def k2_dot_F(model: BundleModel) -> Fraction:
    K = canonical_class_V(model)
    return chow_product(model, [K, K, XDivClass(0, 1), class_of_V(model)])


def k2_condition_sufficient(model: BundleModel) -> bool:
    """Sufficient criterion 5m >= 12 - 3(a1+a2+a3) for the K^2-condition.

    The K^2-condition itself (non-effectivity of M K_V^2 - f for every M) is
    not decidable from lattice data; only this criterion is exposed.
    """
    return 5 * model.m >= 12 - 3 * model.c1


def cycle_degree(z: VCycleClass, kind: str) -> int:
    """Degree of a 1-cycle: (F.z) if horizontal, (-K_V.z) if vertical.

    A vertical cycle lies in a fibre, so (F.z) = z.s must vanish.
    """
    if kind == "horizontal":
        return z.s
    if kind == "vertical":
        if z.s != 0:
            raise InputError(f"vertical cycle must have zero section part, got s={z.s}")
        return z.s + z.f
    raise InputError(f"kind must be 'horizontal' or 'vertical', got {kind!r}")


def mult_le_deg_check(mult: int, deg: int) -> bool:
    if mult < 0 or deg < 0:
        raise InputError(f"multiplicity and degree must be non-negative, got {mult}, {deg}")
    return mult <= deg
