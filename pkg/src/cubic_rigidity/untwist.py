"""Untwisting maximal curves by the fibrewise involutions tau_C.

Classes live in Pic V*/ZF = Z h + Z e (h = -K_V, e the exceptional divisor of
the blow up of C). A pencil with invariant n and multiplicity nu along C has
class n*h - nu*e.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import DomainError, InputError, PreconditionError

# row i = image of basis vector i, basis (h, e)
_MATRICES = {
    "section": ((3, -4), (2, -3)),
    "bisection": ((5, -6), (4, -5)),
}

VERTICAL_REJECTION = (
    "vertical maximal curves do not occur: the residual curve of the cone "
    "construction would be a base curve of the pencil, forcing the fibre to "
    "be a fixed component"
)


@dataclass(frozen=True)
class PicStarClass:
    h: int
    e: int


@dataclass(frozen=True)
class MaximalCurve:
    kind: str
    nu: int
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind == "vertical":
            raise DomainError(VERTICAL_REJECTION)
        if self.kind not in _MATRICES:
            raise InputError(f"curve kind must be 'section' or 'bisection', got {self.kind!r}")
        if not isinstance(self.nu, int) or isinstance(self.nu, bool) or self.nu < 0:
            raise InputError(f"curve multiplicity must be a non-negative integer, got {self.nu!r}")


@dataclass(frozen=True)
class PencilState:
    n: int
    l: int
    curves: tuple = ()

    def __post_init__(self):
        for name in ("n", "l"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise InputError(f"{name} must be a non-negative integer, got {v!r}")
        if self.n == 0 and self.l != 1:
            raise InputError("n = 0 means the map is fibre-wise, which forces l = 1")
        object.__setattr__(self, "curves", tuple(self.curves))

    def maximal(self):
        return [i for i, c in enumerate(self.curves) if c.nu > self.n]


@dataclass(frozen=True)
class UntwistStep:
    curve: int
    kind: str
    before: PencilState
    after: PencilState


@dataclass(frozen=True)
class UntwistWord:
    steps: tuple = field(default_factory=tuple)

    @property
    def curves(self):
        return [s.curve for s in self.steps]

    def __len__(self):
        return len(self.steps)


def involution_matrix(kind: str):
    if kind not in _MATRICES:
        raise InputError(f"unknown curve kind {kind!r}")
    return _MATRICES[kind]


def apply_involution(kind: str, cls: PicStarClass) -> PicStarClass:
    (a, b), (c, d) = involution_matrix(kind)
    return PicStarClass(cls.h * a + cls.e * c, cls.h * b + cls.e * d)


def untwist_once(state: PencilState, curve: MaximalCurve):
    """Compose with tau_C; returns ``(new_n, new_nu)`` for the untwisted curve.

    Raises DomainError if the transformed class has negative n or negative
    multiplicity along C, which cannot come from an actual pencil.
    """
    if state.n < 1:
        raise PreconditionError("untwisting needs n >= 1", failed="n >= 1")
    if curve.nu <= state.n:
        raise PreconditionError(
            f"curve is not maximal: nu = {curve.nu} <= n = {state.n}", failed="nu > n")
    image = apply_involution(curve.kind, PicStarClass(state.n, -curve.nu))
    new_n, new_nu = image.h, -image.e
    if new_n < 0 or new_nu < 0:
        raise DomainError(
            f"{curve.kind} with n = {state.n}, nu = {curve.nu} leaves the geometric regime "
            f"(n' = {new_n}, nu' = {new_nu}); multiplicity bounds exclude such a pencil")
    return new_n, new_nu


def untwist_all(state: PencilState, mode: str = "strict",
                resupply: Optional[Callable[[int, PencilState, int], int]] = None):
    """Untwist maximal curves until none remain.

    The curve with the largest multiplicity goes first (ties: list order).
    Only the untwisted curve's new multiplicity is known from the lattice
    action. In ``strict`` mode the multiplicities of the other curves must be
    re-supplied after every step through ``resupply(step, state, index)``;
    without a callback strict mode refuses to untwist while other curves are
    present. ``lenient`` mode keeps them unchanged.
    """
    if mode not in ("strict", "lenient"):
        raise InputError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    steps = []
    current = state
    while True:
        cand = current.maximal()
        if not cand:
            break
        idx = max(cand, key=lambda i: (current.curves[i].nu, -i))
        curve = current.curves[idx]
        new_n, new_nu = untwist_once(current, curve)
        curves = list(current.curves)
        curves[idx] = replace(curve, nu=new_nu)
        # l is only known modulo the lattice action; a fibre-wise result has l = 1
        new_l = 1 if new_n == 0 else current.l
        provisional = PencilState(new_n, new_l, tuple(curves))
        for j, other in enumerate(curves):
            if j == idx:
                continue
            if mode == "lenient":
                continue
            if resupply is None:
                raise InputError(
                    f"strict mode: multiplicity of curve {j} after untwisting curve {idx} "
                    "is not determined by the lattice action; supply it or use lenient mode")
            nu = resupply(len(steps), provisional, j)
            curves[j] = replace(other, nu=nu)
        after = PencilState(new_n, new_l, tuple(curves))
        steps.append(UntwistStep(idx, curve.kind, current, after))
        current = after
    return UntwistWord(tuple(steps)), current


def replay(state: PencilState, word: UntwistWord) -> PencilState:
    """Re-run a word step by step, recomputing each untwist independently."""
    current = state
    for step in word.steps:
        if step.before != current:
            raise InputError(f"word does not start from the given state at curve {step.curve}")
        curve = current.curves[step.curve]
        new_n, new_nu = untwist_once(current, curve)
        if step.after.n != new_n or step.after.curves[step.curve].nu != new_nu:
            raise InputError(f"step on curve {step.curve} does not reproduce")
        current = step.after
    return current
