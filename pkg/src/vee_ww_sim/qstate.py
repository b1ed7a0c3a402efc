"""State and operator algebra for the excited doublet {|+>, |->}.

Holds the symmetric/antisymmetric superpositions, the rotated post-selection
state, sigma_z, and the weak value <f|O|i>/<f|i>. Phase convention: the bra is
the conjugated ket, so the overlap of the post-selection state with the
symmetric state is <f|S> = +i sin(eps).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import OrthogonalPrePost

# Overlaps at or below this are treated as exact orthogonality; smaller-but-real
# overlaps are the amplification regime and stay legal.
OVERLAP_FLOOR = 1e-12

_HALF_PI = math.pi / 2


@dataclass(frozen=True)
class AtomicKet:
    """Pure state of the excited doublet, stored as amplitudes on |+> and |->.

    The constructor rescales its arguments to unit norm and rejects the zero
    vector; global phase is kept as given. Use :meth:`raw` to build a
    deliberately unnormalized fixture, in which case the unit-norm invariant
    becomes caller-owned.
    """

    c_plus: complex
    c_minus: complex

    def __post_init__(self):
        cp = complex(self.c_plus)
        cm = complex(self.c_minus)
        n = math.hypot(abs(cp), abs(cm))
        if not n > 1e-150:
            raise ValueError("cannot normalize a zero ket")
        object.__setattr__(self, "c_plus", cp / n)
        object.__setattr__(self, "c_minus", cm / n)

    @classmethod
    def raw(cls, c_plus: complex, c_minus: complex) -> "AtomicKet":
        ket = object.__new__(cls)
        object.__setattr__(ket, "c_plus", complex(c_plus))
        object.__setattr__(ket, "c_minus", complex(c_minus))
        return ket

    def vector(self) -> np.ndarray:
        return np.array([self.c_plus, self.c_minus], dtype=complex)

    def norm(self) -> float:
        return math.hypot(abs(self.c_plus), abs(self.c_minus))

    def inner(self, other: "AtomicKet") -> complex:
        """<self|other>, with this ket on the conjugated (bra) side."""
        return (
            self.c_plus.conjugate() * other.c_plus
            + self.c_minus.conjugate() * other.c_minus
        )


@dataclass(frozen=True, eq=False)
class Operator2:
    """2x2 operator over {|+>, |->} with an explicit Hermitian flag.

    Parameters
    ----------
    matrix:
        Anything array-like of shape (2, 2); stored as a read-only complex array.
    hermitian:
        Omit to auto-detect (entrywise deviation from the conjugate transpose
        at most 1e-12). Passing True for a non-Hermitian matrix is an error.
    """

    matrix: np.ndarray
    hermitian: bool | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("Operator2 requires a 2x2 matrix")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        is_herm = bool(np.max(np.abs(m - m.conj().T)) <= 1e-12)
        if self.hermitian is None:
            object.__setattr__(self, "hermitian", is_herm)
        elif self.hermitian and not is_herm:
            raise ValueError("matrix flagged Hermitian deviates from its conjugate transpose by more than 1e-12")

    def apply(self, ket: AtomicKet) -> AtomicKet:
        """O|ket>, returned unnormalized (raw) since O need not be unitary."""
        v = self.matrix @ ket.vector()
        return AtomicKet.raw(v[0], v[1])

    def expectation(self, ket: AtomicKet) -> complex:
        v = ket.vector()
        return complex(np.vdot(v, self.matrix @ v))

    def __add__(self, other: "Operator2") -> "Operator2":
        return Operator2(self.matrix + other.matrix)

    def __mul__(self, scalar) -> "Operator2":
        return Operator2(self.matrix * complex(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class WeakValueResult:
    """Weak value together with the pre/post overlap it was divided by."""

    value: complex
    overlap: complex


def symmetric_state() -> AtomicKet:
    """The bath-coupled superposition (|+> + |->)/sqrt(2)."""
    return AtomicKet(1.0, 1.0)


def antisymmetric_state() -> AtomicKet:
    """The companion superposition (|+> - |->)/sqrt(2)."""
    return AtomicKet(1.0, -1.0)


def postselect_state(epsilon: float) -> AtomicKet:
    """Rotated final state (e^{-i eps}|+> - e^{+i eps}|->)/sqrt(2).

    epsilon = 0 reproduces the antisymmetric state exactly; epsilon = pi/2 is
    the symmetric state up to a global phase of -i. The overlap with the
    symmetric state is +i sin(eps) under this module's phase convention.

    Parameters
    ----------
    epsilon : float
        Post-selection angle in radians, 0 <= epsilon <= pi/2.
    """
    if not 0.0 <= epsilon <= _HALF_PI:
        raise ValueError(f"epsilon must lie in [0, pi/2], got {epsilon!r}")
    return AtomicKet(cmath.exp(-1j * epsilon), -cmath.exp(1j * epsilon))


def sigma_z() -> Operator2:
    """diag(+1, -1) over {|+>, |->}."""
    return Operator2(np.diag([1.0, -1.0]), hermitian=True)


def weak_value(obs: Operator2, pre_state: AtomicKet, post_state: AtomicKet) -> WeakValueResult:
    """Weak value <post|obs|pre> / <post|pre>.

    Raises
    ------
    OrthogonalPrePost
        When |<post|pre>| <= OVERLAP_FLOOR. This is the amplification
        singularity; overlaps above the floor, however small, are evaluated.
    """
    overlap = post_state.inner(pre_state)
    if abs(overlap) <= OVERLAP_FLOOR:
        raise OrthogonalPrePost(
            f"pre/post overlap magnitude {abs(overlap):.3e} is at or below the floor {OVERLAP_FLOOR:g}"
        )
    numerator = complex(np.vdot(post_state.vector(), obs.matrix @ pre_state.vector()))
    return WeakValueResult(value=numerator / overlap, overlap=overlap)
