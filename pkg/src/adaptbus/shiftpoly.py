"""Polynomial algebra in the backward-shift operator q^-1.

A polynomial ``p = (c0, c1, ..., cn)`` acts on a sequence as
``p(q^-1) x(k) = c0 x(k) + c1 x(k-1) + ... + cn x(k-n)``.  These objects carry
all transfer relations of the simulator: the plant denominator/numerator and
the d-step prediction-form coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MONIC_TOL = 1e-12


@dataclass(frozen=True)
class ShiftPoly:
    """Coefficient vector in ascending powers of q^-1 (coeffs[0] = constant)."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs):
        arr = tuple(float(c) for c in np.atleast_1d(np.asarray(coeffs, dtype=float)))
        if len(arr) == 0:
            raise ValueError("a shift polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def normalized(self) -> "ShiftPoly":
        """Strip trailing zero coefficients (keeping at least the constant)."""
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        return ShiftPoly(c)

    def asarray(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)


def poly_add(p: ShiftPoly, q: ShiftPoly) -> ShiftPoly:
    """Coefficient-wise sum; result length is the max of the input lengths."""
    n = max(len(p), len(q))
    out = np.zeros(n)
    out[: len(p)] += p.asarray()
    out[: len(q)] += q.asarray()
    return ShiftPoly(out)


def poly_mul(p: ShiftPoly, q: ShiftPoly) -> ShiftPoly:
    """Product (coefficient convolution); degree adds."""
    return ShiftPoly(np.convolve(p.asarray(), q.asarray()))


def shift(p: ShiftPoly, d: int) -> ShiftPoly:
    """Multiply by q^-d, i.e. prepend d zero coefficients."""
    if d < 0:
        raise ValueError("shift distance must be non-negative")
    return ShiftPoly(np.concatenate([np.zeros(d), p.asarray()]))


def solve_diophantine(A: ShiftPoly, d: int) -> tuple[ShiftPoly, ShiftPoly]:
    """Solve 1 = F(q^-1) A(q^-1) + q^-d alpha(q^-1) for monic A.

    F and alpha are the unique pair with deg(F) = d-1 and
    deg(alpha) <= deg(A) - 1; they are computed by synchronous long division
    of 1 by A, which is exact up to floating point.

    Args:
        A: monic polynomial (A.coeffs[0] == 1).
        d: prediction horizon in samples, >= 1.

    Returns:
        (F, alpha).
    """
    if d < 1:
        raise ValueError(f"delay must be >= 1, got {d}")
    a = A.asarray()
    if abs(a[0] - 1.0) > MONIC_TOL:
        raise ValueError(f"A must be monic (constant coefficient 1), got {a[0]!r}")
    m = len(a) - 1
    f = np.zeros(d)
    f[0] = 1.0
    for j in range(1, d):
        s = 0.0
        for i in range(max(0, j - m), j):
            s += f[i] * a[j - i]
        f[j] = -s
    alpha = np.zeros(max(m, 1))
    for j in range(d, d + m):
        s = 0.0
        for i in range(max(0, j - m), min(d, j + 1)):
            s += f[i] * a[j - i]
        alpha[j - d] = -s
    return ShiftPoly(f), ShiftPoly(alpha)


def predictor_coeffs(A: ShiftPoly, B: ShiftPoly, d: int) -> tuple[ShiftPoly, ShiftPoly]:
    """Prediction-form coefficients (alpha, beta) with beta = F * B.

    beta inherits beta[0] = B[0] because F is monic.
    """
    b = B.asarray()
    if b[0] == 0.0:
        raise ValueError("B must have a nonzero leading coefficient b0")
    F, alpha = solve_diophantine(A, d)
    beta = poly_mul(F, B)
    return alpha, beta


def diophantine_residual(A: ShiftPoly, F: ShiftPoly, alpha: ShiftPoly, d: int) -> float:
    """Max-abs coefficient of F*A + q^-d alpha - 1 (zero for an exact solution)."""
    lhs = poly_add(poly_mul(F, A), shift(alpha, d))
    res = lhs.asarray().copy()
    res[0] -= 1.0
    return float(np.max(np.abs(res)))


def zeros_strictly_inside(B: ShiftPoly, margin: float = 1e-9) -> bool:
    """True iff every zero of B lies strictly inside the unit disk.

    The zeros are the roots of the forward polynomial
    b0 z^m + b1 z^(m-1) + ... + bm, found from companion-matrix eigenvalues.
    A degree-0 polynomial has no zeros and passes vacuously.
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    bn = B.normalized()
    b = bn.asarray()
    if b[0] == 0.0:
        raise ValueError("B must have a nonzero leading coefficient b0")
    if len(b) == 1:
        return True
    roots = np.roots(b)
    return bool(np.all(np.abs(roots) < 1.0 - margin))


def unstable_zeros(B: ShiftPoly, margin: float = 1e-9) -> list[complex]:
    """Zeros of B on or outside the margin-shrunk unit disk (for diagnostics)."""
    bn = B.normalized()
    b = bn.asarray()
    if b[0] == 0.0 or len(b) == 1:
        return []
    roots = np.roots(b)
    return [complex(z) for z in roots if abs(z) >= 1.0 - margin]
