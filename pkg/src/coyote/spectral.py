"""Laplace-domain system matrix and its characteristic polynomial.

The released, nondimensional chain transforms to ``A(s) y_hat = (-1/s, 0, ..., 0)``
with a tridiagonal ``A`` that depends on ``s`` only through ``u = s**2``.
Polynomials here are therefore stored in ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NondimSystem

MAX_BRUTE_FORCE_N = 8


@dataclass(frozen=True)
class EvenPolynomial:
    """``D(u) = sum(coeffs[k] * u**k)`` so that ``P(s) = D(s**2)``."""

    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, power: int) -> float:
        """Coefficient of ``s**power`` in ``P(s)``; odd powers are zero."""
        if power % 2:
            return 0.0
        k = power // 2
        return float(self.coeffs[k]) if 0 <= k < len(self.coeffs) else 0.0

    def __call__(self, s):
        u = np.asarray(s) * np.asarray(s)
        acc = np.zeros_like(u) + self.coeffs[-1]
        for c in self.coeffs[-2::-1]:
            acc = acc * u + c
        return acc


@dataclass(frozen=True)
class NumeratorConstant:
    j: int
    value: float  # the Laplace numerator is value / s


@dataclass(frozen=True)
class CoefficientChecks:
    a0: float
    a2: float
    a_top: float
    a2_ref: float
    a_top_ref: float


def _diagonal_at_rest(sys: NondimSystem) -> np.ndarray:
    a, b = sys.alphas, sys.betas
    return np.concatenate([[1.0], a[:-1] + b, [a[-1]]])


def _couplings(sys: NondimSystem) -> np.ndarray:
    """alpha_j * beta_{j-1} for j = 2..n, with beta_1 = 1."""
    beta_above = np.concatenate([[1.0], sys.betas])
    return sys.alphas * beta_above


def _tridiagonal_det(diag: np.ndarray, couplings: np.ndarray) -> np.ndarray:
    # D_j = (u + diag_j) D_{j-1} - c_j D_{j-2}
    prev2 = np.zeros(1)
    prev = np.ones(1)
    for i, d in enumerate(diag):
        cur = np.zeros(len(prev) + 1)
        cur[1:] += prev
        cur[:-1] += d * prev
        if i > 0:
            cur[: len(prev2)] -= couplings[i - 1] * prev2
        prev2, prev = prev, cur
    return prev


def char_poly(sys: NondimSystem) -> EvenPolynomial:
    """``det A(s)`` via the three-term tridiagonal recurrence."""
    return EvenPolynomial(_tridiagonal_det(_diagonal_at_rest(sys), _couplings(sys)))


def tail_poly(sys: NondimSystem, j: int) -> EvenPolynomial:
    """Determinant of the trailing block of ``A`` below and right of mass ``j``."""
    diag = _diagonal_at_rest(sys)[j:]
    return EvenPolynomial(_tridiagonal_det(diag, _couplings(sys)[j:]))


def trace_at_rest(sys: NondimSystem, start: int = 0) -> float:
    """Trace of ``A(0)`` restricted to rows/columns ``start..n-1`` (0-based)."""
    return float(_diagonal_at_rest(sys)[start:].sum())


def numerator_constant(sys: NondimSystem, j: int) -> NumeratorConstant:
    """Leading Cramer numerator for mass ``j`` (1-based): ``-prod(alpha_2..alpha_j)``."""
    if not 1 <= j <= sys.n:
        raise IndexError(f"mass index {j} outside 1..{sys.n}")
    return NumeratorConstant(j=j, value=-float(np.prod(sys.alphas[: j - 1])))


def poly_coefficient_checks(sys: NondimSystem) -> CoefficientChecks:
    p = char_poly(sys)
    n = sys.n
    return CoefficientChecks(
        a0=p.coefficient(0),
        a2=p.coefficient(2),
        a_top=p.coefficient(2 * n - 2),
        a2_ref=float(np.prod(sys.alphas) * sys.mass_ratios().sum()),
        a_top_ref=trace_at_rest(sys),
    )


def laplace_matrix(sys: NondimSystem, s) -> np.ndarray:
    """Assemble ``A(s)`` as a dense matrix."""
    n = sys.n
    u = s * s
    dtype = complex if np.iscomplexobj(s) else float
    A = np.zeros((n, n), dtype=dtype)
    diag = _diagonal_at_rest(sys)
    for i in range(n):
        A[i, i] = u + diag[i]
    beta_above = np.concatenate([[1.0], sys.betas])
    for i in range(1, n):
        A[i, i - 1] = -sys.alphas[i - 1]
        A[i - 1, i] = -beta_above[i - 1]
    return A


def cramer_matrix(sys: NondimSystem, s, j: int) -> np.ndarray:
    """``A(s)`` with column ``j`` (1-based) replaced by the release forcing."""
    B = laplace_matrix(sys, s).astype(complex if np.iscomplexobj(s) else float)
    B[:, j - 1] = 0
    B[0, j - 1] = -1 / s
    return B


def cofactor_det(M: np.ndarray):
    """Determinant by recursive Laplace expansion along the first row."""
    M = np.asarray(M)
    size = M.shape[0]
    if size == 1:
        return M[0, 0]
    if size == 2:
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    total = 0
    rows = M[1:]
    for col in range(size):
        entry = M[0, col]
        if entry == 0:
            continue
        minor = np.delete(rows, col, axis=1)
        sign = -1 if col % 2 else 1
        total = total + sign * entry * cofactor_det(minor)
    return total


def brute_force_det(sys: NondimSystem, s):
    """Test oracle: ``det A(s)`` by cofactor expansion of the dense matrix."""
    if sys.n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"brute-force determinant limited to n <= {MAX_BRUTE_FORCE_N}")
    return cofactor_det(laplace_matrix(sys, s))
