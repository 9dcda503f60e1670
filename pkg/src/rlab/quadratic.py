"""Quadratic forms on a symplectic vector space and their Lie algebra.

Coordinates are ordered ``x_1..x_n, y_1..y_n`` and the symplectic form is
``sum dx_k ^ dy_k``, so the Poisson structure is carried by
``J = [[0, I], [-I, 0]]``.  A form is stored as the symmetric matrix ``a``
with ``Q(z) = z^T a z``; the symplectic gradient of ``Q`` is the linear
field ``z -> 2 J a z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import CounterRNG

__all__ = [
    "QuadraticForm",
    "symplectic_matrix",
    "poisson_bracket",
    "monomial_basis",
    "ad_matrix",
    "t_invariant",
    "t_closed_form",
    "det_invariant",
    "compose_linear",
    "cutoff_phi",
    "smooth_step",
    "is_symplectic",
    "random_symplectic",
    "diagonal_type",
]

SYMMETRY_TOL = 1e-14


def symplectic_matrix(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """``Q(z) = sum a[l, k] z_l z_k`` with ``a`` symmetric of size ``2n``."""

    a: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
            raise ValueError("coefficient matrix must be square of even size")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
            raise ValueError("coefficient matrix must be symmetric")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.a.shape[0] // 2

    @classmethod
    def zero(cls, n: int) -> "QuadraticForm":
        return cls(np.zeros((2 * n, 2 * n)))

    @classmethod
    def from_hessian(cls, hessian) -> "QuadraticForm":
        """The quadratic Taylor term ``z^T H z / 2``."""
        return cls(0.5 * np.asarray(hessian, dtype=float))

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return np.einsum("...i,ij,...j->...", z, self.a, z)

    def gradient(self, z):
        return 2.0 * np.asarray(z, dtype=float) @ self.a

    def sgrad_matrix(self) -> np.ndarray:
        """Matrix of the linear field ``J grad Q``."""
        return 2.0 * symplectic_matrix(self.n) @ self.a

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm(self.a + other.a)

    def __sub__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm(self.a - other.a)

    def __mul__(self, k: float) -> "QuadraticForm":
        return QuadraticForm(self.a * k)

    __rmul__ = __mul__

    def __repr__(self):
        return f"QuadraticForm(n={self.n}, a={self.a.tolist()})"


def diagonal_type(q) -> QuadraticForm:
    """``sum q_k x_k y_k``."""
    q = np.asarray(q, dtype=float)
    n = len(q)
    a = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    a[idx, n + idx] = a[n + idx, idx] = 0.5 * q
    return QuadraticForm(a)


def _check_same_n(Q: QuadraticForm, R: QuadraticForm) -> None:
    if Q.a.shape != R.a.shape:
        raise ValueError(f"dimension mismatch: n={Q.n} vs n={R.n}")


def _bracket_matrix(a: np.ndarray, b: np.ndarray, J: np.ndarray) -> np.ndarray:
    # {Q, R}(z) = <grad R, J grad Q> = 4 z^T b J a z, symmetrized
    return 2.0 * (b @ J @ a - a @ J @ b)


def poisson_bracket(Q: QuadraticForm, R: QuadraticForm) -> QuadraticForm:
    """``{Q, R} = (sgrad Q) R``."""
    _check_same_n(Q, R)
    return QuadraticForm(_bracket_matrix(Q.a, R.a, symplectic_matrix(Q.n)))


def monomial_basis(n: int) -> list[tuple[int, int]]:
    """Index pairs ``(l, k)``, ``l <= k``, in lexicographic order."""
    d = 2 * n
    return [(l, k) for l in range(d) for k in range(l, d)]


def _monomial_matrix(n: int, l: int, k: int) -> np.ndarray:
    m = np.zeros((2 * n, 2 * n))
    if l == k:
        m[l, l] = 1.0
    else:
        m[l, k] = m[k, l] = 0.5
    return m


def _coordinates(c: np.ndarray, basis) -> np.ndarray:
    rows = np.array([l for l, _ in basis])
    cols = np.array([k for _, k in basis])
    factor = np.where(rows == cols, 1.0, 2.0)
    return c[..., rows, cols] * factor


def ad_matrix(Q: QuadraticForm) -> np.ndarray:
    """Matrix of ``R -> {Q, R}`` on the monomial basis."""
    n = Q.n
    J = symplectic_matrix(n)
    basis = monomial_basis(n)
    columns = [
        _coordinates(_bracket_matrix(Q.a, _monomial_matrix(n, l, k), J), basis)
        for l, k in basis
    ]
    return np.stack(columns, axis=1)


def t_invariant(Q: QuadraticForm) -> float:
    """``trace(ad_Q^2)``."""
    ad = ad_matrix(Q)
    return float(np.einsum("ij,ji->", ad, ad))


def t_closed_form(q) -> float:
    """``(4n + 4) sum q_k^2`` for ``Q = sum q_k x_k y_k``."""
    q = [float(v) for v in q]
    return (4 * len(q) + 4) * math.fsum(v * v for v in q)


def det_invariant(Q: QuadraticForm) -> float:
    return float(np.linalg.det(Q.a))


def compose_linear(Q: QuadraticForm, S) -> QuadraticForm:
    """``Q o S``, i.e. coefficient matrix ``S^T a S``."""
    S = np.asarray(S, dtype=float)
    if S.shape != Q.a.shape:
        raise ValueError(f"S must be {Q.a.shape}, got {S.shape}")
    if np.linalg.matrix_rank(S) < S.shape[0]:
        raise np.linalg.LinAlgError("S is singular")
    return QuadraticForm(S.T @ Q.a @ S)


def smooth_step(u: float) -> float:
    """C-infinity step: 0 for ``u <= 0``, 1 for ``u >= 1``, monotone between."""
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    left = math.exp(-1.0 / u)
    right = math.exp(-1.0 / (1.0 - u))
    return left / (left + right)


def cutoff_phi(s: float) -> float:
    """Odd smooth function, 0 on ``[-1/2, 1/2]`` and the identity for ``|s| >= 1``."""
    s = float(s)
    return s * smooth_step(2.0 * (abs(s) - 0.5))


def is_symplectic(S, tol: float = 1e-12) -> bool:
    S = np.asarray(S, dtype=float)
    J = symplectic_matrix(S.shape[0] // 2)
    return float(np.max(np.abs(S.T @ J @ S - J))) <= tol


def _symmetric(rng: CounterRNG, n: int, scale: float) -> np.ndarray:
    m = rng.normals(n * n).reshape(n, n) * scale
    return 0.5 * (m + m.T)


def random_symplectic(n: int, rng: CounterRNG, factors: int = 4, scale: float = 0.5):
    """Product of random shears ``[[I, B], [0, I]]``, ``[[I, 0], [C, I]]`` and
    unitary rotations ``[[X, -Y], [Y, X]]``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    S = np.eye(2 * n)
    for _ in range(factors):
        upper = np.block([[eye, _symmetric(rng, n, scale)], [zero, eye]])
        lower = np.block([[eye, zero], [_symmetric(rng, n, scale), eye]])
        z = rng.normals(2 * n * n).reshape(2, n, n)
        u, _ = np.linalg.qr(z[0] + 1j * z[1])
        rot = np.block([[u.real, -u.imag], [u.imag, u.real]])
        S = S @ upper @ rot @ lower
    return S
