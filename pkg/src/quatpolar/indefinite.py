"""Indefinite inner products [x, y] = y* H x on quaternion space."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from quatpolar.config import Tolerance
from quatpolar.errors import (
    CertificationError,
    DimensionMismatchError,
    InvalidInputError,
    NotHermitianError,
    SingularFormError,
)
from quatpolar.quaternion import (
    QMatrix,
    Quaternion,
    hstack,
    inverse,
    null_space,
    numerical_rank,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    """Outcome of a residual test."""

    ok: bool
    residual: float

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class HForm:
    H: QMatrix
    H_inv: QMatrix = field(repr=False)
    signature: tuple[int, int]

    @classmethod
    def from_matrix(cls, H: QMatrix, tol: Tolerance | None = None) -> HForm:
        """Validates H (Hermitian, invertible) and caches its inverse and signature."""
        tol = tol or Tolerance()
        if not H.is_square():
            raise DimensionMismatchError(f"H must be square, got {H.shape}")
        n = H.rows
        scale = max(1.0, H.norm())
        asym = (H - H.H).norm()
        if asym > tol.residual_tol * scale:
            raise NotHermitianError(
                f"H is not Hermitian (residual {asym:.3e})", witness={"residual": asym}
            )
        H = (H + H.H) * 0.5
        if numerical_rank(H, tol) < n:
            raise SingularFormError("H is singular", witness={"rank": numerical_rank(H, tol)})
        w = scipy.linalg.eigvalsh(H.omega()) if n else np.zeros(0)
        pi_plus = int(np.sum(w > 0)) // 2
        signature = (pi_plus, n - pi_plus)
        return cls(H, inverse(H), signature)

    @property
    def n(self) -> int:
        return self.H.rows

    @property
    def pi_plus(self) -> int:
        return self.signature[0]

    @property
    def pi_minus(self) -> int:
        return self.signature[1]

    def gram(self, V: QMatrix, W: QMatrix | None = None) -> QMatrix:
        """Matrix of inner products [V_j, W_i] = W_i* H V_j."""
        W = V if W is None else W
        self._check_vectors(V)
        self._check_vectors(W)
        return W.H @ self.H @ V

    def _check_vectors(self, V: QMatrix) -> None:
        if V.rows != self.n:
            raise DimensionMismatchError(f"vectors of length {V.rows} for a form of size {self.n}")


def inner_product(x: QMatrix, y: QMatrix, h: HForm) -> Quaternion:
    """[x, y] = y* H x for column vectors x, y."""
    if x.shape != (h.n, 1) or y.shape != (h.n, 1):
        raise DimensionMismatchError(
            f"inner product needs two {h.n}x1 vectors, got {x.shape} and {y.shape}"
        )
    return h.gram(x, y).entry(0, 0)


def h_adjoint(X: QMatrix, h1: HForm, h2: HForm) -> QMatrix:
    """X^[*] = H1^-1 X* H2 for X mapping the h1-space into the h2-space."""
    if X.shape != (h2.n, h1.n):
        raise DimensionMismatchError(
            f"X of shape {X.shape} does not map a {h1.n}-space into a {h2.n}-space"
        )
    return h1.H_inv @ X.H @ h2.H


def is_h_selfadjoint(A: QMatrix, h: HForm, tol: Tolerance) -> Check:
    """Selfadjointness via ||A*H - HA|| / (||H|| (1 + ||A||)); H^-1 is never applied."""
    if A.shape != (h.n, h.n):
        raise DimensionMismatchError(f"A of shape {A.shape} does not act on a {h.n}-space")
    residual = (A.H @ h.H - h.H @ A).norm() / (h.H.norm() * (1.0 + A.norm()))
    return Check(residual <= tol.residual_tol, residual)


def unitarity_residual(U: QMatrix, h1: HForm, h2: HForm | None = None) -> float:
    """||U* H2 U - H1|| relative to ||H1|| max(1, ||U||^2)."""
    h2 = h1 if h2 is None else h2
    scale = h1.H.norm() * max(1.0, U.spectral_norm() ** 2)
    return (U.H @ h2.H @ U - h1.H).norm() / scale


def is_h_unitary(U: QMatrix, h: HForm, tol: Tolerance) -> Check:
    """U* H U = H up to residual_tol, measured by unitarity_residual.

    The threshold is residual_tol * ||H|| * max(1, ||U||_2^2) rather than residual_tol * ||H||.
    H-unitaries of an indefinite form are unbounded, and U* H U carries rounding error of
    order eps ||H|| ||U||^2.
    """
    if U.shape != (h.n, h.n):
        raise DimensionMismatchError(f"U of shape {U.shape} does not act on a {h.n}-space")
    residual = unitarity_residual(U, h)
    return Check(residual <= tol.residual_tol, residual)


def isometry_residual(V: QMatrix, images: QMatrix, h1: HForm, h2: HForm) -> float:
    if V.cols != images.cols:
        raise DimensionMismatchError(f"{V.cols} basis vectors but {images.cols} images")
    if V.cols == 0:
        return 0.0
    scale = h1.H.norm() * V.norm() ** 2 + h2.H.norm() * images.norm() ** 2
    return (h2.gram(images) - h1.gram(V)).norm() / max(scale, np.finfo(float).tiny)


def is_isometry_on(
    U0: QMatrix, V_basis: QMatrix, h1: HForm, h2: HForm, tol: Tolerance
) -> Check:
    """[U0 x, U0 y]_2 = [x, y]_1 on the span of V_basis."""
    if U0.cols != h1.n or U0.rows != h2.n:
        raise DimensionMismatchError(f"U0 of shape {U0.shape} between {h1.n} and {h2.n} spaces")
    residual = isometry_residual(V_basis, U0 @ V_basis, h1, h2)
    return Check(residual <= tol.residual_tol, residual)


def orthogonal_companion(W_basis: QMatrix, h: HForm, tol: Tolerance) -> QMatrix:
    """Orthonormal basis of {x : [x, w] = 0 for all w in W}."""
    h._check_vectors(W_basis)
    if W_basis.cols == 0:
        return QMatrix.identity(h.n)
    dim = h.n - numerical_rank(W_basis, tol)
    return null_space(W_basis.H @ h.H, tol, dim=dim)


def is_nondegenerate(W_basis: QMatrix, h: HForm, tol: Tolerance) -> bool:
    """True iff the Gramian of W_basis is invertible; then W + W^[perp] is asserted direct."""
    h._check_vectors(W_basis)
    m = W_basis.cols
    if m == 0:
        return True
    scale = W_basis.spectral_norm() ** 2 * h.H.spectral_norm()
    nondegenerate = numerical_rank(h.gram(W_basis), tol, scale=scale) == m
    if nondegenerate:
        companion = orthogonal_companion(W_basis, h, tol)
        if numerical_rank(hstack([W_basis, companion]), tol) != h.n:
            raise CertificationError(
                "nondegenerate subspace and its companion do not span the space",
                witness={"dim": m, "companion_dim": companion.cols},
            )
    logger.debug("is_nondegenerate: dim=%d -> %s", m, nondegenerate)
    return nondegenerate


def sip(k: int) -> QMatrix:
    """Standard involutary permutation Q_k: ones on the anti-diagonal."""
    if k < 1:
        raise InvalidInputError(f"sip size must be positive, got {k}")
    return QMatrix.from_real(np.fliplr(np.eye(k)))


def _jordan(lam: complex, k: int) -> QMatrix:
    return QMatrix.from_complex(complex(lam) * np.eye(k) + np.eye(k, k=1))


def jordan_block(lam: complex, k: int) -> QMatrix:
    """Upper bidiagonal J_k(lambda) with Im(lambda) >= 0."""
    lam = complex(lam)
    if lam.imag < 0:
        raise InvalidInputError(f"Jordan block eigenvalue must have Im >= 0, got {lam}")
    if k < 1:
        raise InvalidInputError(f"Jordan block size must be positive, got {k}")
    return _jordan(lam, k)


def conjugate_jordan_block(lam: complex, k: int) -> QMatrix:
    """J_k(conj(lambda)), the partner block of a nonreal eigenvalue."""
    return _jordan(complex(lam).conjugate(), k)
