"""Isometries between indefinite quaternion spaces and their extensions.

A partial isometry is given as a pair (V, images): the columns of V span the
subspace V1 of the first space and U0 maps V[:, i] to images[:, i]. The extension
works in adapted bases of both spaces

    E = [e_1 .. e_m, ~e_1 .. ~e_m0, c_1 .. c_r]        F = U0-image analogue

whose Gram matrix is

    [[0, 0,  I, 0 ],
     [0, J1, 0, 0 ],
     [I, 0,  0, 0 ],
     [0, 0,  0, J2]]

with e_1 .. e_m0 isotropic, ~e their duals and c a signed basis of the orthogonal
companion. Every extension U has, in these bases, the block form built by
witt_from_params.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from quatpolar.config import Tolerance
from quatpolar.errors import (
    CertificationError,
    DimensionMismatchError,
    GramMismatchError,
    InvalidParamsError,
    KernelMismatchError,
    NotIsometryError,
    SignatureMismatchError,
)
from quatpolar.indefinite import (
    HForm,
    isometry_residual,
    orthogonal_companion,
    unitarity_residual,
)
from quatpolar.quaternion import (
    QMatrix,
    column_space,
    hermitian_eigh,
    hstack,
    inverse,
    lstsq,
    numerical_rank,
    vstack,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartialIsometry:
    """U0 on span(V) given by the images of the columns of V."""

    V: QMatrix
    images: QMatrix

    @property
    def dim(self) -> int:
        return self.V.cols

    def apply(self, x: QMatrix) -> QMatrix:
        return self.images @ lstsq(self.V, x)

    def matrix(self) -> QMatrix:
        """U0 extended by zero on the Euclidean complement of span(V)."""
        return self.images @ lstsq(self.V, QMatrix.identity(self.V.rows))


def factor_isometry(
    X: QMatrix, Y: QMatrix, h1: HForm, h2: HForm, tol: Tolerance
) -> PartialIsometry:
    """Isometry U0 from Im X onto Im Y with Y = U0 X.

    Exists iff X* H1 X = Y* H2 Y and Ker X = Ker Y.
    """
    if X.rows != h1.n or Y.rows != h2.n or X.cols != Y.cols:
        raise DimensionMismatchError(
            f"X {X.shape} and Y {Y.shape} must share a domain and map into spaces of "
            f"size {h1.n} and {h2.n}"
        )
    gram_x = X.H @ h1.H @ X
    gram_y = Y.H @ h2.H @ Y
    scale = max(h1.H.norm() * X.norm() ** 2 + h2.H.norm() * Y.norm() ** 2, 1e-300)
    gram_residual = (gram_y - gram_x).norm() / scale
    if gram_residual > tol.residual_tol:
        raise GramMismatchError(
            f"X and Y induce different forms on the domain (residual {gram_residual:.3e})",
            witness={"residual": gram_residual},
        )

    rank_x = numerical_rank(X, tol)
    rank_y = numerical_rank(Y, tol)
    rank_xy = numerical_rank(vstack([X, Y]), tol)
    if not rank_x == rank_y == rank_xy:
        raise KernelMismatchError(
            "Ker X and Ker Y differ",
            witness={
                "kernel_x": X.cols - rank_x,
                "kernel_y": Y.cols - rank_y,
                "kernel_common": X.cols - rank_xy,
            },
        )

    f = column_space(X, tol, dim=rank_x)
    e = lstsq(X, f)
    U0 = PartialIsometry(f, Y @ e)
    residual = (U0.apply(X) - Y).norm() / max(Y.norm(), 1.0)
    if residual > tol.residual_tol:
        raise CertificationError(
            f"Y = U0 X does not hold (residual {residual:.3e})", witness={"residual": residual}
        )
    logger.debug("factor_isometry: rank=%d gram=%.3e", rank_x, gram_residual)
    return U0


@dataclass(frozen=True)
class GramProfile:
    m0: int
    m_plus: int
    m_minus: int

    @property
    def m(self) -> int:
        return self.m0 + self.m_plus + self.m_minus

    def to_dict(self) -> dict:
        return {"m0": self.m0, "m_plus": self.m_plus, "m_minus": self.m_minus, "m": self.m}


def gram_profile(V_basis: QMatrix, h: HForm, tol: Tolerance) -> tuple[GramProfile, QMatrix]:
    """Counts of isotropic, positive and negative directions of span(V_basis).

    The returned basis has diagonal Gram matrix diag(0, .., +1, .., -1, ..) in that order.
    """
    h._check_vectors(V_basis)
    if V_basis.cols == 0:
        return GramProfile(0, 0, 0), V_basis
    G = h.gram(V_basis)
    w, Q = hermitian_eigh((G + G.H) * 0.5, tol)
    scale = V_basis.spectral_norm() ** 2 * h.H.spectral_norm()
    zero = np.abs(w) <= tol.rank_tol * scale
    plus = np.flatnonzero(~zero & (w > 0))[::-1]
    minus = np.flatnonzero(~zero & (w < 0))
    columns = [V_basis @ Q.column(int(i)) for i in np.flatnonzero(zero)]
    columns += [V_basis @ Q.column(int(i)) / np.sqrt(abs(w[i])) for i in plus]
    columns += [V_basis @ Q.column(int(i)) / np.sqrt(abs(w[i])) for i in minus]
    profile = GramProfile(int(zero.sum()), len(plus), len(minus))
    logger.debug("gram_profile: %s", profile)
    return profile, hstack(columns, rows=h.n)


def _signs(k_plus: int, k_minus: int) -> QMatrix:
    return QMatrix.from_real(np.diag([1.0] * k_plus + [-1.0] * k_minus))


def _duals(iso: QMatrix, basis: QMatrix, h: HForm) -> QMatrix:
    """Vectors d_j with [d_j, basis_i] = delta_ij (i over all of basis), mutually orthogonal
    and isotropic."""
    m0, m = iso.cols, basis.cols
    delta = QMatrix.from_real(np.eye(m, m0))
    duals = lstsq(basis.H @ h.H, delta)
    D = h.gram(duals)
    return duals - iso @ ((D + D.H) * 0.25)


def _signed_completion(
    W: QMatrix, h: HForm, tol: Tolerance
) -> tuple[QMatrix, GramProfile]:
    companion = orthogonal_companion(W, h, tol)
    profile, basis = gram_profile(companion, h, tol)
    if profile.m0:
        raise CertificationError(
            "orthogonal companion of a nondegenerate subspace is degenerate",
            witness=profile.to_dict(),
        )
    return basis, profile


@dataclass(frozen=True)
class WittBasis:
    profile: GramProfile
    E: QMatrix
    F: QMatrix
    J1: QMatrix
    J2: QMatrix

    @property
    def n(self) -> int:
        return self.E.rows

    @property
    def r(self) -> int:
        """Dimension of the orthogonal companion of span(e, ~e)."""
        return self.J2.rows

    @property
    def gramian(self) -> QMatrix:
        m0 = self.profile.m0
        mid = self.profile.m - m0
        r = self.r
        G = np.zeros((self.n, self.n))
        G[:m0, m0 + mid : m0 + mid + m0] = np.eye(m0)
        G[m0 + mid : m0 + mid + m0, :m0] = np.eye(m0)
        G[m0 : m0 + mid, m0 : m0 + mid] = self.J1.data[..., 0]
        G[self.n - r :, self.n - r :] = self.J2.data[..., 0]
        return QMatrix.from_real(G)

    def signed(self, E: QMatrix) -> QMatrix:
        """[e'', e+-, e', c] with e' = (e - ~e)/sqrt 2 and e'' = (e + ~e)/sqrt 2."""
        m0, m = self.profile.m0, self.profile.m
        e0, mid = E[:, :m0], E[:, m0:m]
        dual, comp = E[:, m : m + m0], E[:, m + m0 :]
        return hstack(
            [(e0 + dual) / np.sqrt(2.0), mid, (e0 - dual) / np.sqrt(2.0), comp], rows=self.n
        )


def _check_partial_isometry(
    V1: QMatrix, images: QMatrix, h1: HForm, h2: HForm, tol: Tolerance
) -> None:
    if V1.rows != h1.n or images.rows != h2.n or V1.cols != images.cols:
        raise DimensionMismatchError(
            f"partial isometry {V1.shape} -> {images.shape} between spaces of size "
            f"{h1.n} and {h2.n}"
        )
    residual = isometry_residual(V1, images, h1, h2)
    if residual > tol.residual_tol:
        raise NotIsometryError(
            f"U0 does not preserve the forms (residual {residual:.3e})",
            witness={"residual": residual},
        )
    rank_v, rank_u = numerical_rank(V1, tol), numerical_rank(images, tol)
    if rank_v != V1.cols or rank_u != V1.cols:
        raise NotIsometryError(
            "U0 must be nonsingular on a basis of V1",
            witness={"dim": V1.cols, "rank_basis": rank_v, "rank_images": rank_u},
        )


def build_witt_basis(
    V1: QMatrix, images: QMatrix, h1: HForm, h2: HForm, tol: Tolerance
) -> WittBasis:
    _check_partial_isometry(V1, images, h1, h2, tol)
    profile, e = gram_profile(V1, h1, tol)
    f = images @ lstsq(V1, e)
    m0 = profile.m0
    e_dual = _duals(e[:, :m0], e, h1)
    f_dual = _duals(f[:, :m0], f, h2)

    c_e, comp_e = _signed_completion(hstack([e, e_dual], rows=h1.n), h1, tol)
    c_f, comp_f = _signed_completion(hstack([f, f_dual], rows=h2.n), h2, tol)
    if (comp_e.m_plus, comp_e.m_minus) != (comp_f.m_plus, comp_f.m_minus):
        raise SignatureMismatchError(
            "orthogonal companions have different signatures",
            witness={"first": comp_e.to_dict(), "second": comp_f.to_dict()},
        )
    J1 = _signs(profile.m_plus, profile.m_minus)
    J2 = _signs(comp_e.m_plus, comp_e.m_minus)
    basis = WittBasis(
        profile,
        hstack([e, e_dual, c_e], rows=h1.n),
        hstack([f, f_dual, c_f], rows=h2.n),
        J1,
        J2,
    )
    G = basis.gramian
    for name, M, h in (("E", basis.E, h1), ("F", basis.F, h2)):
        residual = (h.gram(M) - G).norm() / max(1.0, M.norm() ** 2 * h.H.norm())
        if residual > tol.residual_tol:
            raise CertificationError(
                f"{name} basis Gram matrix deviates from the block form ({residual:.3e})",
                witness={"basis": name, "residual": residual},
            )
    logger.debug("build_witt_basis: profile=%s r=%d", profile, basis.r)
    return basis


def _certify_extension(
    U: QMatrix, V1: QMatrix, images: QMatrix, h1: HForm, h2: HForm, tol: Tolerance
) -> None:
    unitary = unitarity_residual(U, h1, h2)
    restriction = (U @ V1 - images).norm() / max(1.0, images.norm())
    if unitary > tol.residual_tol or restriction > tol.residual_tol:
        raise CertificationError(
            "extension failed certification",
            witness={"unitarity": unitary, "restriction": restriction},
        )


def extend_isometry(
    V1: QMatrix, images: QMatrix, h1: HForm, h2: HForm, tol: Tolerance
) -> QMatrix:
    """Unitary U (U* H2 U = H1) agreeing with U0 on span(V1)."""
    if h1.n != h2.n:
        raise DimensionMismatchError(f"spaces of size {h1.n} and {h2.n}")
    if h1.signature != h2.signature:
        raise SignatureMismatchError(
            f"signatures differ: {h1.signature} vs {h2.signature}",
            witness={"first": list(h1.signature), "second": list(h2.signature)},
        )
    basis = build_witt_basis(V1, images, h1, h2, tol)
    g = basis.signed(basis.E)
    h = basis.signed(basis.F)
    U = h @ inverse(g)
    _certify_extension(U, V1, images, h1, h2, tol)
    return U


@dataclass(frozen=True)
class WittParams:
    P1: QMatrix
    P2: QMatrix
    P3: QMatrix

    def validate(self, basis: WittBasis, tol: Tolerance) -> None:
        r, m0 = basis.r, basis.profile.m0
        expected = {"P1": (r, r), "P2": (r, m0), "P3": (m0, m0)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise InvalidParamsError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}",
                    witness={"param": name},
                )
        J2 = basis.J2
        unitary = (self.P1.H @ J2 @ self.P1 - J2).norm() / max(1.0, self.P1.norm() ** 2)
        if unitary > tol.residual_tol:
            raise InvalidParamsError(
                f"P1 is not J2-unitary (residual {unitary:.3e})",
                witness={"param": "P1", "residual": unitary},
            )
        skew = (self.P3 + self.P3.H).norm() / max(1.0, self.P3.norm())
        if skew > tol.residual_tol:
            raise InvalidParamsError(
                f"P3 is not skew-Hermitian (residual {skew:.3e})",
                witness={"param": "P3", "residual": skew},
            )

    @classmethod
    def trivial(cls, basis: WittBasis) -> WittParams:
        r, m0 = basis.r, basis.profile.m0
        return cls(QMatrix.identity(r), QMatrix.zeros(r, m0), QMatrix.zeros(m0, m0))


def _block_form(basis: WittBasis, params: WittParams) -> QMatrix:
    m0, m, r, n = basis.profile.m0, basis.profile.m, basis.r, basis.n
    J2, P1, P2, P3 = basis.J2, params.P1, params.P2, params.P3
    Ut = QMatrix.identity(n)
    top = P3 - (P2.H @ J2 @ P2) * 0.5
    Ut.data[:m0, m : m + m0] = top.data
    Ut.data[:m0, m + m0 :] = (-(P2.H @ J2 @ P1)).data
    Ut.data[m + m0 :, m : m + m0] = P2.data
    Ut.data[n - r :, n - r :] = P1.data
    return Ut


def witt_from_params(
    V1: QMatrix,
    images: QMatrix,
    basis: WittBasis,
    params: WittParams,
    h1: HForm,
    h2: HForm,
    tol: Tolerance,
) -> QMatrix:
    """The extension of U0 with parameters (P1, P2, P3): U = F U~ E^-1."""
    params.validate(basis, tol)
    U = basis.F @ _block_form(basis, params) @ inverse(basis.E)
    _certify_extension(U, V1, images, h1, h2, tol)
    return U


def witt_params_from_extension(U: QMatrix, basis: WittBasis, tol: Tolerance) -> WittParams:
    """Reads (P1, P2, P3) off F^-1 U E; raises if U is not an extension in these bases."""
    if U.shape != (basis.n, basis.n):
        raise DimensionMismatchError(f"U of shape {U.shape} for bases of size {basis.n}")
    m0, m = basis.profile.m0, basis.profile.m
    Ut = inverse(basis.F) @ U @ basis.E
    P1 = Ut[m + m0 :, m + m0 :]
    P2 = Ut[m + m0 :, m : m + m0]
    P3_part = Ut[:m0, m : m + m0]
    P3 = P3_part + (P2.H @ basis.J2 @ P2) * 0.5
    P3 = (P3 - P3.H) * 0.5
    params = WittParams(P1, P2, P3)
    deviation = (Ut - _block_form(basis, params)).norm() / max(1.0, Ut.norm())
    if deviation > tol.residual_tol:
        raise InvalidParamsError(
            f"U is not a Witt extension in these bases (deviation {deviation:.3e})",
            witness={"residual": deviation},
        )
    params.validate(basis, tol)
    return params

