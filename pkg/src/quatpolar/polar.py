"""H-polar decompositions X = U A with U H-unitary and A H-selfadjoint."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from quatpolar.canonical import CanonicalForm, canonical_form
from quatpolar.config import Tolerance
from quatpolar.errors import (
    CertificationError,
    DimensionMismatchError,
    KernelAlignmentError,
    PolarExistenceError,
)
from quatpolar.indefinite import HForm, is_h_selfadjoint, unitarity_residual
from quatpolar.quaternion import QMatrix, null_space, numerical_rank, vstack
from quatpolar.sqroot import (
    ZeroBlockBasis,
    kernel_alignment,
    sqrt_build,
    sqrt_exists,
    zero_block_basis,
)
from quatpolar.witt import extend_isometry, factor_isometry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Condition:
    ok: bool
    witness: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "witness": dict(self.witness)}


@dataclass
class PolarReport:
    exists: bool
    cond_i: Condition
    cond_ii: Condition
    cond_iii: Condition
    form: CanonicalForm
    B: QMatrix = field(repr=False)
    kernel: QMatrix = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "exists": self.exists,
            "cond_i": self.cond_i.to_dict(),
            "cond_ii": self.cond_ii.to_dict(),
            "cond_iii": self.cond_iii.to_dict(),
            "form": self.form.to_dict(),
        }


def polar_gram(X: QMatrix, h: HForm) -> QMatrix:
    """B = X^[*] X = H^-1 X* H X, with X* H X symmetrized."""
    if X.shape != (h.n, h.n):
        raise DimensionMismatchError(f"X of shape {X.shape} does not act on a {h.n}-space")
    G = X.H @ h.H @ X
    return h.H_inv @ ((G + G.H) * 0.5)


def kernel_condition_check(
    kernel_basis: QMatrix,
    zb: ZeroBlockBasis,
    h: HForm,
    tol: Tolerance,
    form: CanonicalForm | None = None,
) -> Condition:
    """Whether some canonical basis of the zero part of zb.B puts its unit kernel
    vectors onto span(kernel_basis)."""
    try:
        aligned = kernel_alignment(zb.B, h, kernel_basis, tol, form=form)
    except KernelAlignmentError as e:
        return Condition(False, {"reason": str(e), **(e.witness or {})})
    return Condition(
        True,
        {"units": [{"kind": u.kind, "sizes": list(u.sizes), "sign": u.sign} for u in aligned.units]},
    )


def polar_exists(X: QMatrix, h: HForm, tol: Tolerance) -> PolarReport:
    B = polar_gram(X, h)
    form = canonical_form(B, h, tol)
    report = sqrt_exists(form, tol)
    cond_i = Condition(
        not report.negative_violations,
        {
            "blocks": [
                {"lambda": lam, "size": k, "sign": s} for lam, k, s in report.negative_violations
            ]
        },
    )
    cond_ii = Condition(
        not report.zero_violations,
        {"blocks": [{"size": k, "sign": s} for k, s in report.zero_violations]},
    )
    kernel = null_space(X, tol)
    zb = zero_block_basis(B, form, report)
    cond_iii = kernel_condition_check(kernel, zb, h, tol, form=form)
    exists = bool(cond_i and cond_ii and cond_iii)
    logger.debug(
        "polar_exists: i=%s ii=%s iii=%s kernel_dim=%d",
        cond_i.ok,
        cond_ii.ok,
        cond_iii.ok,
        kernel.cols,
    )
    return PolarReport(exists, cond_i, cond_ii, cond_iii, form, B, kernel)


@dataclass(frozen=True)
class PolarResiduals:
    factorization: float
    unitarity: float
    selfadjoint: float
    kernel_dim_a: int
    kernel_dim_x: int
    kernel_match: bool
    tol: float

    @property
    def ok(self) -> bool:
        return self.kernel_match and max(self.factorization, self.unitarity, self.selfadjoint) <= self.tol

    def to_dict(self) -> dict:
        return {
            "factorization": self.factorization,
            "unitarity": self.unitarity,
            "selfadjoint": self.selfadjoint,
            "kernel": {
                "dim_A": self.kernel_dim_a,
                "dim_X": self.kernel_dim_x,
                "match": self.kernel_match,
            },
            "ok": self.ok,
        }


def verify_polar(X: QMatrix, h: HForm, U: QMatrix, A: QMatrix, tol: Tolerance) -> PolarResiduals:
    """Recomputes every certification residual of a claimed decomposition X = U A."""
    for name, M in (("X", X), ("U", U), ("A", A)):
        if M.shape != (h.n, h.n):
            raise DimensionMismatchError(f"{name} of shape {M.shape} does not act on a {h.n}-space")
    factorization = (X - U @ A).norm() / max(1.0, X.norm())
    rank_a = numerical_rank(A, tol)
    rank_x = numerical_rank(X, tol)
    rank_both = numerical_rank(vstack([A, X]), tol)
    return PolarResiduals(
        factorization=factorization,
        unitarity=unitarity_residual(U, h),
        selfadjoint=is_h_selfadjoint(A, h, tol).residual,
        kernel_dim_a=h.n - rank_a,
        kernel_dim_x=h.n - rank_x,
        kernel_match=rank_a == rank_x == rank_both,
        tol=tol.residual_tol,
    )


@dataclass
class PolarDecomposition:
    U: QMatrix
    A: QMatrix
    residuals: PolarResiduals

    def verify(self, X: QMatrix, h: HForm, tol: Tolerance) -> PolarResiduals:
        return verify_polar(X, h, self.U, self.A, tol)

    def to_dict(self) -> dict:
        return {"residuals": self.residuals.to_dict()}


def polar_decompose(
    X: QMatrix, h: HForm, tol: Tolerance, report: PolarReport | None = None
) -> PolarDecomposition:
    report = report or polar_exists(X, h, tol)
    if not report.exists:
        raise PolarExistenceError(
            "X admits no H-polar decomposition", witness=report.to_dict()
        )
    A = sqrt_build(report.B, h, tol, kernel_target=report.kernel)
    U0 = factor_isometry(A, X, h, h, tol)
    U = extend_isometry(U0.V, U0.images, h, h, tol)
    residuals = verify_polar(X, h, U, A, tol)
    if not residuals.ok:
        raise CertificationError(
            "polar decomposition failed certification", witness=residuals.to_dict()
        )
    logger.debug("polar_decompose: %s", residuals.to_dict())
    return PolarDecomposition(U, A, residuals)
