"""Random instances with known structure.

Every generator takes a seed (or a numpy Generator to continue a stream) and is
deterministic in it. Outputs are certified before they are returned.
"""

from __future__ import annotations

import logging
import re

import numpy as np
import scipy.linalg

from quatpolar.canonical import CanonicalBlock, CanonicalForm, assemble, sorted_blocks
from quatpolar.config import Tolerance
from quatpolar.errors import (
    CertificationError,
    InvalidInputError,
    ResampleExhaustedError,
    SqrtExistenceError,
)
from quatpolar.indefinite import HForm, is_h_selfadjoint, is_h_unitary
from quatpolar.polar import PolarDecomposition, verify_polar
from quatpolar.quaternion import QMatrix, inverse, omega_extract
from quatpolar.sqroot import sqrt_build, sqrt_exists
from quatpolar.witt import WittBasis, WittParams

logger = logging.getLogger(__name__)

Seed = int | np.random.Generator

DEFAULT_SPECTRUM: tuple[complex, ...] = (0.0, 0.25, 0.5, 0.5j)

_BLOCK = re.compile(r"^\s*(?P<lam>[^:]+?)\s*:\s*(?P<size>\d+)\s*(?::\s*(?P<sign>[+-])1?\s*)?$")


def _rng(seed: Seed | None) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def parse_block_spec(text: str) -> list[CanonicalBlock]:
    """Parses "lambda:size[:sign]" items separated by commas, e.g. "0:2:+,1+2j:2"."""
    blocks = []
    for item in text.split(","):
        if not item.strip():
            continue
        match = _BLOCK.match(item)
        if match is None:
            raise InvalidInputError(f"cannot parse block {item.strip()!r}; expected lambda:size[:sign]")
        try:
            lam = complex(match["lam"].replace(" ", ""))
        except ValueError as e:
            raise InvalidInputError(f"invalid eigenvalue {match['lam']!r}") from e
        sign = None if match["sign"] is None else (1 if match["sign"] == "+" else -1)
        blocks.append(CanonicalBlock(lam, int(match["size"]), sign))
    if not blocks:
        raise InvalidInputError("block list is empty")
    return blocks


def random_blocks(
    seed: Seed | None,
    max_dim: int,
    spectrum: tuple[complex, ...] = DEFAULT_SPECTRUM,
    max_size: int = 3,
) -> list[CanonicalBlock]:
    """Random block list of total dimension at most max_dim with eigenvalues from spectrum.

    Nonreal entries are taken with Im > 0; real blocks get a random sign.
    """
    rng = _rng(seed)
    target = int(rng.integers(1, max_dim + 1))
    blocks: list[CanonicalBlock] = []
    dim = 0
    while dim < target:
        lam = complex(spectrum[int(rng.integers(len(spectrum)))])
        width = 1 if lam.imag == 0.0 else 2
        size = min(int(rng.integers(1, max_size + 1)), (max_dim - dim) // width)
        if size == 0:
            break
        if width == 1:
            blocks.append(CanonicalBlock(lam.real, size, 1 if rng.random() < 0.5 else -1))
        else:
            blocks.append(CanonicalBlock(complex(lam.real, abs(lam.imag)), size))
        dim += width * size
    if not blocks:
        raise InvalidInputError(f"no block of {spectrum} fits in dimension {max_dim}")
    return blocks


def random_qmatrix(rng: np.random.Generator, rows: int, cols: int) -> QMatrix:
    return QMatrix(rng.standard_normal((rows, cols, 4)))


def random_invertible(rng: np.random.Generator, n: int, cond_cap: float, tol: Tolerance) -> QMatrix:
    """Gaussian quaternion matrix with singular values clipped to [s_max / cond_cap, s_max]."""
    S = random_qmatrix(rng, n, n)
    U, s, Vh = scipy.linalg.svd(S.omega())
    s = np.clip(s, s[0] / cond_cap, s[0])
    return omega_extract((U * s) @ Vh, tol)


def gen_selfadjoint_pair(
    blocks: list[CanonicalBlock],
    seed: Seed | None,
    cond_cap: float | None = None,
    tol: Tolerance | None = None,
    identity: bool = False,
) -> tuple[QMatrix, HForm, QMatrix]:
    """A = S J S^-1 and H = S^-* Hc S^-1 for the assembled blocks (S = I if identity)."""
    tol = tol or Tolerance()
    cond_cap = cond_cap or tol.cond_cap
    J, Hc = assemble(blocks)
    n = J.rows
    S = QMatrix.identity(n) if identity else random_invertible(_rng(seed), n, cond_cap, tol)
    S_inv = inverse(S)
    A = S @ J @ S_inv
    h = HForm.from_matrix(S_inv.H @ Hc @ S_inv, tol)
    check = is_h_selfadjoint(A, h, tol)
    if not check:
        raise CertificationError(
            "generated pair is not selfadjoint", witness={"residual": check.residual}
        )
    logger.debug("gen_selfadjoint_pair: n=%d blocks=%s", n, [str(b) for b in blocks])
    return A, h, S


def gen_h_unitary(
    h: HForm, seed: Seed | None, tol: Tolerance | None = None, scale: float = 0.5
) -> QMatrix:
    """Cayley transform U = (I - K)(I + K)^-1 of a random H-skew-adjoint K."""
    tol = tol or Tolerance()
    rng = _rng(seed)
    n = h.n
    eye = QMatrix.identity(n)
    last = None
    for attempt in range(tol.max_resample):
        Z = random_qmatrix(rng, n, n)
        K = h.H_inv @ ((Z - Z.H) * 0.5)
        norm = K.spectral_norm()
        if scale == 0.0 or norm == 0.0:
            K = QMatrix.zeros(n, n)
        else:
            K = K * (scale / norm)
        U = (eye - K) @ inverse(eye + K)
        last = is_h_unitary(U, h, tol)
        if last:
            return U
        logger.debug("gen_h_unitary: attempt %d rejected (residual %.3e)", attempt, last.residual)
    raise ResampleExhaustedError(
        f"no certified H-unitary after {tol.max_resample} samples",
        witness={"residual": last.residual if last else None},
    )


def gen_polar_instance(
    blocks: list[CanonicalBlock], seed: Seed | None, tol: Tolerance | None = None
) -> tuple[QMatrix, HForm, PolarDecomposition]:
    """X = U A with B = A^2 having the given blocks; blocks must admit a root."""
    tol = tol or Tolerance()
    n = sum(b.dim for b in blocks)
    report = sqrt_exists(CanonicalForm(sorted_blocks(blocks), QMatrix.identity(n)), tol)
    if not report.exists:
        raise SqrtExistenceError(
            "block list admits no selfadjoint square root", witness=report.to_dict()
        )
    rng = _rng(seed)
    B, h, _ = gen_selfadjoint_pair(blocks, rng, tol=tol)
    A = sqrt_build(B, h, tol)
    U = gen_h_unitary(h, rng, tol)
    X = U @ A
    residuals = verify_polar(X, h, U, A, tol)
    if not residuals.ok:
        raise CertificationError("generated polar instance failed certification", witness=residuals.to_dict())
    return X, h, PolarDecomposition(U, A, residuals)


def random_form(
    rng: np.random.Generator, p: int, q: int, tol: Tolerance
) -> tuple[HForm, QMatrix]:
    """H = S^-* diag(I_p, -I_q) S^-1 with S returned (so S* H S = diag(I_p, -I_q))."""
    S = random_invertible(rng, p + q, 1e3, tol)
    S_inv = inverse(S)
    D = QMatrix.from_real(np.diag([1.0] * p + [-1.0] * q))
    return HForm.from_matrix(S_inv.H @ D @ S_inv, tol), S


def gen_witt_instance(
    profile: tuple[int, int, int], n: int, seed: Seed | None, tol: Tolerance | None = None
) -> tuple[QMatrix, QMatrix, HForm, HForm]:
    """(V1, images, h1, h2): a partial isometry on a subspace with Gram profile (m0, m+, m-)."""
    tol = tol or Tolerance()
    m0, m_plus, m_minus = profile
    free = n - 2 * m0 - m_plus - m_minus
    if min(profile) < 0 or free < 0:
        raise InvalidInputError(f"profile {profile} does not fit in dimension {n}")
    rng = _rng(seed)
    extra_plus = int(rng.integers(0, free + 1))
    p = m0 + m_plus + extra_plus
    q = n - p
    h1, S1 = random_form(rng, p, q, tol)
    h2, S2 = random_form(rng, p, q, tol)

    coords = np.zeros((n, m0 + m_plus + m_minus))
    for i in range(m0):
        coords[i, i] = coords[p + i, i] = 1.0
    for j in range(m_plus):
        coords[m0 + j, m0 + j] = 1.0
    for j in range(m_minus):
        coords[p + m0 + j, m0 + m_plus + j] = 1.0
    mix = random_invertible(rng, coords.shape[1], 1e2, tol) if coords.shape[1] else QMatrix.zeros(0, 0)
    V1 = S1 @ QMatrix.from_real(coords) @ mix

    D = HForm.from_matrix(QMatrix.from_real(np.diag([1.0] * p + [-1.0] * q)), tol)
    G = gen_h_unitary(D, rng, tol)
    images = S2 @ G @ inverse(S1) @ V1
    return V1, images, h1, h2


def gen_witt_params(basis: WittBasis, seed: Seed | None, tol: Tolerance | None = None) -> WittParams:
    """Random (P1, P2, P3): P1 a Cayley J2-unitary, P3 skew-Hermitian."""
    tol = tol or Tolerance()
    rng = _rng(seed)
    r, m0 = basis.r, basis.profile.m0
    P1 = gen_h_unitary(HForm.from_matrix(basis.J2, tol), rng, tol) if r else QMatrix.zeros(0, 0)
    P2 = random_qmatrix(rng, r, m0) * 0.5
    Z = random_qmatrix(rng, m0, m0)
    params = WittParams(P1, P2, (Z - Z.H) * 0.5)
    params.validate(basis, tol)
    return params
