"""Canonical form of a pair (A, H) with A H-selfadjoint.

For every eigenvalue cluster the root subspace is taken from an ordered Schur form of
omega(A). Real eigenvalues are handled on a quaternion basis of the root subspace:
Jordan chains are grown from the vector maximizing |[N^(k-1) x, x]| and normalized so
that the chain Gram matrix is eta*Q_k. Nonreal eigenvalues are handled in complex
coordinates on the lambda root subspace of omega(A), where the form pairs that
subspace with its tau image through a skew bilinear form; a chain x and a dual chain z
give the quaternion columns of one J_k(lambda) + J_k(conj lambda) block.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from quatpolar.config import Tolerance
from quatpolar.errors import (
    CertificationError,
    ClusterAmbiguityError,
    DimensionMismatchError,
    InvalidInputError,
    NotSelfadjointError,
)
from quatpolar.indefinite import (
    HForm,
    conjugate_jordan_block,
    is_h_selfadjoint,
    jordan_block,
    sip,
)
from quatpolar.quaternion import (
    J_UNIT,
    QMatrix,
    block_diag,
    cluster_subspace,
    complex_to_quaternion,
    hermitian_eigh,
    hstack,
    kernel_ladder,
    null_space,
    quaternion_basis,
    quaternion_clusters,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CanonicalBlock:
    lam: complex
    size: int
    sign: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", complex(self.lam))
        if self.size < 1:
            raise InvalidInputError(f"block size must be positive, got {self.size}")
        if self.lam.imag < 0:
            raise InvalidInputError(f"block eigenvalue must have Im >= 0, got {self.lam}")
        if self.is_real and self.sign not in (1, -1):
            raise InvalidInputError(f"real eigenvalue block needs a sign of +1 or -1, got {self.sign}")
        if not self.is_real and self.sign is not None:
            raise InvalidInputError("nonreal eigenvalue blocks carry no sign")

    @property
    def is_real(self) -> bool:
        return self.lam.imag == 0.0

    @property
    def dim(self) -> int:
        """Quaternion dimension the block occupies."""
        return self.size if self.is_real else 2 * self.size

    def sort_key(self) -> tuple:
        return (self.lam.real, self.lam.imag, -self.size, -(self.sign or 0))

    def to_dict(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "size": self.size,
            "sign": self.sign,
        }

    def __str__(self) -> str:
        lam = f"{self.lam.real:.6g}" if self.is_real else f"{self.lam:.6g}"
        if self.sign is None:
            return f"({lam}, {self.size})"
        return f"({lam}, {self.size}, {'+' if self.sign > 0 else '-'}1)"


@dataclass
class CanonicalForm:
    blocks: list[CanonicalBlock]
    S: QMatrix
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.S.rows

    def assembled(self) -> tuple[QMatrix, QMatrix]:
        return assemble(self.blocks)

    def to_dict(self) -> dict:
        return {
            "blocks": [b.to_dict() for b in self.blocks],
            "residuals": dict(self.residuals),
        }


def sorted_blocks(blocks: Iterable[CanonicalBlock]) -> list[CanonicalBlock]:
    return sorted(blocks, key=CanonicalBlock.sort_key)


def assembly_order(blocks: Sequence[CanonicalBlock]) -> list[int]:
    """Indices of blocks as assembled: real blocks first, then nonreal pairs."""
    real = [i for i, b in enumerate(blocks) if b.is_real]
    return real + [i for i, b in enumerate(blocks) if not b.is_real]


def assemble(blocks: Sequence[CanonicalBlock]) -> tuple[QMatrix, QMatrix]:
    """Direct sums J and Hc: real blocks with eta*Q_k, then nonreal pairs with Q_2k."""
    Js, Hs = [], []
    for idx in assembly_order(blocks):
        b = blocks[idx]
        if b.is_real:
            Js.append(jordan_block(b.lam, b.size))
            Hs.append(sip(b.size) * b.sign)
        else:
            Js.append(block_diag([jordan_block(b.lam, b.size), conjugate_jordan_block(b.lam, b.size)]))
            Hs.append(sip(2 * b.size))
    return block_diag(Js), block_diag(Hs)


def forms_equal(f1: CanonicalForm, f2: CanonicalForm, tol: Tolerance) -> bool:
    """Block multisets agree: eigenvalues within cluster_radius, sizes and signs exactly."""
    return blocks_equal(f1.blocks, f2.blocks, tol)


def blocks_equal(
    b1: Sequence[CanonicalBlock], b2: Sequence[CanonicalBlock], tol: Tolerance
) -> bool:
    if len(b1) != len(b2):
        return False
    unmatched = list(b2)
    for block in b1:
        for idx, other in enumerate(unmatched):
            if (
                other.size == block.size
                and other.sign == block.sign
                and abs(other.lam - block.lam) <= tol.cluster_radius
            ):
                del unmatched[idx]
                break
        else:
            return False
    return True


def form_signature(blocks: Iterable[CanonicalBlock]) -> tuple[int, int]:
    """(positive, negative) inertia of the assembled Hc."""
    plus = minus = 0
    for b in blocks:
        if b.is_real:
            hi, lo = (b.size + 1) // 2, b.size // 2
            plus += hi if b.sign > 0 else lo
            minus += lo if b.sign > 0 else hi
        else:
            plus += b.size
            minus += b.size
    return plus, minus


def doubled_blocks(blocks: Iterable[CanonicalBlock]) -> list[tuple[complex, int, int | None]]:
    """Complex Jordan structure of (omega(A), omega(H)) implied by the quaternion blocks."""
    out: list[tuple[complex, int, int | None]] = []
    for b in blocks:
        if b.is_real:
            out.extend([(b.lam, b.size, b.sign)] * 2)
        else:
            out.extend([(b.lam, b.size, None), (b.lam.conjugate(), b.size, None)] * 2)
    return out


def _nilpotency_index(N: np.ndarray, scale: float, rank_tol: float) -> int:
    steps = kernel_ladder(N, scale, rank_tol)
    if steps is None:
        raise ClusterAmbiguityError(
            "restricted operator is not nilpotent at the cluster center",
            witness={"dim": N.shape[0]},
        )
    return steps


def nilpotency_index(N: QMatrix, M: QMatrix, scale: float, rank_tol: float) -> int:
    """Nilpotency index of N on the invariant subspace spanned by the orthonormal M."""
    if M.cols == 0:
        return 0
    Nr = M.H @ N @ M
    return _nilpotency_index(Nr.omega(), max(Nr.spectral_norm(), scale), rank_tol)


def chain_powers(N: QMatrix, x: QMatrix, count: int) -> list[QMatrix]:
    """[x, Nx, ..., N^(count-1) x]."""
    out = [x]
    for _ in range(count - 1):
        out.append(N @ out[-1])
    return out


def normalize_chain(N: QMatrix, H: QMatrix, x: QMatrix, k: int) -> tuple[QMatrix, int]:
    """Turns a top vector x with [N^(k-1) x, x] != 0 into a chain with Gram eta*Q_k.

    Returns the columns [N^(k-1) x, ..., N x, x] and eta. Only multiples of N^m x
    (m >= 1) are added to x, so [x, u] is unchanged for every u in Ker N.
    """

    def moments(v: QMatrix) -> list[float]:
        return [float((p.H @ H @ v).data[0, 0, 0]) for p in chain_powers(N, v, k)]

    c = moments(x)
    if c[k - 1] == 0.0:
        raise CertificationError("chain top is neutral for the form", witness={"size": k})
    x = x / np.sqrt(abs(c[k - 1]))
    eta = 1 if c[k - 1] > 0 else -1
    for j in range(k - 2, -1, -1):
        c = moments(x)
        x = x + chain_powers(N, x, k - j)[-1] * (-c[j] / (2.0 * eta))
    return hstack(chain_powers(N, x, k)[::-1]), eta


def _top_vector(M: QMatrix, w: np.ndarray, V: QMatrix, tol: Tolerance) -> QMatrix:
    """Chain top in the dominant eigenspace P = M V_w of the top Gram matrix.

    Returns P P* e_i for the coordinate axis e_i that P meets most. The choice is
    independent of the basis of P, and it is real whenever P is spanned by real vectors.
    """
    pick = int(np.argmax(np.abs(w)))
    close = [i for i in range(len(w)) if abs(w[i] - w[pick]) <= tol.residual_tol * abs(w[pick])]
    P = M @ V[:, close]
    axis = int(np.argmax(np.sum(P.data**2, axis=(1, 2))))
    return P @ P[axis, :].H


def _real_blocks(
    A: QMatrix, h: HForm, lam: float, E: np.ndarray, scale: float, tol: Tolerance
) -> list[tuple[CanonicalBlock, QMatrix]]:
    n = A.rows
    M = quaternion_basis(E)
    N = A - QMatrix.identity(n) * lam

    result = []
    while M.cols > 0:
        k = nilpotency_index(N, M, scale, tol.rank_tol)
        G = M.H @ h.H @ N.power(k - 1) @ M
        G = (G + G.H) * 0.5
        w, V = hermitian_eigh(G, tol)
        C, eta = normalize_chain(N, h.H, _top_vector(M, w, V, tol), k)
        result.append((CanonicalBlock(lam, k, eta), C))
        logger.debug("real block lambda=%.6g size=%d sign=%+d", lam, k, eta)
        remaining = M.cols - k
        if remaining == 0:
            break
        M = M @ null_space(C.H @ h.H @ M, tol, dim=remaining)
    return result


def _nonreal_blocks(
    omega_a: np.ndarray, omega_h: np.ndarray, lam: complex, E: np.ndarray, scale: float,
    tol: Tolerance,
) -> list[tuple[CanonicalBlock, QMatrix]]:
    n2, s = E.shape
    half = n2 // 2
    T = np.block(
        [[np.zeros((half, half)), -np.eye(half)], [np.eye(half), np.zeros((half, half))]]
    )
    Nc = E.conj().T @ (omega_a - lam * np.eye(n2)) @ E
    B = E.T @ T.T @ omega_h @ E

    def npow(p: int) -> np.ndarray:
        return np.linalg.matrix_power(Nc, p)

    result = []
    W = np.eye(s, dtype=complex)
    while W.shape[1] > 0:
        Nw = W.conj().T @ Nc @ W
        k = _nilpotency_index(Nw, max(float(np.linalg.norm(Nw, 2)), scale), tol.rank_tol)
        Phi = W.T @ B @ npow(k - 1) @ W
        U, sv, Vh = scipy.linalg.svd(Phi)
        x = W @ U[:, 0].conj()
        z = W @ Vh[0].conj() / sv[0]
        for j in range(k - 2, -1, -1):
            d_j = x @ B @ npow(j) @ z
            z = z - d_j * (npow(k - 1 - j) @ z)
        xs = np.column_stack([npow(k - i) @ x for i in range(1, k + 1)])
        zs = np.column_stack([npow(k - i) @ z for i in range(1, k + 1)])
        v = complex_to_quaternion(E @ xs)
        w = complex_to_quaternion(E @ zs).right_scale(J_UNIT)
        result.append((CanonicalBlock(lam, k), hstack([v, w])))
        logger.debug("nonreal block lambda=%s size=%d", lam, k)
        remaining = W.shape[1] - 2 * k
        if remaining <= 0:
            break
        chain = np.column_stack([xs, zs])
        _, _, Vh = scipy.linalg.svd(chain.T @ B @ W, full_matrices=True)
        W = W @ Vh[2 * k :].conj().T
    return result


def canonical_form(A: QMatrix, h: HForm, tol: Tolerance) -> CanonicalForm:
    """Blocks and S with S^-1 A S = J and S* H S = Hc (see assemble)."""
    if A.shape != (h.n, h.n):
        raise DimensionMismatchError(f"A of shape {A.shape} does not act on a {h.n}-space")
    check = is_h_selfadjoint(A, h, tol)
    if not check:
        raise NotSelfadjointError(
            f"A is not H-selfadjoint (residual {check.residual:.3e})",
            witness={"residual": check.residual},
        )
    n = h.n
    if n == 0:
        return CanonicalForm([], QMatrix.zeros(0, 0), {"similarity": 0.0, "congruence": 0.0})

    omega_a = A.omega()
    omega_h = h.H.omega()
    clusters = quaternion_clusters(A, tol)
    scale = A.spectral_norm()

    pieces: list[tuple[CanonicalBlock, QMatrix]] = []
    for idx, cluster in enumerate(clusters):
        if cluster.center.imag < 0:
            continue
        E = cluster_subspace(omega_a, clusters, idx)
        if cluster.is_real:
            pieces.extend(_real_blocks(A, h, cluster.center.real, E, scale, tol))
        else:
            pieces.extend(_nonreal_blocks(omega_a, omega_h, cluster.center, E, scale, tol))

    pieces.sort(key=lambda piece: piece[0].sort_key())
    blocks = [b for b, _ in pieces]
    columns = [pieces[i][1] for i in assembly_order(blocks)]
    S = hstack(columns, rows=n)
    if S.cols != n:
        raise CertificationError(
            f"canonical basis has {S.cols} columns for dimension {n}",
            witness={"columns": S.cols},
        )
    form = CanonicalForm(blocks, S)
    form.residuals = canonical_residuals(A, h, form)
    worst = max(form.residuals.values())
    if worst > tol.residual_tol:
        raise CertificationError(
            f"canonical form failed certification (residual {worst:.3e})",
            witness=dict(form.residuals),
        )
    logger.debug("canonical_form: blocks=%s residuals=%s", [str(b) for b in blocks], form.residuals)
    return form


def canonical_residuals(A: QMatrix, h: HForm, form: CanonicalForm) -> dict[str, float]:
    J, Hc = form.assembled()
    S = form.S
    s_norm = S.norm()
    similarity = (A @ S - S @ J).norm() / max((A.norm() + J.norm()) * s_norm, 1e-300)
    congruence = (S.H @ h.H @ S - Hc).norm() / max(s_norm**2 * h.H.norm(), 1e-300)
    return {"similarity": similarity, "congruence": congruence}
