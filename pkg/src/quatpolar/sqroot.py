"""H-selfadjoint square roots of H-selfadjoint matrices.

Existence is read off the canonical form: negative eigenvalue blocks must pair up as
(J_k(l) + J_k(l), Q_k + -Q_k), and zero blocks must split into units

    odd     J_(a+1)(0) + J_a(0) with equal signs    (a = 0 is a lone J_1(0))
    even    J_k(0) + J_k(0) with opposite signs.

A root is assembled in canonical coordinates class by class and conjugated back.
When the kernel of the root is prescribed, the zero root subspace is re-based so that
the unit kernel vectors span the target (see kernel_alignment).
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import binom

from quatpolar.canonical import (
    CanonicalBlock,
    CanonicalForm,
    assembly_order,
    canonical_form,
    nilpotency_index,
    normalize_chain,
)
from quatpolar.config import Tolerance
from quatpolar.errors import (
    CertificationError,
    DimensionMismatchError,
    KernelAlignmentError,
    SqrtExistenceError,
)
from quatpolar.indefinite import HForm, is_h_selfadjoint, sip
from quatpolar.quaternion import (
    QMatrix,
    block_diag,
    column_space,
    hermitian_eigh,
    hstack,
    intersect,
    inverse,
    lstsq,
    null_space,
    numerical_rank,
)

logger = logging.getLogger(__name__)

NEGATIVE = "negative"
ZERO_ODD = "zero_odd"
ZERO_EVEN = "zero_even"
ZERO_SINGLE = "zero_single"
POSITIVE = "positive"
NONREAL = "nonreal"


@dataclass(frozen=True)
class BlockPairing:
    kind: str
    indices: tuple[int, ...]


@dataclass
class SqrtReport:
    exists: bool
    negative_violations: list[tuple[float, int, int]] = field(default_factory=list)
    zero_violations: list[tuple[int, int]] = field(default_factory=list)
    pairing: list[BlockPairing] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "exists": self.exists,
            "negative_violations": [
                {"lambda": lam, "size": k, "sign": s} for lam, k, s in self.negative_violations
            ],
            "zero_violations": [{"size": a, "sign": s} for a, s in self.zero_violations],
            "pairing": [{"kind": p.kind, "blocks": list(p.indices)} for p in self.pairing],
        }


def eigenvalue_class(block: CanonicalBlock, tol: Tolerance) -> str:
    if not block.is_real:
        return NONREAL
    if abs(block.lam.real) <= tol.cluster_radius:
        return "zero"
    return POSITIVE if block.lam.real > 0 else NEGATIVE


def _zero_plan(keys: list[tuple[int, int]], counts: tuple[int, ...]) -> tuple[int, tuple]:
    """Minimum number of unmatched zero blocks and the choices achieving it.

    keys are (size, sign) sorted by decreasing size; the largest remaining block is
    either alone (size 1), paired with (size-1, same sign), paired with (size,
    opposite sign) or left unmatched.
    """
    index = {key: i for i, key in enumerate(keys)}

    @lru_cache(maxsize=None)
    def best(state: tuple[int, ...]) -> tuple[int, tuple]:
        first = next((i for i, c in enumerate(state) if c), None)
        if first is None:
            return 0, ()
        size, sign = keys[first]
        taken = list(state)
        taken[first] -= 1
        options = []
        if size == 1:
            sub = best(tuple(taken))
            options.append((sub[0], ((ZERO_SINGLE, keys[first], None),) + sub[1]))
        for kind, partner in ((ZERO_ODD, (size - 1, sign)), (ZERO_EVEN, (size, -sign))):
            j = index.get(partner)
            if j is None or taken[j] == 0 or partner[0] < 1:
                continue
            rest = list(taken)
            rest[j] -= 1
            sub = best(tuple(rest))
            options.append((sub[0], ((kind, keys[first], partner),) + sub[1]))
        sub = best(tuple(taken))
        options.append((sub[0] + 1, (("unmatched", keys[first], None),) + sub[1]))
        return min(options, key=lambda option: option[0])

    return best(counts)


def sqrt_exists(form: CanonicalForm, tol: Tolerance | None = None) -> SqrtReport:
    """Checks the negative-block and zero-block pairing conditions."""
    tol = tol or Tolerance()
    blocks = form.blocks
    pairing: list[BlockPairing] = []
    negative_violations: list[tuple[float, int, int]] = []
    zero_violations: list[tuple[int, int]] = []

    groups: dict[tuple[float, int], dict[int, list[int]]] = {}
    zero_pools: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i, b in enumerate(blocks):
        cls = eigenvalue_class(b, tol)
        if cls in (POSITIVE, NONREAL):
            pairing.append(BlockPairing(cls, (i,)))
        elif cls == "zero":
            zero_pools[(b.size, b.sign)].append(i)
        else:
            key = next(
                (
                    g
                    for g in groups
                    if g[1] == b.size and abs(g[0] - b.lam.real) <= tol.cluster_radius
                ),
                (b.lam.real, b.size),
            )
            groups.setdefault(key, {1: [], -1: []})[b.sign].append(i)

    for (lam, k), by_sign in groups.items():
        plus, minus = by_sign[1], by_sign[-1]
        for i, j in zip(plus, minus, strict=False):
            pairing.append(BlockPairing(NEGATIVE, (i, j)))
        for i in plus[len(minus) :] + minus[len(plus) :]:
            negative_violations.append((lam, k, blocks[i].sign))

    if zero_pools:
        keys = sorted(zero_pools, key=lambda key: (-key[0], -key[1]))
        _, plan = _zero_plan(keys, tuple(len(zero_pools[key]) for key in keys))
        pools = {key: list(idx) for key, idx in zero_pools.items()}
        for kind, first, partner in plan:
            i = pools[first].pop(0)
            if kind == "unmatched":
                zero_violations.append(first)
            elif partner is None:
                pairing.append(BlockPairing(kind, (i,)))
            else:
                j = pools[partner].pop(0)
                # even units list the + block first
                if kind == ZERO_EVEN and blocks[i].sign < 0:
                    i, j = j, i
                pairing.append(BlockPairing(kind, (i, j)))

    exists = not negative_violations and not zero_violations
    logger.debug(
        "sqrt_exists: exists=%s negative=%s zero=%s", exists, negative_violations, zero_violations
    )
    return SqrtReport(exists, negative_violations, zero_violations, pairing)


def toeplitz_sqrt(lam: complex, k: int, flip: bool = False) -> np.ndarray:
    """Principal square root of J_k(lam), or of lam*I - N when flip is set."""
    root = np.sqrt(complex(lam))
    out = np.zeros((k, k), dtype=complex)
    for j in range(k):
        coeff = root * binom(0.5, j) * complex(lam) ** (-j)
        out += coeff * (-1) ** (j if flip else 0) * np.eye(k, k=j)
    return out


def odd_unit_root(a: int) -> np.ndarray:
    """Root of J_(a+1)(0) + J_a(0): S J_(2a+1)(0) S^-1 with S columns e1, e_(a+2), e2, ..."""
    size = 2 * a + 1
    order = []
    for t in range(a + 1):
        order.append(t)
        if t < a:
            order.append(a + 1 + t)
    P = np.eye(size)[:, order]
    return P @ np.eye(size, k=1) @ P.T


def even_unit_root(k: int) -> np.ndarray:
    """Root of J_k(0) + J_k(0) with signs (+, -): S J_2k(0) S^T, S columns (e_t +- e_(k+t))/sqrt 2."""
    S = np.zeros((2 * k, 2 * k))
    for t in range(k):
        S[t, 2 * t] = S[k + t, 2 * t] = 1.0
        S[t, 2 * t + 1] = 1.0
        S[k + t, 2 * t + 1] = -1.0
    S /= np.sqrt(2.0)
    return S @ np.eye(2 * k, k=1) @ S.T


@dataclass(frozen=True)
class ZeroUnit:
    kind: str
    sizes: tuple[int, ...]
    sign: int | None

    @property
    def dim(self) -> int:
        return sum(self.sizes)

    def root(self) -> np.ndarray:
        if self.kind == ZERO_SINGLE:
            return np.zeros((1, 1))
        if self.kind == ZERO_ODD:
            return odd_unit_root(self.sizes[1])
        return even_unit_root(self.sizes[0])

    def kernel_vector(self) -> np.ndarray:
        v = np.zeros(self.dim)
        v[0] = 1.0
        if self.kind == ZERO_EVEN:
            v[self.sizes[0]] = 1.0
            v /= np.sqrt(2.0)
        return v

    def gram(self) -> QMatrix:
        if self.kind == ZERO_EVEN:
            return block_diag([sip(self.sizes[0]), -sip(self.sizes[1])])
        return block_diag([sip(s) * self.sign for s in self.sizes])


@dataclass
class ZeroBlockBasis:
    """Basis of the zero root subspace of B, grouped into pairing units.

    Unit i occupies consecutive columns e_(i,1), ..., e_(i,l_i): the chain of the first
    block followed by the chain of its partner, each chain ordered from eigenvector to
    top. Lone J_1(0) blocks are units of kind zero_single.
    """

    B: QMatrix
    basis: QMatrix
    units: list[ZeroUnit]

    @property
    def dim(self) -> int:
        return self.basis.cols

    def local_root(self) -> QMatrix:
        if not self.units:
            return QMatrix.zeros(0, 0)
        return block_diag([QMatrix.from_real(u.root()) for u in self.units])

    def reference_kernel(self) -> QMatrix:
        """span{e_(i,1) + e_(i,k_i+1)} (even) + span{e_(i,1)} (odd) + span{e_(0,j)}, normalized."""
        columns = []
        offset = 0
        for u in self.units:
            v = np.zeros(self.dim)
            v[offset : offset + u.dim] = u.kernel_vector()
            columns.append(self.basis @ QMatrix.from_real(v[:, None]))
            offset += u.dim
        return hstack(columns, rows=self.basis.rows)

    def gram(self) -> QMatrix:
        if not self.units:
            return QMatrix.zeros(0, 0)
        return block_diag([u.gram() for u in self.units])


def _block_offsets(blocks: list[CanonicalBlock]) -> dict[int, int]:
    offsets = {}
    col = 0
    for idx in assembly_order(blocks):
        offsets[idx] = col
        col += blocks[idx].dim
    return offsets


def _block_columns(form: CanonicalForm, idx: int, offsets: dict[int, int]) -> QMatrix:
    start = offsets[idx]
    return form.S[:, start : start + form.blocks[idx].dim]


def zero_block_basis(B: QMatrix, form: CanonicalForm, report: SqrtReport) -> ZeroBlockBasis:
    """The unaligned zero-block basis read directly off the canonical form."""
    offsets = _block_offsets(form.blocks)
    columns, units = [], []
    for p in report.pairing:
        if p.kind not in (ZERO_ODD, ZERO_EVEN, ZERO_SINGLE):
            continue
        blocks = [form.blocks[i] for i in p.indices]
        sign = None if p.kind == ZERO_EVEN else blocks[0].sign
        units.append(ZeroUnit(p.kind, tuple(b.size for b in blocks), sign))
        columns.extend(_block_columns(form, i, offsets) for i in p.indices)
    return ZeroBlockBasis(B, hstack(columns, rows=B.rows), units)


def _zero_coordinates(form: CanonicalForm, tol: Tolerance) -> tuple[list[int], list[int]]:
    """Zero block indices in assembly order and their column positions in S."""
    offsets = _block_offsets(form.blocks)
    indices = [i for i in assembly_order(form.blocks) if eigenvalue_class(form.blocks[i], tol) == "zero"]
    positions = []
    for i in indices:
        positions.extend(range(offsets[i], offsets[i] + form.blocks[i].dim))
    return indices, positions


@dataclass
class _PendingUnit:
    kind: str
    sign: int | None
    chains: list[QMatrix]
    kernel_size: int


class _AdaptedChains:
    """Greedy construction of chains adapted to a target kernel, level by level.

    Works in the zero canonical coordinates where N = +J_k(0) and H = +eta Q_k.
    M is an orthonormal basis of the part not yet split off; K spans the target
    kernel vectors not yet assigned to a unit. Both stay H-orthogonal to every
    chain already built.
    """

    def __init__(self, N: QMatrix, H: QMatrix, K: QMatrix, tol: Tolerance):
        self.N = N
        self.H = H
        self.tol = tol
        self.M = QMatrix.identity(N.rows)
        self.K = K
        self.units: list[_PendingUnit] = []
        self.owed: dict[tuple[int, int], list[_PendingUnit]] = defaultdict(list)

    def fail(self, message: str, **witness: object) -> KernelAlignmentError:
        return KernelAlignmentError(message, witness=dict(witness))

    def level(self) -> int:
        return nilpotency_index(self.N, self.M, 1.0, self.tol.rank_tol)

    def top_space(self, s: int) -> tuple[QMatrix, QMatrix]:
        """Eigenvectors of the length-s chains of M and preimages under N^(s-1)."""
        image = self.N.power(s - 1) @ self.M
        L = column_space(image, self.tol, dim=numerical_rank(image, self.tol, scale=1.0))
        return L, self.preimage(L, s)

    def preimage(self, U: QMatrix, s: int) -> QMatrix:
        return self.M @ lstsq(self.N.power(s - 1) @ self.M, U)

    def phi_gram(self, U: QMatrix, s: int) -> QMatrix:
        G = U.H @ self.H @ self.preimage(U, s)
        return (G + G.H) * 0.5

    def kernel_part(self, L: QMatrix) -> QMatrix:
        if self.K.cols == 0:
            return self.K
        return intersect(self.K, L, self.tol)

    def clear_against_kernel(self, y: QMatrix, s: int) -> QMatrix:
        """Adds w in Ker N^(s-1) so that [k, y + w] = 0 for every remaining kernel vector k."""
        if self.K.cols == 0:
            return y
        W = self.M @ null_space(self.N.power(s - 1) @ self.M, self.tol)
        if W.cols == 0:
            return y
        c = lstsq(self.K.H @ self.H @ W, -(self.K.H @ self.H @ y))
        return y + W @ c

    def drop_kernel(self, x: QMatrix) -> None:
        """Keeps the kernel vectors orthogonal to the top x (one dimension less)."""
        self.K = self.K @ null_space(x.H @ self.H @ self.K, self.tol, dim=self.K.cols - 1)

    def split_off(self, C: QMatrix) -> None:
        remaining = self.M.cols - C.cols
        if remaining == 0:
            self.M = QMatrix.zeros(self.N.rows, 0)
            return
        self.M = self.M @ null_space(C.H @ self.H @ self.M, self.tol, dim=remaining)

    def odd_top(self, s: int, u: QMatrix) -> None:
        y = self.preimage(u, s)
        self.drop_kernel(y)
        C, eta = normalize_chain(self.N, self.H, y, s)
        self.split_off(C)
        if s == 1:
            self.units.append(_PendingUnit(ZERO_SINGLE, eta, [C], 1))
            return
        unit = _PendingUnit(ZERO_ODD, eta, [C], 1)
        self.units.append(unit)
        self.owed[(s - 1, eta)].append(unit)

    def even_top(self, s: int, n: QMatrix, Ks: QMatrix) -> None:
        L, Y = self.top_space(s)
        R = Ks.H @ self.H @ Y
        e1 = QMatrix.zeros(Ks.cols, 1)
        e1.data[0, 0, 0] = 1.0
        c = lstsq(R, e1)
        if (R @ c - e1).norm() > self.tol.rank_tol ** 0.5:
            raise self.fail("neutral kernel vector has no partner at its level", level=s)
        m, y_m = L @ c, Y @ c
        y_n = self.clear_against_kernel(self.preimage(n, s), s)
        alpha = -0.5 * float((m.H @ self.H @ y_m).data[0, 0, 0])
        m, y_m = m + n * alpha, y_m + y_n * alpha
        x_plus = (y_n + y_m) / np.sqrt(2.0)
        v = (y_n - y_m) / np.sqrt(2.0)
        self.drop_kernel(x_plus)
        C_plus, eta_plus = normalize_chain(self.N, self.H, x_plus, s)
        self.split_off(C_plus)
        # H-orthogonal projection of v away from the + chain keeps N^(s-1) v
        v = v - C_plus @ (sip(s) * eta_plus) @ (C_plus.H @ self.H @ v)
        C_minus, eta_minus = normalize_chain(self.N, self.H, v, s)
        self.split_off(C_minus)
        if (eta_plus, eta_minus) != (1, -1):
            raise self.fail("neutral kernel vector did not split into signs +1/-1", level=s)
        self.units.append(_PendingUnit(ZERO_EVEN, None, [C_plus, C_minus], 1))

    def owed_chain(self, s: int, L: QMatrix) -> None:
        G = self.phi_gram(L, s)
        w, V = hermitian_eigh(G, self.tol)
        pick = int(np.argmax(np.abs(w)))
        y = self.clear_against_kernel(self.preimage(L @ V.column(pick), s), s)
        C, eta = normalize_chain(self.N, self.H, y, s)
        pending = self.owed.get((s, eta))
        if not pending:
            raise self.fail(
                f"a length-{s} chain of sign {eta:+d} has no partner compatible with the kernel",
                level=s,
                sign=eta,
            )
        unit = pending.pop(0)
        unit.chains.append(C)
        self.split_off(C)

    def run(self) -> list[_PendingUnit]:
        while self.M.cols > 0:
            s = self.level()
            for (size, sign), pending in self.owed.items():
                if pending and size > s:
                    raise self.fail(
                        f"no length-{size} chain of sign {sign:+d} left to pair",
                        level=size,
                        sign=sign,
                    )
            # kernel vectors with a nonzero self-pairing start odd units
            while True:
                L, _ = self.top_space(s)
                Ks = self.kernel_part(L)
                if Ks.cols == 0:
                    break
                w, V = hermitian_eigh(self.phi_gram(Ks, s), self.tol)
                pick = int(np.argmax(np.abs(w)))
                if abs(w[pick]) <= self.tol.rank_tol:
                    break
                self.odd_top(s, Ks @ V.column(pick))
            # the remaining kernel vectors at this level are neutral: even units
            while True:
                L, _ = self.top_space(s)
                Ks = self.kernel_part(L)
                if Ks.cols == 0:
                    break
                self.even_top(s, Ks.column(0), Ks)
            # chains without kernel vectors must complete odd units from above
            while self.M.cols > 0 and self.level() == s:
                L, _ = self.top_space(s)
                self.owed_chain(s, L)
        leftover = {f"{k[0]}:{k[1]:+d}": len(v) for k, v in self.owed.items() if v}
        if leftover:
            raise self.fail("odd units are missing their shorter chain", owed=leftover)
        if self.K.cols:
            raise self.fail("kernel target is not covered by the zero blocks", left=self.K.cols)
        return self.units


def kernel_alignment(
    B: QMatrix,
    h: HForm,
    kernel_basis: QMatrix,
    tol: Tolerance,
    form: CanonicalForm | None = None,
) -> ZeroBlockBasis:
    """Zero-block basis whose unit kernel vectors span exactly kernel_basis.

    Raises KernelAlignmentError when no H-selfadjoint root of B has that kernel.
    """
    if kernel_basis.rows != h.n:
        raise DimensionMismatchError(
            f"kernel vectors of length {kernel_basis.rows} for a form of size {h.n}"
        )
    form = form or canonical_form(B, h, tol)
    indices, positions = _zero_coordinates(form, tol)
    blocks = [form.blocks[i] for i in indices]
    d0 = len(positions)
    K = column_space(kernel_basis, tol)
    if K.cols == 0:
        if d0:
            raise KernelAlignmentError(
                "a root of B has a nontrivial kernel when B is singular",
                witness={"zero_dim": d0, "kernel_dim": 0},
            )
        return ZeroBlockBasis(B, QMatrix.zeros(h.n, 0), [])

    coords = inverse(form.S) @ K
    zero_rows = set(positions)
    other = [i for i in range(h.n) if i not in zero_rows]
    outside = coords[other, :].norm() if other else 0.0
    if outside > tol.residual_tol * max(1.0, coords.norm()):
        raise KernelAlignmentError(
            "kernel target leaves the zero root subspace of B", witness={"residual": outside}
        )
    coords = coords[positions, :]

    N0 = block_diag([QMatrix.from_real(np.eye(b.size, k=1)) for b in blocks])
    H0 = block_diag([sip(b.size) * b.sign for b in blocks])
    if (N0 @ coords).norm() > tol.residual_tol * max(1.0, coords.norm()):
        raise KernelAlignmentError(
            "kernel target is not contained in Ker B",
            witness={"residual": (N0 @ coords).norm()},
        )
    # exact eigenvector coordinates: drop the (numerically zero) non-bottom rows
    bottoms = np.zeros(d0, dtype=bool)
    offset = 0
    for b in blocks:
        bottoms[offset] = True
        offset += b.size
    coords.data[~bottoms] = 0.0
    align_tol = replace(tol, rank_tol=max(tol.rank_tol, tol.residual_tol))
    Kc = column_space(coords, align_tol)
    if Kc.cols != K.cols:
        raise KernelAlignmentError(
            "kernel target is degenerate in the zero coordinates",
            witness={"dim": K.cols, "zero_dim": Kc.cols},
        )
    # Ker A is H-orthogonal to Im A, so Ker A ∩ Im A, of dimension
    # dim Ker B - dim Ker A, lies in the radical of the form on Ker A
    neutral = Kc.cols - numerical_rank(Kc.H @ H0 @ Kc, align_tol, scale=1.0)
    needed = len(blocks) - Kc.cols
    if neutral < needed:
        raise KernelAlignmentError(
            f"non-isotropic: the form on the kernel target has a neutral part of "
            f"dimension {neutral}, {needed} needed",
            witness={"neutral_dim": neutral, "needed": needed},
        )

    units = _AdaptedChains(N0, H0, Kc, align_tol).run()
    S0 = form.S[:, positions]
    columns = [S0 @ C for unit in units for C in unit.chains]
    zero_units = [
        ZeroUnit(u.kind, tuple(C.cols for C in u.chains), u.sign) for u in units
    ]
    logger.debug(
        "kernel_alignment: kernel_dim=%d units=%s",
        K.cols,
        [(u.kind, u.sizes, u.sign) for u in zero_units],
    )
    return ZeroBlockBasis(B, hstack(columns, rows=h.n), zero_units)


def _class_root(form: CanonicalForm, pairing: BlockPairing) -> np.ndarray:
    blocks = [form.blocks[i] for i in pairing.indices]
    b = blocks[0]
    if pairing.kind == POSITIVE:
        return toeplitz_sqrt(b.lam.real, b.size).real
    if pairing.kind == NONREAL:
        T = toeplitz_sqrt(b.lam, b.size)
        return np.block([[T, np.zeros_like(T)], [np.zeros_like(T), T.conj()]])
    # negative pair (+ block, - block): [[0, G], [-G, 0]] with G^2 = -J_k(l)
    G = toeplitz_sqrt(-b.lam.real, b.size, flip=True).real
    Z = np.zeros_like(G)
    return np.block([[Z, G], [-G, Z]])


def sqrt_residual(A: QMatrix, B: QMatrix) -> float:
    """||A^2 - B|| relative to 1 + ||B|| + ||A||^2."""
    return (A @ A - B).norm() / (1.0 + B.norm() + A.norm() ** 2)


def sqrt_build(
    B: QMatrix, h: HForm, tol: Tolerance, kernel_target: QMatrix | None = None
) -> QMatrix:
    """Certified H-selfadjoint A with A^2 = B (and Ker A = span(kernel_target) if given)."""
    form = canonical_form(B, h, tol)
    report = sqrt_exists(form, tol)
    if not report.exists:
        raise SqrtExistenceError(
            "B has no H-selfadjoint square root", witness=report.to_dict()
        )
    offsets = _block_offsets(form.blocks)
    columns: list[QMatrix] = []
    locals_: list[QMatrix] = []
    for p in report.pairing:
        if p.kind in (ZERO_ODD, ZERO_EVEN, ZERO_SINGLE):
            continue
        if p.kind == NEGATIVE:
            plus, minus = sorted(p.indices, key=lambda i: -form.blocks[i].sign)
            p = BlockPairing(NEGATIVE, (plus, minus))
        columns.extend(_block_columns(form, i, offsets) for i in p.indices)
        locals_.append(QMatrix.from_complex(_class_root(form, p)))

    if kernel_target is None:
        zb = zero_block_basis(B, form, report)
    else:
        zb = kernel_alignment(B, h, kernel_target, tol, form=form)
    if zb.dim:
        columns.append(zb.basis)
        locals_.append(zb.local_root())

    S = hstack(columns, rows=h.n)
    A = S @ block_diag(locals_) @ inverse(S)

    check = is_h_selfadjoint(A, h, tol)
    residual = sqrt_residual(A, B)
    if not check or residual > tol.residual_tol:
        raise CertificationError(
            "square root failed certification",
            witness={"selfadjoint": check.residual, "square": residual},
        )
    if kernel_target is not None:
        K = column_space(kernel_target, tol)
        kernel_dim = h.n - numerical_rank(A, tol)
        leak = (A @ K).norm() / max(A.norm(), 1.0)
        if kernel_dim != K.cols or leak > tol.residual_tol:
            raise CertificationError(
                "square root kernel does not match the target",
                witness={"kernel_dim": kernel_dim, "target_dim": K.cols, "residual": leak},
            )
    logger.debug("sqrt_build: n=%d residual=%.3e", h.n, residual)
    return A
