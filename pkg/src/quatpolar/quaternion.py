"""Quaternion scalars and dense quaternion matrices.

A quaternion matrix is stored as a float array of shape (rows, cols, 4) holding the
components x0 + x1 i + x2 j + x3 k. Every spectral computation goes through the
complex embedding

    omega(A1 + j A2) = [[A1, conj(A2)], [-A2, conj(A1)]],   A1 = x0 + i x1,  A2 = x2 - i x3,

which is a *-algebra homomorphism. A complex 2n-vector (a; b) in the image of omega
corresponds to the quaternion vector a - j b, and the antilinear map
tau(a; b) = (-conj(b); conj(a)) commutes with every omega(A).
"""

from __future__ import annotations

import logging
import re
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from quatpolar.config import Tolerance
from quatpolar.errors import (
    ClusterAmbiguityError,
    DimensionMismatchError,
    InvalidInputError,
    SingularFormError,
    StructureError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Quaternion:
    x0: float = 0.0
    x1: float = 0.0
    x2: float = 0.0
    x3: float = 0.0

    @classmethod
    def from_complex(cls, z: complex) -> Quaternion:
        z = complex(z)
        return cls(z.real, z.imag, 0.0, 0.0)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> Quaternion:
        return cls(*(float(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.x1, self.x2, self.x3], dtype=float)

    def conj(self) -> Quaternion:
        return Quaternion(self.x0, -self.x1, -self.x2, -self.x3)

    def norm2(self) -> float:
        return self.x0**2 + self.x1**2 + self.x2**2 + self.x3**2

    def __abs__(self) -> float:
        return float(np.sqrt(self.norm2()))

    def __add__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(self.as_array() - other.as_array())

    def __neg__(self) -> Quaternion:
        return Quaternion(-self.x0, -self.x1, -self.x2, -self.x3)

    def __mul__(self, other: Quaternion | float) -> Quaternion:
        if isinstance(other, Quaternion):
            return quat_product(self, other)
        return Quaternion.from_array(self.as_array() * float(other))

    __rmul__ = __mul__

    def isclose(self, other: Quaternion, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.as_array(), other.as_array(), atol=atol, rtol=0.0))

    def __str__(self) -> str:
        return format_quaternion(self.as_array())


ONE = Quaternion(1.0)
I_UNIT = Quaternion(0.0, 1.0)
J_UNIT = Quaternion(0.0, 0.0, 1.0)
K_UNIT = Quaternion(0.0, 0.0, 0.0, 1.0)


def _hamilton(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a0, a1, a2, a3 = np.moveaxis(a, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def quat_product(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product a*b."""
    return Quaternion.from_array(_hamilton(a.as_array(), b.as_array()))


_TERM = re.compile(
    r"\s*([+-])?\s*(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)?\s*\*?\s*([ijk])?\s*"
)
_UNITS = {None: 0, "i": 1, "j": 2, "k": 3}


def parse_quaternion(text: str) -> Quaternion:
    """Parses literals such as "i", "-2", "1-0.5k" or "0.3+2j-k"."""
    components = [0.0, 0.0, 0.0, 0.0]
    pos = 0
    stripped = text.strip()
    if not stripped:
        raise InvalidInputError(f"empty quaternion literal: {text!r}")
    while pos < len(stripped):
        m = _TERM.match(stripped, pos)
        if m is None or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise InvalidInputError(f"cannot parse quaternion literal: {text!r}")
        if pos > 0 and m.group(1) is None:
            raise InvalidInputError(f"missing sign between terms in {text!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        coeff = float(m.group(2)) if m.group(2) else 1.0
        components[_UNITS[m.group(3)]] += sign * coeff
        pos = m.end()
    return Quaternion(*components)


def format_quaternion(values: Sequence[float]) -> str:
    parts = []
    for value, unit in zip(values, ("", "i", "j", "k"), strict=True):
        if value == 0.0:
            continue
        parts.append(f"{value:+.6g}{unit}")
    if not parts:
        return "0"
    text = "".join(parts)
    return text[1:] if text.startswith("+") else text


class QMatrix:
    """Dense quaternion matrix. Scalars act on vectors from the right."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray | Sequence):
        arr = np.array(data, dtype=float)
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise DimensionMismatchError(
                f"quaternion matrix data must have shape (rows, cols, 4), got {arr.shape}"
            )
        self.data = arr

    # construction

    @classmethod
    def zeros(cls, rows: int, cols: int) -> QMatrix:
        return cls(np.zeros((rows, cols, 4)))

    @classmethod
    def identity(cls, n: int) -> QMatrix:
        data = np.zeros((n, n, 4))
        data[np.arange(n), np.arange(n), 0] = 1.0
        return cls(data)

    @classmethod
    def from_real(cls, values: np.ndarray | Sequence) -> QMatrix:
        arr = np.atleast_2d(np.asarray(values, dtype=float))
        data = np.zeros(arr.shape + (4,))
        data[..., 0] = arr
        return cls(data)

    @classmethod
    def from_complex(cls, values: np.ndarray | Sequence) -> QMatrix:
        arr = np.atleast_2d(np.asarray(values, dtype=complex))
        return cls.from_complex_pair(arr, np.zeros_like(arr))

    @classmethod
    def from_complex_pair(cls, a1: np.ndarray, a2: np.ndarray) -> QMatrix:
        """Builds A = A1 + j A2 from its complex parts."""
        a1 = np.asarray(a1, dtype=complex)
        a2 = np.asarray(a2, dtype=complex)
        if a1.shape != a2.shape or a1.ndim != 2:
            raise DimensionMismatchError(f"complex parts differ in shape: {a1.shape} vs {a2.shape}")
        return cls(np.stack([a1.real, a1.imag, a2.real, -a2.imag], axis=-1))

    @classmethod
    def from_entries(cls, rows: Sequence[Sequence[Quaternion | complex | float]]) -> QMatrix:
        def component(entry: Quaternion | complex | float) -> np.ndarray:
            if isinstance(entry, Quaternion):
                return entry.as_array()
            z = complex(entry)
            return np.array([z.real, z.imag, 0.0, 0.0])

        data = [[component(entry) for entry in row] for row in rows]
        if not data:
            return cls.zeros(0, 0)
        return cls(np.array(data, dtype=float).reshape(len(rows), len(rows[0]), 4))

    @classmethod
    def scalar(cls, q: Quaternion, n: int = 1) -> QMatrix:
        data = np.zeros((n, n, 4))
        data[np.arange(n), np.arange(n)] = q.as_array()
        return cls(data)

    # shape and access

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def is_square(self) -> bool:
        return self.rows == self.cols

    def entry(self, i: int, j: int) -> Quaternion:
        return Quaternion.from_array(self.data[i, j])

    def __getitem__(self, key: tuple) -> QMatrix:
        rows, cols = key

        def as_index(k: int | slice | Sequence[int]) -> slice | list[int]:
            if isinstance(k, (int, np.integer)):
                return [int(k)]
            return k

        return QMatrix(self.data[as_index(rows)][:, as_index(cols)])

    def column(self, j: int) -> QMatrix:
        return self[:, j]

    def copy(self) -> QMatrix:
        return QMatrix(self.data.copy())

    # complex views

    def complex_pair(self) -> tuple[np.ndarray, np.ndarray]:
        a1 = self.data[..., 0] + 1j * self.data[..., 1]
        a2 = self.data[..., 2] - 1j * self.data[..., 3]
        return a1, a2

    def omega(self) -> np.ndarray:
        a1, a2 = self.complex_pair()
        return np.block([[a1, a2.conj()], [-a2, a1.conj()]])

    def to_complex_columns(self) -> np.ndarray:
        """First block column of omega: vector a - j b maps to (a; b)."""
        a1, a2 = self.complex_pair()
        return np.vstack([a1, -a2])

    # algebra

    @property
    def H(self) -> QMatrix:
        data = np.swapaxes(self.data, 0, 1).copy()
        data[..., 1:] *= -1.0
        return QMatrix(data)

    def __matmul__(self, other: QMatrix) -> QMatrix:
        if self.cols != other.rows:
            raise DimensionMismatchError(f"cannot multiply {self.shape} by {other.shape}")
        a1, a2 = self.complex_pair()
        b1, b2 = other.complex_pair()
        c1 = a1 @ b1 - a2.conj() @ b2
        c2 = a1.conj() @ b2 + a2 @ b1
        return QMatrix.from_complex_pair(c1, c2)

    def __add__(self, other: QMatrix) -> QMatrix:
        self._check_same_shape(other)
        return QMatrix(self.data + other.data)

    def __sub__(self, other: QMatrix) -> QMatrix:
        self._check_same_shape(other)
        return QMatrix(self.data - other.data)

    def __neg__(self) -> QMatrix:
        return QMatrix(-self.data)

    def __mul__(self, factor: float) -> QMatrix:
        return QMatrix(self.data * float(factor))

    __rmul__ = __mul__

    def __truediv__(self, factor: float) -> QMatrix:
        return QMatrix(self.data / float(factor))

    def right_scale(self, q: Quaternion | complex | float) -> QMatrix:
        """Entrywise product A*q with the scalar on the right."""
        q = q if isinstance(q, Quaternion) else Quaternion.from_complex(complex(q))
        return QMatrix(_hamilton(self.data, q.as_array()))

    def left_scale(self, q: Quaternion | complex | float) -> QMatrix:
        q = q if isinstance(q, Quaternion) else Quaternion.from_complex(complex(q))
        return QMatrix(_hamilton(np.broadcast_to(q.as_array(), self.data.shape), self.data))

    def power(self, p: int) -> QMatrix:
        if not self.is_square():
            raise DimensionMismatchError(f"power of non-square matrix {self.shape}")
        result = QMatrix.identity(self.rows)
        for _ in range(p):
            result = result @ self
        return result

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self.data))

    def spectral_norm(self) -> float:
        if self.data.size == 0:
            return 0.0
        return float(np.linalg.norm(self.omega(), 2))

    def allclose(self, other: QMatrix | np.ndarray, atol: float = 1e-10) -> bool:
        other_data = other.data if isinstance(other, QMatrix) else np.asarray(other, dtype=float)
        return self.data.shape == other_data.shape and bool(
            np.allclose(self.data, other_data, atol=atol, rtol=0.0)
        )

    def to_list(self) -> list:
        return self.data.tolist()

    def _check_same_shape(self, other: QMatrix) -> None:
        if self.shape != other.shape:
            raise DimensionMismatchError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QMatrix) and np.array_equal(self.data, other.data)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        rows = [
            "[" + ", ".join(format_quaternion(self.data[i, j]) for j in range(self.cols)) + "]"
            for i in range(self.rows)
        ]
        return "QMatrix([" + ", ".join(rows) + "])"


def hstack(mats: Iterable[QMatrix], rows: int | None = None) -> QMatrix:
    mats = list(mats)
    if not mats:
        return QMatrix.zeros(rows or 0, 0)
    return QMatrix(np.concatenate([m.data for m in mats], axis=1))


def vstack(mats: Iterable[QMatrix], cols: int | None = None) -> QMatrix:
    mats = list(mats)
    if not mats:
        return QMatrix.zeros(0, cols or 0)
    return QMatrix(np.concatenate([m.data for m in mats], axis=0))


def block_diag(mats: Iterable[QMatrix]) -> QMatrix:
    mats = list(mats)
    rows = sum(m.rows for m in mats)
    cols = sum(m.cols for m in mats)
    out = np.zeros((rows, cols, 4))
    r = c = 0
    for m in mats:
        out[r : r + m.rows, c : c + m.cols] = m.data
        r += m.rows
        c += m.cols
    return QMatrix(out)


def conj_transpose(A: QMatrix) -> QMatrix:
    return A.H


def omega_embed(A: QMatrix, n: int | None = None) -> np.ndarray:
    """The 2n x 2n complex matrix [[A1, conj A2], [-A2, conj A1]] of a square A."""
    if not A.is_square():
        raise DimensionMismatchError(f"omega embedding needs a square matrix, got {A.shape}")
    if n is not None and A.rows != n:
        raise DimensionMismatchError(f"expected a {n}x{n} matrix, got {A.shape}")
    return A.omega()


def omega_project(M: np.ndarray) -> QMatrix:
    """Nearest quaternion matrix (in the omega image) to a complex 2m x 2n matrix."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] % 2 or M.shape[1] % 2:
        raise DimensionMismatchError(f"expected even complex dimensions, got {M.shape}")
    m, n = M.shape[0] // 2, M.shape[1] // 2
    m11, m12 = M[:m, :n], M[:m, n:]
    m21, m22 = M[m:, :n], M[m:, n:]
    a1 = (m11 + m22.conj()) / 2.0
    a2 = (m12.conj() - m21) / 2.0
    return QMatrix.from_complex_pair(a1, a2)


def omega_extract(M: np.ndarray, tol: Tolerance) -> QMatrix:
    """Inverse of the embedding; rejects matrices off the block pattern."""
    A = omega_project(M)
    scale = max(1.0, float(np.linalg.norm(M)))
    residual = float(np.linalg.norm(np.asarray(M) - A.omega()))
    if residual > tol.residual_tol * scale:
        raise StructureError(
            f"matrix is not a quaternion embedding (pattern residual {residual:.3e})",
            witness={"residual": residual},
        )
    return A


def tau(x: np.ndarray) -> np.ndarray:
    """The antilinear structure map (a; b) -> (-conj b; conj a)."""
    n = x.shape[0] // 2
    return np.concatenate([-x[n:].conj(), x[:n].conj()], axis=0)


def complex_to_quaternion(X: np.ndarray) -> QMatrix:
    """Columns (a; b) of a complex 2n x k array become quaternion columns a - j b."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0] // 2
    return QMatrix.from_complex_pair(X[:n], -X[n:])


def quaternion_basis(Z: np.ndarray, dim: int | None = None) -> QMatrix:
    """Orthonormal quaternion basis of a tau-invariant complex subspace.

    Columns are picked greedily by largest residual against the span of the pairs
    already chosen; each pick r contributes the orthogonal pair r, tau(r).
    """
    Z = np.asarray(Z, dtype=complex)
    n2 = Z.shape[0]
    dim = Z.shape[1] // 2 if dim is None else dim
    picked = np.zeros((n2, 0), dtype=complex)
    chosen = []
    for _ in range(dim):
        R = Z - picked @ (picked.conj().T @ Z)
        norms = np.linalg.norm(R, axis=0)
        j = int(np.argmax(norms))
        r = R[:, j] / norms[j]
        r = r - picked @ (picked.conj().T @ r)
        r /= np.linalg.norm(r)
        chosen.append(r)
        picked = np.column_stack([picked, r, tau(r)])
    if not chosen:
        return QMatrix.zeros(n2 // 2, 0)
    return complex_to_quaternion(np.column_stack(chosen))


def quaternion_singular_values(A: QMatrix) -> np.ndarray:
    if A.data.size == 0:
        return np.zeros(0)
    return scipy.linalg.svd(A.omega(), compute_uv=False)[::2]


def numerical_rank(A: QMatrix, tol: Tolerance, scale: float | None = None) -> int:
    """Count of quaternion singular values above rank_tol times the scale (largest by default)."""
    sv = quaternion_singular_values(A)
    if sv.size == 0:
        return 0
    reference = sv[0] if scale is None else scale
    if reference == 0.0:
        return 0
    return int(np.sum(sv > tol.rank_tol * reference))


def _svd_split(
    A: QMatrix, tol: Tolerance, scale: float | None = None, rank: int | None = None
) -> tuple[np.ndarray, np.ndarray, int]:
    U, s, Vh = scipy.linalg.svd(A.omega(), full_matrices=True)
    if rank is None:
        sv = s[::2]
        reference = (sv[0] if sv.size else 0.0) if scale is None else scale
        rank = int(np.sum(sv > tol.rank_tol * reference)) if reference > 0 else 0
    return U, Vh.conj().T, rank


def subspace_extract(
    A: QMatrix, tol: Tolerance, scale: float | None = None
) -> tuple[QMatrix, QMatrix, int]:
    """Orthonormal bases of Ker A and Im A, and the numerical rank."""
    m, n = A.shape
    if m == 0 or n == 0:
        return QMatrix.identity(n), QMatrix.zeros(m, 0), 0
    U, V, rank = _svd_split(A, tol, scale)
    kernel = quaternion_basis(V[:, 2 * rank :], n - rank)
    image = quaternion_basis(U[:, : 2 * rank], rank)
    logger.debug("subspace_extract: shape=%s rank=%d", A.shape, rank)
    return kernel, image, rank


def null_space(
    A: QMatrix, tol: Tolerance, dim: int | None = None, scale: float | None = None
) -> QMatrix:
    """Orthonormal kernel basis; dim forces the dimension to the dim smallest directions."""
    m, n = A.shape
    if m == 0 or n == 0:
        return QMatrix.identity(n) if dim is None else QMatrix.identity(n)[:, :dim]
    rank = None if dim is None else n - dim
    U, V, rank = _svd_split(A, tol, scale, rank)
    return quaternion_basis(V[:, 2 * rank :], n - rank)


def column_space(A: QMatrix, tol: Tolerance, dim: int | None = None) -> QMatrix:
    m, n = A.shape
    if m == 0 or n == 0:
        return QMatrix.zeros(m, 0)
    U, V, rank = _svd_split(A, tol, None, dim)
    return quaternion_basis(U[:, : 2 * rank], rank)


def lstsq(A: QMatrix, B: QMatrix) -> QMatrix:
    """Minimum-norm least-squares solution of A X = B."""
    if A.rows != B.rows:
        raise DimensionMismatchError(f"lstsq shape mismatch: {A.shape} vs {B.shape}")
    if A.cols == 0 or B.cols == 0:
        return QMatrix.zeros(A.cols, B.cols)
    if A.rows == 0:
        return QMatrix.zeros(A.cols, B.cols)
    solution, *_ = scipy.linalg.lstsq(A.omega(), B.omega())
    return omega_project(solution)


def inverse(A: QMatrix) -> QMatrix:
    if not A.is_square():
        raise DimensionMismatchError(f"cannot invert non-square matrix {A.shape}")
    if A.rows == 0:
        return QMatrix.zeros(0, 0)
    try:
        return omega_project(scipy.linalg.inv(A.omega()))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SingularFormError(f"matrix is singular: {e}") from e


def intersect(U: QMatrix, V: QMatrix, tol: Tolerance) -> QMatrix:
    """Orthonormal basis of span(U) intersected with span(V)."""
    if U.cols == 0 or V.cols == 0:
        return QMatrix.zeros(U.rows, 0)
    coeffs = null_space(hstack([U, -V]), tol)
    if coeffs.cols == 0:
        return QMatrix.zeros(U.rows, 0)
    return column_space(U @ coeffs[: U.cols, :], tol)


def hermitian_eigh(G: QMatrix, tol: Tolerance) -> tuple[np.ndarray, QMatrix]:
    """Eigen-decomposition of a Hermitian quaternion matrix.

    Returns real eigenvalues in ascending order and a quaternion unitary matrix whose
    columns are the matching eigenvectors.
    """
    n = G.rows
    if n == 0:
        return np.zeros(0), QMatrix.zeros(0, 0)
    omega_g = G.omega()
    w, V = scipy.linalg.eigh(omega_g)
    gap = tol.rank_tol * max(1.0, float(np.max(np.abs(w))))
    groups: list[list[int]] = [[0]]
    for idx in range(1, len(w)):
        if w[idx] - w[idx - 1] > gap and len(groups[-1]) % 2 == 0:
            groups.append([idx])
        else:
            groups[-1].append(idx)
    vectors = []
    values = []
    for group in groups:
        basis = quaternion_basis(V[:, group])
        for j in range(basis.cols):
            c = basis.column(j).to_complex_columns()[:, 0]
            values.append(float(np.real(c.conj() @ (omega_g @ c))))
            vectors.append(basis.column(j))
    order = np.argsort(values, kind="stable")
    return np.asarray(values)[order], hstack([vectors[i] for i in order], rows=n)


@dataclass(frozen=True)
class EigenCluster:
    center: complex
    members: tuple[int, ...]
    values: tuple[complex, ...] = ()

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_real(self) -> bool:
        return self.center.imag == 0.0


MergeTest = Callable[[tuple[int, ...], complex], bool]


def cluster_eigenvalues(
    values: Sequence[complex], radius: float, merge_test: MergeTest | None = None
) -> list[EigenCluster]:
    """Groups eigenvalues of an embedding into clusters.

    Single linkage at radius decides which values are equal. Wider groups of the
    linkage tree are kept only when merge_test(members, center) accepts them, and
    the tree is searched from the top, so each value lands in its largest accepted
    group. A radius group wider than 2 * radius is a chain of near values; it needs
    merge_test too and raises ClusterAmbiguityError otherwise. Centers are group
    means, snapped to the real axis within radius.
    """
    vals = np.asarray(values, dtype=complex)
    count = len(vals)
    if count == 0:
        return []
    members: list[tuple[int, ...]] = [(i,) for i in range(count)]
    height = [0.0] * count
    children: list[tuple[int, int]] = [(-1, -1)] * count
    root_of = list(range(count))
    top = list(range(count))  # union-find root -> current tree node

    def find(i: int) -> int:
        while root_of[i] != i:
            root_of[i] = root_of[root_of[i]]
            i = root_of[i]
        return i

    edges = sorted(
        (abs(vals[i] - vals[j]), i, j) for i in range(count) for j in range(i + 1, count)
    )
    for d, i, j in edges:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        a, b = top[ri], top[rj]
        members.append(members[a] + members[b])
        height.append(float(d))
        children.append((a, b))
        root_of[rj] = ri
        top[ri] = len(members) - 1

    chosen: list[int] = []
    pending = [len(members) - 1]
    while pending:
        node = pending.pop()
        group = members[node]
        group_vals = vals[list(group)]
        center = complex(np.mean(group_vals))
        if height[node] <= radius:
            diameter = float(np.max(np.abs(group_vals[:, None] - group_vals[None, :])))
            if diameter > 2.0 * radius and not (merge_test and merge_test(group, center)):
                raise ClusterAmbiguityError(
                    "eigenvalues chain within the cluster radius but do not form one cluster",
                    witness={"center": [center.real, center.imag], "diameter": diameter},
                )
            chosen.append(node)
        elif merge_test is not None and merge_test(group, center):
            chosen.append(node)
        else:
            pending.extend(children[node])

    clusters = []
    for node in chosen:
        group = tuple(sorted(members[node]))
        center = complex(np.mean(vals[list(group)]))
        if abs(center.imag) <= radius:
            center = complex(center.real, 0.0)
        clusters.append(EigenCluster(center, group, tuple(complex(v) for v in vals[list(group)])))
    clusters.sort(key=lambda c: (c.center.real, c.center.imag))
    logger.debug(
        "cluster_eigenvalues: %d values -> %s",
        count,
        [(c.center, c.size) for c in clusters],
    )
    return clusters


def kernel_ladder(N: np.ndarray, scale: float, rank_tol: float) -> int | None:
    """Length of the ladder Ker N ⊂ Ker N^2 ⊂ ... filling the space, None if N is not nilpotent.

    Ranks are counted against rank_tol * scale.
    """
    d = N.shape[0]
    K = np.zeros((d, 0), dtype=complex)
    steps = 0
    while K.shape[1] < d:
        complement = scipy.linalg.null_space(K.conj().T) if K.shape[1] else np.eye(d)
        _, s, Vh = scipy.linalg.svd(complement.conj().T @ N, full_matrices=True)
        rank = int(np.sum(s > rank_tol * scale))
        K_next = Vh[rank:].conj().T
        steps += 1
        if K_next.shape[1] <= K.shape[1]:
            return None
        K = K_next
    return steps


def _ordered_schur(omega_a: np.ndarray, values: np.ndarray, chosen: set[int]) -> np.ndarray:
    """Orthonormal basis of the invariant subspace for the chosen Schur eigenvalues."""

    def select(x: complex) -> bool:
        return int(np.argmin(np.abs(values - x))) in chosen

    _, Z, sdim = scipy.linalg.schur(omega_a, output="complex", sort=select)
    if sdim != len(chosen):
        raise ClusterAmbiguityError(
            f"ordered Schur form selected {sdim} eigenvalues for a cluster of {len(chosen)}",
            witness={"selected": int(sdim), "size": len(chosen)},
        )
    return Z[:, :sdim]


def cluster_subspace(
    omega_a: np.ndarray, clusters: Sequence[EigenCluster], target: int
) -> np.ndarray:
    """Orthonormal basis of the root subspace of clusters[target] in omega(A)."""
    values = np.zeros(sum(c.size for c in clusters), dtype=complex)
    for c in clusters:
        values[list(c.members)] = c.values
    return _ordered_schur(omega_a, values, set(clusters[target].members))


def quaternion_clusters(A: QMatrix, tol: Tolerance) -> list[EigenCluster]:
    """Clusters of the embedded spectrum; real cluster sizes are checked to be even.

    Values further apart than cluster_radius share a cluster only when the shifted
    operator on their invariant subspace is numerically nilpotent, as for the
    eps**(1/k) spread of a perturbed Jordan block, and their spread stays below
    ||A|| * rank_tol**(1/m) for m members.
    """
    if not A.is_square():
        raise DimensionMismatchError(f"eigenvalues need a square matrix, got {A.shape}")
    omega_a = A.omega()
    if omega_a.shape[0] == 0:
        return []
    T, _ = scipy.linalg.schur(omega_a, output="complex")
    values = np.diag(T).copy()
    scale = float(np.linalg.norm(omega_a, 2))

    def nilpotent_shift(group: tuple[int, ...], center: complex) -> bool:
        m = len(group)
        spread = float(np.max(np.abs(values[list(group)] - center)))
        if spread > scale * tol.rank_tol ** (1.0 / m):
            return False
        try:
            E = _ordered_schur(omega_a, values, set(group))
        except ClusterAmbiguityError:
            return False
        N = E.conj().T @ omega_a @ E - center * np.eye(m)
        reference = max(float(np.linalg.norm(N, 2)), scale)
        return kernel_ladder(N, reference, tol.rank_tol) is not None

    clusters = cluster_eigenvalues(values, tol.cluster_radius, nilpotent_shift)
    for c in clusters:
        if c.is_real and c.size % 2:
            raise ClusterAmbiguityError(
                f"real eigenvalue cluster near {c.center.real:.6g} has odd size {c.size}",
                witness={"center": c.center.real, "size": c.size},
            )
    upper = sum(c.size for c in clusters if c.center.imag > 0)
    lower = sum(c.size for c in clusters if c.center.imag < 0)
    if upper != lower:
        raise ClusterAmbiguityError(
            "eigenvalue clusters are not closed under conjugation",
            witness={"upper": upper, "lower": lower},
        )
    return clusters


def right_eigenvalues(A: QMatrix, tol: Tolerance) -> list[complex]:
    """The n standard right eigenvalues, Im >= 0 representatives, with multiplicity."""
    result: list[complex] = []
    for c in quaternion_clusters(A, tol):
        if c.is_real:
            result.extend([c.center] * (c.size // 2))
        elif c.center.imag > 0:
            result.extend([c.center] * c.size)
    result.sort(key=lambda z: (z.real, z.imag))
    return result
