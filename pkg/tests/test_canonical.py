import numpy as np
import pytest

from quatpolar.canonical import (
    CanonicalBlock,
    CanonicalForm,
    assemble,
    blocks_equal,
    canonical_form,
    doubled_blocks,
    form_signature,
    forms_equal,
    nilpotency_index,
    normalize_chain,
    sorted_blocks,
)
from quatpolar.errors import InvalidInputError, NotSelfadjointError
from quatpolar.gen import gen_selfadjoint_pair, parse_block_spec, random_blocks
from quatpolar.indefinite import HForm, jordan_block, sip
from quatpolar.quaternion import I_UNIT, QMatrix

RECOVERY_SPECS = [
    "0:2:+,1:1:-",
    "1+2j:1,-1:2:-",
    "2:1:+,2:1:-,3:3:+",
    "0:1:+,0:1:-,1j:1",
]
# seeds per block list
RECOVERY_SEEDS = 4
# random block lists in the recovery suite
RANDOM_RECOVERIES = 200


def test_block_validation():
    with pytest.raises(InvalidInputError):
        CanonicalBlock(0, 0, 1)
    with pytest.raises(InvalidInputError):
        CanonicalBlock(1, 2)
    with pytest.raises(InvalidInputError):
        CanonicalBlock(1j, 2, 1)
    with pytest.raises(InvalidInputError):
        CanonicalBlock(-1j, 1)
    assert CanonicalBlock(1j, 2).dim == 4
    assert str(CanonicalBlock(0, 2, -1)) == "(0, 2, -1)"


def test_assemble_orders_real_blocks_first():
    J, Hc = assemble([CanonicalBlock(1j, 1), CanonicalBlock(0, 2, 1)])
    assert J.shape == (4, 4)
    assert J[:2, :2] == jordan_block(0, 2)
    assert Hc[:2, :2] == sip(2)
    assert J.entry(2, 2) == I_UNIT
    assert J.entry(3, 3) == -I_UNIT
    assert Hc[2:, 2:] == sip(2)

    _, Hc = assemble([CanonicalBlock(5, 1, -1)])
    assert Hc == QMatrix.from_real([[-1.0]])


def test_form_signature_and_doubling():
    assert form_signature([CanonicalBlock(0, 2, 1)]) == (1, 1)
    assert form_signature([CanonicalBlock(0, 3, -1)]) == (1, 2)
    assert form_signature([CanonicalBlock(0, 3, 1), CanonicalBlock(1j, 2)]) == (4, 3)
    assert len(doubled_blocks([CanonicalBlock(1j, 1)])) == 4
    assert doubled_blocks([CanonicalBlock(2, 1, -1)]) == [(2, 1, -1), (2, 1, -1)]


def test_blocks_equal(tol):
    a = [CanonicalBlock(0, 2, 1), CanonicalBlock(1, 1, -1)]
    assert blocks_equal(a, list(reversed(a)), tol)
    assert not blocks_equal(a, [CanonicalBlock(0, 2, -1), CanonicalBlock(1, 1, -1)], tol)
    assert not blocks_equal(a, a[:1], tol)
    assert blocks_equal([CanonicalBlock(1, 1, 1)], [CanonicalBlock(1 + 1e-9, 1, 1)], tol)


def test_nilpotent_jordan_block_under_sip(q2, tol):
    form = canonical_form(jordan_block(0, 2), q2, tol)
    assert form.blocks == [CanonicalBlock(0, 2, 1)]
    assert max(form.residuals.values()) <= tol.residual_tol


def test_scalar_matrix_splits_into_one_by_one_blocks(tol, real):
    h = HForm.from_matrix(QMatrix.identity(2), tol)
    form = canonical_form(real([[2.0, 0.0], [0.0, 2.0]]), h, tol)
    assert form.blocks == [CanonicalBlock(2, 1, 1), CanonicalBlock(2, 1, 1)]


def test_nonreal_pair(q2, tol):
    A = QMatrix.from_entries([[I_UNIT, 0], [0, -I_UNIT]])
    form = canonical_form(A, q2, tol)
    assert form.blocks == [CanonicalBlock(1j, 1)]
    J, Hc = form.assembled()
    assert (A @ form.S).allclose(form.S @ J, atol=1e-9)
    assert (form.S.H @ q2.H @ form.S).allclose(Hc, atol=1e-9)


def test_rejects_non_selfadjoint(tol):
    h = HForm.from_matrix(QMatrix.identity(2), tol)
    with pytest.raises(NotSelfadjointError):
        canonical_form(jordan_block(0, 2), h, tol)


def test_nilpotency_index(tol):
    N = jordan_block(0, 3)
    assert nilpotency_index(N, QMatrix.identity(3), 1.0, tol.rank_tol) == 3
    assert nilpotency_index(N, QMatrix.zeros(3, 0), 1.0, tol.rank_tol) == 0


def test_normalize_chain(q2):
    N = jordan_block(0, 2)
    x = QMatrix.from_real([[0.3], [2.0]])
    C, eta = normalize_chain(N, q2.H, x, 2)
    assert eta == 1
    assert (C.H @ q2.H @ C).allclose(sip(2), atol=1e-12)
    assert (N @ C[:, [1]]).allclose(C[:, [0]], atol=1e-12)


@pytest.mark.parametrize("block_spec", RECOVERY_SPECS)
def test_recovers_generated_blocks(block_spec, tol):
    blocks = parse_block_spec(block_spec)
    expected = CanonicalForm(sorted_blocks(blocks), QMatrix.identity(sum(b.dim for b in blocks)))
    for seed in range(RECOVERY_SEEDS):
        A, h, _ = gen_selfadjoint_pair(blocks, seed, tol=tol)
        form = canonical_form(A, h, tol)
        assert forms_equal(form, expected, tol), (seed, [str(b) for b in form.blocks])
        assert max(form.residuals.values()) <= tol.residual_tol


def test_random_block_lists_are_recovered(tol):
    for seed in range(RANDOM_RECOVERIES):
        blocks = random_blocks(seed, 12)
        A, h, _ = gen_selfadjoint_pair(blocks, seed, tol=tol)
        form = canonical_form(A, h, tol)
        expected = CanonicalForm(sorted_blocks(blocks), QMatrix.identity(A.rows))
        assert forms_equal(form, expected, tol), (seed, [str(b) for b in blocks])
        assert max(form.residuals.values()) <= tol.residual_tol, seed
        assert form_signature(form.blocks) == h.signature, seed


@pytest.mark.parametrize(
    "diag",
    [[0.0, 3e-4], [0.0, 0.0, 0.01, 0.01], [0.0] * 5 + [0.2] * 5],
)
def test_nearby_eigenvalues_give_separate_blocks(diag, tol, real):
    h = HForm.from_matrix(QMatrix.identity(len(diag)), tol)
    form = canonical_form(real(np.diag(diag)), h, tol)
    assert blocks_equal(form.blocks, [CanonicalBlock(lam, 1, 1) for lam in diag], tol)
    assert max(form.residuals.values()) <= tol.residual_tol


def test_doubled_blocks_match_the_embedded_jordan_structure(tol):
    for seed in range(50):
        blocks = random_blocks(seed, 8, spectrum=(0.0, 1.0, -2.0, 2j))
        A, _, _ = gen_selfadjoint_pair(blocks, seed, cond_cap=10.0, tol=tol)
        omega_a = A.omega()
        eye = np.eye(omega_a.shape[0])
        eigenvalues = np.linalg.eigvals(omega_a)
        doubled = doubled_blocks(blocks)
        for lam in {entry[0] for entry in doubled}:
            sizes = [size for mu, size, _ in doubled if mu == lam]
            assert np.sum(np.abs(eigenvalues - lam) < 1e-3) == sum(sizes), (seed, lam)
            for p in range(1, max(sizes) + 1):
                M = np.linalg.matrix_power(omega_a - lam * eye, p)
                rank = np.linalg.matrix_rank(M, tol=1e-11 * np.linalg.norm(M, 2))
                assert rank == len(eye) - sum(min(size, p) for size in sizes), (seed, lam, p)


@pytest.mark.parametrize(
    "rows,diag",
    [
        ([[0.0, 1.0], [0.0, 0.0]], None),
        ([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0]),
        ([[2.0, 1.0], [1.0, 3.0]], [1.0, -1.0]),
    ],
)
def test_real_input_gives_real_transform(rows, diag, tol, real):
    H = sip(2) if diag is None else real(np.diag(diag))
    h = HForm.from_matrix(H, tol)
    A = h.H_inv @ real(rows) if diag is not None else real(rows)
    form = canonical_form(A, h, tol)
    assert np.allclose(form.S.data[..., 1:], 0.0, atol=1e-12)
    assert max(form.residuals.values()) <= tol.residual_tol
