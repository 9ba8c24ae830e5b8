import numpy as np
import pytest

from quatpolar.canonical import CanonicalBlock, assemble
from quatpolar.errors import InvalidInputError, SqrtExistenceError
from quatpolar.gen import (
    gen_h_unitary,
    gen_polar_instance,
    gen_selfadjoint_pair,
    gen_witt_instance,
    parse_block_spec,
    random_blocks,
    random_invertible,
)
from quatpolar.indefinite import is_h_unitary
from quatpolar.quaternion import QMatrix, quaternion_singular_values


def test_parse_block_spec():
    assert parse_block_spec("0:2:+,1+2j:2") == [CanonicalBlock(0, 2, 1), CanonicalBlock(1 + 2j, 2)]
    assert parse_block_spec(" -1 : 1 : -1 ") == [CanonicalBlock(-1, 1, -1)]


@pytest.mark.parametrize("block_spec", ["", "0:2:x", "abc:2:+", "0:2", "1j:1:+", "0:0:+"])
def test_parse_block_spec_rejects(block_spec):
    with pytest.raises(InvalidInputError):
        parse_block_spec(block_spec)


def test_pair_is_deterministic_in_the_seed(tol):
    blocks = parse_block_spec("0:2:+,1+2j:1")
    A1, h1, S1 = gen_selfadjoint_pair(blocks, 7, tol=tol)
    A2, h2, S2 = gen_selfadjoint_pair(blocks, 7, tol=tol)
    assert A1 == A2 and h1.H == h2.H and S1 == S2
    A3, _, _ = gen_selfadjoint_pair(blocks, 8, tol=tol)
    assert not A3.allclose(A1)


def test_identity_mode_returns_canonical_pair(tol):
    blocks = parse_block_spec("1:2:-,1j:1")
    A, h, S = gen_selfadjoint_pair(blocks, 0, tol=tol, identity=True)
    J, Hc = assemble(blocks)
    assert S == QMatrix.identity(4)
    assert A.allclose(J)
    assert h.H.allclose(Hc)


def test_random_invertible_respects_condition_cap(rng, tol):
    S = random_invertible(rng, 5, 10.0, tol)
    s = quaternion_singular_values(S)
    assert s[0] / s[-1] <= 10.0 * (1 + 1e-8)


def test_h_unitary(q2, tol):
    assert gen_h_unitary(q2, 3, tol, scale=0.0).allclose(QMatrix.identity(2))
    U = gen_h_unitary(q2, 3, tol)
    assert is_h_unitary(U, q2, tol)
    assert not U.allclose(QMatrix.identity(2))


def test_polar_instance_requires_a_root(tol):
    with pytest.raises(SqrtExistenceError):
        gen_polar_instance(parse_block_spec("0:2:+"), 0, tol)
    with pytest.raises(SqrtExistenceError):
        gen_polar_instance(parse_block_spec("-1:1:+"), 0, tol)


def test_polar_instance(tol):
    X, h, ground = gen_polar_instance(parse_block_spec("2:1:+,-1:1:+,-1:1:-"), 11, tol)
    assert X.allclose(ground.U @ ground.A, atol=1e-8 * max(1.0, X.norm()))
    assert ground.residuals.ok


def test_witt_instance_profile_must_fit(tol):
    with pytest.raises(InvalidInputError):
        gen_witt_instance((2, 1, 0), 4, 0, tol)
    V1, images, h1, h2 = gen_witt_instance((1, 1, 0), 4, np.random.default_rng(5), tol)
    assert V1.shape == images.shape == (4, 2)
    assert h1.signature == h2.signature


def test_random_blocks():
    for seed in range(50):
        blocks = random_blocks(seed, 6)
        assert 1 <= sum(b.dim for b in blocks) <= 6
        assert all(b.lam in (0.0, 0.25, 0.5, 0.5j) and b.size <= 3 for b in blocks)
    assert random_blocks(3, 6) == random_blocks(3, 6)
    assert all(b.size == 1 for b in random_blocks(0, 5, spectrum=(-2j,), max_size=1))
    assert random_blocks(0, 5, spectrum=(-2j,), max_size=1)[0].lam == 2j
    with pytest.raises(InvalidInputError):
        random_blocks(0, 1, spectrum=(1j,))
