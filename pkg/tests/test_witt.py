import numpy as np
import pytest

from quatpolar.errors import (
    GramMismatchError,
    InvalidParamsError,
    KernelMismatchError,
    NotIsometryError,
    SignatureMismatchError,
)
from quatpolar.gen import gen_witt_instance, gen_witt_params, random_qmatrix
from quatpolar.indefinite import HForm, is_h_unitary, unitarity_residual
from quatpolar.quaternion import I_UNIT, J_UNIT, ONE, QMatrix
from quatpolar.witt import (
    GramProfile,
    WittParams,
    build_witt_basis,
    extend_isometry,
    factor_isometry,
    gram_profile,
    witt_from_params,
    witt_params_from_extension,
)

WITT_PROFILES = [
    ((0, 1, 1), 4),
    ((1, 0, 0), 3),
    ((1, 1, 1), 5),
    ((2, 0, 0), 5),
    ((0, 0, 0), 3),
]
# seeds per profile
WITT_SEEDS = 5
# random instances in the extension and round-trip suites
WITT_RANDOM = 200


def e(n, *idx):
    return QMatrix.identity(n)[:, list(idx)]


def random_profile(rng):
    n = int(rng.integers(1, 11))
    m0 = int(rng.integers(0, n // 2 + 1))
    rest = n - 2 * m0
    m_plus = int(rng.integers(0, rest + 1))
    m_minus = int(rng.integers(0, rest - m_plus + 1))
    return (m0, m_plus, m_minus), n


@pytest.fixture
def plain(tol):
    return HForm.from_matrix(QMatrix.identity(2), tol)


def test_factor_isometry_identity(plain, tol, rng):
    X = random_qmatrix(rng, 2, 2)
    U0 = factor_isometry(X, X, plain, plain, tol)
    assert U0.dim == 2
    assert U0.apply(X).allclose(X, atol=1e-9)
    assert U0.matrix().allclose(QMatrix.identity(2), atol=1e-9)


def test_factor_isometry_rank_deficient(q2, tol):
    X = QMatrix.from_entries([[ONE, 0], [0, 0]])
    Y = QMatrix.from_entries([[J_UNIT, 0], [0, 0]])
    U0 = factor_isometry(X, Y, q2, q2, tol)
    assert U0.dim == 1
    assert U0.apply(X).allclose(Y, atol=1e-9)


def test_factor_isometry_gram_mismatch(plain, tol):
    with pytest.raises(GramMismatchError):
        factor_isometry(QMatrix.identity(2), QMatrix.identity(2) * 2.0, plain, plain, tol)


def test_factor_isometry_kernel_mismatch(q2, tol):
    # both Gram matrices vanish, but Ker X = span e2 and Ker Y = span e1
    X = QMatrix.from_real([[1.0, 0.0], [0.0, 0.0]])
    Y = QMatrix.from_real([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(KernelMismatchError) as excinfo:
        factor_isometry(X, Y, q2, q2, tol)
    assert excinfo.value.witness["kernel_common"] == 0


@pytest.mark.parametrize(
    "diag,columns,expected",
    [
        (None, (0, 1), (0, 1, 1)),
        (None, (0,), (1, 0, 0)),
        ([1.0, -1.0, -1.0], (0, 1, 2), (0, 1, 2)),
        ([1.0, 1.0, -1.0], (0, 2), (0, 1, 1)),
    ],
)
def test_gram_profile(diag, columns, expected, tol, q2):
    h = q2 if diag is None else HForm.from_matrix(QMatrix.from_real(np.diag(diag)), tol)
    profile, basis = gram_profile(e(h.n, *columns), h, tol)
    assert profile == GramProfile(*expected)
    signs = np.diag([0.0] * expected[0] + [1.0] * expected[1] + [-1.0] * expected[2])
    assert h.gram(basis).allclose(QMatrix.from_real(signs), atol=1e-9)


def test_extend_isometry_on_isotropic_line(q2, tol):
    U = extend_isometry(e(2, 0), e(2, 0), q2, q2, tol)
    assert U.allclose(QMatrix.identity(2), atol=1e-9)


def test_extend_isometry_signature_mismatch(plain, tol):
    h1 = HForm.from_matrix(QMatrix.from_real(np.diag([1.0, -1.0])), tol)
    with pytest.raises(SignatureMismatchError):
        extend_isometry(QMatrix.zeros(2, 0), QMatrix.zeros(2, 0), h1, plain, tol)


def test_extend_isometry_requires_isometry(plain, tol):
    with pytest.raises(NotIsometryError):
        extend_isometry(e(2, 0), e(2, 0) * 2.0, plain, plain, tol)


def test_witt_params_shear(q2, tol):
    V1 = e(2, 0)
    basis = build_witt_basis(V1, V1, q2, q2, tol)
    assert (basis.profile.m0, basis.r) == (1, 0)
    params = WittParams(QMatrix.zeros(0, 0), QMatrix.zeros(0, 1), QMatrix.from_entries([[I_UNIT]]))
    U = witt_from_params(V1, V1, basis, params, q2, q2, tol)
    assert U.allclose(QMatrix.from_entries([[ONE, I_UNIT], [0, ONE]]), atol=1e-9)
    assert is_h_unitary(U, q2, tol)

    recovered = witt_params_from_extension(U, basis, tol)
    assert recovered.P3.allclose(params.P3, atol=1e-9)


def test_witt_params_validation(q2, plain, tol):
    V1 = e(2, 0)
    basis = build_witt_basis(V1, V1, q2, q2, tol)
    with pytest.raises(InvalidParamsError):
        WittParams(QMatrix.zeros(0, 0), QMatrix.zeros(0, 1), QMatrix.from_entries([[ONE]])).validate(
            basis, tol
        )
    with pytest.raises(InvalidParamsError):
        WittParams(QMatrix.zeros(0, 0), QMatrix.zeros(0, 1), QMatrix.zeros(2, 2)).validate(basis, tol)

    basis = build_witt_basis(V1, V1, plain, plain, tol)
    assert basis.r == 1
    with pytest.raises(InvalidParamsError):
        WittParams(QMatrix.identity(1) * 2.0, QMatrix.zeros(1, 0), QMatrix.zeros(0, 0)).validate(
            basis, tol
        )


def test_witt_params_rotation(plain, tol):
    V1 = e(2, 0)
    basis = build_witt_basis(V1, V1, plain, plain, tol)
    params = WittParams(QMatrix.from_entries([[J_UNIT]]), QMatrix.zeros(1, 0), QMatrix.zeros(0, 0))
    U = witt_from_params(V1, V1, basis, params, plain, plain, tol)
    assert (U @ V1).allclose(V1, atol=1e-9)
    assert abs(U.entry(1, 1)) == pytest.approx(1.0)
    assert U.entry(1, 1).x0 == pytest.approx(0.0, abs=1e-9)
    assert witt_params_from_extension(U, basis, tol).P1.allclose(params.P1, atol=1e-9)


def test_non_extension_is_rejected(plain, tol):
    V1 = e(2, 0)
    basis = build_witt_basis(V1, V1, plain, plain, tol)
    with pytest.raises(InvalidParamsError):
        witt_params_from_extension(QMatrix.from_real([[0.0, 1.0], [1.0, 0.0]]), basis, tol)


@pytest.mark.parametrize("profile,n", WITT_PROFILES)
def test_generated_extensions(profile, n, tol):
    for seed in range(WITT_SEEDS):
        V1, images, h1, h2 = gen_witt_instance(profile, n, seed, tol)
        measured, _ = gram_profile(V1, h1, tol)
        assert measured == GramProfile(*profile)
        U = extend_isometry(V1, images, h1, h2, tol)
        assert unitarity_residual(U, h1, h2) <= tol.residual_tol
        assert (U @ V1).allclose(images, atol=1e-6 * max(1.0, images.norm()))


@pytest.mark.parametrize("profile,n", [((1, 1, 0), 4), ((1, 0, 1), 5), ((2, 0, 0), 5)])
def test_params_round_trip(profile, n, tol, rng):
    V1, images, h1, h2 = gen_witt_instance(profile, n, rng, tol)
    basis = build_witt_basis(V1, images, h1, h2, tol)
    params = gen_witt_params(basis, rng, tol)
    U = witt_from_params(V1, images, basis, params, h1, h2, tol)
    recovered = witt_params_from_extension(U, basis, tol)
    for name in ("P1", "P2", "P3"):
        assert getattr(recovered, name).allclose(getattr(params, name), atol=1e-6), name


def test_random_profiles_extend(tol, rng):
    for _ in range(WITT_RANDOM):
        profile, n = random_profile(rng)
        V1, images, h1, h2 = gen_witt_instance(profile, n, rng, tol)
        U = extend_isometry(V1, images, h1, h2, tol)
        assert unitarity_residual(U, h1, h2) <= tol.residual_tol, profile
        assert (U @ V1).allclose(images, atol=1e-6 * max(1.0, images.norm())), profile


def test_random_params_round_trip(tol, rng):
    for _ in range(WITT_RANDOM):
        profile, n = random_profile(rng)
        V1, images, h1, h2 = gen_witt_instance(profile, n, rng, tol)
        basis = build_witt_basis(V1, images, h1, h2, tol)
        params = gen_witt_params(basis, rng, tol)
        U = witt_from_params(V1, images, basis, params, h1, h2, tol)
        assert unitarity_residual(U, h1, h2) <= tol.residual_tol, profile
        recovered = witt_params_from_extension(U, basis, tol)
        for name in ("P1", "P2", "P3"):
            expected = getattr(params, name)
            assert getattr(recovered, name).allclose(expected, atol=1e-6), (profile, name)
