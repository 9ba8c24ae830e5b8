import numpy as np
import pytest

from quatpolar.config import Tolerance
from quatpolar.indefinite import HForm, sip
from quatpolar.quaternion import QMatrix


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    # Point config discovery at an empty temporary location so a developer's
    # quatpolar.yaml never leaks into the suite.
    config_path = tmp_path / "quatpolar.yaml"
    monkeypatch.setenv("QUATPOLAR_CONFIG", str(config_path))
    yield config_path


@pytest.fixture
def tol():
    return Tolerance()


@pytest.fixture
def real():
    """Builds a QMatrix from nested lists of real or complex numbers."""

    def build(rows):
        arr = np.asarray(rows)
        if np.iscomplexobj(arr):
            return QMatrix.from_complex(arr)
        return QMatrix.from_real(arr)

    return build


@pytest.fixture
def q2(tol):
    return HForm.from_matrix(sip(2), tol)


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)
