import pytest

from quatpolar.errors import MatrixFileError
from quatpolar.indefinite import sip
from quatpolar.matrixfile import (
    MatrixDocument,
    dump_matrix_document,
    parse_matrix_document,
    read_matrix_file,
    write_matrix_file,
)
from quatpolar.quaternion import I_UNIT, QMatrix


def test_document_written_and_read_back(tmp_path, rng):
    X = QMatrix(rng.standard_normal((3, 3, 4)))
    doc = MatrixDocument(3, {"X": X, "H": sip(3)})
    path = tmp_path / "doc.yaml"
    write_matrix_file(path, doc)
    loaded = read_matrix_file(path)
    assert loaded.n == 3
    assert loaded.require("X") == X
    assert "H" in loaded and "U" not in loaded
    assert loaded.get("U") is None


def test_parse_inline_document(tol):
    text = """
n: 1
m: 0
sections:
  H: [[[1, 0, 0, 0]]]
  P3: [[[0, 1, 0, 0]]]
"""
    doc = parse_matrix_document(text)
    assert doc.m == 0
    assert doc.require("P3").entry(0, 0) == I_UNIT
    assert doc.form("H", tol).signature == (1, 0)
    assert "m: 0" in dump_matrix_document(doc)


def test_rectangular_sections():
    V = QMatrix.identity(3)[:, [0]]
    doc = MatrixDocument(3, {"V": V, "W": V})
    assert parse_matrix_document(dump_matrix_document(doc)).require("V").shape == (3, 1)


@pytest.mark.parametrize(
    "text",
    [
        "n: 1\nsections: {X: []}\n",
        "n: 1\nsections: {X: [[[1, 0, 0, 0]], [[1, 0, 0, 0], [0, 0, 0, 0]]]}\n",
        "n: 0\nsections: {}\n",
        "- just a list\n",
    ],
)
def test_malformed_documents(text):
    with pytest.raises(MatrixFileError):
        parse_matrix_document(text)


def test_missing_file(tmp_path):
    with pytest.raises(MatrixFileError, match="cannot read"):
        read_matrix_file(tmp_path / "absent.yaml")


def test_require_names_available_sections():
    doc = MatrixDocument(1, {"H": QMatrix.identity(1)})
    with pytest.raises(MatrixFileError, match="found: H"):
        doc.require("X")
