"""YAML matrix documents: named quaternion matrices as nested [x0, x1, x2, x3] lists."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from quatpolar.config import Tolerance, load_schema
from quatpolar.errors import MatrixFileError
from quatpolar.indefinite import HForm
from quatpolar.quaternion import QMatrix

SECTION_NAMES = ("X", "Y", "H", "H2", "U", "A", "B", "V", "W", "P1", "P2", "P3")


@dataclass
class MatrixDocument:
    n: int
    sections: dict[str, QMatrix] = field(default_factory=dict)
    m: int | None = None

    def __contains__(self, name: str) -> bool:
        return name in self.sections

    def get(self, name: str) -> QMatrix | None:
        return self.sections.get(name)

    def require(self, name: str) -> QMatrix:
        if name not in self.sections:
            raise MatrixFileError(
                f"matrix file has no section {name!r} (found: {', '.join(sorted(self.sections)) or 'none'})"
            )
        return self.sections[name]

    def form(self, name: str, tol: Tolerance) -> HForm:
        return HForm.from_matrix(self.require(name), tol)

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"n": self.n}
        if self.m is not None:
            doc["m"] = self.m
        doc["sections"] = {name: M.to_list() for name, M in self.sections.items()}
        return doc


def _to_matrix(name: str, rows: list) -> QMatrix:
    if not rows:
        raise MatrixFileError(f"section {name} is empty")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise MatrixFileError(f"section {name} has rows of different lengths {sorted(widths)}")
    return QMatrix(np.asarray(rows, dtype=float).reshape(len(rows), widths.pop(), 4))


def parse_matrix_document(text: str) -> MatrixDocument:
    try:
        loaded = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise MatrixFileError(f"matrix file is not valid YAML: {e}") from e
    try:
        jsonschema.validate(instance=loaded, schema=load_schema()["properties"]["MatrixFile"])
    except jsonschema.ValidationError as e:
        raise MatrixFileError(f"invalid matrix file: {e.message}") from e
    sections = {name: _to_matrix(name, rows) for name, rows in loaded["sections"].items()}
    return MatrixDocument(loaded["n"], sections, loaded.get("m"))


def read_matrix_file(path: str | Path) -> MatrixDocument:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise MatrixFileError(f"cannot read {path}: {e}") from e
    return parse_matrix_document(text)


def dump_matrix_document(doc: MatrixDocument) -> str:
    """yaml serializes floats by repr, which round-trips exactly."""
    return yaml.safe_dump(doc.to_dict(), sort_keys=False, default_flow_style=None)


def write_matrix_file(path: str | Path, doc: MatrixDocument) -> None:
    Path(path).write_text(dump_matrix_document(doc))
