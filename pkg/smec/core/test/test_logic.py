##
#    Copyright (c) 2021 The smec authors
#
#    This file is part of smec - stochastic minimum-energy control.
#
#    Smec is free software: you can redistribute it and/or modify it under the
#    terms of the GNU Affero General Public License as published by the Free
#    Software Foundation, either version 3 of the License, or (at your option)
#    any later version.
#
#    Smec is distributed in the hope that it will be useful, but WITHOUT ANY
#    WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS
#    FOR A PARTICULAR PURPOSE. See the GNU Affero General Public License for
#    more details.
#
#    You should have received a copy of the GNU Affero General Public License
#    along with smec. If not, see <http://www.gnu.org/licenses/>.
##

"""Test the logic of problem documents and their validation."""

import json

import numpy as np
import pytest

from ...test.common import flagship_document
from ..logic import (check_weight, config_digest, dump_problem, load_problem,
                     load_weight, validate)
from ..models import MatrixPath, ProblemLoadError, Severity


def test_load_flagship() -> None:
    """Load a document with constant coefficients."""
    spec = load_problem(json.dumps(flagship_document(steps=50)))
    assert (spec.n, spec.m) == (1, 2)
    assert spec.grid.horizon == 1.0
    assert spec.grid.steps == 50
    assert spec.B.values.tolist() == [[[0.0, 1.0]]]
    assert spec.target.b.tolist() == [1.0]
    assert validate(spec).passed


def test_load_piecewise() -> None:
    """Coefficients can be given as segments with breakpoints."""
    data = flagship_document(steps=10)
    data["A"] = {"breakpoints": [0, 0.5, 1], "values": [[[1.0]], [[-1.0]]]}
    del data["target"]["b"]
    spec = load_problem(json.dumps(data))
    assert spec.A.values[:, 0, 0].tolist() == [1.0, -1.0]
    assert spec.A.at(0.75)[0, 0] == -1.0
    assert spec.target.is_deterministic


@pytest.mark.parametrize("change, field", [
    ({"n": 0}, "n"),
    ({"steps": 1.5}, "steps"),
    ({"T": -1}, "T"),
    ({"B": [[0.0, 1.0, 2.0]]}, "B"),
    ({"x0": [0.0, 1.0]}, "x0"),
    ({"target": [1.0]}, "target"),
    ({"R": [["a", "b"], ["c", "d"]]}, "R"),
    ({"A": {"breakpoints": [0, 1], "values": [[[1.0]], [[2.0]]]}}, "A"),
    ({"A": {"breakpoints": [0, 0.5], "values": [[[1.0]]]}}, "A"),
    ({"A": {"breakpoints": [0, 0.6, 0.5, 1], "values": [[[1.0]]] * 3}}, "A"),
])
def test_load_problem_errors(change, field) -> None:
    """Loading errors name the offending field."""
    data = flagship_document()
    data.update(change)
    with pytest.raises(ProblemLoadError) as exc_info:
        load_problem(json.dumps(data))
    assert exc_info.value.field == field


def test_load_problem_document_errors() -> None:
    """Malformed documents and missing fields are reported."""
    with pytest.raises(ProblemLoadError, match="not valid JSON") as exc_info:
        load_problem("{")
    assert exc_info.value.field == "document"
    with pytest.raises(ProblemLoadError, match="top level"):
        load_problem("[]")
    data = flagship_document()
    del data["D"]
    with pytest.raises(ProblemLoadError, match="missing field") as exc_info:
        load_problem(json.dumps(data))
    assert exc_info.value.field == "D"
    data = flagship_document()
    data["B"] = [[0.0], [1.0]]
    with pytest.raises(ProblemLoadError, match="dimension mismatch"):
        load_problem(json.dumps(data))


def test_dump_problem() -> None:
    """A dumped problem loads into the same problem."""
    data = flagship_document(steps=20)
    data["C"] = {"breakpoints": [0, 0.25, 1], "values": [[[0.5]], [[0.0]]]}
    spec = load_problem(json.dumps(data))
    weight = MatrixPath.constant([[2.0]], 1.0)
    document = dump_problem(spec, weight)
    again = load_problem(document)
    for name, path, _ in spec.shapes():
        assert getattr(again, name) == path, name
    assert again.target == spec.target
    assert np.array_equal(again.x0, spec.x0)
    assert load_weight(document, "Q", 1, 1.0) == weight
    assert load_weight(dump_problem(spec), "Q", 1, 1.0) is None


def test_config_digest() -> None:
    """The digest ignores formatting and key order."""
    data = flagship_document()
    compact = json.dumps(data, separators=(",", ":"))
    pretty = json.dumps(dict(reversed(list(data.items()))), indent=4)
    assert config_digest(compact) == config_digest(pretty)
    assert len(config_digest(compact)) == 64
    data["x0"] = [1.0]
    assert config_digest(json.dumps(data)) != config_digest(compact)


def test_check_weight() -> None:
    """Symmetry, definiteness and semidefiniteness findings."""
    good = np.stack([np.eye(2), 2 * np.eye(2)])
    assert check_weight("R", good, strict=True) == []

    asymmetric = np.array([[[1.0, 0.5], [0.0, 1.0]]])
    assert [f.code for f in check_weight("R", asymmetric, strict=True)] == [
        "R_NOT_SYMMETRIC"]

    singular = np.stack([np.eye(2), np.diag([1.0, 0.0])])
    findings = check_weight("R", singular, strict=True)
    assert [f.code for f in findings] == ["R_NOT_POSITIVE"]
    assert findings[0].node == 1
    assert check_weight("Q", singular, strict=False) == []
    assert [f.code for f in check_weight("Q", -singular, strict=False)] == [
        "Q_NOT_SEMIDEFINITE"]
    assert [f.code for f in check_weight("R", np.zeros((1, 1, 1)), strict=True)] == [
        "R_NOT_POSITIVE"]


def test_validate_findings() -> None:
    """Standing assumptions are checked node by node."""
    data = flagship_document(steps=10)
    data["R"] = {
        "breakpoints": [0, 0.55, 1],
        "values": [np.eye(2).tolist(), [[1, 0], [0, -1]]]}
    report = validate(load_problem(json.dumps(data)))
    assert not report.passed
    assert report.codes() == ("BREAKPOINT_OFF_GRID", "R_NOT_POSITIVE")
    warning = report.findings[0]
    assert warning.severity == Severity.WARNING
    assert warning.node == 6
    assert report.errors()[0].node == 6

    data = flagship_document(steps=10)
    data.update(n=2, m=1, A=np.eye(2).tolist(), B=[[1.0], [0.0]], C=np.eye(2).tolist(),
                D=[[1.0], [0.0]], R=[[1.0]], x0=[0.0, 0.0], target={"a": [0.0, 0.0]})
    assert validate(load_problem(json.dumps(data))).codes() == ("M_LESS_THAN_N",)

    data = flagship_document(steps=10)
    data["x0"] = [float("nan")]
    assert "NOT_FINITE" in validate(load_problem(json.dumps(data))).codes()
