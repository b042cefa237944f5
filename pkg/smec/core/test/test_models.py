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

"""Test the models module."""

import numpy as np
import pytest

from ..models import (Estimate, Finding, MatrixPath, NotControllable,
                      NumericalError, ProblemLoadError, ProblemSpec, Severity,
                      TerminalTarget, TimeGrid, ValidationFailed,
                      ValidationReport)


def test_error_attributes() -> None:
    """Errors carry their codes and fields."""
    assert ProblemLoadError("x0", "missing field").field == "x0"
    assert NumericalError("RICCATI_BLOWUP", "too big").code == "RICCATI_BLOWUP"
    error = NotControllable("singular", 0.5)
    assert isinstance(error, NumericalError)
    assert error.code == "NOT_CONTROLLABLE"
    assert error.margin == 0.5


def test_time_grid() -> None:
    """Nodes, step size and node detection."""
    grid = TimeGrid(2.0, 4).validate()
    assert grid.delta == 0.5
    assert list(grid.nodes) == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert grid.is_node(1.5)
    assert not grid.is_node(1.2)
    assert grid.with_steps(8).delta == 0.25


def test_time_grid_validation_failed() -> None:
    """An invalid grid raises exception."""
    with pytest.raises(ValidationFailed, match="Horizon must be positive"):
        TimeGrid(0.0, 4).validate()
    with pytest.raises(ValidationFailed, match="Steps must be a positive integer"):
        TimeGrid(1.0, 0).validate()


def test_matrix_path_at_is_left_closed() -> None:
    """A breakpoint belongs to the segment that starts there."""
    path = MatrixPath(
        np.array([[[1.0]], [[2.0]]]), np.array([0.0, 0.5, 1.0])).validate()
    assert path.at(0.0)[0, 0] == 1.0
    assert path.at(0.49)[0, 0] == 1.0
    assert path.at(0.5)[0, 0] == 2.0
    assert path.at(1.0)[0, 0] == 2.0
    assert not path.is_constant
    assert (path.rows, path.cols) == (1, 1)


def test_matrix_path_on_grid() -> None:
    """Sampling at the nodes; off-grid breakpoints move to the next node."""
    path = MatrixPath(np.array([[[1.0]], [[2.0]]]), np.array([0.0, 0.3, 1.0]))
    grid = TimeGrid(1.0, 4)
    assert path.off_grid(grid) == [0.3]
    assert list(path.on_grid(grid)[:, 0, 0]) == [1.0, 1.0, 2.0, 2.0, 2.0]

    on_grid = MatrixPath(np.array([[[1.0]], [[2.0]]]), np.array([0.0, 0.5, 1.0]))
    assert on_grid.off_grid(grid) == []
    assert list(on_grid.on_grid(grid)[:, 0, 0]) == [1.0, 1.0, 2.0, 2.0, 2.0]


def test_matrix_path_from_nodes() -> None:
    """Consecutive equal node values are merged into one segment."""
    grid = TimeGrid(1.0, 4)
    values = np.array([1.0, 1.0, 3.0, 3.0, 7.0]).reshape(5, 1, 1)
    path = MatrixPath.from_nodes(values, grid)
    assert list(path.breakpoints) == [0.0, 0.5, 1.0]
    assert list(path.values[:, 0, 0]) == [1.0, 3.0]
    assert np.array_equal(path.on_grid(grid)[:4], values[:4])
    assert MatrixPath.from_nodes(np.ones((5, 2, 2)), grid) == MatrixPath.constant(
        np.ones((2, 2)), 1.0)


def test_matrix_path_validation_failed() -> None:
    """An invalid path raises exception."""
    with pytest.raises(ValidationFailed, match="stack of matrices"):
        MatrixPath(np.ones((2, 2)), np.array([0.0, 1.0])).validate()
    with pytest.raises(ValidationFailed, match="one more breakpoint"):
        MatrixPath(np.ones((2, 1, 1)), np.array([0.0, 1.0])).validate()
    with pytest.raises(ValidationFailed, match="increasing"):
        MatrixPath(np.ones((2, 1, 1)), np.array([0.0, 0.7, 0.5])).validate()
    with pytest.raises(ValidationFailed, match="First breakpoint"):
        MatrixPath(np.ones((1, 1, 1)), np.array([0.1, 1.0])).validate()


def test_terminal_target() -> None:
    """Targets are affine in W(T)."""
    target = TerminalTarget(np.array([1.0, 2.0]), np.array([0.0, 1.0]))
    assert not target.is_deterministic
    values = target.evaluate(np.array([0.0, 2.0]))
    assert values.tolist() == [[1.0, 2.0], [1.0, 4.0]]
    deterministic = TerminalTarget.deterministic([3.0])
    assert deterministic.is_deterministic
    assert deterministic == TerminalTarget(np.array([3.0]), np.zeros(1))
    assert deterministic != target


def _spec(**kwargs) -> ProblemSpec:
    """Create a small problem; keyword arguments replace fields."""
    horizon = 1.0
    data = {
        "n": 1, "m": 2, "grid": TimeGrid(horizon, 10),
        "A": MatrixPath.constant([[0.0]], horizon),
        "B": MatrixPath.constant([[0.0, 1.0]], horizon),
        "C": MatrixPath.constant([[0.0]], horizon),
        "D": MatrixPath.constant([[1.0, 0.0]], horizon),
        "R": MatrixPath.constant(np.eye(2), horizon),
        "x0": np.zeros(1),
        "target": TerminalTarget.deterministic([1.0]),
    }
    data.update(kwargs)
    return ProblemSpec(**data)


def test_problem_spec_validation() -> None:
    """A valid problem raises no exception; derived problems keep the system."""
    spec = _spec().validate()
    coefficients = spec.coefficients()
    assert coefficients.B.shape == (11, 1, 2)
    assert spec.with_steps(20).coefficients().A.shape == (21, 1, 1)
    target = TerminalTarget.deterministic([2.0])
    assert spec.with_target(target).target == target
    weight = MatrixPath.constant(2 * np.eye(2), 1.0)
    assert spec.with_weight(weight).R == weight


def test_problem_spec_validation_failed() -> None:
    """An invalid problem raises exception."""
    with pytest.raises(ValidationFailed, match="Dimensions must be positive"):
        _spec(n=0).validate()
    with pytest.raises(ValidationFailed, match="B has shape"):
        _spec(B=MatrixPath.constant([[0.0, 1.0, 2.0]], 1.0)).validate()
    with pytest.raises(ValidationFailed, match="does not end at the horizon"):
        _spec(A=MatrixPath.constant([[0.0]], 2.0)).validate()
    with pytest.raises(ValidationFailed, match="x0 has shape"):
        _spec(x0=np.zeros(2)).validate()
    with pytest.raises(ValidationFailed, match="Target vectors"):
        _spec(target=TerminalTarget.deterministic([1.0, 2.0])).validate()


def test_validation_report() -> None:
    """Warnings do not fail a report."""
    warning = Finding("BREAKPOINT_OFF_GRID", "moved", 3, Severity.WARNING)
    error = Finding("R_NOT_POSITIVE", "bad")
    assert ValidationReport().passed
    report = ValidationReport((warning,))
    assert report.passed
    merged = report.merge(ValidationReport((error,)))
    assert not merged.passed
    assert merged.errors() == (error,)
    assert merged.codes() == ("BREAKPOINT_OFF_GRID", "R_NOT_POSITIVE")


def test_estimate() -> None:
    """Mean, standard error and the three sigma test."""
    estimate = Estimate.of(np.array([1.0, 2.0, 3.0, 4.0]))
    assert estimate.value == 2.5
    assert estimate.samples == 4
    assert np.isclose(estimate.standard_error, np.std([1, 2, 3, 4], ddof=1) / 2)
    assert estimate.within(2.5 + 2.9 * estimate.standard_error)
    assert not estimate.within(2.5 + 3.1 * estimate.standard_error)
    assert estimate.as_dict()["samples"] == 4

    vector = Estimate.of(np.array([[1.0, 0.0], [3.0, 0.0]]))
    assert vector.value.tolist() == [2.0, 0.0]
    assert vector.within(np.array([2.0, 0.0]))
