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

"""Data models."""

import dataclasses
import enum
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

GRID_TOLERANCE = 1e-9


class SmecError(Exception):
    """Base class for all errors of this package."""


class ValidationFailed(SmecError):
    """Model validation failed."""

    def __init__(self, message: str, report: Optional["ValidationReport"] = None):
        """Initialize the exception with an optional validation report."""
        super().__init__(message)
        self.report = report


class ProblemLoadError(SmecError):
    """A problem document could not be loaded."""

    def __init__(self, field: str, message: str):
        """Initialize the exception with the offending field."""
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericalError(SmecError):
    """A numerical computation failed."""

    def __init__(self, code: str, message: str):
        """Initialize the exception with an error code."""
        super().__init__(f"{code}: {message}")
        self.code = code


class NotControllable(NumericalError):
    """The system is not exactly controllable."""

    def __init__(self, message: str, margin: float = 0.0):
        """Initialize the exception with the controllability margin."""
        super().__init__("NOT_CONTROLLABLE", message)
        self.margin = margin


class Infeasible(NumericalError):
    """The terminal constraints of a tree problem cannot be met."""

    def __init__(self, message: str, residual: float):
        """Initialize the exception with the least-squares residual."""
        super().__init__("INFEASIBLE", message)
        self.residual = residual


class NotAdmissible(NumericalError):
    """A control pair does not steer to the terminal target."""

    def __init__(self, message: str):
        """Initialize the exception."""
        super().__init__("NOT_ADMISSIBLE", message)


@dataclasses.dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, T]."""

    horizon: float
    steps: int

    def validate(self) -> "TimeGrid":
        """Check model for consistency."""
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValidationFailed(f"Horizon must be positive: {self.horizon}")
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise ValidationFailed(f"Steps must be a positive integer: {self.steps}")
        return self

    @property
    def delta(self) -> float:
        """Return the step size."""
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        """Return all grid nodes t_0, ..., t_N."""
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def with_steps(self, steps: int) -> "TimeGrid":
        """Return a grid with the same horizon, but another step count."""
        return dataclasses.replace(self, steps=steps)

    def is_node(self, time: float) -> bool:
        """Check whether the given time is a grid node."""
        position = time / self.delta
        return abs(position - round(position)) <= GRID_TOLERANCE * max(1.0, position)


@dataclasses.dataclass(frozen=True, eq=False)
class MatrixPath:
    """
    A piecewise-constant matrix valued function on [0, T].

    Segment i covers the left-closed interval [breakpoints[i], breakpoints[i+1]).
    """

    values: np.ndarray
    breakpoints: np.ndarray

    @classmethod
    def constant(
            cls, matrix: Union[Sequence, np.ndarray], horizon: float) -> "MatrixPath":
        """Create a path that is constant over the whole horizon."""
        value = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(value[np.newaxis], np.array([0.0, horizon]))

    @classmethod
    def from_nodes(cls, values: np.ndarray, grid: TimeGrid) -> "MatrixPath":
        """
        Create a path from node values t_0, ..., t_{N-1} of a grid.

        Consecutive equal values are merged into one segment.
        """
        values = np.asarray(values[:grid.steps], dtype=float)
        changes = [0] + [
            k for k in range(1, grid.steps)
            if not np.array_equal(values[k], values[k - 1])]
        breakpoints = np.append(grid.nodes[changes], grid.horizon)
        return cls(values[changes], breakpoints)

    def validate(self) -> "MatrixPath":
        """Check model for consistency."""
        if self.values.ndim != 3 or self.values.shape[0] < 1:
            raise ValidationFailed(
                f"Matrix path must be a stack of matrices: {self.values.shape}")
        if self.breakpoints.shape != (self.values.shape[0] + 1,):
            raise ValidationFailed("Need exactly one more breakpoint than segments")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValidationFailed("Breakpoints must be increasing")
        if self.breakpoints[0] != 0.0:
            raise ValidationFailed("First breakpoint must be 0")
        return self

    @property
    def rows(self) -> int:
        """Return the number of rows."""
        return int(self.values.shape[1])

    @property
    def cols(self) -> int:
        """Return the number of columns."""
        return int(self.values.shape[2])

    @property
    def is_constant(self) -> bool:
        """Return True, if the path has only one segment."""
        return self.values.shape[0] == 1

    def at(self, time: float) -> np.ndarray:
        """Return the matrix valid at the given time."""
        index = int(np.searchsorted(self.breakpoints, time, side="right")) - 1
        return self.values[min(max(index, 0), self.values.shape[0] - 1)]

    def off_grid(self, grid: TimeGrid) -> List[float]:
        """Return all inner breakpoints that are not grid nodes."""
        return [float(b) for b in self.breakpoints[1:-1] if not grid.is_node(b)]

    def on_grid(self, grid: TimeGrid) -> np.ndarray:
        """
        Sample the path at every grid node.

        Inner breakpoints that are not grid nodes are moved to the next node.
        """
        snapped = np.ceil(self.breakpoints[1:-1] / grid.delta - GRID_TOLERANCE)
        segments = np.searchsorted(snapped, np.arange(grid.steps + 1), side="right")
        return self.values[np.minimum(segments, self.values.shape[0] - 1)]

    def __eq__(self, other) -> bool:
        """Compare paths by their numbers."""
        if not isinstance(other, MatrixPath):
            return NotImplemented
        return (
            self.values.shape == other.values.shape and
            np.array_equal(self.values, other.values) and
            np.array_equal(self.breakpoints, other.breakpoints))


@dataclasses.dataclass(frozen=True, eq=False)
class TerminalTarget:
    """Terminal target xi = a + b * W(T)."""

    a: np.ndarray
    b: np.ndarray

    @classmethod
    def deterministic(cls, value: Union[Sequence, np.ndarray]) -> "TerminalTarget":
        """Create a target that does not depend on the Brownian motion."""
        a = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(a, np.zeros_like(a))

    @property
    def is_deterministic(self) -> bool:
        """Return True, if the target does not depend on W(T)."""
        return not np.any(self.b)

    def evaluate(self, w_terminal: np.ndarray) -> np.ndarray:
        """Evaluate the target for every given value of W(T)."""
        return self.a[np.newaxis, :] + np.asarray(w_terminal)[:, np.newaxis] * self.b

    def __eq__(self, other) -> bool:
        """Compare targets by their numbers."""
        if not isinstance(other, TerminalTarget):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)


class Coefficients(NamedTuple):
    """Coefficients of a problem sampled at the grid nodes."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    R: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A stochastic minimum-energy control problem."""

    n: int
    m: int
    grid: TimeGrid
    A: MatrixPath
    B: MatrixPath
    C: MatrixPath
    D: MatrixPath
    R: MatrixPath
    x0: np.ndarray
    target: TerminalTarget

    def shapes(self) -> Tuple[Tuple[str, MatrixPath, Tuple[int, int]], ...]:
        """Return all coefficient paths with their expected shapes."""
        n, m = self.n, self.m
        return (
            ("A", self.A, (n, n)),
            ("B", self.B, (n, m)),
            ("C", self.C, (n, n)),
            ("D", self.D, (n, m)),
            ("R", self.R, (m, m)),
        )

    def validate(self) -> "ProblemSpec":
        """Check model for structural consistency."""
        if self.n < 1 or self.m < 1:
            raise ValidationFailed(
                f"Dimensions must be positive: n={self.n}, m={self.m}")
        self.grid.validate()
        for name, path, shape in self.shapes():
            path.validate()
            if (path.rows, path.cols) != shape:
                raise ValidationFailed(
                    f"{name} has shape {(path.rows, path.cols)}, expected {shape}")
            if not np.isclose(path.breakpoints[-1], self.grid.horizon):
                raise ValidationFailed(f"{name} does not end at the horizon")
        if self.x0.shape != (self.n,):
            raise ValidationFailed(
                f"x0 has shape {self.x0.shape}, expected {(self.n,)}")
        if self.target.a.shape != (self.n,) or self.target.b.shape != (self.n,):
            raise ValidationFailed("Target vectors must have length n")
        return self

    def coefficients(self) -> Coefficients:
        """Sample all coefficients at the grid nodes."""
        return Coefficients(*(path.on_grid(self.grid) for _, path, _ in self.shapes()))

    def with_steps(self, steps: int) -> "ProblemSpec":
        """Return the same problem on a finer or coarser grid."""
        return dataclasses.replace(self, grid=self.grid.with_steps(steps))

    def with_target(self, target: TerminalTarget) -> "ProblemSpec":
        """Return the same system with another terminal target."""
        return dataclasses.replace(self, target=target)

    def with_weight(self, weight: MatrixPath) -> "ProblemSpec":
        """Return the same system with another control weight R."""
        return dataclasses.replace(self, R=weight)


@enum.unique
class Severity(enum.Enum):
    """Severity of a validation finding."""

    ERROR = "error"
    WARNING = "warning"


class Finding(NamedTuple):
    """A single finding of a numerical validation."""

    code: str
    message: str
    node: Optional[int] = None
    severity: Severity = Severity.ERROR


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    """Result of a numerical validation."""

    findings: Tuple[Finding, ...] = ()

    @property
    def passed(self) -> bool:
        """Return True, if there are no error findings."""
        return not self.errors()

    def errors(self) -> Tuple[Finding, ...]:
        """Return all findings of error severity."""
        return tuple(f for f in self.findings if f.severity == Severity.ERROR)

    def codes(self) -> Tuple[str, ...]:
        """Return the codes of all findings."""
        return tuple(f.code for f in self.findings)

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        """Combine two reports."""
        return ValidationReport(self.findings + other.findings)


@dataclasses.dataclass(frozen=True, eq=False)
class Estimate:
    """Monte-Carlo estimate with its standard error."""

    value: np.ndarray
    standard_error: np.ndarray
    samples: int

    @classmethod
    def of(cls, samples: np.ndarray) -> "Estimate":
        """Estimate the mean of the given samples (first axis)."""
        samples = np.asarray(samples, dtype=float)
        count = samples.shape[0]
        if count > 1:
            spread = samples.std(axis=0, ddof=1)
        else:
            spread = np.zeros(samples.shape[1:])
        return cls(samples.mean(axis=0), spread / np.sqrt(count), count)

    def within(self, expected: Union[float, np.ndarray], factor: float = 3.0,
               floor: float = 1e-12) -> bool:
        """Check whether the expected value lies within some standard errors."""
        gap = np.abs(np.asarray(self.value) - expected)
        return bool(np.all(gap <= factor * np.asarray(self.standard_error) + floor))

    def as_dict(self) -> dict:
        """Return a JSON compatible representation."""
        return {
            "value": np.asarray(self.value).tolist(),
            "standard_error": np.asarray(self.standard_error).tolist(),
            "samples": self.samples,
        }
