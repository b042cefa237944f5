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

"""Loading, dumping and validation of problem documents."""

import hashlib
import json
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .models import (Finding, MatrixPath, ProblemLoadError, ProblemSpec,
                     Severity, TerminalTarget, TimeGrid, ValidationFailed,
                     ValidationReport)
from .utils import max_eigenvalue, min_eigenvalue, symmetrize

POSITIVITY_TOLERANCE = 1e-10
SYMMETRY_TOLERANCE = 1e-12


def _parse(document: str) -> Dict[str, Any]:
    """Parse a JSON document into a dictionary."""
    try:
        data = json.loads(document)
    except ValueError as exc:
        raise ProblemLoadError("document", f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ProblemLoadError("document", "top level must be an object")
    return data


def _get(data: Dict[str, Any], key: str) -> Any:
    """Return a required field."""
    try:
        return data[key]
    except KeyError as exc:
        raise ProblemLoadError(key, "missing field") from exc


def _as_array(key: str, value: Any) -> np.ndarray:
    """Convert a JSON value into a float array."""
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemLoadError(key, f"not a numeric array: {value!r}") from exc


def _get_int(data: Dict[str, Any], key: str) -> int:
    """Return a required positive integer field."""
    value = _get(data, key)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ProblemLoadError(key, f"must be a positive integer: {value!r}")
    return value


def _get_vector(data: Dict[str, Any], key: str, size: int) -> np.ndarray:
    """Return a vector field of the given size."""
    vector = np.atleast_1d(_as_array(key, _get(data, key)))
    if vector.shape != (size,):
        raise ProblemLoadError(
            key, f"dimension mismatch: shape {vector.shape}, expected {(size,)}")
    return vector


def _matrix(key: str, value: Any, shape: Tuple[int, int]) -> np.ndarray:
    """Convert a matrix literal, checking its shape."""
    matrix = np.atleast_2d(_as_array(key, value))
    if matrix.shape != shape:
        raise ProblemLoadError(
            key, f"dimension mismatch: shape {matrix.shape}, expected {shape}")
    return matrix


def _path(key: str, value: Any, shape: Tuple[int, int], horizon: float) -> MatrixPath:
    """Convert a matrix literal or a segment list into a matrix path."""
    if not isinstance(value, dict):
        return MatrixPath.constant(_matrix(key, value, shape), horizon)

    breakpoints = np.atleast_1d(_as_array(key, _get(value, "breakpoints")))
    segments = _get(value, "values")
    if not isinstance(segments, list) or not segments:
        raise ProblemLoadError(key, "values must be a non-empty list of matrices")
    values = np.stack([_matrix(key, segment, shape) for segment in segments])
    if breakpoints.shape != (len(segments) + 1,):
        raise ProblemLoadError(key, "need exactly one more breakpoint than values")
    if breakpoints[0] != 0.0 or not np.isclose(breakpoints[-1], horizon):
        raise ProblemLoadError(key, f"breakpoints must span [0, {horizon}]")
    if np.any(np.diff(breakpoints) <= 0):
        raise ProblemLoadError(key, "breakpoints must be increasing")
    breakpoints[-1] = horizon
    return MatrixPath(values, breakpoints)


def load_problem(document: str) -> ProblemSpec:
    """Load a problem specification from a JSON document."""
    data = _parse(document)
    n = _get_int(data, "n")
    m = _get_int(data, "m")
    horizon = _as_array("T", _get(data, "T"))
    if horizon.shape != () or not np.isfinite(horizon) or horizon <= 0:
        raise ProblemLoadError("T", "must be a positive number")
    grid = TimeGrid(float(horizon), _get_int(data, "steps"))

    paths = {
        key: _path(key, _get(data, key), shape, grid.horizon)
        for key, shape in (
            ("A", (n, n)), ("B", (n, m)), ("C", (n, n)), ("D", (n, m)), ("R", (m, m)))
    }
    x0 = _get_vector(data, "x0", n)

    target_data = _get(data, "target")
    if not isinstance(target_data, dict):
        raise ProblemLoadError("target", "must be an object with keys a and b")
    target = TerminalTarget(
        _get_vector(target_data, "a", n),
        _get_vector(target_data, "b", n) if "b" in target_data else np.zeros(n))

    spec = ProblemSpec(n, m, grid, x0=x0, target=target, **paths)
    try:
        return spec.validate()
    except ValidationFailed as exc:
        raise ProblemLoadError("document", str(exc)) from exc


def load_weight(
        document: str, key: str, size: int,
        horizon: float) -> Optional[MatrixPath]:
    """Load an optional square weight matrix path, e.g. the state weight Q."""
    data = _parse(document)
    if key not in data:
        return None
    return _path(key, data[key], (size, size), horizon)


def _dump_path(path: MatrixPath) -> Any:
    """Convert a matrix path into its document form."""
    if path.is_constant:
        return path.values[0].tolist()
    return {
        "breakpoints": path.breakpoints.tolist(),
        "values": path.values.tolist(),
    }


def problem_document(spec: ProblemSpec) -> Dict[str, Any]:
    """Return the document form of a problem specification."""
    data: Dict[str, Any] = {
        "n": spec.n,
        "m": spec.m,
        "T": spec.grid.horizon,
        "steps": spec.grid.steps,
        "x0": spec.x0.tolist(),
        "target": {"a": spec.target.a.tolist(), "b": spec.target.b.tolist()},
    }
    for name, path, _ in spec.shapes():
        data[name] = _dump_path(path)
    return data


def dump_problem(spec: ProblemSpec, weight: Optional[MatrixPath] = None) -> str:
    """Serialize a problem specification as a JSON document."""
    data = problem_document(spec)
    if weight is not None:
        data["Q"] = _dump_path(weight)
    return json.dumps(data, indent=2, sort_keys=True)


def config_digest(document: str) -> str:
    """Return a digest of the canonical form of a JSON document."""
    canonical = json.dumps(_parse(document), sort_keys=True, separators=(",", ":"))
    sha = hashlib.sha256()
    sha.update(canonical.encode("utf-8"))
    return sha.hexdigest()


def _first(mask: np.ndarray) -> Tuple[int, int]:
    """Return first index and count of all True values."""
    indices = np.flatnonzero(mask)
    return int(indices[0]), len(indices)


def check_weight(
        name: str, values: np.ndarray, strict: bool,
        tolerance: float = POSITIVITY_TOLERANCE) -> List[Finding]:
    """Check a stack of weight matrices for symmetry and (semi-)definiteness."""
    findings: List[Finding] = []
    scale = np.maximum(1.0, np.max(np.abs(values), axis=(-1, -2)))
    asymmetry = np.max(np.abs(values - np.swapaxes(values, -1, -2)), axis=(-1, -2))
    bad = asymmetry > SYMMETRY_TOLERANCE * scale
    if np.any(bad):
        node, count = _first(bad)
        findings.append(Finding(
            f"{name}_NOT_SYMMETRIC",
            f"{name} is not symmetric at {count} node(s)", node))

    sym = symmetrize(values)
    lowest = min_eigenvalue(sym)
    highest = np.abs(max_eigenvalue(sym))
    if strict:
        bad = ~(lowest > tolerance * highest) | (highest <= 0)
        code = f"{name}_NOT_POSITIVE"
    else:
        bad = lowest < -tolerance * np.maximum(1.0, highest)
        code = f"{name}_NOT_SEMIDEFINITE"
    if np.any(bad):
        node, count = _first(bad)
        findings.append(Finding(
            code, f"{name} has eigenvalue {lowest[node]:.3g} at {count} node(s)", node))
    return findings


def validate(spec: ProblemSpec) -> ValidationReport:
    """Check the numerical standing assumptions at every grid node."""
    findings: List[Finding] = []
    if spec.m < spec.n:
        findings.append(Finding(
            "M_LESS_THAN_N", f"m={spec.m} is smaller than n={spec.n}"))

    for name, path, _ in spec.shapes():
        for breakpoint in path.off_grid(spec.grid):
            findings.append(Finding(
                "BREAKPOINT_OFF_GRID",
                f"{name} breakpoint {breakpoint} moved to the next grid node",
                int(np.ceil(breakpoint / spec.grid.delta)), Severity.WARNING))

    coefficients = spec.coefficients()
    finite = True
    for name, values in coefficients._asdict().items():
        bad = ~np.all(np.isfinite(values), axis=(-1, -2))
        if np.any(bad):
            node, count = _first(bad)
            findings.append(Finding(
                "NOT_FINITE",
                f"{name} has non-finite entries at {count} node(s)", node))
            finite = False
    for name, vector in (("x0", spec.x0), ("a", spec.target.a), ("b", spec.target.b)):
        if not np.all(np.isfinite(vector)):
            findings.append(Finding("NOT_FINITE", f"{name} has non-finite entries"))
            finite = False

    if finite:
        findings.extend(check_weight("R", coefficients.R, strict=True))
    return ValidationReport(tuple(findings))
