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

"""Tables for CSV export."""

import pathlib
from typing import Dict, Iterable, List, Tuple

import numpy as np
import pandas as pd

from ..core.models import Estimate, TimeGrid
from ..simulate.gramian import GramianReport
from ..solver.bsde import BsdeCoefficients, BsdeSolution


def _matrix_columns(name: str, values: np.ndarray) -> Dict[str, np.ndarray]:
    """Flatten a stack of matrices into one column per entry."""
    _, rows, cols = values.shape
    return {
        f"{name}_{i}{j}": values[:, i, j] for i in range(rows) for j in range(cols)}


def _vector_columns(name: str, values: np.ndarray) -> Dict[str, np.ndarray]:
    """Split a stack of vectors into one column per component."""
    return {f"{name}_{i}": values[:, i] for i in range(values.shape[1])}


def matrix_path_frame(name: str, values: np.ndarray, grid: TimeGrid) -> pd.DataFrame:
    """Return a matrix valued function of time, one row per node."""
    return pd.DataFrame({"t": grid.nodes, **_matrix_columns(name, values)})


def bsde_frame(
        pq: BsdeSolution, coefficients: BsdeCoefficients,
        grid: TimeGrid) -> pd.DataFrame:
    """Return alpha, beta, B1 and B2 along the grid."""
    return pd.DataFrame({
        "t": grid.nodes,
        **_vector_columns("alpha", pq.alpha),
        **_vector_columns("beta", pq.beta),
        **_matrix_columns("B1", coefficients.B1),
        **_matrix_columns("B2", coefficients.B2),
    })


def per_path_frame(name: str, values: np.ndarray) -> pd.DataFrame:
    """Return one value per simulated path."""
    return pd.DataFrame({"path": np.arange(len(values)), name: values})


def gramian_frame(reports: Iterable[Tuple[str, GramianReport]]) -> pd.DataFrame:
    """Return the eigenvalues of some Gramians, largest first."""
    rows: List[Dict[str, object]] = []
    for name, report in reports:
        for index, eigenvalue in enumerate(report.eigenvalues):
            rows.append({
                "gramian": name, "index": index, "eigenvalue": float(eigenvalue),
                "standard_error": report.standard_error})
    return pd.DataFrame(
        rows, columns=["gramian", "index", "eigenvalue", "standard_error"])


def summary_frame(estimates: Dict[str, Estimate]) -> pd.DataFrame:
    """Return a table of scalar estimates with their standard errors."""
    rows = []
    for quantity, estimate in sorted(estimates.items()):
        values = np.atleast_1d(np.asarray(estimate.value, dtype=float))
        errors = np.broadcast_to(
            np.atleast_1d(np.asarray(estimate.standard_error, dtype=float)),
            values.shape)
        suffix = len(values) > 1
        for index, (value, error) in enumerate(zip(values, errors)):
            rows.append({
                "quantity": f"{quantity}_{index}" if suffix else quantity,
                "value": float(value), "standard_error": float(error),
                "samples": estimate.samples})
    return pd.DataFrame(
        rows, columns=["quantity", "value", "standard_error", "samples"])


def write_frames(directory: pathlib.Path, frames: Dict[str, pd.DataFrame]) -> List[str]:
    """Write each table as CSV file; return the sorted file names."""
    directory.mkdir(parents=True, exist_ok=True)
    for name, frame in frames.items():
        frame.to_csv(directory / name, index=False)
    return sorted(frames)
