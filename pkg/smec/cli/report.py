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

"""Run reports of the command line front end."""

import dataclasses
import json
import pathlib
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.models import SmecError

REPORT_NAME = "report.json"


def to_json_value(value: Any) -> Any:
    """Convert numpy values and data containers into plain JSON values."""
    if isinstance(value, dict):
        return {str(key): to_json_value(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json_value(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_json_value(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if np.isfinite(number) else repr(number)
    return value


def error_entry(exc: SmecError) -> Dict[str, Any]:
    """Describe an exception in a report."""
    entry: Dict[str, Any] = {"type": exc.__class__.__name__, "message": str(exc)}
    for name in ("code", "field", "margin", "residual"):
        if hasattr(exc, name):
            entry[name] = getattr(exc, name)
    report = getattr(exc, "report", None)
    if report is not None:
        entry["findings"] = [
            {"code": finding.code, "message": finding.message,
             "node": finding.node, "severity": finding.severity.name}
            for finding in report.findings]
    return entry


@dataclasses.dataclass
class RunReport:  # pylint: disable=too-many-instance-attributes
    """
    Result of one command.

    Everything except `timing` depends only on the problem document, the
    settings and the seed.
    """

    command: str
    config_digest: str
    seed: int
    settings: Dict[str, Any]
    version: Dict[str, str]
    exit_code: int = 0
    results: Dict[str, Any] = dataclasses.field(default_factory=dict)
    files: List[str] = dataclasses.field(default_factory=list)
    error: Optional[Dict[str, Any]] = None
    timing: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def body(self) -> Dict[str, Any]:
        """Return the reproducible part of the report."""
        data = dataclasses.asdict(self)
        del data["timing"]
        return to_json_value(data)

    def to_json(self) -> str:
        """Serialize the report with sorted keys."""
        data = self.body()
        data["timing"] = to_json_value(self.timing)
        return json.dumps(data, sort_keys=True, indent=2) + "\n"

    def write(self, directory: pathlib.Path) -> pathlib.Path:
        """Write the report into the directory."""
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / REPORT_NAME
        path.write_text(self.to_json())
        return path
