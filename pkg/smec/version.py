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

"""Version information, written into every run report."""

import dataclasses
import pathlib
from typing import Dict, List, Optional

import pkg_resources

DISTRIBUTION = "smec"


@dataclasses.dataclass(frozen=True)
class Version:
    """Release version, source control revision and build date."""

    user_version: str
    vcs_version: str
    build_date: str

    def as_dict(self) -> Dict[str, str]:
        """Return a JSON compatible representation."""
        return dataclasses.asdict(self)


def find_version_lines(start: Optional[str], max_level: int) -> List[str]:
    """Search VERSION.txt in start and its parents and return its lines."""
    if not start:
        return []
    directory = pathlib.Path(start)
    for _ in range(max_level):
        candidate = directory / "VERSION.txt"
        if candidate.is_file():
            return [line.strip() for line in candidate.read_text().splitlines()]
        directory = directory.parent
    return []


def distribution_version() -> str:
    """Return the version of the installed distribution, or an empty string."""
    try:
        return pkg_resources.get_distribution(DISTRIBUTION).version
    except pkg_resources.DistributionNotFound:
        return ""


def get_version(start: Optional[str] = None, max_level: int = 3) -> Version:
    """Return version information, looking for VERSION.txt near start."""
    lines = find_version_lines(start, max_level) or find_version_lines(".", 1)
    lines = (lines + ["", ""])[:2]
    return Version(distribution_version(), lines[0], lines[1])
