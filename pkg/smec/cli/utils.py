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

"""Utilities for the command line front end."""

import runpy
from typing import Any, Dict


def to_bool(value: Any) -> bool:
    """
    Convert value to boolean value.

    Configuration values given as environment variables are strings. A string
    value of `""`, `"0"`, or any value that starts with `"F"`, `"f"`, `"N"`
    or `"n"`, is converted to `False`. All other values are converted via
    `bool`.
    """
    if isinstance(value, str):
        return value not in ("", "0") and value[0] not in "FfNn"
    return bool(value)


def coerce(default: Any, value: str) -> Any:
    """Convert a string into the type of the default value."""
    if isinstance(default, bool):
        return to_bool(value)
    if isinstance(default, int) or default is None:
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def read_settings_file(filename: str) -> Dict[str, Any]:
    """Execute a Python settings file and return its upper case names."""
    namespace = runpy.run_path(filename)
    return {key: value for key, value in namespace.items() if key.isupper()}


def module_settings(module: Any) -> Dict[str, Any]:
    """Return all upper case names of a module."""
    return {key: getattr(module, key) for key in dir(module) if key.isupper()}
