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

"""Test version provision."""

from unittest.mock import Mock

import pkg_resources

from ..version import Version, distribution_version, find_version_lines, get_version


def test_find_version_lines(tmp_path) -> None:
    """Search for a version file in a directory and its parents."""
    assert find_version_lines(None, 3) == []
    assert find_version_lines(str(tmp_path), 1) == []
    (tmp_path / "VERSION.txt").write_text("vcs\ndate\n")
    assert find_version_lines(str(tmp_path), 1) == ["vcs", "date"]

    subdir = tmp_path / "sub"
    subdir.mkdir()
    assert find_version_lines(str(subdir), 1) == []
    assert find_version_lines(str(subdir), 2) == ["vcs", "date"]


def test_get_version(tmp_path, monkeypatch) -> None:
    """Lines of the version file are packed into a data class."""
    monkeypatch.chdir(tmp_path)
    version = distribution_version()
    assert get_version(str(tmp_path)) == Version(version, "", "")

    (tmp_path / "VERSION.txt").write_text("1\n")
    assert get_version(str(tmp_path)) == Version(version, "1", "")
    (tmp_path / "VERSION.txt").write_text("1\n2\n3\n")
    assert get_version(str(tmp_path)) == Version(version, "1", "2")
    assert get_version(str(tmp_path)).as_dict() == {
        "user_version": version, "vcs_version": "1", "build_date": "2"}


def test_get_version_from_distribution(tmp_path, monkeypatch) -> None:
    """The user version is taken from the installed distribution."""

    def get_distribution(_):
        mock = Mock()
        mock.version = "321"
        return mock

    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr(pkg_resources, 'get_distribution', get_distribution)
    assert get_version(str(tmp_path)) == Version("321", "", "")


def test_missing_distribution(monkeypatch) -> None:
    """Without an installed distribution, the user version is empty."""

    def get_distribution(name):
        raise pkg_resources.DistributionNotFound(name)

    monkeypatch.setattr(pkg_resources, 'get_distribution', get_distribution)
    assert distribution_version() == ""
