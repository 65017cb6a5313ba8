"""Attacker-defender war games for ICS security."""

from importlib import resources

__version__ = "0.1.0"


def fixture_path(name: str) -> str:
    """Filesystem path of a bundled fixture, e.g. ``fixture_path("alpha.json")``."""
    return str(resources.files(__package__).joinpath("fixtures", name))
