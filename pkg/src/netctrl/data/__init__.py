"""Bundled example documents."""

from importlib import resources


def sec7_path() -> str:
    """Filesystem path of the bundled three-subsystem example document."""
    return str(resources.files(__package__).joinpath("sec7.json"))
