"""Example programs shipped with the package."""

from importlib import resources


def fixture_text(name: str) -> str:
    """Text of a bundled file, e.g. ``fixture_text("rps.chrism")``."""
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def fixture_path(name: str):
    return resources.files(__name__).joinpath(name)


def load_program(name: str):
    from ..syntax import parse_program

    if "." not in name:
        name += ".chrism"
    return parse_program(fixture_text(name))
