"""Consistency and stability checking for Boolean evolution systems."""
from .dsl import BES, BesError, BesSyntaxError, parse_bes, pretty_print
from .encode import SymbolicTS, build_ts
from .engine import CheckReport, full_check

__all__ = ["BES", "BesError", "BesSyntaxError", "parse_bes", "pretty_print",
           "SymbolicTS", "build_ts", "CheckReport", "full_check", "fixture_path",
           "__version__"]
__version__ = "0.1.0"


def fixture_path(name: str) -> str:
    """Path of a bundled example model, e.g. ``fixture_path("example1.bes")``."""
    from importlib.resources import files
    return str(files(__package__).joinpath("fixtures", name))
