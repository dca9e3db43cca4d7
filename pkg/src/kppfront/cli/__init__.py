"""Command-line front end: run files, CSV/SVG output and the ``kppfront`` program."""
from .app import EXIT_TABLE, SweepSpec, build_parser, exit_code_for, main, write_rows
from .config import ConfigFileError, dump_config, parse_config, parse_text, read_profile
from .svg import Series, SvgStyle, emit_svg

__all__ = [
    "EXIT_TABLE", "ConfigFileError", "Series", "SvgStyle", "SweepSpec", "build_parser",
    "dump_config", "emit_svg", "exit_code_for", "main", "parse_config", "parse_text",
    "read_profile", "write_rows",
]
