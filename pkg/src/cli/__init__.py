# Command-line front end: run configurations, commands and the varpen entry point
from .config import RunConfig, load_config, parse_config_text
from .commands import (
    EXIT_OK,
    EXIT_FAILED,
    EXIT_USAGE,
    cmd_reproduce,
    cmd_sweep,
    cmd_curve,
    cmd_gradcheck,
    cmd_generic_demo,
)
from .runner import build_parser, configure_logging, main
