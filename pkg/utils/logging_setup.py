"""
Logging Setup
Installs the rich console handler used by every command.
"""

import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

console = Console()

_configured = False


def configure_logging(level: str = "INFO", debug_mode: bool = False) -> logging.Logger:
    """
    Configure the root logger once with a RichHandler.

    Args:
        level: Log level name
        debug_mode: Forces DEBUG regardless of level

    Returns:
        The package logger ("dac")
    """
    global _configured
    effective = "DEBUG" if debug_mode else level.upper()
    if not _configured:
        logging.basicConfig(
            level=effective,
            format="%(message)s",
            handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
        )
        _configured = True
    logging.getLogger("dac").setLevel(effective)
    return logging.getLogger("dac")


def get_logger(area: Optional[str] = None) -> logging.Logger:
    """Return the ``dac`` logger or one of its children."""
    return logging.getLogger("dac" if area is None else f"dac.{area}")
