import logging

from rich.logging import RichHandler

from tool_kit.config_loader import section

_CONFIGURED = False


def configure_logging(level: str | int | None = None) -> logging.Logger:
    """
    Installs a single rich handler on the root logger.

    Calling it again only updates the level, so scripts and the CLI can both call it.

    Parameters:
    -----------
    level : str or int, optional
        Logging level. Defaults to the ``level`` of the ``logging`` config section.

    Returns:
    --------
    logging.Logger
        The configured root logger.
    """
    global _CONFIGURED
    if level is None:
        level = section("logging").get("level", "INFO")
    root = logging.getLogger()
    if not _CONFIGURED:
        handler = RichHandler(rich_tracebacks=True, show_path=False, markup=False)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        root.addHandler(handler)
        _CONFIGURED = True
    root.setLevel(level)
    return root
