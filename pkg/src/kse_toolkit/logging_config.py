"""Logger setup for kse-toolkit.

Everything the package logs goes through the ``kse_toolkit`` logger or one
of its children. :class:`LoggerFactory` owns that logger's level and
handlers; child loggers carry no handlers of their own and propagate to it.
"""

import logging
import threading

PACKAGE_LOGGER = "kse_toolkit"
DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _stream_handler(level: int) -> logging.Handler:
    handler = logging.StreamHandler()
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(DEFAULT_FORMAT))
    return handler


class LoggerFactory:
    """Configure the package logger and hand out loggers below it.

    Thread-safe. The package logger does not propagate to the root logger,
    so host applications see toolkit output only through the handlers
    installed here.

    Examples
    --------
    >>> import logging
    >>> LoggerFactory.configure(level=logging.DEBUG)
    >>> logger = LoggerFactory.get_logger("kse_toolkit.analysis")
    >>> logger.debug("analysing conv2")
    """

    _configured = False
    _lock = threading.Lock()

    @classmethod
    def configure(
        cls,
        level: int = logging.INFO,
        handlers: list[logging.Handler] | None = None,
    ) -> None:
        """Set the package level and replace its handlers.

        Parameters
        ----------
        level : int, default=logging.INFO
            Level of the ``kse_toolkit`` logger.
        handlers : list[logging.Handler] or None, default=None
            Handlers to install; a formatted stderr handler when omitted.
        """
        with cls._lock:
            cls._install(level, handlers or [_stream_handler(level)])

    @classmethod
    def _install(cls, level: int, handlers: list[logging.Handler]) -> None:
        package = logging.getLogger(PACKAGE_LOGGER)
        package.setLevel(level)
        for existing in list(package.handlers):
            package.removeHandler(existing)
        for handler in handlers:
            package.addHandler(handler)
        package.propagate = False
        cls._configured = True

    @classmethod
    def get_logger(cls, name: str = PACKAGE_LOGGER) -> logging.Logger:
        """Return the logger called ``name``.

        The package logger gets the default stderr handler on first use if
        :meth:`configure` was never called. Names outside the package are
        prefixed with ``kse_toolkit.`` so their records reach the same
        handlers.

        Parameters
        ----------
        name : str, default="kse_toolkit"
            Logger name, typically ``__name__`` of the calling module.

        Returns
        -------
        logging.Logger
            A logger that propagates to the package logger.
        """
        with cls._lock:
            if not cls._configured:
                cls._install(logging.INFO, [_stream_handler(logging.INFO)])
        if name != PACKAGE_LOGGER and not name.startswith(PACKAGE_LOGGER + "."):
            name = f"{PACKAGE_LOGGER}.{name}"
        return logging.getLogger(name)


__all__ = ["LoggerFactory", "PACKAGE_LOGGER"]
