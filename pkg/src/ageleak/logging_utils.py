import logging


class LevelFormatter(logging.Formatter):
    CYAN = "\033[0;36m"
    GREEN = "\033[0;32m"
    YELLOW = "\033[1;33m"
    RED = "\033[0;31m"
    reset = "\x1b[0m"
    format_str = "%(name)s - %(message)s"

    FORMATS = {
        logging.DEBUG: CYAN + "%(levelname)s" + reset + " - " + format_str,
        logging.INFO: GREEN + "%(levelname)s" + reset + " - " + format_str,
        logging.WARNING: YELLOW + "%(levelname)s" + reset + " - " + format_str,
        logging.ERROR: RED + "%(levelname)s" + reset + " - " + format_str,
    }

    def format(self, record: logging.LogRecord) -> str:
        fmt = self.FORMATS.get(record.levelno, self.FORMATS[logging.ERROR])
        return logging.Formatter(fmt).format(record)


def configure_logging(level: int = logging.WARNING) -> logging.Logger:
    """Attach a single coloured stderr handler to the package logger."""
    logger = logging.getLogger("ageleak")

    if logger.hasHandlers():
        logger.handlers.clear()

    handler = logging.StreamHandler()
    handler.setFormatter(LevelFormatter())
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False

    return logger


def verbosity_level(verbose: int) -> int:
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    return logging.WARNING
