import logging

import pytest

from ageleak.logging_utils import LevelFormatter, configure_logging, verbosity_level


@pytest.fixture
def package_logger():
    logger = logging.getLogger("ageleak")
    yield logger
    logger.handlers.clear()
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


def test_configure_logging_installs_single_handler(package_logger):
    configure_logging(logging.INFO)
    configure_logging(logging.DEBUG)
    assert len(package_logger.handlers) == 1
    assert isinstance(package_logger.handlers[0].formatter, LevelFormatter)
    assert package_logger.level == logging.DEBUG
    assert package_logger.propagate is False


def test_level_formatter_colours_by_level():
    record = logging.LogRecord("ageleak.oracle", logging.WARNING, __file__, 1, "horizon %d", (12,), None)
    text = LevelFormatter().format(record)
    assert text.startswith(LevelFormatter.YELLOW)
    assert text.endswith("ageleak.oracle - horizon 12")


@pytest.mark.parametrize(
    "verbose, level", [(0, logging.WARNING), (1, logging.INFO), (2, logging.DEBUG), (5, logging.DEBUG)]
)
def test_verbosity_level(verbose, level):
    assert verbosity_level(verbose) == level
