"""Logging module: one named logger, console plus the run.log of the data directory."""
import logging

LOGGER_ID = "model_cache"
FILE_FORMAT = "%(asctime)s %(levelname)s %(threadName)s %(message)s"


def setup_logger(log_file, write_to_console=True, level=logging.INFO):
    logger = logging.getLogger(LOGGER_ID)
    logger.setLevel(level)
    # repeated setup (tests, several commands in one process) must not duplicate lines
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    if write_to_console:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)
        logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
        logger.addHandler(file_handler)
    return logger


def to_log(msg, level=logging.INFO):
    logging.getLogger(LOGGER_ID).log(level, msg)
