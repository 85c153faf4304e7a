import logging
import sys
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path

LOG_FILE_NAME = "faultfusion.log"
FILE_HANDLER_NAME = "faultfusion.file"
CONSOLE_HANDLER_NAME = "faultfusion.console"


def setup_logging(
    log_level: str = "INFO",
    third_party_log_level: str = "WARNING",
    logs_path: str = "./logs",
) -> logging.Logger:
    """
    Attach the package's file and stdout handlers to the root logger.

    ``logs_path`` is the directory the ``faultfusion.log`` file is written to. The
    file is rotated at midnight UTC and the last 7 days are kept.

    Handlers from an earlier call are replaced, so running several commands in
    one process never logs a record twice and always writes to the latest
    ``logs_path``.

    ``third_party_log_level`` pins the ``PIL`` logger, which chatters about every
    PNG chunk it writes at DEBUG, independently of the package-wide ``log_level``.
    """
    log_dir = Path(logs_path)
    log_dir.mkdir(parents=True, exist_ok=True)
    level = getattr(logging, log_level.upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in [h for h in root_logger.handlers if h.name in (FILE_HANDLER_NAME, CONSOLE_HANDLER_NAME)]:
        root_logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    file_handler = TimedRotatingFileHandler(
        log_dir / LOG_FILE_NAME,
        when="midnight",
        backupCount=7,
        utc=True,
        encoding="utf-8",
    )
    stream_handler = logging.StreamHandler(sys.stdout)
    for handler, name in ((file_handler, FILE_HANDLER_NAME), (stream_handler, CONSOLE_HANDLER_NAME)):
        handler.set_name(name)
        handler.setFormatter(formatter)
        handler.setLevel(level)
        root_logger.addHandler(handler)

    logger = logging.getLogger("faultfusion")
    logger.setLevel(level)
    logger.propagate = True

    logging.getLogger("PIL").setLevel(getattr(logging, third_party_log_level.upper(), logging.WARNING))

    return logger
