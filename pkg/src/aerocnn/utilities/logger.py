import logging

FORMAT = "%(asctime)s | %(levelname)s | %(message)s"
DATEFMT = "%Y-%m-%d,%H:%M:%S"
DEFAULT_ENDPOINT = "http://logger.local:9000"


class RemoteLogHandler(logging.Handler):
    """Forwards records to a pylognet LoggingClient."""

    def __init__(self, name: str = "aerocnn", endpoint: str = DEFAULT_ENDPOINT, client=None):
        super().__init__()
        if client is None:
            # the remote extra is optional
            from pylognet.client import LoggingClient

            client = LoggingClient(name, endpoint, disable=False)
        from pylognet.client import LogLevel

        self.client = client
        self.levels = {
            logging.DEBUG: LogLevel.DEBUG,
            logging.INFO: LogLevel.INFO,
            logging.WARNING: getattr(LogLevel, "WARNING", LogLevel.INFO),
            logging.ERROR: LogLevel.ERROR,
            logging.CRITICAL: LogLevel.ERROR,
        }

    def emit(self, record):
        try:
            level = self.levels.get(record.levelno, self.levels[logging.INFO])
            self.client.log(self.format(record), level)
        except Exception:
            self.handleError(record)


def setup_logging(log_file=None, level=logging.INFO, remote_endpoint=None):
    formatter = logging.Formatter(FORMAT, datefmt=DATEFMT)

    logging.root.setLevel(level)
    loggers = [logging.getLogger(name) for name in logging.root.manager.loggerDict]
    for logger in loggers:
        logger.setLevel(level)

    for handler in list(logging.root.handlers):
        if getattr(handler, "_aerocnn", False):
            logging.root.removeHandler(handler)
            handler.close()

    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(filename=log_file))
    if remote_endpoint:
        handlers.append(RemoteLogHandler(endpoint=remote_endpoint))

    for handler in handlers:
        handler.setFormatter(formatter)
        handler._aerocnn = True
        logging.root.addHandler(handler)
    return logging.root
