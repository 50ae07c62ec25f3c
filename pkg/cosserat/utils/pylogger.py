import logging


def get_pylogger(name: str = __name__) -> logging.Logger:
    """Returns a command line logger for ``name``.

    Handlers and formatting come from the Hydra job logging config (colorlog), so module loggers only
    need to exist in the right place of the hierarchy.

    :param name: The name of the logger, defaults to ``__name__``.

    :return: A logger object.
    """
    return logging.getLogger(name)
