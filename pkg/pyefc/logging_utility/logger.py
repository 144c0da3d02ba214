import logging

partition_logger_name = 'Partition'
partition_logger_level = logging.WARNING

rates_logger_name = 'Rates'
rates_logger_level = logging.WARNING

equilibrium_logger_name = 'Equilibrium'
equilibrium_logger_level = logging.WARNING

simulator_logger_name = 'Simulator'
simulator_logger_level = logging.WARNING

runner_logger_name = 'Runner'
runner_logger_level = logging.WARNING

timer_logger_name = 'Timer'
timer_logger_level = logging.WARNING

formatter = logging.Formatter('%(asctime)s [%(name)s]:%(levelname)s: %(message)s', '%Y-%m-%d %H:%M:%S')
stream_handler = logging.StreamHandler()
stream_handler.setFormatter(formatter)


def _make_logger(name, level):
    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.addHandler(stream_handler)
    logger.propagate = False
    return logger


partition_logger = _make_logger(partition_logger_name, partition_logger_level)
rates_logger = _make_logger(rates_logger_name, rates_logger_level)
equilibrium_logger = _make_logger(equilibrium_logger_name, equilibrium_logger_level)
simulator_logger = _make_logger(simulator_logger_name, simulator_logger_level)
runner_logger = _make_logger(runner_logger_name, runner_logger_level)
timer_logger = _make_logger(timer_logger_name, timer_logger_level)

package_loggers = (partition_logger, rates_logger, equilibrium_logger, simulator_logger, runner_logger,
                   timer_logger)


def set_package_level(level):
    """
    Set the level of every package logger at once (used by the command line `--verbose` flag).

    :param level: A logging level name or number.
    """
    for logger in package_loggers:
        logger.setLevel(level)
