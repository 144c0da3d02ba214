import argparse
import logging
import sys

from pyefc.logging_utility.logger import runner_logger, set_package_level
from pyefc.misc.commands import COMMANDS, ExperimentConfig, run
from pyefc.misc.exceptions import (ConfigError, MeasureError, MultipleClosedClasses, NumericalFailure, OutputError,
                                   PartitionError, StateSpaceTooLarge)
from pyefc.util.export import FORMATS

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def add_arguments(parser):
    parser.add_argument('command', nargs='?', choices=sorted(COMMANDS),
                        help='The command to run; defaults to the `command` key of the configuration.')
    parser.add_argument('--config', '-c', required=True, help='YAML (or JSON) experiment configuration.')
    parser.add_argument('--out', '-o', default=None, help='Output directory, overriding the configuration.')
    parser.add_argument('--seed', type=int, default=None, help='Master seed, overriding the configuration.')
    parser.add_argument('--threads', type=int, default=None, help='Cap on worker threads.')
    parser.add_argument('--format', dest='fmt', choices=FORMATS, default='csv', help='Format of the tables.')
    parser.add_argument('--verbose', '-v', action='count', default=0, help='INFO with -v, DEBUG with -vv.')


def main(args=None) -> int:
    parser = argparse.ArgumentParser(prog='pyefc', description='Exact and simulated restricted EFC chains.')
    add_arguments(parser)
    args = parser.parse_args(args)
    if args.verbose:
        set_package_level(logging.DEBUG if args.verbose > 1 else logging.INFO)

    try:
        config = ExperimentConfig.from_file(args.config)
        record = run(config, args.command, args.out, args.fmt, seed=args.seed, threads=args.threads)
    except (ConfigError, MeasureError, PartitionError, StateSpaceTooLarge) as error:
        runner_logger.error(str(error))
        print(error, file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalFailure, MultipleClosedClasses) as error:
        runner_logger.error(str(error))
        print(error, file=sys.stderr)
        return EXIT_NUMERICAL
    except (OutputError, OSError) as error:
        runner_logger.error(str(error))
        print(error, file=sys.stderr)
        return EXIT_IO

    for path, _ in record.files:
        print(path)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
