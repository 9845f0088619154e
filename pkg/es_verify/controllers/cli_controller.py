# controllers/cli_controller.py
import argparse
import logging
import sys
from typing import Dict, Optional, Sequence

from es_verify.config import load_config
from es_verify.domain import Event, EventType
from es_verify.services.core import EventBus
from es_verify.services.error_handler import EXIT_USAGE, ErrorHandler
from es_verify.utils.logging_config import setup_logging
from es_verify.utils.parallel import default_jobs
from es_verify.utils.serialization import parse_assignments
from .command_handlers import HANDLERS, OUTPUT_FORMATS, CliContext
from .interfaces import ICommandHandler

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _add_global_arguments(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Global flags; subcommand copies default to SUPPRESS so they never mask the top-level value."""
    def default(value):
        return argparse.SUPPRESS if suppress else value

    group = parser.add_argument_group("global options")
    group.add_argument("--format", choices=OUTPUT_FORMATS, default=default(None), dest="output_format")
    group.add_argument("--out", default=default(None), help="output file; stdout when omitted")
    group.add_argument("--jobs", type=int, default=default(None), help="worker processes; 0 = all cores")
    group.add_argument("--seed", type=int, default=default(None))
    group.add_argument("--config", default=default(None), help="JSON file merged over the shipped defaults")
    group.add_argument("--set", action="append", default=default(None), dest="overrides",
                       metavar="SECTION.KEY=VALUE", help="configuration override, repeatable")
    group.add_argument("--log-level", choices=LOG_LEVELS, default=default(None))
    group.add_argument("--log-file", default=default(None))


class CliController:
    """
    Parses the command line, loads configuration, wires the event bus and
    dispatches to the subcommand handlers.
    """

    def __init__(self):
        self.event_bus = EventBus()
        self.error_handler = ErrorHandler(self.event_bus)
        self.context = CliContext(self.event_bus, self.error_handler)
        self.handlers: Dict[str, ICommandHandler] = {cls.name: cls(self.context) for cls in HANDLERS}
        self.logger = logging.getLogger(__name__)
        self.parser = self.build_parser()
        self._setup_event_handlers()

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="es-verify",
            description="Simulate the (1+1)-ES and check its progress and step-size bounds empirically.",
        )
        _add_global_arguments(parser, suppress=False)
        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True
        for name, handler in self.handlers.items():
            sub = subparsers.add_parser(name, help=handler.help, description=handler.help)
            handler.add_arguments(sub)
            _add_global_arguments(sub, suppress=True)
        return parser

    def _setup_event_handlers(self) -> None:
        self.event_bus.subscribe(EventType.EXPERIMENT_STARTED, self._log_event)
        self.event_bus.subscribe(EventType.EXPERIMENT_COMPLETED, self._log_event)
        self.event_bus.subscribe(EventType.CHECK_COMPLETED, self._log_event)
        self.event_bus.subscribe(EventType.REPLICATE_COMPLETED, self._log_replicate)

    def _log_event(self, event: Event) -> None:
        self.logger.info(f"{event.type.name.lower()}: {event.data}")

    def _log_replicate(self, event: Event) -> None:
        self.logger.debug(f"replicate {event.data.get('group')}/{event.data.get('replicate')}: "
                          f"{event.data.get('outcome')}")

    def parse(self, argv: Optional[Sequence[str]]) -> argparse.Namespace:
        return self.parser.parse_args(list(argv) if argv is not None else None)

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        try:
            args = self.parse(argv)
        except SystemExit as e:
            # argparse exits 0 for --help and 2 for bad usage
            return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

        try:
            config = load_config(args.config, parse_assignments(args.overrides))
            setup_logging(args.log_file, args.log_level or config.runtime.log_level)
            self.context.config = config
            self.context.output_format = args.output_format or config.runtime.output_format
            self.context.out = args.out
            self.context.seed = args.seed if args.seed is not None else config.runtime.seed
            jobs = args.jobs if args.jobs is not None else config.runtime.jobs
            self.context.jobs = jobs if jobs and jobs > 0 else default_jobs()
            self.logger.debug(f"{args.command}: seed={self.context.seed}, jobs={self.context.jobs}")
            status = self.handlers[args.command].execute(args)
            self.logger.debug(f"{args.command}: events {dict((k.name, v) for k, v in self.event_bus.published.items())}, "
                              f"{self.event_bus.handler_failures} handler failure(s)")
            return status
        except Exception as e:
            status = self.error_handler.handle_error(e, context=args.command)
            sys.stderr.write(self.error_handler.format_user_message(e) + "\n")
            return status


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point for the command line; returns the process exit status."""
    return CliController().run(argv)

