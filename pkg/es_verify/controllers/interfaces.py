# controllers/interfaces.py
import argparse
from abc import ABC, abstractmethod


class ICommandHandler(ABC):
    """One CLI subcommand: declares its flags and executes parsed arguments."""

    name: str
    help: str

    @abstractmethod
    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        pass

    @abstractmethod
    def execute(self, args: argparse.Namespace) -> int:
        """Run the command and return the process exit status."""
        pass
