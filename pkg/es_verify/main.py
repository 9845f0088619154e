#!/usr/bin/env python3
import sys

from es_verify.controllers import parse_and_dispatch


def main():
    """Application entry point"""
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
