#!/usr/bin/env python3
"""
Entry point for running the toolkit as a module.
Usage: python -m hdrvqa <command> ...
"""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
