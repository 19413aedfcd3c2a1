#!/usr/bin/env python
"""Command-line entry point for running experiment scenes."""
import sys

from asymptotic_plateau.cli import main

if __name__ == '__main__':
    sys.exit(main())
