"""Run the command-line front end with ``python -m kse_toolkit``."""

import sys

from kse_toolkit.cli import main

if __name__ == "__main__":
    sys.exit(main())
