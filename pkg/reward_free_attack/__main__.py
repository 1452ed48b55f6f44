"""Main entry point for running as a module."""

import sys

from reward_free_attack import main

if __name__ == "__main__":
    sys.exit(main())
