"""
EC Group Census - Main Entry Point
Command line toolkit for the group structures of elliptic curves over prime fields
"""

import sys

from app.api.commands import main

if __name__ == "__main__":
    sys.exit(main())
