"""
Runs the simulator CLI from a source checkout
"""

import sys

from vfarm.cli import main

if __name__ == '__main__':
    sys.exit(main())
