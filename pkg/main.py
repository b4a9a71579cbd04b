"""Entry point: `python main.py verify reductions --n 4 --seed 7`."""

import sys

from schurlab.cli import main

if __name__ == "__main__":
    sys.exit(main())
