"""Full report (tower, real bounds, complex bounds) for the Feigenbaum map.

    python scripts/run_feigenbaum.py [--out DIR] [--depth N]
"""

import sys
from pathlib import Path

from renormlab.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "feigenbaum.toml"

if __name__ == "__main__":
    raise SystemExit(main(["report", "--config", str(CONFIG), *sys.argv[1:]]))
