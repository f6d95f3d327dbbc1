#!/usr/bin/env python3
"""Grouped experiment table at the full reference budget (20,000 x 500).

Thin wrapper over `ssdiag mc-table`; pass --seed, --out, --workers, etc.
Expect hours of runtime at this budget; the desk-scale default
(2,000 x 200) is what `ssdiag mc-table` runs without overrides.
"""

import sys

from ssdiag.cli import main

if __name__ == "__main__":
    sys.exit(main(["mc-table", "--reps", "20000", "--perms", "500", *sys.argv[1:]]))
