#!/usr/bin/env python3
"""Run the default verification suite and write a JSON report.

Usage: python scripts/run_suite.py [out.json] [--workers N] [--level L]
"""

import sys

from gblab.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    out = args[0] if args and not args[0].startswith("-") else "suite_report.json"
    rest = args[1:] if args and not args[0].startswith("-") else args
    raise SystemExit(main(["run", "--json", out, *rest]))
