#!/usr/bin/env python3
"""
Command-line entry point for the Diagonal Ideals Lab
Reports go to stdout (text or JSON); logs and the banner go to stderr
"""
import logging
import sys
from pathlib import Path

# Add paths
sys.path.insert(0, str(Path(__file__).parent))

from config.settings import LOG_FORMAT, LOG_LEVEL, VERSION
from backend.cli import execute, output_format, render_table


def print_banner():
    print(f"""
╔══════════════════════════════════════════════════════════════╗
║                 DIAGONAL IDEALS LAB  v{VERSION:<8}                ║
║                                                              ║
║  Nuclear, integral, extendible and bounded norms of          ║
║  diagonal multilinear operators on l_p spaces                ║
╚══════════════════════════════════════════════════════════════╝
    """, file=sys.stderr)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT, stream=sys.stderr)

    fmt = output_format(argv)
    if fmt == 'text' and sys.stderr.isatty():
        print_banner()

    report, code = execute(argv)
    if report is not None:
        print(render_table(report, fmt))
    return code


if __name__ == '__main__':
    sys.exit(main())
