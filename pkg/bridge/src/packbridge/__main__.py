"""CLI: run a provider server.

    stablepack-bridge --listen 127.0.0.1:7777 --provider greedy
    stablepack-bridge --listen stdio --provider random --seed 7
"""

import argparse
import sys

from .providers import make_provider
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="stablepack-bridge", description=__doc__)
    parser.add_argument("--listen", default="127.0.0.1:7777", help="HOST:PORT or 'stdio'")
    parser.add_argument("--provider", default="greedy", choices=["greedy", "random"])
    parser.add_argument("--seed", type=int, default=0, help="seed for the random provider")
    args = parser.parse_args(argv)
    serve(args.listen, make_provider(args.provider, args.seed))
    return 0


if __name__ == "__main__":
    sys.exit(main())
