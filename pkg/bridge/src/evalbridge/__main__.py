"""Entry point: ``python -m evalbridge [--config PATH]``."""

import argparse
import logging
import sys

from .config import load_config
from .server import serve


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = argparse.ArgumentParser(prog="evalbridge")
    parser.add_argument("--config", default=None, help="flat key=value config file")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    serve(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
