"""Run the adapter as a child process: ``python -m collage_adapter --fixture fx.json``."""

import argparse
import sys

from .server import load_fixture, serve_stdio


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="collage-adapter")
    parser.add_argument("--fixture", required=True, help="fixture JSON mapping images to answers")
    args = parser.parse_args(argv)
    try:
        config = load_fixture(args.fixture)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return serve_stdio(config)


if __name__ == "__main__":
    sys.exit(main())
