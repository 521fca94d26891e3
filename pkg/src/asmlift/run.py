"""Process entry point: logging setup, then a CLI subcommand or the HTTP server."""

import logging
import sys

from asmlift.cli import build_parser, dispatch
from asmlift.config import API_HOST, API_PORT


def serve() -> None:
    import uvicorn  # noqa: PLC0415

    uvicorn.run("asmlift.api:app", host=API_HOST, port=API_PORT)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
    )
    if args.command == "serve":
        serve()
        return 0
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
