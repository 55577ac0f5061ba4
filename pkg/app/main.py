# app/main.py
import argparse
import sys
from typing import Optional, Sequence

from loguru import logger

from app.cli.commands import calibration, landscape, runs
from app.core.config import settings
from app.core.exceptions import TunnelingError
from app.core.logging import configure_logging
from app.core.resources import to_json_text
from app.models.schemas import ErrorResponse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtunnel",
        description="Moment-dynamics and Crank-Nicolson study of tunneling in a quartic double well",
    )
    parser.add_argument("--log-level", help=f"loguru level (default {settings.LOG_LEVEL})")
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # 注册子命令
    landscape.register(subparsers)
    runs.register(subparsers)
    calibration.register(subparsers)
    return parser


def _report(error: ErrorResponse) -> None:
    print(to_json_text(error), file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        return args.handler(args)
    except TunnelingError as e:
        logger.error(f"{e.error}: {e.message}")
        _report(e.to_response())
        return e.exit_code
    except Exception as e:
        logger.exception(f"未处理的错误: {e}")
        _report(ErrorResponse(error="InternalError", message=str(e), detail=type(e).__name__))
        return 1


if __name__ == "__main__":
    sys.exit(main())
