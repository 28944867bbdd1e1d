import logging
import os

from dotenv import load_dotenv

load_dotenv()

logging.basicConfig(
    level=os.getenv("BRIDGELAB_LOG_LEVEL", "INFO").upper(),
    format="%(levelname)s - %(message)s",
)

from bridgelab.commands import cli  # noqa: E402


if __name__ == "__main__":
    cli(prog_name="bridgelab")
