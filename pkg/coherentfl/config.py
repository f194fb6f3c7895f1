"""
Process-level settings loaded from the environment.
"""
import logging
import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_LEVEL = os.environ.get("COHERENTFL_LOG_LEVEL", "INFO")
OUTPUT_DIR = os.environ.get("COHERENTFL_OUTPUT_DIR", "out")
HOST = os.environ.get("COHERENTFL_HOST", "127.0.0.1")
PORT = int(os.environ.get("PORT", "8000"))

# Monte Carlo audits are evaluated in chunks of this many trials
MC_CHUNK = int(os.environ.get("COHERENTFL_MC_CHUNK", "2000"))


def get_thread_count() -> int:
    """
    Parallelism cap for per-device training and independent runs.

    Read on every call so tests and the command line can change ``COHERENTFL_THREADS``.
    """
    raw = os.environ.get("COHERENTFL_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer COHERENTFL_THREADS={raw!r}")
        return 1
    return max(1, threads)


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Configure root logging once for an entry point."""
    logging.basicConfig(level=level, format=LOG_FORMAT)
