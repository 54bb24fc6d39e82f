"""
CSV writing helpers
All exported tables go through here so formatting is uniform
"""

import logging
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

logger = logging.getLogger(__name__)

# 12 significant digits for every float column
FLOAT_FORMAT = "%.12g"


def write_csv(
        frame: pd.DataFrame,
        path: Path,
        header_comments: Optional[Dict[str, object]] = None
) -> Path:
    """
    Write a table as CSV with optional `# key=value` comment lines on top

    Args:
        frame: Table to write (header row is always emitted)
        path: Output file path
        header_comments: Metadata written before the header, e.g. seeds

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, "w", encoding="utf-8", newline="") as f:
        if header_comments:
            for key, value in header_comments.items():
                f.write(f"# {key}={value}\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    logger.debug("Wrote %d rows to %s", len(frame), path)
    return path


def read_csv(path: Path) -> pd.DataFrame:
    """Read a CSV written by write_csv (comment lines skipped)"""
    return pd.read_csv(path, comment="#")
