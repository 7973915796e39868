"""
CSV helpers for the plot-ready artifacts.

Files are UTF-8 with a decimal point; lines starting with `#` are comments.
Floats are always written with the same fixed format so that identical runs
produce byte-identical files.
"""
from pathlib import Path
from typing import Iterable, Optional, Union

import pandas as pd

FLOAT_FORMAT = "%.12e"

PathLike = Union[str, Path]


def read_table(path: PathLike, required: Optional[Iterable[str]] = None) -> pd.DataFrame:
    """Read a comment-aware CSV table and check that the required columns exist."""
    frame = pd.read_csv(path, comment="#", skipinitialspace=True, encoding="utf-8")
    frame.columns = [str(c).strip() for c in frame.columns]
    if required is not None:
        missing = [c for c in required if c not in frame.columns]
        if missing:
            raise KeyError(f"{path}: missing column(s) {', '.join(missing)}")
    return frame


def format_table(frame: pd.DataFrame, header_lines: Iterable[str] = ()) -> str:
    comments = "".join(f"# {line}\n" for line in header_lines)
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return comments + body


def write_table(path: PathLike, frame: pd.DataFrame, header_lines: Iterable[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(format_table(frame, header_lines))
    return path
