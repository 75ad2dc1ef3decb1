import hashlib
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar, Union

import numpy as np

from whipchain.constants import THREADS_ENV_VAR
from whipchain.datatypes import ValidationError

T = TypeVar("T")
R = TypeVar("R")


def configure_logging(level: Optional[Union[int, str]] = None):
    if level is None:
        level = logging.INFO
    logging.root.setLevel(level)
    if any(h.get_name() == "whipchain" for h in logging.root.handlers):
        return
    handler = logging.StreamHandler(stream=sys.stderr)
    handler.set_name("whipchain")
    formatter = logging.Formatter("[%(asctime)s] %(levelname)s [%(name)s] %(message)s")
    handler.setFormatter(formatter)
    logging.root.addHandler(handler)


def thread_limit() -> int:
    """ Worker cap for internal thread pools, read from WHIPCHAIN_THREADS """
    value = os.environ.get(THREADS_ENV_VAR, "")
    if not value:
        return os.cpu_count() or 1
    try:
        result = int(value)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV_VAR} must be an integer, got '{value}'")
    if result < 1:
        raise ValidationError(f"{THREADS_ENV_VAR} must be >= 1, got {result}")
    return result


def parallel_map(func: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """ Map over independent work items, preserving input order in the result """
    items = list(items)
    workers = min(thread_limit(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def file_checksum(file_path: str) -> str:
    """ sha256 hex digest of a file """
    digest = hashlib.sha256()
    with open(file_path, "rb") as infile:
        for chunk in iter(lambda: infile.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_csv(file_path: str, header: Sequence[str], columns: Sequence[np.ndarray]):
    """ Write equal-length columns as CSV with full float precision """
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(file_path, data, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def observed_order(resolutions: Sequence[float], errors: Sequence[float]) -> float:
    """
    Least-squares slope of log(error) against log(resolution), sign flipped so that
    error ~ C * resolution**(-p) gives p.
    """
    resolutions = np.asarray(resolutions, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if resolutions.size < 2 or np.any(errors <= 0.0):
        return float("nan")
    slope, _ = np.polyfit(np.log(resolutions), np.log(errors), 1)
    return float(-slope)


def planar_cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """ z-component of the cross product of planar vectors stored row-wise """
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
