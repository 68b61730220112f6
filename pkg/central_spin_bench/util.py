from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Iterator, Optional, Sequence, TypeVar

import more_itertools
import numpy as np
from rich.console import Console

from . import constants

T = TypeVar("T")


def stderr_console() -> Console:
    return Console(stderr=True)


def print_stderr(*args, **kwargs):
    stderr_console().print(*args, **kwargs)


def warn(message: str):
    print_stderr(f":warning: [yellow]{message}[/]")


def time_chunks(times: np.ndarray, row_elements: int) -> Iterator[slice]:
    """
    Split a time axis into slices so that each slice times ``row_elements`` stays below
    :data:`constants.EVAL_CHUNK_ELEMENTS`.
    """
    chunk_size = max(1, constants.EVAL_CHUNK_ELEMENTS // max(1, row_elements))
    for chunk in more_itertools.chunked(range(len(times)), chunk_size):
        yield slice(chunk[0], chunk[-1] + 1)


def ordered_map(fn, items: Sequence[T], workers: Optional[int] = None) -> Iterable:
    """
    Map ``fn`` over ``items`` keeping input order. With ``workers > 1`` the calls run on a
    thread pool; numpy releases the GIL in the heavy kernels.
    """
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
