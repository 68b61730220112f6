from os import PathLike
from typing import Union

PathOrStr = Union[PathLike, str]

# Sector labels m are half-integers; they are exact in binary floating point.
SectorLabel = float
