"""Rank-2 real grids: the unit of all numeric I/O in the toolchain.

Data is a numpy array of shape (ny, nx) so the C memory layout matches the
row-major convention fixed in region.py (linear index = x + y*nx).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .region import Extent, Halo, Rect, interior_of

DTYPES = {"f32": np.float32, "f64": np.float64}


def dtype_of(precision: str) -> np.dtype:
    try:
        return np.dtype(DTYPES[precision])
    except KeyError:
        raise ValueError(f"unknown precision {precision!r}") from None


@dataclass
class Field:
    full: Extent
    data: np.ndarray
    precision: str = "f64"

    def __post_init__(self):
        expected = (self.full.ny, self.full.nx)
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} != {expected}")
        if self.data.dtype != dtype_of(self.precision):
            raise ValueError(f"dtype {self.data.dtype} does not match "
                             f"precision {self.precision}")

    @classmethod
    def zeros(cls, full: Extent, precision: str = "f64") -> "Field":
        return cls(full, np.zeros((full.ny, full.nx), dtype_of(precision)),
                   precision)

    @classmethod
    def from_array(cls, arr, precision: str = "f64") -> "Field":
        data = np.asarray(arr, dtype_of(precision))
        ny, nx = data.shape
        return cls(Extent(nx, ny), data, precision)

    def copy(self) -> "Field":
        return Field(self.full, self.data.copy(), self.precision)

    def rect_view(self, rect: Rect) -> np.ndarray:
        return self.data[rect.y0:rect.y0 + rect.ny, rect.x0:rect.x0 + rect.nx]

    def interior(self, halo: Halo) -> np.ndarray:
        return self.rect_view(interior_of(self.full, halo))

    def content_hash(self) -> bytes:
        return self.data.tobytes()
