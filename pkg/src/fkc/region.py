"""Halo/region index arithmetic shared by the whole toolchain.

Conventions, fixed once here: a halo is [left, right, down, up] in cells;
x indexes columns (left/right), y indexes rows (down/up); indices are
zero-based and arrays are row-major, linear index = x + y*nx.
"""

from __future__ import annotations

from dataclasses import dataclass


class HaloTooLarge(ValueError):
    """Halo margins leave no interior cells along some axis."""


@dataclass(frozen=True)
class Halo:
    left: int
    right: int
    down: int
    up: int

    def __post_init__(self):
        if min(self.left, self.right, self.down, self.up) < 0:
            raise ValueError(f"halo components must be >= 0, got {self}")

    @classmethod
    def of(cls, values) -> "Halo":
        left, right, down, up = values
        return cls(left, right, down, up)

    @property
    def deficit_x(self) -> int:
        return self.left + self.right

    @property
    def deficit_y(self) -> int:
        return self.down + self.up

    def __iter__(self):
        return iter((self.left, self.right, self.down, self.up))


ZERO_HALO = Halo(0, 0, 0, 0)


@dataclass(frozen=True)
class Extent:
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"extents must be >= 1, got {self}")

    @property
    def cells(self) -> int:
        return self.nx * self.ny


@dataclass(frozen=True)
class Rect:
    x0: int
    y0: int
    nx: int
    ny: int

    @property
    def extent(self) -> Extent:
        return Extent(self.nx, self.ny)


def interior_of(full: Extent, halo: Halo) -> Rect:
    """Rect of the interior cells left after stripping the halo margins."""
    nx = full.nx - halo.left - halo.right
    ny = full.ny - halo.down - halo.up
    if nx < 1 or ny < 1:
        raise HaloTooLarge(f"halo {halo} leaves no interior in extent {full}")
    return Rect(halo.left, halo.down, nx, ny)


def local_tile_extent(group: Extent, halo: Halo) -> Extent:
    """Extent of a work-group's local tile: the group block plus halo margins."""
    return Extent(group.nx + halo.left + halo.right,
                  group.ny + halo.down + halo.up)


def local_linear_index(lx: int, ly: int, group_nx: int, halo: Halo) -> int:
    """Row-major index into a local tile of width group_nx + left + right."""
    return lx + ly * (group_nx + halo.left + halo.right)


def global_coord(group_id: tuple[int, int], local: tuple[int, int],
                 group: Extent) -> tuple[int, int]:
    """Full-array cell covered by tile cell `local` of group `group_id`.

    Tile origins stride by the group extent, so cell (0,0) of group (0,0)
    lands on the global halo corner and interior tiles overlap their
    neighbours' owned cells by the halo width.  The mapping is independent
    of any halo.
    """
    gx, gy = group_id
    lx, ly = local
    return (gx * group.nx + lx, gy * group.ny + ly)


def owned_cell(group_id: tuple[int, int], thread: tuple[int, int],
               group: Extent, out_halo: Halo) -> tuple[int, int]:
    """Full-array cell a thread is allowed to write, for a given output halo."""
    tx, ty = thread
    gx, gy = group_id
    return (out_halo.left + gx * group.nx + tx,
            out_halo.down + gy * group.ny + ty)
