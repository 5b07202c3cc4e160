"""Deterministic top-down rasterization of a workspace.

Orthographic overhead view: within a cell only the topmost block is
painted. Depth is metric and small-is-near from the camera: the table
plane sits at 1.0 and each stack level subtracts 0.1. The yellow-is-near
display convention is a colormap concern handled only in the exported
preview image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from PIL import Image

from .world import BlockState, Cell, Workspace

RASTER_PX = 128
LEVEL_HEIGHT = 0.1
TABLE_DEPTH = 1.0
MARGIN_FRAC = 0.1

COLOR_RGB = {
    "red": (214, 64, 52),
    "green": (72, 158, 84),
    "blue": (66, 98, 204),
    "yellow": (232, 202, 58),
    "purple": (148, 78, 180),
    "orange": (236, 140, 46),
}
TABLE_RGB = (186, 186, 186)

# colormap endpoints for the depth preview: cool at the table plane,
# warm close to the sensor
_COOL = np.array((46, 64, 156), dtype=np.float64)
_WARM = np.array((248, 222, 64), dtype=np.float64)


class BBox(NamedTuple):
    """Half-open pixel box: x0 <= x < x1, y0 <= y < y1."""
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def area(self) -> int:
        return max(0, self.x1 - self.x0) * max(0, self.y1 - self.y0)


@dataclass
class Raster:
    width: int
    height: int
    rgb: np.ndarray    # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float32, distance from camera


def cell_size(grid_side: int, raster_px: int = RASTER_PX) -> int:
    return raster_px // grid_side


def cell_box(cell: Cell, grid_side: int, raster_px: int = RASTER_PX) -> BBox:
    s = cell_size(grid_side, raster_px)
    return BBox(cell.col * s, cell.row * s, (cell.col + 1) * s, (cell.row + 1) * s)


def _footprint_corners(state: BlockState, grid_side: int, raster_px: int):
    """Corners of the block's rotated square footprint in pixel coords."""
    s = cell_size(grid_side, raster_px)
    cx = (state.cell.col + 0.5) * s
    cy = (state.cell.row + 0.5) * s
    half = s * (0.5 - MARGIN_FRAC)
    cos_y, sin_y = math.cos(state.yaw), math.sin(state.yaw)
    corners = []
    for dx, dy in ((-half, -half), (half, -half), (half, half), (-half, half)):
        corners.append((cx + dx * cos_y - dy * sin_y, cy + dx * sin_y + dy * cos_y))
    return corners


def footprint_box(state: BlockState, grid_side: int,
                  raster_px: int = RASTER_PX) -> BBox:
    """Axis-aligned box of the footprint polygon, clipped to the cell.

    Occluded blocks get the same box as if they were visible; ground truth
    for history-recalled references needs it.
    """
    corners = _footprint_corners(state, grid_side, raster_px)
    cb = cell_box(state.cell, grid_side, raster_px)
    x0 = max(cb.x0, math.floor(min(x for x, _ in corners)))
    y0 = max(cb.y0, math.floor(min(y for _, y in corners)))
    x1 = min(cb.x1, math.ceil(max(x for x, _ in corners)))
    y1 = min(cb.y1, math.ceil(max(y for _, y in corners)))
    return BBox(x0, y0, x1, y1)


def block_box(ws: Workspace, block_id: str, raster_px: int = RASTER_PX) -> BBox:
    return footprint_box(ws.block(block_id), ws.grid_side, raster_px)


def render(ws: Workspace, raster_px: int = RASTER_PX) -> Raster:
    rgb = np.empty((raster_px, raster_px, 3), dtype=np.uint8)
    rgb[:, :] = TABLE_RGB
    depth = np.full((raster_px, raster_px), TABLE_DEPTH, dtype=np.float32)
    s = cell_size(ws.grid_side, raster_px)
    half = s * (0.5 - MARGIN_FRAC)
    tops: dict[Cell, BlockState] = {}
    for b in ws.blocks:
        cur = tops.get(b.cell)
        if cur is None or b.level > cur.level:
            tops[b.cell] = b
    for cell, top in tops.items():
        x0, y0 = cell.col * s, cell.row * s
        # pixel centers of the cell, mapped into the block's rotated frame
        xs = np.arange(x0, x0 + s) + 0.5 - (x0 + s / 2.0)
        ys = np.arange(y0, y0 + s) + 0.5 - (y0 + s / 2.0)
        gx, gy = np.meshgrid(xs, ys)
        cos_y, sin_y = math.cos(top.yaw), math.sin(top.yaw)
        local_x = gx * cos_y + gy * sin_y
        local_y = -gx * sin_y + gy * cos_y
        mask = (np.abs(local_x) <= half) & (np.abs(local_y) <= half)
        rgb[y0:y0 + s, x0:x0 + s][mask] = COLOR_RGB[top.color]
        depth[y0:y0 + s, x0:x0 + s][mask] = np.float32(
            TABLE_DEPTH - LEVEL_HEIGHT * (top.level + 1))
    return Raster(raster_px, raster_px, rgb, depth)


# --- export ----------------------------------------------------------------

def export_rgb(raster: Raster, path) -> None:
    Image.fromarray(raster.rgb, mode="RGB").save(path, format="PNG")


def export_depth_raw(raster: Raster, path) -> None:
    """Raw little-endian float32 grid, row-major."""
    raster.depth.astype("<f4").tofile(path)


def import_depth_raw(path, width: int, height: int) -> np.ndarray:
    return np.fromfile(path, dtype="<f4").reshape(height, width)


def depth_colormap(depth: np.ndarray) -> np.ndarray:
    """Preview colors: depth 1.0 (table) maps to the coolest color and
    nearer surfaces grow warmer."""
    lo = TABLE_DEPTH - LEVEL_HEIGHT * 4
    t = np.clip((TABLE_DEPTH - depth.astype(np.float64)) / (TABLE_DEPTH - lo), 0.0, 1.0)
    out = _COOL[None, None, :] + t[:, :, None] * (_WARM - _COOL)[None, None, :]
    return np.round(out).astype(np.uint8)


def export_depth_vis(raster: Raster, path) -> None:
    Image.fromarray(depth_colormap(raster.depth), mode="RGB").save(path, format="PNG")


def export(raster: Raster, rgb_path, depth_path, depth_vis_path) -> None:
    export_rgb(raster, rgb_path)
    export_depth_raw(raster, depth_path)
    export_depth_vis(raster, depth_vis_path)
