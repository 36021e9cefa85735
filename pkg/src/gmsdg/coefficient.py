"""Piecewise-constant high-contrast permeability fields."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mesh import PartitionedMesh


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Permeability on the fine cells of a partitioned mesh.

    ``cells[gy, gx]`` is the value on global cell ``(gx, gy)``; ``kappa[i, e]``
    is the same data laid out per block element (both triangles of a cell
    share the cell value).
    """

    cells: np.ndarray
    kappa: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def eta(self) -> float:
        return float(self.cells.max() / self.cells.min())

    @property
    def kmin(self) -> float:
        return float(self.cells.min())

    @property
    def kmax(self) -> float:
        return float(self.cells.max())


def cells_to_elements(cells: np.ndarray, M: int, m: int) -> np.ndarray:
    # (by, iy, bx, ix) -> (by, bx, iy, ix) -> one row per block, two triangles per cell
    per_block = cells.reshape(M, m, M, m).transpose(0, 2, 1, 3).reshape(M * M, m * m)
    return np.repeat(per_block, 2, axis=1)


def from_raster(grid, mesh: PartitionedMesh, provenance: dict | None = None) -> CoefficientField:
    """Build a field from an ``(M*m) x (M*m)`` array; row ``r`` is fine row ``y = r*h``."""
    grid = np.array(grid, dtype=float)
    n = mesh.M * mesh.m
    if grid.shape != (n, n):
        raise ValueError(f"raster is {grid.shape}, mesh needs ({n}, {n})")
    if not np.all(np.isfinite(grid)) or np.any(grid <= 0):
        raise ValueError("raster entries must be finite and strictly positive")
    grid.setflags(write=False)
    kappa = cells_to_elements(grid, mesh.M, mesh.m)
    kappa.setflags(write=False)
    return CoefficientField(grid, kappa, dict(provenance or {"source": "array"}))


def constant(mesh: PartitionedMesh, value: float = 1.0) -> CoefficientField:
    n = mesh.M * mesh.m
    return from_raster(np.full((n, n), float(value)), mesh, {"generator": "constant", "value": value})


def synth_channels_inclusions(
    mesh: PartitionedMesh,
    eta: float,
    seed: int = 0,
    n_channels: int | None = None,
    channel_blocks: tuple[int, int] = (2, 4),
    inclusion_prob: float = 0.6,
    inclusion_size: tuple[int, int] = (2, 3),
    channel_gaps: bool = False,
) -> CoefficientField:
    """Seeded stand-in for a channels-and-islands medium.

    Background value 1, value ``eta`` on thin (one cell) horizontal or
    vertical channels spanning several blocks and on square inclusions
    strictly inside blocks. Every block receives at most one feature, so each
    block holds at most one connected high-conductivity region. With
    ``channel_gaps`` the channels stop one cell short of every block
    boundary instead of running through it.

    The geometry depends only on ``(mesh, seed, layout parameters)``;
    ``eta`` only sets the value.
    """
    if not eta >= 1:
        raise ValueError(f"contrast must be >= 1, got {eta}")
    M, m = mesh.M, mesh.m
    n = M * m
    rng = np.random.default_rng(seed)
    if n_channels is None:
        n_channels = max(1, (2 * M) // 3)
    mask = np.zeros((n, n), dtype=bool)
    used = np.zeros((M, M), dtype=bool)

    lo_off, hi_off = (1, m - 2) if m >= 3 else (0, m - 1)
    for c in range(n_channels):
        horizontal = c % 2 == 0
        for _ in range(64):
            length = int(rng.integers(channel_blocks[0], channel_blocks[1] + 1))
            length = min(length, M)
            fixed = int(rng.integers(M))
            start = int(rng.integers(0, M - length + 1))
            offset = int(rng.integers(lo_off, hi_off + 1))
            span = slice(start, start + length)
            taken = used[fixed, span] if horizontal else used[span, fixed]
            if taken.any():
                continue
            line = fixed * m + offset
            run = np.zeros(n, dtype=bool)
            run[start * m:(start + length) * m] = True
            if channel_gaps and m >= 3:
                run[np.arange(n) % m == 0] = False
                run[np.arange(n) % m == m - 1] = False
            if horizontal:
                mask[line, run] = True
                used[fixed, span] = True
            else:
                mask[run, line] = True
                used[span, fixed] = True
            break

    if m >= 4:
        for by in range(M):
            for bx in range(M):
                if used[by, bx] or rng.random() >= inclusion_prob:
                    continue
                s = int(rng.integers(inclusion_size[0], inclusion_size[1] + 1))
                s = max(1, min(s, m - 2))
                ix = int(rng.integers(1, m - s))
                iy = int(rng.integers(1, m - s))
                mask[by * m + iy:by * m + iy + s, bx * m + ix:bx * m + ix + s] = True
                used[by, bx] = True

    grid = np.where(mask, float(eta), 1.0)
    prov = {
        "generator": "channels_inclusions", "eta": float(eta), "seed": int(seed),
        "n_channels": int(n_channels), "channel_blocks": list(channel_blocks),
        "inclusion_prob": float(inclusion_prob), "inclusion_size": list(inclusion_size),
        "channel_gaps": bool(channel_gaps),
    }
    return from_raster(grid, mesh, prov)


def read_raster(path) -> np.ndarray:
    """Read the ``rows cols`` + row-major values text format."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'rows cols' header")
    rows, cols = int(tokens[0]), int(tokens[1])
    values = np.array([float(t) for t in tokens[2:]])
    if values.size != rows * cols:
        raise ValueError(f"{path}: header says {rows}x{cols}, found {values.size} values")
    return values.reshape(rows, cols)


def write_raster(path, grid) -> None:
    grid = np.asarray(grid, dtype=float)
    lines = [f"{grid.shape[0]} {grid.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in grid]
    Path(path).write_text("\n".join(lines) + "\n")
