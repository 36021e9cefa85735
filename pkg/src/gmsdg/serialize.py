"""Text solution dumps, basis archives and CSV tables."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .mesh import PartitionedMesh
from .spectral import CoarseSpace


def dump_solution(path, mesh: PartitionedMesh, u, method: str = "fine", L_add="-") -> Path:
    """Write ``M``, ``m``, ``method``, ``L_add`` then per block ``x y value`` lines.

    Floats are written with ``repr`` so reading back is exact.
    """
    U = mesh.split(u)
    lines = ["# gmsdg solution", f"M {mesh.M}", f"m {mesh.m}", f"method {method}", f"L_add {L_add}"]
    for blk in mesh.blocks:
        lines.append(f"block {blk.index}")
        lines += [f"{x!r} {y!r} {float(v)!r}" for (x, y), v in zip(blk.points.tolist(), U[blk.index])]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_solution(path) -> dict:
    header, blocks, cur = {}, [], None
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "block":
            cur = []
            blocks.append(cur)
        elif cur is None:
            header[head] = rest
        else:
            cur.append([float(t) for t in line.split()])
    header["M"], header["m"] = int(header["M"]), int(header["m"])
    arr = np.array(blocks)
    return {"header": header, "points": arr[..., :2], "values": arr[..., 2]}


def dump_basis(path, space: CoarseSpace, meta: dict | None = None) -> Path:
    """Offline stage output: per-block bases and eigenvalues in one ``.npz``."""
    arrays = {f"basis_{i}": b for i, b in enumerate(space.bases)}
    arrays.update({f"values_{i}": v for i, v in enumerate(space.values)})
    arrays["next_values"] = space.next_values
    arrays["L_small"] = space.L_small
    arrays["L_add"] = space.L_add
    info = {"method": space.method, "n_blocks": len(space.bases), **(meta or {})}
    arrays["meta"] = np.array(json.dumps(info, sort_keys=True))
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)
    return path


def load_basis(path) -> tuple[CoarseSpace, dict]:
    with np.load(path) as z:
        meta = json.loads(str(z["meta"]))
        n = meta["n_blocks"]
        space = CoarseSpace(
            method=meta["method"],
            bases=[z[f"basis_{i}"] for i in range(n)],
            values=[z[f"values_{i}"] for i in range(n)],
            L_small=z["L_small"], L_add=z["L_add"], next_values=z["next_values"],
        )
    return space, meta


def format_csv(columns, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "nan" if not np.isfinite(v) else f"{float(v):.12g}"
    return str(v)


def read_csv(path) -> tuple[list[str], list[dict]]:
    lines = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    reader = csv.DictReader(lines)
    rows = [{k: float(v) for k, v in r.items()} for r in reader]
    return reader.fieldnames, rows
