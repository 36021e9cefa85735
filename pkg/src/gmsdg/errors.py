"""Error decomposition between the fine reference and a coarse solution.

All quantities are squared norms of ``e = u_ref - u_H``:

* interior: ``sum_i a_i(e, e)``
* interface: jump term of the broken norm with ``delta = 1``
* total: ``interior + interface`` (the squared broken norm ``||e||_{h,1}^2``)
* energy: ``a^DG_h(e, e)`` with the system's own penalty
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .fe_core import DGSystem


@dataclass(frozen=True)
class ErrorReport:
    interior: float
    interface: float
    total: float
    energy: float
    relative: float
    reference_norm: float
    lambda_min: float = float("nan")

    def as_dict(self) -> dict:
        return asdict(self)

    def sqrt(self) -> dict:
        """Unsquared norms, for reading."""
        return {k: float(np.sqrt(max(v, 0.0))) for k, v in
                (("interior", self.interior), ("interface", self.interface),
                 ("total", self.total), ("energy", self.energy))}


def quad(mat, u, v=None) -> float:
    v = u if v is None else v
    return float(v @ (mat @ u))


def broken_norm_sq(system: DGSystem, v, delta: float = 1.0) -> float:
    """``||v||_{h,delta}^2 = sum_i a_i(v,v) + delta * (jump term at delta = 1)``."""
    return quad(system.A, v) + delta * quad(system.P1, v)


def error_report(system: DGSystem, u_ref, u_H, lambda_min: float = float("nan")) -> ErrorReport:
    u_ref = np.asarray(u_ref, dtype=float)
    u_H = np.asarray(u_H, dtype=float)
    if u_ref.shape != u_H.shape or u_ref.shape != (system.mesh.n_dofs,):
        raise ValueError(f"shape mismatch: {u_ref.shape} vs {u_H.shape}")
    e = u_ref - u_H
    interior = quad(system.A, e)
    interface = quad(system.P1, e)
    total = interior + interface
    ref = broken_norm_sq(system, u_ref)
    relative = total / ref if ref > 0 else float("nan")
    return ErrorReport(interior, interface, total, quad(system.K, e), relative, ref, float(lambda_min))


# degree-4 symmetric rule on triangles: (barycentric point, weight/area)
_DUNAVANT4 = (
    [(0.108103018168070, 0.445948490915965, 0.445948490915965),
     (0.445948490915965, 0.108103018168070, 0.445948490915965),
     (0.445948490915965, 0.445948490915965, 0.108103018168070),
     (0.816847572980459, 0.091576213509771, 0.091576213509771),
     (0.091576213509771, 0.816847572980459, 0.091576213509771),
     (0.091576213509771, 0.091576213509771, 0.816847572980459)],
    [0.223381589678011] * 3 + [0.109951743655322] * 3,
)


def exact_error_sq(system: DGSystem, u_h, grad_exact) -> float:
    """``||u - u_h||_{h,delta}^2`` against a smooth ``u`` vanishing on the boundary.

    ``grad_exact(x, y)`` returns ``(ux, uy)``. The interior part is
    integrated with a degree-4 rule; since ``u`` is continuous with zero
    trace, the jumps of the error are the jumps of ``u_h`` and the interface
    part is ``u_h^T P u_h`` exactly.
    """
    from .fe_core import p1_geometry

    mesh = system.mesh
    U = mesh.split(u_h)
    bary = np.array(_DUNAVANT4[0])
    w = np.array(_DUNAVANT4[1])
    interior = 0.0
    for blk in mesh.blocks:
        area, grads = p1_geometry(blk.points, blk.triangles)
        guh = np.einsum("tk,tkd->td", U[blk.index][blk.triangles], grads)
        pts = np.einsum("qk,tkd->tqd", bary, blk.points[blk.triangles])
        ux, uy = grad_exact(pts[..., 0], pts[..., 1])
        sq = (ux - guh[:, None, 0]) ** 2 + (uy - guh[:, None, 1]) ** 2
        kappa = system.field.kappa[blk.index]
        interior += float(np.sum(kappa * area * (sq @ w)))
    return interior + quad(system.P, np.asarray(u_h))
