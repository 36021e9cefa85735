"""Galerkin solves on a spectral coarse space and the tools behind the
energy-captured error bound (interpolant, eigen-expansion, norm-equivalence
constants)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .fe_core import DGSystem
from .linsolve import backward_error
from .spectral import CoarseSpace


class SingularCoarseSystem(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class CoarseSolution:
    coeffs: np.ndarray
    u_H: np.ndarray
    method: str
    penalty_scaling: object
    residual: float


def coarse_operator(system: DGSystem, space: CoarseSpace, penalty_scaling=None):
    R = space.R
    K = system.operator(penalty_scaling)
    Kc = (R.T @ (K @ R)).toarray()
    return 0.5 * (Kc + Kc.T), R.T @ system.b, R


def coarse_solve(system: DGSystem, space: CoarseSpace, penalty_scaling=None,
                 rtol: float = 1e-10) -> CoarseSolution:
    """Find ``u_H`` in ``span(R)`` with ``a^DG(u_H, v) = f(v)`` for all coarse ``v``.

    ``penalty_scaling`` replaces ``delta/h_ij`` in the coarse operator only.
    """
    Kc, fc, R = coarse_operator(system, space, penalty_scaling)
    try:
        c = sla.solve(Kc, fc, assume_a="pos")
    except sla.LinAlgError:
        # low penalties may leave the coarse operator indefinite but solvable
        try:
            c = sla.solve(Kc, fc, assume_a="sym")
        except sla.LinAlgError as exc:
            raise SingularCoarseSystem(f"coarse matrix of dimension {space.dim} is singular") from exc
    fnorm = np.linalg.norm(fc)
    for _ in range(3):
        r = fc - Kc @ c
        rel = np.linalg.norm(r) / fnorm if fnorm else 0.0
        if rel <= rtol:
            break
        c = c + sla.solve(Kc, r, assume_a="sym")
    if rel > rtol and backward_error(Kc, c, fc) > rtol:
        raise SingularCoarseSystem(f"coarse residual {rel:.2e} above {rtol:.0e}")
    return CoarseSolution(c, R @ c, space.method, penalty_scaling, rel)


def _require_II(space: CoarseSpace):
    if space.method != "II" or space.decomposition is None:
        raise ValueError(f"needs a Method II space, got {space.method!r}")


def spectral_interpolant(space: CoarseSpace, u) -> np.ndarray:
    """Blockwise ``(m_i + m_i^delta)``-orthogonal projection onto the retained modes."""
    _require_II(space)
    dec = space.decomposition
    U = dec.system.mesh.split(u)
    out = np.empty_like(U)
    for i, (basis, B) in enumerate(zip(space.bases, dec.rhs)):
        c = basis.T @ (B @ U[i])
        out[i] = basis @ c
    return out.ravel()


@dataclass(frozen=True, eq=False)
class EnergyExpansion:
    coeffs: list[np.ndarray]
    values: list[np.ndarray]
    energy: np.ndarray      # a_i(u_i, u_i)
    captured: np.ndarray    # sum over retained modes of lam c^2
    tail: np.ndarray        # sum over left-out modes of lam c^2

    @property
    def total_tail(self) -> float:
        return float(self.tail.sum())


def energy_expansion(space: CoarseSpace, u) -> EnergyExpansion:
    """Expand each ``u_i`` in all Method II eigenvectors; ``a_i(u,u) = sum lam c^2``."""
    _require_II(space)
    dec = space.decomposition
    U = dec.system.mesh.split(u)
    coeffs, values, energy, captured, tail = [], [], [], [], []
    for i, pairs in enumerate(dec.pairs):
        c = pairs.vectors.T @ (dec.rhs[i] @ U[i])
        w = pairs.values * c * c
        k = space.bases[i].shape[1]
        coeffs.append(c)
        values.append(pairs.values)
        energy.append(float(U[i] @ dec.lhs[i] @ U[i]))
        captured.append(float(w[:k].sum()))
        tail.append(float(w[k:].sum()))
    return EnergyExpansion(coeffs, values, np.array(energy), np.array(captured), np.array(tail))


def norm_equivalence(system: DGSystem, penalty_scaling=None) -> tuple[float, float]:
    """Extreme eigenvalues ``(gamma_0, gamma_1)`` of ``a^DG`` relative to ``d_h``.

    Dense; intended for small meshes.
    """
    K = system.operator(penalty_scaling).toarray()
    D = system.D.toarray()
    lam = sla.eigh(K, D, eigvals_only=True)
    return float(lam[0]), float(lam[-1])


def best_approximation_constant(system: DGSystem) -> float:
    g0, g1 = norm_equivalence(system)
    return (g1 / g0) ** 2
