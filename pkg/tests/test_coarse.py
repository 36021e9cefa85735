import numpy as np
import pytest

from gmsdg.coarse import (SingularCoarseSystem, best_approximation_constant, coarse_operator,
                          coarse_solve, energy_expansion, norm_equivalence, spectral_interpolant)
from gmsdg.errors import quad
from gmsdg.spectral import CoarseSpace, decompose

from conftest import small_system


@pytest.fixture(scope="module")
def sys_II(contrast_system):
    return contrast_system, decompose(contrast_system, "II")


def test_full_space_recovers_fine_solution(contrast_system):
    s = contrast_system
    u = s.solve()
    for method in ("I", "II"):
        space = decompose(s, method).space(0, L_small=s.mesh.n_local)
        uH = coarse_solve(s, space).u_H
        rel = quad(s.D, u - uH) / quad(s.D, u)
        assert np.sqrt(rel) <= 1e-9


def test_constants_only_matches_piecewise_constant_dg():
    M, m, delta = 3, 4, 4.0
    s = small_system(M, m, delta=delta)
    space = decompose(s, "I").space(0, L_small=1)
    uH = coarse_solve(s, space).u_H
    # independent assembly: unknown c_i per block, only penalty terms survive
    H, h = 1.0 / M, 1.0 / (M * m)
    w = delta / h * H
    Kc = np.zeros((M * M, M * M))
    for i in range(M * M):
        bx, by = i % M, i // M
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            x, y = bx + dx, by + dy
            Kc[i, i] += w
            if 0 <= x < M and 0 <= y < M:
                Kc[i, y * M + x] -= w
    c = np.linalg.solve(Kc, np.full(M * M, H * H))
    U = s.mesh.split(uH)
    assert np.allclose(U, c[:, None], rtol=1e-10, atol=0)


@pytest.mark.parametrize("method", ["I", "II", "III", "III-m"])
def test_galerkin_orthogonality_small(contrast_system, method, rng):
    s = contrast_system
    u = s.solve()
    space = decompose(s, method).space(2)
    sol = coarse_solve(s, space)
    assert sol.residual <= 1e-10
    e = u - sol.u_H
    for _ in range(10):
        v = space.R @ rng.normal(size=space.dim)
        assert abs(quad(s.K, e, v)) <= 1e-8 * np.sqrt(quad(s.K, u) * quad(s.K, v))


def test_reconstruction_is_R_times_coefficients(contrast_system):
    space = decompose(contrast_system, "I").space(1)
    sol = coarse_solve(contrast_system, space)
    assert np.array_equal(sol.u_H, space.R @ sol.coeffs)
    assert sol.method == "I" and sol.penalty_scaling is None


def test_penalty_override_changes_only_coarse_operator(contrast_system):
    s = contrast_system
    space = decompose(s, "I").space(2)
    a = coarse_solve(s, space)
    b = coarse_solve(s, space, penalty_scaling=40.0)
    assert b.penalty_scaling == 40.0
    assert not np.allclose(a.u_H, b.u_H)
    c = coarse_solve(s, space, penalty_scaling=s.delta / s.mesh.h)
    assert np.allclose(a.u_H, c.u_H, rtol=1e-10, atol=1e-14)
    Kc, fc, R = coarse_operator(s, space, 40.0)
    assert np.allclose(Kc, Kc.T)


def test_singular_coarse_space_flagged(contrast_system):
    s = contrast_system
    base = decompose(s, "I").space(0, L_small=1)
    doubled = [np.hstack([b, b]) for b in base.bases]
    space = CoarseSpace("I", doubled, base.values, base.L_small, base.L_add, base.next_values)
    with pytest.raises(SingularCoarseSystem):
        coarse_solve(s, space)


def test_interpolant_idempotent_and_orthogonal(sys_II, rng):
    s, dec = sys_II
    space = dec.space(2)
    v = space.R @ rng.normal(size=space.dim)
    assert np.allclose(spectral_interpolant(space, v), v, atol=1e-10 * np.abs(v).max())
    i = 5
    nxt = np.zeros(s.mesh.n_dofs)
    k = space.L[i]
    nxt[s.mesh.block_slice(i)] = dec.pairs[i].vectors[:, k]
    out = s.mesh.split(spectral_interpolant(space, nxt))
    assert np.abs(out[i]).max() <= 1e-10 * np.abs(nxt).max()


def test_interpolant_needs_method_II(contrast_system):
    space = decompose(contrast_system, "I").space(0)
    with pytest.raises(ValueError):
        spectral_interpolant(space, np.zeros(contrast_system.mesh.n_dofs))
    with pytest.raises(ValueError):
        energy_expansion(space, np.zeros(contrast_system.mesh.n_dofs))


def test_energy_expansion_identity_and_tail(sys_II, rng):
    s, dec = sys_II
    space = dec.space(3)
    u = s.solve()
    ex = energy_expansion(space, u)
    assert np.allclose(ex.captured + ex.tail, ex.energy, rtol=1e-8, atol=1e-14)
    assert np.all(ex.tail >= -1e-14)
    v = space.R @ rng.normal(size=space.dim)
    assert energy_expansion(space, v).total_tail <= 1e-10 * quad(s.A, v)


def test_interpolant_versus_galerkin(sys_II, rng):
    s, dec = sys_II
    u = s.solve()
    for L_add in (0, 2, 5):
        space = dec.space(L_add)
        uH = coarse_solve(s, space).u_H
        IH = spectral_interpolant(space, u)
        eG, eI = u - uH, u - IH
        # Galerkin is the a^DG projection: optimal in the energy norm
        assert quad(s.K, eG) <= quad(s.K, eI) * (1 + 1e-10)
        for _ in range(20):
            v = space.R @ rng.normal(size=space.dim) * 1e-2 + uH
            assert quad(s.K, eG) <= quad(s.K, u - v) * (1 + 1e-10)
        C1 = best_approximation_constant(s)
        assert quad(s.D, eG) <= C1 * quad(s.D, eI)


def test_nested_spaces_monotone_error(sys_II):
    s, dec = sys_II
    u = s.solve()
    errs = [quad(s.D, u - coarse_solve(s, dec.space(k)).u_H) for k in range(0, 11)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(errs, errs[1:]))


def test_norm_equivalence_constants(unit_system):
    g0, g1 = norm_equivalence(unit_system)
    assert 0 < g0 <= 1 <= g1
    assert best_approximation_constant(unit_system) == pytest.approx((g1 / g0) ** 2)
