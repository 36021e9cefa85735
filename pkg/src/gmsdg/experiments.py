"""Experiment harness: error tables, penalty sweeps and error-vs-1/lambda_min plots.

Every run writes a CSV (the authoritative artifact, byte-stable for a given
configuration) and a ``.meta.json`` sidecar holding runtimes, square roots of
the squared norms and other derived numbers.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import coefficient as coef
from . import svg
from ._version import __version__
from .coarse import coarse_solve
from .config import ExperimentConfig
from .errors import error_report
from .fe_core import DGSystem, assemble_dg_system
from .mesh import build_partition
from .spectral import CoarseSpace, SpectralDecomposition, decompose, map_blocks

TABLE_COLUMNS = ("L_add", "dim", "interface", "interior", "total", "energy", "lambda_min")
SWEEP_COLUMNS = ("L_add", "scaling", "dim", "interface", "interior", "total", "energy")
LAMBDA_COLUMNS = ("eta", "L_add", "dim", "lambda_min", "inv_lambda_min", "total")


class ExperimentError(RuntimeError):
    """A solver failure, tagged with the stage it came from."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.stage = stage


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        if isinstance(exc, ExperimentError):
            raise
        raise ExperimentError(name, exc) from exc


def _eta_tag(eta: float) -> str:
    return f"{eta:.0f}" if float(eta).is_integer() else repr(float(eta)).replace(".", "p")


@dataclass(eq=False)
class Experiment:
    """Mesh, coefficient, fine system and fine reference for one contrast."""

    config: ExperimentConfig
    system: DGSystem
    u_ref: np.ndarray
    timings: dict = field(default_factory=dict)
    _decompositions: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def eta(self) -> float:
        return self.system.field.eta

    def decomposition(self, method: str | None = None) -> SpectralDecomposition:
        method = method or self.config.method
        key = (method, self.config.snapshot_mass)
        with self._lock:
            return self._decomposition(method, key)

    def _decomposition(self, method, key):
        if key not in self._decompositions:
            t0 = time.perf_counter()
            variant = self.config.snapshot_mass if method == "III" else None
            self._decompositions[key] = _stage(
                f"eigensolve (method {method})", decompose, self.system, method, variant,
                threads=self.config.threads)
            self.timings[f"eigensolve_{method}"] = time.perf_counter() - t0
        return self._decompositions[key]

    def space(self, L_add: int, method: str | None = None) -> CoarseSpace:
        small = None if self.config.l_small == "auto" else self.config.l_small
        return _stage(f"coarse space (L_add={L_add})", self.decomposition(method).space, L_add, small)

    def snapshot_projection(self, method: str = "III") -> np.ndarray:
        """Galerkin projection of the problem onto the global snapshot space."""
        dec = self.decomposition(method)
        space = CoarseSpace("snapshot", dec.snapshots.phi, [np.zeros(0)] * dec.n_blocks,
                            np.zeros(dec.n_blocks, int), np.zeros(dec.n_blocks, int),
                            np.full(dec.n_blocks, np.nan))
        return _stage("snapshot projection", coarse_solve, self.system, space).u_H


def make_field(config: ExperimentConfig, mesh, eta: float | None):
    if config.raster:
        return coef.from_raster(coef.read_raster(config.raster), mesh, {"raster": config.raster})
    if config.generator == "constant":
        return coef.constant(mesh)
    return coef.synth_channels_inclusions(
        mesh, eta, seed=config.seed, n_channels=config.n_channels,
        inclusion_prob=config.inclusion_prob, channel_gaps=config.channel_gaps)


def contrasts(config: ExperimentConfig) -> list:
    """Contrasts to run; a raster fixes its own contrast, so it runs once."""
    return [None] if config.raster or config.generator == "constant" else list(config.eta)


def build_experiment(config: ExperimentConfig, eta: float | None = None) -> Experiment:
    t0 = time.perf_counter()
    mesh = build_partition(config.M, config.m)
    fld = _stage("coefficient", make_field, config, mesh, eta)
    system = _stage("fine assembly", assemble_dg_system, mesh, fld, config.delta)
    t1 = time.perf_counter()
    u_ref = _stage("fine solve", system.solve)
    return Experiment(config, system, u_ref,
                      {"assembly": t1 - t0, "fine_solve": time.perf_counter() - t1})


@dataclass(eq=False)
class ResultTable:
    name: str
    columns: tuple
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def header(self) -> list[str]:
        cfg = self.meta.get("config_hash", "")
        lines = [f"gmsdg {__version__}", f"config {cfg}"]
        lines += [f"{k} {v}" for k, v in self.meta.get("header", {}).items()]
        return lines

    def to_csv(self) -> str:
        from .serialize import format_csv

        return format_csv(self.columns, self.rows, self.header())

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{self.name}.csv"
        path.write_text(self.to_csv())
        (out / f"{self.name}.meta.json").write_text(
            json.dumps(self.meta, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def _base_meta(config: ExperimentConfig, exp: Experiment, **header) -> dict:
    return {
        "config_hash": config.hash(),
        "version": __version__,
        "config": config.canonical(),
        "eta": exp.eta,
        "n_dofs": exp.system.mesh.n_dofs,
        "header": header,
        "versions": {"numpy": np.__version__, "scipy": _scipy_version()},
    }


def _scipy_version() -> str:
    import scipy

    return scipy.__version__


def _table_row(exp: Experiment, method: str, L_add: int, u_snap=None) -> tuple[dict, dict]:
    space = exp.space(L_add, method)
    sol = _stage(f"coarse solve (method {method}, L_add={L_add})", coarse_solve, exp.system, space)
    rep = error_report(exp.system, exp.u_ref, sol.u_H, space.lambda_min)
    row = {"L_add": int(L_add), "dim": space.dim, "interface": rep.interface,
           "interior": rep.interior, "total": rep.total, "energy": rep.energy,
           "lambda_min": rep.lambda_min}
    extra = {"L_add": int(L_add), "relative": rep.relative, "sqrt": rep.sqrt(),
             "coarse_residual": sol.residual}
    if u_snap is not None:
        snap = error_report(exp.system, u_snap, sol.u_H, space.lambda_min)
        extra["vs_snapshot_projection"] = snap.as_dict()
    return row, extra


def table_rows(exp: Experiment, method: str, l_add, threads: int = 1, u_snap=None):
    """``(csv_row, extra)`` per ``L_add``, computed in parallel, returned in order."""
    return map_blocks(lambda k: _table_row(exp, method, l_add[k], u_snap), len(l_add), threads)


def run_table(config: ExperimentConfig, out_dir=None) -> list[ResultTable]:
    """One table per contrast: coarse-solve errors for each ``L_add``."""
    tables = []
    method = config.method
    for eta in contrasts(config):
        exp = build_experiment(config, eta)
        dec = exp.decomposition(method)
        u_snap = exp.snapshot_projection(method) if method.startswith("III") else None
        t0 = time.perf_counter()
        out = table_rows(exp, method, config.l_add, config.threads, u_snap)
        exp.timings["coarse_rows"] = time.perf_counter() - t0
        meta = _base_meta(config, exp, method=method, eta=exp.eta, quantities="squared norms")
        meta.update(
            rows=[o[1] for o in out], timings=exp.timings,
            L_small=np.bincount(dec.L_small).tolist(),
        )
        if u_snap is not None:
            meta["snapshot_projection_vs_fine"] = error_report(exp.system, exp.u_ref, u_snap).as_dict()
        t = ResultTable(f"table_{method}_eta{_eta_tag(exp.eta)}", TABLE_COLUMNS, [o[0] for o in out], meta)
        if out_dir is not None:
            t.write(out_dir)
        tables.append(t)
    return tables


def run_penalty_sweep(config: ExperimentConfig, out_dir=None) -> list[ResultTable]:
    """Coarse errors for every ``(L_add, scaling)``; the reference keeps ``delta/h``."""
    tables = []
    method = config.method
    grid = [(k, s) for k in config.sweep_l_add for s in config.scalings]
    for eta in contrasts(config):
        exp = build_experiment(config, eta)
        exp.decomposition(method)

        def one(n):
            L_add, scaling = grid[n]
            space = exp.space(L_add, method)
            sol = _stage(f"coarse solve (L_add={L_add}, scaling={scaling})", coarse_solve,
                         exp.system, space, penalty_scaling=float(scaling))
            rep = error_report(exp.system, exp.u_ref, sol.u_H)
            return {"L_add": int(L_add), "scaling": float(scaling), "dim": space.dim,
                    "interface": rep.interface, "interior": rep.interior,
                    "total": rep.total, "energy": rep.energy}

        t0 = time.perf_counter()
        rows = map_blocks(one, len(grid), config.threads)
        exp.timings["coarse_rows"] = time.perf_counter() - t0
        meta = _base_meta(config, exp, method=method, eta=exp.eta, quantities="squared norms")
        meta["timings"] = exp.timings
        t = ResultTable(f"penalty_{method}_eta{_eta_tag(exp.eta)}", SWEEP_COLUMNS, rows, meta)
        if out_dir is not None:
            t.write(out_dir)
            (Path(out_dir) / f"{t.name}.svg").write_text(penalty_svg(t))
        tables.append(t)
    return tables


def penalty_svg(table: ResultTable) -> str:
    panels = [svg.Panel("interior error", "penalty scaling", "squared norm", logx=True, logy=True),
              svg.Panel("interface error", "penalty scaling", "squared norm", logx=True, logy=True)]
    for k in sorted({r["L_add"] for r in table.rows}):
        rows = [r for r in table.rows if r["L_add"] == k]
        xs = [r["scaling"] for r in rows]
        panels[0].add(xs, [r["interior"] for r in rows], f"L_add={k}")
        panels[1].add(xs, [r["interface"] for r in rows], f"L_add={k}")
    return svg.render(panels)


def pearson(x, y) -> float | None:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def run_lambda_plot(config: ExperimentConfig, out_dir=None) -> ResultTable:
    """Total error against ``1/lambda_min`` across ``L_add``, all contrasts in one table."""
    rows, corr, timings, extras = [], {}, {}, []
    method = config.method
    for eta in contrasts(config):
        exp = build_experiment(config, eta)
        out = table_rows(exp, method, config.l_add, config.threads)
        part = []
        for row, extra in out:
            lam = row["lambda_min"]
            part.append({"eta": exp.eta, "L_add": row["L_add"], "dim": row["dim"],
                         "lambda_min": lam, "inv_lambda_min": 1.0 / lam if lam > 0 else float("nan"),
                         "total": row["total"]})
            extras.append(extra)
        rows += part
        corr[_eta_tag(exp.eta)] = pearson([r["inv_lambda_min"] for r in part], [r["total"] for r in part])
        timings[_eta_tag(exp.eta)] = exp.timings
    meta = _base_meta(config, exp, method=method, quantities="squared norms")
    meta.update(correlation=corr, timings=timings, rows=extras)
    for tag, c in corr.items():
        if c is not None:
            meta["header"][f"pearson_eta{tag}"] = f"{c:.6f}"
    t = ResultTable(f"lambda_{method}", LAMBDA_COLUMNS, rows, meta)
    if out_dir is not None:
        t.write(out_dir)
        (Path(out_dir) / f"{t.name}.svg").write_text(lambda_svg(t))
    return t


def lambda_svg(table: ResultTable) -> str:
    panel = svg.Panel("total error vs 1/lambda_min", "1/lambda_min", "total error (squared)")
    for eta in sorted({r["eta"] for r in table.rows}):
        rows = [r for r in table.rows if r["eta"] == eta]
        panel.add([r["inv_lambda_min"] for r in rows], [r["total"] for r in rows],
                  f"eta={eta:g}", line=len(rows) > 1)
    return svg.render([panel])


def subspace_angles(X, Y, B=None) -> np.ndarray:
    """Principal angles between column spans, in the ``B`` inner product if given."""
    if B is not None:
        L = sla.cholesky(B, lower=True)
        X, Y = L.T @ X, L.T @ Y
    return sla.subspace_angles(X, Y)
