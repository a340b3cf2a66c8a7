"""Experiment orchestration and deterministic file output.

Every command writes into its own output directory: CSV tables with 17
significant digits and a ``manifest.json`` listing each file with its
SHA-256. Data tables never contain timestamps, so identical configurations
give byte-identical tables.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import exact as ex
from . import geometry as geo
from . import observables as obs
from .config import RunConfig
from .dynamics import gdst_rhs, integrate, mdnls_rhs, xxz_spin_rhs
from .errors import CSLatticeError, IntegrationError, InvalidParameterError
from .lattice import GdstParams

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows, comments=()) -> None:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path) -> tuple:
    """(header, rows as float arrays, comment lines) of a file written by :func:`write_csv`."""
    comments, lines = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = [row for row in reader]
    return header, rows, comments


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_manifest(out: Path, command: str, echo: dict, started: float, files, **extra) -> dict:
    inventory = []
    for path in sorted(files):
        p = Path(path)
        inventory.append({"path": p.relative_to(out).as_posix(), "sha256": sha256(p), "bytes": p.stat().st_size})
    manifest = {
        "artifact": "cslattice",
        "version": __version__,
        "command": command,
        "config": echo,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime()),
        "wall_seconds": round(time.time() - started, 3),
        "files": inventory,
    }
    manifest.update(extra)
    manifest = _jsonable(manifest)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _pool_map(fn, tasks, workers):
    if workers is None:
        workers = os.cpu_count() or 1
    workers = min(workers, len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# -- simulate / qfunc / poisson ---------------------------------------------

def _rhs_for(config: RunConfig):
    if config.model == "gdst":
        return gdst_rhs
    if config.model == "mdnls":
        return mdnls_rhs
    form = config.xxz_form
    return lambda z, p: xxz_spin_rhs(z, p, form=form)


def _tag(ordering) -> str:
    return "xxz" if ordering is None else ordering.value


def _trajectory_table(config: RunConfig, traj, want_imbalance, want_fermion):
    f = traj.states.shape[1]
    audit_names = list(traj.audits)
    header = ["t"]
    for j in range(1, f + 1):
        header += [f"re_{j}", f"im_{j}"]
    header += audit_names + [f"drift_{a}" for a in audit_names]
    if want_imbalance:
        header.append("imbalance")
    if want_fermion:
        header += [f"fermion_n_{j}" for j in range(1, f + 1)]
    rows = []
    ref = {a: traj.audits[a][0] for a in audit_names}
    for i, t in enumerate(traj.times):
        row = [t]
        for z in traj.states[i]:
            row += [z.real, z.imag]
        row += [traj.audits[a][i] for a in audit_names]
        row += [abs(traj.audits[a][i] - ref[a]) / max(abs(ref[a]), 1.0) for a in audit_names]
        if want_imbalance:
            row.append(obs.population_imbalance(traj.states[i]))
        if want_fermion:
            row += [obs.fermion_number(traj.states[i], j) for j in range(1, f + 1)]
        rows.append(row)
    return header, rows


def _sample_index(traj, t) -> int:
    return int(np.argmin(np.abs(traj.times - t)))


def _emit_fields(config, traj, out, want_qfunc, want_poisson):
    files = []
    f = traj.states.shape[1]
    o = config.observables
    for k, t in enumerate(o["at"]):
        i = _sample_index(traj, t)
        tlabel = f"t{k}"
        if want_qfunc:
            sites = o["qfunc_sites"] or range(1, f + 1)
            for j in sites:
                beta = complex(traj.states[i, j - 1])
                gx, gy = obs.default_q_grid(beta, o["qfunc_spacing"])
                field = obs.q_function(beta, gx, gy)
                xx, yy = np.meshgrid(field.grid_x, field.grid_y)
                path = out / f"qfunc_site{j}_{tlabel}.csv"
                write_csv(
                    path, ["x", "y", "q"],
                    zip(xx.ravel(), yy.ravel(), field.values.ravel()),
                    comments=[
                        f"t={fmt(traj.times[i])} site={j} beta_re={fmt(beta.real)} beta_im={fmt(beta.imag)}",
                        f"grid x0={fmt(gx[0])} dx={fmt(o['qfunc_spacing'])} nx={gx.size} "
                        f"y0={fmt(gy[0])} dy={fmt(o['qfunc_spacing'])} ny={gy.size}",
                    ],
                )
                files.append(path)
        if want_poisson:
            n_max = int(o["poisson_n_max"]) or _auto_n_max(traj.states[i])
            dists = [obs.poisson_distribution(traj.states[i, j], n_max) for j in range(f)]
            rows = [[n] + [d.probs[n] for d in dists] for n in range(n_max + 1)]
            rows.append(["tail"] + [d.tail_mass for d in dists])
            path = out / f"poisson_{tlabel}.csv"
            write_csv(path, ["n"] + [f"site_{j}" for j in range(1, f + 1)], rows,
                      comments=[f"t={fmt(traj.times[i])}"])
            files.append(path)
    return files


def _auto_n_max(amps) -> int:
    # mean + 10 standard deviations of the widest site distribution
    mean = float(np.max(np.abs(amps) ** 2))
    return int(math.ceil(mean + 10.0 * math.sqrt(mean) + 20.0))


def _simulate_one(args):
    config, ordering, out, want_qfunc, want_poisson = args
    out.mkdir(parents=True, exist_ok=True)
    p = config.params[ordering]
    want_imb = bool(config.observables["imbalance"])
    want_ferm = bool(config.observables["fermion"])
    files = []
    result = {"ordering": _tag(ordering), "status": "ok"}
    try:
        traj = integrate(_rhs_for(config), config.initial, config.integrator, p)
    except IntegrationError as exc:
        result.update(status="failed", error=str(exc), t_reached=exc.t_reached)
        if exc.partial is not None:
            header, rows = _trajectory_table(config, exc.partial, want_imb, want_ferm)
            path = out / "trajectory_partial.csv"
            write_csv(path, header, rows, comments=["PARTIAL: integration failed before t_end"])
            files.append(path)
        return result, files
    header, rows = _trajectory_table(config, traj, want_imb, want_ferm)
    path = out / "trajectory.csv"
    write_csv(path, header, rows)
    files.append(path)
    files += _emit_fields(config, traj, out, want_qfunc, want_poisson)
    result["max_rel_drift"] = traj.drift_summary()
    return result, files


def run(config: RunConfig, out, command="simulate", qfunc=None, poisson=None, workers=None) -> dict:
    """Integrate every requested ordering and write tables plus the manifest.

    ``qfunc`` / ``poisson`` override the observables section (None keeps it).
    Returns the manifest; its ``status`` is ``"failed"`` if any run failed.
    """
    started = time.time()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    want_q = bool(config.observables["qfunc"]) if qfunc is None else qfunc
    want_p = bool(config.observables["poisson_n_max"]) if poisson is None else poisson
    if (want_q or want_p) and config.model == "xxz":
        raise InvalidParameterError("Q-function and Poisson outputs apply to boson models only")
    multi = len(config.orderings) > 1
    tasks = [
        (config, o, out / _tag(o) if multi else out, want_q, want_p) for o in config.orderings
    ]
    results = _pool_map(_simulate_one, tasks, workers)
    files = [p for _, fs in results for p in fs]
    runs = [r for r, _ in results]
    status = "ok" if all(r["status"] == "ok" for r in runs) else "failed"
    return write_manifest(out, command, config.echo, started, files, status=status, runs=runs)


# -- sweep-gamma -------------------------------------------------------------

SWEEP_HEADER = ["n_total", "ordering", "gamma_cr_numeric", "gamma_cr_analytic", "rel_deviation", "status"]


def _sweep_row(args):
    template, n_total, sw = args
    try:
        analytic = obs.gamma_cr_analytic(
            n_total, template.ordering, lam=float(np.max(template.coupling.entries)), m=template.m
        ) if template.f == 2 else math.nan
    except InvalidParameterError:
        analytic = math.nan
    try:
        numeric = obs.gamma_cr_numeric(
            template, n_total,
            horizon=sw["horizon"], tol=sw["tol"],
            bracket=tuple(sw["bracket"]) if sw["bracket"] else None,
            j0=int(sw["site"]), samples_per_period=int(sw["samples_per_period"]),
            rel_tol=float(sw["rel_tol"]), abs_tol=float(sw["abs_tol"]),
        )
        status = "ok"
    except CSLatticeError as exc:
        numeric, status = math.nan, f"failed: {exc}"
    dev = abs(numeric - analytic) / analytic if math.isfinite(numeric) and math.isfinite(analytic) else math.nan
    return [float(n_total), template.ordering.value, numeric, analytic, dev, status]


def sweep_gamma(config: RunConfig, out, workers=None) -> dict:
    """Numerical self-trapping threshold for every N in ``sweep.n_values`` and ordering."""
    if config.model != "gdst":
        raise InvalidParameterError("sweep-gamma needs a gdst configuration")
    started = time.time()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [
        (config.params[o], float(n), config.sweep)
        for n in config.sweep["n_values"] for o in config.orderings
    ]
    rows = _pool_map(_sweep_row, tasks, workers)
    path = out / "sweep.csv"
    write_csv(path, SWEEP_HEADER, rows)
    status = "ok" if all(r[-1] == "ok" for r in rows) else "partial"
    return write_manifest(out, "sweep-gamma", config.echo, started, [path], status=status)


# -- exact-compare -----------------------------------------------------------

def _exact_one(args):
    config, ordering, out = args
    p: GdstParams = config.params[ordering]
    beta0 = config.initial
    tail_bound = float(config.exact["tail_bound"])
    n_max = config.exact["n_max"]
    if n_max is None:
        n_max = ex.cutoff_for_tail(beta0, tail_bound)
    basis = ex.enumerate_basis(p.f, int(n_max))
    psi0, tail = ex.coherent_product_state(beta0, basis, tail_bound)
    h = ex.build_gdst_hamiltonian(p, basis)
    cfg = config.integrator
    traj = integrate(gdst_rhs, beta0, cfg, p)
    f = p.f
    rows = []
    for i, t in enumerate(traj.times):
        psi = ex.evolve(h, psi0, float(t))
        eps = ex.correlation_index(psi, traj.states[i], basis)
        row = [t, eps]
        row += [ex.mode_occupation(psi, j) for j in range(1, f + 1)]
        row += [abs(traj.states[i, j]) ** 2 for j in range(f)]
        row += [tail, psi.norm_defect]
        rows.append(row)
    header = ["t", "corr_index"] + [f"n_exact_{j}" for j in range(1, f + 1)]
    header += [f"n_quasi_{j}" for j in range(1, f + 1)] + ["tail_mass", "norm_defect"]
    path = out / f"exact_compare_{ordering.value}.csv"
    write_csv(path, header, rows, comments=[f"n_max={n_max} basis_dim={basis.dim}"])
    eps0 = rows[0][1]
    check = {
        "ordering": ordering.value,
        "n_max": int(n_max),
        "tail_mass": tail,
        "corr_index_t0": eps0,
        "corr_index_t0_within_10_tail": bool(eps0 <= 10 * tail + 1e-15),
        "max_corr_index": max(r[1] for r in rows),
    }
    return check, path


def exact_compare(config: RunConfig, out, workers=None) -> dict:
    if config.model != "gdst":
        raise InvalidParameterError("exact-compare needs a gdst configuration")
    started = time.time()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    results = _pool_map(_exact_one, [(config, o, out) for o in config.orderings], workers)
    return write_manifest(
        out, "exact-compare", config.echo, started, [p for _, p in results],
        status="ok", checks=[c for c, _ in results],
    )


# -- geometry ----------------------------------------------------------------

GEOMETRY_HEADER = ["check", "manifold", "measured", "expected", "tolerance", "passed"]


def geometry_report(seed: int = 0, n_points: int = 100, n_triples: int = 1000) -> list:
    """Numerical checks of the coherent-state geometry.

    Each row is (check, manifold, measured, expected, tolerance, passed).
    """
    rng = np.random.default_rng(seed)
    rows = []
    wh = geo.weyl_heisenberg()
    pts = geo.random_points(rng, n_points, 3.0)

    r_wh = np.array([geo.curvature(wh, z) for z in pts])
    worst = float(np.max(np.abs(r_wh)))
    rows.append(["curvature_max_abs", "weyl-heisenberg", worst, 0.0, 1e-8, worst <= 1e-8])

    for j in (0.5, 1.0):
        n = geo.su2(j)
        r = np.array([geo.curvature(n, z) for z in pts])
        rows.append(["curvature_std", f"su2 j={j:g}", float(np.std(r)), 0.0, 1e-5, float(np.std(r)) < 1e-5])
        dev = float(np.max(np.abs(r - 1.0 / j)))
        rows.append(["curvature_value", f"su2 j={j:g}", float(np.mean(r)), 1.0 / j, 1e-5, dev <= 1e-5])

    for name, n in (("weyl-heisenberg", wh), ("su2 j=0.5", geo.su2(0.5)), ("su2 j=1", geo.su2(1.0))):
        errs = [abs(geo.metric(n, z, numeric=True) / geo.metric(n, z) - 1.0) for z in pts]
        worst = float(max(errs))
        rows.append(["metric_fd_vs_closed_rel_err", name, worst, 0.0, 1e-6, worst < 1e-6])

    step = 1e-4
    phis = rng.uniform(0.0, 2.0 * math.pi, size=n_points)
    errs = []
    for z, phi in zip(pts, phis):
        dz = step * complex(math.cos(phi), math.sin(phi))
        d2 = geo.ray_distance_sq_from_log(-0.5 * abs(dz) ** 2)  # ln|<z|z+dz>| for boson CS
        errs.append(abs(d2 / (geo.metric(wh, z) * step**2) - 1.0))
    worst = float(max(errs))
    rows.append(["infinitesimal_distance_rel_err", "weyl-heisenberg", worst, 0.0, 1e-3, worst < 1e-3])
    for j in (0.5, 1.0):
        n = geo.su2(j)
        errs = []
        for z, phi in zip(pts, phis):
            dz = step * complex(math.cos(phi), math.sin(phi))
            d2 = geo.ray_distance_sq_from_log(geo.su2_log_overlap(z, z + dz, j).real)
            errs.append(abs(d2 / (geo.metric(n, z) * step**2) - 1.0))
        worst = float(max(errs))
        rows.append(["infinitesimal_distance_rel_err", f"su2 j={j:g}", worst, 0.0, 1e-3, worst < 1e-3])

    def dist_boson(a, b):
        return geo.ray_distance(min(1.0, abs(geo.boson_overlap(a, b))))

    def dist_su2(a, b):
        return geo.ray_distance(min(1.0, abs(geo.su2_overlap(a, b, 0.5))))

    for name, dist, radius in (("weyl-heisenberg", dist_boson, 3.0), ("su2 j=0.5", dist_su2, 3.0)):
        tri = geo.random_points(rng, 3 * n_triples, radius).reshape(n_triples, 3)
        violations = sum(
            dist(a, c) > dist(a, b) + dist(b, c) + 1e-12 for a, b, c in tri
        )
        rows.append(["triangle_violations", name, violations, 0, 0, violations == 0])

    errs = [abs(geo.symplectic_density(z, 0.5) - 1.0 / (1.0 + abs(z) ** 2) ** 2) for z in pts]
    worst = float(max(errs))
    rows.append(["symplectic_density_abs_err", "su2 j=0.5", worst, 0.0, 1e-12, worst < 1e-12])
    return rows


def write_geometry_report(out, seed: int = 0) -> dict:
    started = time.time()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = geometry_report(seed)
    path = out / "geometry.csv"
    write_csv(path, GEOMETRY_HEADER, rows, comments=[f"seed={seed}"])
    status = "ok" if all(r[-1] for r in rows) else "failed"
    manifest = write_manifest(out, "geometry", {"seed": seed}, started, [path], status=status)
    manifest["rows"] = rows
    return manifest
