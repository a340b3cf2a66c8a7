"""Run configuration: a TOML document parsed into a validated :class:`RunConfig`.

Example (single-site excited quintic trimer)::

    model = "gdst"
    ordering = "both"

    [gdst]
    f = 3
    m = 3
    gamma = 0.055

    [initial]
    site = 1
    n_total = 10

    [integrator]
    t_end = 76.4
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import DEFAULT_TOL, IntegratorConfig
from .errors import ConfigError, InvalidParameterError, SiteIndexError
from .lattice import (
    BosonLatticeState,
    CouplingMatrix,
    GdstParams,
    MdnlsParams,
    Ordering,
    SpinLatticeState,
    XxzParams,
    check_site,
    nearest_neighbor_ring,
    single_site_excitation,
)

MODELS = ("gdst", "mdnls", "xxz")

# section -> {key: default}; None marks "no default / optional"
SCHEMA = {
    "": {"model": None, "ordering": "no", "name": "run"},
    "gdst": {"f": None, "m": 3, "omega0": 0.0, "gamma": None, "lambda": 1.0, "coupling": None},
    "mdnls": {"f": None, "v": 1.0, "x": None},
    "xxz": {
        "f": None, "v": None, "g": None,
        "include_linear_term": False, "onsite_energy": 0.0, "form": "hamiltonian",
    },
    "initial": {"site": None, "n_total": None, "amplitudes": None, "coords": None},
    "integrator": {
        "t_end": None, "dt": 0.1,
        "rel_tol": DEFAULT_TOL, "abs_tol": DEFAULT_TOL, "max_step": math.inf,
    },
    "observables": {
        "at": None, "qfunc": False, "qfunc_spacing": 0.05, "qfunc_sites": None,
        "poisson_n_max": 0, "imbalance": False, "fermion": False,
    },
    "sweep": {
        "n_values": [], "bracket": None, "tol": None, "horizon": None,
        "rel_tol": 1e-9, "abs_tol": 1e-9, "samples_per_period": 40, "site": 1,
    },
    "exact": {"n_max": None, "tail_bound": 1e-10},
}


@dataclass(frozen=True)
class RunConfig:
    model: str
    orderings: tuple
    name: str
    params: dict          # Ordering (or None for xxz) -> params object
    initial: object       # BosonLatticeState | SpinLatticeState
    integrator: IntegratorConfig
    observables: dict
    sweep: dict
    exact: dict
    echo: dict            # fully defaulted document, as written to the manifest
    n_total: float | None = None
    site: int | None = None
    xxz_form: str = "hamiltonian"

    @property
    def f(self) -> int:
        return len(self.initial)

    def first_params(self):
        return next(iter(self.params.values()))


def _fill(doc: dict) -> dict:
    unknown = [k for k in doc if k not in SCHEMA[""] and k not in SCHEMA]
    for section, keys in SCHEMA.items():
        if section and section in doc:
            if not isinstance(doc[section], dict):
                raise ConfigError(f"[{section}] must be a table")
            unknown += [f"{section}.{k}" for k in doc[section] if k not in keys]
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    filled = {k: doc.get(k, v) for k, v in SCHEMA[""].items()}
    for section, keys in SCHEMA.items():
        if section:
            given = doc.get(section, {})
            filled[section] = {k: copy.deepcopy(given.get(k, v)) for k, v in keys.items()}
    return filled


def _require(table: dict, section: str, key: str):
    value = table[key]
    if value is None:
        raise ConfigError(f"{section}.{key} is required")
    return value


def _number(table, section, key, integer=False):
    value = _require(table, section, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number (got {value!r})")
    if integer:
        if int(value) != value:
            raise InvalidParameterError(f"{section}.{key} must be an integer (got {value!r})")
        return int(value)
    return float(value)


def _complex_list(values, section, key):
    out = []
    for item in values:
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            out.append(complex(item))
        elif isinstance(item, list) and len(item) == 2:
            out.append(complex(float(item[0]), float(item[1])))
        else:
            raise ConfigError(f"{section}.{key} entries must be numbers or [re, im] pairs")
    return np.array(out, dtype=complex)


def _orderings(value, model) -> tuple:
    if model == "xxz":
        return (None,)
    if str(value).lower() == "both":
        return (Ordering.NO, Ordering.SO)
    return (Ordering.parse(value),)


def _model_params(doc, model, orderings):
    sec = doc[model]
    if model == "gdst":
        f = _number(sec, "gdst", "f", integer=True)
        m = _number(sec, "gdst", "m", integer=True)
        if m < 2:
            raise InvalidParameterError(f"gdst.m: nonlinearity order must be >= 2 (got {m})")
        if f < 1:
            raise InvalidParameterError(f"gdst.f must be >= 1 (got {f})")
        if sec["coupling"] is not None:
            coupling = CouplingMatrix(np.array(sec["coupling"], dtype=float))
            if coupling.f != f:
                raise InvalidParameterError(f"gdst.coupling is {coupling.f}x{coupling.f} but f={f}")
        elif f == 1:
            coupling = CouplingMatrix(np.zeros((1, 1)))
        else:
            coupling = nearest_neighbor_ring(f, _number(sec, "gdst", "lambda"))
        gamma = _number(sec, "gdst", "gamma")
        omega0 = _number(sec, "gdst", "omega0")
        return f, {o: GdstParams(omega0, gamma, m, coupling, o) for o in orderings}
    if model == "mdnls":
        f = _number(sec, "mdnls", "f", integer=True)
        if f < 3:
            raise InvalidParameterError(f"mdnls.f: ring needs at least 3 sites (got {f})")
        v, x = _number(sec, "mdnls", "v"), _number(sec, "mdnls", "x")
        return f, {o: MdnlsParams(v, x, f, o) for o in orderings}
    f = _number(sec, "xxz", "f", integer=True)
    if f < 3:
        raise InvalidParameterError(f"xxz.f: ring needs at least 3 sites (got {f})")
    if sec["form"] not in ("hamiltonian", "alternate"):
        raise InvalidParameterError(f"xxz.form must be 'hamiltonian' or 'alternate' (got {sec['form']!r})")
    p = XxzParams(
        _number(sec, "xxz", "v"), _number(sec, "xxz", "g"), f,
        bool(sec["include_linear_term"]), _number(sec, "xxz", "onsite_energy"),
    )
    return f, {None: p}


def _site(j, f, field):
    try:
        check_site(j, f)
    except SiteIndexError as exc:
        raise SiteIndexError(f"{field}: {exc}") from None


def _initial(doc, model, f):
    ini = doc["initial"]
    given = [k for k in ("site", "amplitudes", "coords") if ini[k] is not None]
    if model == "xxz":
        if given != ["coords"]:
            raise ConfigError("xxz runs need exactly initial.coords")
        coords = _complex_list(ini["coords"], "initial", "coords")
        if coords.size != f:
            raise InvalidParameterError(f"initial.coords has {coords.size} entries, f={f}")
        return SpinLatticeState(coords), None, None
    if given == ["site"]:
        site = _number(ini, "initial", "site", integer=True)
        _site(site, f, "initial.site")
        n_total = _number(ini, "initial", "n_total")
        return single_site_excitation(f, site, n_total), n_total, site
    if given == ["amplitudes"]:
        amps = _complex_list(ini["amplitudes"], "initial", "amplitudes")
        if amps.size != f:
            raise InvalidParameterError(f"initial.amplitudes has {amps.size} entries, f={f}")
        return BosonLatticeState(amps), float(np.sum(np.abs(amps) ** 2)), None
    raise ConfigError("give exactly one of initial.site (with n_total) or initial.amplitudes")


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a TOML run description.

    ``overrides`` maps dotted keys (``"integrator.rel_tol"``, ``"ordering"``)
    to values applied before validation; the CLI flags use this.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.rpartition(".")
        (doc.setdefault(section, {}) if section else doc)[key] = value
    doc = _fill(doc)

    model = doc["model"]
    if model not in MODELS:
        raise ConfigError(f"model must be one of {', '.join(MODELS)} (got {model!r})")
    orderings = _orderings(doc["ordering"], model)
    f, params = _model_params(doc, model, orderings)
    initial, n_total, site = _initial(doc, model, f)

    integ = doc["integrator"]
    t_end = _number(integ, "integrator", "t_end")
    dt = _number(integ, "integrator", "dt")
    if t_end < 0 or dt <= 0:
        raise InvalidParameterError("integrator.t_end must be >= 0 and integrator.dt > 0")
    obs = doc["observables"]
    at = [t_end] if obs["at"] is None else sorted(float(t) for t in obs["at"])
    if any(t < 0 or t > t_end for t in at):
        raise InvalidParameterError("observables.at times must lie in [0, t_end]")
    ts = IntegratorConfig.uniform(t_end, dt).sample_times if t_end > 0 else np.array([0.0])
    ts = np.unique(np.concatenate([ts, at]))
    cfg = IntegratorConfig(
        ts,
        rel_tol=_number(integ, "integrator", "rel_tol"),
        abs_tol=_number(integ, "integrator", "abs_tol"),
        max_step=_number(integ, "integrator", "max_step"),
    )
    obs = dict(obs, at=at)
    if obs["qfunc_sites"] is not None:
        for j in obs["qfunc_sites"]:
            _site(j, f, "observables.qfunc_sites")
    if obs["imbalance"] and f != 2:
        raise InvalidParameterError("observables.imbalance needs a dimer (f=2)")
    if obs["fermion"] and model != "xxz":
        raise InvalidParameterError("observables.fermion applies to the xxz model only")
    if (obs["qfunc"] or obs["poisson_n_max"]) and model == "xxz":
        raise InvalidParameterError("Q-function and Poisson outputs apply to boson models only")
    sweep = doc["sweep"]
    _site(int(sweep["site"]), f, "sweep.site")
    return RunConfig(
        model=model,
        orderings=orderings,
        name=str(doc["name"]),
        params=params,
        initial=initial,
        integrator=cfg,
        observables=obs,
        sweep=sweep,
        exact=doc["exact"],
        echo={k: v for k, v in doc.items() if k not in MODELS or k == model},
        n_total=n_total,
        site=site,
        xxz_form=doc["xxz"]["form"],
    )


def load_config(path, overrides: dict | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)
