"""Parameter sweeps over the teleportation figures of merit.

A sweep is described by a JSON key/value tree (see ``DEFAULTS``).  Every key
can be overridden with a dotted ``key=value`` assignment.  Rows are computed
independently and written in grid order as CSV (or a JSON mirror).
"""

from __future__ import annotations

import copy
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import __version__
from .baselines import (
    BoundProvenance,
    applicable_bound,
    squeezed_uniform_infinite_bound,
)
from .core import FidelityRangeError, NoiseSpec, ResourceFamily, ResourceSpec
from .ensembles import InputEnsemble, InputFamily, ensemble_average_energy
from .moments import (
    InconsistentMomentsError,
    entanglement_free_baseline,
    moments_at,
    optimize_gain,
)
from .oracle_mc import mc_moments
from .quadrature import AccuracyError

AXES = {
    "r": ("resource", "r"),
    "L": ("ensemble", "L"),
    "sigma_s": ("ensemble", "sigma_s"),
    "sigma_c": ("ensemble", "sigma_c"),
    "R": ("noise", "R"),
    "tau": ("noise", "tau"),
}

DEFAULTS = {
    "description": "",
    "assertion": "",
    "families": ["TMSV", "PA", "PS"],
    "resource": {"r": 1.0, "gamma": 0.0, "delta": None, "lambda2_term": "delta1"},
    "ensemble": {
        "kind": "gaussian",
        "family": "coherent",
        "L": None,
        "coherent_cutoff": "energy",
        "sigma_s": None,
        "sigma_c": 1.0,
    },
    "noise": {"tau": 0.0, "R": 0.0},
    "axis": None,
    "gain": {"mode": "optimize", "g": None},
    "tolerances": {"rtol": 1e-7, "max_evals": 10_000_000},
    "mc_check": None,
    "reference_line": None,
}

AXIS_KEYS = {"name", "start", "stop", "n_points", "values"}
MC_KEYS = {"n_samples", "seed"}

RECOVERABLE = (AccuracyError, InconsistentMomentsError, FidelityRangeError)


class ConfigError(ValueError):
    pass


def _merge(base, update, path=""):
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, where + ".")
        elif base[key] is None and isinstance(value, dict):
            allowed = AXIS_KEYS if key == "axis" else MC_KEYS if key == "mc_check" else None
            if allowed is None:
                raise ConfigError(f"config key '{where}' does not take a mapping")
            bad = set(value) - allowed
            if bad:
                raise ConfigError(f"unknown config key '{where}.{sorted(bad)[0]}'")
            out[key] = dict(value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_assignment(text):
    """``a.b=value`` -> (["a", "b"], value); the value is read as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_assignment(tree, keys, value):
    tree = copy.deepcopy(tree)
    node = tree
    for i, k in enumerate(keys[:-1]):
        if node.get(k) is None and k in ("axis", "mc_check") and i == 0:
            node[k] = {}
        if k not in node or not isinstance(node[k], dict):
            raise ConfigError(f"unknown config key '{'.'.join(keys[:i + 1])}'")
        node = node[k]
    last = keys[-1]
    top = keys[0]
    if last not in node and top not in ("axis", "mc_check"):
        raise ConfigError(f"unknown config key '{'.'.join(keys)}'")
    if top == "axis" and len(keys) == 2 and last not in AXIS_KEYS:
        raise ConfigError(f"unknown config key '{'.'.join(keys)}'")
    if top == "mc_check" and len(keys) == 2 and last not in MC_KEYS:
        raise ConfigError(f"unknown config key '{'.'.join(keys)}'")
    node[last] = value
    return tree


def load_config(path=None, assignments=()):
    """Defaults, then the JSON file at ``path``, then ``key=value`` overrides."""
    tree = copy.deepcopy(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be an object")
        tree = _merge(tree, user)
    for text in assignments:
        keys, value = parse_assignment(text)
        tree = apply_assignment(tree, keys, value)
    return SweepConfig.from_tree(tree)


def _require_number(tree, dotted, positive=False, allow_none=False):
    node = tree
    for k in dotted.split("."):
        node = node[k]
    if node is None and allow_none:
        return None
    if isinstance(node, bool) or not isinstance(node, (int, float)) or not math.isfinite(node):
        raise ConfigError(f"config key '{dotted}' must be a finite number, got {node!r}")
    if positive and node <= 0:
        raise ConfigError(f"config key '{dotted}' must be positive")
    return float(node)


@dataclass(frozen=True)
class SweepConfig:
    tree: dict

    @classmethod
    def from_tree(cls, tree):
        cfg = cls(tree)
        cfg.validate()
        return cfg

    def validate(self):
        t = self.tree
        if not t["families"]:
            raise ConfigError("config key 'families' must list at least one resource family")
        for fam in t["families"]:
            try:
                ResourceFamily.parse(fam)
            except ValueError as exc:
                raise ConfigError(f"config key 'families': {exc}") from None
        if t["gain"]["mode"] not in ("optimize", "fixed"):
            raise ConfigError("config key 'gain.mode' must be 'optimize' or 'fixed'")
        if t["gain"]["mode"] == "fixed":
            g = _require_number(t, "gain.g")
            if not 0 <= g <= 1:
                raise ConfigError("config key 'gain.g' must lie in [0, 1]")
        _require_number(t, "tolerances.rtol", positive=True)
        _require_number(t, "tolerances.max_evals", positive=True)
        axis = t["axis"]
        if axis is not None:
            if axis.get("name") not in AXES:
                raise ConfigError(f"config key 'axis.name' must be one of {sorted(AXES)}")
            if axis.get("values") is None:
                for k in ("start", "stop"):
                    _require_number(t, f"axis.{k}")
                n = axis.get("n_points")
                if not isinstance(n, int) or n < 2:
                    raise ConfigError("config key 'axis.n_points' must be an integer >= 2")
            elif len(axis["values"]) < 2:
                raise ConfigError("config key 'axis.values' needs at least two entries")
        if t["mc_check"] is not None:
            n = t["mc_check"].get("n_samples")
            if not isinstance(n, int) or n < 1000:
                raise ConfigError("config key 'mc_check.n_samples' must be an integer >= 1000")
        if t["reference_line"] is not None:
            _require_number(t, "reference_line")
        # building the objects surfaces remaining errors with the key name
        value = self.grid()[0] if axis is not None else None
        try:
            self.ensemble_at(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"config key 'ensemble': {exc}") from None
        try:
            self.noise_at(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"config key 'noise': {exc}") from None
        for fam in t["families"]:
            try:
                self.resource_at(fam, value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"config key 'resource': {exc}") from None

    # -- accessors ---------------------------------------------------------
    @property
    def families(self):
        return [ResourceFamily.parse(f) for f in self.tree["families"]]

    @property
    def axis_name(self):
        return None if self.tree["axis"] is None else self.tree["axis"]["name"]

    @property
    def rtol(self):
        return float(self.tree["tolerances"]["rtol"])

    @property
    def max_evals(self):
        return int(self.tree["tolerances"]["max_evals"])

    def grid(self):
        axis = self.tree["axis"]
        if axis is None:
            return []
        if axis.get("values") is not None:
            return [float(v) for v in axis["values"]]
        return [float(v) for v in np.linspace(axis["start"], axis["stop"], axis["n_points"])]

    def _section(self, name, value):
        section = dict(self.tree[name])
        if value is not None and AXES[self.axis_name][0] == name:
            section[AXES[self.axis_name][1]] = value
        return section

    def ensemble_at(self, value=None):
        e = self._section("ensemble", value)
        kind = str(e["kind"]).lower()
        if kind == "uniform":
            if e["L"] is None:
                raise ValueError("uniform ensemble needs L")
            return InputEnsemble.uniform(e["family"], float(e["L"]), e["coherent_cutoff"])
        if kind == "gaussian":
            s = None if e["sigma_s"] is None else float(e["sigma_s"])
            c = None if e["sigma_c"] is None else float(e["sigma_c"])
            return InputEnsemble.gaussian(e["family"], sigma_s=s, sigma_c=c)
        raise ValueError(f"ensemble.kind must be 'uniform' or 'gaussian', got {e['kind']!r}")

    def noise_at(self, value=None):
        n = self._section("noise", value)
        return NoiseSpec(float(n["tau"]), float(n["R"]))

    def resource_at(self, family, value=None):
        res = self._section("resource", value)
        family = ResourceFamily.parse(family)
        if family is ResourceFamily.CUSTOM_DELTA:
            return ResourceSpec(family, float(res["r"]), delta=res["delta"], gamma=res["gamma"],
                                lambda2_term=res["lambda2_term"])
        return ResourceSpec(family, float(res["r"]), gamma=float(res["gamma"]),
                            lambda2_term=res["lambda2_term"])

    def window_flags(self):
        flags = []
        values = self.grid() or [None]
        for v in values:
            ens = self._section("ensemble", v)
            if ens.get("sigma_s") is not None and ens["sigma_s"] > 5.0:
                flags.append(f"sigma_s={ens['sigma_s']:g} outside studied window (<= 5)")
            if ens.get("sigma_c") is not None and ens["sigma_c"] > 10.0:
                flags.append(f"sigma_c={ens['sigma_c']:g} outside studied window (<= 10)")
        return sorted(set(flags))

    def canonical(self):
        return json.dumps(self.tree, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


# -- rows ------------------------------------------------------------------

def _family_columns(fam, mc):
    tag = fam.value
    cols = [f"F_{tag}", f"dF_{tag}", f"g_opt_{tag}", f"qerr_F_{tag}", f"qerr_f2_{tag}"]
    if mc:
        cols += [f"F_mc_{tag}", f"dF_mc_{tag}", f"stderr_F_mc_{tag}", f"stderr_dF_mc_{tag}"]
    cols += [f"advantage_{tag}", f"status_{tag}"]
    return cols


def columns(config: SweepConfig):
    """Column names; a function of the config alone."""
    cols = [config.axis_name] if config.axis_name else []
    mc = config.tree["mc_check"] is not None
    for fam in config.families:
        cols += _family_columns(fam, mc)
    cols += ["baseline_EF", "classical_bound", "bound", "bound_provenance"]
    if config.tree["reference_line"] is not None:
        cols += ["reference_line"] + [f"above_reference_{f.value}" for f in config.families]
    return cols


@lru_cache(maxsize=256)
def _cached_baseline(ensemble, rtol, max_evals):
    return entanglement_free_baseline(ensemble, rtol=rtol, max_evals=max_evals)


def run_point(config: SweepConfig, value=None) -> dict:
    """Evaluate every configured family at one grid value; returns a row dict."""
    ensemble = config.ensemble_at(value)
    noise = config.noise_at(value)
    rtol, max_evals = config.rtol, config.max_evals
    row = {}
    if config.axis_name:
        row[config.axis_name] = value
    mc = config.tree["mc_check"]
    try:
        baseline = _cached_baseline(ensemble, rtol, max_evals)
        bound = applicable_bound(ensemble, baseline)
    except RECOVERABLE:
        baseline, bound = math.nan, None
    margin = rtol
    for fam in config.families:
        tag = fam.value
        resource = config.resource_at(fam, value)
        status = "ok"
        try:
            if config.tree["gain"]["mode"] == "optimize":
                res = optimize_gain(resource, ensemble, noise, rtol, max_evals)
            else:
                res = moments_at(resource, ensemble, float(config.tree["gain"]["g"]), noise,
                                 rtol, max_evals)
            row.update({f"F_{tag}": res.F, f"dF_{tag}": res.dF, f"g_opt_{tag}": res.g_opt,
                        f"qerr_F_{tag}": res.quad_error_F, f"qerr_f2_{tag}": res.quad_error_f2})
        except RECOVERABLE as exc:
            status = type(exc).__name__
            for k in ("F", "dF", "g_opt", "qerr_F", "qerr_f2"):
                row[f"{k}_{tag}"] = math.nan
        if mc is not None:
            if status == "ok":
                est = mc_moments(resource, ensemble, row[f"g_opt_{tag}"], noise,
                                 n_samples=int(mc["n_samples"]), seed=int(mc.get("seed") or 0))
                row.update({f"F_mc_{tag}": est.F_hat, f"dF_mc_{tag}": est.dF_hat,
                            f"stderr_F_mc_{tag}": est.stderr_F,
                            f"stderr_dF_mc_{tag}": est.stderr_dF})
            else:
                for k in ("F_mc", "dF_mc", "stderr_F_mc", "stderr_dF_mc"):
                    row[f"{k}_{tag}"] = math.nan
        F = row[f"F_{tag}"]
        row[f"advantage_{tag}"] = bool(bound is not None and F > bound.value + margin)
        row[f"status_{tag}"] = status
    row["baseline_EF"] = baseline
    if bound is not None and bound.provenance is BoundProvenance.COHERENT_GAUSSIAN_FORMULA:
        row["classical_bound"] = bound.value
    else:
        row["classical_bound"] = math.nan
    row["bound"] = math.nan if bound is None else bound.value
    row["bound_provenance"] = "" if bound is None else bound.provenance.value
    ref = config.tree["reference_line"]
    if ref is not None:
        row["reference_line"] = float(ref)
        for fam in config.families:
            row[f"above_reference_{fam.value}"] = bool(row[f"F_{fam.value}"] > float(ref))
    return row


def _run_point_args(args):
    tree, value = args
    return run_point(SweepConfig(tree), value)


def run_sweep(config: SweepConfig, workers=1):
    """All rows of the sweep, in grid order."""
    grid = config.grid()
    if not grid:
        raise ConfigError("sweep needs an 'axis' section")
    if workers and workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(min(workers, len(grid))) as pool:
            return list(pool.map(_run_point_args, [(config.tree, v) for v in grid]))
    return [run_point(config, v) for v in grid]


def baseline_rows(config: SweepConfig):
    """Reference values for the configured ensemble (no entangled resource)."""
    ensemble = config.ensemble_at(None)
    rows = []
    ef = entanglement_free_baseline(ensemble, rtol=config.rtol, max_evals=config.max_evals)
    rows.append({"name": "entanglement_free", "value": ef,
                 "provenance": BoundProvenance.ENTANGLEMENT_FREE_NUMERIC.value})
    bound = applicable_bound(ensemble, ef)
    if bound.provenance is BoundProvenance.COHERENT_GAUSSIAN_FORMULA:
        rows.append({"name": "classical_bound", "value": bound.value,
                     "provenance": bound.provenance.value})
    if ensemble.family is InputFamily.SQUEEZED:
        rows.append({"name": "squeezed_uniform_infinite", "value": squeezed_uniform_infinite_bound(),
                     "provenance": BoundProvenance.SQUEEZED_UNIFORM_INFINITE.value})
    if config.tree["reference_line"] is not None:
        rows.append({"name": "reference_line", "value": float(config.tree["reference_line"]),
                     "provenance": BoundProvenance.USER_SUPPLIED.value})
    rows.append({"name": "average_energy", "value": ensemble_average_energy(ensemble),
                 "provenance": ""})
    return rows


def mc_check_rows(config: SweepConfig, n_samples=None, seed=None, workers=1):
    """Quadrature against Monte Carlo at the configured point, per family."""
    mc = config.tree["mc_check"] or {}
    n_samples = int(n_samples or mc.get("n_samples") or 1_000_000)
    seed = int(seed if seed is not None else (mc.get("seed") or 0))
    ensemble = config.ensemble_at(None)
    noise = config.noise_at(None)
    rows = []
    for fam in config.families:
        resource = config.resource_at(fam, None)
        if config.tree["gain"]["mode"] == "optimize":
            res = optimize_gain(resource, ensemble, noise, config.rtol, config.max_evals)
        else:
            res = moments_at(resource, ensemble, float(config.tree["gain"]["g"]), noise,
                             config.rtol, config.max_evals)
        est = mc_moments(resource, ensemble, res.g_opt, noise, n_samples=n_samples, seed=seed,
                         workers=workers)
        z_F = _zscore(res.F - est.F_hat, est.stderr_F)
        z_dF = _zscore(res.dF - est.dF_hat, est.stderr_dF)
        rows.append({
            "family": fam.value, "g": res.g_opt, "F_quad": res.F, "dF_quad": res.dF,
            "F_mc": est.F_hat, "dF_mc": est.dF_hat, "stderr_F": est.stderr_F,
            "stderr_dF": est.stderr_dF, "z_F": z_F, "z_dF": z_dF,
            "pass": bool(abs(z_F) < 4 and abs(z_dF) < 6), "n_samples": n_samples, "seed": seed,
        })
    return rows


def _zscore(diff, stderr):
    if stderr > 0:
        return diff / stderr
    return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)


# -- output ----------------------------------------------------------------

def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else f"{float(v):.12g}"
    return str(v)


def header_lines(config: SweepConfig, command, timestamp=True):
    lines = [
        f"cvfidelity {__version__} {command}",
        f"config_sha256={config.digest()}",
        f"config={config.canonical()}",
        f"rtol={config.rtol:g} max_evals={config.max_evals}",
    ]
    lines += [f"flag: {f}" for f in config.window_flags()]
    if timestamp:
        lines.append("generated=" + _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    return lines


def render(rows, cols, config, command, fmt="csv", timestamp=True):
    """Serialise rows as '#'-commented CSV or as a JSON document."""
    meta = header_lines(config, command, timestamp)
    if fmt == "json":
        doc = {
            "meta": meta,
            "columns": cols,
            "rows": [{c: _json_value(r.get(c)) for c in cols} for r in rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([format_value(r.get(c, "")) for c in cols])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) else float(f"{v:.12g}")
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def default_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1
