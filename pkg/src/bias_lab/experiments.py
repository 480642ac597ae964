"""Named experiments: configuration, execution and on-disk artifacts.

A run produces one ``trace.csv`` per (architecture, depth) cell under
``output_dir/<kind>-L<depth>/`` and a ``summary.json`` holding the fully
resolved configuration, per-cell results and a list of named assertions.
"""
import copy
import datetime
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import certify, datagen, models, spectral, training
from .dataset import Dataset
from .errors import BiasLabError, ConfigError

SCHEMA_VERSION = 1


class ExperimentName(str, Enum):
    FCN_DEPTH_INVARIANCE = "fcn-depth-invariance"
    CONV_DEPTH_BIAS = "conv-depth-bias"
    DIAG_DEPTH_BIAS = "diag-depth-bias"
    LEMMA_CHECKS = "lemma-checks"
    RP_FORMS = "rp-forms"
    KKT_TRACE = "kkt-trace"


DEFAULT_THRESHOLDS = {
    "min_cosine": 0.99,
    "l1_cosine": 0.98,
    "l1_objective_rel": 0.05,
    "kkt_residual": 0.05,
    "kkt_improvement": 0.5,
    "early_fraction": 0.1,
    "stationarity": 0.05,
    "gradient_support": 0.05,
    "lemma_tol": 1e-10,
    "fft_gd_tol": 1e-8,
    "rp_rel": 1e-3,
    "balanced_tol": 1e-10,
}


@dataclass
class SolverSettings:
    tol: float = 1e-8
    margin_tol: float = 1e-3
    zero_tol: float = 1e-6
    zero_tol_sweep: list = field(default_factory=lambda: [1e-4, 1e-6, 1e-8])
    support_margin_tol: float = 1e-2


@dataclass
class ExperimentConfig:
    """Everything a run needs. ``train_overrides`` maps a depth (as a
    string key) to TrainConfig fields that replace ``train`` for that depth."""

    experiment: ExperimentName
    gen: datagen.GenSpec = None
    train: training.TrainConfig = field(default_factory=training.TrainConfig)
    depths: list = field(default_factory=lambda: [1, 2, 3])
    train_overrides: dict = field(default_factory=dict)
    solver: SolverSettings = field(default_factory=SolverSettings)
    thresholds: dict = field(default_factory=dict)
    dims: list = field(default_factory=lambda: [2, 4, 8])
    seeds: int = 50
    gd_steps: int = 20
    rp_samples: int = 20
    rp_perturbations: int = 100
    output_dir: str = "out"

    def __post_init__(self):
        try:
            self.experiment = ExperimentName(self.experiment)
        except ValueError as exc:
            raise ConfigError(f"unknown experiment {self.experiment!r}") from exc
        if not self.depths:
            raise ConfigError("depths must be a nonempty list")
        if any(int(L) != L or L < 1 for L in self.depths):
            raise ConfigError(f"depths must be positive integers, got {self.depths}")
        self.depths = [int(L) for L in self.depths]
        if not self.dims or any(int(D) != D or D < 1 for D in self.dims):
            raise ConfigError(f"dims must be a nonempty list of positive integers, got {self.dims}")
        if self.seeds < 1 or self.gd_steps < 0:
            raise ConfigError("seeds must be >= 1 and gd_steps >= 0")
        unknown = set(self.thresholds) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise ConfigError(f"unknown thresholds: {sorted(unknown)}")
        self.thresholds = {**DEFAULT_THRESHOLDS, **self.thresholds}
        needs_data = self.experiment not in (ExperimentName.LEMMA_CHECKS, ExperimentName.RP_FORMS)
        if needs_data and self.gen is None:
            raise ConfigError(f"experiment {self.experiment.value} needs a 'gen' section")
        self.train_overrides = {str(k): dict(v) for k, v in self.train_overrides.items()}
        for key in self.train_overrides:
            if not key.isdigit():
                raise ConfigError(f"train_overrides keys must be depths, got {key!r}")
            self.train_for(int(key))
        if self.rp_samples < 1 or self.rp_perturbations < 0:
            raise ConfigError("rp_samples must be >= 1 and rp_perturbations >= 0")

    def train_for(self, depth):
        over = self.train_overrides.get(str(depth), {})
        try:
            return training.TrainConfig(**{**self.train.to_dict(), **over})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad training config for depth {depth}: {exc}") from exc

    def to_dict(self):
        return {
            "experiment": self.experiment.value,
            "gen": None if self.gen is None else self.gen.to_dict(),
            "train": self.train.to_dict(),
            "depths": list(self.depths),
            "train_overrides": copy.deepcopy(self.train_overrides),
            "solver": asdict(self.solver),
            "thresholds": dict(self.thresholds),
            "dims": list(self.dims),
            "seeds": self.seeds,
            "gd_steps": self.gd_steps,
            "rp_samples": self.rp_samples,
            "rp_perturbations": self.rp_perturbations,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment' field")
        try:
            if d.get("gen") is not None:
                d["gen"] = datagen.GenSpec.from_dict(d["gen"])
            if "train" in d:
                d["train"] = training.TrainConfig(**d["train"])
            if "solver" in d:
                d["solver"] = SolverSettings(**d["solver"])
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**d)


def set_dotted(d, path, value):
    """Set ``d[a][b][c] = value`` for ``path = "a.b.c"``, creating dicts."""
    keys = path.split(".")
    cur = d
    for k in keys[:-1]:
        nxt = cur.get(k)
        if nxt is None:
            nxt = cur[k] = {}
        elif not isinstance(nxt, dict):
            raise ConfigError(f"cannot descend into {k!r} of {path!r}")
        cur = nxt
    cur[keys[-1]] = value


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_csv_text(trace, extra=None):
    """CSV text of a trace; ``extra`` maps column name to per-record values."""
    extra = extra or {}
    cols = list(training.TRACE_COLUMNS) + list(extra)
    lines = [",".join(cols)]
    for i, r in enumerate(trace.records):
        row = [str(r.t)] + [repr(float(getattr(r, c))) for c in training.TRACE_COLUMNS[1:]]
        row += [repr(float(extra[c][i])) for c in extra]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _finite(x):
    """JSON-safe float: non-finite values become None."""
    x = float(x)
    return x if math.isfinite(x) else None


class Assertions:
    def __init__(self, thresholds):
        self.thresholds = thresholds
        self.items = []

    def check(self, name, value, threshold, op="<="):
        value = float(value)
        ok = {"<=": value <= threshold, ">=": value >= threshold,
              "<": value < threshold, ">": value > threshold}[op]
        ok = bool(ok and math.isfinite(value))
        self.items.append({"name": name, "value": _finite(value), "op": op,
                           "threshold": float(threshold), "passed": ok})
        return ok

    def flag(self, name, ok):
        self.items.append({"name": name, "passed": bool(ok)})

    @property
    def passed(self):
        return all(a["passed"] for a in self.items)


# --------------------------------------------------------------------------
# training cells
# --------------------------------------------------------------------------

def _cell_dir(cfg, kind, depth):
    return Path(cfg.output_dir) / f"{kind}-L{depth}"


def _checkpoint(trace, fraction):
    """Record closest to ``fraction`` of the run's iterations."""
    target = fraction * trace.iterations
    return min(trace.records, key=lambda r: abs(r.t - target))


def _kkt(direction, data, p, settings, zero_tol=None, domain="fourier"):
    """KKT certificate at a unit-margin rescaling of ``direction``, or None
    when the direction does not separate the data."""
    if not np.min(training.margins(direction, data)) > 0:
        return None
    w = training.normalize_to_unit_margin(direction, data)
    zt = settings.zero_tol if zero_tol is None else zero_tol
    return certify.kkt_residual_bridge(w, data, p, settings.margin_tol, zt, domain)


def _train_cell(cfg, kind, depth, data, reference=None, extra_columns=None):
    arch = getattr(models.Architecture, kind)(data.dim, depth)
    tc = cfg.train_for(depth)
    params, trace = training.gd_train(arch, data, tc)
    if reference is not None:
        trace.set_reference(reference)
    extra = extra_columns(trace) if extra_columns else None
    write_atomic(_cell_dir(cfg, kind, depth) / "trace.csv", trace_csv_text(trace, extra))
    return params, trace, tc


def _common_cell(params, trace, tc, data, settings, asserts, tag):
    fin = trace.final
    out = {
        "train": tc.to_dict(),
        "iterations": trace.iterations,
        "stop_reason": trace.stop_reason,
        "final_loss": fin.loss,
        "final_w_norm": fin.w_norm,
        "final_min_margin": fin.min_margin,
        "direction": [float(v) for v in fin.direction],
    }
    if fin.min_margin > 0:
        res = certify.gradient_support_residual(fin.direction, fin.grad_direction, data,
                                                settings.support_margin_tol)
        out["gradient_support_residual"] = res
        asserts.check(f"{tag}.gradient_support_residual", res, asserts.thresholds["gradient_support"])
    else:
        asserts.flag(f"{tag}.separates_data", False)
    return out


def _run_fcn(cfg, data, asserts):
    th, settings = cfg.thresholds, cfg.solver
    w2 = certify.l2_max_margin(data, tol=settings.tol).solution.w
    cells, finals = {}, {}
    for L in cfg.depths:
        tag = f"full-L{L}"
        params, trace, tc = _train_cell(cfg, "full", L, data, reference=w2)
        cell = _common_cell(params, trace, tc, data, settings, asserts, tag)
        cell["cos_l2"] = trace.final.cos_to_reference
        asserts.check(f"{tag}.cos_l2", cell["cos_l2"], th["min_cosine"], ">=")
        if trace.final.min_margin > 0:
            cell["stationarity_residual"] = certify.param_stationarity_residual(params, data)
            asserts.check(f"{tag}.stationarity", cell["stationarity_residual"], th["stationarity"])
        cells[tag] = cell
        finals[L] = trace.final.direction
    pairs = {}
    for i, a in enumerate(cfg.depths):
        for b in cfg.depths[i + 1:]:
            c = training.cosine(finals[a], finals[b])
            pairs[f"L{a}-L{b}"] = c
            asserts.check(f"pairwise.L{a}-L{b}", c, th["min_cosine"], ">=")
    return {"l2_solution": [float(v) for v in w2], "cells": cells, "pairwise_cosine": pairs}


def _zero_tol_report(direction, data, p, settings, domain="fourier"):
    out = {}
    for zt in settings.zero_tol_sweep:
        cert = _kkt(direction, data, p, settings, zt, domain)
        out[repr(float(zt))] = None if cert is None else {
            "equality_residual": cert.equality_residual,
            "inequality_violation": cert.inequality_violation,
            "n_nonzero": cert.n_nonzero,
            "support_size": len(cert.support_indices),
        }
    return out


def _phase_columns(trace, dim):
    """Phase of each Fourier coefficient of the direction, ``d = 0..D//2``.

    Diagnostic only: whether phases settle on coordinates whose magnitude
    goes to zero cannot be decided from a finite run.
    """
    hats = np.array([spectral.dft(r.direction) for r in trace.records])
    return {f"phase_{d}": np.angle(hats[:, d]) for d in range(dim // 2 + 1)}


def _run_conv(cfg, data, asserts):
    th, settings = cfg.thresholds, cfg.solver
    r2 = certify.l2_max_margin(data, tol=settings.tol)
    r1 = certify.l1_fourier_max_margin(data, tol=settings.tol)
    w2, w1 = r2.solution.w, r1.solution.w
    cells = {}
    for L in cfg.depths:
        tag = f"conv-L{L}"
        params, trace, tc = _train_cell(cfg, "conv", L, data, reference=w1,
                                        extra_columns=lambda tr: _phase_columns(tr, data.dim))
        cell = _common_cell(params, trace, tc, data, settings, asserts, tag)
        fin = trace.final
        cell["cos_l1_fourier"] = training.cosine(fin.direction, w1)
        cell["cos_l2"] = training.cosine(fin.direction, w2)
        if L == 1:
            asserts.check(f"{tag}.cos_l2", cell["cos_l2"], th["min_cosine"], ">=")
        elif L == 2:
            asserts.check(f"{tag}.cos_l1_fourier", cell["cos_l1_fourier"], th["l1_cosine"], ">=")
            asserts.check(f"{tag}.closer_to_l1_than_l2",
                          cell["cos_l1_fourier"] - cell["cos_l2"], 0.0, ">")
            if fin.min_margin > 0:
                wn = training.normalize_to_unit_margin(fin.direction, data)
                rel = abs(float(np.sum(np.abs(wn.w_hat))) - r1.objective) / r1.objective
                cell["l1_objective_rel_error"] = rel
                asserts.check(f"{tag}.l1_objective_rel_error", rel, th["l1_objective_rel"])
        if L >= 2:
            p = 2.0 / L
            early = _checkpoint(trace, th["early_fraction"])
            c_fin = _kkt(fin.direction, data, p, settings)
            c_early = _kkt(early.direction, data, p, settings)
            cell["kkt_p"] = p
            cell["kkt_final"] = None if c_fin is None else c_fin.to_dict()
            cell["kkt_early"] = None if c_early is None else c_early.to_dict()
            cell["kkt_early_t"] = early.t
            cell["kkt_zero_tol_sensitivity"] = _zero_tol_report(fin.direction, data, p, settings)
            if L >= 3:
                if c_fin is None or c_early is None:
                    asserts.flag(f"{tag}.kkt_checkpoints_separate_data", False)
                else:
                    asserts.check(f"{tag}.kkt_equality_residual", c_fin.equality_residual,
                                  th["kkt_residual"])
                    asserts.check(f"{tag}.kkt_improvement",
                                  c_fin.equality_residual,
                                  th["kkt_improvement"] * c_early.equality_residual)
        cells[tag] = cell
    return {
        "l2_solution": [float(v) for v in w2],
        "l1_fourier_solution": [float(v) for v in w1],
        "l1_fourier_objective": r1.objective,
        "l1_l2_cosine": training.cosine(w1, w2),
        "cells": cells,
    }


def _run_diag(cfg, data, asserts):
    th, settings = cfg.thresholds, cfg.solver
    w2 = certify.l2_max_margin(data, tol=settings.tol).solution.w
    cells = {}
    for L in cfg.depths:
        tag = f"diag-L{L}"
        params, trace, tc = _train_cell(cfg, "diag", L, data, reference=w2)
        cell = _common_cell(params, trace, tc, data, settings, asserts, tag)
        fin = trace.final
        cell["cos_l2"] = fin.cos_to_reference
        if fin.min_margin > 0:
            cell["stationarity_residual"] = certify.param_stationarity_residual(params, data)
            asserts.check(f"{tag}.stationarity", cell["stationarity_residual"], th["stationarity"])
            # reported only: the time-domain bridge stationarity of the limit
            cell["kkt_time_domain"] = _zero_tol_report(fin.direction, data, 2.0 / L, settings, "time")
        cells[tag] = cell
    return {"l2_solution": [float(v) for v in w2], "cells": cells}


def _run_kkt_trace(cfg, data, asserts):
    th, settings = cfg.thresholds, cfg.solver
    cells = {}
    for L in cfg.depths:
        tag = f"conv-L{L}"
        p = 2.0 / L

        def columns(trace, p=p):
            res = []
            for r in trace.records:
                c = _kkt(r.direction, data, p, settings)
                res.append(math.nan if c is None else c.equality_residual)
            return {"kkt_residual": res, **_phase_columns(trace, data.dim)}

        params, trace, tc = _train_cell(cfg, "conv", L, data, extra_columns=columns)
        cell = _common_cell(params, trace, tc, data, settings, asserts, tag)
        c_fin = _kkt(trace.final.direction, data, p, settings)
        cell["kkt_p"] = p
        cell["kkt_final"] = None if c_fin is None else c_fin.to_dict()
        if c_fin is None:
            asserts.flag(f"{tag}.final_separates_data", False)
        else:
            asserts.check(f"{tag}.kkt_equality_residual", c_fin.equality_residual, th["kkt_residual"])
        cells[tag] = cell
    return {"cells": cells}


# --------------------------------------------------------------------------
# lemma checks and penalty forms
# --------------------------------------------------------------------------

def lemma_checks(dims, depths, seeds, gd_steps=20, eta=0.01):
    """Worst-case deviations for the algebraic identities of the
    convolutional parameterization over random draws.

    * ``fourier_product``: ``dft(P_conv(u))`` against ``prod_l dft(u_l)``.
    * ``correlation``: ``dft(h * u)`` against ``dft(h) conj(dft(u))``.
    * ``euler``: ``<u, J^T g>`` against ``L <P(u), g>``.
    * ``layered_forward``: ``P_conv(u)`` against the layer-by-layer map.
    * ``fft_gd``: time-domain gradient descent against the same run carried
      out on Fourier-domain diagonal factors.
    """
    worst = {k: 0.0 for k in ("fourier_product", "correlation", "euler", "layered_forward", "fft_gd")}
    for D in dims:
        for L in depths:
            arch = models.Architecture.conv(D, L)
            for seed in range(seeds):
                rng = np.random.default_rng([D, L, seed])
                params = models.init_params(arch, 1.0, rng)
                w = models.predictor(params)
                prod = models.diag_product([spectral.dft(u) for u in params.layers])
                worst["fourier_product"] = max(worst["fourier_product"],
                                               float(np.max(np.abs(w.w_hat - prod))))
                h, u = rng.standard_normal(D), rng.standard_normal(D)
                lhs = spectral.dft(spectral.circ_cross_correlate(h, u))
                rhs = spectral.dft(h) * np.conj(spectral.dft(u))
                worst["correlation"] = max(worst["correlation"], float(np.max(np.abs(lhs - rhs))))
                g = rng.standard_normal(D)
                jt = models.grad_params(params, g)
                e = abs(float(params.flat() @ jt.flat()) - L * float(w.w @ g))
                worst["euler"] = max(worst["euler"], e / max(1.0, abs(L * float(w.w @ g))))
                X = rng.standard_normal((3, D))
                fwd = np.array([models.conv_forward(params, x) for x in X])
                worst["layered_forward"] = max(worst["layered_forward"],
                                               float(np.max(np.abs(fwd - X @ w.w))))
                if gd_steps:
                    worst["fft_gd"] = max(worst["fft_gd"],
                                          fft_gd_deviation(*_gd_problem(arch, rng), eta, gd_steps))
    return worst


def _gd_problem(arch, rng, n_samples=None, init_scale=0.5):
    """Random unit-norm samples with random labels and a small random init,
    a setting where fixed-step descent stays bounded."""
    D = arch.dim
    n = n_samples or 2 * D
    X = rng.standard_normal((n, D))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    y = np.where(rng.standard_normal(n) >= 0, 1.0, -1.0)
    return models.init_params(arch, init_scale, rng), Dataset(X, y)


def fft_gd_deviation(params, data, eta, steps):
    """Largest elementwise gap between the DFT of time-domain iterates and
    the Fourier-domain iterates over ``steps`` fixed-size steps."""
    hats = models.fourier_factorization(params).layers
    freq = training.fourier_gd_trajectory(hats, data, eta, steps)
    time = training.time_gd_trajectory(params, data, eta, steps)
    gap = 0.0
    for a, b in zip(time, freq):
        for u, uh in zip(a, b):
            gap = max(gap, float(np.max(np.abs(spectral.dft(u) - uh))))
    return gap


def _run_lemmas(cfg, asserts):
    th = cfg.thresholds
    worst = lemma_checks(cfg.dims, cfg.depths, cfg.seeds, cfg.gd_steps, cfg.train.eta)
    for name in ("fourier_product", "correlation", "euler", "layered_forward"):
        asserts.check(f"lemma.{name}", worst[name], th["lemma_tol"])
    if cfg.gd_steps:
        asserts.check("lemma.fft_gd", worst["fft_gd"], th["fft_gd_tol"])
    return {"worst_deviation": worst}


def rp_checks(kind, D, L, n_samples, n_perturb, seed):
    """Compare closed-form and numeric induced penalties on random ``w``.

    Returns worst relative oracle gap, worst balanced-factorization gap and
    the number of perturbed factorizations that beat the closed form.
    """
    arch = getattr(models.Architecture, kind)(D, L)
    rng = np.random.default_rng([D, L, seed, len(kind)])
    oracle_gap = balanced_gap = 0.0
    violations = 0
    for i in range(n_samples):
        w = rng.standard_normal(D)
        closed = models.rp_closed_form(arch, w)
        num = certify.rp_numeric_oracle(arch, w, seed=int(rng.integers(2**31)))
        oracle_gap = max(oracle_gap, abs(num - closed) / closed)
        bal = models.balanced_factorization(arch, w)
        rebuilt = models.predictor(bal).w
        balanced_gap = max(balanced_gap, abs(bal.norm_sq() - closed) / closed,
                           float(np.max(np.abs(rebuilt - w))))
        for _ in range(n_perturb):
            other = models.gauge_perturb(bal, rng, spread=0.5)
            if other.norm_sq() < closed * (1 - 1e-12):
                violations += 1
    return oracle_gap, balanced_gap, violations


def _run_rp(cfg, asserts):
    th = cfg.thresholds
    out = {}
    for kind in ("full", "diag", "conv"):
        for D in cfg.dims:
            for L in cfg.depths:
                tag = f"{kind}-D{D}-L{L}"
                og, bg, viol = rp_checks(kind, D, L, cfg.rp_samples, cfg.rp_perturbations,
                                         cfg.train.seed)
                out[tag] = {"oracle_rel_gap": og, "balanced_gap": bg, "amgm_violations": viol}
                asserts.check(f"{tag}.oracle_rel_gap", og, th["rp_rel"])
                asserts.check(f"{tag}.balanced_gap", bg, th["balanced_tol"])
                asserts.check(f"{tag}.amgm_violations", viol, 0)
    return {"cells": out}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def run(cfg, timestamp=None):
    """Execute ``cfg``; returns the summary dict (also written to disk)."""
    asserts = Assertions(cfg.thresholds)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment.value,
        "timestamp": timestamp or datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": cfg.to_dict(),
    }
    try:
        name = cfg.experiment
        if name is ExperimentName.LEMMA_CHECKS:
            results = _run_lemmas(cfg, asserts)
        elif name is ExperimentName.RP_FORMS:
            results = _run_rp(cfg, asserts)
        else:
            data = datagen.generate(cfg.gen)
            data_dir = Path(cfg.output_dir)
            data_dir.mkdir(parents=True, exist_ok=True)
            datagen.save(data, cfg.gen, data_dir / "data.csv")
            runner = {
                ExperimentName.FCN_DEPTH_INVARIANCE: _run_fcn,
                ExperimentName.CONV_DEPTH_BIAS: _run_conv,
                ExperimentName.DIAG_DEPTH_BIAS: _run_diag,
                ExperimentName.KKT_TRACE: _run_kkt_trace,
            }[name]
            results = runner(cfg, data, asserts)
            results["separability_margin"] = datagen.separability_margin(data)
        summary["results"] = results
        summary["error"] = None
    except BiasLabError as exc:
        summary["results"] = None
        summary["error"] = {"type": type(exc).__name__, "message": str(exc)}
    summary["assertions"] = asserts.items
    summary["passed"] = summary["error"] is None and asserts.passed
    write_atomic(Path(cfg.output_dir) / "summary.json", dumps(summary))
    return summary


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return _finite(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Enum):
        return obj.value
    return obj
