"""Experiment orchestration: configuration, multi-seed runs, baselines, reports."""

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .admm import DEFAULT_LAYER_SIZES, AdmmConfig, fit
from .data import ModalityData, load_labels, load_matrix
from .errors import AenmfError, ConfigError
from .metrics import MetricReport, evaluate
from .pretrain import DEFAULT_LAYER_ITERS, DEFAULT_LAYER_TOL, make_nonnegative
from .spectral import DEFAULT_KMEANS_ITERS, DEFAULT_RESTARTS, DEFAULT_SPECTRAL_K_NN, spectral_cluster
from .synth import SynthSpec, generate

log = logging.getLogger(__name__)

METRIC_NAMES = ("acc", "nmi", "ari", "f_score", "precision", "recall")
TRACE_FIELDS = ("iter", "objective", "residual_m1", "residual_m2", "residual_s", "max_update_delta", "hm_min")

# variants of the fusion model with some terms switched off
ABLATIONS = {
    "none": dict(use_encoder=False, graph=False, consensus=False),
    "ae": dict(use_encoder=True, graph=False, consensus=False),
    "gr": dict(use_encoder=False, graph=True, consensus=False),
    "cr": dict(use_encoder=False, graph=False, consensus=True),
    "ours": dict(use_encoder=True, graph=True, consensus=True),
}
BASELINES = ("single", "concat")


@dataclass
class DataSource:
    modalities: list
    labels: str
    orientation: str = "samples-as-rows"


@dataclass
class SpectralOptions:
    affinity: str = "cosine"
    k_nn: int = DEFAULT_SPECTRAL_K_NN
    restarts: int = DEFAULT_RESTARTS
    max_iters: int = DEFAULT_KMEANS_ITERS


@dataclass
class ExperimentConfig:
    data: DataSource = None
    synth: SynthSpec = None
    resample_synth: bool = False
    layer_sizes: list = field(default_factory=lambda: list(DEFAULT_LAYER_SIZES))
    beta: float = 0.01
    lam: float = 0.01
    mu1: float = 1.0
    mu2: float = 1.0
    mu3: float = 1.0
    max_iters: int = 150
    tol: float = 1e-4
    eps_guard: float = 1e-10
    pretrain_iters: int = DEFAULT_LAYER_ITERS
    pretrain_tol: float = DEFAULT_LAYER_TOL
    k: int = None
    k_nn: int = 5
    weighting: str = "heat"
    sigma: object = "auto"
    spectral: SpectralOptions = field(default_factory=SpectralOptions)
    n_runs: int = 10
    base_seed: int = 0
    use_ae_encoder_term: bool = True
    use_graph_reg: bool = True
    use_consensus_reg: bool = True
    ablations: list = field(default_factory=list)
    baselines: list = field(default_factory=list)
    trace_acc: bool = False

    def validate(self):
        if (self.data is None) == (self.synth is None):
            raise ConfigError("exactly one of 'data' and 'synth' must be given")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        unknown = [a for a in self.ablations if a not in ABLATIONS]
        if unknown:
            raise ConfigError(f"unknown ablation(s) {unknown}; choose from {sorted(ABLATIONS)}")
        unknown = [b for b in self.baselines if b not in BASELINES]
        if unknown:
            raise ConfigError(f"unknown baseline(s) {unknown}; choose from {list(BASELINES)}")
        if self.data is not None:
            for path in list(self.data.modalities) + [self.data.labels]:
                if not Path(path).exists():
                    raise ConfigError(f"data file not found: {path}")
        self.admm_config(ABLATIONS["ours"]).validate()
        return self

    def admm_config(self, switches=None):
        """Solver settings; ``switches`` (an ``ABLATIONS`` entry) override the config's own."""
        if switches is None:
            switches = dict(use_encoder=self.use_ae_encoder_term, graph=self.use_graph_reg,
                            consensus=self.use_consensus_reg)
        return AdmmConfig(
            beta=self.beta if switches["graph"] else 0.0,
            lam=self.lam if switches["consensus"] else 0.0,
            mu1=self.mu1, mu2=self.mu2, mu3=self.mu3, max_iters=self.max_iters, tol=self.tol,
            eps_guard=self.eps_guard, use_encoder=switches["use_encoder"])

    def to_dict(self):
        """Fully resolved configuration using the file's key names."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "synth":
                value = None if value is None else value.as_dict()
            elif f.name in ("data", "spectral"):
                value = None if value is None else asdict(value)
            out["lambda" if f.name == "lam" else f.name] = value
        if out["data"] is None:
            del out["data"]
        if out["synth"] is None:
            del out["synth"]
        return out


def _build(cls, raw, where):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be a JSON object")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {unknown}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(raw, base_dir=None):
    """Build an ``ExperimentConfig`` from parsed JSON; unknown keys are errors.

    Relative data paths are resolved against ``base_dir``.
    """
    raw = dict(raw)
    if "lam" in raw:
        raise ConfigError("unknown key(s) in config: ['lam'] (use 'lambda')")
    if "lambda" in raw:
        raw["lam"] = raw.pop("lambda")
    if raw.get("data") is not None:
        data = _build(DataSource, raw["data"], "data")
        if base_dir is not None:
            data.modalities = [str(Path(base_dir, p)) for p in data.modalities]
            data.labels = str(Path(base_dir, data.labels))
        raw["data"] = data
    if raw.get("synth") is not None:
        synth = _build(SynthSpec, raw["synth"], "synth")
        synth.modality_dims = tuple(synth.modality_dims)
        raw["synth"] = synth
    if "spectral" in raw:
        raw["spectral"] = _build(SpectralOptions, raw["spectral"], "spectral")
    return _build(ExperimentConfig, raw, "config").validate()


def load_config(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw, base_dir=path.parent)


def load_dataset(config, run=0):
    """Return ``(modalities, truth)`` for run ``run`` of an experiment."""
    if config.synth is not None:
        spec = config.synth
        if config.resample_synth:
            spec = SynthSpec(**{**asdict(spec), "seed": spec.seed + run})
        return generate(spec)
    src = config.data
    mods = [ModalityData(load_matrix(p, src.orientation), name=Path(p).stem) for p in src.modalities]
    truth = load_labels(src.labels)
    n = {m.n_samples for m in mods}
    if len(n) != 1 or truth.size not in n:
        raise ConfigError(f"sample counts disagree: modalities {[m.n_samples for m in mods]}, labels {truth.size}")
    return mods, truth


@dataclass
class RunReport:
    config: dict
    methods: dict
    aggregate: dict
    timings: dict = field(default_factory=dict)

    def to_json(self):
        """Deterministic JSON of everything except wall-clock timings."""
        body = {"config": self.config, "methods": self.methods, "aggregate": self.aggregate}
        return json.dumps(body, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _aggregate(runs):
    ok = [r["metrics"] for r in runs if r["metrics"] is not None]
    out = {"n_runs": len(runs), "n_failed": len(runs) - len(ok)}
    for name in METRIC_NAMES:
        vals = np.array([m[name] for m in ok], dtype=float)
        out[name] = {"mean": float(vals.mean()) if vals.size else None,
                     "std": float(vals.std()) if vals.size else None}
    return out


def _spectral_labels(H, k, seed, opts):
    return spectral_cluster(H, k, seed=seed, affinity=opts.affinity, k_nn=opts.k_nn,
                            restarts=opts.restarts, max_iters=opts.max_iters).labels


def _record(runs, seed, fn, timings, key):
    t0 = time.perf_counter()
    try:
        metrics, traces = fn()
        runs.append({"seed": seed, "metrics": metrics.as_dict(), "error": None, "traces": traces})
    except (AenmfError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.error("%s run with seed %d failed: %s", key, seed, exc)
        runs.append({"seed": seed, "metrics": None, "error": f"{type(exc).__name__}: {exc}", "traces": []})
    timings.setdefault(key, []).append(time.perf_counter() - t0)


def run_experiment(config):
    """Run every requested method for ``n_runs`` seeds and score it.

    Run ``r`` uses seed ``base_seed + r`` for the solver and the final
    clustering.  Method names: ``ours`` (config switches applied), the named
    ablations, ``single:<modality>`` for each modality and ``concat``.
    """
    config.validate()
    methods = {}
    timings = {}
    variants = [("ours", None)] + [(name, ABLATIONS[name]) for name in config.ablations if name != "ours"]
    for r in range(config.n_runs):
        seed = config.base_seed + r
        t0 = time.perf_counter()
        mods, truth = load_dataset(config, r)
        timings.setdefault("load", []).append(time.perf_counter() - t0)
        k = config.k or int(np.unique(truth).size)

        for name, switches in variants:
            admm = config.admm_config(switches)

            def run_fit(admm=admm):
                traces = []
                callback = None
                if config.trace_acc:
                    def callback(state, trace):
                        acc = evaluate(truth, _spectral_labels(state.Hstar, k, seed, config.spectral)).acc
                        traces.append({**trace.as_dict(), "acc": acc})
                Hstar, its, _ = fit(mods, config.layer_sizes, admm, seed=seed, k_nn=config.k_nn,
                                    weighting=config.weighting, sigma=config.sigma,
                                    pretrain_iters=config.pretrain_iters, pretrain_tol=config.pretrain_tol,
                                    callback=callback)
                if not config.trace_acc:
                    traces = [t.as_dict() for t in its]
                labels = _spectral_labels(Hstar, k, seed, config.spectral)
                return evaluate(truth, labels), traces

            _record(methods.setdefault(name, []), seed, run_fit, timings, name)

        if "single" in config.baselines:
            for m in mods:
                _record(methods.setdefault(f"single:{m.name}", []), seed,
                        lambda m=m: (evaluate(truth, _spectral_labels(m.X, k, seed, config.spectral)), []),
                        timings, "single")
        if "concat" in config.baselines:
            stacked = np.vstack([make_nonnegative(m.X) for m in mods])
            _record(methods.setdefault("concat", []), seed,
                    lambda: (evaluate(truth, _spectral_labels(stacked, k, seed, config.spectral)), []),
                    timings, "concat")

    aggregate = {name: _aggregate(runs) for name, runs in methods.items()}
    return RunReport(config=config.to_dict(), methods=methods, aggregate=aggregate,
                     timings={k: [float(x) for x in v] for k, v in timings.items()})


def summary_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("method", "n_runs", "n_failed") + METRIC_NAMES)
    for name, agg in report.aggregate.items():
        cells = []
        for metric in METRIC_NAMES:
            mean, std = agg[metric]["mean"], agg[metric]["std"]
            cells.append("nan" if mean is None else f"{mean:.4f}±{std:.4f}")
        w.writerow([name, agg["n_runs"], agg["n_failed"]] + cells)
    return buf.getvalue()


def trace_csv(traces):
    cols = list(TRACE_FIELDS)
    if traces and "acc" in traces[0]:
        cols.append("acc")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for t in traces:
        w.writerow([repr(float(t[c])) if isinstance(t[c], float) else t[c] for c in cols])
    return buf.getvalue()


def emit_report(report, out_dir):
    """Write ``result.json``, ``summary.csv``, ``traces/*.csv`` and ``timings.json``.

    ``out_dir == "-"`` prints the JSON result to standard output instead.
    Everything except ``timings.json`` is a pure function of the report's
    contents.  Returns the list of written paths.
    """
    if str(out_dir) == "-":
        print(report.to_json(), end="")
        return []
    out = Path(out_dir)
    written = []
    try:
        (out / "traces").mkdir(parents=True, exist_ok=True)
        for name, text in (("result.json", report.to_json()), ("summary.csv", summary_csv(report))):
            (out / name).write_text(text, encoding="utf-8")
            written.append(out / name)
        for method, runs in report.methods.items():
            if not any(r["traces"] for r in runs) and method.startswith(("single:", "concat")):
                continue
            for r in runs:
                path = out / "traces" / f"{method.replace(':', '_')}_seed{r['seed']}.csv"
                path.write_text(trace_csv(r["traces"]), encoding="utf-8")
                written.append(path)
        path = out / "timings.json"
        path.write_text(json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
        written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return written
