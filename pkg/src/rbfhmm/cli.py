"""Command-line surface: synth, fit, classify, eval, report.

Every command resolves its configuration (defaults, then config file, then
flags), writes the resolved config next to its artifacts, and exits 0 on
success.  Failures print a machine-readable JSON error to stderr and exit
with a distinct code: 2 for config or schema problems, 3 for missing inputs,
4 for unwritable outputs, 1 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import classify as clf
from . import plots
from .config import RunConfig, default_config, load_config, save_config
from .data import ingest_uci_eeg
from .emissions import EmissionHyperprior, TimeSeries
from .errors import (
    MissingInputError,
    RbfHmmError,
    SchemaError,
)
from .hmm import EmissionTemplate, GibbsConfig, StickyHdpPrior, fit
from .kernels import GaussianDecay, PolyharmonicSpline
from .metrics import confidence_histogram, matched_state_accuracy, transition_mse
from .synth import default_synth_spec, simulate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCHEMA = 2
EXIT_MISSING_INPUT = 3
EXIT_UNWRITABLE = 4


# ---------------------------------------------------------------------------
# small io helpers
# ---------------------------------------------------------------------------

def _ensure_outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise PermissionError(f"output directory {out} is not writable: {exc}") from None
    return out


def _require_file(path, what: str) -> Path:
    if not path:
        raise MissingInputError(f"no {what} path given")
    p = Path(path)
    if not p.exists():
        raise MissingInputError(f"{what} not found: {p}")
    return p


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_series_csv(values: np.ndarray, path) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] == 1 and values.shape[1] > 1:
        values = values.T
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"y{i}" for i in range(values.shape[1])])
        for row in values:
            writer.writerow([repr(float(v)) for v in row])


def read_series_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise SchemaError(f"{path}: malformed series file")
    return arr


def write_labels_csv(labels: np.ndarray, path, column: str = "z") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([column])
        for v in np.asarray(labels).ravel():
            writer.writerow([int(v)])


def read_labels_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.asarray([int(row[0]) for row in reader if row], dtype=np.int64)


def write_matrix_csv(mat: np.ndarray, path, prefix: str = "c",
                     columns=None) -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns or [f"{prefix}{i}" for i in range(mat.shape[1])])
        for row in mat:
            writer.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.asarray([[float(v) for v in row] for row in reader if row])


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg.set("run", "seed", args.seed)
    if args.out is not None:
        cfg.set("run", "out", args.out)
    if getattr(args, "threads", None) is not None:
        cfg.set("run", "threads", args.threads)
    for flag, section_key in (
        ("series", ("paths", "series")),
        ("truth", ("paths", "truth")),
        ("data", ("paths", "data")),
        ("fit_dir", ("paths", "fit_dir")),
        ("synth_dir", ("paths", "synth_dir")),
        ("classify_dir", ("paths", "classify_dir")),
        ("run_dir", ("paths", "run_dir")),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            cfg.set(*section_key, value)
    return cfg


def _build_basis(cfg: RunConfig, eta_fallback=None):
    name = cfg.get("model", "basis")
    eta = cfg.get("model", "eta")
    if name == "gaussian":
        if eta is None:
            if eta_fallback is None:
                return None  # resolved from the data later
            eta = eta_fallback
        return GaussianDecay(eta, squared=cfg.get("model", "squared"))
    if name == "polyharmonic":
        return PolyharmonicSpline(cfg.get("model", "spline_order"))
    raise SchemaError(f"unknown basis {name!r} (expected gaussian or polyharmonic)")


def _build_prior(cfg: RunConfig, targets: np.ndarray, windows: np.ndarray) -> StickyHdpPrior:
    d = targets.shape[1]
    dof = cfg.get("prior", "iw_dof")
    if dof is None:
        dof = d + 2.0
    scale = cfg.get("prior", "iw_scale") * np.diag(np.maximum(targets.var(axis=0), 1e-8))
    center_cov = np.diag(cfg.get("prior", "center_noise")
                         * np.maximum(windows.var(axis=0), 1e-12))
    eprior = EmissionHyperprior(dof, scale, center_cov, ridge=cfg.get("prior", "ridge"))
    return StickyHdpPrior(cfg.get("prior", "gamma"), cfg.get("prior", "alpha"),
                          cfg.get("prior", "sticky"), cfg.get("prior", "truncation"),
                          eprior)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def command_synth(cfg: RunConfig) -> int:
    out = _ensure_outdir(cfg.get("run", "out"))
    seed = cfg.get("run", "seed")
    spec = default_synth_spec(
        seed=seed,
        n_states=cfg.get("synth", "states"),
        length=cfg.get("synth", "length"),
        lag=cfg.get("model", "lag"),
        dim=cfg.get("synth", "dim"),
        n_neurons=cfg.get("synth", "neurons"),
        noise_var=cfg.get("synth", "noise_var"),
        self_transition=cfg.get("synth", "self_transition"),
        weight_scale=cfg.get("synth", "weight_scale"),
        center_scale=cfg.get("synth", "center_scale"),
    )
    output = simulate(spec, np.random.default_rng(seed + 1))
    write_series_csv(output.series.values, out / "series.csv")
    write_labels_csv(output.z_true, out / "z_true.csv")
    write_json({
        "seed": seed,
        "n_states": spec.n_states,
        "length": spec.length,
        "lag": spec.lag,
        "dim": spec.dim,
        "noise_var": cfg.get("synth", "noise_var"),
        "n_neurons": cfg.get("synth", "neurons"),
        "trans_actual": spec.trans_actual.tolist(),
    }, out / "synth_spec.json")
    save_config(cfg, out / "config.ini")
    print(f"synth: wrote {spec.length} steps, {spec.n_states} states -> {out}")
    return EXIT_OK


def command_fit(cfg: RunConfig) -> int:
    series_path = _require_file(cfg.get("paths", "series"), "series CSV")
    out = _ensure_outdir(cfg.get("run", "out"))
    values = read_series_csv(series_path)
    template = EmissionTemplate(
        lag=cfg.get("model", "lag"),
        kind=cfg.get("model", "kind"),
        n_neurons=cfg.get("model", "neurons"),
        basis=_build_basis(cfg),
        metric=cfg.get("model", "metric"),
    )
    from .emissions import build_lagged_matrix

    targets, windows = build_lagged_matrix(values, template.lag)
    prior = _build_prior(cfg, targets, windows)
    gibbs = GibbsConfig(
        sweeps=cfg.get("gibbs", "sweeps"),
        burn_in=cfg.get("gibbs", "burn_in"),
        seed=cfg.get("run", "seed"),
        center_resampling=cfg.get("gibbs", "center_resampling"),
        fixed_weights=cfg.get("gibbs", "fixed_weights"),
        thinning=cfg.get("gibbs", "thinning"),
    )
    result = fit(TimeSeries(values), prior, template, gibbs)
    point = result.point_estimate
    write_labels_csv(point.z, out / "z_point.csv")
    write_matrix_csv(point.trans, out / "pi_point.csv")
    write_matrix_csv(point.beta[None, :], out / "beta_point.csv")
    write_matrix_csv(np.column_stack([result.loglik_trace]), out / "loglik_trace.csv",
                     columns=["marginal_loglik_nats"])
    write_json({
        "k_plus": result.k_plus,
        "best_joint_loglik": float(result.joint_trace.max()),
        "retained_samples": len(result.samples),
        "lag": template.lag,
        "kind": template.kind,
    }, out / "fit_meta.json")
    plots.transition_heatmap(point.trans, out / "pi_heatmap.svg",
                             title="estimated transition matrix")
    plots.trace_plot(result.loglik_trace, out / "loglik_trace.svg")
    save_config(cfg, out / "config.ini")
    print(f"fit: {template.kind} model, K+ = {result.k_plus} -> {out}")
    return EXIT_OK


def command_eval(cfg: RunConfig) -> int:
    out = _ensure_outdir(cfg.get("run", "out"))
    classify_dir = cfg.get("paths", "classify_dir")
    if classify_dir:
        return _eval_classify_dir(cfg, Path(classify_dir), out)
    fit_dir = Path(str(_require_file(cfg.get("paths", "fit_dir"), "fit directory")))
    synth_dir = cfg.get("paths", "synth_dir")
    truth_path = cfg.get("paths", "truth")
    z_point = read_labels_csv(fit_dir / "z_point.csv")
    trans_point = read_matrix_csv(fit_dir / "pi_point.csv")
    if synth_dir:
        synth_dir = Path(synth_dir)
        z_true = read_labels_csv(synth_dir / "z_true.csv")
        with open(synth_dir / "synth_spec.json") as fh:
            trans_actual = np.asarray(json.load(fh)["trans_actual"])
    else:
        z_true = read_labels_csv(_require_file(truth_path, "truth CSV"))
        trans_actual = None
    match = matched_state_accuracy(z_point, z_true)
    metrics = {
        "zAccuracy": match.accuracy,
        "kPlus": int(np.unique(z_point).size),
        "permutation": {str(k): v for k, v in sorted(match.mapping.items())},
    }
    if trans_actual is not None:
        metrics["transitionMse"] = transition_mse(trans_point, trans_actual, match)
    write_json(metrics, out / "metrics.json")
    save_config(cfg, out / "config.ini")
    print(f"eval: zAccuracy={metrics['zAccuracy']:.4f}"
          + (f" transitionMse={metrics['transitionMse']:.3e}" if trans_actual is not None else "")
          + f" -> {out}")
    return EXIT_OK


def _eval_classify_dir(cfg: RunConfig, classify_dir: Path, out: Path) -> int:
    sweep_path = _require_file(classify_dir / "sweep.csv", "sweep table")
    rows = []
    with open(sweep_path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(row)
    by_fraction: dict = {}
    for row in rows:
        if row["skipped"] == "True":
            continue
        by_fraction.setdefault(row["fraction"], []).append(float(row["balanced_accuracy"]))
    metrics = {
        "balancedAccuracyByFraction": {
            frac: {"mean": float(np.mean(vals)), "std": float(np.std(vals)),
                   "repeats": len(vals)}
            for frac, vals in sorted(by_fraction.items(), key=lambda kv: float(kv[0]))
        }
    }
    write_json(metrics, out / "metrics.json")
    save_config(cfg, out / "config.ini")
    print(f"eval: {len(metrics['balancedAccuracyByFraction'])} fractions -> {out}")
    return EXIT_OK


def _spectral_feature_densities(dataset, held_out) -> dict:
    """Per-class kernel densities of the validation segments' spectral
    features (fundamental frequency in Hz, normalized entropy, alpha-band
    fraction)."""
    from .errors import DegenerateInputError
    from .metrics import feature_density, spectral_features

    held = set(map(str, held_out))
    mask = np.array([str(s) in held for s in dataset.subject_ids])
    out: dict = {"features": ["fundamental_hz", "spectral_entropy", "alpha_band_energy"],
                 "classes": {}}
    for name, cls_mask in (("seizure", mask & dataset.seizure),
                           ("other", mask & ~dataset.seizure)):
        feats = [spectral_features(seg, dataset.sampling_rate)
                 for seg in dataset.segments[cls_mask]]
        payload = {}
        for attr in out["features"]:
            values = np.array([getattr(f, attr) for f in feats])
            try:
                grid, dens, meta = feature_density(values)
                payload[attr] = {"grid": grid.tolist(), "density": dens.tolist(),
                                 **meta}
            except DegenerateInputError:
                payload[attr] = {"degenerate": True,
                                 "value": float(values[0]) if values.size else None}
        out["classes"][name] = payload
    return out


def command_classify(cfg: RunConfig) -> int:
    data_path = _require_file(cfg.get("paths", "data"), "dataset CSV")
    out = _ensure_outdir(cfg.get("run", "out"))
    dataset = ingest_uci_eeg(
        data_path,
        label_column=cfg.get("classify", "label_column") or None,
        id_column=cfg.get("classify", "id_column") or None,
    )
    seed = cfg.get("run", "seed")
    held = clf.choose_held_out_subjects(dataset, cfg.get("classify", "held_out"), seed)
    protocol = clf.SplitProtocol(cfg.get("classify", "fractions"), held,
                                 repeats=cfg.get("classify", "repeats"), seed=seed)
    model_cfg = clf.ClassifierConfig(
        lag=cfg.get("classify", "lag"),
        n_centers=cfg.get("classify", "neurons"),
        basis=_build_basis(cfg),
        metric=cfg.get("model", "metric"),
        kind=cfg.get("model", "kind"),
        iw_dof=cfg.get("prior", "iw_dof"),
        iw_scale=cfg.get("prior", "iw_scale"),
        ridge=cfg.get("prior", "ridge"),
        center_noise=cfg.get("prior", "center_noise"),
        fixed_weights=cfg.get("gibbs", "fixed_weights"),
        aggregation=cfg.get("classify", "aggregation"),
    )
    rows, detail = clf.run_split_sweep(
        dataset, protocol, model_cfg,
        n_jobs=cfg.get("run", "threads"),
        collect_fraction=cfg.get("classify", "histogram_fraction"),
    )
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["fraction", "repeat", "balanced_accuracy",
                                                "n_train_seizure", "n_train_other",
                                                "skipped", "train_hash"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    if detail is not None:
        bins = np.linspace(0.0, 1.0, cfg.get("classify", "histogram_bins") + 1)
        hist = confidence_histogram(detail.positive_confidence("seizure"),
                                    detail.true_labels, bins)
        write_json(hist, out / "confidence_histogram.json")
        plots.confidence_bars(hist, out / "confidence_histogram.svg")
        thr_rows = clf.threshold_sweep(detail, cfg.get("classify", "thresholds"))
        with open(out / "thresholds.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(thr_rows[0]))
            writer.writeheader()
            for row in thr_rows:
                writer.writerow(row)
    fractions, means = [], []
    for frac in protocol.train_fractions:
        vals = [r["balanced_accuracy"] for r in rows
                if r["fraction"] == frac and not r["skipped"]]
        if vals:
            fractions.append(frac)
            means.append(float(np.mean(vals)))
    if fractions:
        plots.accuracy_curve(fractions, means, out / "accuracy_curve.svg")
    write_json(_spectral_feature_densities(dataset, held),
               out / "feature_densities.json")
    write_json({"held_out_subjects": list(held)}, out / "protocol.json")
    save_config(cfg, out / "config.ini")
    print(f"classify: {len(rows)} cells -> {out}")
    return EXIT_OK


def command_report(cfg: RunConfig) -> int:
    run_dir = Path(str(_require_file(cfg.get("paths", "run_dir"), "run directory")))
    out = _ensure_outdir(cfg.get("run", "out"))
    lines = ["# run report", "", f"source: `{run_dir}`", ""]
    for sub in sorted(p for p in run_dir.rglob("*") if p.is_file()):
        rel = sub.relative_to(run_dir)
        if sub.name == "metrics.json":
            lines.append(f"## metrics ({rel})")
            lines.append("```json")
            lines.append(sub.read_text().strip())
            lines.append("```")
            lines.append("")
        elif sub.name == "fit_meta.json":
            meta = json.loads(sub.read_text())
            lines.append(f"## fit ({rel.parent})")
            lines.extend(f"- {k}: {meta[k]}" for k in sorted(meta))
            lines.append("")
        elif sub.name == "sweep.csv":
            with open(sub, newline="") as fh:
                rows = list(csv.DictReader(fh))
            lines.append(f"## classification sweep ({rel.parent})")
            lines.append(f"- cells: {len(rows)}")
            kept = [float(r["balanced_accuracy"]) for r in rows if r["skipped"] != "True"]
            if kept:
                lines.append(f"- mean balanced accuracy: {np.mean(kept):.4f}")
            lines.append("")
    artifacts = sorted(str(p.relative_to(run_dir)) for p in run_dir.rglob("*") if p.is_file())
    lines.append("## artifacts")
    lines.extend(f"- {a}" for a in artifacts)
    lines.append("")
    (out / "summary.md").write_text("\n".join(lines))
    save_config(cfg, out / "config.ini")
    print(f"report: {len(artifacts)} artifacts -> {out / 'summary.md'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (INI, sections per module)")
    parser.add_argument("--seed", type=int, help="override [run] seed")
    parser.add_argument("--out", help="override [run] out directory")
    parser.add_argument("--threads", type=int, help="override [run] threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rbfhmm",
        description="Switching RBF autoregression: synthesis, inference, "
                    "few-shot classification and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="simulate a switching RBF-AR series")
    _add_common(p)

    p = sub.add_parser("fit", help="fit the sticky HDP-HMM to a series CSV")
    _add_common(p)
    p.add_argument("--series", help="input series CSV")

    p = sub.add_parser("classify", help="run the training-fraction sweep on a dataset")
    _add_common(p)
    p.add_argument("--data", help="dataset CSV (one labeled segment per row)")

    p = sub.add_parser("eval", help="compute metrics from fit or classify artifacts")
    _add_common(p)
    p.add_argument("--fit-dir", dest="fit_dir", help="directory written by fit")
    p.add_argument("--synth-dir", dest="synth_dir", help="directory written by synth")
    p.add_argument("--truth", help="ground-truth state CSV")
    p.add_argument("--classify-dir", dest="classify_dir",
                   help="directory written by classify")

    p = sub.add_parser("report", help="aggregate artifacts of a run directory")
    _add_common(p)
    p.add_argument("--run-dir", dest="run_dir", help="directory tree to summarize")
    return parser


_COMMANDS = {
    "synth": command_synth,
    "fit": command_fit,
    "classify": command_classify,
    "eval": command_eval,
    "report": command_report,
}


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except SchemaError as exc:
        return _fail(EXIT_SCHEMA, "schema", str(exc))
    except (MissingInputError, FileNotFoundError) as exc:
        return _fail(EXIT_MISSING_INPUT, "missing_input", str(exc))
    except PermissionError as exc:
        return _fail(EXIT_UNWRITABLE, "unwritable_output", str(exc))
    except RbfHmmError as exc:
        return _fail(EXIT_ERROR, "error", str(exc))


if __name__ == "__main__":
    sys.exit(main())
