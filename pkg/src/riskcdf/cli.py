"""Command-line frontend and experiment harness.

Subcommands: ``cdf`` (CDF export), ``assess`` (multi-risk assessment of a
loss table under one shared certificate), ``bound`` (certificate from a
complexity method), ``train`` (distortion risk minimization), ``complexity``
(permutation complexity of a loss matrix), ``gradcheck`` (finite-difference
gradient audit), and ``rerun`` (replay a recorded run).

Every command writes a ``manifest.json`` with the resolved flag set, input
file digests, toolkit version, and timestamp; ``rerun`` replays a manifest
and reproduces the primary outputs byte for byte in single-threaded mode.
Flags can be preset through ``RISKCDF_``-prefixed environment variables
(command-line values win).  Exit codes: 0 success, 2 configuration error,
3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, bounds, data, risks
from .cdf import build_cdf, moment, read_losses_csv, write_cdf_csv
from .errors import ConfigError, FormatError, ToolkitError
from .models import Example, finite_difference_check, init_model, save_checkpoint
from .optim import TrainConfig, estimate_beta, stationarity_report, train
from .permcomplexity import exact_min_permutations, greedy_min_permutations, load_loss_matrix_csv
from .seeds import derive_seed, rng_from, standard_normal

PROG = "riskcdf"


def _env(name: str, cast, fallback):
    raw = os.environ.get(f"RISKCDF_{name}")
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"RISKCDF_{name}={raw!r} is not a valid {cast.__name__}") from None


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(65536), b""):
                h.update(chunk)
    except OSError as exc:
        raise FormatError(f"cannot read input {path}: {exc}") from None
    return h.hexdigest()


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(command: str, params: dict, out_dir: str, input_paths: list[str]) -> None:
    manifest = {
        "command": command,
        "args": params,
        "seed": params.get("seed"),
        "input_digests": {p: _sha256(p) for p in input_paths},
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_json(manifest, os.path.join(out_dir, "manifest.json"))


def _parse_hidden(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(w) for w in text.split(","))
    except ValueError:
        raise ConfigError(f"--hidden expects comma-separated widths, got {text!r}") from None


def _parse_distortion(token: str) -> risks.DistortionSpec:
    if token == "mean":
        return risks.identity_distortion()
    if token.startswith("cvar:"):
        return risks.cvar_distortion(float(token.split(":", 1)[1]))
    if token.startswith("distortion-file:"):
        return risks.load_distortion_csv(token.split(":", 1)[1])
    raise ConfigError(f"unknown distortion objective {token!r}; "
                      "expected mean, cvar:ALPHA, or distortion-file:PATH")


def _assess_one(token: str, cdf, support_bound: float) -> risks.RiskValue:
    """Evaluate one risk token on one loss CDF."""
    if token == "mean":
        return risks.distortion_risk(cdf, risks.identity_distortion(), support_bound)
    if token.startswith("cvar:"):
        return risks.cvar(cdf, float(token.split(":", 1)[1]), support_bound)
    if token.startswith("mean_var:"):
        return risks.mean_variance(cdf, float(token.split(":", 1)[1]), support_bound)
    if token.startswith("distortion-file:"):
        spec = risks.load_distortion_csv(token.split(":", 1)[1])
        return risks.distortion_risk(cdf, spec, support_bound)
    if token.startswith("spectral-file:"):
        spec = risks.load_spectrum_csv(token.split(":", 1)[1])
        return risks.spectral_risk(cdf, spec, support_bound)
    if token.startswith("oce:"):
        rest = token.split(":", 1)[1]
        if rest == "mean":
            spec = risks.oce_mean_spec(support_bound)
        elif rest == "entropic":
            spec = risks.oce_entropic_spec(support_bound)
        elif rest.startswith("cvar:"):
            spec = risks.oce_cvar_spec(float(rest.split(":", 1)[1]), support_bound)
        else:
            raise ConfigError(f"unknown OCE preset {rest!r}; expected mean, entropic, or cvar:ALPHA")
        return risks.oce_risk(cdf, spec)
    raise ConfigError(f"unknown risk {token!r}")


def run_cdf(params: dict, out_dir: str) -> None:
    losses = read_losses_csv(params["input"], has_header=params["has_header"])
    cdf = build_cdf(losses)
    write_cdf_csv(cdf, os.path.join(out_dir, "cdf.csv"))
    summary = {
        "n": cdf.n,
        "min": cdf.min,
        "max": cdf.max,
        "moments": {str(k): moment(cdf, k) for k in (1, 2, 3, 4)},
    }
    _write_json(summary, os.path.join(out_dir, "summary.json"))
    print(f"{PROG} cdf: n={cdf.n} min={cdf.min:g} max={cdf.max:g}")


def run_assess(params: dict, out_dir: str) -> None:
    table = data.load_loss_table(params["input"])
    n = params["n"] if params["n"] is not None else table.n
    support = params["support_bound"]
    if support is None:
        support = float(np.max(table.values)) if table.values.size else 0.0
    cert = bounds.certificate_finite_class(n, table.n_models, params["delta"])
    tokens = params["risks"] or ["mean"]
    records = []
    matrix: dict[str, dict[str, float]] = {}
    for token in tokens:
        matrix[token] = {}
        for name in table.names:
            rv = _assess_one(token, build_cdf(table.column(name)), support)
            eb = None if rv.holder.L is None else bounds.risk_error_bound(cert, rv.holder.L)
            records.append(risks.risk_record(name, rv, eb))
            matrix[token][name] = rv.value
    payload = {
        "certificate": cert.to_dict(),
        "support_bound": support,
        "records": records,
    }
    _write_json(payload, os.path.join(out_dir, "assessment.json"))
    with open(os.path.join(out_dir, "assessment.csv"), "w", newline="") as fh:
        fh.write("risk," + ",".join(table.names) + "\n")
        for token in tokens:
            row = ",".join(f"{matrix[token][name]:.17g}" for name in table.names)
            fh.write(f"{token},{row}\n")
    print(f"{PROG} assess: {len(tokens)} risks x {table.n_models} models, "
          f"epsilon={cert.epsilon:.6g} (one shared certificate)")


def run_bound(params: dict, out_dir: str) -> None:
    method = params["method"]
    n, delta = params["n"], params["delta"]
    if method == "finite_class":
        if params["class_size"] is None:
            raise ConfigError("--class-size is required for method=finite_class")
        cert = bounds.certificate_finite_class(n, params["class_size"], delta)
    elif method == "permutation":
        if params["n_pi"] is None:
            raise ConfigError("--n-pi is required for method=permutation")
        cert = bounds.certificate_permutation(n, params["n_pi"], delta)
    elif method == "growth":
        growth = params["growth"]
        if growth is None:
            if params["class_size"] is None:
                raise ConfigError("--growth or --class-size is required for method=growth")
            growth = bounds.growth_finite_class(n, params["class_size"])
        cert = bounds.certificate_growth(n, growth, delta)
    elif method == "vc_sauer":
        if params["nu"] is None:
            raise ConfigError("--nu is required for method=vc_sauer")
        cert = bounds.certificate_vc_sauer(n, params["nu"], delta)
    else:
        raise ConfigError(f"unknown method {method!r}")
    _write_json(cert.to_dict(), os.path.join(out_dir, "certificate.json"))
    print(f"{PROG} bound: method={method} n={n} delta={delta} epsilon={cert.epsilon:.6g}")


def run_train(params: dict, out_dir: str) -> None:
    if params["input"] is not None:
        dataset = data.load_dataset_csv(params["input"], label_column=params["label_column"],
                                        has_header=params["has_header"])
    else:
        dataset = data.toy_blobs(seed=derive_seed(params["seed"], "data"))
    if params["distortion_file"] is not None:
        spec = risks.load_distortion_csv(params["distortion_file"])
    else:
        spec = _parse_distortion(params["risk"])
    features = dataset.X
    if params.get("add_bias"):
        features = np.hstack([features, np.ones((dataset.n, 1))])
    model = init_model(params["arch"], features.shape[1], _parse_hidden(params["hidden"]),
                       seed=params["seed"])
    config = TrainConfig(
        distortion=spec,
        iterations=params["iters"],
        eta=params["eta"],
        beta=params["beta"],
        seed=params["seed"],
        noise=not params["disable_noise"],
    )
    final_model, trace = train(model, features, dataset.y, config)
    trace.to_csv(os.path.join(out_dir, "trace.csv"))
    save_checkpoint(final_model, os.path.join(out_dir, "checkpoint.json"))
    try:
        report = stationarity_report(trace, beta=params["beta"])
        payload = {"available": True, **report.to_dict()}
    except ConfigError as exc:
        payload = {"available": False, "reason": str(exc)}
    _write_json(payload, os.path.join(out_dir, "stationarity.json"))
    print(f"{PROG} train: objective={spec.name} T={trace.iterations} "
          f"risk {trace.initial_risk:.6g} -> {trace.risk[-1]:.6g}")


def run_complexity(params: dict, out_dir: str) -> None:
    matrix = load_loss_matrix_csv(params["input"])
    if params["mode"] == "exact":
        value, witnesses = exact_min_permutations(matrix)
    elif params["mode"] == "greedy":
        value, witnesses = greedy_min_permutations(matrix)
    else:
        raise ConfigError(f"unknown mode {params['mode']!r}; expected exact or greedy")
    payload = {
        "mode": params["mode"],
        "value": value,
        "witness_permutations": [list(p) for p in witnesses],
        "n_points": matrix.n_points,
        "n_hypotheses": matrix.n_hypotheses,
        "is_upper_bound": params["mode"] == "greedy",
    }
    _write_json(payload, os.path.join(out_dir, "complexity.json"))
    print(f"{PROG} complexity: mode={params['mode']} value={value}")


def run_gradcheck(params: dict, out_dir: str) -> None:
    arch = params["arch"]
    hidden = _parse_hidden(params["hidden"])
    dim = params["input_dim"]
    worst = 0.0
    for t in range(params["trials"]):
        trial_seed = derive_seed(params["seed"], "gradcheck", t)
        model = init_model(arch, dim, hidden, seed=trial_seed)
        rng = rng_from(trial_seed, "example")
        x = standard_normal(rng, dim)
        if arch == "linear_squared":
            y = float(standard_normal(rng, 1)[0])
        else:
            y = float(rng.random() < 0.5)
        worst = max(worst, finite_difference_check(model, Example(x=x, y=y),
                                                   step=params["step"]))
    payload = {
        "architecture": arch,
        "trials": params["trials"],
        "step": params["step"],
        "max_relative_error": worst,
    }
    _write_json(payload, os.path.join(out_dir, "gradcheck.json"))
    print(f"{PROG} gradcheck: arch={arch} trials={params['trials']} "
          f"max_relative_error={worst:.3g}")


RUNNERS = {
    "cdf": run_cdf,
    "assess": run_assess,
    "bound": run_bound,
    "train": run_train,
    "complexity": run_complexity,
    "gradcheck": run_gradcheck,
}


def _input_paths(params: dict) -> list[str]:
    paths = []
    if params.get("input"):
        paths.append(params["input"])
    if params.get("distortion_file"):
        paths.append(params["distortion_file"])
    for token in params.get("risks") or []:
        for prefix in ("distortion-file:", "spectral-file:"):
            if token.startswith(prefix):
                paths.append(token.split(":", 1)[1])
    return paths


def _execute(command: str, params: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write_manifest(command, params, out_dir, _input_paths(params))
    RUNNERS[command](params, out_dir)


def run_rerun(manifest_path: str, out_dir: str) -> None:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    command = manifest.get("command")
    if command not in RUNNERS:
        raise ConfigError(f"{manifest_path}: unknown command {command!r}")
    params = dict(manifest.get("args", {}))
    for path, digest in manifest.get("input_digests", {}).items():
        if not os.path.exists(path):
            raise ConfigError(f"{manifest_path}: recorded input {path} is missing")
        if _sha256(path) != digest:
            raise ConfigError(f"{manifest_path}: input {path} changed since the recorded run")
    params["out"] = out_dir
    _execute(command, params, out_dir)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Loss-CDF risk assessment, uniform-convergence certificates, "
                    "and distortion risk minimization.",
    )
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default=_env("OUT", str, "."),
                       help="output directory (default: current directory)")
        p.add_argument("--seed", type=int, default=_env("SEED", int, 0))
        p.add_argument("--threads", type=int, default=_env("THREADS", int, 1),
                       help="worker count for parallelizable steps (default 1, reproducible)")

    p = sub.add_parser("cdf", help="build an empirical CDF from a loss CSV")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--has-header", action="store_true")

    p = sub.add_parser("assess", help="evaluate risks on a loss table under one certificate")
    common(p)
    p.add_argument("--input", required=True, help="loss table CSV (header = model names)")
    p.add_argument("--risk", action="append", dest="risks", default=None, metavar="SPEC",
                   help="repeatable: mean | cvar:A | mean_var:C | oce:PRESET | "
                        "distortion-file:PATH | spectral-file:PATH")
    p.add_argument("--n", type=int, default=_env("N", int, None),
                   help="certificate sample size (default: table rows)")
    p.add_argument("--delta", type=float, default=_env("DELTA", float, 0.05))
    p.add_argument("--support-bound", type=float, dest="support_bound", default=None,
                   help="loss support bound D (default: table maximum)")

    p = sub.add_parser("bound", help="compute a CDF uniform-convergence certificate")
    common(p)
    p.add_argument("--method", required=True,
                   choices=["finite_class", "permutation", "growth", "vc_sauer"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, default=_env("DELTA", float, 0.05))
    p.add_argument("--class-size", type=int, dest="class_size", default=None)
    p.add_argument("--n-pi", type=float, dest="n_pi", default=None)
    p.add_argument("--growth", type=float, default=None)
    p.add_argument("--nu", type=int, default=None)

    p = sub.add_parser("train", help="minimize an empirical distortion risk")
    common(p)
    p.add_argument("--input", default=None,
                   help="dataset CSV; omitted = built-in imbalanced blob preset")
    p.add_argument("--label-column", dest="label_column", default="label")
    p.add_argument("--has-header", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--arch", default="logistic_crossentropy",
                   choices=["linear_squared", "logistic_crossentropy", "mlp_tanh"])
    p.add_argument("--hidden", default="8", help="MLP widths, comma-separated")
    p.add_argument("--risk", default="mean",
                   help="objective: mean | cvar:A | distortion-file:PATH")
    p.add_argument("--distortion-file", dest="distortion_file", default=None,
                   help="tabulated distortion CSV overriding --risk")
    p.add_argument("--add-bias", dest="add_bias", action="store_true",
                   help="append a constant-1 feature column (intercept)")
    p.add_argument("--eta", type=float, default=_env("ETA", float, None))
    p.add_argument("--beta", type=float, default=_env("BETA", float, None))
    p.add_argument("--iters", type=int, default=_env("ITERS", int, 500))
    p.add_argument("--disable-noise", dest="disable_noise", action="store_true",
                   help="test hook: zero the Gaussian step perturbation")

    p = sub.add_parser("complexity", help="permutation complexity of a loss matrix")
    common(p)
    p.add_argument("--input", required=True, help="CSV, rows = hypotheses")
    p.add_argument("--mode", default="exact", choices=["exact", "greedy"])

    p = sub.add_parser("gradcheck", help="finite-difference audit of loss gradients")
    common(p)
    p.add_argument("--arch", default="logistic_crossentropy",
                   choices=["linear_squared", "logistic_crossentropy", "mlp_tanh"])
    p.add_argument("--hidden", default="4")
    p.add_argument("--input-dim", type=int, dest="input_dim", default=3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--step", type=float, default=1e-6)

    p = sub.add_parser("rerun", help="replay a recorded run from its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=_env("OUT", str, "."))

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "rerun":
            run_rerun(ns.manifest, ns.out)
            return 0
        params = {k: v for k, v in vars(ns).items() if k != "command"}
        _execute(ns.command, params, params["out"])
        return 0
    except ToolkitError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
