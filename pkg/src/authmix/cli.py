"""Command-line surface: simulate, fit, classify, loocv, compare, sweep.

Every command writes its requested outputs plus a `<out>.manifest.json`
recording the tool version, fully resolved parameters, input hashes and
output paths; `rerun MANIFEST` replays the command from that record and
must reproduce the outputs byte for byte.  Nothing here contains model
logic, only wiring.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .bpref import run_bp_chain
from .classify import classify_dataset, loocv
from .datagen import MixtureSpec, builtin_sim_spec, load_csv, simulate, validate
from .diagnostics import cpo_lpml, dic, macro_auc, roc_curves_ovr
from .domain import (SCHEMA_VERSION, Hyperparameters, McmcSettings,
                     PosteriorChain)
from .dpmm import run_chain
from .randmat import RngStream

_PRESETS = ("sim", "wine")


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_manifest(out, command, params, inputs, outputs):
    doc = {"schema_version": SCHEMA_VERSION,
           "tool": "authmix",
           "version": __version__,
           "command": command,
           "params": params,
           "inputs": {str(p): _sha256(p) for p in inputs},
           "outputs": [str(o) for o in outputs]}
    path = Path(str(out) + ".manifest.json")
    _write_json(path, doc)
    return path


def _load_hyper_spec(arg):
    """Return (raw spec dict, display name); shipped presets go by name."""
    if arg is None:
        print("warning: no hyperparameter file given, using the 'sim' "
              "preset defaults", file=sys.stderr)
        arg = "sim"
    if arg in _PRESETS:
        text = (resources.files("authmix") / "presets"
                / f"{arg}.json").read_text()
        return json.loads(text), f"preset:{arg}"
    path = Path(arg)
    if not path.exists():
        raise FileNotFoundError(
            f"hyperparameter file {arg!r} not found (shipped presets: "
            f"{', '.join(_PRESETS)})")
    return json.loads(path.read_text()), str(path)


def _load_settings(args):
    if getattr(args, "mcmc", None):
        settings = McmcSettings.from_file(args.mcmc)
    else:
        settings = McmcSettings()
    overrides = {}
    for name in ("iterations", "burn_in", "thinning", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        settings = McmcSettings(**{**settings.to_dict(), **overrides})
    return settings


def _load_data(path, log_transform):
    data = load_csv(path, log_transform=log_transform)
    for finding in validate(data).findings:
        print(f"note: {finding}", file=sys.stderr)
    return data


def _priors_param(arg):
    """Map the --priors argument to a JSON-storable parameter."""
    if arg in (None, "empirical"):
        return "empirical"
    if arg == "uniform":
        return "uniform"
    weights = json.loads(Path(arg).read_text())
    return [float(w) for w in weights]


def _summary_items(chain, all_params):
    a = chain.arrays
    p, q, m = chain.dims["p"], chain.dims["q"], chain.dims["m"]
    items = []
    if chain.model == "bsp":
        items.append(("M", a["M"]))
    for i in range(p):
        items.append((f"tau[{i + 1},{i + 1}]", a["tau"][:, i, i]))
    if all_params:
        for i in range(p):
            for j in range(q):
                items.append((f"B[{i + 1},{j + 1}]", a["B"][:, i, j]))
        for j in range(q):
            for i in range(p):
                items.append((f"beta0[{j + 1},{i + 1}]", a["beta0"][:, j, i]))
        for u in range(m):
            for i in range(p):
                items.append((f"Sigma{u + 1}[{i + 1},{i + 1}]",
                              a["Sigma"][:, u, i, i]))
        for i in range(p):
            items.append((f"Lambda[{i + 1},{i + 1}]", a["Lambda"][:, i, i]))
        for i in range(a["R"].shape[1]):
            items.append((f"R[{i + 1},{i + 1}]", a["R"][:, i, i]))
    else:
        picks = [(0, 0)]
        if q > 1:
            picks.append((0, 1))
        elif p > 1:
            picks.append((1, 0))
        for i, j in picks:
            items.append((f"B[{i + 1},{j + 1}]", a["B"][:, i, j]))
    return items


def _print_summaries(chain, all_params=False):
    for name, draws in _summary_items(chain, all_params):
        draws = np.asarray(draws, dtype=float)
        print(f"{name} = {draws.mean():.2f} ({draws.std(ddof=1):.2f})")


def _print_report(report):
    if report.true_labels is None:
        print(f"classified {report.n} unlabeled units")
        return
    table = report.confusion()
    print(f"error rate {100 * report.error_rate():.1f}% over {report.n} units")
    header = "true\\pred " + " ".join(f"{g:>6}" for g in report.group_labels)
    print(header)
    for u, row in enumerate(table):
        cells = " ".join(f"{c:>6d}" for c in row)
        print(f"{report.group_labels[u]:>9} {cells}")


def _fit_model(model, data, hyper, settings, r_update, stream=None):
    if model == "bsp":
        return run_chain(data, hyper, settings, r_update=r_update,
                         stream=stream)
    if model == "bp":
        return run_bp_chain(data, hyper, settings, r_update=r_update,
                            stream=stream)
    raise ValueError(f"unknown model tag {model!r}")


# ---------------------------------------------------------------------------
# command cores, shared between direct invocation and `rerun`


def _core_simulate(params, out):
    spec_doc = dict(params["spec"])
    spec_doc.pop("schema_version", None)
    spec = MixtureSpec(weights=spec_doc["weights"], means=spec_doc["means"],
                       cov=spec_doc["cov"],
                       assignment=spec_doc["assignment"])
    data = simulate(spec, params["n"], RngStream(params["seed"]))
    data.save_csv(out)
    return data, [str(out)]


def _core_fit(params, data, out):
    hyper = Hyperparameters.from_spec(params["hyper"], data.p, data.k)
    settings = McmcSettings.from_dict(params["settings"])
    chain = _fit_model(params["model"], data, hyper, settings,
                       params["r_update"])
    chain.save(out)
    sidecar = Path(out).with_suffix(".npz")
    return chain, [str(out), str(sidecar)]


def _core_classify(params, chain, data, out):
    report = classify_dataset(chain, data, priors=params["priors"])
    report.save(out)
    outputs = [str(out)]
    if report.true_labels is not None:
        outputs.append(str(Path(out).with_name(Path(out).stem
                                               + ".confusion.csv")))
    return report, outputs


def _core_loocv(params, data, out):
    hyper = None
    if params["hyper"] is not None:
        hyper = Hyperparameters.from_spec(params["hyper"], data.p, data.k)
    settings = (McmcSettings.from_dict(params["settings"])
                if params["settings"] is not None else None)
    report = loocv(data, hyper, settings, model=params["model"],
                   r_update=params["r_update"], priors=params["priors"],
                   workers=params.get("workers"), fast=params["fast"])
    report.save(out)
    outputs = [str(out),
               str(Path(out).with_name(Path(out).stem + ".confusion.csv"))]
    return report, outputs


def _core_compare(params, chains, data, out):
    rows = []
    for path, chain in chains:
        report = classify_dataset(chain, data, priors=params["priors"])
        try:
            curves = roc_curves_ovr(report.probabilities, data.group)
            auc_per_class = {data.group_labels[u - 1]: curves[u].auc
                             for u in curves}
            auc = macro_auc(curves)
        except ValueError:
            auc_per_class, auc = {}, None
        _, lpml = cpo_lpml(chain, data)
        dics = {str(v): dic(chain, data, v).to_jsonable() for v in (1, 2, 3)}
        rows.append({"path": str(path), "model": chain.model, "lpml": lpml,
                     "dic": dics, "auc_macro": auc,
                     "auc_per_class": auc_per_class})
    doc = {"schema_version": SCHEMA_VERSION, "data": params["data"],
           "chains": rows}
    _write_json(out, doc)
    return rows, [str(out)]


def _sweep_columns(p):
    cols = ["row", "a1", "a2", "tau0", "M_mean", "M_sd"]
    for i in range(p):
        cols += [f"tau_{i + 1}{i + 1}_mean", f"tau_{i + 1}{i + 1}_sd"]
    cols += ["B_11_mean", "B_11_sd", "B_12_mean", "B_12_sd", "error"]
    return cols


def _sweep_row(task):
    """Fit one grid row; returns (index, csv row dict). Picklable."""
    index, row, base_spec, data, settings_doc, model, r_update, seed = task
    out = {"row": index}
    for key in ("a1", "a2", "tau0"):
        out[key] = row.get(key, base_spec.get(key, ""))
    try:
        spec = {**base_spec, **row}
        hyper = Hyperparameters.from_spec(spec, data.p, data.k)
        settings = McmcSettings.from_dict(settings_doc)
        stream = RngStream(seed).split(index)
        chain = _fit_model(model, data, hyper, settings, r_update,
                           stream=stream)
        a = chain.arrays
        if model == "bsp":
            out["M_mean"] = f"{a['M'].mean():.6g}"
            out["M_sd"] = f"{a['M'].std(ddof=1):.6g}"
        else:
            out["M_mean"] = out["M_sd"] = ""
        for i in range(data.p):
            tau_ii = a["tau"][:, i, i]
            out[f"tau_{i + 1}{i + 1}_mean"] = f"{tau_ii.mean():.6g}"
            out[f"tau_{i + 1}{i + 1}_sd"] = f"{tau_ii.std(ddof=1):.6g}"
        picks = {"B_11": (0, 0)}
        if data.q > 1:
            picks["B_12"] = (0, 1)
        for name, (i, j) in picks.items():
            entry = a["B"][:, i, j]
            out[f"{name}_mean"] = f"{entry.mean():.6g}"
            out[f"{name}_sd"] = f"{entry.std(ddof=1):.6g}"
        out.setdefault("B_12_mean", "")
        out.setdefault("B_12_sd", "")
        out["error"] = ""
    except Exception as exc:
        out["error"] = str(exc)
    return index, out


def _core_sweep(params, data, out):
    columns = _sweep_columns(data.p)
    tasks = [(index, row, params["hyper_base"], data, params["settings"],
              params["model"], params["r_update"], params["seed"])
             for index, row in enumerate(params["rows"])]
    workers = params.get("workers") or 1
    if workers > 1 and tasks:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_row, tasks))
    else:
        results = [_sweep_row(task) for task in tasks]
    results.sort(key=lambda item: item[0])
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for _, row in results:
            writer.writerow({c: row.get(c, "") for c in columns})
    return results, [str(out)]


# ---------------------------------------------------------------------------
# argument handling


def _add_data_args(sub):
    sub.add_argument("--data", required=True, help="dataset CSV")
    sub.add_argument("--log", action="store_true",
                     help="log-transform the responses on load")


def _add_mcmc_args(sub):
    sub.add_argument("--hyper", help="hyperparameter JSON file or preset "
                                     f"name ({', '.join(_PRESETS)})")
    sub.add_argument("--mcmc", help="sampler settings JSON file")
    sub.add_argument("--iterations", type=int)
    sub.add_argument("--burn-in", dest="burn_in", type=int)
    sub.add_argument("--thinning", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--r-update", dest="r_update", default="atoms",
                     choices=("atoms", "units"),
                     help="degrees-of-freedom convention for the base "
                          "measure covariance update")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="authmix",
        description="group-membership modeling for multivariate "
                    "measurements with level-indexed random effects")
    parser.add_argument("--version", action="version",
                        version=f"authmix {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="draw a synthetic dataset")
    group = sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--spec", help="mixture spec JSON file")
    group.add_argument("--builtin-sim", action="store_true",
                       help="use the built-in two-group benchmark design")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)

    fit = subs.add_parser("fit", help="run the sampler on a dataset")
    fit.add_argument("--model", choices=("bsp", "bp"), default="bsp")
    _add_data_args(fit)
    _add_mcmc_args(fit)
    fit.add_argument("--summary-all", action="store_true",
                     help="print summaries for every parameter block")
    fit.add_argument("--out", required=True, help="chain output path")

    cls = subs.add_parser("classify", help="classify units with a chain")
    cls.add_argument("--chain", required=True)
    _add_data_args(cls)
    cls.add_argument("--priors", default="empirical",
                     help="empirical, uniform, or a JSON file of weights")
    cls.add_argument("--out", required=True, help="report output path")

    loo = subs.add_parser("loocv", help="leave-one-out cross-validation")
    loo.add_argument("--model", choices=("bsp", "bp", "lda"), default="bsp")
    _add_data_args(loo)
    _add_mcmc_args(loo)
    loo.add_argument("--priors", default="empirical")
    loo.add_argument("--workers", type=int,
                     help="parallel folds (default AUTHMIX_WORKERS or 1)")
    loo.add_argument("--fast", action="store_true",
                     help="reuse one full-data fit for every unit "
                          "(plug-in approximation)")
    loo.add_argument("--out", required=True)

    cmp_ = subs.add_parser("compare", help="score fitted chains on one dataset")
    cmp_.add_argument("--chains", required=True,
                      help="comma-separated chain paths")
    _add_data_args(cmp_)
    cmp_.add_argument("--priors", default="empirical")
    cmp_.add_argument("--out", required=True)

    swp = subs.add_parser("sweep", help="refit over a hyperparameter grid")
    swp.add_argument("--grid", required=True,
                     help="JSON file with a 'rows' list of overrides")
    swp.add_argument("--model", choices=("bsp", "bp"), default="bsp")
    _add_data_args(swp)
    _add_mcmc_args(swp)
    swp.add_argument("--workers", type=int)
    swp.add_argument("--out", required=True, help="summary CSV path")

    rer = subs.add_parser("rerun", help="replay a command from its manifest")
    rer.add_argument("manifest")
    rer.add_argument("--out-dir",
                     help="write outputs here instead of the recorded paths")
    return parser


def _cmd_simulate(args):
    if args.builtin_sim:
        spec = builtin_sim_spec()
        inputs = []
    else:
        spec = MixtureSpec.from_file(args.spec)
        inputs = [args.spec]
    params = {"spec": spec.to_jsonable(), "n": args.n, "seed": args.seed}
    data, outputs = _core_simulate(params, args.out)
    _write_manifest(args.out, "simulate", params, inputs, outputs)
    print(f"wrote {data.n} units to {args.out}")
    return 0


def _cmd_fit(args):
    data = _load_data(args.data, args.log)
    hyper_spec, hyper_name = _load_hyper_spec(args.hyper)
    hyper = Hyperparameters.from_spec(hyper_spec, data.p, data.k)
    settings = _load_settings(args)
    params = {"model": args.model, "data": args.data, "log": args.log,
              "hyper": hyper.to_jsonable(), "hyper_source": hyper_name,
              "settings": settings.to_dict(), "r_update": args.r_update}
    chain, outputs = _core_fit(params, data, args.out)
    inputs = [args.data] + ([args.hyper] if args.hyper
                            and args.hyper not in _PRESETS else [])
    if args.mcmc:
        inputs.append(args.mcmc)
    _write_manifest(args.out, "fit", params, inputs, outputs)
    _print_summaries(chain, all_params=args.summary_all)
    return 0


def _cmd_classify(args):
    chain = PosteriorChain.load(args.chain)
    data = _load_data(args.data, args.log)
    params = {"chain": args.chain, "data": args.data, "log": args.log,
              "priors": _priors_param(args.priors)}
    report, outputs = _core_classify(params, chain, data, args.out)
    inputs = [args.chain, str(Path(args.chain).with_suffix(".npz")),
              args.data]
    if args.priors not in (None, "empirical", "uniform"):
        inputs.append(args.priors)
    _write_manifest(args.out, "classify", params, inputs, outputs)
    _print_report(report)
    return 0


def _cmd_loocv(args):
    data = _load_data(args.data, args.log)
    if args.model == "lda":
        hyper_doc, settings_doc = None, None
        inputs = [args.data]
    else:
        hyper_spec, hyper_name = _load_hyper_spec(args.hyper)
        hyper_doc = Hyperparameters.from_spec(hyper_spec, data.p,
                                              data.k).to_jsonable()
        settings_doc = _load_settings(args).to_dict()
        inputs = [args.data] + ([args.hyper] if args.hyper
                                and args.hyper not in _PRESETS else [])
        if args.mcmc:
            inputs.append(args.mcmc)
    params = {"model": args.model, "data": args.data, "log": args.log,
              "hyper": hyper_doc, "settings": settings_doc,
              "r_update": args.r_update,
              "priors": _priors_param(args.priors),
              "workers": args.workers, "fast": args.fast}
    report, outputs = _core_loocv(params, data, args.out)
    _write_manifest(args.out, "loocv", params, inputs, outputs)
    _print_report(report)
    return 0


def _cmd_compare(args):
    paths = [p for p in args.chains.split(",") if p]
    if not paths:
        raise ValueError("--chains needs at least one path")
    chains = [(p, PosteriorChain.load(p)) for p in paths]
    data = _load_data(args.data, args.log)
    params = {"chains": paths, "data": args.data, "log": args.log,
              "priors": _priors_param(args.priors)}
    rows, outputs = _core_compare(params, chains, data, args.out)
    inputs = [args.data]
    for p in paths:
        inputs += [p, str(Path(p).with_suffix(".npz"))]
    _write_manifest(args.out, "compare", params, inputs, outputs)
    print(f"{'model':<6} {'lpml':>10} {'dic1':>10} {'dic2':>10} "
          f"{'dic3':>10} {'auc':>8}")
    for row in rows:
        auc = "n/a" if row["auc_macro"] is None else f"{row['auc_macro']:.4f}"
        print(f"{row['model']:<6} {row['lpml']:>10.1f} "
              f"{row['dic']['1']['dic']:>10.1f} "
              f"{row['dic']['2']['dic']:>10.1f} "
              f"{row['dic']['3']['dic']:>10.1f} {auc:>8}")
    return 0


def _cmd_sweep(args):
    data = _load_data(args.data, args.log)
    grid = json.loads(Path(args.grid).read_text())
    rows = grid.get("rows", [])
    if not isinstance(rows, list):
        raise ValueError("grid file needs a 'rows' list")
    hyper_spec, hyper_name = _load_hyper_spec(args.hyper)
    settings = _load_settings(args)
    params = {"model": args.model, "data": args.data, "log": args.log,
              "hyper_base": hyper_spec, "hyper_source": hyper_name,
              "rows": rows, "settings": settings.to_dict(),
              "r_update": args.r_update, "seed": settings.seed,
              "workers": args.workers}
    results, outputs = _core_sweep(params, data, args.out)
    inputs = [args.data, args.grid] + ([args.hyper] if args.hyper
                                       and args.hyper not in _PRESETS else [])
    if args.mcmc:
        inputs.append(args.mcmc)
    _write_manifest(args.out, "sweep", params, inputs, outputs)
    failed = [row["row"] for _, row in results if row["error"]]
    print(f"wrote {len(results)} rows to {args.out}"
          + (f" ({len(failed)} failed: {failed})" if failed else ""))
    return 0


def _cmd_rerun(args):
    doc = json.loads(Path(args.manifest).read_text())
    if doc.get("tool") != "authmix":
        raise ValueError("not an authmix manifest")
    for path, digest in doc.get("inputs", {}).items():
        if not Path(path).exists():
            raise FileNotFoundError(f"manifest input {path} is missing")
        if _sha256(path) != digest:
            raise ValueError(f"manifest input {path} changed since the run")
    params = doc["params"]
    outputs = doc["outputs"]
    primary = outputs[0]
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        primary = str(out_dir / Path(primary).name)
    command = doc["command"]
    if command == "simulate":
        _core_simulate(params, primary)
    elif command == "fit":
        data = _load_data(params["data"], params["log"])
        _core_fit(params, data, primary)
    elif command == "classify":
        chain = PosteriorChain.load(params["chain"])
        data = _load_data(params["data"], params["log"])
        _core_classify(params, chain, data, primary)
    elif command == "loocv":
        data = _load_data(params["data"], params["log"])
        _core_loocv(params, data, primary)
    elif command == "compare":
        chains = [(p, PosteriorChain.load(p)) for p in params["chains"]]
        data = _load_data(params["data"], params["log"])
        _core_compare(params, chains, data, primary)
    elif command == "sweep":
        data = _load_data(params["data"], params["log"])
        _core_sweep(params, data, primary)
    else:
        raise ValueError(f"cannot rerun command {command!r}")
    print(f"reproduced {command} outputs at {Path(primary).parent}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "classify": _cmd_classify,
    "loocv": _cmd_loocv,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "rerun": _cmd_rerun,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
