"""Long-horizon validation of the full pipeline.

Eight criteria: benchmark error bands and orderings on regenerated data,
AUC and fit-quality orderings, a joint-distribution check of both samplers,
the exact partition-posterior oracle, kernel oracles, byte-identical
manifest replay, and the wide-panel preset with its sensitivity sweep.
Each test records a single verdict line; details print alongside.
"""

import json
import math
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from authmix import (Dataset, Hyperparameters, McmcSettings, PosteriorChain,
                     RngStream, builtin_sim_spec, classify_dataset, cli,
                     cpo_lpml, dic, geweke_harness, lda_fit,
                     lda_predict_proba, load_csv, loocv, roc_curve,
                     run_bp_chain, run_chain, simulate, validate)
from authmix.diagnostics import (enumerate_partition_posterior,
                                 partition_frequencies)
from authmix.randmat import inverse_wishart_sample, mvn_logpdf

from conftest import make_data, make_hyper

REPS = 5
FIT = dict(iterations=10000, burn_in=2000, thinning=5)


def preset_hyper(name, p, k):
    raw = json.loads((resources.files("authmix") / "presets"
                      / f"{name}.json").read_text())
    return Hyperparameters.from_spec(raw, p, k)


def binary_auc(probabilities, labels):
    return roc_curve(np.asarray(probabilities)[:, 1], labels, 2).auc


def verdict(log, ok, text):
    line = f"{'PASS' if ok else 'FAIL'}  {text}"
    log.append(line)
    print(line)
    return ok


@pytest.fixture(scope="session")
def bench():
    """Five seeded repetitions of the two-group benchmark, full settings.

    Seeds were fixed before any outcomes were known: data stream 100+r,
    training fits on child streams 1+r / 101+r of seed 0, LOOCV seeds
    500+r / 600+r with per-fold child streams.
    """
    hyper = preset_hyper("sim", 2, 2)
    rows = []
    for r in range(REPS):
        t0 = time.monotonic()
        data = simulate(builtin_sim_spec(), 100, RngStream(100 + r))
        bsp = run_chain(data, hyper, McmcSettings(**FIT),
                        stream=RngStream(0, 1 + r))
        bp = run_bp_chain(data, hyper, McmcSettings(**FIT),
                          stream=RngStream(0, 101 + r))
        tr_bsp = classify_dataset(bsp, data)
        tr_bp = classify_dataset(bp, data)
        lda = lda_fit(data)
        lda_probs = lda_predict_proba(lda, data.y)
        lo_bsp = loocv(data, hyper, McmcSettings(seed=500 + r, **FIT),
                       model="bsp")
        lo_bp = loocv(data, hyper, McmcSettings(seed=600 + r, **FIT),
                      model="bp")
        lo_lda = loocv(data, None, None, model="lda")
        rows.append({
            "train_err": {"bsp": tr_bsp.error_rate(),
                          "bp": tr_bp.error_rate(),
                          "lda": float((lda_probs.argmax(1) + 1
                                        != data.group).mean())},
            "loocv_err": {"bsp": lo_bsp.error_rate(),
                          "bp": lo_bp.error_rate(),
                          "lda": lo_lda.error_rate()},
            "train_auc": {"bsp": binary_auc(tr_bsp.probabilities, data.group),
                          "bp": binary_auc(tr_bp.probabilities, data.group),
                          "lda": binary_auc(lda_probs, data.group)},
            "lpml": {"bsp": cpo_lpml(bsp, data)[1],
                     "bp": cpo_lpml(bp, data)[1]},
            "dic": {"bsp": [dic(bsp, data, v).dic for v in (1, 2, 3)],
                    "bp": [dic(bp, data, v).dic for v in (1, 2, 3)]},
            "minutes": (time.monotonic() - t0) / 60.0,
        })
        print(f"repetition {r}: train {rows[-1]['train_err']} "
              f"loocv {rows[-1]['loocv_err']} "
              f"{rows[-1]['minutes']:.1f} min", flush=True)
    return rows


def test_benchmark_error_bands_and_orderings(bench, verdict_log):
    """Criterion 1: error bands and the LOOCV error ordering, 4 of 5."""
    need = 4
    train_ok = sum(r["train_err"]["bsp"] <= 0.12 for r in bench)
    band_ok = sum(0.08 <= r["loocv_err"]["bsp"] <= 0.26 for r in bench)
    lda_ok = sum(r["loocv_err"]["lda"] >= 0.18 for r in bench)
    order_ok = sum(r["loocv_err"]["bsp"] <= r["loocv_err"]["bp"]
                   <= r["loocv_err"]["lda"] for r in bench)
    max_minutes = max(r["minutes"] for r in bench)
    ok = (train_ok >= need and band_ok >= need and lda_ok >= need
          and order_ok >= need and max_minutes <= 15.0)
    verdict(verdict_log, ok,
            f"criterion 1 benchmark bands/ordering: train<=12% {train_ok}/5, "
            f"loocv in [8,26]% {band_ok}/5, lda>=18% {lda_ok}/5, "
            f"loocv order bsp<=bp<=lda {order_ok}/5 (each needs {need}), "
            f"max {max_minutes:.1f} min/rep (cap 15)")
    for r, row in enumerate(bench):
        print(f"  rep {r}: train bsp {row['train_err']['bsp']:.2f} | loocv "
              f"bsp {row['loocv_err']['bsp']:.2f} "
              f"bp {row['loocv_err']['bp']:.2f} "
              f"lda {row['loocv_err']['lda']:.2f}")
    assert train_ok >= need, f"training error <= 12% held only {train_ok}/5"
    assert band_ok >= need, f"loocv band held only {band_ok}/5"
    assert lda_ok >= need, f"lda floor held only {lda_ok}/5"
    assert max_minutes <= 15.0
    assert order_ok >= need, (
        f"loocv error ordering bsp<=bp<=lda held only {order_ok}/5; "
        "per-fold chains re-roll the sampler's mode lottery, which inflates "
        "the semiparametric model's loocv error while the parametric "
        "model's matches its training error (see the per-rep lines above)")


def test_auc_ordering(bench, verdict_log):
    """Criterion 2: in-sample AUC ordering with a floor, every repetition."""
    order = [r["train_auc"]["bsp"] >= r["train_auc"]["bp"]
             >= r["train_auc"]["lda"] for r in bench]
    floor = [r["train_auc"]["bsp"] >= 0.90 for r in bench]
    ok = all(order) and all(floor)
    worst = min(r["train_auc"]["bsp"] for r in bench)
    verdict(verdict_log, ok,
            f"criterion 2 AUC ordering: bsp>=bp>=lda {sum(order)}/5, "
            f"bsp floor 0.90 {sum(floor)}/5 (min {worst:.3f})")
    for r, row in enumerate(bench):
        a = row["train_auc"]
        print(f"  rep {r}: auc bsp {a['bsp']:.3f} bp {a['bp']:.3f} "
              f"lda {a['lda']:.3f}")
    assert ok


def test_fit_quality_orderings(bench, verdict_log):
    """Criterion 3: pseudo-marginal and deviance orderings, 4 of 5."""
    lpml_ok = sum(r["lpml"]["bsp"] > r["lpml"]["bp"] for r in bench)
    dic_ok = sum(all(b < p for b, p in zip(r["dic"]["bsp"], r["dic"]["bp"]))
                 for r in bench)
    ok = lpml_ok >= 4 and dic_ok >= 4
    verdict(verdict_log, ok,
            f"criterion 3 fit-quality orderings: lpml {lpml_ok}/5, "
            f"all three deviance variants {dic_ok}/5 (each needs 4)")
    assert ok


def test_joint_distribution_kernel_check(verdict_log):
    """Criterion 4: prior-vs-chain functional means for both samplers."""
    template = make_data(n=6, p=2, k=2, m=1, seed=0)
    hyper = make_hyper(p=2, k=2, nu0=8.0, t0=8.0, gamma0=8.0, r0=10.0,
                       a1=2.0, a2=2.0)
    t0 = time.monotonic()
    results = {model: geweke_harness(model, template, hyper, draws=50000,
                                     seed=0)
               for model in ("bsp", "bp")}
    minutes = (time.monotonic() - t0) / 60.0
    counts = {m: len(r.names) for m, r in results.items()}
    zmax = {m: r.max_abs_z() for m, r in results.items()}
    ok = (all(r.passed(4.0) for r in results.values())
          and all(c >= 20 for c in counts.values()) and minutes <= 10.0)
    verdict(verdict_log, ok,
            f"criterion 4 joint-distribution check: max|z| "
            f"bsp {zmax['bsp']:.2f}, bp {zmax['bp']:.2f} (limit 4), "
            f"{counts['bsp']}/{counts['bp']} functionals, "
            f"{minutes:.1f} min (cap 10)")
    for model, res in results.items():
        worst = max(zip(np.abs(res.z), res.names))
        print(f"  {model}: worst functional {worst[1]} |z|={worst[0]:.2f}")
    assert ok


def test_partition_posterior_matches_enumeration(verdict_log):
    """Criterion 5: sweep frequencies vs the exact tiny-instance posterior."""
    theta = np.array([[0.4], [1.2], [-0.8]])
    levels = np.array([1, 1, 1])
    tau = np.array([[0.3]])
    R = np.array([[1.5]])
    exact = enumerate_partition_posterior(theta, levels, tau, R, M=1.2)
    emp = partition_frequencies(theta, levels, tau, R, M=1.2,
                                sweeps=200000, stream=RngStream(11))
    keys = set(exact) | set(emp)
    tv = 0.5 * sum(abs(exact.get(k, 0.0) - emp.get(k, 0.0)) for k in keys)
    ok = tv < 0.02
    verdict(verdict_log, ok,
            f"criterion 5 partition oracle: TV {tv:.4f} over {len(keys)} "
            f"partitions at 200k sweeps (limit 0.02)")
    assert ok


def test_kernel_oracles(verdict_log):
    """Criterion 6: density, random-matrix, AUC and CPO primitives."""
    # normal log density vs the explicit inverse/determinant formula
    worst_mvn = 0.0
    for p in (1, 2, 3, 5):
        for seed in (0, 1, 2):
            rng = np.random.default_rng(100 * p + seed)
            A = rng.standard_normal((p, p))
            cov = A @ A.T + 0.5 * np.eye(p)
            x, mu = rng.standard_normal(p), rng.standard_normal(p)
            naive = -0.5 * (p * math.log(2 * math.pi)
                            + math.log(np.linalg.det(cov))
                            + (x - mu) @ np.linalg.inv(cov) @ (x - mu))
            worst_mvn = max(worst_mvn, abs(mvn_logpdf(x, mu, cov) - naive))
    mvn_ok = worst_mvn < 1e-10

    # inverse-Wishart Monte Carlo mean vs scale/(df - dim - 1)
    iw_rel = {}
    for dim, df, scale in ((1, 10.0, np.array([[3.0]])),
                           (3, 14.0, np.diag([1.0, 2.0, 0.5]))):
        stream = RngStream(5, dim)
        draws = np.zeros((dim, dim))
        for _ in range(100000):
            draws += inverse_wishart_sample(df, scale, stream)
        mc = draws / 100000
        truth = scale / (df - dim - 1)
        iw_rel[dim] = (np.linalg.norm(mc - truth, "fro")
                       / np.linalg.norm(truth, "fro"))
    iw_ok = all(rel < 0.02 for rel in iw_rel.values())

    # rank AUC equals the tie-corrected pairwise comparison statistic
    rng = np.random.default_rng(77)
    auc_exact = 0
    for _ in range(100):
        n = int(rng.integers(6, 40))
        labels = rng.integers(1, 3, size=n)
        labels[0], labels[1] = 1, 2  # both classes present
        scores = rng.integers(0, 8, size=n) / 3.0
        pos, neg = scores[labels == 2], scores[labels == 1]
        doubled = sum(2 if a > b else (1 if a == b else 0)
                      for a in pos for b in neg)
        auc = roc_curve(scores, labels, 2).auc
        auc_exact += auc == doubled / (2 * len(pos) * len(neg))
    auc_ok = auc_exact == 100

    # harmonic-mean CPO on a two-draw chain with densities 1 and 1/3
    settings = McmcSettings(iterations=2, burn_in=0, thinning=1)
    dims = {"n": 1, "p": 1, "q": 1, "m": 1, "k": 1}
    z2 = np.zeros((2, 1, 1))
    arrays = {"B": z2, "theta": z2, "alpha": np.zeros((2, 1)),
              "Sigma": np.array([[[[1 / (2 * math.pi)]]],
                                 [[[9 / (2 * math.pi)]]]]),
              "tau": z2 + 1, "R": z2 + 1, "beta0": z2, "Lambda": z2 + 1}
    chain = PosteriorChain("bp", settings, dims, arrays)
    unit = Dataset(y=[[0.0]], x=[[1.0]], group=[1], level=[1], k=1, m=1)
    cpo, lpml = cpo_lpml(chain, unit)
    cpo_ok = abs(cpo[0] - 0.5) < 1e-12 and abs(lpml - math.log(0.5)) < 1e-12

    ok = mvn_ok and iw_ok and auc_ok and cpo_ok
    verdict(verdict_log, ok,
            f"criterion 6 kernel oracles: mvn worst {worst_mvn:.1e} (1e-10), "
            f"IW rel err dim1 {iw_rel[1]:.4f} dim3 {iw_rel[3]:.4f} (2%), "
            f"AUC==pairwise {auc_exact}/100, CPO identity "
            f"{'exact' if cpo_ok else 'off'}")
    assert ok


def _replay(manifest, redo_dir):
    doc = json.loads(Path(manifest).read_text())
    assert cli.main(["rerun", str(manifest), "--out-dir", str(redo_dir)]) == 0
    for out in doc["outputs"]:
        orig = Path(out)
        assert (redo_dir / orig.name).read_bytes() == orig.read_bytes(), \
            f"{orig.name} changed under replay"
    return len(doc["outputs"])


def test_manifest_replay_byte_identical(tmp_path, verdict_log):
    """Criterion 7: every command replays byte-identically from its manifest."""
    d = tmp_path
    data = d / "data.csv"
    assert cli.main(["simulate", "--builtin-sim", "--n", "16", "--seed", "5",
                     "--out", str(data)]) == 0
    mcmc = ["--hyper", "sim", "--iterations", "60", "--burn-in", "20",
            "--thinning", "2"]
    bsp, bp = d / "bsp.json", d / "bp.json"
    assert cli.main(["fit", "--model", "bsp", "--data", str(data), *mcmc,
                     "--seed", "1", "--out", str(bsp)]) == 0
    assert cli.main(["fit", "--model", "bp", "--data", str(data), *mcmc,
                     "--seed", "2", "--out", str(bp)]) == 0
    assert cli.main(["classify", "--chain", str(bsp), "--data", str(data),
                     "--out", str(d / "report.json")]) == 0
    assert cli.main(["loocv", "--model", "bp", "--data", str(data), *mcmc,
                     "--seed", "3", "--workers", "2",
                     "--out", str(d / "loo.json")]) == 0
    assert cli.main(["compare", "--chains", f"{bsp},{bp}", "--data",
                     str(data), "--out", str(d / "cmp.json")]) == 0
    grid = d / "grid.json"
    grid.write_text(json.dumps({"rows": [{"a1": 2.0}, {"tau0": 10.0}]}))
    assert cli.main(["sweep", "--grid", str(grid), "--data", str(data),
                     *mcmc, "--seed", "4", "--out", str(d / "sweep.csv")]) == 0

    outputs = 0
    manifests = sorted(d.glob("*.manifest.json"))
    for j, manifest in enumerate(manifests):
        outputs += _replay(manifest, d / f"redo{j}")
    ok = len(manifests) == 7 and outputs >= 10
    verdict(verdict_log, ok,
            f"criterion 7 manifest replay: {len(manifests)} manifests, "
            f"{outputs} outputs byte-identical (loocv ran with 2 workers)")
    assert ok


def wide_standin(n=63, seed=202):
    """Nine responses, three groups, seven levels, one empty cell."""
    rng = RngStream(seed).generator
    group = np.arange(n) % 3 + 1
    level = (np.arange(n) // 3) % 7 + 1
    level = np.where((group == 3) & (level == 7), 6, level)
    shifts = rng.normal(0.0, 2.0, size=(3, 9))
    y = 0.5 * rng.standard_normal((n, 9)) + shifts[group - 1]
    x = np.eye(3)[group - 1]
    return Dataset(y=y, x=x, group=group, level=level, k=7, m=3)


def test_wide_panel_preset_and_sweep_structure(tmp_path, verdict_log):
    """Criterion 8: the wide-panel preset, schema findings, 8-row sweep."""
    hyper = preset_hyper("wine", 9, 7)
    shape_ok = (hyper.R0.shape == (63, 63) and hyper.r0 == 65.0
                and np.allclose(hyper.R0, 10.0 * np.eye(63))
                and np.allclose(hyper.tau0, 100.0 * np.eye(9)))

    data = wide_standin()
    csv = tmp_path / "panel.csv"
    data.save_csv(csv)
    report = validate(load_csv(csv))
    empty_noted = any("group '3' at level '7'" in f for f in report.findings)

    chain_path = tmp_path / "chain.json"
    fit_ok = cli.main(["fit", "--model", "bsp", "--data", str(csv),
                       "--hyper", "wine", "--iterations", "160",
                       "--burn-in", "60", "--thinning", "2", "--seed", "9",
                       "--out", str(chain_path)]) == 0
    err = classify_dataset(PosteriorChain.load(chain_path),
                           load_csv(csv)).error_rate()

    rows = [{"a1": 0.01, "a2": 0.01}, {"a1": 1.0, "a2": 1.0},
            {"a1": 1.0, "a2": 0.1}, {"a1": 10.0, "a2": 1.0},
            {"tau0": 1.0}, {"tau0": 10.0}, {"tau0": 1000.0},
            {"tau0": 10000.0}]
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"rows": rows}))
    sweep_csv = tmp_path / "sweep.csv"
    sweep_ok = cli.main(["sweep", "--grid", str(grid), "--data", str(csv),
                         "--hyper", "wine", "--iterations", "60",
                         "--burn-in", "20", "--thinning", "2", "--seed", "3",
                         "--out", str(sweep_csv)]) == 0
    lines = sweep_csv.read_text().strip().splitlines()
    header = lines[0].split(",")
    body = [line.split(",") for line in lines[1:]]
    tau_cols = [c for c in header if c.startswith("tau_") and
                c.endswith("_mean")]
    sweep_shape = (len(body) == 8 and header[:4] == ["row", "a1", "a2",
                                                     "tau0"]
                   and len(tau_cols) == 9
                   and all(row[-1] == "" for row in body)
                   and [float(r[1]) for r in body] == [row.get("a1", 1.0)
                                                       for row in rows]
                   and [float(r[3]) for r in body] == [row.get("tau0", 100.0)
                                                       for row in rows])

    ok = (shape_ok and empty_noted and fit_ok and sweep_ok and sweep_shape
          and err < 0.5)
    verdict(verdict_log, ok,
            f"criterion 8 wide-panel stand-in: preset shapes "
            f"{'ok' if shape_ok else 'BAD'}, empty cell "
            f"{'reported' if empty_noted else 'missed'}, fit error "
            f"{err:.2f}, sweep rows {len(body)}/8 with "
            f"{len(tau_cols)} tau columns")
    assert ok
