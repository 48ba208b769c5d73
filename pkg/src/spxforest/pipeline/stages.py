"""Pipeline stages.  Each stage reads upstream files, writes its own files
under the output directory and a manifest chaining to its inputs.

Wall-clock timings go to ``logs/`` only, so everything else in the output
tree is a pure function of the config and seed.
"""

import csv
import io
import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import dataset as D
from .. import ensemble as E
from .. import metrics as M
from .. import texture as T
from ..learners import (
    TrainingTable,
    default_spec,
    fit,
    model_from_bytes,
    rank_models,
    top_k,
    tune_search,
)
from ..learners.selection import METRIC_KEYS
from ..raster import DEFORESTATION, FOREST, INVALID, Mask, load_label_map, load_mask, load_raster, pca_first_component
from ..seeds import derive
from ..superpixel import default_params, load_segmentation, save_segmentation, segment
from .config import PipelineConfig
from .manifest import require, sha256, write_manifest

log = logging.getLogger("spxforest")

CLASS_CODE = {"forest": FOREST, "deforestation": DEFORESTATION}
CLASS_NAME = {v: k for k, v in CLASS_CODE.items()}
STAGES = ("segment", "features", "dataset", "train", "crosseval", "diversity", "ensemble", "report")


class StageError(RuntimeError):
    pass


# ---------------------------------------------------------------- helpers

def num(v) -> str:
    """Nine significant digits, no negative zero."""
    v = float(v) + 0.0
    if np.isnan(v):
        return "nan"
    return f"{v:.9g}"


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def log_timing(cfg, stage, rows):
    """Append ``name,milliseconds`` lines to ``logs/<stage>_times.csv``."""
    p = cfg.output / "logs" / f"{stage}_times.csv"
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "a", encoding="utf-8") as f:
        for name, ms in rows:
            f.write(f"{name},{ms:.3f}\n")


def parallel(jobs, fn, items):
    """Run ``fn`` over ``items``; results come back in item order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def seg_path(cfg, method, area):
    return cfg.output / "segments" / method / f"{area}.hdr"


def stats_path(cfg, method, area):
    return cfg.output / "stats" / method / f"{area}.csv"


def feat_path(cfg, method, area):
    return cfg.output / "features" / method / f"{area}.csv"


def load_mask_for(area):
    labels = load_label_map(area.labels)
    if area.mask is not None:
        mask = load_mask(area.mask)
    else:
        mask = Mask(labels.labels != INVALID)
    labels.check_mask(mask)
    return mask, labels


def _select(cfg, names, allowed, what):
    if names is None:
        return list(allowed)
    bad = [n for n in names if n not in allowed]
    if bad:
        raise StageError(f"unknown {what} {bad}; configured: {list(allowed)}")
    return list(names)


# ---------------------------------------------------------------- segment

def stage_segment(cfg: PipelineConfig, methods=None, areas=None, jobs=1):
    methods = _select(cfg, methods, cfg.methods, "method")
    areas = _select(cfg, areas, [a.name for a in cfg.areas], "area")
    tasks = [(m, a) for a in areas for m in methods]

    def run(task):
        m, a = task
        area = cfg.area(a)
        raster = load_raster(area.raster)
        mask, _ = load_mask_for(area)
        gray = pca_first_component(raster, mask)
        over = {"iterations": cfg.int("superpixel.iterations"), "seed": derive(cfg.seed, "segment", m, a)}
        c = cfg.compactness(m)
        if c is not None:
            over["compactness"] = c
        params = default_params(m, cfg.k_target(m), **over)
        t0 = time.perf_counter()
        seg = segment(m, gray, mask, params)
        ms = 1000 * (time.perf_counter() - t0)
        out = seg_path(cfg, m, a)
        out.parent.mkdir(parents=True, exist_ok=True)
        save_segmentation(out, seg)
        files = [out, out.with_suffix(".bin"), out.with_name(out.stem + ".sidecar.txt")]
        write_manifest(cfg.output, f"segment_{m}_{a}", files, inputs=[area.raster, area.labels],
                       extra={"k_target": params.k_target, "k_actual": seg.k_actual})
        log.info("segment %s/%s: k=%d in %.1f ms", m, a, seg.k_actual, ms)
        return (f"{m}/{a}", ms)

    log_timing(cfg, "segment", parallel(jobs, run, tasks))


# ---------------------------------------------------------------- features

def stage_features(cfg: PipelineConfig, methods=None, areas=None, jobs=1):
    methods = _select(cfg, methods, cfg.methods, "method")
    areas = _select(cfg, areas, [a.name for a in cfg.areas], "area")
    bands = cfg.list("features.bands") or None
    levels = cfg.int("features.levels")
    tasks = [(m, a) for a in areas for m in methods]

    def run(task):
        m, a = task
        require(cfg.output, f"segment_{m}_{a}", f"segmentation for method '{m}', area '{a}'")
        area = cfg.area(a)
        raster = load_raster(area.raster)
        _, labels = load_mask_for(area)
        seg = load_segmentation(seg_path(cfg, m, a))
        t0 = time.perf_counter()
        recs = D.segment_stats(seg, labels, m, a)
        feats = T.segment_features(raster, seg, bands, levels)
        ms = 1000 * (time.perf_counter() - t0)
        sp = write_csv(stats_path(cfg, m, a),
                       ["segment_id", "pixel_count", "forest_fraction", "deforestation_fraction",
                        "class", "homogeneity", "usable"],
                       [[r.segment_id, r.pixel_count, num(r.forest_fraction), num(r.deforestation_fraction),
                         CLASS_NAME[r.dominant_class], num(r.homogeneity), int(r.usable)] for r in recs])
        by_id = {r.segment_id: r for r in recs}
        rows = []
        for sid, vals in zip(feats.segment_ids.tolist(), feats.values):
            r = by_id[sid]
            rows.append([sid, m, CLASS_NAME[r.dominant_class], num(r.homogeneity)] + [num(v) for v in vals])
        fp = write_csv(feat_path(cfg, m, a),
                       ["segment_id", "method", "class", "homogeneity"] + [f"f{i:02d}" for i in range(1, 14)], rows)
        meta = write_text(fp.with_suffix(".meta.txt"),
                          f"averaging = {feats.note}\nlevels = {levels}\n"
                          f"bands = {','.join(bands) if bands else ','.join(raster.band_names)}\n"
                          f"features = {','.join(T.FEATURE_NAMES)}\n"
                          f"excluded = {','.join(map(str, feats.excluded))}\n")
        write_manifest(cfg.output, f"features_{m}_{a}", [sp, fp, meta], upstream=[f"segment_{m}_{a}"],
                       inputs=[area.raster, area.labels])
        return (f"{m}/{a}", ms)

    log_timing(cfg, "features", parallel(jobs, run, tasks))


def _load_records(cfg, m):
    out = []
    for area in cfg.areas:
        for row in read_csv(stats_path(cfg, m, area.name)):
            out.append(D.SegmentRecord(int(row["segment_id"]), m, area.name, int(row["pixel_count"]),
                                       float(row["forest_fraction"]), float(row["deforestation_fraction"]),
                                       CLASS_CODE[row["class"]], float(row["homogeneity"]),
                                       bool(int(row["usable"]))))
    return out


def _load_features(cfg, m):
    out = {}
    for area in cfg.areas:
        for row in read_csv(feat_path(cfg, m, area.name)):
            out[(area.name, int(row["segment_id"]))] = np.array([float(row[f"f{i:02d}"]) for i in range(1, 14)])
    return out


# ---------------------------------------------------------------- dataset

def stage_dataset(cfg: PipelineConfig, jobs=1):
    methods = cfg.methods
    for m in methods:
        for a in cfg.areas:
            require(cfg.output, f"features_{m}_{a.name}", f"features for method '{m}', area '{a.name}'")
    min_px = cfg.int("dataset.min_pixels")
    min_h = cfg.float("dataset.min_homogeneity")
    n_pure, n_mixed = cfg.int("dataset.n_pure"), cfg.int("dataset.n_mixed")
    frac = cfg.float("dataset.validation_fraction")
    ref = cfg.get("dataset.reference")

    useful = {}
    for m in methods:
        feats = _load_features(cfg, m)
        useful[m] = [r for r in D.filter_useful(_load_records(cfg, m), min_px, min_h) if r.key in feats]

    splits = {}
    prov = {}
    if ref == "none":
        for m in methods:
            man = D.build_training_set(useful[m], n_pure, n_mixed, derive(cfg.seed, "dataset", m), m)
            cls = {r.key: r.dominant_class for r in useful[m]}
            tr = man.train_ids()
            kept, held = D.stratified_holdout(tr, [cls[k] for k in tr], frac, derive(cfg.seed, "validation", m))
            splits[m] = {**{k: "train" for k in kept}, **{k: "validation" for k in held},
                         **{k: "test" for k in man.test}}
            prov[m] = dict(man.provenance, mode="independent")
    else:
        man = D.build_training_set(useful[ref], n_pure, n_mixed, derive(cfg.seed, "dataset", ref), ref)
        cls = {r.key: r.dominant_class for r in useful[ref]}
        tr = man.train_ids()
        kept, held = D.stratified_holdout(tr, [cls[k] for k in tr], frac, derive(cfg.seed, "validation"))
        ref_role = {**{k: "train" for k in kept}, **{k: "validation" for k in held}}
        for m in methods:
            if m == ref:
                splits[m] = {**ref_role, **{k: "test" for k in man.test}}
                prov[m] = dict(man.provenance, mode="reference")
                continue
            ok = {r.key for r in useful[m]}
            role = {}
            unmatched = not_useful = 0
            for area in cfg.areas:
                ids = [k[1] for k in tr if k[0] == area.name]
                if not ids:
                    continue
                rseg = load_segmentation(seg_path(cfg, ref, area.name))
                oseg = load_segmentation(seg_path(cfg, m, area.name))
                match = D.match_segments(rseg, oseg, ids)
                unmatched += len(match.unmatched)
                for rid in ids:
                    if rid not in match.mapping:
                        continue
                    key = (area.name, match.mapping[rid])
                    if key not in ok:
                        not_useful += 1
                        continue
                    r = ref_role[(area.name, rid)]
                    # a segment matched from both roles is held out, never fitted
                    if role.get(key) != "validation":
                        role[key] = r
            test = {k: "test" for k in sorted(ok) if k not in role}
            splits[m] = {**role, **test}
            n_tr = sum(v == "train" for v in role.values())
            n_va = sum(v == "validation" for v in role.values())
            prov[m] = {"mode": f"matched to {ref}", "n_pure": n_pure, "n_mixed": n_mixed,
                       "n_train": n_tr + n_va, "n_test": len(test), "unmatched": unmatched,
                       "matched_not_useful": not_useful}

    files = []
    for m in methods:
        by_key = {r.key: r for r in useful[m]}
        rows = []
        for key in sorted(splits[m]):
            r = by_key[key]
            rows.append([key[0], key[1], splits[m][key], CLASS_NAME[r.dominant_class], num(r.homogeneity),
                         r.pixel_count])
        files.append(write_csv(cfg.output / "dataset" / f"{m}.csv",
                               ["area_id", "segment_id", "split", "class", "homogeneity", "pixel_count"], rows))
        p = dict(prov[m])
        p.update({"min_pixels": min_px, "min_homogeneity": min_h, "validation_fraction": frac,
                  "seed": cfg.seed})
        for split in ("train", "validation", "test"):
            for c in (FOREST, DEFORESTATION):
                p[f"count.{split}.{CLASS_NAME[c]}"] = sum(
                    1 for k, s in splits[m].items() if s == split and by_key[k].dominant_class == c)
        files.append(write_text(cfg.output / "dataset" / f"{m}.provenance.txt",
                                "".join(f"{k} = {v}\n" for k, v in sorted(p.items()))))
    write_manifest(cfg.output, "dataset", files,
                   upstream=[f"features_{m}_{a.name}" for m in methods for a in cfg.areas])


def load_split(cfg, m):
    """Feature matrices and labels per split for method ``m``."""
    feats = _load_features(cfg, m)
    out = {}
    for row in read_csv(cfg.output / "dataset" / f"{m}.csv"):
        key = (row["area_id"], int(row["segment_id"]))
        out.setdefault(row["split"], ([], [], []))
        X, y, keys = out[row["split"]]
        X.append(feats[key])
        y.append(CLASS_CODE[row["class"]])
        keys.append(key)
    return {s: (np.array(X), np.array(y, dtype=np.int64), keys) for s, (X, y, keys) in out.items()}


# ---------------------------------------------------------------- train

def stage_train(cfg: PipelineConfig, methods=None, jobs=1):
    methods = _select(cfg, methods, cfg.methods, "method")
    require(cfg.output, "dataset", "dataset split")
    algs = cfg.list("learners.algorithms")
    k = cfg.int("learners.folds")
    K = cfg.int("learners.top_k")
    budget = cfg.int("learners.tune_budget")
    grids = cfg.grids()

    def run(m):
        data = load_split(cfg, m)
        X, y, keys = data["train"]
        table = TrainingTable(X, y)
        Xt, yt, _ = data["test"]
        specs = [default_spec(a, seed=derive(cfg.seed, "fit", m, a)) for a in algs]
        t0 = time.perf_counter()
        ranking = rank_models(specs, table, k, derive(cfg.seed, "cv", m))
        times = [(f"{m}/cv/{e.spec.name}", 1000 * e.report.mean_seconds if e.report else 0.0) for e in ranking]
        rows = []
        for i, e in enumerate(ranking, 1):
            if e.report is None:
                rows.append([i, e.spec.name] + ["nan"] * len(METRIC_KEYS) + [f"failed: {e.error}"])
            else:
                mean = e.report.mean
                rows.append([i, e.spec.name] + [num(mean[mk]) for mk in METRIC_KEYS] + ["ok"])
        files = [write_csv(cfg.output / "train" / f"{m}_ranking.csv",
                           ["rank", "algorithm", *METRIC_KEYS, "status"], rows)]
        top_rows = []
        model_lines = []
        train_hash = sha256_rows(X, y)
        for i, spec in enumerate(top_k([e for e in ranking if e.report is not None], K), 1):
            res = tune_search(spec, table, budget, derive(cfg.seed, "tune", m, spec.name), grids, k)
            model = fit(res.spec, table)
            blob = model.to_bytes()
            mp = cfg.output / "models" / m / f"{i}_{spec.name}.model"
            mp.parent.mkdir(parents=True, exist_ok=True)
            mp.write_bytes(blob)
            files.append(mp)
            ba = M.balanced_accuracy_labels(yt, model.predict(Xt))
            top_rows.append([i, spec.name, res.spec.describe(), num(res.score), num(ba), mp.name])
            model_lines.append(f"{mp.name}: algorithm={spec.name} hyperparameters={res.spec.describe()} "
                               f"seed={spec.seed} train_sha256={train_hash}")
        times.append((f"{m}/total", 1000 * (time.perf_counter() - t0)))
        files.append(write_csv(cfg.output / "train" / f"{m}_top.csv",
                               ["rank", "algorithm", "hyperparameters", "cv_balanced_accuracy",
                                "test_balanced_accuracy", "model"], top_rows))
        files.append(write_text(cfg.output / "models" / m / "models.txt", "\n".join(model_lines) + "\n"))
        write_manifest(cfg.output, f"train_{m}", files, upstream=["dataset"])
        return times

    for t in parallel(jobs, run, methods):
        log_timing(cfg, "train", t)


def sha256_rows(X, y):
    import hashlib

    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(y, dtype="<i8").tobytes())
    return h.hexdigest()


def _require_all_trained(cfg, stage):
    missing = []
    for m in cfg.methods:
        try:
            require(cfg.output, f"train_{m}", f"trained models for method '{m}'")
        except Exception as e:
            missing.append((m, str(e)))
    if missing:
        names = ", ".join(m for m, _ in missing)
        raise StageError(f"{stage}: trained models missing or stale for method(s): {names} "
                         f"({missing[0][1]})")


def load_models(cfg, m):
    rows = read_csv(cfg.output / "train" / f"{m}_top.csv")
    out = []
    for r in rows:
        blob = (cfg.output / "models" / m / r["model"]).read_bytes()
        out.append((r["algorithm"], model_from_bytes(blob)))
    return out


def column_name(alg, m):
    return f"{alg}/{m}"


# ---------------------------------------------------------------- crosseval

def stage_crosseval(cfg: PipelineConfig, jobs=1):
    _require_all_trained(cfg, "crosseval")
    methods = cfg.methods
    tops = {m: load_models(cfg, m)[0] for m in methods}
    tests = {m: load_split(cfg, m)["test"][:2] for m in methods}
    models = {column_name(a, m): model for m, (a, model) in tops.items()}
    table = M.cross_method_table(models, tests, lambda mdl, X: mdl.predict(X))
    rows = [[r] + [num(v) for v in table.cells[i]] for i, r in enumerate(table.rows)]
    rows.append(["mean"] + [num(v) for v in table.mean])
    rows.append(["std"] + [num(v) for v in table.std])
    f = write_csv(cfg.output / "crosseval" / "table.csv", ["test_method"] + table.cols, rows)
    write_manifest(cfg.output, "crosseval", [f], upstream=[f"train_{m}" for m in methods])


def read_cross_table(cfg):
    rows = read_csv(cfg.output / "crosseval" / "table.csv")
    cols = [c for c in rows[0] if c != "test_method"]
    body = [r for r in rows if r["test_method"] not in ("mean", "std")]
    cells = np.array([[float(r[c]) for c in cols] for r in body])
    return [r["test_method"] for r in body], cols, cells


# ---------------------------------------------------------------- diversity

def _all_models(cfg):
    out = []
    for m in cfg.methods:
        for alg, model in load_models(cfg, m):
            out.append((column_name(alg, m), m, model))
    return out


def pred_path(cfg, target, split):
    return cfg.output / "predictions" / f"{target}_{split}.csv"


def load_prediction_matrix(cfg, target, split):
    rows = read_csv(pred_path(cfg, target, split))
    cols = [c[len("pred_"):] for c in rows[0] if c.startswith("pred_")]
    P = np.array([[int(r["pred_" + c]) for c in cols] for r in rows], dtype=np.int8)
    t = np.array([int(r["truth"]) for r in rows], dtype=np.int8)
    return E.PredictionMatrix(tuple(cols), P, t), [r["sample_id"] for r in rows]


def stage_diversity(cfg: PipelineConfig, jobs=1):
    _require_all_trained(cfg, "diversity")
    models = _all_models(cfg)
    names = [n for n, _, _ in models]
    files = []
    pooled_P, pooled_t = [], []
    for t in cfg.methods:
        data = load_split(cfg, t)
        for split in ("validation", "test"):
            if split not in data:
                raise StageError(f"method '{t}' has no {split} rows; check dataset.validation_fraction")
            X, y, keys = data[split]
            P = np.column_stack([mdl.predict(X) for _, _, mdl in models])
            rows = [[f"{a}:{s}", int(y[i])] + P[i].tolist() for i, (a, s) in enumerate(keys)]
            files.append(write_csv(pred_path(cfg, t, split), ["sample_id", "truth"] + [f"pred_{n}" for n in names], rows))
            if split == "validation":
                pm = E.PredictionMatrix(tuple(names), P, y)
                files.append(_write_cor(cfg.output / "diversity" / f"cor_{t}.csv", names, E.cor_matrix(pm)))
                pooled_P.append(P)
                pooled_t.append(y)
    pm = E.PredictionMatrix(tuple(names), np.vstack(pooled_P), np.concatenate(pooled_t))
    files.append(_write_cor(cfg.output / "diversity" / "cor_all.csv", names, E.cor_matrix(pm)))
    write_manifest(cfg.output, "diversity", files, upstream=[f"train_{m}" for m in cfg.methods])


def _write_cor(path, names, C):
    rows = [[n] + [num(v) for v in C[i]] for i, n in enumerate(names)]
    return write_csv(path, ["classifier"] + names, rows)


# ---------------------------------------------------------------- ensemble

def umda_params(cfg, seed):
    return E.UmdaParams(cfg.int("ensemble.population"), cfg.float("ensemble.elite_fraction"),
                        cfg.int("ensemble.iterations"), seed, cfg.float("ensemble.clamp"))


def stage_ensemble(cfg: PipelineConfig, jobs=1):
    require(cfg.output, "diversity", "prediction matrices (run diversity)")
    require(cfg.output, "crosseval", "cross-method table (run crosseval)")
    R = cfg.int("ensemble.runs")
    rows_target, _, cells = read_cross_table(cfg)
    summary, sel_rows, trace_rows = [], [], []
    all_runs = []
    names = None
    for t in cfg.methods:
        val, _ = load_prediction_matrix(cfg, t, "validation")
        test, _ = load_prediction_matrix(cfg, t, "test")
        names = val.classifiers
        everyone = np.ones(val.n_classifiers, dtype=bool)
        mv_acc = E.vote_fitness(test, everyone)

        def run(r, t=t, val=val):
            return E.umda_select(val, umda_params(cfg, derive(cfg.seed, "umda", t, r)))

        runs = parallel(jobs, run, range(R))
        all_runs += runs
        best = max(range(R), key=lambda r: (runs[r].fitness, -r))
        chosen = runs[best]
        umda_acc = E.vote_fitness(test, chosen.include)
        top1 = float(cells[rows_target.index(t)].max())
        summary.append([t, num(top1), num(umda_acc), chosen.n_included, num(chosen.fitness), best,
                        num(mv_acc), val.n_classifiers, num(M.relative_gain(umda_acc, top1))])
        for r, s in enumerate(runs):
            sel_rows += [[t, r, n, int(v)] for n, v in zip(names, s.include)]
            trace_rows += [[t, r, g, num(f)] for g, f in enumerate(s.trace)]
    files = [
        write_csv(cfg.output / "ensemble" / "summary.csv",
                  ["target", "top1_balanced_accuracy", "umda_balanced_accuracy", "umda_n_classifiers",
                   "umda_validation_fitness", "umda_run", "mv_balanced_accuracy", "mv_n_classifiers",
                   "relative_gain"], summary),
        write_csv(cfg.output / "ensemble" / "selections.csv", ["target", "run", "classifier", "included"], sel_rows),
        write_csv(cfg.output / "ensemble" / "traces.csv", ["target", "run", "iteration", "best_fitness"], trace_rows),
    ]
    method_of = {n: n.split("/", 1)[1] for n in names}
    prob_rows = []
    scopes = [(t, all_runs[i * R:(i + 1) * R]) for i, t in enumerate(cfg.methods)] + [("all", all_runs)]
    for scope, runs in scopes:
        ci, cs = E.selection_probabilities(runs, method_of, names)
        prob_rows += [[scope, "CI", n, num(ci[n])] for n in names]
        prob_rows += [[scope, "CS", m, num(v)] for m, v in cs.items()]
    files.append(write_csv(cfg.output / "ensemble" / "probabilities.csv", ["scope", "kind", "name", "percent"],
                           prob_rows))
    write_manifest(cfg.output, "ensemble", files, upstream=["diversity", "crosseval"])


# ---------------------------------------------------------------- report

def _fmt2(v):
    return f"{M.round_half_up(v, 2):.2f}"


def stage_report(cfg: PipelineConfig, jobs=1):
    for s in ("crosseval", "diversity", "ensemble"):
        require(cfg.output, s, f"{s} outputs (run {s})")
    _require_all_trained(cfg, "report")
    out = cfg.output / "report"
    files = []

    # Table 1: top classifiers per method, test balanced accuracy
    lines = ["Top classifiers per superpixel method (balanced accuracy %, own test set)", ""]
    for m in cfg.methods:
        rows = read_csv(cfg.output / "train" / f"{m}_top.csv")
        cells = "  ".join(f"{r['algorithm']:>4} {_fmt2(float(r['test_balanced_accuracy'])):>6}" for r in rows)
        lines.append(f"{m.upper():<5} {cells}")
    files.append(write_text(out / "table1.txt", "\n".join(lines) + "\n"))

    # Table 2: cross-method table plus ensembles
    targets, cols, cells = read_cross_table(cfg)
    summ = {r["target"]: r for r in read_csv(cfg.output / "ensemble" / "summary.csv")}
    head = ["Spx"] + cols + ["UMDA Acc.", "UMDA #C", "MV Acc.", "MV #C", "Rel. Gain"]
    body = []
    for i, t in enumerate(targets):
        s = summ[t]
        umda = float(s["umda_balanced_accuracy"])
        gain = M.relative_gain(umda, float(cells[i].max()))
        body.append([t.upper()] + [_fmt2(v) for v in cells[i]] +
                    [_fmt2(umda), s["umda_n_classifiers"], _fmt2(float(s["mv_balanced_accuracy"])),
                     s["mv_n_classifiers"], f"{gain:.1f}"])
    ext = np.column_stack([cells,
                           [float(summ[t]["umda_balanced_accuracy"]) for t in targets],
                           [float(summ[t]["umda_n_classifiers"]) for t in targets],
                           [float(summ[t]["mv_balanced_accuracy"]) for t in targets],
                           [float(summ[t]["mv_n_classifiers"]) for t in targets]])
    stats = [M.mean_std(ext[:, j]) for j in range(ext.shape[1])]
    body.append(["Avg."] + [_fmt2(a) for a, _ in stats] + ["--"])
    body.append(["Std. Dev."] + [_fmt2(s) for _, s in stats] + ["--"])
    widths = [max(len(str(r[j])) for r in [head] + body) for j in range(len(head))]
    fmt = lambda r: "  ".join(str(v).rjust(w) for v, w in zip(r, widths))
    lines = ["Balanced accuracy (%) of top-1 classifiers across test sets and of ensembles", "",
             fmt(head), "-" * len(fmt(head))] + [fmt(r) for r in body]
    files.append(write_text(out / "table2.txt", "\n".join(lines) + "\n"))

    # Table 3: selection probabilities over all UMDA runs
    probs = [r for r in read_csv(cfg.output / "ensemble" / "probabilities.csv") if r["scope"] == "all"]
    lines = ["UMDA selection probabilities (%) over all runs", "", "Classifier (CI)"]
    lines += [f"  {r['name']:<14} {float(r['percent']):6.1f}" for r in probs if r["kind"] == "CI"]
    lines += ["", "Superpixel method (CS)"]
    lines += [f"  {r['name']:<14} {float(r['percent']):6.1f}" for r in probs if r["kind"] == "CS"]
    files.append(write_text(out / "table3.txt", "\n".join(lines) + "\n"))

    files.append(render_heatmap(cfg.output / "diversity" / "cor_all.csv", out / "cor_heatmap.png"))
    write_manifest(cfg.output, "report", files, upstream=["crosseval", "diversity", "ensemble"]
                   + [f"train_{m}" for m in cfg.methods])


def render_heatmap(csv_path, png_path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_csv(csv_path)
    names = [r["classifier"] for r in rows]
    C = np.array([[float(r[n]) for n in names] for r in rows])
    fig, ax = plt.subplots(figsize=(9, 8), dpi=100)
    im = ax.imshow(np.ma.masked_invalid(C), cmap="viridis", vmin=-1, vmax=1)
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=7)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    fig.colorbar(im, ax=ax, label="COR")
    ax.set_title("Pairwise COR diversity on validation samples")
    fig.tight_layout()
    png_path = Path(png_path)
    png_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(png_path, metadata={"Software": None})
    plt.close(fig)
    return png_path


# ---------------------------------------------------------------- driver

def run_stage(cfg, stage, methods=None, areas=None, jobs=1):
    t0 = time.perf_counter()
    cfg.output.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(cfg.path, cfg.output / "config.snapshot.txt")
    if stage == "segment":
        stage_segment(cfg, methods, areas, jobs)
    elif stage == "features":
        stage_features(cfg, methods, areas, jobs)
    elif stage == "train":
        stage_train(cfg, methods, jobs)
    elif stage in STAGES:
        globals()[f"stage_{stage}"](cfg, jobs=jobs)
    else:
        raise StageError(f"unknown stage {stage!r}")
    log_timing(cfg, "stages", [(stage, 1000 * (time.perf_counter() - t0))])


def run_all(cfg, jobs=1):
    for s in STAGES:
        run_stage(cfg, s, jobs=jobs)
