"""Repeated 2-fold cross-validation comparing self-labeling against reference methods.

Methods
-------
FULL   per-modality classifier on the fully labeled training fold
EF     one classifier on the concatenated, preprocessed modalities (full labels)
LF     per-modality classifiers combined by summed supports (full labels)
PRE    per-modality classifier on the pre-labeled instances only
UNI    per-modality classifier on labels propagated within that modality
CMCSL  per-modality classifier on the shared cross-modal pseudo-labels

PRE, UNI and CMCSL depend on the labeling budget and share one pre-label
draw per (dataset, repeat, fold, budget) cell.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from sklearn.base import clone

from ._validation import BudgetError, DataError
from .classifiers import EarlyFusionClassifier, LateFusionClassifier, make_classifier
from .dataset import MultimodalDataset, SyntheticSpec, ModalitySpec, load_multimodal, make_synthetic, stratified_two_fold
from .evalstats import balanced_accuracy, combined_5x2cv_f_test, mean_ranks, wilcoxon_signed_rank
from .preprocess import PreprocessKind, apply_scaler, fit_scaler
from .propagate import propagate_views, resolve_cross_modal, select_prelabeled

logger = logging.getLogger(__name__)

__all__ = [
    "MethodKind",
    "ExperimentConfig",
    "Record",
    "CellError",
    "FUSED",
    "stable_seed",
    "expected_record_count",
    "run_cell",
    "run_experiment",
    "aggregate_and_test",
    "Summary",
    "RankTable",
    "StatRow",
    "write_results",
    "read_results",
    "write_outputs",
]

FUSED = "fused"


class MethodKind(str, enum.Enum):
    FULL = "full"
    EF = "ef"
    LF = "lf"
    PRE = "pre"
    UNI = "uni"
    CMCSL = "cmcsl"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown method {value!r}; valid methods: {valid}") from None

    @property
    def budgeted(self):
        return self in (MethodKind.PRE, MethodKind.UNI, MethodKind.CMCSL)

    @property
    def fused(self):
        return self in (MethodKind.EF, MethodKind.LF)


METHOD_ORDER = list(MethodKind)


class CellError(RuntimeError):
    def __init__(self, coords, cause):
        self.coords = coords
        super().__init__(f"cell {coords} failed: {cause}")


def stable_seed(*parts):
    """63-bit seed from a BLAKE2 hash of ``parts``; independent of run order."""
    blob = json.dumps([str(p) for p in parts]).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little") >> 1


def _index_hash(indices):
    return hashlib.blake2b(np.sort(np.asarray(indices, dtype="<i8")).tobytes(), digest_size=6).hexdigest()


# --------------------------------------------------------------------------
# Configuration


def _parse_budgets(value):
    if isinstance(value, str):
        out = []
        for part in value.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                out.extend(range(lo, hi + 1))
            elif part:
                out.append(int(part))
        value = out
    budgets = tuple(int(b) for b in value)
    if not budgets or min(budgets) < 1:
        raise ValueError("budgets must be a non-empty list of positive integers")
    return tuple(sorted(set(budgets)))


def _synthetic_from_dict(d):
    mods = tuple(
        ModalitySpec.parse(m) if isinstance(m, str) else ModalitySpec(**m)
        for m in d.get("modalities", ())
    )
    kwargs = {k: v for k, v in d.items() if k != "modalities"}
    if mods:
        kwargs["modalities"] = mods
    return SyntheticSpec(**kwargs)


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment, apart from scheduling.

    ``datasets`` may mix loaded :class:`MultimodalDataset` objects,
    :class:`SyntheticSpec` instances and manifest paths.  ``modalities``
    restricts which modalities are evaluated (all are still used for label
    exchange); ``None`` evaluates every modality.
    """

    datasets: list = field(default_factory=list)
    classifier: str = "gnb"
    preprocess: str = "l2std"
    budgets: tuple = tuple(range(1, 21))
    repeats: int = 5
    folds: int = 2
    master_seed: int = 0
    methods: tuple = tuple(m.value for m in MethodKind)
    modalities: tuple = None
    alpha: float = 0.05

    def __post_init__(self):
        self.classifier = str(self.classifier).lower()
        make_classifier(self.classifier)
        self.preprocess = PreprocessKind.parse(self.preprocess).value
        self.budgets = _parse_budgets(self.budgets)
        if isinstance(self.methods, str):
            self.methods = [m for m in self.methods.split(",") if m.strip()]
        methods = {MethodKind.parse(m.strip() if isinstance(m, str) else m) for m in self.methods}
        if not methods:
            raise ValueError("at least one method is required")
        self.methods = tuple(m.value for m in METHOD_ORDER if m in methods)
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.folds != 2:
            raise ValueError("only 2-fold cross-validation is supported")
        if self.modalities is not None:
            self.modalities = tuple(self.modalities)

    @property
    def method_kinds(self):
        return [MethodKind(m) for m in self.methods]

    @property
    def protocol_label(self):
        return f"{self.repeats}x{self.folds}"

    @classmethod
    def from_dict(cls, data, base_dir="."):
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(unknown)}")
        base = Path(base_dir)
        datasets = []
        for i, entry in enumerate(data.get("datasets", [])):
            if isinstance(entry, str):
                datasets.append(str(base / entry))
            elif "manifest" in entry:
                datasets.append(str(base / entry["manifest"]))
            elif "synthetic" in entry:
                spec = dict(entry["synthetic"])
                spec.setdefault("name", entry.get("name", f"synthetic{i}"))
                datasets.append(_synthetic_from_dict(spec))
            else:
                raise ValueError(f"datasets[{i}]: expected a manifest path or a 'synthetic' block")
        data["datasets"] = datasets
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ValueError(f"{path}: top level must be a JSON object")
        return cls.from_dict(data, base_dir=path.parent)

    def load_datasets(self):
        out = []
        for src in self.datasets:
            if isinstance(src, MultimodalDataset):
                out.append(src)
            elif isinstance(src, SyntheticSpec):
                out.append(make_synthetic(src))
            else:
                out.append(load_multimodal(src))
        names = [d.name for d in out]
        if len(set(names)) != len(names):
            raise ValueError(f"dataset names must be unique, got {names}")
        return out


# --------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class Record:
    dataset: str
    n_classes: int
    modality: str
    method: str
    classifier: str
    preprocess: str
    b_class: int  # 0 for budget-independent methods
    repeat: int
    fold: int
    seed: int
    bac: float
    status: str = "ok"
    prelabel_hash: str = ""
    protocol: str = "5x2"
    wall_time: float = 0.0

    @property
    def ok(self):
        return self.status == "ok"


RESULT_COLUMNS = [f.name for f in fields(Record) if f.name != "wall_time"]


def _fmt(value):
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def write_results(records, path):
    """Write the long-form table; byte-stable for identical records."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_results(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    types = {f.name: f.type for f in fields(Record)}
    out = []
    for row in rows:
        kw = {}
        for name, value in row.items():
            t = types.get(name)
            if t is None:
                continue
            if t == "int":
                kw[name] = int(value)
            elif t == "float":
                kw[name] = float(value)
            else:
                kw[name] = value
        out.append(Record(**kw))
    return out


def expected_record_count(config, datasets):
    """Closed-form number of records ``run_experiment`` produces."""
    total = 0
    kinds = config.method_kinds
    for ds in datasets:
        m_eval = len(_eval_modalities(config, ds))
        per_split = 0
        for kind in kinds:
            if kind.fused:
                per_split += 1
            elif kind.budgeted:
                per_split += m_eval * len(config.budgets)
            else:
                per_split += m_eval
        total += config.repeats * config.folds * per_split
    return total


def _eval_modalities(config, dataset):
    names = dataset.modality_names
    if config.modalities is None:
        return list(range(len(names)))
    missing = [m for m in config.modalities if m not in names]
    if missing:
        raise DataError(f"dataset {dataset.name!r} has no modality {missing[0]!r}; available: {names}")
    return [names.index(m) for m in config.modalities]


# --------------------------------------------------------------------------
# Execution


@dataclass
class _Split:
    """Preprocessed train/test data for one (dataset, repeat, fold)."""

    dataset: MultimodalDataset
    repeat: int
    fold: int
    train: np.ndarray
    test: np.ndarray
    y_train: np.ndarray
    y_test: np.ndarray
    raw_train: list
    raw_test: list
    pre_train: list
    pre_test: list


def _make_split(dataset, repeat, fold, pair, preprocess):
    train, test = list(pair)[fold]
    kind = PreprocessKind.parse(preprocess)
    raw_train = [X[train] for X in dataset.views]
    raw_test = [X[test] for X in dataset.views]
    scalers = [fit_scaler(kind, X) for X in raw_train]
    return _Split(
        dataset, repeat, fold, train, test,
        dataset.labels[train], dataset.labels[test],
        raw_train, raw_test,
        [apply_scaler(s, X) for s, X in zip(scalers, raw_train)],
        [apply_scaler(s, X) for s, X in zip(scalers, raw_test)],
    )


def _split_seed(config, dataset, repeat):
    return stable_seed(config.master_seed, dataset.name, repeat)


def _cell_seed(config, dataset, repeat, fold, b_class):
    return stable_seed(config.master_seed, dataset.name, repeat, fold, b_class)


def _bac(model, X, split):
    return balanced_accuracy(split.y_test, model.predict(X), split.dataset.n_classes)


def run_cell(split, method, modality, b_class, config, labeling=None):
    """Train one method on one split and return its held-out balanced accuracy.

    ``modality`` is a modality index or :data:`FUSED`.  For UNI and CMCSL a
    precomputed ``labeling`` dict (``centroids``, ``raw``, ``cm``) may be passed
    so methods sharing a budget cell reuse one pre-label draw; otherwise it is
    computed from the cell seed.
    """
    method = MethodKind.parse(method)
    ds = split.dataset
    k = ds.n_classes
    base = make_classifier(config.classifier)
    if method is MethodKind.EF:
        model = EarlyFusionClassifier(base, preprocess=config.preprocess)
        model.fit(split.raw_train, split.y_train, n_classes=k)
        return _bac(model, split.raw_test, split)
    if method is MethodKind.LF:
        model = LateFusionClassifier(base).fit(split.pre_train, split.y_train, n_classes=k)
        return _bac(model, split.pre_test, split)
    X_tr, X_te = split.pre_train[modality], split.pre_test[modality]
    if method is MethodKind.FULL:
        return _bac(clone(base).fit(X_tr, split.y_train, n_classes=k), X_te, split)
    if labeling is None:
        labeling = _budget_labeling(split, b_class, config)
    idx = labeling["centroids"].indices
    if method is MethodKind.PRE:
        # sorted so that a budget covering the whole fold reproduces FULL exactly
        sel = np.sort(idx)
        model = clone(base).fit(X_tr[sel], split.y_train[sel], n_classes=k)
    elif method is MethodKind.UNI:
        model = clone(base).fit(X_tr, labeling["raw"][modality], n_classes=k)
    else:
        model = clone(base).fit(X_tr, labeling["cm"].labels, n_classes=k)
    return _bac(model, X_te, split)


def _budget_labeling(split, b_class, config):
    seed = _cell_seed(config, split.dataset, split.repeat, split.fold, b_class)
    centroids = select_prelabeled(split.y_train, split.dataset.n_classes, b_class, seed)
    raw, dist = propagate_views(split.pre_train, centroids)
    return {
        "seed": seed,
        "centroids": centroids,
        "raw": raw,
        "cm": resolve_cross_modal(raw, dist, centroids.indices),
    }


def _run_job(args):
    config, dataset, repeat, keep_going = args
    pair = stratified_two_fold(dataset.labels, _split_seed(config, dataset, repeat))
    eval_mods = _eval_modalities(config, dataset)
    names = dataset.modality_names
    out = []

    def record(modality, method, b, fold, seed, bac, status="ok", phash="", wall=0.0):
        name = FUSED if modality == FUSED else names[modality]
        out.append(Record(
            dataset.name, dataset.n_classes, name, method.value, config.classifier,
            config.preprocess, b, repeat, fold, seed, float(bac), status, phash,
            config.protocol_label, wall,
        ))

    def attempt(coords, fn):
        t0 = time.perf_counter()
        try:
            return fn(), "ok", time.perf_counter() - t0
        except Exception as exc:
            if not keep_going:
                raise CellError(coords, exc) from exc
            logger.warning("cell %s failed: %s", coords, exc)
            return math.nan, "error", time.perf_counter() - t0

    for fold in range(config.folds):
        split = _make_split(dataset, repeat, fold, pair, config.preprocess)
        split_seed = _split_seed(config, dataset, repeat)
        for method in config.method_kinds:
            if method.budgeted:
                continue
            targets = [FUSED] if method.fused else eval_mods
            for m in targets:
                coords = (dataset.name, repeat, fold, method.value, m)
                bac, status, wall = attempt(coords, lambda: run_cell(split, method, m, 0, config))
                record(m, method, 0, fold, split_seed, bac, status, wall=wall)
        budgeted = [m for m in config.method_kinds if m.budgeted]
        if not budgeted:
            continue
        for b in config.budgets:
            seed = _cell_seed(config, dataset, repeat, fold, b)
            try:
                labeling = _budget_labeling(split, b, config)
            except BudgetError as exc:
                logger.info("infeasible budget %s for %s repeat %d fold %d: %s",
                            b, dataset.name, repeat, fold, exc)
                for method in budgeted:
                    for m in eval_mods:
                        record(m, method, b, fold, seed, math.nan, "infeasible")
                continue
            phash = _index_hash(labeling["centroids"].indices)
            for method in budgeted:
                for m in eval_mods:
                    coords = (dataset.name, repeat, fold, method.value, m, b)
                    bac, status, wall = attempt(
                        coords, lambda: run_cell(split, method, m, b, config, labeling))
                    record(m, method, b, fold, seed, bac, status, phash, wall)
    return out


def _sort_key(datasets):
    order = {d.name: i for i, d in enumerate(datasets)}
    mod_order = {d.name: {n: j for j, n in enumerate(d.modality_names)} for d in datasets}
    method_order = {m.value: i for i, m in enumerate(METHOD_ORDER)}

    def key(r):
        mods = mod_order[r.dataset]
        return (order[r.dataset], r.repeat, r.fold, method_order[r.method],
                mods.get(r.modality, len(mods)), r.b_class)

    return key


def run_experiment(config, jobs=1, keep_going=False, datasets=None):
    """Run every (dataset, repeat, fold, budget, method, modality) cell.

    Output records are in a canonical order, so the table is identical for
    any ``jobs`` value.
    """
    datasets = config.load_datasets() if datasets is None else datasets
    for ds in datasets:
        _eval_modalities(config, ds)
    tasks = [(config, ds, r, keep_going) for ds in datasets for r in range(config.repeats)]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_job, tasks))
    else:
        chunks = [_run_job(t) for t in tasks]
    records = list(itertools.chain.from_iterable(chunks))
    records.sort(key=_sort_key(datasets))
    return records


# --------------------------------------------------------------------------
# Aggregation and testing


@dataclass(frozen=True)
class StatRow:
    test: str
    group: str
    dataset: str
    modality: str
    method_a: str
    method_b: str
    statistic: float
    p: float
    significant: bool
    winner: str


@dataclass
class RankTable:
    """Mean ranks of ``methods`` over ``rows`` with dominance indices.

    ``dominated[i]`` lists 1-based column indices of methods that method ``i``
    beats significantly (Wilcoxon, higher mean score).
    """

    title: str
    methods: list
    row_labels: list
    values: np.ndarray  # (n_rows, n_methods)
    ranks: np.ndarray
    dominated: list


@dataclass
class Summary:
    cell_means: dict
    five_by_two: dict
    stats: list
    rank_tables: list
    curves: list
    group_of: dict
    protocol: str = "5x2"

    def rank_table(self, title):
        for t in self.rank_tables:
            if t.title == title:
                return t
        raise KeyError(title)


def _group_name(n_classes):
    return "binary" if n_classes == 2 else "multiclass"


def _rank_table(title, methods, row_labels, values, alpha, stats, group, dataset="", modality=""):
    values = np.asarray(values, dtype=np.float64)
    ranks = mean_ranks(values.T) if values.size else np.full(len(methods), np.nan)
    means = values.mean(axis=0)
    dominated = [[] for _ in methods]
    for i, j in itertools.combinations(range(len(methods)), 2):
        outcome = wilcoxon_signed_rank(values[:, i], values[:, j], alpha=alpha)
        winner = ""
        if outcome.significant and means[i] != means[j]:
            w, l = (i, j) if means[i] > means[j] else (j, i)
            dominated[w].append(l + 1)
            winner = methods[w]
        stats.append(StatRow("wilcoxon", title, dataset, modality, methods[i], methods[j],
                             outcome.statistic, outcome.p_value, outcome.significant, winner))
    return RankTable(title, list(methods), list(row_labels), values, ranks, dominated)


def aggregate_and_test(records, alpha=0.05):
    """Summarize records and run the F-tests, Wilcoxon tests and rank tables.

    * ``cell_means[(dataset, modality, method)]``: mean BAC over repeats,
      folds and budgets; EF/LF are broadcast to every evaluated modality.
    * ``five_by_two[...]``: the per-(repeat, fold) BAC averaged over budgets,
      fed pairwise to the combined 5x2 CV F-test.
    * Rank tables per dataset group (binary / multiclass), pooled over
      modalities and per modality, ranking the budgeted methods if present
      (else all methods), plus budget-resolved tables over dataset means.
    """
    ok = [r for r in records if r.ok]
    datasets = list(dict.fromkeys(r.dataset for r in records))
    group_of = {r.dataset: _group_name(r.n_classes) for r in records}
    protocol = records[0].protocol if records else "5x2"
    methods_present = [m.value for m in METHOD_ORDER if any(r.method == m.value for r in ok)]

    modalities = {}
    for ds in datasets:
        mods = list(dict.fromkeys(r.modality for r in records if r.dataset == ds and r.modality != FUSED))
        modalities[ds] = mods or [FUSED]

    def targets(r):
        return modalities[r.dataset] if r.modality == FUSED else [r.modality]

    # (dataset, modality, method) -> {(repeat, fold): [bac over budgets]}, {b: [bac]}
    by_split, by_budget = {}, {}
    for r in ok:
        for mod in targets(r):
            key = (r.dataset, mod, r.method)
            by_split.setdefault(key, {}).setdefault((r.repeat, r.fold), []).append(r.bac)
            by_budget.setdefault(key, {}).setdefault(r.b_class, []).append(r.bac)

    repeats = 1 + max((r.repeat for r in records), default=0)
    folds = 1 + max((r.fold for r in records), default=0)
    cell_means, five_by_two = {}, {}
    for key, cells in by_split.items():
        cell_means[key] = float(np.mean([v for vs in cells.values() for v in vs]))
        mat = np.full((repeats, folds), np.nan)
        for (rep, fold), vs in cells.items():
            mat[rep, fold] = np.mean(vs)
        five_by_two[key] = mat

    stats = []
    for ds in datasets:
        for mod in modalities[ds]:
            present = [m for m in methods_present if (ds, mod, m) in five_by_two]
            for a, b in itertools.combinations(present, 2):
                ma, mb = five_by_two[(ds, mod, a)], five_by_two[(ds, mod, b)]
                if folds != 2 or np.any(np.isnan(ma)) or np.any(np.isnan(mb)):
                    continue
                outcome = combined_5x2cv_f_test(ma, mb, alpha=alpha)
                winner = ""
                if outcome.significant:
                    winner = a if cell_means[(ds, mod, a)] > cell_means[(ds, mod, b)] else b
                stats.append(StatRow("f5x2", group_of[ds], ds, mod, a, b, outcome.statistic,
                                     outcome.p_value, outcome.significant, winner))

    ranked = [m for m in methods_present if MethodKind(m).budgeted] or methods_present
    rank_tables = []
    curves = []
    all_budgets = sorted({r.b_class for r in ok if r.b_class > 0})

    def budget_value(key, b):
        cells = by_budget.get(key, {})
        if b in cells:
            return float(np.mean(cells[b]))
        if 0 in cells:  # budget-independent method, flat across budgets
            return float(np.mean(cells[0]))
        return math.nan

    for ds in datasets:
        for mod in modalities[ds]:
            for m in methods_present:
                key = (ds, mod, m)
                if key not in by_budget:
                    continue
                budgets = all_budgets or [0]
                for b in budgets:
                    v = budget_value(key, b)
                    n = len(by_budget[key].get(b, by_budget[key].get(0, [])))
                    curves.append((ds, mod, m, b, v, n))

    if len(ranked) >= 2:
        for group in ("binary", "multiclass"):
            gds = [d for d in datasets if group_of[d] == group]
            if not gds:
                continue
            rows = [(d, mod) for d in gds for mod in modalities[d]
                    if all((d, mod, m) in cell_means for m in ranked)]
            if rows:
                values = [[cell_means[(d, mod, m)] for m in ranked] for d, mod in rows]
                rank_tables.append(_rank_table(group, ranked, [f"{d}/{mod}" for d, mod in rows],
                                               values, alpha, stats, group))
            group_mods = list(dict.fromkeys(mod for d, mod in rows))
            if len(group_mods) > 1:
                for mod in group_mods:
                    sub = [(d, mm) for d, mm in rows if mm == mod]
                    values = [[cell_means[(d, mm, m)] for m in ranked] for d, mm in sub]
                    rank_tables.append(_rank_table(f"{group}/{mod}", ranked, [d for d, _ in sub],
                                                   values, alpha, stats, group, modality=mod))
            # budget-resolved: dataset-mean BAC per budget
            if all_budgets:
                for mod in group_mods:
                    mds = [d for d in gds if mod in modalities[d]]
                    grid = []
                    for b in all_budgets:
                        per_ds = np.array([[budget_value((d, mod, m), b) for m in ranked] for d in mds])
                        means = np.nanmean(per_ds, axis=0) if per_ds.size else per_ds
                        grid.append(means)
                        for m, v in zip(ranked, means):
                            curves.append((f"group:{group}", mod, m, b, float(v), len(mds)))
                        if len(mds) >= 2 and not np.any(np.isnan(per_ds)):
                            for i, j in itertools.combinations(range(len(ranked)), 2):
                                o = wilcoxon_signed_rank(per_ds[:, i], per_ds[:, j], alpha=alpha)
                                winner = ""
                                if o.significant and means[i] != means[j]:
                                    winner = ranked[i] if means[i] > means[j] else ranked[j]
                                stats.append(StatRow("wilcoxon", f"{group}/{mod}/b={b}", "", mod,
                                                     ranked[i], ranked[j], o.statistic, o.p_value,
                                                     o.significant, winner))
                    grid = np.array(grid)
                    if grid.size and not np.any(np.isnan(grid)) and len(all_budgets) > 1:
                        rank_tables.append(_rank_table(
                            f"{group}/{mod}/budgets", ranked, [str(b) for b in all_budgets],
                            grid, alpha, stats, group, modality=mod))

    return Summary(cell_means, five_by_two, stats, rank_tables, curves, group_of, protocol)


# --------------------------------------------------------------------------
# Reports


def _fmt_dominated(idx, n_methods):
    if not idx:
        return "---"
    if len(idx) == n_methods - 1:
        return "all"
    return ", ".join(str(i) for i in sorted(idx))


def render_summary(summary, config=None):
    lines = ["# Experiment summary", ""]
    if config is not None:
        lines += [
            f"- classifier: {config.classifier}",
            f"- preprocessing: {config.preprocess}",
            f"- budgets: {', '.join(str(b) for b in config.budgets)}",
            f"- master seed: {config.master_seed}",
        ]
    lines += [f"- protocol: {summary.protocol} stratified cross-validation", ""]

    methods = [m.value for m in METHOD_ORDER
               if any(k[2] == m.value for k in summary.cell_means)]
    if methods:
        lines += ["## Mean balanced accuracy", ""]
        header = ["Dataset", "Modality"] + [f"{m.upper()}<sup>{i + 1}</sup>" for i, m in enumerate(methods)]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "---|" * len(header))
        keys = list(dict.fromkeys((k[0], k[1]) for k in summary.cell_means))
        for ds, mod in keys:
            vals = [summary.cell_means.get((ds, mod, m)) for m in methods]
            lines.append("| " + " | ".join([ds, mod] + ["" if v is None else f"{v:.3f}" for v in vals]) + " |")
            wins = {m: [] for m in methods}
            for s in summary.stats:
                if s.test == "f5x2" and s.dataset == ds and s.modality == mod and s.winner:
                    loser = s.method_b if s.winner == s.method_a else s.method_a
                    wins[s.winner].append(methods.index(loser) + 1)
            lines.append("| | | " + " | ".join(_fmt_dominated(wins[m], len(methods)) for m in methods) + " |")
        lines.append("")

    for table in summary.rank_tables:
        lines += [f"## Rank table: {table.title}", ""]
        header = [""] + [f"{m.upper()}<sup>{i + 1}</sup>" for i, m in enumerate(table.methods)]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "---|" * len(header))
        lines.append("| Average rank | " + " | ".join(f"{r:.3f}" for r in table.ranks) + " |")
        lines.append("| | " + " | ".join(_fmt_dominated(d, len(table.methods)) for d in table.dominated) + " |")
        lines.append("")
    return "\n".join(lines)


def write_outputs(records, out_dir, config=None, alpha=0.05):
    """Write results.csv, timings.csv, stats.csv, curves.csv and summary.md."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results(records, out / "results.csv")
    with open(out / "timings.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "modality", "method", "b_class", "repeat", "fold", "wall_time"])
        for r in records:
            w.writerow([r.dataset, r.modality, r.method, r.b_class, r.repeat, r.fold, f"{r.wall_time:.6f}"])
    summary = aggregate_and_test(records, alpha=alpha)
    with open(out / "stats.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test", "method_a", "method_b", "group", "dataset", "modality",
                    "statistic", "p", "significant", "winner"])
        for s in summary.stats:
            w.writerow([s.test, s.method_a, s.method_b, s.group, s.dataset, s.modality,
                        _fmt(float(s.statistic)), _fmt(float(s.p)), str(s.significant).lower(), s.winner])
    with open(out / "curves.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "modality", "method", "b_class", "mean_bac", "n"])
        for row in summary.curves:
            ds, mod, m, b, v, n = row
            w.writerow([ds, mod, m, b, _fmt(float(v)), n])
    (out / "summary.md").write_text(render_summary(summary, config) + "\n", encoding="utf-8")
    return summary
