"""Training loop, evaluation metrics, cross-validation, and the two-tailed
t-test used to compare model F1 scores.

Training is plain SGD, one gradient step per document, with the document
order reshuffled every epoch from the run seed and gradients clipped by
global norm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, Document, FoldSplit, ROLES, derive_shifts, split_documents
from .embeddings import embed_document
from .models import MarroConfig, MarroModel, build_model
from .tensor import Rng, clip_gradients, sgd_step


class TrainingError(RuntimeError):
    pass


class StatsError(ValueError):
    pass


@dataclass
class TrainerConfig:
    learning_rate: float = 0.1
    epochs: int = 80
    clip_norm: float = 5.0
    seed: int = 0
    eval_every: int = 0  # epochs between validation passes; 0 disables

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


@dataclass
class MetricsReport:
    per_label: dict[str, tuple[float, float, float, int]]  # name -> (p, r, f1, support)
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_accuracy: float
    confusion: np.ndarray  # gold x predicted counts over all labels
    unparseable: int = 0

    def to_dict(self) -> dict:
        return {
            "per_label": {
                name: {"precision": p, "recall": r, "f1": f, "support": s}
                for name, (p, r, f, s) in self.per_label.items()
            },
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "micro_accuracy": self.micro_accuracy,
            "confusion": self.confusion.tolist(),
            "unparseable": self.unparseable,
        }


def write_metrics_csv(report: MetricsReport, path) -> None:
    """Per-label table: role,precision,recall,f1,support."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("role,precision,recall,f1,support\n")
        for name, (p, r, f, s) in report.per_label.items():
            fh.write(f"{name},{p:.4f},{r:.4f},{f:.4f},{s}\n")
        fh.write(f"MACRO,{report.macro_precision:.4f},{report.macro_recall:.4f},"
                 f"{report.macro_f1:.4f},{sum(v[3] for v in report.per_label.values())}\n")


def compute_metrics(gold_seqs: list[list[int]], pred_seqs: list[list[int | None]],
                    num_labels: int, label_names: list[str] | None = None,
                    include_absent_labels: bool = False) -> MetricsReport:
    """Pooled per-label precision/recall/F1 with the 0/0 -> 0 convention.

    Predictions of None (e.g. unparseable completions) count against recall
    and accuracy but are excluded from the confusion matrix and tallied in
    `unparseable`. Macro averages run over labels present in gold or
    predictions unless include_absent_labels is set.
    """
    if label_names is None:
        label_names = [r.name for r in ROLES] if num_labels == len(ROLES) \
            else [str(i) for i in range(num_labels)]
    confusion = np.zeros((num_labels, num_labels), dtype=np.int64)
    gold_support = np.zeros(num_labels, dtype=np.int64)
    unparseable = 0
    total = 0
    for gold, pred in zip(gold_seqs, pred_seqs):
        if len(gold) != len(pred):
            raise ValueError("gold/prediction length mismatch")
        for g, p in zip(gold, pred):
            total += 1
            gold_support[g] += 1
            if p is None:
                unparseable += 1
            else:
                confusion[g, p] += 1
    if total == 0:
        raise ValueError("no sentences to evaluate")
    return _finish_report(confusion, gold_support, label_names, include_absent_labels,
                          total=total, unparseable=unparseable)


def _finish_report(confusion: np.ndarray, gold_support: np.ndarray, label_names: list[str],
                   include_absent_labels: bool, total: int, unparseable: int) -> MetricsReport:
    """per_label holds exactly the labels entering the macro averages, so the
    macro-F1 always equals the mean of the reported f1 column."""
    tp = np.diag(confusion).astype(np.float64)
    pred_support = confusion.sum(axis=0).astype(np.float64)
    per_label: dict[str, tuple[float, float, float, int]] = {}
    precisions, recalls, f1s = [], [], []
    for lab, name in enumerate(label_names):
        if not (include_absent_labels or gold_support[lab] > 0 or pred_support[lab] > 0):
            continue
        p = float(tp[lab] / pred_support[lab]) if pred_support[lab] > 0 else 0.0
        r = float(tp[lab] / gold_support[lab]) if gold_support[lab] > 0 else 0.0
        f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        per_label[name] = (p, r, f, int(gold_support[lab]))
        precisions.append(p)
        recalls.append(r)
        f1s.append(f)
    return MetricsReport(
        per_label=per_label,
        macro_precision=float(np.mean(precisions)) if precisions else 0.0,
        macro_recall=float(np.mean(recalls)) if recalls else 0.0,
        macro_f1=float(np.mean(f1s)) if f1s else 0.0,
        micro_accuracy=float(tp.sum() / total) if total else 0.0,
        confusion=np.asarray(confusion, dtype=np.int64),
        unparseable=unparseable,
    )


def metrics_from_confusion(confusion: np.ndarray, label_names: list[str],
                           include_absent_labels: bool = False) -> MetricsReport:
    """Rebuild a MetricsReport from a (possibly summed) confusion matrix."""
    confusion = np.asarray(confusion, dtype=np.int64)
    gold_support = confusion.sum(axis=1)
    return _finish_report(confusion, gold_support, label_names, include_absent_labels,
                          total=int(confusion.sum()), unparseable=0)


@dataclass
class TrainResult:
    loss_curve: list[float]                    # mean per-document loss, one entry per epoch
    eval_points: list[tuple[int, float]] = field(default_factory=list)  # (epoch, macro_f1)


def train(model: MarroModel, provider, docs: list[Document], cfg: TrainerConfig,
          eval_docs: list[Document] | None = None) -> TrainResult:
    """SGD over documents; returns the per-epoch loss curve."""
    if not docs:
        raise TrainingError("no training documents")
    order_rng = Rng(cfg.seed)
    params = model.parameters()
    inputs = {d.doc_id: embed_document(provider, d) for d in docs}
    gold = {d.doc_id: [int(l) for l in d.labels()] for d in docs}
    shift_seqs = {d.doc_id: derive_shifts(d).shifts for d in docs}
    curve: list[float] = []
    eval_points: list[tuple[int, float]] = []
    doc_ids = sorted(inputs)
    for epoch in range(cfg.epochs):
        order = list(doc_ids)
        order_rng.shuffle(order)
        model.train_mode()
        epoch_loss = 0.0
        for doc_id in order:
            loss = model.loss(inputs[doc_id], gold[doc_id], shift_seqs[doc_id])
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingError(
                    f"non-finite loss {value} at epoch {epoch} on document {doc_id!r}; "
                    f"lr={cfg.learning_rate}, clip={cfg.clip_norm}")
            loss.backward()
            clip_gradients(params, cfg.clip_norm)
            sgd_step(params, cfg.learning_rate)
            epoch_loss += value
        curve.append(epoch_loss / len(order))
        if cfg.eval_every > 0 and eval_docs and (epoch + 1) % cfg.eval_every == 0:
            report = evaluate(model, provider, eval_docs)
            eval_points.append((epoch + 1, report.macro_f1))
    model.eval_mode()
    return TrainResult(loss_curve=curve, eval_points=eval_points)


def evaluate(model: MarroModel, provider, docs: list[Document],
             include_absent_labels: bool = False) -> MetricsReport:
    if not docs:
        raise ValueError("no documents to evaluate")
    model.eval_mode()
    gold_seqs, pred_seqs = [], []
    for d in docs:
        x = embed_document(provider, d)
        gold_seqs.append([int(l) for l in d.labels()])
        pred_seqs.append(model.predict(x))
    return compute_metrics(gold_seqs, pred_seqs, model.cfg.num_labels,
                           include_absent_labels=include_absent_labels)


@dataclass
class CvResult:
    per_fold: list[MetricsReport]
    macro_f1_mean: float
    macro_f1_std: float

    def to_json(self) -> str:
        obj = {
            "k": len(self.per_fold),
            "macro_f1_mean": self.macro_f1_mean,
            "macro_f1_std": self.macro_f1_std,
            "folds": [r.to_dict() for r in self.per_fold],
        }
        return json.dumps(obj, indent=2)


def cross_validate(model_cfg: MarroConfig, trainer_cfg: TrainerConfig, corpus: Corpus,
                   folds: FoldSplit, provider, jobs: int = 1) -> CvResult:
    """Train a fresh model per fold (seed = base + fold) and evaluate held-out
    documents. Fold results are deterministic and independent of `jobs`."""

    def run_fold(fold: int) -> MetricsReport:
        train_docs, held = split_documents(corpus, folds, fold)
        if not held or not train_docs:
            raise TrainingError(f"fold {fold} has an empty train or evaluation side")
        fold_trainer = TrainerConfig(
            learning_rate=trainer_cfg.learning_rate, epochs=trainer_cfg.epochs,
            clip_norm=trainer_cfg.clip_norm, seed=trainer_cfg.seed + fold,
            eval_every=0)
        model = build_model(model_cfg, seed=trainer_cfg.seed + fold)
        train(model, provider, train_docs, fold_trainer)
        return evaluate(model, provider, held)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_fold, range(folds.k)))
    else:
        reports = [run_fold(f) for f in range(folds.k)]
    scores = np.asarray([r.macro_f1 for r in reports])
    return CvResult(per_fold=reports, macro_f1_mean=float(scores.mean()),
                    macro_f1_std=float(scores.std()))


# ---------------------------------------------------------------------------
# two-tailed t-test

@dataclass
class TTestResult:
    t: float
    p: float
    df: float
    paired: bool

    def significant(self, alpha: float = 0.05) -> bool:
        return is_significant(self.p, alpha)

    def to_dict(self, alpha: float = 0.05) -> dict:
        return {"t": self.t, "p": self.p, "df": self.df, "paired": self.paired,
                "alpha": alpha, "significant": self.significant(alpha)}


def is_significant(p: float, alpha: float = 0.05) -> bool:
    return p < alpha


def t_test(a: list[float], b: list[float], paired: bool = True) -> TTestResult:
    """Two-tailed t-test on two score lists.

    Paired mode uses per-position differences (df = n-1); unpaired mode is
    Welch's test. Equal-length inputs of at least two values required.
    """
    if len(a) != len(b) and paired:
        raise StatsError("paired t-test needs equal-length inputs")
    if len(a) < 2 or len(b) < 2:
        raise StatsError("need at least two values per sample")
    if paired:
        d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
        sd = d.std(ddof=1)
        if sd == 0.0:
            raise StatsError("zero-variance paired differences: t statistic undefined")
        n = len(d)
        t = float(d.mean() / (sd / math.sqrt(n)))
        df = float(n - 1)
    else:
        xa = np.asarray(a, dtype=np.float64)
        xb = np.asarray(b, dtype=np.float64)
        va, vb = xa.var(ddof=1), xb.var(ddof=1)
        na, nb = len(xa), len(xb)
        denom = math.sqrt(va / na + vb / nb)
        if denom == 0.0:
            raise StatsError("zero variance in both samples: t statistic undefined")
        t = float((xa.mean() - xb.mean()) / denom)
        df = float((va / na + vb / nb) ** 2
                   / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)))
    p = 2.0 * student_t_sf(abs(t), df)
    return TTestResult(t=t, p=p, df=df, paired=paired)


def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t via the regularized incomplete beta function."""
    if t < 0:
        return 1.0 - student_t_sf(-t, df)
    x = df / (df + t * t)
    return 0.5 * betainc_regularized(df / 2.0, 0.5, x)


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b), continued-fraction evaluation."""
    if not 0.0 <= x <= 1.0:
        raise StatsError(f"betainc domain error: x={x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log(1.0 - x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _beta_cf(a, b, x) / a
    return 1.0 - bt * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float, max_iter: int = 200, eps: float = 3e-14) -> float:
    # modified Lentz continued fraction for the incomplete beta function
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise StatsError("incomplete beta continued fraction failed to converge")
