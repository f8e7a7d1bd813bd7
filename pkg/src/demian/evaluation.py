"""Evaluation protocols for shared representations.

- SRL accuracy: train a linear classifier on one modality's embeddings,
  test it on the other modality's.
- Top-k correlation: total canonical correlation between two embedding
  sets (a per-dimension Pearson variant is available for inspection).
- Label-efficiency curves: SRL accuracy as the labeled pool shrinks.
- Cosine-retrieval classification: assign each query the class of the
  most similar class embedding.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_labels, as_matrix, as_paired_matrices
from .cca import LinearCCA
from .data import EmbeddingSet
from .logreg import SoftmaxRegression


@dataclass
class SrlResult:
    train_modality: str
    test_modality: str
    accuracy: float
    n_labeled: int


@dataclass
class CorrelationReport:
    per_component: np.ndarray
    top_k_sum: float
    k: int


@dataclass
class RetrievalResult:
    predictions: np.ndarray
    degenerate_queries: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    degenerate_classes: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))


def _resolve_view(emb, modality, name):
    if isinstance(emb, EmbeddingSet):
        emb = emb.view(modality)
    return as_matrix(emb, name)


def srl_evaluate(train_emb, train_labels, test_emb, test_labels,
                 train_modality="x", test_modality="y", **classifier_params):
    """Fit a softmax classifier on train embeddings, score it on test ones.

    ``train_emb``/``test_emb`` may be plain arrays or :class:`EmbeddingSet`
    instances, in which case the modality tags select the view.
    """
    ftr = _resolve_view(train_emb, train_modality, "train embeddings")
    fte = _resolve_view(test_emb, test_modality, "test embeddings")
    if ftr.shape[1] != fte.shape[1]:
        raise ValueError(
            f"train and test embeddings have different widths: {ftr.shape} vs {fte.shape}"
        )
    ytr = as_labels(train_labels, ftr.shape[0], "train_labels")
    yte = as_labels(test_labels, fte.shape[0], "test_labels")
    missing = np.setdiff1d(np.unique(yte), np.unique(ytr))
    if missing.size:
        raise ValueError(
            f"test labels contain classes absent from the training set: {missing.tolist()}"
        )
    clf = SoftmaxRegression(**classifier_params).fit(ftr, ytr)
    accuracy = float((clf.predict(fte) == yte).mean())
    return SrlResult(train_modality=train_modality, test_modality=test_modality,
                     accuracy=accuracy, n_labeled=int(ftr.shape[0]))


def topk_correlation(fx, fy, k, reg=0.0, method="pearson"):
    """Sum of the k strongest correlations between two paired embedding sets.

    The default ``method="pearson"`` ranks the per-dimension Pearson
    correlations between the two sets; for embeddings whose dimensions are
    paired by construction (a matching loss, or canonical projections) this
    is the total-correlation number reported for such models.
    ``method="cca"`` instead refits a CCA between the sets and sums the
    top-k canonical correlations; note that whitening makes this a measure
    of aligned *isotropic* structure and it collapses on low-effective-rank
    embeddings. The default ``reg=0.0`` keeps self-correlation exact; pass a
    positive ridge for degenerate embeddings under ``method="cca"``.
    """
    fx, fy = as_paired_matrices(fx, fy, "fx", "fy")
    if method == "cca":
        if not 1 <= k <= min(fx.shape[1], fy.shape[1]):
            raise ValueError(
                f"k must lie in [1, {min(fx.shape[1], fy.shape[1])}], got {k}"
            )
        model = LinearCCA(n_components=k, reg=reg).fit(fx, fy)
        per_component = model.correlations_
    elif method == "pearson":
        if fx.shape[1] != fy.shape[1]:
            raise ValueError(
                f"per-dimension correlation needs equal widths, got {fx.shape} vs {fy.shape}"
            )
        if not 1 <= k <= fx.shape[1]:
            raise ValueError(f"k must lie in [1, {fx.shape[1]}], got {k}")
        xc = fx - fx.mean(axis=0)
        yc = fy - fy.mean(axis=0)
        denom = np.sqrt((xc**2).sum(axis=0) * (yc**2).sum(axis=0))
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(denom > 0, (xc * yc).sum(axis=0) / denom, 0.0)
        per_component = np.sort(r)[::-1]
    else:
        raise ValueError(f"unknown method {method!r}, expected 'cca' or 'pearson'")
    return CorrelationReport(per_component=per_component,
                             top_k_sum=float(per_component[:k].sum()), k=int(k))


def _stratified_subsample(labels, size, rng):
    classes = np.unique(labels)
    if size < classes.size:
        raise ValueError(
            f"subsample size {size} cannot cover all {classes.size} classes"
        )
    counts = np.array([(labels == c).sum() for c in classes])
    exact = size * counts / counts.sum()
    take = np.maximum(np.floor(exact).astype(np.int64), 1)
    take = np.minimum(take, counts)
    # distribute any remainder by largest fractional part
    order = np.argsort(-(exact - np.floor(exact)), kind="stable")
    i = 0
    while take.sum() < size:
        c = order[i % classes.size]
        if take[c] < counts[c]:
            take[c] += 1
        i += 1
    while take.sum() > size:
        c = order[-1 - (i % classes.size)]
        if take[c] > 1:
            take[c] -= 1
        i += 1
    picks = []
    for c, kc in zip(classes, take):
        members = np.flatnonzero(labels == c)
        picks.append(rng.permutation(members)[:kc])
    return np.sort(np.concatenate(picks))


def label_efficiency_curve(train_emb, train_labels, test_emb, test_labels, sizes,
                           seed=0, train_modality="x", test_modality="y",
                           **classifier_params):
    """One SRL evaluation per labeled-pool size, class-stratified and seeded."""
    ftr = _resolve_view(train_emb, train_modality, "train embeddings")
    ytr = as_labels(train_labels, ftr.shape[0], "train_labels")
    rng = np.random.default_rng(seed)
    results = []
    for size in sizes:
        if size > ftr.shape[0]:
            raise ValueError(f"size {size} exceeds the labeled pool of {ftr.shape[0]}")
        idx = _stratified_subsample(ytr, int(size), rng)
        res = srl_evaluate(ftr[idx], ytr[idx], test_emb, test_labels,
                           train_modality=train_modality, test_modality=test_modality,
                           **classifier_params)
        res.n_labeled = int(size)
        results.append(res)
    return results


def cosine_retrieval_classify(query_emb, class_emb, class_ids=None):
    """Assign each query the id of the highest-cosine class embedding.

    Exact score ties break toward the lowest class id. Zero-norm queries or
    class vectors cannot produce a meaningful similarity; they are flagged in
    the result and reported in a warning.
    """
    queries = _resolve_view(query_emb, "x", "query embeddings")
    classes = _resolve_view(class_emb, "y", "class embeddings")
    if queries.shape[1] != classes.shape[1]:
        raise ValueError(
            f"queries and class embeddings have different widths: "
            f"{queries.shape} vs {classes.shape}"
        )
    if class_ids is None:
        class_ids = np.arange(classes.shape[0])
    class_ids = as_labels(class_ids, classes.shape[0], "class_ids")

    # sorting by id makes argmax's first-hit rule the lowest-id tie-break
    order = np.argsort(class_ids, kind="stable")
    classes = classes[order]
    ids = class_ids[order]

    qn = np.linalg.norm(queries, axis=1)
    cn = np.linalg.norm(classes, axis=1)
    bad_q = np.flatnonzero(qn == 0.0)
    bad_c = np.flatnonzero(cn == 0.0)
    qs = queries / np.where(qn > 0, qn, 1.0)[:, None]
    cs = classes / np.where(cn > 0, cn, 1.0)[:, None]
    scores = qs @ cs.T
    predictions = ids[scores.argmax(axis=1)]
    if bad_q.size or bad_c.size:
        warnings.warn(
            f"cosine retrieval saw zero-norm vectors (queries {bad_q.tolist()}, "
            f"class ids {ids[bad_c].tolist()}); their similarities are not meaningful",
            RuntimeWarning,
            stacklevel=2,
        )
    return RetrievalResult(predictions=predictions,
                           degenerate_queries=bad_q,
                           degenerate_classes=np.sort(ids[bad_c]))
