"""Base learners: built-in weighted softmax regression and the file protocol
for external models.

The built-in learner trains multinomial logistic regression over hashed
n-gram features by mini-batch gradient descent on weighted cross-entropy.
Sample weights enter as per-sample loss multipliers by default; boosting may
alternatively resample (see ensembles).  External models integrate through
prediction files:

  preds/<model_id>/<split>.jsonl          {"id": str, "probs": [float; K]}
  boost/round_<t>/weights.jsonl           {"id": str, "weight": float}
  boost/round_<t>/preds_<split>.jsonl     same row schema as preds
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .codefeat import FeaturizerConfig, FeatureVector, featurize_code, stack_features
from .core import PredictionSet, make_prediction_set
from .errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyTrainingSet,
    MalformedProbVector,
    MissingSample,
    ProtocolOrderError,
    UnknownSample,
    WeightCoverageMismatch,
)
from .ingest import Dataset


@dataclass(frozen=True)
class SampleWeights:
    """Normalized per-sample weight distribution (AdaBoost's w^(t))."""

    ids: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        if len(self.ids) != len(self.weights):
            raise WeightCoverageMismatch("ids and weights differ in length")
        if np.any(self.weights < 0):
            raise WeightCoverageMismatch("negative sample weight")
        total = float(self.weights.sum())
        if abs(total - 1.0) > 1e-9:
            raise WeightCoverageMismatch(f"weights sum to {total}, expected 1")
        self.weights.setflags(write=False)

    @classmethod
    def uniform(cls, ids) -> "SampleWeights":
        ids = tuple(ids)
        n = len(ids)
        return cls(ids, np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, ids, raw) -> "SampleWeights":
        raw = np.asarray(raw, dtype=np.float64)
        return cls(tuple(ids), raw / raw.sum())

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.ids, self.weights.tolist()))


@dataclass(frozen=True)
class LearnerConfig:
    learning_rate: float = 0.5
    epochs: int = 20
    l2: float = 1e-6
    batch_size: int = 32
    seed: int = 0

    def echo(self) -> dict:
        return {"learning_rate": self.learning_rate, "epochs": self.epochs,
                "l2": self.l2, "batch_size": self.batch_size, "seed": self.seed}


@dataclass(frozen=True)
class LinearModel:
    """Trained softmax regression: K x D weights plus K biases."""

    W: np.ndarray
    b: np.ndarray
    dims: int
    class_count: int
    config: LearnerConfig

    def __post_init__(self):
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise ValueError("non-finite model parameters")
        self.W.setflags(write=False)
        self.b.setflags(write=False)


@dataclass(frozen=True)
class BaseLearnerSpec:
    kind: str  # builtin_linear | external
    model_id: str
    config: LearnerConfig = LearnerConfig()


@dataclass(frozen=True)
class FeatureMatrix:
    """Hashed features of a whole dataset in CSR form, indexed by sample id."""

    ids: tuple[str, ...]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    dims: int
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.ids)})

    def rows_for(self, ids):
        """Sub-CSR in the order of ``ids``."""
        rows = [self._index[s] for s in ids]
        lens = self.indptr[1:] - self.indptr[:-1]
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(lens[rows])
        if len(rows):
            chunks_i = [self.indices[self.indptr[r]:self.indptr[r + 1]] for r in rows]
            chunks_d = [self.data[self.indptr[r]:self.indptr[r + 1]] for r in rows]
            indices = np.concatenate(chunks_i) if chunks_i else np.empty(0, np.int64)
            data = np.concatenate(chunks_d) if chunks_d else np.empty(0)
        else:
            indices = np.empty(0, np.int64)
            data = np.empty(0)
        return indptr, indices, data

    def vector_for(self, sample_id: str) -> FeatureVector:
        r = self._index[sample_id]
        idx = self.indices[self.indptr[r]:self.indptr[r + 1]]
        cnt = self.data[self.indptr[r]:self.indptr[r + 1]]
        return FeatureVector(self.dims, idx.copy(), cnt.copy(),
                             float(np.sqrt(np.dot(cnt, cnt))))


def featurize_dataset(d: Dataset, config: FeaturizerConfig = FeaturizerConfig()) -> FeatureMatrix:
    vectors = [featurize_code(s.code, config) for s in d.samples]
    indptr, indices, data = stack_features(vectors)
    return FeatureMatrix(tuple(d.ids), indptr, indices, data, config.dims)


def unit_rows(indptr: np.ndarray, data: np.ndarray) -> np.ndarray:
    """L2-normalize each CSR row (zero rows pass through unchanged).

    The built-in learner trains and predicts on unit-norm rows so token-count
    magnitudes cannot destabilize gradient steps; per-sample positive scaling
    leaves every argmax decision unchanged.
    """
    if len(data) == 0:
        return data.copy()
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    sq = np.zeros(n)
    np.add.at(sq, rows, data * data)
    norms = np.sqrt(sq)
    norms[norms == 0.0] = 1.0
    return data / norms[rows]


def _epoch_orders(n: int, epochs: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF17]))
    return np.vstack([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)


def fit_builtin(d: Dataset, ids, w: SampleWeights, cfg: LearnerConfig,
                features: FeatureMatrix, soft_targets: np.ndarray | None = None) -> LinearModel:
    """Train the built-in learner on ``ids`` under weight distribution ``w``.

    ``soft_targets`` (N x K, rows summing to 1) overrides the one-hot labels;
    the gate trainer uses this for soft-target cross-entropy.
    """
    ids = tuple(ids)
    if not ids:
        raise EmptyTrainingSet("no training ids")
    if cfg.epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {cfg.epochs}")
    if set(ids) != set(w.ids):
        raise WeightCoverageMismatch("weights do not cover exactly the training ids")
    wmap = w.as_dict()
    weights = np.array([wmap[s] for s in ids])
    n = len(ids)
    k = d.class_count
    indptr, indices, data = features.rows_for(ids)
    data = unit_rows(indptr, data)
    if soft_targets is None:
        targets = np.zeros((n, k))
        targets[np.arange(n), d.labels_for(ids)] = 1.0
    else:
        targets = np.asarray(soft_targets, dtype=np.float64)
        k = targets.shape[1]
    W = np.zeros((k, features.dims))
    b = np.zeros(k)
    coefs = weights * n  # uniform weights give the usual per-sample mean scale
    order = _epoch_orders(n, cfg.epochs, cfg.seed)
    decay = 1.0 - cfg.learning_rate * cfg.l2
    batch = min(cfg.batch_size, n)
    _kernels.csr_softmax_fit(indptr, indices, data, targets, coefs, W, b,
                             order, batch, cfg.learning_rate, decay)
    return LinearModel(W, b, features.dims, k, cfg)


def predict_builtin(m: LinearModel, f: FeatureVector) -> np.ndarray:
    """Softmax of W.f + b over the unit-normalized feature row."""
    if f.dims != m.dims:
        raise DimensionMismatch(f"feature dims {f.dims} != model dims {m.dims}")
    scale = 1.0 / f.norm if f.norm > 0 else 1.0
    z = m.W[:, f.indices] @ (f.counts * scale) + m.b
    return _kernels.softmax(z)[0]


def predict_builtin_many(m: LinearModel, indptr, indices, data) -> np.ndarray:
    z = _kernels.csr_logits(indptr, indices, unit_rows(indptr, data), m.W, m.b)
    return _kernels.softmax(z)


def training_loss(m: LinearModel, d: Dataset, ids, w: SampleWeights,
                  features: FeatureMatrix) -> float:
    ids = tuple(ids)
    wmap = w.as_dict()
    weights = np.array([wmap[s] for s in ids])
    indptr, indices, data = features.rows_for(ids)
    data = unit_rows(indptr, data)
    n = len(ids)
    targets = np.zeros((n, m.class_count))
    targets[np.arange(n), d.labels_for(ids)] = 1.0
    return _kernels.csr_softmax_loss(indptr, indices, data, targets,
                                     weights * n, m.W, m.b, m.config.l2)


# ---------------------------------------------------------------------------
# external-model file protocol
# ---------------------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def emit_round_weights(root, t: int, w: SampleWeights) -> Path:
    """Write boost/round_<t>/weights.jsonl; rounds must be emitted in order."""
    root = Path(root)
    if t < 1:
        raise ProtocolOrderError(f"round index must be >= 1, got {t}")
    if t > 1 and not (root / "boost" / f"round_{t - 1}" / "weights.jsonl").exists():
        raise ProtocolOrderError(f"round {t} emitted before round {t - 1}")
    out_dir = root / "boost" / f"round_{t}"
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"id": s, "weight": float(x)})
             for s, x in zip(w.ids, w.weights)]
    path = out_dir / "weights.jsonl"
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def write_predictions(root, p: PredictionSet, subdir: str = "preds") -> Path:
    out_dir = Path(root) / subdir / p.model_id
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"id": s, "probs": p.row(s).tolist()}) for s in p.ids]
    path = out_dir / f"{p.split}.jsonl"
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def _read_pred_rows(path: Path, expected_ids) -> dict[str, np.ndarray]:
    from .core import validate_prob_vector
    from .errors import InvalidProbVector

    expected = set(expected_ids)
    rows: dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            sid = rec["id"]
            if sid not in expected:
                raise UnknownSample(f"sample {sid!r} not in split")
            if sid in rows:
                raise DuplicateId(f"sample {sid!r} appears twice")
            try:
                rows[sid] = validate_prob_vector(rec["probs"])
            except InvalidProbVector as exc:
                raise MalformedProbVector(f"sample {sid!r}: {exc}") from exc
    missing = expected - set(rows)
    if missing:
        raise MissingSample(f"split samples missing from {path.name}: "
                            f"{sorted(missing)[:5]}{'...' if len(missing) > 5 else ''}")
    return rows


def ingest_predictions(root, model_id: str, split: str, expected_ids) -> PredictionSet:
    """Read and validate preds/<model_id>/<split>.jsonl against a split."""
    path = Path(root) / "preds" / model_id / f"{split}.jsonl"
    if not path.exists():
        raise MissingSample(f"prediction file {path} does not exist")
    rows = _read_pred_rows(path, expected_ids)
    ordered = {s: rows[s] for s in expected_ids}
    return make_prediction_set(model_id, split, ordered)


def ingest_round_predictions(root, t: int, split: str, expected_ids,
                             model_id: str | None = None) -> PredictionSet:
    """Read boost/round_<t>/preds_<split>.jsonl for external boosting."""
    path = Path(root) / "boost" / f"round_{t}" / f"preds_{split}.jsonl"
    if not path.exists():
        raise MissingSample(f"prediction file {path} does not exist")
    rows = _read_pred_rows(path, expected_ids)
    ordered = {s: rows[s] for s in expected_ids}
    return make_prediction_set(model_id or f"round_{t}", split, ordered)
