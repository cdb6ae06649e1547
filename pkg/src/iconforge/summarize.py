"""Text tags and visual hashtags for an infographic.

Tag prediction: mean word embedding of the OCR'd words -> one-hidden-layer
ReLU network -> independent sigmoid per tag.  Visual hashtags: every icon
proposal is classified over the same tag vocabulary and, for each predicted
tag, the proposal with the highest probability for that tag is returned.
"""
from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import imaging
from .boxes import BBox
from .jsonl import read_jsonl
from .proposals import Detection, check_probs

log = logging.getLogger(__name__)

EMBED_DIM = 300
N_TAGS = 391
_PUNCT = str.maketrans("", "", string.punctuation)


class NoKnownWords(ValueError):
    def __init__(self, n_oov: int):
        super().__init__(f"none of the {n_oov} words has an embedding")
        self.n_oov = n_oov


class TagVocabulary:
    def __init__(self, tags: Sequence[str], size: int | None = None):
        tags = list(tags)
        if len(set(tags)) != len(tags):
            raise ValueError("duplicate tags in vocabulary")
        if size is not None and len(tags) != size:
            raise ValueError(f"vocabulary has {len(tags)} tags, expected {size}")
        self.tags = tags
        self.index = {t: i for i, t in enumerate(tags)}

    def __len__(self):
        return len(self.tags)

    def __iter__(self):
        return iter(self.tags)

    @classmethod
    def load(cls, path: str | Path, size: int | None = None) -> "TagVocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([ln.strip() for ln in lines if ln.strip()], size)


def normalize_word(word: str) -> str:
    return word.casefold().translate(_PUNCT).strip()


def tokens(words: Iterable[str]) -> list[str]:
    """Case-folded, punctuation-free tokens; multi-word entries are split. Duplicates are kept."""
    out = []
    for w in words:
        out.extend(t for t in (normalize_word(p) for p in w.split()) if t)
    return out


class EmbeddingTable:
    """Word vectors keyed by normalized word."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int = EMBED_DIM):
        self.dim = dim
        self.vectors = {}
        for w, v in vectors.items():
            v = np.asarray(v, dtype=np.float64)
            if v.shape != (dim,):
                raise ValueError(f"vector for {w!r} has shape {v.shape}, expected ({dim},)")
            self.vectors[normalize_word(w)] = v

    def get(self, word: str):
        return self.vectors.get(normalize_word(word))

    @classmethod
    def load(cls, path: str | Path, dim: int | None = None) -> "EmbeddingTable":
        """Text format: one ``word v1 ... vD`` line per word."""
        vectors = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                parts = line.rstrip().split(" ")
                if len(parts) < 2:
                    continue
                if dim is None:
                    dim = len(parts) - 1
                if len(parts) - 1 != dim:
                    raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
                vectors[parts[0]] = np.array(parts[1:], dtype=np.float64)
        return cls(vectors, dim or EMBED_DIM)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for w in sorted(self.vectors):
                f.write(w + " " + " ".join(repr(float(x)) for x in self.vectors[w]) + "\n")


def mean_embed(words: Iterable[str], table: EmbeddingTable) -> tuple[np.ndarray, int]:
    """Mean vector of the in-vocabulary words and the number of words skipped."""
    found, n_oov = [], 0
    for t in tokens(words):
        v = table.get(t)
        if v is None:
            n_oov += 1
        else:
            found.append(v)
    if not found:
        raise NoKnownWords(n_oov)
    return np.mean(found, axis=0), n_oov


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class TagPredictor:
    W1: np.ndarray  # (d, H)
    b1: np.ndarray  # (H,)
    W2: np.ndarray  # (H, T)
    b2: np.ndarray  # (T,)
    tags: list[str]

    def __post_init__(self):
        if self.W2.shape[1] != len(self.tags) or self.b2.shape != (len(self.tags),):
            raise ValueError("output layer width must equal the vocabulary size")
        if self.W1.shape[1] != self.W2.shape[0] or self.b1.shape != (self.W1.shape[1],):
            raise ValueError("hidden layer shapes disagree")

    @classmethod
    def init(cls, dim: int, hidden: int, tags: Sequence[str], rng: np.random.Generator) -> "TagPredictor":
        return cls(
            rng.normal(0, np.sqrt(2.0 / dim), (dim, hidden)),
            np.zeros(hidden),
            rng.normal(0, np.sqrt(1.0 / hidden), (hidden, len(tags))),
            np.zeros(len(tags)),
            list(tags),
        )

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def logits(self, X: np.ndarray) -> np.ndarray:
        h = np.maximum(X @ self.W1 + self.b1, 0.0)
        return h @ self.W2 + self.b2

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.logits(X))

    def loss_and_grads(self, X: np.ndarray, Y: np.ndarray):
        """Mean per-tag binary cross-entropy over the batch, and its gradients."""
        pre = X @ self.W1 + self.b1
        h = np.maximum(pre, 0.0)
        z = h @ self.W2 + self.b2
        # log(1 + e^z) - y z, written stably
        loss = float(np.mean(np.logaddexp(0.0, z) - Y * z))
        dz = (_sigmoid(z) - Y) / Y.size
        dh = dz @ self.W2.T
        dpre = dh * (pre > 0)
        grads = {
            "W1": X.T @ dpre,
            "b1": dpre.sum(axis=0),
            "W2": h.T @ dz,
            "b2": dz.sum(axis=0),
        }
        return loss, grads

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as f:
            np.savez(f, tags=np.array(self.tags), **self.params)

    @classmethod
    def load(cls, path: str | Path) -> "TagPredictor":
        with np.load(path) as z:
            return cls(z["W1"], z["b1"], z["W2"], z["b2"], [str(t) for t in z["tags"]])


def predict_tags(feature: np.ndarray, model: TagPredictor, k: int = 2) -> list[tuple[str, float]]:
    """Top-``k`` tags by sigmoid score; equal scores keep vocabulary order."""
    feature = np.asarray(feature, dtype=np.float64)
    if not np.all(np.isfinite(feature)):
        raise ValueError("feature vector is not finite")
    scores = model.predict_proba(feature[None, :])[0]
    order = np.argsort(-scores, kind="stable")[:k]
    return [(model.tags[i], float(scores[i])) for i in order]


@dataclass
class TrainResult:
    model: TagPredictor
    loss: float
    history: list[float] = field(default_factory=list)
    steps: int = 0


def train_tag_predictor(
    features: np.ndarray,
    targets: np.ndarray,
    tags: Sequence[str],
    hidden: int = 256,
    lr: float = 0.1,
    epochs: int = 50,
    batch_size: int = 32,
    seed: int = 0,
    model: TagPredictor | None = None,
) -> TrainResult:
    """Mini-batch SGD on mean per-tag BCE. Deterministic given ``seed``.

    ``history`` holds the full-dataset loss after each epoch; ``loss`` is the last entry.
    """
    X = np.asarray(features, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if len(X) == 0:
        raise ValueError("training set is empty")
    if X.shape[0] != Y.shape[0] or Y.shape[1] != len(tags):
        raise ValueError(f"features {X.shape} and targets {Y.shape} disagree with {len(tags)} tags")
    if not np.isin(Y, (0.0, 1.0)).all():
        raise ValueError("targets must be multi-hot {0, 1}")
    rng = np.random.default_rng(seed)
    if model is None:
        model = TagPredictor.init(X.shape[1], hidden, tags, rng)
    else:
        model = TagPredictor(*(p.copy() for p in model.params.values()), list(model.tags))

    history, steps = [], 0
    for epoch in range(epochs):
        order = rng.permutation(len(X))
        for start in range(0, len(X), batch_size):
            idx = order[start:start + batch_size]
            loss, grads = model.loss_and_grads(X[idx], Y[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, step {steps} (lr={lr}); "
                    f"max |W| = {max(float(np.abs(p).max()) for p in model.params.values()):.3g}"
                )
            for name, g in grads.items():
                model.params[name] -= lr * g
            steps += 1
        history.append(model.loss_and_grads(X, Y)[0])
    final = history[-1] if history else model.loss_and_grads(X, Y)[0]
    return TrainResult(model, final, history, steps)


# icon classification


def color_histogram(img: np.ndarray) -> np.ndarray:
    """Normalized 4x4x4 RGB histogram over opaque pixels."""
    mask = imaging.opaque_mask(img) if img.ndim == 3 else None
    rgb = img[..., :3].reshape(-1, 3) // 64
    if mask is not None:
        rgb = rgb[mask.reshape(-1)]
    idx = rgb[:, 0].astype(np.intp) * 16 + rgb[:, 1] * 4 + rgb[:, 2]
    hist = np.bincount(idx, minlength=64).astype(np.float64)
    return hist / hist.sum() if hist.sum() else hist


class FileClassifier:
    """Probabilities precomputed by an external classifier, JSONL ``{proposal_id, probs}``."""

    def __init__(self, probs: dict[str, np.ndarray]):
        self.probs = {k: check_probs(v) for k, v in probs.items()}

    @classmethod
    def load(cls, path: str | Path) -> "FileClassifier":
        return cls({str(rec["proposal_id"]): rec["probs"] for _, rec in read_jsonl(path)})

    def classify(self, crop, proposal_id: str | None = None) -> np.ndarray:
        if proposal_id not in self.probs:
            raise KeyError(f"no classifier output for proposal {proposal_id!r}")
        return self.probs[proposal_id]


class BaselineClassifier:
    """Nearest exemplar per tag by L1 distance between colour histograms.

    Probabilities are a softmax over tags of the negated per-tag nearest
    distance (divided by ``temperature``); tags without exemplars get 0.
    """

    def __init__(self, exemplars: Sequence[tuple[np.ndarray, str]], vocab: TagVocabulary,
                 temperature: float = 1.0):
        if not exemplars:
            raise ValueError("baseline classifier needs a non-empty icon pool")
        self.vocab = vocab
        self.temperature = temperature
        self.hists = np.stack([color_histogram(img) for img, _ in exemplars])
        self.labels = np.array([vocab.index[t] for _, t in exemplars])

    def classify(self, crop: np.ndarray, proposal_id: str | None = None) -> np.ndarray:
        d = np.abs(self.hists - color_histogram(crop)).sum(axis=1)
        nearest = np.full(len(self.vocab), np.inf)
        np.minimum.at(nearest, self.labels, d)
        logits = -nearest / self.temperature
        logits -= logits[np.isfinite(logits)].max()
        p = np.exp(logits)
        return p / p.sum()


def classify_icon(crop: np.ndarray, backend, proposal_id: str | None = None) -> np.ndarray:
    if crop.size == 0:
        raise ValueError("empty crop")
    return backend.classify(crop, proposal_id)


def select_hashtags(tags: Sequence[str], proposals: Sequence[Detection], vocab: TagVocabulary) -> dict:
    """For each tag, the proposal with the highest probability for it.

    Returns ``tag -> (detection, probability)``; ties prefer the higher
    detection score, then the earlier proposal.
    """
    if not proposals:
        log.warning("no proposals: hashtag set is empty")
        return {}
    out = {}
    for tag in tags:
        t = vocab.index[tag]
        best = min(
            range(len(proposals)),
            key=lambda i: (-proposals[i].class_probs[t], -proposals[i].score, i),
        )
        out[tag] = (proposals[best], float(proposals[best].class_probs[t]))
    return out


@dataclass
class Summary:
    image_id: str
    tags: list[tuple[str, float]]
    hashtags: dict[str, tuple[BBox, float, str | None]]
    n_oov: int = 0

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "tags": [{"tag": t, "score": s} for t, s in self.tags],
            "hashtags": [
                {"tag": t, **box.as_dict(), "prob": p, "proposal_id": pid}
                for t, (box, p, pid) in self.hashtags.items()
            ],
            "n_oov": self.n_oov,
        }


def crop_box(image: np.ndarray, box: BBox) -> np.ndarray:
    h, w = image.shape[:2]
    x0, y0 = max(0, int(np.floor(box.x))), max(0, int(np.floor(box.y)))
    x1, y1 = min(w, int(np.ceil(box.x2))), min(h, int(np.ceil(box.y2)))
    return image[y0:y1, x0:x1]


def summarize(
    image: np.ndarray,
    image_id: str,
    words: Sequence[str],
    proposals: Sequence[Detection],
    predictor: TagPredictor,
    table: EmbeddingTable,
    backend=None,
    k: int = 2,
) -> Summary:
    """Predict ``k`` text tags and pick a visual hashtag for each.

    Proposals are classified with ``backend`` when given; otherwise they must
    already carry ``class_probs``.
    """
    vocab = TagVocabulary(predictor.tags)
    try:
        feature, n_oov = mean_embed(words, table)
    except NoKnownWords as e:
        log.warning("%s: %s; summary is empty", image_id, e)
        return Summary(image_id, [], {}, e.n_oov)
    tags = predict_tags(feature, predictor, k)
    classified = []
    for d in proposals:
        probs = d.class_probs
        if backend is not None:
            probs = classify_icon(crop_box(image, d.box), backend, d.id)
        if probs is None:
            raise ValueError(f"proposal {d.id!r} has no class probabilities and no backend was given")
        if len(probs) != len(vocab):
            raise ValueError(f"proposal {d.id!r}: {len(probs)} class probabilities for {len(vocab)} tags")
        classified.append(Detection(d.box, d.score, probs, d.image_id, d.id))
    picks = select_hashtags([t for t, _ in tags], classified, vocab)
    hashtags = {t: (d.box, p, d.id) for t, (d, p) in picks.items()}
    return Summary(image_id, tags, hashtags, n_oov)


def load_words(path: str | Path) -> tuple[str, list[str]]:
    rec = json.loads(Path(path).read_text(encoding="utf-8"))
    return str(rec["image_id"]), list(rec["words"])
