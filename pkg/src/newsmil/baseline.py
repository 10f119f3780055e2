"""TF-IDF + logistic-regression detection baseline.

Sparse in spirit, dense in implementation: fixture-scale corpora keep
|V| x n small enough that plain float64 matrices are simpler and easier
to verify. Idf uses the smoothed form ln((1+N)/(1+df)) + 1 so no value
is zero; the classifier is L2-regularized logistic regression trained
by full-batch gradient descent with a step size under the smoothness
bound, which makes the loss provably non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Article
from .detector import Metrics, evaluate as detector_evaluate, DetectionResult
from .ndlearn import Tensor
from .ndlearn import checkpoint as ckpt


class BaselineError(ValueError):
    pass


def article_tokens(article: Article) -> list[str]:
    if not article.tokenized:
        raise BaselineError(f"article {article.id!r} is not tokenized")
    return [tok for sent in article.sentences for tok in sent]


@dataclass
class TfidfVectorizer:
    vocabulary: dict[str, int]
    idf: np.ndarray
    max_features: int

    def transform(self, docs: Sequence[Sequence[str]]) -> np.ndarray:
        """Raw-count tf times idf, rows L2-normalized; tokens outside
        the fitted vocabulary contribute nothing."""
        matrix = np.zeros((len(docs), len(self.vocabulary)))
        for row, tokens in enumerate(docs):
            for tok in tokens:
                col = self.vocabulary.get(tok)
                if col is not None:
                    matrix[row, col] += 1.0
        matrix *= self.idf
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        np.divide(matrix, norms, out=matrix, where=norms > 0)
        return matrix


def fit_vectorizer(docs: Sequence[Sequence[str]], max_features: int = 20_000) -> TfidfVectorizer:
    if not docs:
        raise BaselineError("cannot fit a vectorizer on an empty corpus")
    df: dict[str, int] = {}
    for tokens in docs:
        for tok in set(tokens):
            df[tok] = df.get(tok, 0) + 1
    # top max_features by document frequency, ties by token order
    ranked = sorted(df, key=lambda t: (-df[t], t))[:max_features]
    vocabulary = {tok: i for i, tok in enumerate(ranked)}
    n = len(docs)
    idf = np.array([math.log((1.0 + n) / (1.0 + df[tok])) + 1.0 for tok in ranked])
    return TfidfVectorizer(vocabulary, idf, max_features)


def fit_transform(docs: Sequence[Sequence[str]],
                  max_features: int = 20_000) -> tuple[TfidfVectorizer, np.ndarray]:
    vectorizer = fit_vectorizer(docs, max_features)
    return vectorizer, vectorizer.transform(docs)


@dataclass
class LinearConfig:
    l2: float = 1e-4
    max_iterations: int = 5000
    grad_tolerance: float = 1e-6
    seed: int = 0


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    l2: float
    seed: int

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        z = matrix @ self.weights + self.bias
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out


def loss_and_grad(weights: np.ndarray, bias: float, matrix: np.ndarray,
                  labels: np.ndarray, l2: float) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss plus (l2/2)||w||^2 (bias unpenalized), with
    its exact gradient."""
    n = len(labels)
    z = matrix @ weights + bias
    # log(1 + exp(-m)) with the stable split, m = z for y=1, -z for y=0
    margins = np.where(labels == 1, z, -z)
    loss = float(np.mean(np.logaddexp(0.0, -margins))) + 0.5 * l2 * float(weights @ weights)
    probs = LinearModel(weights, bias, l2, 0).predict_proba(matrix)
    residual = probs - labels
    grad_w = matrix.T @ residual / n + l2 * weights
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


def train_linear(matrix: np.ndarray, labels: Sequence[int],
                 config: LinearConfig = LinearConfig(),
                 ) -> tuple[LinearModel, list[float]]:
    """Full-batch descent from zero until the gradient norm drops below
    tolerance or the iteration cap; returns the model and the per-step
    loss history.

    The quadratic penalty is applied proximally (exact shrink after the
    logistic gradient step), so the step size only needs the logistic
    part's smoothness bound and descent stays monotone for any l2.
    """
    y = np.asarray(labels, dtype=np.float64)
    if set(np.unique(y)) != {0.0, 1.0}:
        raise BaselineError("training labels must contain both classes")
    n, dim = matrix.shape
    # smoothness bound for mean logistic loss with an intercept column
    lipschitz = (float(np.sum(matrix * matrix)) + n) / (4.0 * n)
    step = 1.0 / lipschitz
    shrink = 1.0 / (1.0 + step * config.l2)
    w = np.zeros(dim)
    b = 0.0
    history = []
    for _ in range(config.max_iterations):
        loss, grad_w, grad_b = loss_and_grad(w, b, matrix, y, config.l2)
        history.append(loss)
        if math.sqrt(float(grad_w @ grad_w) + grad_b * grad_b) < config.grad_tolerance:
            break
        w = (w - step * (grad_w - config.l2 * w)) * shrink
        b -= step * grad_b
    return LinearModel(w, b, config.l2, config.seed), history


def evaluate_baseline(model: LinearModel, vectorizer: TfidfVectorizer,
                      articles: Sequence[Article], gold: dict[str, bool],
                      threshold: float = 0.5) -> Metrics:
    """Transform with the frozen vocabulary/idf and score against gold
    labels with the same metric definitions as the detector."""
    matrix = vectorizer.transform([article_tokens(a) for a in articles])
    probs = model.predict_proba(matrix)
    results = [
        DetectionResult(a.id, float(p), [], [], bool(p >= threshold))
        for a, p in zip(articles, probs)
    ]
    return detector_evaluate(results, gold)


def save_baseline(path: str | Path, model: LinearModel, vectorizer: TfidfVectorizer) -> None:
    config = {
        "model_type": "tfidf_baseline",
        "vocabulary": sorted(vectorizer.vocabulary, key=vectorizer.vocabulary.get),
        "max_features": vectorizer.max_features,
        "l2": model.l2,
        "seed": model.seed,
    }
    tensors = {
        "idf": Tensor(vectorizer.idf),
        "weights": Tensor(model.weights),
        "bias": Tensor(np.asarray([model.bias])),
    }
    ckpt.save(path, config, tensors)


def load_baseline(path: str | Path) -> tuple[LinearModel, TfidfVectorizer]:
    config, arrays = ckpt.load(path)
    if config.get("model_type") != "tfidf_baseline":
        raise ckpt.CheckpointError("checkpoint is not a TF-IDF baseline")
    vocabulary = {tok: i for i, tok in enumerate(config["vocabulary"])}
    vectorizer = TfidfVectorizer(vocabulary, arrays["idf"], int(config["max_features"]))
    model = LinearModel(arrays["weights"], float(arrays["bias"][0]),
                        float(config["l2"]), int(config["seed"]))
    return model, vectorizer
