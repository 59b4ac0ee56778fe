"""Coarse/fine contrastive objectives on embedding batches, with analytic gradients.

All losses are softmax cross-entropies over cosine-similarity logits
``cos(u, v) / tau``. Gradients are returned with respect to the raw
(unnormalized) embedding rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, Divergence, ZeroVector
from .prompts import COARSE_ROWS, FINE_ROWS, Prompt, vocabulary

_MIN_NORM = 1e-12


@dataclass(frozen=True)
class C2FConfig:
    phi: float = 0.1
    tau: float = 1.0
    coarse_batch: int = 32
    fine_batch: int = 24
    dim: int = 768

    def __post_init__(self):
        if self.phi < 0:
            raise ValueError("phi must be >= 0")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")


def _rows(x, name: str) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D batch")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms <= _MIN_NORM):
        raise ZeroVector(f"{name} has a zero-norm row")
    return x, norms


def cosine_sim(u, v) -> np.ndarray:
    u, nu = _rows(u, "u")
    v, nv = _rows(v, "v")
    if u.shape[1] != v.shape[1]:
        raise DimensionMismatch(f"feature dims differ: {u.shape[1]} vs {v.shape[1]}")
    return np.clip((u / nu[:, None]) @ (v / nv[:, None]).T, -1.0, 1.0)


def _cosine_backward(u, v, d_sim):
    """Gradients of ``sum(d_sim * cos(u, v))`` with respect to u and v."""
    nu = np.linalg.norm(u, axis=1, keepdims=True)
    nv = np.linalg.norm(v, axis=1, keepdims=True)
    uh, vh = u / nu, v / nv
    gu = d_sim @ vh
    gv = d_sim.T @ uh
    gu = (gu - uh * np.sum(gu * uh, axis=1, keepdims=True)) / nu
    gv = (gv - vh * np.sum(gv * vh, axis=1, keepdims=True)) / nv
    return gu, gv


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class LossValue:
    loss: float
    grad_image: np.ndarray
    grad_text: np.ndarray


def coarse_loss(v_c, l_c, labels, cfg: C2FConfig = C2FConfig()) -> LossValue:
    """Two-class cross-entropy; row 0 of ``l_c`` is the real prompt, row 1 the fake one."""
    v_c, _ = _rows(v_c, "v_c")
    l_c, _ = _rows(l_c, "l_c")
    y = np.asarray(labels).astype(np.int64).ravel()
    if l_c.shape[0] != 2:
        raise DimensionMismatch("l_c must have exactly 2 rows")
    if y.shape[0] != v_c.shape[0]:
        raise DimensionMismatch("one label per coarse image feature is required")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("labels must be 0 (real) or 1 (fake)")
    b = v_c.shape[0]
    logits = cosine_sim(v_c, l_c) / cfg.tau
    logp = _log_softmax(logits)
    loss = -float(logp[np.arange(b), y].mean())
    d_logits = np.exp(logp)
    d_logits[np.arange(b), y] -= 1.0
    d_logits /= b
    gv, gl = _cosine_backward(v_c, l_c, d_logits / cfg.tau)
    return LossValue(loss, gv, gl)


def fine_loss(v_f, l_f, cfg: C2FConfig = C2FConfig()) -> LossValue:
    """Symmetric image-to-text / text-to-image cross-entropy on matched pairs."""
    v_f, _ = _rows(v_f, "v_f")
    l_f, _ = _rows(l_f, "l_f")
    if v_f.shape != l_f.shape:
        raise DimensionMismatch(f"v_f {v_f.shape} and l_f {l_f.shape} must match")
    n = v_f.shape[0]
    if n < 2:
        raise ValueError("fine loss needs at least 2 pairs")
    logits = cosine_sim(v_f, l_f) / cfg.tau
    logp_i2t = _log_softmax(logits)
    logp_t2i = _log_softmax(logits.T)
    loss = -0.5 * float(np.trace(logp_i2t) / n + np.trace(logp_t2i) / n)
    eye = np.eye(n)
    d_logits = 0.5 * ((np.exp(logp_i2t) - eye) + (np.exp(logp_t2i) - eye).T) / n
    gv, gl = _cosine_backward(v_f, l_f, d_logits / cfg.tau)
    return LossValue(loss, gv, gl)


@dataclass(frozen=True)
class LossReport:
    coarse: float
    fine: float
    total: float
    grad_v_c: np.ndarray
    grad_l_c: np.ndarray
    grad_v_f: np.ndarray
    grad_l_f: np.ndarray


def total_loss(v_c, l_c, labels, v_f, l_f, cfg: C2FConfig = C2FConfig()) -> LossReport:
    c = coarse_loss(v_c, l_c, labels, cfg)
    f = fine_loss(v_f, l_f, cfg)
    return LossReport(
        coarse=c.loss,
        fine=f.loss,
        total=c.loss + cfg.phi * f.loss,
        grad_v_c=c.grad_image,
        grad_l_c=c.grad_text,
        grad_v_f=cfg.phi * f.grad_image,
        grad_l_f=cfg.phi * f.grad_text,
    )


# toy co-training on free embeddings


@dataclass(frozen=True)
class ToyProblem:
    v_c: np.ndarray
    l_c: np.ndarray
    labels: np.ndarray
    v_f: np.ndarray
    l_f: np.ndarray

    def coarse_accuracy(self) -> float:
        pred = np.argmax(cosine_sim(self.v_c, self.l_c), axis=1)
        return float(np.mean(pred == self.labels))

    def fine_retrieval(self) -> float:
        """Image-to-text top-1 accuracy on the matched fine pairs."""
        pred = np.argmax(cosine_sim(self.v_f, self.l_f), axis=1)
        return float(np.mean(pred == np.arange(len(pred))))


def make_toy_problem(rng: np.random.Generator, cfg: C2FConfig = C2FConfig(), dim: int = 32) -> ToyProblem:
    def unit(n):
        x = rng.standard_normal((n, dim))
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    labels = np.arange(cfg.coarse_batch) % 2
    rng.shuffle(labels)
    return ToyProblem(
        v_c=unit(cfg.coarse_batch),
        l_c=unit(2),
        labels=labels,
        v_f=unit(cfg.fine_batch),
        l_f=unit(cfg.fine_batch),
    )


@dataclass
class TrainResult:
    problem: ToyProblem
    losses: list[float] = field(default_factory=list)


def toy_cotrain(problem: ToyProblem, cfg: C2FConfig = C2FConfig(), steps: int = 500, lr: float = 0.1) -> TrainResult:
    """Plain gradient descent on the joint objective, updating all four batches.

    ``losses[k]`` is the objective before step k; the final entry is the
    objective after the last step.
    """
    p = problem
    losses = []
    for _ in range(steps + 1):
        rep = total_loss(p.v_c, p.l_c, p.labels, p.v_f, p.l_f, cfg)
        if not math.isfinite(rep.total):
            raise Divergence(f"loss became non-finite after {len(losses)} steps")
        losses.append(rep.total)
        if len(losses) > steps:
            break
        p = replace(
            p,
            v_c=p.v_c - lr * rep.grad_v_c,
            l_c=p.l_c - lr * rep.grad_l_c,
            v_f=p.v_f - lr * rep.grad_v_f,
            l_f=p.l_f - lr * rep.grad_l_f,
        )
    return TrainResult(p, losses)


# testing-period matcher


@dataclass(frozen=True)
class Match:
    index: int
    prompt: Prompt
    similarity: float


def match(image_feature, text_features, mode: str = "coarse") -> Match:
    """Argmax cosine similarity within the coarse (rows 0-1) or fine (rows 2-21) block.

    Ties resolve to the lowest vocabulary index.
    """
    vocab = vocabulary()
    text = np.asarray(text_features, dtype=np.float64)
    if text.shape[0] != len(vocab):
        raise DimensionMismatch(f"expected {len(vocab)} text features, got {text.shape[0]}")
    rows = {"coarse": COARSE_ROWS, "fine": FINE_ROWS}[mode]
    sims = cosine_sim(np.atleast_2d(image_feature), text[rows])[0]
    k = int(np.argmax(sims))
    index = rows.start + k
    return Match(index, vocab[index], float(sims[k]))


def read_vector_jsonl(path: str | Path, key: str) -> tuple[list, np.ndarray]:
    """Read ``{key: ..., "vector": [...]}`` records; returns (keys, matrix)."""
    keys, vecs = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if key not in rec or "vector" not in rec:
                raise ValueError(f"{path}:{lineno}: record needs {key!r} and 'vector'")
            keys.append(rec[key])
            vecs.append(rec["vector"])
    if not vecs:
        raise ValueError(f"{path}: no vectors")
    mat = np.asarray(vecs, dtype=np.float64)
    if mat.ndim != 2:
        raise DimensionMismatch(f"{path}: vectors have inconsistent lengths")
    return keys, mat


def read_text_features(path: str | Path) -> np.ndarray:
    """Text features ordered by ``prompt_index``; every vocabulary index must appear once."""
    idx, mat = read_vector_jsonl(path, "prompt_index")
    order = np.argsort(idx, kind="stable")
    if sorted(idx) != list(range(len(idx))):
        raise ValueError(f"{path}: prompt_index values must be 0..{len(idx) - 1} without gaps")
    return mat[order]


def finite_difference_grad(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function of ``x``."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (fn(xp) - fn(xm)) / (2.0 * h)
    return grad


def gradcheck(rng: np.random.Generator, trials: int = 100, n: int = 6, d: int = 16, h: float = 1e-6) -> float:
    """Worst relative error of the analytic gradients over random instances."""
    worst = 0.0
    for _ in range(trials):
        cfg = C2FConfig(tau=float(rng.uniform(0.5, 2.0)))
        b = int(rng.integers(1, n + 1))
        v_c = rng.standard_normal((b, d))
        l_c = rng.standard_normal((2, d))
        y = rng.integers(0, 2, size=b)
        v_f = rng.standard_normal((n, d))
        l_f = rng.standard_normal((n, d))
        rep = total_loss(v_c, l_c, y, v_f, l_f, cfg)
        checks = [
            (rep.grad_v_c, lambda x: total_loss(x, l_c, y, v_f, l_f, cfg).total, v_c),
            (rep.grad_l_c, lambda x: total_loss(v_c, x, y, v_f, l_f, cfg).total, l_c),
            (rep.grad_v_f, lambda x: total_loss(v_c, l_c, y, x, l_f, cfg).total, v_f),
            (rep.grad_l_f, lambda x: total_loss(v_c, l_c, y, v_f, x, cfg).total, l_f),
        ]
        for analytic, fn, x in checks:
            numeric = finite_difference_grad(fn, x, h)
            worst = max(worst, relative_error(analytic, numeric))
    return worst


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)
