"""A deliberately tiny differentiable encoder for desk-scale studies.

Each token row is normalize((vocab_embed[token] + marker) @ projection),
where the marker vector depends on what the encoding is for: scoring
passages, scoring sentences within passages, or being a passage. Adding the
marker to every token's input lets it condition the whole encoding, and the
normalization is part of the forward pass and differentiated through.

Gradients are hand-written (no autograd dependency); `grad_check` verifies
any loss-and-gradient function against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .core import DataError, EmbeddingMatrix

ZERO_NORM_TOL = 1e-12


class Role(Enum):
    """What an encoding is for; selects the marker vector."""

    QUERY_DEFAULT = "query_default"
    QUERY_SENTENCE = "query_sentence"
    PASSAGE = "passage"


@dataclass
class ToyEncoder:
    vocab_embed: np.ndarray  # V x d_in
    projection: np.ndarray  # d_in x d
    query_default_marker: np.ndarray  # d_in
    query_sentence_marker: np.ndarray  # d_in
    passage_marker: np.ndarray  # d_in

    @property
    def vocab_size(self) -> int:
        return self.vocab_embed.shape[0]

    @property
    def input_dim(self) -> int:
        return self.vocab_embed.shape[1]

    @property
    def output_dim(self) -> int:
        return self.projection.shape[1]

    def marker(self, role: Role) -> np.ndarray:
        if role is Role.QUERY_DEFAULT:
            return self.query_default_marker
        if role is Role.QUERY_SENTENCE:
            return self.query_sentence_marker
        return self.passage_marker


def init_toy_encoder(
    vocab_size: int,
    input_dim: int,
    output_dim: int,
    seed: int,
    marker_scale: float = 0.25,
) -> ToyEncoder:
    """Gaussian init; markers start small so tokens dominate at first."""
    rng = np.random.default_rng(seed)
    return ToyEncoder(
        vocab_embed=rng.normal(size=(vocab_size, input_dim)),
        projection=rng.normal(size=(input_dim, output_dim)) / np.sqrt(input_dim),
        query_default_marker=marker_scale * rng.normal(size=input_dim),
        query_sentence_marker=marker_scale * rng.normal(size=input_dim),
        passage_marker=marker_scale * rng.normal(size=input_dim),
    )


@dataclass(frozen=True)
class ForwardCache:
    """Intermediates needed to push row gradients back to parameters."""

    token_ids: tuple[int, ...]
    role: Role
    inputs: np.ndarray  # n x d_in, embed + marker
    pre_norm: np.ndarray  # n x d
    norms: np.ndarray  # n
    rows: np.ndarray  # n x d, unit rows


def forward_with_cache(
    encoder: ToyEncoder, token_ids: Sequence[int], role: Role
) -> tuple[np.ndarray, ForwardCache]:
    ids = tuple(int(t) for t in token_ids)
    if not ids:
        raise DataError("cannot encode an empty token sequence")
    for t in ids:
        if not (0 <= t < encoder.vocab_size):
            raise DataError(f"token id {t} out of range for vocab of {encoder.vocab_size}")
    inputs = encoder.vocab_embed[list(ids)] + encoder.marker(role)
    pre_norm = inputs @ encoder.projection
    norms = np.linalg.norm(pre_norm, axis=1)
    small = np.nonzero(norms < ZERO_NORM_TOL)[0]
    if small.size:
        raise DataError(f"zero-norm row {small[0]} in encoder output")
    rows = pre_norm / norms[:, None]
    return rows, ForwardCache(ids, role, inputs, pre_norm, norms, rows)


def toy_forward(encoder: ToyEncoder, token_ids: Sequence[int], role: Role) -> EmbeddingMatrix:
    rows, _ = forward_with_cache(encoder, token_ids, role)
    return EmbeddingMatrix(rows)


@dataclass
class ParamGrads:
    vocab_embed: np.ndarray
    projection: np.ndarray
    query_default_marker: np.ndarray
    query_sentence_marker: np.ndarray
    passage_marker: np.ndarray

    @staticmethod
    def zeros(encoder: ToyEncoder) -> "ParamGrads":
        return ParamGrads(
            vocab_embed=np.zeros_like(encoder.vocab_embed),
            projection=np.zeros_like(encoder.projection),
            query_default_marker=np.zeros_like(encoder.query_default_marker),
            query_sentence_marker=np.zeros_like(encoder.query_sentence_marker),
            passage_marker=np.zeros_like(encoder.passage_marker),
        )

    def marker(self, role: Role) -> np.ndarray:
        if role is Role.QUERY_DEFAULT:
            return self.query_default_marker
        if role is Role.QUERY_SENTENCE:
            return self.query_sentence_marker
        return self.passage_marker

    def add_scaled(self, other: "ParamGrads", scale: float) -> None:
        self.vocab_embed += scale * other.vocab_embed
        self.projection += scale * other.projection
        self.query_default_marker += scale * other.query_default_marker
        self.query_sentence_marker += scale * other.query_sentence_marker
        self.passage_marker += scale * other.passage_marker


def backward_rows(
    encoder: ToyEncoder, cache: ForwardCache, d_rows: np.ndarray, grads: ParamGrads
) -> None:
    """Accumulate d(loss)/d(params) given d(loss)/d(output rows).

    Normalization backward: for x = z / |z|, dz = (dx - x (x . dx)) / |z|.
    """
    x = cache.rows
    inner = np.sum(x * d_rows, axis=1, keepdims=True)
    dz = (d_rows - x * inner) / cache.norms[:, None]
    grads.projection += cache.inputs.T @ dz
    d_inputs = dz @ encoder.projection.T
    np.add.at(grads.vocab_embed, list(cache.token_ids), d_inputs)
    grads.marker(cache.role)[...] += d_inputs.sum(axis=0)


_PARAM_FIELDS = (
    "vocab_embed",
    "projection",
    "query_default_marker",
    "query_sentence_marker",
    "passage_marker",
)


def pack_params(encoder: ToyEncoder) -> np.ndarray:
    return np.concatenate([np.asarray(getattr(encoder, f)).ravel() for f in _PARAM_FIELDS])


def pack_grads(grads: ParamGrads) -> np.ndarray:
    return np.concatenate([np.asarray(getattr(grads, f)).ravel() for f in _PARAM_FIELDS])


def unpack_params(template: ToyEncoder, flat: np.ndarray) -> ToyEncoder:
    """Rebuild an encoder with the template's shapes from a flat vector."""
    shapes = {f: np.asarray(getattr(template, f)).shape for f in _PARAM_FIELDS}
    expected = sum(int(np.prod(s)) for s in shapes.values())
    if flat.size != expected:
        raise DataError(f"parameter vector has {flat.size} entries, expected {expected}")
    parts = {}
    offset = 0
    for f, shape in shapes.items():
        size = int(np.prod(shape))
        parts[f] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    return ToyEncoder(**parts)


def grad_check(
    loss_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    params: np.ndarray,
    epsilon: float = 1e-5,
) -> float:
    """Max discrepancy between the analytic gradient and central differences.

    The discrepancy for one parameter is |analytic - numeric| divided by
    max(1, |analytic|, |numeric|): relative at large magnitudes, absolute
    below unit scale so near-zero gradients do not blow up the ratio.
    """
    if not (1e-6 <= epsilon <= 1e-3):
        raise DataError(f"epsilon {epsilon} outside [1e-6, 1e-3]")
    _, analytic = loss_and_grad(params)
    analytic = np.asarray(analytic, dtype=np.float64)
    if analytic.shape != params.shape:
        raise DataError("gradient shape does not match parameter shape")
    worst = 0.0
    for i in range(params.size):
        bumped = params.copy()
        bumped[i] = params[i] + epsilon
        up, _ = loss_and_grad(bumped)
        bumped[i] = params[i] - epsilon
        down, _ = loss_and_grad(bumped)
        numeric = (up - down) / (2.0 * epsilon)
        err = abs(analytic[i] - numeric) / max(1.0, abs(analytic[i]), abs(numeric))
        if err > worst:
            worst = err
    return worst
