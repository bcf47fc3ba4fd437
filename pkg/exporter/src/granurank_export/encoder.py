"""Thin wrapper around a transformers checkpoint for token-row extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from granurank import DataError
from transformers import AutoModel, AutoTokenizer


@dataclass
class EncodedText:
    """Token rows for one input, with character offsets into the raw text
    and a flag per token marking tokenizer-inserted specials."""

    rows: np.ndarray  # (n_tokens, dim) float64, pre-normalization
    offsets: list[tuple[int, int]]
    special: list[bool]


class CheckpointEncoder:
    """Loads any transformers checkpoint with a fast tokenizer and returns
    last-layer hidden states per token. Checkpoint-agnostic: the embedding
    dimensionality is whatever the model produces."""

    def __init__(self, model_id: str):
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:  # transformers raises a zoo of types here
            raise DataError(f"cannot load checkpoint '{model_id}': {exc}")
        if not getattr(self.tokenizer, "is_fast", False):
            raise DataError(
                f"checkpoint '{model_id}' has no fast tokenizer; offset mappings are required"
            )
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)

    def encode_batch(self, texts: list[str]) -> list[EncodedText]:
        enc = self.tokenizer(
            texts,
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
            padding=True,
            truncation=True,
            return_tensors="pt",
        )
        offsets = enc.pop("offset_mapping")
        special = enc.pop("special_tokens_mask")
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state
        out: list[EncodedText] = []
        for i in range(len(texts)):
            keep = enc["attention_mask"][i].bool()
            out.append(
                EncodedText(
                    rows=hidden[i][keep].double().numpy(),
                    offsets=[tuple(int(x) for x in pair) for pair in offsets[i][keep].tolist()],
                    special=[bool(s) for s in special[i][keep].tolist()],
                )
            )
        return out

    def token_strings(self, text: str) -> tuple[list[str], list[tuple[int, int]]]:
        """Content-token strings and offsets for raw text (no specials)."""
        enc = self.tokenizer(
            text, return_offsets_mapping=True, return_special_tokens_mask=True, truncation=True
        )
        tokens = self.tokenizer.convert_ids_to_tokens(enc["input_ids"])
        out_tokens, out_offsets = [], []
        for token, offset, is_special in zip(tokens, enc["offset_mapping"], enc["special_tokens_mask"]):
            if not is_special:
                out_tokens.append(token)
                out_offsets.append((int(offset[0]), int(offset[1])))
        return out_tokens, out_offsets
