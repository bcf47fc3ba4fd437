import json
import os

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

VOCAB_WORDS = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    ".", ",", "!", "?",
    "the", "a", "sky", "is", "blue", "grass", "green", "paris", "capital",
    "of", "france", "rivers", "flow", "north", "cats", "sleep", "all", "day",
    "long", "sun", "sets", "west", "play", "##ing", "birds", "sing", "trees",
    "grow", "tall", "rain", "falls", "often", "wind", "blows", "cold", "stars",
    "shine", "bright", "fish", "swim", "deep", "snow", "covers", "hills",
    "moon", "rises", "late", "dogs", "bark", "loud", "bees", "make", "honey",
]


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory) -> str:
    """A tiny randomly initialized transformer checkpoint saved to disk, so
    every test runs offline against a real tokenizer + model stack."""
    import torch
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import BertNormalizer
    from tokenizers.pre_tokenizers import BertPreTokenizer
    from tokenizers.processors import TemplateProcessing
    from transformers import BertConfig, BertModel, BertTokenizerFast

    target = tmp_path_factory.mktemp("checkpoint")
    vocab = {w: i for i, w in enumerate(VOCAB_WORDS)}
    backend = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    backend.normalizer = BertNormalizer(lowercase=True)
    backend.pre_tokenizer = BertPreTokenizer()
    backend.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = BertTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]",
    )
    torch.manual_seed(7)
    model = BertModel(BertConfig(
        vocab_size=len(vocab), hidden_size=16, num_hidden_layers=1,
        num_attention_heads=2, intermediate_size=32, max_position_embeddings=128,
    ))
    model.save_pretrained(target)
    tokenizer.save_pretrained(target)
    return str(target)


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(name: str, objs) -> str:
        path = tmp_path / name
        path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
        return str(path)

    return _write
