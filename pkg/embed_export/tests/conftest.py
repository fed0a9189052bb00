import json

import pytest


@pytest.fixture
def five_sentence_corpus(tmp_path):
    """Two documents, five sentences total."""
    path = tmp_path / "five.jsonl"
    docs = [
        {"doc_id": "d1", "category": None, "sentences": [
            {"text": "The appeal was heard at length.", "label": "FAC"},
            {"text": "Counsel pressed the limitation point.", "label": "ARG"},
            {"text": "Appeal dismissed.", "label": "RPC"},
        ]},
        {"doc_id": "d2", "category": "Criminal", "sentences": [
            {"text": "The accused was found near the scene.", "label": "FAC"},
            {"text": "guilty", "label": "RPC"},
        ]},
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps(d) + "\n")
    return path


@pytest.fixture(scope="session")
def tiny_hf_model(tmp_path_factory):
    """A small randomly initialized BERT saved to disk, so the hf path runs
    offline with fixed weights."""
    torch = pytest.importorskip("torch")
    transformers = pytest.importorskip("transformers")
    from transformers import BertConfig, BertModel, BertTokenizer

    target = tmp_path_factory.mktemp("tinybert")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
             "the", "court", "appeal", "was", "heard", "at", "length",
             "counsel", "pressed", "limitation", "point", "dismissed",
             "accused", "found", "near", "scene", "guilty", "##s", "."]
    (target / "vocab.txt").write_text("\n".join(vocab) + "\n")
    tokenizer = BertTokenizer(str(target / "vocab.txt"))
    tokenizer.save_pretrained(str(target))
    torch.manual_seed(1234)
    config = BertConfig(vocab_size=len(vocab), hidden_size=16, num_hidden_layers=1,
                        num_attention_heads=2, intermediate_size=32,
                        max_position_embeddings=64)
    BertModel(config).save_pretrained(str(target))
    return str(target)
