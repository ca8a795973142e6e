import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

from termweight.analysis import AnalyzerConfig

PLAIN = AnalyzerConfig(stem="none")


def make_base(path, vocab, hidden=32, layers=2, heads=2, max_positions=160, seed=13):
    """Small random-init checkpoint in standard layout; the test 'pretrained' base."""
    path.mkdir(parents=True, exist_ok=True)
    (path / "vocab.txt").write_text("\n".join(vocab) + "\n")
    tokenizer = BertTokenizer(str(path / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(str(path))
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden,
        num_hidden_layers=layers,
        num_attention_heads=heads,
        intermediate_size=hidden * 2,
        max_position_embeddings=max_positions,
    )
    BertModel(config).save_pretrained(str(path))
    return str(path)


@pytest.fixture(scope="session")
def subword_base(tmp_path_factory):
    """Vocab where 'deepct' splits into 'deep' + '##ct', like unseen words do."""
    vocab = [
        "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
        "deep", "##ct", "ranking", "term", "weight", "index",
        "a", "b", "c", "##a", "##b", "##c",
    ]
    return make_base(tmp_path_factory.mktemp("base") / "subword", vocab)


@pytest.fixture
def plain_config():
    return PLAIN
