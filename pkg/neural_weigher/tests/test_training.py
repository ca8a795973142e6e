import random

import pytest
import torch

from termweight.targets import WeightRecord

from neural_weigher import TrainingError
from neural_weigher.align import prepare
from neural_weigher.inference import predict_word_weights
from neural_weigher.model import TokenWeigher
from neural_weigher.training import TrainSettings, collate, initial_loss, train


def _toy_dataset(tokenizer, plain_config, n=500, seed=3):
    """n single-sentence examples over the a/b/c vocab with fixed targets."""
    rng = random.Random(seed)
    records, texts = [], {}
    for i in range(n):
        words = [rng.choice("abc") for _ in range(rng.randint(2, 6))]
        owner = f"d{i}"
        # target: 1.0 for the first word's term, 0.0 elsewhere
        weights = {w: 0.0 for w in set(words)}
        weights[words[0]] = 1.0
        records.append(WeightRecord(owner, weights))
        texts[owner] = " ".join(words)
    return prepare(records, texts, tokenizer, plain_config)[0]


class TestTrain:
    def test_one_epoch_on_500_examples_reduces_loss(self, subword_base, plain_config):
        model, tokenizer = TokenWeigher.from_base(subword_base)
        examples = _toy_dataset(tokenizer, plain_config, n=500)
        assert len(examples) == 500
        before = initial_loss(model, examples, tokenizer.pad_token_id)
        history = train(model, examples, tokenizer.pad_token_id,
                        TrainSettings(learning_rate=5e-4, epochs=1, seed=7))
        after = initial_loss(model, examples, tokenizer.pad_token_id)
        assert after < before
        assert len(history) == 1

    def test_empty_dataset_errors(self, subword_base):
        model, tokenizer = TokenWeigher.from_base(subword_base)
        with pytest.raises(TrainingError, match="at least one"):
            train(model, [], tokenizer.pad_token_id)

    def test_default_settings_match_reference_protocol(self):
        settings = TrainSettings()
        assert settings.learning_rate == 2e-5
        assert settings.epochs == 3

    def test_non_finite_loss_names_epoch_and_step(self, subword_base, plain_config):
        model, tokenizer = TokenWeigher.from_base(subword_base)
        examples = _toy_dataset(tokenizer, plain_config, n=64)
        with pytest.raises(TrainingError, match=r"epoch \d+, step \d+"):
            train(model, examples, tokenizer.pad_token_id,
                  TrainSettings(learning_rate=1e12, epochs=50, seed=7))

    def test_fixed_seed_reproducible(self, subword_base, plain_config):
        examples_text = "a b c a"
        record = [WeightRecord("d1", {"a": 1.0, "b": 0.5, "c": 0.0})]

        def run():
            torch.set_num_threads(1)
            model, tokenizer = TokenWeigher.from_base(subword_base)
            examples = _toy_dataset(tokenizer, plain_config, n=64)
            train(model, examples, tokenizer.pad_token_id,
                  TrainSettings(learning_rate=5e-4, epochs=2, seed=21))
            model.eval()
            ex, _ = prepare(record, {"d1": examples_text}, tokenizer, plain_config)
            ids, att, _, _ = collate(ex, tokenizer.pad_token_id)
            with torch.no_grad():
                return model(ids, att)

        assert torch.equal(run(), run())


class TestCheckpointRoundTrip:
    def test_save_load_preserves_predictions(self, subword_base, plain_config, tmp_path):
        model, tokenizer = TokenWeigher.from_base(subword_base)
        examples = _toy_dataset(tokenizer, plain_config, n=64)
        train(model, examples, tokenizer.pad_token_id,
              TrainSettings(learning_rate=5e-4, epochs=1, seed=5))
        model.save_checkpoint(str(tmp_path / "ckpt"), tokenizer, {"note": "test"})
        model2, tokenizer2, meta = TokenWeigher.load_checkpoint(str(tmp_path / "ckpt"))
        assert meta["note"] == "test"
        text = "a b deepct"
        before, _ = predict_word_weights(model, tokenizer, text, plain_config, 64)
        after, _ = predict_word_weights(model2, tokenizer2, text, plain_config, 64)
        assert [w for w, _ in before] == [w for w, _ in after]
        for (_, x), (_, y) in zip(before, after):
            assert x == pytest.approx(y, abs=1e-6)
