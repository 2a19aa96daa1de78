import numpy as np
import pytest

from aoml.annotate import AnnotatedDocument, EntityLabel
from aoml.corpus import ReviewDocument, build_vocab
from aoml.datasets import make_annotated, tiny_overfit_docs
from aoml.encoder import EncoderConfig, mlm_pretrain, save_checkpoint
from aoml.errors import TooFewDocuments, VocabularyMismatch
from aoml.evalmetrics import span_prf
from aoml.ner import (NerModel, TrainConfig, mentions_from_tag_probs,
                      predict_ner, train_ner)
from aoml.neuralcore import RandomSource

@pytest.fixture(scope="module")
def tiny_setup():
    docs = tiny_overfit_docs()
    vocab = build_vocab([d.document for d in docs])
    return docs, vocab


def small_config(vocab):
    return EncoderConfig(vocab_size=vocab.size, d_model=16, n_heads=2,
                         n_layers=1, d_ff=32, max_len=32, dropout_p=0.1)


class TestTrainConfig:
    def test_validation_fraction_bounds(self):
        with pytest.raises(ValueError):
            TrainConfig(validation_fraction=0.0)
        with pytest.raises(ValueError):
            TrainConfig(validation_fraction=1.0)

    def test_epochs_positive(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)

    def test_json_round_trip(self):
        cfg = TrainConfig(epochs=5, seed=3, freeze_encoder=True)
        assert TrainConfig.from_json(cfg.to_json()) == cfg


class TestTrainNer:
    def test_too_few_documents(self, tiny_setup):
        docs, vocab = tiny_setup
        with pytest.raises(TooFewDocuments):
            train_ner(docs[:1], TrainConfig(epochs=1), vocab=vocab)

    def test_same_seed_same_curve(self, tiny_setup):
        docs, vocab = tiny_setup
        cfg = TrainConfig(epochs=4, seed=5)
        _, curve_a = train_ner(docs, cfg, vocab=vocab,
                               encoder_config=small_config(vocab))
        _, curve_b = train_ner(docs, cfg, vocab=vocab,
                               encoder_config=small_config(vocab))
        assert curve_a == curve_b

    def test_relations_never_read(self, tiny_setup):
        docs, vocab = tiny_setup
        stripped = [AnnotatedDocument(d.document, d.tokens, d.mentions, ())
                    for d in docs]
        cfg = TrainConfig(epochs=4, seed=5)
        _, with_rels = train_ner(docs, cfg, vocab=vocab,
                                 encoder_config=small_config(vocab))
        _, without = train_ner(stripped, cfg, vocab=vocab,
                               encoder_config=small_config(vocab))
        assert with_rels == without

    def test_returned_model_is_best_epoch(self, tiny_setup):
        docs, vocab = tiny_setup
        cfg = TrainConfig(epochs=12, seed=0, overfit=True)
        model, curve = train_ner(docs, cfg, vocab=vocab,
                                 encoder_config=small_config(vocab))
        best = max(p.f1 for p in curve)
        gold = {d.document.id: list(d.mentions) for d in docs}
        pred = {d.document.id: [m for m in predict_ner(model, d.document)]
                for d in docs}
        # strip confidences for comparison
        pred = {k: [type(m)(m.token_start, m.token_end, m.label) for m in v]
                for k, v in pred.items()}
        assert span_prf(gold, pred).f1 == pytest.approx(best)

    def test_curve_has_one_point_per_epoch(self, tiny_setup):
        docs, vocab = tiny_setup
        _, curve = train_ner(docs, TrainConfig(epochs=3, seed=1), vocab=vocab,
                             encoder_config=small_config(vocab))
        assert [p.epoch for p in curve] == [0, 1, 2]

    def test_freeze_encoder_keeps_encoder_weights(self, tiny_setup):
        docs, vocab = tiny_setup
        cfg = TrainConfig(epochs=2, seed=3, freeze_encoder=True)
        model, _ = train_ner(docs, cfg, vocab=vocab,
                             encoder_config=small_config(vocab))
        fresh = NerModel(small_config(vocab), vocab, RandomSource(3).fork("init"))
        for trained, init in zip(model.encoder.parameters(),
                                 fresh.encoder.parameters()):
            np.testing.assert_array_equal(trained.value, init.value)


class TestWarmStart:
    def test_warm_start_copies_encoder_and_inherits_config(self, tmp_path,
                                                           tiny_setup):
        docs, vocab = tiny_setup
        cfg = small_config(vocab)
        mlm, _ = mlm_pretrain([d.document for d in docs], vocab, cfg,
                              epochs=2, rs=RandomSource(1))
        path = tmp_path / "mlm.aoml"
        save_checkpoint(mlm, path)
        train_cfg = TrainConfig(epochs=1, seed=9, warm_start=path)
        model, _ = train_ner(docs, train_cfg)
        assert model.config == cfg
        assert model.vocab.fingerprint() == vocab.fingerprint()

    def test_warm_start_weights_equal_before_training(self, tmp_path, tiny_setup):
        docs, vocab = tiny_setup
        cfg = small_config(vocab)
        mlm, _ = mlm_pretrain([d.document for d in docs], vocab, cfg,
                              epochs=1, rs=RandomSource(1))
        path = tmp_path / "mlm.aoml"
        save_checkpoint(mlm, path)
        # freeze the encoder so the copied weights survive training untouched
        train_cfg = TrainConfig(epochs=1, seed=9, warm_start=path,
                                freeze_encoder=True)
        model, _ = train_ner(docs, train_cfg)
        for src, dst in zip(mlm.encoder.parameters(),
                            model.encoder.parameters()):
            np.testing.assert_array_equal(src.value, dst.value)


class TestPredictNer:
    def test_confidence_is_mean_of_winning_probs(self):
        # rows argmax to B-ASP, I-ASP, O with winners 0.9, 0.7, 0.95
        probs = np.array([
            [0.05, 0.90, 0.03, 0.01, 0.01],
            [0.10, 0.10, 0.70, 0.05, 0.05],
            [0.95, 0.02, 0.01, 0.01, 0.01],
        ], dtype=np.float32)
        (mention,) = mentions_from_tag_probs(probs)
        assert (mention.token_start, mention.token_end) == (0, 2)
        assert mention.label is EntityLabel.ASP
        assert mention.confidence == pytest.approx(0.8, abs=1e-6)

    def test_all_outside_gives_empty(self):
        probs = np.array([[0.9, 0.1, 0.0, 0.0, 0.0],
                          [0.8, 0.0, 0.1, 0.1, 0.0]], dtype=np.float32)
        assert mentions_from_tag_probs(probs) == []

    def test_predictions_sorted_disjoint_with_unit_confidences(self, tiny_setup):
        docs, vocab = tiny_setup
        cfg = TrainConfig(epochs=5, seed=2, overfit=True)
        model, _ = train_ner(docs, cfg, vocab=vocab,
                             encoder_config=small_config(vocab))
        for doc in docs:
            mentions = predict_ner(model, doc.document)
            for prev, cur in zip(mentions, mentions[1:]):
                assert prev.token_end <= cur.token_start
            for m in mentions:
                assert 0.0 <= m.confidence < 1.0

    def test_vocab_mismatch_detected(self, tiny_setup):
        docs, vocab = tiny_setup
        model = NerModel(small_config(vocab), vocab, RandomSource(0))
        other = build_vocab([ReviewDocument(id="x", text="totally different words")])
        with pytest.raises(VocabularyMismatch):
            model.check_vocab(other)

    def test_overfit_reaches_perfect_f1(self, tiny_setup):
        docs, vocab = tiny_setup
        cfg = TrainConfig(epochs=40, seed=42, overfit=True)
        _, curve = train_ner(docs, cfg, vocab=vocab,
                             encoder_config=small_config(vocab))
        assert max(p.f1 for p in curve) == 1.0

    def test_tagger_learns_table_style_pattern(self, tiny_setup):
        """Qualitative fixture: 'Poor screen color, poor camera, wifi also
        only 2'-style input after training on such patterns."""
        extra = [
            make_annotated("p0", "poor screen color , poor camera",
                           [("poor", "OPI"), ("screen color", "ASP"),
                            ("poor", "OPI"), ("camera", "ASP")],
                           [(1, 0), (3, 2)]),
            make_annotated("p1", "poor wifi also only 2",
                           [("poor", "OPI"), ("wifi", "ASP")], [(1, 0)]),
            make_annotated("p2", "poor battery , poor display",
                           [("poor", "OPI"), ("battery", "ASP"),
                            ("poor", "OPI"), ("display", "ASP")],
                           [(1, 0), (3, 2)]),
        ]
        docs = tiny_overfit_docs() + extra
        vocab = build_vocab([d.document for d in docs])
        cfg = TrainConfig(epochs=60, seed=42, overfit=True)
        model, _ = train_ner(docs, cfg, vocab=vocab,
                             encoder_config=small_config(vocab))
        target = ReviewDocument(id="t", text="poor screen color , poor camera")
        got = {(m.token_start, m.token_end, m.label.value)
               for m in predict_ner(model, target)}
        assert (1, 3, "ASP") in got  # "screen color"
        assert (5, 6, "ASP") in got  # "camera"
