"""The semi-supervised loop: adopt confident predictions on unlabeled
reviews as pseudo-labels, retrain, and audit every adoption.

Run: python3 demos/05_selftrain_loop.py   (about a minute)
"""

from aoml.corpus import ReviewDocument, build_vocab
from aoml.datasets import tiny_overfit_docs
from aoml.ner import TrainConfig, train_ner
from aoml.pipeline import SelfTrainConfig, self_train
from aoml.relex import train_rel

gold = tiny_overfit_docs()
vocab = build_vocab([d.document for d in gold])
ner_model, _ = train_ner(gold, TrainConfig(epochs=100, seed=42, overfit=True),
                         vocab=vocab)
rel_model, _ = train_rel(gold, TrainConfig(epochs=150, seed=42, overfit=True),
                         vocab=vocab)

unlabeled = [
    ReviewDocument(id="u1", text="the camera is great"),
    ReviewDocument(id="u2", text="the charger is terrible"),
    ReviewDocument(id="u3", text="nice display and poor speaker"),
    ReviewDocument(id="u4", text="random words with no opinions"),
]

# adoption is document-level: one weak mention or relation blocks the doc
config = SelfTrainConfig(tau_ner=0.8, tau_rel=0.5, max_added_per_round=3)
result = self_train(ner_model, rel_model, gold, unlabeled, config,
                    TrainConfig(epochs=30, seed=42, overfit=True),
                    TrainConfig(epochs=30, seed=42, overfit=True))

print(f"adopted {len(result.audit)} of {len(unlabeled)} unlabeled documents:")
for record in result.audit:
    print(f"  {record['doc_id']}: mentions >= "
          f"{min(record['mention_confidences']):.3f}, mean "
          f"{record['mean_confidence']:.3f}")
print("\nmodels were retrained from scratch on gold + pseudo-labels")

# thresholds of 1.0 can never be met (probabilities are clamped below 1),
# so the loop degenerates to a no-op and returns the very same models
strict = self_train(ner_model, rel_model, gold, unlabeled,
                    SelfTrainConfig(tau_ner=1.0, tau_rel=1.0),
                    TrainConfig(epochs=1, seed=0), TrainConfig(epochs=1, seed=0))
print(f"\ntau=1.0: adopted {len(strict.audit)}, models unchanged: "
      f"{strict.ner_model is ner_model and strict.rel_model is rel_model}")
