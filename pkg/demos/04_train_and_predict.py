"""Train both models on the bundled tiny corpus and run the chained
prediction, ending with the five-column extraction table.

Run: python3 demos/04_train_and_predict.py   (about a minute)
"""

from aoml.corpus import ReviewDocument, build_vocab
from aoml.datasets import tiny_overfit_docs
from aoml.ner import TrainConfig, predict_ner, train_ner
from aoml.pipeline import extraction_records, render_extraction_table
from aoml.relex import predict_rel, train_rel

docs = tiny_overfit_docs()
vocab = build_vocab([d.document for d in docs])
print(f"{len(docs)} gold documents, "
      f"{sum(len(d.mentions) for d in docs)} mentions, "
      f"{sum(len(d.relations) for d in docs)} relations")

# model 1: span tagger (never sees the relation annotations)
ner_cfg = TrainConfig(epochs=120, seed=42, overfit=True)
ner_model, ner_curve = train_ner(docs, ner_cfg, vocab=vocab)
best = list(ner_curve)[ner_curve.best_f1_epoch()]
print(f"NER best epoch {best.epoch}: P={best.precision:.3f} "
      f"R={best.recall:.3f} F1={best.f1:.3f}")

# model 2: relation scorer over gold mention pairs
rel_cfg = TrainConfig(epochs=200, seed=42, overfit=True)
rel_model, rel_curve = train_rel(docs, rel_cfg, vocab=vocab)
best = list(rel_curve)[rel_curve.best_f1_epoch()]
print(f"REL best epoch {best.epoch}: P={best.precision:.3f} "
      f"R={best.recall:.3f} F1={best.f1:.3f}")

# chained inference on fresh text: tagger first, then the pair scorer
fresh = [ReviewDocument(id="new1", text="poor camera and great battery"),
         ReviewDocument(id="new2", text="the screen is terrible")]
per_doc = []
for doc in fresh:
    mentions = predict_ner(ner_model, doc)
    preds = predict_rel(rel_model, doc, mentions, threshold=0.3)
    per_doc.append((doc, preds))
    print(f"\n{doc.id}: {len(mentions)} mentions, {len(preds)} relations")
    for m in mentions:
        print(f"   [{m.token_start},{m.token_end}) {m.label.value} "
              f"confidence {m.confidence:.3f}")

print()
print(render_extraction_table(extraction_records(per_doc)))
