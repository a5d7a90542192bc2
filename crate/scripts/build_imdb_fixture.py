#!/usr/bin/env python3
"""Build the IMDB test fixture used by the sidu-txt acceptance suite.

Trains the single-convolution sentiment CNN (embedding -> conv1d(128, k=5,
same, relu) -> global average pool -> dense(64, relu) -> dense(1, sigmoid))
on 25,000 labelled IMDB reviews and writes:

    model.sidu           bundle in the SIDUTXT1 format read by the runtime
    parity.json          10 held-out reviews with reference probabilities
    hobgoblins.txt       the negative review used for the qualitative check
    validation/*.txt     300 held-out validation reviews (plain text)
    test_sample.jsonl    500 held-out test reviews with labels
    training_report.json accuracy / precision / recall / F1 on the test split

The review text comes from the `movie-reviews` PyPI wheel
(movie_reviews/data/combined_movie_reviews.csv, rows with source == "imdb").

Usage:
    python3 scripts/build_imdb_fixture.py --wheel movie_reviews-0.0.2-py3-none-any.whl \
        --out crates/core/tests/fixtures/imdb
"""

import argparse
import io
import json
import os
import re
import struct
import zipfile
from collections import Counter

import numpy as np

MAGIC = b"SIDUTXT1"
TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text):
    return TOKEN_RE.findall(text.lower())


def clean(text):
    return re.sub(r"<br\s*/?>", " ", text)


def encode(tokens, index, length):
    ids = [index.get(t, 0) for t in tokens[:length]]
    return ids + [0] * (length - len(ids))


def write_bundle(path, meta, tensors):
    offset = 0
    entries = []
    blobs = []
    for name, array in tensors:
        data = np.ascontiguousarray(array, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(array.shape), "offset": offset, "length": len(data)})
        blobs.append(data)
        offset += len(data)
    meta = dict(meta)
    meta["tensors"] = entries
    header = json.dumps(meta, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=20240401)
    ap.add_argument("--vocab-size", type=int, default=10000)
    ap.add_argument("--seq-len", type=int, default=400)
    ap.add_argument("--embedding-dim", type=int, default=64)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--lr", type=float, default=2e-4)
    args = ap.parse_args()

    os.environ.setdefault("PYTHONHASHSEED", str(args.seed))
    import tensorflow as tf
    import keras

    keras.utils.set_random_seed(args.seed)

    import pandas as pd

    with zipfile.ZipFile(args.wheel) as z:
        raw = z.read("movie_reviews/data/combined_movie_reviews.csv")
    df = pd.read_csv(io.BytesIO(raw))
    df = df[df.source == "imdb"].reset_index(drop=True)
    texts = [clean(t) for t in df.text.tolist()]
    labels = df.label.astype(int).to_numpy()

    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(texts))
    n_test = int(0.15 * len(texts))
    n_val = int(0.10 * len(texts))
    test_idx = order[:n_test]
    val_idx = order[n_test:n_test + n_val]
    train_idx = order[n_test + n_val:]

    tokens = [tokenize(t) for t in texts]
    counts = Counter()
    for i in train_idx:
        counts.update(tokens[i])
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: args.vocab_size - 1]
    vocab = ["<unk>"] + [w for w, _ in ranked]
    index = {w: i for i, w in enumerate(vocab)}

    x = np.array([encode(t, index, args.seq_len) for t in tokens], dtype=np.int32)
    y = labels.astype(np.float32)

    class ZeroUnknownRow(keras.constraints.Constraint):
        def __call__(self, w):
            mask = np.ones((args.vocab_size, 1), dtype=np.float32)
            mask[0, 0] = 0.0
            return w * mask

    inputs = keras.Input(shape=(args.seq_len,), dtype="int32")
    h = keras.layers.Embedding(
        args.vocab_size, args.embedding_dim, embeddings_constraint=ZeroUnknownRow(), name="embedding"
    )(inputs)
    h = keras.layers.Conv1D(128, 5, padding="same", activation="relu", name="conv")(h)
    h = keras.layers.Dropout(0.2)(h)
    h = keras.layers.GlobalAveragePooling1D()(h)
    h = keras.layers.Dense(64, activation="relu", name="dense1")(h)
    h = keras.layers.Dropout(0.2)(h)
    out = keras.layers.Dense(1, activation="sigmoid", name="output")(h)
    model = keras.Model(inputs, out)
    emb = model.get_layer("embedding")
    w = emb.get_weights()[0]
    w[0, :] = 0.0
    emb.set_weights([w])

    model.compile(
        optimizer=keras.optimizers.Adam(learning_rate=args.lr),
        loss="binary_crossentropy",
        metrics=["accuracy"],
    )
    model.fit(
        x[train_idx],
        y[train_idx],
        validation_data=(x[val_idx], y[val_idx]),
        epochs=args.epochs,
        batch_size=32,
        verbose=2,
        callbacks=[keras.callbacks.EarlyStopping(monitor="val_loss", patience=2, restore_best_weights=True)],
    )

    probs = model.predict(x[test_idx], batch_size=256, verbose=0)[:, 0]
    pred = (probs > 0.5).astype(int)
    truth = labels[test_idx]
    tp = int(((pred == 1) & (truth == 1)).sum())
    fp = int(((pred == 1) & (truth == 0)).sum())
    fn = int(((pred == 0) & (truth == 1)).sum())
    acc = float((pred == truth).mean())
    prec = tp / max(tp + fp, 1)
    rec = tp / max(tp + fn, 1)
    f1 = 2 * prec * rec / max(prec + rec, 1e-12)
    print(f"test accuracy {acc:.4f} precision {prec:.4f} recall {rec:.4f} f1 {f1:.4f}")

    os.makedirs(args.out, exist_ok=True)
    emb_w = model.get_layer("embedding").get_weights()[0]
    conv_w, conv_b = model.get_layer("conv").get_weights()  # (k, d, N)
    d1_w, d1_b = model.get_layer("dense1").get_weights()  # (N, h)
    o_w, o_b = model.get_layer("output").get_weights()  # (h, 1)
    meta = {
        "format_version": 1,
        "architecture": {
            "embedding_dim": args.embedding_dim,
            "num_filters": 128,
            "kernel_size": 5,
            "padding": "same",
            "dense_units": 64,
            "output": "sigmoid",
        },
        "tokenizer": {"lowercase": True, "split": "non_ascii_alphanumeric"},
        "max_sequence_length": args.seq_len,
        "vocabulary": vocab,
    }
    write_bundle(
        os.path.join(args.out, "model.sidu"),
        meta,
        [
            ("embedding", emb_w),
            ("conv_filters", np.transpose(conv_w, (2, 0, 1))),
            ("conv_bias", conv_b),
            ("dense1_weights", d1_w),
            ("dense1_bias", d1_b),
            ("output_weights", o_w),
            ("output_bias", o_b),
        ],
    )

    parity = []
    for i in test_idx[:10]:
        p = float(model.predict(x[i : i + 1], verbose=0)[0, 0])
        parity.append({"text": texts[i], "probability": round(p, 6)})
    with open(os.path.join(args.out, "parity.json"), "w") as f:
        json.dump(parity, f, indent=1)

    hob = [t for t in texts if t.startswith("Hobgoblins is a very cheap")][0]
    with open(os.path.join(args.out, "hobgoblins.txt"), "w") as f:
        f.write(hob.strip() + "\n")

    vdir = os.path.join(args.out, "validation")
    os.makedirs(vdir, exist_ok=True)
    for n, i in enumerate(val_idx[:300]):
        with open(os.path.join(vdir, f"review_{n:04d}.txt"), "w") as f:
            f.write(texts[i].strip() + "\n")

    with open(os.path.join(args.out, "test_sample.jsonl"), "w") as f:
        for i in test_idx[:500]:
            f.write(json.dumps({"text": texts[i], "label": int(labels[i])}) + "\n")

    with open(os.path.join(args.out, "training_report.json"), "w") as f:
        json.dump(
            {
                "train_reviews": int(len(train_idx)),
                "validation_reviews": int(len(val_idx)),
                "test_reviews": int(len(test_idx)),
                "test_accuracy": acc,
                "test_precision": prec,
                "test_recall": rec,
                "test_f1": f1,
                "seed": args.seed,
                "tensorflow": tf.__version__,
            },
            f,
            indent=1,
        )


if __name__ == "__main__":
    main()
