"""Model bundles: a single binary file holding vectorizer, parameters, the
component mask used at train time, and run metadata.

Layout: magic, big-endian format version, section count, then length-prefixed
named sections, then a SHA-256 checksum of everything before it. Embedding
tables are referenced (path + content hash, or a seed for random tables)
rather than embedded.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
import time
from dataclasses import dataclass

import numpy as np

from . import classical, featurize, lstm, names_core
from .classical import (
    BernoulliNbModel,
    DecisionTreeModel,
    LinearSvmModel,
    LogisticRegressionModel,
    MultinomialNbModel,
    Prediction,
    RandomForestModel,
    TreeNode,
)
from .errors import BundleError, BundleFormatError, BundleVersionError
from .featurize import VectorizerConfig, Vocabulary
from .names_core import ComponentMask

MAGIC = b"VNGBUNDL"
FORMAT_VERSION = 1


@dataclass
class LstmPayload:
    params: lstm.LstmParams
    cfg: lstm.LstmTrainConfig
    embedding_source: dict


@dataclass
class ModelBundle:
    format_version: int
    model_kind: str
    component_mask: ComponentMask
    vectorizer_cfg: VectorizerConfig | None
    vocabulary: Vocabulary | None
    model: object                      # classical model or LstmPayload
    train_meta: dict
    model_id: str


# ---------------------------------------------------------------------------
# Section encoding
# ---------------------------------------------------------------------------

def _pack_sections(sections: list[tuple[str, bytes]]) -> bytes:
    out = bytearray(MAGIC)
    out += struct.pack(">I", FORMAT_VERSION)
    out += struct.pack(">I", len(sections))
    for name, payload in sections:
        encoded = name.encode("utf-8")
        out += struct.pack(">H", len(encoded)) + encoded
        out += struct.pack(">Q", len(payload)) + payload
    out += hashlib.sha256(bytes(out)).digest()
    return bytes(out)


def _unpack_sections(blob: bytes) -> dict[str, bytes]:
    if len(blob) < len(MAGIC) + 8:
        raise BundleFormatError("truncated bundle file")
    if blob[: len(MAGIC)] != MAGIC:
        raise BundleFormatError("not a model bundle (bad magic string)")
    version = struct.unpack(">I", blob[8:12])[0]
    if version != FORMAT_VERSION:
        raise BundleVersionError(
            f"bundle format version {version}; this reader supports version {FORMAT_VERSION}"
        )
    if len(blob) < 16 + 32:
        raise BundleFormatError("truncated bundle file")
    body, checksum = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != checksum:
        raise BundleFormatError("bundle checksum mismatch")
    count = struct.unpack(">I", blob[12:16])[0]
    sections: dict[str, bytes] = {}
    offset = 16
    for _ in range(count):
        if offset + 2 > len(body):
            raise BundleFormatError("truncated bundle file")
        (name_len,) = struct.unpack(">H", body[offset:offset + 2])
        offset += 2
        name = body[offset:offset + name_len].decode("utf-8")
        offset += name_len
        if offset + 8 > len(body):
            raise BundleFormatError("truncated bundle file")
        (payload_len,) = struct.unpack(">Q", body[offset:offset + 8])
        offset += 8
        payload = body[offset:offset + payload_len]
        if len(payload) != payload_len:
            raise BundleFormatError("truncated bundle file")
        sections[name] = payload
        offset += payload_len
    return sections


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, ensure_ascii=False).encode("utf-8")


# ---------------------------------------------------------------------------
# Model payload encoding
# ---------------------------------------------------------------------------

def _encode_classical(model) -> bytes:
    kind = model.kind
    body: dict = {"kind": kind, "n_features": model.n_features,
                  "train_meta": model.train_meta}
    if kind == "multinomial_nb":
        body["class_log_prior"] = model.class_log_prior.tolist()
        body["feature_log_prob"] = model.feature_log_prob.tolist()
    elif kind == "bernoulli_nb":
        body["class_log_prior"] = model.class_log_prior.tolist()
        body["log_presence"] = model.log_presence.tolist()
        body["log_absence"] = model.log_absence.tolist()
    elif kind in ("logistic_regression", "linear_svm"):
        body["weights"] = model.weights.tolist()
        body["bias"] = model.bias
    elif kind == "decision_tree":
        body["nodes"] = _encode_nodes(model.nodes)
    elif kind == "random_forest":
        body["trees"] = [_encode_nodes(t.nodes) for t in model.trees]
        body["tree_meta"] = [t.train_meta for t in model.trees]
    else:
        raise BundleError(f"cannot serialize model kind {kind!r}")
    return _json_bytes(body)


def _encode_nodes(nodes: list[TreeNode]) -> list[list]:
    return [[n.feature, n.threshold, n.left, n.right, n.p1, n.n] for n in nodes]


def _decode_nodes(raw: list[list]) -> list[TreeNode]:
    return [TreeNode(int(f), float(t), int(l), int(r), float(p1), int(n))
            for f, t, l, r, p1, n in raw]


def _decode_classical(payload: bytes):
    body = json.loads(payload.decode("utf-8"))
    kind = body["kind"]
    v = int(body["n_features"])
    meta = body["train_meta"]
    if kind == "multinomial_nb":
        return MultinomialNbModel(
            np.array(body["class_log_prior"]), np.array(body["feature_log_prob"]),
            v, meta,
        )
    if kind == "bernoulli_nb":
        return BernoulliNbModel(
            np.array(body["class_log_prior"]), np.array(body["log_presence"]),
            np.array(body["log_absence"]), v, meta,
        )
    if kind == "logistic_regression":
        return LogisticRegressionModel(
            np.array(body["weights"]), float(body["bias"]), v, meta
        )
    if kind == "linear_svm":
        return LinearSvmModel(np.array(body["weights"]), float(body["bias"]), v, meta)
    if kind == "decision_tree":
        return DecisionTreeModel(_decode_nodes(body["nodes"]), v, meta)
    if kind == "random_forest":
        trees = [
            DecisionTreeModel(_decode_nodes(nodes), v, tmeta)
            for nodes, tmeta in zip(body["trees"], body["tree_meta"])
        ]
        return RandomForestModel(trees, v, meta)
    raise BundleError(f"cannot deserialize model kind {kind!r}")


def _encode_lstm(payload: LstmPayload) -> tuple[bytes, bytes]:
    buf = io.BytesIO()
    np.savez(buf, **payload.params.tensors())
    meta = {
        "cfg": {
            "batch_size": payload.cfg.batch_size,
            "epochs": payload.cfg.epochs,
            "learning_rate": payload.cfg.learning_rate,
            "max_seq_len": payload.cfg.max_seq_len,
            "hidden": payload.cfg.hidden,
            "seed": payload.cfg.seed,
        },
        "embedding_source": payload.embedding_source,
    }
    return buf.getvalue(), _json_bytes(meta)


def _decode_lstm(params_blob: bytes, meta_blob: bytes) -> LstmPayload:
    with np.load(io.BytesIO(params_blob)) as archive:
        tensors = {name: archive[name] for name in archive.files}
    params = lstm.LstmParams(**tensors)
    meta = json.loads(meta_blob.decode("utf-8"))
    cfg = lstm.LstmTrainConfig(**meta["cfg"])
    return LstmPayload(params, cfg, meta["embedding_source"])


def _resolve_embeddings(source: dict) -> lstm.EmbeddingTable:
    if source.get("kind") == "random":
        return lstm.random_embeddings(source["dim"], source["seed"])
    if source.get("kind") == "vec_file":
        path = source["path"]
        try:
            actual = hashlib.sha256(open(path, "rb").read()).hexdigest()
        except FileNotFoundError as exc:
            raise BundleError(f"referenced embedding file missing: {path}") from exc
        if actual != source["sha256"]:
            raise BundleError(f"embedding file content changed: {path}")
        return lstm.load_embeddings(path, source["dim"], oov_seed=source.get("oov_seed", 0))
    raise BundleError(f"unknown embedding source {source.get('kind')!r}")


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def make_bundle(
    model,
    component_mask: ComponentMask,
    vectorizer_cfg: VectorizerConfig | None = None,
    vocabulary: Vocabulary | None = None,
    train_meta: dict | None = None,
) -> ModelBundle:
    """Assemble a bundle and derive its model_id from the payload bytes."""
    meta = dict(train_meta or {})
    meta.setdefault("created_unix", int(time.time()))
    if isinstance(model, LstmPayload):
        kind = "lstm"
        params_blob, lstm_meta = _encode_lstm(model)
        digest = hashlib.sha256(params_blob + lstm_meta).hexdigest()
    else:
        kind = model.kind
        if vectorizer_cfg is None or vocabulary is None:
            raise BundleError("classical bundles need a vectorizer config and vocabulary")
        payload = _encode_classical(model)
        digest = hashlib.sha256(payload + _encode_vocab(vocabulary)).hexdigest()
    model_id = f"{kind}-{digest[:12]}"
    return ModelBundle(
        format_version=FORMAT_VERSION,
        model_kind=kind,
        component_mask=component_mask,
        vectorizer_cfg=vectorizer_cfg,
        vocabulary=vocabulary,
        model=model,
        train_meta=meta,
        model_id=model_id,
    )


def _encode_vocab(vocabulary: Vocabulary) -> bytes:
    return _json_bytes({
        "tokens": list(vocabulary.tokens),
        "doc_freq": vocabulary.doc_freq.tolist(),
        "n_docs": vocabulary.n_docs,
    })


def _decode_vocab(payload: bytes) -> Vocabulary:
    body = json.loads(payload.decode("utf-8"))
    tokens = tuple(body["tokens"])
    return Vocabulary(
        tokens,
        {tok: i for i, tok in enumerate(tokens)},
        np.array(body["doc_freq"], dtype=np.int64),
        int(body["n_docs"]),
    )


def save_model(bundle: ModelBundle, path) -> None:
    meta = {
        "model_kind": bundle.model_kind,
        "mask": bundle.component_mask.label,
        "model_id": bundle.model_id,
        "train_meta": bundle.train_meta,
        "vectorizer": (
            {"mode": bundle.vectorizer_cfg.mode,
             "max_features": bundle.vectorizer_cfg.max_features}
            if bundle.vectorizer_cfg else None
        ),
    }
    sections = [("meta", _json_bytes(meta))]
    if bundle.model_kind == "lstm":
        params_blob, lstm_meta = _encode_lstm(bundle.model)
        sections.append(("lstm_params", params_blob))
        sections.append(("lstm_meta", lstm_meta))
    else:
        sections.append(("vocabulary", _encode_vocab(bundle.vocabulary)))
        sections.append(("model", _encode_classical(bundle.model)))
    with open(path, "wb") as fh:
        fh.write(_pack_sections(sections))


def load_model(path) -> ModelBundle:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError as exc:
        raise BundleError(f"bundle file not found: {path}") from exc
    sections = _unpack_sections(blob)
    try:
        meta = json.loads(sections["meta"].decode("utf-8"))
    except KeyError as exc:
        raise BundleFormatError("bundle is missing its meta section") from exc
    mask = names_core.parse_mask(meta["mask"])
    vcfg = None
    if meta.get("vectorizer"):
        vcfg = VectorizerConfig(
            meta["vectorizer"]["mode"], meta["vectorizer"]["max_features"]
        )
    if meta["model_kind"] == "lstm":
        model = _decode_lstm(sections["lstm_params"], sections["lstm_meta"])
        vocabulary = None
    else:
        vocabulary = _decode_vocab(sections["vocabulary"])
        model = _decode_classical(sections["model"])
    return ModelBundle(
        format_version=FORMAT_VERSION,
        model_kind=meta["model_kind"],
        component_mask=mask,
        vectorizer_cfg=vcfg,
        vocabulary=vocabulary,
        model=model,
        train_meta=meta["train_meta"],
        model_id=meta["model_id"],
    )


def bundle_predict(bundle: ModelBundle, raw_name: str) -> dict:
    """Full pipeline for one name; returns the wire-format response dict."""
    normalized = names_core.normalize(raw_name)
    comps = names_core.segment(normalized)
    tokens = names_core.select_components(comps, bundle.component_mask)
    if bundle.model_kind == "lstm":
        payload: LstmPayload = bundle.model
        emb = _embeddings_for(bundle)
        pred = lstm.predict_lstm(tokens, emb, payload.params, payload.cfg.max_seq_len)
    else:
        vec = featurize.transform(tokens, bundle.vocabulary, bundle.vectorizer_cfg)
        pred = classical.predict(bundle.model, vec)
    return {
        "label": pred.label,
        "gender": "male" if pred.label == 1 else "female",
        "score": pred.score,
        "components": {
            "family": comps.family,
            "middle": list(comps.middle),
            "given": comps.given,
        },
        "model_id": bundle.model_id,
    }


def _embeddings_for(bundle: ModelBundle) -> lstm.EmbeddingTable:
    payload: LstmPayload = bundle.model
    cached = getattr(bundle, "_embeddings", None)
    if cached is None:
        cached = _resolve_embeddings(payload.embedding_source)
        bundle._embeddings = cached
    return cached
