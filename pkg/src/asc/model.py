"""Model container: architecture config, canonical weight schema, binary file I/O.

File layout: bytes 0-7 magic ``ASCMODL1``, bytes 8-11 header length
(u32 little-endian), then a UTF-8 JSON header
``{version, config{...}, tensors{name: {shape, dtype, offset}}}``,
then the payload of raw little-endian float32 values. Tensor offsets are
relative to the payload start and 8-byte aligned.
"""

import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import FormatError, ValidationError
from .fileio import atomic_write

MAGIC = b"ASCMODL1"
FORMAT_VERSION = 1
NORM_MODES = ("standard", "none")


@dataclass
class ModelConfig:
    """Hyperparameters of an encoder stack plus the provenance of its layers.

    ``layer_ids`` holds the original 1-based encoder-layer index of each
    surviving layer so pruned models can report removals in the numbering
    of the model they came from. Unpruned models carry ``(1, ..., L)``.
    """

    vocab_size: int
    num_layers: int
    hidden_dim: int
    num_heads: int
    ffn_dim: int
    max_seq_len: int
    norm_mode: str = "standard"
    layer_ids: tuple = ()

    def __post_init__(self):
        if not self.layer_ids:
            self.layer_ids = tuple(range(1, self.num_layers + 1))
        else:
            self.layer_ids = tuple(int(i) for i in self.layer_ids)

    def validate(self):
        for name in ("vocab_size", "hidden_dim", "num_heads", "ffn_dim", "max_seq_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValidationError(f"config: {name} must be a positive int, got {value!r}")
        # num_layers may legitimately reach 0: pruning every encoder layer
        # leaves an embedding-only model.
        if not isinstance(self.num_layers, int) or self.num_layers < 0:
            raise ValidationError(f"config: num_layers must be >= 0, got {self.num_layers!r}")
        if self.hidden_dim % self.num_heads != 0:
            raise ValidationError(
                f"config: d mod h != 0 (hidden_dim={self.hidden_dim}, num_heads={self.num_heads})"
            )
        if self.norm_mode not in NORM_MODES:
            raise ValidationError(f"config: unknown norm_mode {self.norm_mode!r}")
        if len(self.layer_ids) != self.num_layers:
            raise ValidationError(
                f"config: layer_ids has {len(self.layer_ids)} entries for {self.num_layers} layers"
            )
        if any(i < 1 for i in self.layer_ids):
            raise ValidationError(f"config: layer_ids must be >= 1, got {self.layer_ids}")
        if any(a >= b for a, b in zip(self.layer_ids, self.layer_ids[1:])):
            raise ValidationError(f"config: layer_ids not strictly increasing: {self.layer_ids}")

    def to_dict(self):
        data = asdict(self)
        data["layer_ids"] = list(self.layer_ids)
        return data

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise FormatError("config: expected a JSON object")
        required = {"vocab_size", "num_layers", "hidden_dim", "num_heads",
                    "ffn_dim", "max_seq_len", "norm_mode", "layer_ids"}
        missing = required - set(data)
        if missing:
            raise FormatError(f"config: missing fields {sorted(missing)}")
        extra = set(data) - required
        if extra:
            raise FormatError(f"config: unknown fields {sorted(extra)}")
        try:
            return cls(
                vocab_size=int(data["vocab_size"]),
                num_layers=int(data["num_layers"]),
                hidden_dim=int(data["hidden_dim"]),
                num_heads=int(data["num_heads"]),
                ffn_dim=int(data["ffn_dim"]),
                max_seq_len=int(data["max_seq_len"]),
                norm_mode=str(data["norm_mode"]),
                layer_ids=tuple(int(i) for i in data["layer_ids"]),
            )
        except (TypeError, ValueError) as exc:
            raise FormatError(f"config: malformed field values ({exc})") from exc


@dataclass
class ModelWeights:
    """Named weight tensors keyed by the canonical naming scheme."""

    tensors: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def names(self):
        return self.tensors.keys()


def tensor_shapes(config: ModelConfig) -> dict:
    """Canonical tensor name -> shape map for a given config.

    Layer keys count surviving layers from 0, so surgery renumbers
    deterministically. This map is the single source of truth for
    validation, serialization, and synthesis.
    """
    d, f = config.hidden_dim, config.ffn_dim
    shapes = {
        "embed.token": (config.vocab_size, d),
        "embed.pos": (config.max_seq_len, d),
    }
    for k in range(config.num_layers):
        prefix = f"layer.{k}"
        for proj in ("q", "k", "v", "o"):
            shapes[f"{prefix}.attn.{proj}.w"] = (d, d)
            shapes[f"{prefix}.attn.{proj}.b"] = (d,)
        shapes[f"{prefix}.ffn.w1"] = (d, f)
        shapes[f"{prefix}.ffn.b1"] = (f,)
        shapes[f"{prefix}.ffn.w2"] = (f, d)
        shapes[f"{prefix}.ffn.b2"] = (d,)
        for ln in ("ln1", "ln2"):
            shapes[f"{prefix}.{ln}.g"] = (d,)
            shapes[f"{prefix}.{ln}.b"] = (d,)
    return shapes


def validate_weights(config: ModelConfig, weights: ModelWeights):
    """Check the tensor name set, shapes, dtype, and finiteness."""
    expected = tensor_shapes(config)
    names = set(weights.tensors)
    missing = sorted(set(expected) - names)
    if missing:
        raise ValidationError(f"weights: missing tensors {missing}")
    extra = sorted(names - set(expected))
    if extra:
        raise ValidationError(f"weights: unexpected tensors {extra}")
    for name, shape in expected.items():
        tensor = weights.tensors[name]
        if tuple(tensor.shape) != shape:
            raise ValidationError(
                f"weights: tensor {name!r} has shape {tuple(tensor.shape)}, expected {shape}"
            )
        if tensor.dtype != np.float32:
            raise ValidationError(f"weights: tensor {name!r} has dtype {tensor.dtype}, expected float32")
        if not np.all(np.isfinite(tensor)):
            raise ValidationError(f"weights: tensor {name!r} contains non-finite values")


def _align8(offset: int) -> int:
    return (offset + 7) & ~7


def _payload_layout(config: ModelConfig):
    """Canonical (name, offset, nbytes) layout plus total payload size."""
    entries = []
    offset = 0
    for name, shape in tensor_shapes(config).items():
        offset = _align8(offset)
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        entries.append((name, offset, nbytes))
        offset += nbytes
    return entries, offset


def save_model(config: ModelConfig, weights: ModelWeights, path):
    """Write the container file; rejects invalid models before touching disk."""
    config.validate()
    validate_weights(config, weights)
    entries, payload_len = _payload_layout(config)
    shapes = tensor_shapes(config)
    header = {
        "version": FORMAT_VERSION,
        "config": config.to_dict(),
        "tensors": {
            name: {"shape": list(shapes[name]), "dtype": "f32", "offset": offset}
            for name, offset, _ in entries
        },
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    try:
        with atomic_write(path, "wb") as handle:
            handle.write(MAGIC)
            handle.write(struct.pack("<I", len(header_bytes)))
            handle.write(header_bytes)
            cursor = 0
            for name, offset, nbytes in entries:
                if offset > cursor:
                    handle.write(b"\0" * (offset - cursor))
                    cursor = offset
                handle.write(weights.tensors[name].astype("<f4", copy=False).tobytes())
                cursor += nbytes
    except OSError as exc:
        raise OSError(f"failed to write model file {path}: {exc}") from exc


def load_model(path):
    """Read and fully validate a container file.

    Every malformed input raises FormatError or ValidationError; a partially
    constructed model is never returned.
    """
    try:
        with open(path, "rb") as handle:
            blob = handle.read()
    except OSError as exc:
        raise OSError(f"failed to read model file {path}: {exc}") from exc

    if len(blob) < len(MAGIC) + 4:
        raise FormatError(f"{path}: file too short for magic and header length")
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:len(MAGIC)]!r}")
    (header_len,) = struct.unpack("<I", blob[len(MAGIC): len(MAGIC) + 4])
    header_start = len(MAGIC) + 4
    if header_len == 0 or header_start + header_len > len(blob):
        raise FormatError(f"{path}: truncated header (claims {header_len} bytes)")
    try:
        header = json.loads(blob[header_start: header_start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unparseable header ({exc})") from exc
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header is not a JSON object")
    if header.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unknown format version {header.get('version')!r}")
    if set(header) != {"version", "config", "tensors"}:
        raise FormatError(f"{path}: header fields must be version/config/tensors, got {sorted(header)}")

    config = ModelConfig.from_dict(header["config"])
    try:
        config.validate()
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc

    expected_shapes = tensor_shapes(config)
    described = header["tensors"]
    if not isinstance(described, dict):
        raise FormatError(f"{path}: tensors section is not a JSON object")
    missing = sorted(set(expected_shapes) - set(described))
    if missing:
        raise FormatError(f"{path}: missing tensors {missing}")
    extra = sorted(set(described) - set(expected_shapes))
    if extra:
        raise FormatError(f"{path}: unexpected tensors {extra}")

    payload = blob[header_start + header_len:]
    _, payload_len = _payload_layout(config)
    if len(payload) < payload_len:
        raise FormatError(
            f"{path}: truncated payload ({len(payload)} bytes, header claims {payload_len})"
        )
    if len(payload) > payload_len:
        raise FormatError(
            f"{path}: payload length mismatch ({len(payload)} bytes, expected {payload_len})"
        )

    intervals = []
    tensors = {}
    for name, shape in expected_shapes.items():
        entry = described[name]
        if not isinstance(entry, dict) or set(entry) != {"shape", "dtype", "offset"}:
            raise FormatError(f"{path}: tensor {name!r} entry must have shape/dtype/offset")
        if entry["dtype"] != "f32":
            raise FormatError(f"{path}: tensor {name!r} has unsupported dtype {entry['dtype']!r}")
        if tuple(entry["shape"]) != shape:
            raise FormatError(
                f"{path}: tensor {name!r} has shape {entry['shape']}, expected {list(shape)}"
            )
        offset = entry["offset"]
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        if not isinstance(offset, int) or offset < 0 or offset % 8 != 0:
            raise FormatError(f"{path}: tensor {name!r} offset {offset!r} not a non-negative multiple of 8")
        if offset + nbytes > len(payload):
            raise FormatError(f"{path}: tensor {name!r} extends past payload end")
        intervals.append((offset, offset + nbytes, name))
        count = int(np.prod(shape, dtype=np.int64))
        tensors[name] = (
            np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
            .reshape(shape)
            .astype(np.float32)
        )

    intervals.sort()
    for (_, end_a, name_a), (start_b, _, name_b) in zip(intervals, intervals[1:]):
        if start_b < end_a:
            raise FormatError(f"{path}: tensors {name_a!r} and {name_b!r} overlap in payload")

    weights = ModelWeights(tensors)
    validate_weights(config, weights)
    return config, weights
