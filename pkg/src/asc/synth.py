"""Synthetic models and datasets with planted, analytically known structure.

Identity layers are planted by zeroing the value/output/FFN projections
and their biases with normalization disabled, which makes the block an
exact residual passthrough: its output equals its input bit for bit.
Every other layer is drawn at a weight scale that demonstrably changes
the representation: the generator runs a probe batch through the layer
and retries with a doubled scale until the mean input/output token
cosine falls below SEPARATION_CAP.
"""

import numpy as np

from .data import TokenDataset
from .errors import ValidationError
from .forward import embed, encoder_layer
from .model import ModelConfig, ModelWeights, validate_weights

# Upper bound the generator enforces on the mean cosine between a
# non-identity layer's input and output on its probe batch.
SEPARATION_CAP = 0.8
_MAX_SCALE_RETRIES = 10
_PROBE_SEQUENCES = 4
_PROBE_LEN = 16


def _mean_token_cosine(before: np.ndarray, after: np.ndarray) -> float:
    a = before.astype(np.float64)
    b = after.astype(np.float64)
    norm_a = np.sqrt(np.einsum("nd,nd->n", a, a))
    norm_b = np.sqrt(np.einsum("nd,nd->n", b, b))
    cos = np.einsum("nd,nd->n", a, b) / (norm_a * norm_b)
    return float(np.clip(cos, -1.0, 1.0).mean())


def _identity_layer_tensors(rng, d: int, f: int) -> dict:
    zero_d = np.zeros(d, dtype=np.float32)
    return {
        "attn.q.w": rng.standard_normal((d, d)).astype(np.float32) / np.float32(np.sqrt(d)),
        "attn.q.b": zero_d.copy(),
        "attn.k.w": rng.standard_normal((d, d)).astype(np.float32) / np.float32(np.sqrt(d)),
        "attn.k.b": zero_d.copy(),
        "attn.v.w": np.zeros((d, d), dtype=np.float32),
        "attn.v.b": zero_d.copy(),
        "attn.o.w": np.zeros((d, d), dtype=np.float32),
        "attn.o.b": zero_d.copy(),
        "ffn.w1": np.zeros((d, f), dtype=np.float32),
        "ffn.b1": np.zeros(f, dtype=np.float32),
        "ffn.w2": np.zeros((f, d), dtype=np.float32),
        "ffn.b2": zero_d.copy(),
        "ln1.g": np.ones(d, dtype=np.float32),
        "ln1.b": zero_d.copy(),
        "ln2.g": np.ones(d, dtype=np.float32),
        "ln2.b": zero_d.copy(),
    }


def _mixing_layer_tensors(rng, d: int, f: int, scale: float) -> dict:
    s = np.float32(scale)
    return {
        "attn.q.w": rng.standard_normal((d, d)).astype(np.float32) / np.float32(np.sqrt(d)),
        "attn.q.b": (0.1 * rng.standard_normal(d)).astype(np.float32),
        "attn.k.w": rng.standard_normal((d, d)).astype(np.float32) / np.float32(np.sqrt(d)),
        "attn.k.b": (0.1 * rng.standard_normal(d)).astype(np.float32),
        "attn.v.w": rng.standard_normal((d, d)).astype(np.float32) * s,
        "attn.v.b": (0.1 * rng.standard_normal(d)).astype(np.float32),
        "attn.o.w": rng.standard_normal((d, d)).astype(np.float32) * s,
        "attn.o.b": (0.1 * rng.standard_normal(d)).astype(np.float32),
        "ffn.w1": rng.standard_normal((d, f)).astype(np.float32) * s,
        "ffn.b1": (0.1 * rng.standard_normal(f)).astype(np.float32),
        "ffn.w2": rng.standard_normal((f, d)).astype(np.float32) * s,
        "ffn.b2": (0.1 * rng.standard_normal(d)).astype(np.float32),
        "ln1.g": np.ones(d, dtype=np.float32),
        "ln1.b": np.zeros(d, dtype=np.float32),
        "ln2.g": np.ones(d, dtype=np.float32),
        "ln2.b": np.zeros(d, dtype=np.float32),
    }


def gen_model(num_layers: int, hidden_dim: int, num_heads: int, ffn_dim: int,
              vocab_size: int, identity_layers, seed: int, max_seq_len: int = 128):
    """Deterministically generate a norm-free model with planted identity layers.

    `identity_layers` uses the 1-based encoder indexing shared with the
    similarity matrix (index 0 is the embedding and cannot be planted).
    """
    identity = set(int(i) for i in identity_layers)
    invalid = [i for i in identity if not 1 <= i <= num_layers]
    if invalid:
        raise ValidationError(
            f"identity layers {sorted(invalid)} outside encoder range 1..{num_layers}"
        )
    config = ModelConfig(
        vocab_size=vocab_size,
        num_layers=num_layers,
        hidden_dim=hidden_dim,
        num_heads=num_heads,
        ffn_dim=ffn_dim,
        max_seq_len=max_seq_len,
        norm_mode="none",
    )
    config.validate()

    rng = np.random.default_rng(seed)
    d, f = hidden_dim, ffn_dim
    tensors = {
        "embed.token": rng.standard_normal((vocab_size, d)).astype(np.float32),
        "embed.pos": (0.5 * rng.standard_normal((max_seq_len, d))).astype(np.float32),
    }
    weights = ModelWeights(tensors)

    probe_len = min(_PROBE_LEN, max_seq_len)
    probe_seqs = [
        rng.integers(0, vocab_size, size=probe_len).tolist()
        for _ in range(_PROBE_SEQUENCES)
    ]
    probe_states = [embed(config, weights, seq) for seq in probe_seqs]

    for encoder_index in range(1, num_layers + 1):
        slot = encoder_index - 1
        if encoder_index in identity:
            layer = _identity_layer_tensors(rng, d, f)
            for suffix, tensor in layer.items():
                tensors[f"layer.{slot}.{suffix}"] = tensor
            for state in probe_states:
                out = encoder_layer(config, weights, slot, state)
                assert np.array_equal(out, state), "planted identity layer is not a passthrough"
            continue

        scale = 1.0 / np.sqrt(d)
        accepted = False
        for _ in range(_MAX_SCALE_RETRIES):
            layer = _mixing_layer_tensors(rng, d, f, scale)
            for suffix, tensor in layer.items():
                tensors[f"layer.{slot}.{suffix}"] = tensor
            outputs = [encoder_layer(config, weights, slot, state) for state in probe_states]
            mean_cos = np.mean([
                _mean_token_cosine(state, out)
                for state, out in zip(probe_states, outputs)
            ])
            if mean_cos < SEPARATION_CAP:
                probe_states = outputs
                accepted = True
                break
            scale *= 2.0
        if not accepted:
            raise RuntimeError(
                f"generator could not separate layer {encoder_index} below "
                f"cosine {SEPARATION_CAP} after {_MAX_SCALE_RETRIES} scale retries"
            )

    validate_weights(config, weights)
    return config, weights


def gen_dataset(num_sequences: int, min_len: int, max_len: int,
                vocab_size: int, seed: int) -> TokenDataset:
    """Seeded uniform random token sequences with lengths in [min_len, max_len]."""
    if num_sequences < 0:
        raise ValidationError(f"num_sequences must be >= 0, got {num_sequences}")
    if not 1 <= min_len <= max_len:
        raise ValidationError(f"need 1 <= min_len <= max_len, got {min_len}..{max_len}")
    if vocab_size < 1:
        raise ValidationError(f"vocab_size must be >= 1, got {vocab_size}")
    rng = np.random.default_rng(seed)
    sequences = []
    for _ in range(num_sequences):
        length = int(rng.integers(min_len, max_len + 1))
        sequences.append(rng.integers(0, vocab_size, size=length).tolist())
    return TokenDataset(sequences)
