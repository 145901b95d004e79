import numpy as np
import pytest

from asc.model import ModelConfig, ModelWeights, tensor_shapes


def make_model(num_layers=2, hidden_dim=8, num_heads=2, ffn_dim=16, vocab_size=20,
               max_seq_len=16, norm_mode="standard", seed=0):
    """Random weights of the right shapes; no planted structure."""
    config = ModelConfig(
        vocab_size=vocab_size,
        num_layers=num_layers,
        hidden_dim=hidden_dim,
        num_heads=num_heads,
        ffn_dim=ffn_dim,
        max_seq_len=max_seq_len,
        norm_mode=norm_mode,
    )
    rng = np.random.default_rng(seed)
    tensors = {
        name: rng.standard_normal(shape).astype(np.float32)
        for name, shape in tensor_shapes(config).items()
    }
    return config, ModelWeights(tensors)


@pytest.fixture
def tiny_model():
    return make_model()
