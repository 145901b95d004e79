"""Token datasets: in-memory form and the plain-text file format.

Dataset files hold one sequence per line as whitespace-separated decimal
token ids; lines starting with ``#`` and blank lines are ignored.
"""

from dataclasses import dataclass, field

from .errors import FormatError, ValidationError
from .fileio import atomic_write


@dataclass
class TokenDataset:
    """An ordered collection of token-id sequences."""

    sequences: list = field(default_factory=list)

    @property
    def total_tokens(self) -> int:
        return sum(len(seq) for seq in self.sequences)

    def __len__(self):
        return len(self.sequences)


def validate_sequence(config, tokens):
    """Check one sequence against a model: non-empty, in-vocab, within max length."""
    if len(tokens) == 0:
        raise ValidationError("sequence is empty")
    if len(tokens) > config.max_seq_len:
        raise ValidationError(
            f"sequence length {len(tokens)} exceeds max_seq_len {config.max_seq_len}"
        )
    for t in tokens:
        if not 0 <= t < config.vocab_size:
            raise ValidationError(
                f"token id {t} out of range [0, {config.vocab_size})"
            )


def load_dataset(path) -> TokenDataset:
    sequences = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                tokens = [int(tok) for tok in stripped.split()]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer token id ({exc})") from exc
            if any(t < 0 for t in tokens):
                raise FormatError(f"{path}:{lineno}: negative token id")
            sequences.append(tokens)
    return TokenDataset(sequences)


def save_dataset(dataset: TokenDataset, path):
    with atomic_write(path) as handle:
        for seq in dataset.sequences:
            handle.write(" ".join(str(t) for t in seq))
            handle.write("\n")
