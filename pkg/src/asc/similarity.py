"""All-pairs layer-similarity matrix, accumulated over one forward pass.

Entry (i, j) is the average over all dataset tokens of the cosine
similarity between layer i's and layer j's output vector for that token.
Sums are kept in float64 and divided once at finalize; the result is
mirrored from the upper triangle and the diagonal forced to exactly 1.0.
"""

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError
from .fileio import atomic_write
from .forward import forward_hidden_states
from .model import validate_weights
from .tensor_ops import NORM_EPS

CSV_HEADER_RE = re.compile(r"^# asc-sim v1 layers=(\d+) tokens=(\d+)$")


@dataclass
class SimilarityMatrix:
    """(L+1) x (L+1) symmetric matrix of mean per-token cosine similarities."""

    values: np.ndarray
    token_count: int

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def validate(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"similarity matrix must be square, got shape {v.shape}")
        if v.shape[0] < 2:
            raise ValidationError(f"similarity matrix must be at least 2x2, got {v.shape[0]}")
        if self.token_count < 0:
            raise ValidationError("token_count must be non-negative")
        if not np.all(np.isfinite(v)):
            raise ValidationError("similarity matrix contains non-finite entries")
        if np.any(v < -1.0) or np.any(v > 1.0):
            raise ValidationError("similarity matrix entries must lie in [-1, 1]")
        if not np.array_equal(v, v.T):
            raise ValidationError("similarity matrix is not symmetric")
        if self.token_count > 0 and not np.all(np.diag(v) == 1.0):
            raise ValidationError("similarity matrix diagonal must be exactly 1.0")


class SimilarityAccumulator:
    """Single-writer accumulator of per-token pairwise cosine sums."""

    def __init__(self, size: int):
        if size < 2:
            raise ValidationError(f"accumulator size must be >= 2, got {size}")
        self.size = size
        self._sums = np.zeros((size, size), dtype=np.float64)
        self._count = 0

    @property
    def token_count(self) -> int:
        return self._count

    @property
    def sums(self) -> np.ndarray:
        return self._sums

    def _add(self, stacked: np.ndarray):
        # stacked: (size, n, d) float64. Normalize rows, zeroing dead
        # vectors (norm < NORM_EPS) so their cosine contribution is 0.
        norms = np.sqrt(np.einsum("knd,knd->kn", stacked, stacked))
        dead = norms < NORM_EPS
        norms[dead] = 1.0
        unit = stacked / norms[:, :, None]
        unit[dead] = 0.0
        grams = np.einsum("ind,jnd->nij", unit, unit)
        np.clip(grams, -1.0, 1.0, out=grams)
        self._sums += grams.sum(axis=0)
        self._count += stacked.shape[1]

    def add_frame(self, frame):
        """Accumulate one token's L+1 layer outputs."""
        if len(frame.layer_outputs) != self.size:
            raise ValidationError(
                f"frame has {len(frame.layer_outputs)} layer outputs, accumulator expects {self.size}"
            )
        stacked = np.stack(frame.layer_outputs).astype(np.float64)[:, None, :]
        self._add(stacked)

    def add_states(self, states):
        """Accumulate a whole sequence's hidden states (list of (n, d) arrays)."""
        if len(states) != self.size:
            raise ValidationError(
                f"sequence has {len(states)} hidden states, accumulator expects {self.size}"
            )
        self._add(np.stack(states).astype(np.float64))

    def merge(self, other: "SimilarityAccumulator"):
        if other.size != self.size:
            raise ValidationError(f"cannot merge accumulators of size {other.size} into {self.size}")
        self._sums += other._sums
        self._count += other._count

    def finalize(self) -> SimilarityMatrix:
        if self._count == 0:
            raise ValidationError("cannot finalize: no tokens accumulated")
        mean = self._sums / self._count
        upper = np.triu(mean, k=1)
        values = upper + upper.T
        np.fill_diagonal(values, 1.0)
        np.clip(values, -1.0, 1.0, out=values)
        return SimilarityMatrix(values=values, token_count=self._count)


def new_accumulator(size: int) -> SimilarityAccumulator:
    return SimilarityAccumulator(size)


def analyze(config, weights, dataset, workers: int = 1) -> SimilarityMatrix:
    """Run the dataset through the model once and return the similarity matrix.

    The dataset is sharded by sequence across workers (round-robin); each
    worker owns a private sum matrix and the shards are merged in fixed
    worker order, so results are stable to within addition reordering.
    """
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    config.validate()
    validate_weights(config, weights)
    if dataset.total_tokens == 0:
        raise ValidationError("cannot analyze an empty dataset (0 tokens)")
    size = config.num_layers + 1

    def run_shard(sequences):
        acc = SimilarityAccumulator(size)
        for seq in sequences:
            acc.add_states(forward_hidden_states(config, weights, seq))
        return acc

    if workers == 1:
        return run_shard(dataset.sequences).finalize()

    shards = [dataset.sequences[w::workers] for w in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        partials = list(pool.map(run_shard, shards))
    merged = SimilarityAccumulator(size)
    for part in partials:
        merged.merge(part)
    return merged.finalize()


def write_matrix_csv(matrix: SimilarityMatrix, path):
    """CSV with a `# asc-sim v1` header line and shortest round-trip decimals."""
    matrix.validate()
    with atomic_write(path) as handle:
        handle.write(f"# asc-sim v1 layers={matrix.size} tokens={matrix.token_count}\n")
        for row in matrix.values:
            handle.write(",".join(repr(float(v)) for v in row))
            handle.write("\n")


def load_matrix_csv(path) -> SimilarityMatrix:
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise FormatError(f"{path}:1: empty matrix file")
    match = CSV_HEADER_RE.match(lines[0])
    if not match:
        raise FormatError(f"{path}:1: expected '# asc-sim v1 layers=<n> tokens=<n>' header")
    size, tokens = int(match.group(1)), int(match.group(2))
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != size:
            raise FormatError(f"{path}:{lineno}: expected {size} values, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: unparseable value ({exc})") from exc
    if len(rows) != size:
        raise FormatError(f"{path}: expected {size} matrix rows, got {len(rows)}")
    matrix = SimilarityMatrix(values=np.array(rows, dtype=np.float64), token_count=tokens)
    try:
        matrix.validate()
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return matrix
