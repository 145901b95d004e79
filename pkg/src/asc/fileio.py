"""Small file helpers: atomic writes and content fingerprints."""

import contextlib
import hashlib
import os
import tempfile


@contextlib.contextmanager
def atomic_write(path, mode="w"):
    """Write to a temp file next to `path` and rename on success.

    On any exception the temp file is removed, so a failed command never
    leaves a partial output behind.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, mode) as handle:
            yield handle
        os.replace(tmp_path, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp_path)
        raise


def sha256_file(path):
    """Hex SHA-256 of a file's bytes; used to fingerprint matrix files."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
