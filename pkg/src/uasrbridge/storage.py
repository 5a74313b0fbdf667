"""On-disk formats: the feature container, plain-text phoneme corpora, and
the shared checkpoint container used by every trainable artifact.

Binary layouts are little-endian and self-describing. Loaders validate
magic, version, and declared payload sizes against the actual file size
before any size-proportional allocation is trusted.
"""

from __future__ import annotations

import struct

import numpy as np

from .world import FeatureSequence, PhonemeSequence, Vocabulary

FEATURE_MAGIC = b"UASB-FTR"
CHECKPOINT_MAGIC = b"UASB-CKPT"
FORMAT_VERSION = 1

# checkpoint entry payload types
_DTYPE_TAGS = {1: np.dtype("<f4"), 2: np.dtype("<u2"), 3: np.dtype("<u1"),
               4: np.dtype("<i8")}
_TAG_FOR_KIND = {"f": 1, "u2": 2, "u1": 3, "i8": 4}


class StorageError(IOError):
    """Malformed or unreadable artifact file."""


class BadMagic(StorageError):
    pass


class BadVersion(StorageError):
    pass


class Truncated(StorageError):
    pass


class UnknownToken(StorageError):
    pass


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if n < 0 or self.off + n > len(self.blob):
            raise Truncated(f"{self.path}: truncated file (needed {n} bytes "
                            f"at offset {self.off}, have {len(self.blob)})")
        out = self.blob[self.off:self.off + n]
        self.off += n
        return out

    def u8(self):
        return self.take(1)[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def u64(self):
        return struct.unpack("<Q", self.take(8))[0]

    def done(self):
        if self.off != len(self.blob):
            raise Truncated(f"{self.path}: {len(self.blob) - self.off} "
                            "trailing bytes after the last record")


def _check_header(r: _Reader, magic: bytes):
    got = r.take(len(magic))
    if got != magic:
        raise BadMagic(f"{r.path}: bad magic {got!r}, expected {magic!r}")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise BadVersion(f"{r.path}: unsupported version {version}")


# ---------------------------------------------------------------------------
# feature container


def save_features(path, items: list[FeatureSequence]):
    chunks = [FEATURE_MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(items))]
    for item in items:
        ident = item.id.encode("utf-8")
        t, d = item.frames.shape
        has_align = item.gold_alignment is not None
        chunks.append(struct.pack("<I", len(ident)))
        chunks.append(ident)
        chunks.append(struct.pack("<QQB", t, d, int(has_align)))
        chunks.append(np.ascontiguousarray(item.frames, dtype="<f4").tobytes())
        if has_align:
            chunks.append(np.ascontiguousarray(
                item.gold_alignment, dtype="<u2").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_features(path) -> list[FeatureSequence]:
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    _check_header(r, FEATURE_MAGIC)
    count = r.u64()
    items = []
    for _ in range(count):
        ident = r.take(r.u32()).decode("utf-8")
        t = r.u64()
        d = r.u64()
        has_align = r.u8()
        frames = np.frombuffer(r.take(t * d * 4), dtype="<f4").reshape(t, d)
        align = None
        if has_align:
            align = np.frombuffer(r.take(t * 2), dtype="<u2").astype(np.int64)
        items.append(FeatureSequence(ident, frames.copy(), align))
    r.done()
    return items


# ---------------------------------------------------------------------------
# text corpus: one utterance per line, space-separated token strings


def save_text(path, items: list[PhonemeSequence], vocab: Vocabulary):
    lines = []
    for item in items:
        lines.append(" ".join(vocab.tokens[t] for t in item.tokens))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        if lines:
            fh.write("\n")


def load_text(path, vocab: Vocabulary) -> list[PhonemeSequence]:
    index = {tok: i for i, tok in enumerate(vocab.tokens)}
    items = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            ids = []
            for tok in parts:
                if tok not in index:
                    raise UnknownToken(
                        f"{path}: unknown token '{tok}' on line {lineno}")
                ids.append(index[tok])
            items.append(PhonemeSequence(f"utt{lineno:05d}", ids))
    return items


# ---------------------------------------------------------------------------
# checkpoint container: named arrays, round-trips byte-exactly


def _tag_for(arr: np.ndarray) -> int:
    if arr.dtype == np.float32:
        return 1
    if arr.dtype == np.uint16:
        return 2
    if arr.dtype == np.uint8:
        return 3
    if arr.dtype == np.int64:
        return 4
    raise ValueError(f"unsupported checkpoint dtype {arr.dtype}")


def save_checkpoint(path, entries: dict[str, np.ndarray]):
    chunks = [CHECKPOINT_MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(entries))]
    for name, arr in entries.items():
        arr = np.ascontiguousarray(arr)
        encoded = name.encode("utf-8")
        tag = _tag_for(arr)
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", tag, arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(arr.astype(arr.dtype.newbyteorder("<")).tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    _check_header(r, CHECKPOINT_MAGIC)
    count = r.u64()
    entries = {}
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        tag = r.u8()
        if tag not in _DTYPE_TAGS:
            raise StorageError(f"{path}: unknown dtype tag {tag} for '{name}'")
        ndim = r.u8()
        dims = struct.unpack(f"<{ndim}Q", r.take(8 * ndim))
        dtype = _DTYPE_TAGS[tag]
        n = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        raw = r.take(n * dtype.itemsize)
        entries[name] = np.frombuffer(raw, dtype=dtype).reshape(dims).copy()
    r.done()
    return entries


def pack_strings(strings: list[str]) -> np.ndarray:
    """Encode a string list as a u8 blob entry (newline separated)."""
    return np.frombuffer("\n".join(strings).encode("utf-8"), dtype=np.uint8).copy()


def unpack_strings(blob: np.ndarray) -> list[str]:
    return bytes(blob.astype(np.uint8)).decode("utf-8").split("\n")
