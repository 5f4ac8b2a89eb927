"""Seeded Gaussian random projection and 1-bit quantization.

The projection matrix is never stored: entry (i, j) is regenerated on demand
from (seed, i, j) via the counter-based generator, so projecting a sparse
vector touches only its support rows and any batch of work reproduces
bit-identically regardless of order or parallelism.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .errors import ConfigError, DomainError, ShapeError, SketchFormatError
from .vectors import Corpus, DataVector

_MAGIC = b"SFRP"
_VERSION = 1
KIND_SIGN = 0x00
KIND_FULL = 0x01

_POPCOUNT = np.array([bin(b).count("1") for b in range(256)], dtype=np.uint16)

# rows with more scratch entries than this are regenerated per vector
_ROW_CACHE_LIMIT = 50_000_000


@dataclass(frozen=True)
class ProjectionConfig:
    """Number of projections k and the 64-bit seed of the implicit matrix."""

    k: int
    seed: int

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        object.__setattr__(self, "seed", int(self.seed) & rng.MASK64)


def sum_product(a: np.ndarray, b: np.ndarray) -> float:
    """sum(a*b) via elementwise multiply + pairwise sum.

    Deliberately not BLAS dot: the same reduction is used on matrix rows in
    the batch and simulation lanes, so scalar and vectorized paths stay
    bitwise-identical.
    """
    return float(np.multiply(a, b).sum())


@dataclass(frozen=True)
class FullSketch:
    """k projected coordinates plus their cached sum of squares."""

    values: np.ndarray
    sumsq: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ShapeError("sketch values must be 1-D")
        recomputed = sum_product(values, values)
        if self.sumsq is None:
            object.__setattr__(self, "sumsq", recomputed)
        elif not math.isclose(self.sumsq, recomputed, rel_tol=1e-9, abs_tol=1e-300):
            raise SketchFormatError(
                f"stored sumsq {self.sumsq!r} inconsistent with values ({recomputed!r})")
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class SignSketch:
    """k projection signs, bit-packed little-endian within bytes.

    Bit j lives at bit (j mod 8) of byte j // 8 and is 1 iff the projected
    value was >= 0.  Pad bits of the final byte are zero.
    """

    bits: np.ndarray
    k: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if self.k < 0 or bits.ndim != 1 or bits.size != (self.k + 7) // 8:
            raise ShapeError(f"expected {(self.k + 7) // 8} packed bytes for k={self.k}")
        pad = self.k % 8
        if pad and bits.size and (int(bits[-1]) & (0xFF << pad)) != 0:
            raise SketchFormatError("nonzero pad bits in final byte")
        object.__setattr__(self, "bits", bits)


def gaussian_entry(seed: int, row: int, col: int) -> float:
    """Standard-normal entry (row, col) of the implicit projection matrix."""
    return float(rng.normals(seed, row, col))


def project(u: DataVector, cfg: ProjectionConfig) -> FullSketch:
    """Project u onto k seeded Gaussian directions: value_j = sum_i u_i R[i,j]."""
    if u.nnz == 0:
        raise DomainError("cannot project an empty vector")
    rows = rng.normal_grid(cfg.seed, u.indices, cfg.k)
    values = u.values @ rows
    return FullSketch(values)


def project_corpus(corpus: Corpus | Sequence[DataVector],
                   cfg: ProjectionConfig) -> list[FullSketch]:
    """Project many vectors; bit-identical to calling project() in a loop.

    The rows for the union of supports are materialized once when that fits
    in memory; each vector still reduces over its own support in index order,
    so the floating-point result matches the scalar path exactly.
    """
    vectors = list(corpus)
    if not vectors:
        return []
    union = np.unique(np.concatenate([v.indices for v in vectors]))
    if union.size * cfg.k > _ROW_CACHE_LIMIT:
        return [project(v, cfg) for v in vectors]
    table = rng.normal_grid(cfg.seed, union, cfg.k)
    out = []
    for v in vectors:
        if v.nnz == 0:
            raise DomainError("cannot project an empty vector")
        rows = table[np.searchsorted(union, v.indices)]
        out.append(FullSketch(v.values @ rows))
    return out


def sign_quantize(s: FullSketch) -> SignSketch:
    """Keep only the signs: bit j = 1 iff value_j >= 0 (so sgn(0) maps to +)."""
    bits = np.packbits(s.values >= 0.0, bitorder="little")
    return SignSketch(bits, s.k)


def sign_array(s: SignSketch) -> np.ndarray:
    """Signs as a float64 array of +1/-1, length k."""
    unpacked = np.unpackbits(s.bits, count=s.k, bitorder="little")
    return unpacked.astype(np.float64) * 2.0 - 1.0


def popcount(arr: np.ndarray) -> np.ndarray:
    """Per-byte set-bit counts via a 256-entry table."""
    return _POPCOUNT[arr]


def matching_bits(a: SignSketch, b: SignSketch) -> int:
    """Number of positions where the two sketches agree."""
    if a.k != b.k:
        raise ShapeError(f"sketch length mismatch: {a.k} vs {b.k}")
    differing = int(_POPCOUNT[np.bitwise_xor(a.bits, b.bits)].sum())
    return a.k - differing


def save_sketches(path, sketches: Sequence[SignSketch] | Sequence[FullSketch],
                  kind: int | None = None) -> None:
    """Serialize a homogeneous collection of sketches.

    Layout: magic ``SFRP``, version byte, kind byte (0x00 sign / 0x01 full),
    uint32-LE k, uint64-LE count, then the payload: packed sign bytes per
    sketch, or all k-vectors as float64-LE followed by the sumsq values.
    """
    sketches = list(sketches)
    if sketches:
        kinds = {KIND_SIGN if isinstance(s, SignSketch) else KIND_FULL
                 for s in sketches}
        if len(kinds) != 1:
            raise ShapeError("cannot mix sign and full sketches in one file")
        inferred = kinds.pop()
        if kind is not None and kind != inferred:
            raise ShapeError("explicit kind contradicts sketch types")
        kind = inferred
        ks = {s.k for s in sketches}
        if len(ks) != 1:
            raise ShapeError("all sketches in a file must share k")
        k = ks.pop()
    else:
        kind = KIND_SIGN if kind is None else kind
        k = 0
    if kind not in (KIND_SIGN, KIND_FULL):
        raise SketchFormatError(f"unknown sketch kind {kind:#x}")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<BBIQ", _VERSION, kind, k, len(sketches)))
        if kind == KIND_SIGN:
            for s in sketches:
                fh.write(s.bits.tobytes())
        else:
            for s in sketches:
                fh.write(s.values.astype("<f8").tobytes())
            fh.write(np.array([s.sumsq for s in sketches], dtype="<f8").tobytes())


def load_sketches(path) -> list[SignSketch] | list[FullSketch]:
    """Read a sketch file back; the round trip is bit-exact."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 18 or blob[:4] != _MAGIC:
        raise SketchFormatError("bad magic or truncated header")
    version, kind, k, count = struct.unpack("<BBIQ", blob[4:18])
    if version != _VERSION:
        raise SketchFormatError(f"unsupported version {version}")
    payload = blob[18:]
    if kind == KIND_SIGN:
        stride = (k + 7) // 8
        if len(payload) != stride * count:
            raise SketchFormatError("payload length does not match header")
        return [SignSketch(np.frombuffer(payload, dtype=np.uint8,
                                         count=stride, offset=i * stride).copy(), k)
                for i in range(count)]
    if kind == KIND_FULL:
        if len(payload) != 8 * (k + 1) * count:
            raise SketchFormatError("payload length does not match header")
        values = np.frombuffer(payload, dtype="<f8", count=count * k)
        sumsq = np.frombuffer(payload, dtype="<f8", count=count, offset=8 * count * k)
        return [FullSketch(values[i * k:(i + 1) * k].astype(np.float64),
                           float(sumsq[i]))
                for i in range(count)]
    raise SketchFormatError(f"unknown sketch kind {kind:#x}")
