"""Binary population files and byte-size block splitting.

File layout (all little-endian)::

    magic   8s   b"BLOCKGA\\0"
    version u32
    D       u32
    count   u64
    lo      f64
    hi      f64
    seed    u64
    records count x (D genes + 1 fitness slot) f64, NaN fitness = unset

Blocks are runs of whole records: a block of ``block_size_bytes`` holds
``floor(block_size_bytes / record_size)`` chromosomes.
"""
from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .errors import ConfigurationError, FormatError
from .ga import Population, uniform_genes
from .objective import ObjectiveSpec
from .rng import make_rng

MAGIC = b"BLOCKGA\0"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sIIQddQ")
HEADER_SIZE = HEADER.size
DEFAULT_BLOCK_SIZE = 128 * 1024 * 1024
RECORD_DTYPE = np.dtype("<f8")

# rows generated per write when producing large files
_GEN_CHUNK = 4096


def record_size(dimension: int) -> int:
    return 8 * (dimension + 1)


@dataclass(frozen=True)
class PopulationFileHeader:
    dimension: int
    chromosome_count: int
    lower_bound: float
    upper_bound: float
    generator_seed: int = 0
    format_version: int = FORMAT_VERSION

    @property
    def record_size(self) -> int:
        return record_size(self.dimension)

    @property
    def data_bytes(self) -> int:
        return self.chromosome_count * self.record_size

    @property
    def file_size(self) -> int:
        return HEADER_SIZE + self.data_bytes

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, self.format_version, self.dimension, self.chromosome_count,
                           self.lower_bound, self.upper_bound, self.generator_seed)

    @classmethod
    def unpack(cls, raw: bytes) -> "PopulationFileHeader":
        if len(raw) < HEADER_SIZE:
            raise FormatError(f"file too short for header ({len(raw)} < {HEADER_SIZE} bytes)")
        magic, version, d, count, lo, hi, seed = HEADER.unpack(raw[:HEADER_SIZE])
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {version}")
        if d < 1:
            raise FormatError("dimension must be >= 1")
        return cls(d, count, lo, hi, seed, version)


@dataclass(frozen=True)
class BlockEntry:
    block_index: int
    chromosome_offset: int
    chromosome_count: int


@dataclass(frozen=True)
class BlockManifest:
    block_size_bytes: int
    entries: Tuple[BlockEntry, ...]

    def __len__(self):
        return len(self.entries)

    @property
    def total_count(self) -> int:
        return sum(e.chromosome_count for e in self.entries)


def read_header(path) -> PopulationFileHeader:
    path = Path(path)
    with open(path, "rb") as fh:
        header = PopulationFileHeader.unpack(fh.read(HEADER_SIZE))
    actual = os.path.getsize(path)
    if actual != header.file_size:
        raise FormatError(
            f"{path}: length {actual} does not match header "
            f"({header.chromosome_count} records of {header.record_size} bytes + {HEADER_SIZE})")
    return header


def generate_population_file(path, count: int, spec: ObjectiveSpec, seed: int) -> PopulationFileHeader:
    """Write ``count`` chromosomes with genes uniform in the spec's bounds."""
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    header = PopulationFileHeader(spec.dimension, count, spec.lower_bound,
                                  spec.upper_bound, seed)
    rng = make_rng(seed)
    with open(path, "wb") as fh:
        fh.write(header.pack())
        done = 0
        while done < count:
            n = min(_GEN_CHUNK, count - done)
            rec = np.empty((n, spec.dimension + 1), dtype=RECORD_DTYPE)
            rec[:, :-1] = uniform_genes(n, spec.dimension, spec.lower_bound,
                                        spec.upper_bound, rng)
            rec[:, -1] = np.nan
            fh.write(rec.tobytes())
            done += n
    return header


def write_population(path, population: Population, lower_bound: float = -100.0,
                     upper_bound: float = 100.0, seed: int = 0) -> PopulationFileHeader:
    if population is None or len(population) == 0:
        raise ConfigurationError("cannot write an empty population")
    header = PopulationFileHeader(population.dimension, len(population),
                                  lower_bound, upper_bound, seed)
    rec = np.empty((len(population), population.dimension + 1), dtype=RECORD_DTYPE)
    rec[:, :-1] = population.genes
    rec[:, -1] = population.fitness
    with open(path, "wb") as fh:
        fh.write(header.pack())
        fh.write(rec.tobytes())
    return header


def _read_records(path, header: PopulationFileHeader, offset: int, count: int) -> Population:
    rec = np.fromfile(path, dtype=RECORD_DTYPE, count=count * (header.dimension + 1),
                      offset=HEADER_SIZE + offset * header.record_size)
    if rec.size != count * (header.dimension + 1):
        raise FormatError(f"{path}: short read at record {offset}")
    rec = rec.reshape(count, header.dimension + 1).astype(np.float64)
    return Population(rec[:, :-1], rec[:, -1])


def read_population(path) -> Population:
    header = read_header(path)
    return _read_records(path, header, 0, header.chromosome_count)


def block_capacity(rec_size: int, block_size_bytes: int) -> int:
    if block_size_bytes < rec_size:
        raise ConfigurationError(
            f"block size {block_size_bytes} bytes is smaller than one record ({rec_size} bytes)")
    return block_size_bytes // rec_size


def block_count_for_bytes(total_bytes: int, block_size_bytes: int) -> int:
    return math.ceil(total_bytes / block_size_bytes)


def split_into_blocks(header: PopulationFileHeader,
                      block_size_bytes: int = DEFAULT_BLOCK_SIZE) -> BlockManifest:
    cap = block_capacity(header.record_size, block_size_bytes)
    entries = []
    for i, start in enumerate(range(0, header.chromosome_count, cap)):
        entries.append(BlockEntry(i, start, min(cap, header.chromosome_count - start)))
    return BlockManifest(block_size_bytes, tuple(entries))


def read_block(path, manifest: BlockManifest, block_index: int) -> Population:
    if not 0 <= block_index < len(manifest):
        raise IndexError(f"block index {block_index} out of range (manifest has {len(manifest)})")
    header = read_header(path)
    entry = manifest.entries[block_index]
    if entry.chromosome_offset + entry.chromosome_count > header.chromosome_count:
        raise FormatError(f"block {block_index} extends past the end of {path}")
    return _read_records(path, header, entry.chromosome_offset, entry.chromosome_count)


# -- manifest sidecar ---------------------------------------------------------

def manifest_path_for(path) -> Path:
    return Path(str(path) + ".manifest")


def write_manifest(path, manifest: BlockManifest) -> None:
    lines = [f"# block_size_bytes {manifest.block_size_bytes}",
             "# block_index offset count"]
    lines += [f"{e.block_index} {e.chromosome_offset} {e.chromosome_count}"
              for e in manifest.entries]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> BlockManifest:
    block_size = None
    entries: List[BlockEntry] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "block_size_bytes":
                block_size = int(parts[1])
            continue
        try:
            idx, off, cnt = (int(x) for x in line.split())
        except ValueError:
            raise FormatError(f"{path}:{lineno}: expected 'block_index offset count'") from None
        entries.append(BlockEntry(idx, off, cnt))
    if block_size is None:
        raise FormatError(f"{path}: missing block_size_bytes line")
    expected = 0
    for i, e in enumerate(entries):
        if e.block_index != i or e.chromosome_offset != expected:
            raise FormatError(f"{path}: entries do not partition the population at block {i}")
        expected += e.chromosome_count
    return BlockManifest(block_size, tuple(entries))
