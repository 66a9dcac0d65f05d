"""Rating-file parsers, train/test partitions, synthetic datasets and manifests.

Interchange formats:

* counts CSV: ``id,c1,...,cK`` (header optional)
* pmf CSV: ``id,p1,...,pK`` with six decimals
* parameter CSV: ``id,m,n`` (extra columns ignored); this is where an
  external model's per-image attractor predictions enter the pipeline
* AVA: whitespace rows ``index image_id c1..c10 tag1 tag2 challenge``
* Photo.net: ``id,c1,...,c7``
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .distcore import ScoreHistogram, normalize
from .simulator import M_MAX, N_MAX, DddParams, SimConfig, simulate_histogram

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

AVA_VOTE_RANGE = (78, 549)
AVA_SPLIT_SIZES = {"train": 235_599, "test": 19_930}
PHOTONET_MIN_VOTES = 10
PHOTONET_TOTAL = 15_582
PHOTONET_SPLIT_SIZES = {"train": 13_582, "test": 2_000}

SPLITS = ("train", "test", "unassigned")


class ParseError(ValueError):
    """Malformed input, located by file and 1-based line number."""

    def __init__(self, path, lineno: int, msg: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    histogram: ScoreHistogram
    split: str = "unassigned"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    bins: int
    scale_range: tuple[int, int]
    record_count: int
    split_counts: dict
    source_format: str
    content_hash: str

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["scale_range"] = list(self.scale_range)
        return json.dumps(d, indent=2) + "\n"


@dataclass(frozen=True)
class Dataset:
    name: str
    records: tuple[DatasetRecord, ...]
    source_format: str = "csv"
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise ValueError(f"duplicate id {r.id!r}")
            seen.add(r.id)
        if len({r.histogram.k for r in self.records}) > 1:
            raise ValueError("records have differing bin counts")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def bins(self) -> int:
        return self.records[0].histogram.k if self.records else 0

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def histograms(self) -> list[ScoreHistogram]:
        return [r.histogram for r in self.records]

    def as_mapping(self) -> dict[str, ScoreHistogram]:
        return {r.id: r.histogram for r in self.records}

    def subset(self, split: str) -> "Dataset":
        return replace(self, records=tuple(r for r in self.records if r.split == split))

    def split_counts(self) -> dict[str, int]:
        return {s: sum(r.split == s for r in self.records) for s in SPLITS}

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for r in self.records:
            hist = r.histogram
            payload = {
                "id": r.id,
                "bins": [int(hist.bin_values[0]), int(hist.bin_values[-1])],
                "counts": None if hist.counts is None else hist.counts.tolist(),
                "pmf": [float(x).hex() for x in hist.pmf],
                "split": r.split,
                "meta": r.meta,
            }
            h.update(json.dumps(payload, sort_keys=True, default=str).encode())
            h.update(b"\n")
        return h.hexdigest()

    def manifest(self) -> DatasetManifest:
        lo = int(self.records[0].histogram.bin_values[0]) if self.records else 0
        return DatasetManifest(
            name=self.name,
            bins=self.bins,
            scale_range=(lo, lo + self.bins - 1 if self.bins else 0),
            record_count=len(self.records),
            split_counts=self.split_counts(),
            source_format=self.source_format,
            content_hash=self.content_hash(),
        )


def _int_fields(fields: Sequence[str], path, lineno: int) -> list[int]:
    try:
        vals = [int(f) for f in fields]
    except ValueError:
        raise ParseError(path, lineno, f"non-integer field in {list(fields)!r}") from None
    if any(v < 0 for v in vals):
        raise ParseError(path, lineno, "negative vote count")
    return vals


def _hist(counts, path, lineno) -> ScoreHistogram:
    try:
        return normalize(counts)
    except ValueError as e:
        raise ParseError(path, lineno, str(e)) from None


def _check_dup(rid: str, seen: dict, path, lineno: int):
    if rid in seen:
        raise ParseError(path, lineno, f"duplicate id {rid!r} (first on line {seen[rid]})")
    seen[rid] = lineno


def parse_ava(path: PathLike, name: Optional[str] = None) -> Dataset:
    """Read the AVA ratings file.

    Rows whose vote total falls outside 78-549 are kept but carry
    ``"votes_out_of_range"`` in ``meta["flags"]``.
    """
    path = Path(path)
    records, seen, warns = [], {}, []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 15:
                raise ParseError(path, lineno, f"expected 15 fields, got {len(parts)}")
            rid = parts[1]
            index = _int_fields(parts[:1], path, lineno)[0]
            counts = _int_fields(parts[2:12], path, lineno)
            tags = _int_fields(parts[12:15], path, lineno)
            _check_dup(rid, seen, path, lineno)
            total = sum(counts)
            flags = []
            if not AVA_VOTE_RANGE[0] <= total <= AVA_VOTE_RANGE[1]:
                flags.append("votes_out_of_range")
                warns.append(f"line {lineno}: {rid} has {total} votes")
            meta = {"index": index, "tags": tags[:2], "challenge": tags[2], "flags": flags}
            records.append(DatasetRecord(rid, _hist(counts, path, lineno), meta=meta))
    return Dataset(name or path.stem, records, "ava", warns)


def write_ava(dataset: Dataset, path: PathLike) -> None:
    with open(path, "w") as fh:
        for i, r in enumerate(dataset.records, 1):
            if r.histogram.counts is None or r.histogram.k != 10:
                raise ValueError(f"{r.id}: AVA rows need 10 vote counts")
            tags = r.meta.get("tags", [0, 0])
            fields = [
                r.meta.get("index", i),
                r.id,
                *r.histogram.counts.tolist(),
                *tags,
                r.meta.get("challenge", 0),
            ]
            fh.write(" ".join(str(f) for f in fields) + "\n")


def _csv_rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row):
                continue
            row = [c.strip() for c in row]
            if lineno == 1 and row[0].lower() == "id":
                continue
            yield lineno, row


def parse_photonet(path: PathLike, name: Optional[str] = None) -> Dataset:
    """Read Photo.net ratings, ``id,c1..c7``.

    Images with fewer than ten votes are flagged, and a record count other
    than the full 15,582-image collection is noted in ``warnings``.
    """
    path = Path(path)
    records, seen, warns = [], {}, []
    for lineno, row in _csv_rows(path):
        if len(row) != 8:
            raise ParseError(path, lineno, f"expected 8 fields, got {len(row)}")
        counts = _int_fields(row[1:], path, lineno)
        _check_dup(row[0], seen, path, lineno)
        flags = []
        if sum(counts) < PHOTONET_MIN_VOTES:
            flags.append("too_few_votes")
            warns.append(f"line {lineno}: {row[0]} has {sum(counts)} votes")
        records.append(DatasetRecord(row[0], _hist(counts, path, lineno), meta={"flags": flags}))
    if len(records) != PHOTONET_TOTAL:
        msg = f"{len(records)} records, full Photo.net collection has {PHOTONET_TOTAL}"
        log.warning(msg)
        warns.append(msg)
    return Dataset(name or path.stem, records, "photonet", warns)


def parse_counts_csv(path: PathLike, bins: Optional[int] = None, name: Optional[str] = None) -> Dataset:
    """Read the generic ``id,c1..cK`` counts format."""
    path = Path(path)
    records, seen = [], {}
    for lineno, row in _csv_rows(path):
        if bins is None:
            bins = len(row) - 1
            if bins < 1:
                raise ParseError(path, lineno, "row has no counts")
        if len(row) != bins + 1:
            raise ParseError(path, lineno, f"expected {bins + 1} fields, got {len(row)}")
        counts = _int_fields(row[1:], path, lineno)
        _check_dup(row[0], seen, path, lineno)
        records.append(DatasetRecord(row[0], _hist(counts, path, lineno)))
    return Dataset(name or path.stem, records, "csv")


def write_counts_csv(records: Union[Dataset, Iterable[DatasetRecord]], path: PathLike) -> None:
    records = list(records)
    k = records[0].histogram.k if records else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"c{i}" for i in range(1, k + 1)])
        for r in records:
            if r.histogram.counts is None:
                raise ValueError(f"{r.id}: no vote counts to write")
            w.writerow([r.id] + r.histogram.counts.tolist())


def write_pmf_csv(hists: dict[str, ScoreHistogram], path: PathLike) -> None:
    k = next(iter(hists.values())).k if hists else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"p{i}" for i in range(1, k + 1)])
        for rid, h in hists.items():
            w.writerow([rid] + [f"{x:.6f}" for x in h.pmf])


def read_pmf_csv(path: PathLike, bin_min: int = 1) -> dict[str, ScoreHistogram]:
    """Read ``id,p1..pK`` rows; each row is renormalized to absorb rounding."""
    path = Path(path)
    out, seen = {}, {}
    k = None
    for lineno, row in _csv_rows(path):
        if k is None:
            k = len(row) - 1
        if len(row) != k + 1:
            raise ParseError(path, lineno, f"expected {k + 1} fields, got {len(row)}")
        try:
            p = np.array([float(x) for x in row[1:]])
        except ValueError:
            raise ParseError(path, lineno, "non-numeric probability") from None
        if np.any(p < 0) or not np.all(np.isfinite(p)) or p.sum() <= 0:
            raise ParseError(path, lineno, "probabilities must be finite, >= 0, not all zero")
        _check_dup(row[0], seen, path, lineno)
        out[row[0]] = ScoreHistogram(np.arange(bin_min, bin_min + k), p / p.sum())
    return out


def read_params_csv(path: PathLike) -> dict[str, tuple[int, int]]:
    """Read ``id,m,n[,...]`` rows of predicted or fitted attractor counts."""
    path = Path(path)
    out, seen = {}, {}
    for lineno, row in _csv_rows(path):
        if len(row) < 3:
            raise ParseError(path, lineno, "expected at least id,m,n")
        m, n = _int_fields(row[1:3], path, lineno)
        _check_dup(row[0], seen, path, lineno)
        out[row[0]] = (m, n)
    return out


def write_params_csv(rows: Iterable[tuple], path: PathLike, header=("id", "m", "n")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def read_split(path: PathLike) -> dict[str, str]:
    """Read ``id,label`` (or whitespace separated) partition lines."""
    path = Path(path)
    labels, where = {}, {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = [p for p in line.replace(",", " ").split() if p]
            if not parts:
                continue
            if lineno == 1 and parts[0].lower() == "id":
                continue
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected 'id,label'")
            rid, lab = parts[0], parts[1].lower()
            if lab not in ("train", "test"):
                raise ParseError(path, lineno, f"label must be train or test, got {lab!r}")
            if rid in labels and labels[rid] != lab:
                raise ParseError(
                    path, lineno, f"id {rid!r} labelled {lab} here but {labels[rid]} on line {where[rid]}"
                )
            labels.setdefault(rid, lab)
            where.setdefault(rid, lineno)
    return labels


def apply_split(dataset: Dataset, split_file: PathLike) -> Dataset:
    """Assign train/test from a partition file; unlisted ids stay unassigned.

    Ids in the split file that the dataset lacks are reported in the
    returned dataset's ``warnings``.
    """
    labels = read_split(split_file)
    present = set(dataset.ids)
    missing = sorted(set(labels) - present)
    warns = list(dataset.warnings)
    if missing:
        warns.append(f"{len(missing)} split ids absent from dataset: {missing[:5]}")
    records = [replace(r, split=labels.get(r.id, "unassigned")) for r in dataset.records]
    counts = {s: sum(r.split == s for r in records) for s in ("train", "test")}
    expected = {"ava": AVA_SPLIT_SIZES, "photonet": PHOTONET_SPLIT_SIZES}.get(dataset.source_format)
    if expected and counts != expected:
        warns.append(f"split sizes {counts} differ from the standard partition {expected}")
    return replace(dataset, records=records, warnings=warns)


@dataclass(frozen=True)
class SynthCell:
    m: int
    n: int
    scale: float = 1.0
    raters: int = 10_000
    count: int = 10


def default_synth_cells(
    m_max: int = M_MAX, n_max: int = N_MAX, scale: float = 1.0, raters: int = 10_000, count: int = 10
) -> list[SynthCell]:
    return [SynthCell(m, n, scale, raters, count) for m in range(m_max + 1) for n in range(n_max + 1)]


def record_seed(seed: int, m: int, n: int, i: int) -> int:
    """Independent 64-bit seed for the ``i``-th synthetic image of a cell."""
    ss = np.random.SeedSequence([int(seed), int(m), int(n), int(i)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def synth_dataset(
    cells: Optional[Sequence[SynthCell]] = None,
    seed: int = 0,
    cfg: Optional[SimConfig] = None,
    name: str = "synth",
) -> tuple[Dataset, list[tuple[str, int, int, float]]]:
    """Simulated histograms plus the true ``(id, m, n, scale)`` of each.

    Each image gets its own seed derived from ``(seed, m, n, i)``, so images
    never share draws with each other or with a template bank.
    """
    cells = default_synth_cells() if cells is None else list(cells)
    cfg = cfg or SimConfig()
    records, truth = [], []
    for c in cells:
        for i in range(c.count):
            rid = f"syn-m{c.m}-n{c.n}-{i:03d}"
            cc = replace(cfg, raters=c.raters, seed=record_seed(seed, c.m, c.n, i))
            h = simulate_histogram(DddParams(c.m, c.n, c.scale), cc)
            records.append(DatasetRecord(rid, h, meta={"m": c.m, "n": c.n, "scale": c.scale}))
            truth.append((rid, c.m, c.n, c.scale))
    return Dataset(name, records, "synth"), truth


def write_truth_csv(truth, path: PathLike) -> None:
    write_params_csv(((r, m, n, repr(float(s))) for r, m, n, s in truth), path, ("id", "m", "n", "scale"))


def bundled_path(name: str) -> Path:
    """Location of a data file shipped with the package."""
    return Path(str(resources.files("dddscore") / "data" / name))


def load_bundled_synth() -> tuple[Dataset, dict[str, tuple[int, int]]]:
    """The 490-record synthetic dataset (49 cells x 10 images, R=10,000)."""
    ds = parse_counts_csv(bundled_path("synth_490.csv"), bins=10, name="synth_490")
    return ds, read_params_csv(bundled_path("synth_490_truth.csv"))
