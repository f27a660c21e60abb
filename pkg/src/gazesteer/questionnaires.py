"""Scoring for SSQ, raw NASA-TLX and SUS-presence questionnaires.

CSV layouts, one respondent per row, optional ``respondent`` first column:

* SSQ: 16 integer columns ``s1`` .. ``s16`` in {0, 1, 2, 3}
* TLX: ``mental, physical, temporal, performance, effort, frustration``
* presence: ``p1`` .. ``pN`` in [1, 7]
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Mapping, NamedTuple, Sequence, Union

from .errors import OutOfRange

SSQ_ITEMS = 16

# 1-based item numbers of the standard Kennedy SSQ factor loadings
SSQ_SUBSETS: Mapping[str, tuple[int, ...]] = {
    "nausea": (1, 6, 7, 8, 9, 15, 16),
    "oculomotor": (1, 2, 3, 4, 5, 9, 11),
    "disorientation": (5, 8, 10, 11, 12, 13, 14),
}


@dataclass(frozen=True)
class SsqWeights:
    nausea: float = 9.54
    oculomotor: float = 7.58
    disorientation: float = 13.92
    total: float = 3.74


@dataclass(frozen=True)
class SsqResponse:
    items: tuple

    def __init__(self, items: Sequence[int]) -> None:
        its = tuple(items)
        if len(its) != SSQ_ITEMS:
            raise OutOfRange(f"SSQ needs {SSQ_ITEMS} items, got {len(its)}")
        for v in its:
            if v not in (0, 1, 2, 3) or isinstance(v, bool):
                raise OutOfRange(f"SSQ item {v!r} not in 0..3")
        object.__setattr__(self, "items", tuple(int(v) for v in its))


class SsqScore(NamedTuple):
    nausea: float
    oculomotor: float
    disorientation: float
    total: float


def score_ssq(
    r: SsqResponse,
    weights: SsqWeights = SsqWeights(),
    subsets: Mapping[str, Sequence[int]] = SSQ_SUBSETS,
) -> SsqScore:
    raw = {k: sum(r.items[i - 1] for i in idx) for k, idx in subsets.items()}
    n, o, d = raw["nausea"], raw["oculomotor"], raw["disorientation"]
    return SsqScore(n * weights.nausea, o * weights.oculomotor, d * weights.disorientation, (n + o + d) * weights.total)


TLX_SUBSCALES = ("mental", "physical", "temporal", "performance", "effort", "frustration")


class TlxResponse(NamedTuple):
    mental: float
    physical: float
    temporal: float
    performance: float
    effort: float
    frustration: float


def score_tlx(r: Union[TlxResponse, Sequence[float]], scale_max: float = 100.0) -> float:
    """Raw (unweighted) TLX: subscale mean mapped linearly from [0, scale_max] to [0, 100]."""
    vals = tuple(r)
    if len(vals) != len(TLX_SUBSCALES):
        raise OutOfRange(f"TLX needs {len(TLX_SUBSCALES)} ratings, got {len(vals)}")
    if not scale_max > 0:
        raise OutOfRange("scale_max must be positive")
    for v in vals:
        if not (math.isfinite(v) and 0.0 <= v <= scale_max):
            raise OutOfRange(f"TLX rating {v!r} outside [0, {scale_max}]")
    return sum(vals) / len(vals) / scale_max * 100.0


PRESENCE_MIN, PRESENCE_MAX = 1, 7


@dataclass(frozen=True)
class PresenceResponse:
    items: tuple

    def __init__(self, items: Sequence[float]) -> None:
        its = tuple(float(v) for v in items)
        if not its:
            raise OutOfRange("presence response has no items")
        for v in its:
            if not PRESENCE_MIN <= v <= PRESENCE_MAX:
                raise OutOfRange(f"presence rating {v!r} outside [1, 7]")
        object.__setattr__(self, "items", its)


@dataclass(frozen=True)
class CountHigh:
    threshold: float = 6


@dataclass(frozen=True)
class SumNormalized:
    max_points: float = 20.0


PresenceMode = Union[CountHigh, SumNormalized]


def score_presence(r: PresenceResponse, mode: PresenceMode = CountHigh()) -> float:
    if isinstance(mode, CountHigh):
        return float(sum(1 for v in r.items if v >= mode.threshold))
    k = len(r.items)
    lo, hi = k * PRESENCE_MIN, k * PRESENCE_MAX
    return (sum(r.items) - lo) / (hi - lo) * mode.max_points


# ---------------------------------------------------------------- ingestion

def _rows(fp: IO[str], ncols: int) -> list[tuple[str, list[str]]]:
    out = []
    reader = csv.reader(fp)
    for i, row in enumerate(reader):
        row = [c.strip() for c in row]
        if not any(row) or row[0].startswith("#"):
            continue
        if i == 0 and not _is_number(row[-1]):
            continue  # header
        if len(row) == ncols + 1:
            rid, vals = row[0], row[1:]
        elif len(row) == ncols:
            rid, vals = str(len(out) + 1), row
        else:
            raise OutOfRange(f"row {i + 1}: expected {ncols} values, got {len(row)}")
        out.append((rid, vals))
    return out


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_ssq_csv(fp: IO[str]) -> list[tuple[str, SsqResponse]]:
    return [(rid, SsqResponse([int(v) for v in vals])) for rid, vals in _rows(fp, SSQ_ITEMS)]


def read_tlx_csv(fp: IO[str]) -> list[tuple[str, TlxResponse]]:
    return [(rid, TlxResponse(*(float(v) for v in vals))) for rid, vals in _rows(fp, len(TLX_SUBSCALES))]


def read_presence_csv(fp: IO[str], n_items: int = 6) -> list[tuple[str, PresenceResponse]]:
    return [(rid, PresenceResponse([float(v) for v in vals])) for rid, vals in _rows(fp, n_items)]
