"""ucd-v1 distribution-dump files.

JSON Lines with a header line followed by one row per step:

    {"format":"ucd-v1","vocab_size":int,"delta":f64,"v_min":f64,"len":int,"model":str}
    {"t":1,"observed":int,"logprobs":[f64 x vocab_size]}
    ...
    {"t":len,"observed":int,"logprobs":[...]}

Log-probabilities are written as 9-significant-digit decimals (floored
at ln(1e-300) so zero-probability tokens stay representable), which
keeps write -> load -> write byte-identical. Rows must exponentiate to a
probability vector summing to 1 within 1e-6.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DumpFormatError
from .forecaster import GenerationResult, ReplayModel, SyntheticIdealModel
from .vocab import DiscreteDistribution, Vocabulary

FORMAT_NAME = "ucd-v1"
ROW_MASS_TOL = 1e-6
LOGPROB_FLOOR = math.log(1e-300)


@dataclass(frozen=True)
class DistributionDump:
    """Parsed dump: header metadata plus dense per-step log-probabilities."""

    vocab: Vocabulary
    model_name: str
    observed: np.ndarray  # (len,) token indices
    logprobs: np.ndarray  # (len, vocab_size)

    def __post_init__(self):
        if self.logprobs.ndim != 2 or self.logprobs.shape[1] != self.vocab.size:
            raise DumpFormatError(
                f"logprobs must have shape (len, {self.vocab.size}), got {self.logprobs.shape}"
            )
        if len(self.observed) != len(self.logprobs):
            raise DumpFormatError("observed tokens and logprob rows must align")
        if len(self.logprobs) < 1:
            raise DumpFormatError("dump must contain at least one row")

    @property
    def length(self) -> int:
        return len(self.logprobs)

    @classmethod
    def from_rows(
        cls,
        vocab: Vocabulary,
        rows: Sequence[DiscreteDistribution],
        observed: Sequence[int],
        model_name: str,
    ) -> "DistributionDump":
        logprobs = np.log(np.maximum(np.stack([r.probs for r in rows]), 1e-300))
        return cls(
            vocab=vocab,
            model_name=model_name,
            observed=np.asarray(observed, dtype=int),
            logprobs=logprobs,
        )

    @classmethod
    def from_generation(
        cls, result: GenerationResult, model: SyntheticIdealModel, model_name: str | None = None
    ) -> "DistributionDump":
        return cls.from_rows(
            model.vocabulary(),
            result.internal_distributions,
            result.tokens,
            model_name or model.name,
        )

    def to_model(self, value_space: bool = False) -> ReplayModel:
        """Replay model over the dump; row probabilities are renormalized
        exactly after the 1e-6 validation."""
        rows = []
        for row in np.exp(self.logprobs):
            rows.append(DiscreteDistribution(vocab=self.vocab, probs=row / row.sum()))
        return ReplayModel(
            vocab=self.vocab,
            rows=rows,
            observed=self.observed,
            name=self.model_name,
            value_space=value_space,
        )


def _format_row(t: int, observed: int, logprobs: np.ndarray) -> str:
    floored = np.maximum(logprobs, LOGPROB_FLOOR)
    body = ",".join(np.char.mod("%.9g", floored))
    return f'{{"t":{t},"observed":{observed},"logprobs":[{body}]}}'


def write_dump(dump: DistributionDump, path: str | os.PathLike) -> None:
    """Write atomically (temp file + rename)."""
    header = {
        "format": FORMAT_NAME,
        "vocab_size": dump.vocab.size,
        "delta": dump.vocab.delta,
        "v_min": dump.vocab.v_min,
        "len": dump.length,
        "model": dump.model_name,
    }
    tmp_path = f"{os.fspath(path)}.tmp"
    with open(tmp_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for i in range(dump.length):
            fh.write(_format_row(i + 1, int(dump.observed[i]), dump.logprobs[i]) + "\n")
    os.replace(tmp_path, path)


def _parse_header(line: str) -> tuple[Vocabulary, str, int]:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DumpFormatError(f"header is not valid JSON ({exc})", line=1) from exc
    if not isinstance(header, dict):
        raise DumpFormatError("header must be a JSON object", line=1)
    if header.get("format") != FORMAT_NAME:
        raise DumpFormatError(
            f"unexpected format {header.get('format')!r}, expected {FORMAT_NAME!r}", line=1
        )
    for key, kind in (
        ("vocab_size", int),
        ("delta", (int, float)),
        ("v_min", (int, float)),
        ("len", int),
        ("model", str),
    ):
        if key not in header:
            raise DumpFormatError(f"header is missing {key!r}", line=1)
        if not isinstance(header[key], kind) or isinstance(header[key], bool):
            raise DumpFormatError(f"header field {key!r} has the wrong type", line=1)
    if header["len"] < 1:
        raise DumpFormatError("header len must be >= 1", line=1)
    vocab = Vocabulary(
        size=header["vocab_size"], delta=float(header["delta"]), v_min=float(header["v_min"])
    )
    return vocab, header["model"], header["len"]


def read_dump(path: str | os.PathLike) -> DistributionDump:
    """Parse and validate a ucd-v1 file; errors carry the offending line."""
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise DumpFormatError("empty file", line=1)
        vocab, model_name, length = _parse_header(header_line)

        observed = np.empty(length, dtype=int)
        logprobs = np.empty((length, vocab.size), dtype=float)
        for i in range(length):
            line_no = i + 2
            line = fh.readline()
            if not line:
                raise DumpFormatError(
                    f"expected {length} rows but the file ends after {i}", line=line_no
                )
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DumpFormatError(f"row is not valid JSON ({exc})", line=line_no) from exc
            if not isinstance(row, dict) or not {"t", "observed", "logprobs"} <= row.keys():
                raise DumpFormatError("row must carry t, observed, logprobs", line=line_no)
            if row["t"] != i + 1:
                raise DumpFormatError(f"expected t={i + 1}, got {row['t']}", line=line_no)
            token = row["observed"]
            if not isinstance(token, int) or not 0 <= token < vocab.size:
                raise DumpFormatError(
                    f"observed token {token!r} outside [0, {vocab.size})", line=line_no
                )
            lp = row["logprobs"]
            if not isinstance(lp, list) or len(lp) != vocab.size:
                raise DumpFormatError(
                    f"logprobs must hold {vocab.size} values, got {len(lp) if isinstance(lp, list) else type(lp)}",
                    line=line_no,
                )
            arr = np.asarray(lp, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise DumpFormatError("logprobs must be finite", line=line_no)
            mass = float(np.exp(arr).sum())
            if abs(mass - 1.0) > ROW_MASS_TOL:
                raise DumpFormatError(
                    f"row probabilities sum to {mass!r}, outside 1 +- {ROW_MASS_TOL}", line=line_no
                )
            observed[i] = token
            logprobs[i] = arr
        extra = fh.readline()
        if extra.strip():
            raise DumpFormatError("unexpected content after the last row", line=length + 2)
    return DistributionDump(
        vocab=vocab, model_name=model_name, observed=observed, logprobs=logprobs
    )


def load_dump(path: str | os.PathLike, value_space: bool = False) -> ReplayModel:
    """Read, validate and wrap a dump as a replay ForecastModel."""
    return read_dump(path).to_model(value_space=value_space)


def validate_dump(path: str | os.PathLike) -> int:
    """Validate a dump file; returns its row count or raises DumpFormatError."""
    return read_dump(path).length
