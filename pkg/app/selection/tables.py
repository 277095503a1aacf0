"""CSV lookup tables for optimal mappings.

A table is a ``# key=value,...`` metadata line followed by ``j,alpha`` (finite
k) or ``j,beta`` (large-k limit) rows. Reals carry 17 significant digits so a
table read back reproduces the mapping bit for bit.
"""

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, TextIO, Union

from app.selection.errors import MappingFormatError
from app.selection.model import AsymptoticMapping, DiscreteMapping, SelectionParams
from app.selection.scheme1 import Scheme1Solution
from app.selection.scheme2 import Scheme2Solution


def fmt(value) -> str:
    """Render a number the way every CSV in this package does."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


PROVENANCE_PREFIX = "# provenance "


def provenance_line(version: str, seed, invocation: str) -> str:
    """First line of every command-line CSV; readers skip it."""
    return f"{PROVENANCE_PREFIX}version={version} seed={fmt(seed) or 'none'} invocation={invocation}"


def write_report(header, rows, target: TextIO, provenance: Optional[str] = None) -> None:
    if provenance:
        target.write(provenance + "\n")
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(value) for value in row])


def solution_metadata(solution: Union[Scheme1Solution, Scheme2Solution]) -> dict:
    k = solution.k
    meta = {"k": "inf" if k is None else k, "N": solution.n_slots}
    if isinstance(solution, Scheme1Solution):
        meta["p_star"] = solution.p_star
        return meta
    meta["delta"] = solution.delta
    if solution.p_max is not None:
        meta["p_star"] = solution.p_max
    meta.update(
        eta=solution.eta,
        lambda_star=solution.lambda_star,
        p=solution.p_success,
        gamma=solution.expected_time,
    )
    return meta


def metadata_line(meta: dict) -> str:
    return "# " + ",".join(f"{key}={fmt(value)}"
                           for key, value in meta.items() if value is not None)


def write_solution(
    solution: Union[Scheme1Solution, Scheme2Solution],
    target: Union[str, Path, TextIO],
    provenance: Optional[str] = None,
) -> None:
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_solution(solution, fh, provenance)
        return
    if provenance:
        target.write(provenance + "\n")
    column = "beta" if solution.k is None else "alpha"
    target.write(metadata_line(solution_metadata(solution)) + "\n")
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["j", column])
    for j, value in enumerate(solution.lengths):
        writer.writerow([j, fmt(value)])


def solution_to_csv(solution: Union[Scheme1Solution, Scheme2Solution]) -> str:
    buffer = io.StringIO()
    write_solution(solution, buffer)
    return buffer.getvalue()


@dataclass(frozen=True)
class MappingTable:
    """A parsed lookup table before it is bound to selection parameters."""

    column: str
    lengths: tuple
    metadata: dict

    @property
    def n_slots(self) -> int:
        return len(self.lengths) - 1

    def bind(self, params: SelectionParams) -> DiscreteMapping:
        """Discrete mapping for params; beta tables are scaled by 1/k."""
        if params.n_slots != self.n_slots:
            raise MappingFormatError(
                f"table has N={self.n_slots} but the parameters give N={params.n_slots}", field="mapping"
            )
        if self.column == "beta":
            return AsymptoticMapping(self.n_slots, self.lengths).to_finite(params)
        return DiscreteMapping(params, self.lengths)


def _parse_metadata(line: str) -> dict:
    meta = {}
    body = line.lstrip("#").strip()
    if not body:
        return meta
    for item in body.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise MappingFormatError(f"bad metadata entry {item!r}", field="mapping")
        meta[key.strip()] = value.strip()
    return meta


def read_table(source: Union[str, Path, TextIO]) -> MappingTable:
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise MappingFormatError(f"mapping file not found: {path}", field="mapping")
        with open(path, newline="", encoding="utf-8") as fh:
            return read_table(fh)

    metadata: dict = {}
    rows = []
    for line in source:
        if line.startswith(PROVENANCE_PREFIX):
            continue
        if line.startswith("#"):
            metadata.update(_parse_metadata(line))
        elif line.strip():
            rows.append(line)
    reader = csv.reader(rows)
    try:
        header = next(reader)
    except StopIteration:
        raise MappingFormatError("mapping file has no header", field="mapping") from None
    if len(header) != 2 or header[0] != "j" or header[1] not in ("alpha", "beta"):
        raise MappingFormatError(f"expected header j,alpha or j,beta, got {header}", field="mapping")

    lengths = []
    for expected, row in enumerate(reader):
        try:
            j, value = int(row[0]), float(row[1])
        except (ValueError, IndexError) as e:
            raise MappingFormatError(f"malformed row {row}: {e}", field="mapping") from e
        if j != expected:
            raise MappingFormatError(f"rows must be numbered 0..N in order; got j={j}", field="mapping")
        lengths.append(value)
    if not lengths:
        raise MappingFormatError("mapping file has no rows", field="mapping")
    return MappingTable(column=header[1], lengths=tuple(lengths), metadata=metadata)


def table_k(table: MappingTable) -> Optional[int]:
    raw = table.metadata.get("k")
    if raw is None or raw == "inf":
        return None
    try:
        return int(raw)
    except ValueError:
        raise MappingFormatError(f"bad k in metadata: {raw!r}", field="mapping") from None
