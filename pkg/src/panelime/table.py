"""Entity-by-year panel tables.

A ``DataTable`` is a pandas frame plus a ``TableSchema``. Tables are never
mutated in place: every operation here returns a new table, and the
constructor re-checks the (entity, time) ordering and uniqueness rules.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from typing_extensions import Self

from .errors import TableError
from .models.base import PERIOD_COLUMN, ColumnKind, ReformatStrategy, TableSchema
from .models.policies import SplitSpec

logger = logging.getLogger(__name__)

# compared after strip() + upper()
MISSING_TOKENS = frozenset({"", "N/A", "NA"})


def _tidy_integer(series: pd.Series) -> pd.Series:
    """Cast a float column to int64 when it is complete and integral."""
    if series.empty or series.isna().any():
        return series
    values = series.to_numpy(dtype=float)
    if np.all(np.equal(np.mod(values, 1.0), 0.0)):
        return series.astype("int64")
    return series


@dataclass(frozen=True)
class DataTable:
    """Column-oriented panel with one entity, one time and one target column."""

    frame: pd.DataFrame
    schema: TableSchema

    def __post_init__(self) -> None:
        absent = [c for c in self._schema_columns() if c not in self.frame.columns]
        if absent:
            raise TableError(
                f"TABLE REJECTED: schema names columns missing from the table: {absent}"
            )
        if self.frame[self.schema.entity].isna().any():
            raise TableError("TABLE REJECTED: entity column has missing cells.")

        key = [self.schema.entity, self.schema.order_column]
        duplicated = self.frame.duplicated(subset=key)
        if duplicated.any():
            entity, when = self.frame.loc[duplicated, key].iloc[0].tolist()
            raise TableError(
                f"TABLE REJECTED: duplicate (entity, time) pair ({entity}, {when})."
            )
        ordered = self.frame.sort_values(key, kind="mergesort")
        if not ordered.index.equals(self.frame.index):
            raise TableError("TABLE REJECTED: rows must be sorted by (entity, time).")

    def _schema_columns(self) -> List[str]:
        s = self.schema
        columns = [s.entity, s.time, s.target, *s.categorical]
        if s.period is not None:
            columns.append(s.period)
        return columns

    # === SHAPE ===

    @property
    def column_names(self) -> List[str]:
        return [str(c) for c in self.frame.columns]

    @property
    def column_kinds(self) -> List[ColumnKind]:
        return [self.schema.kind_of(c) for c in self.column_names]

    @property
    def n_rows(self) -> int:
        return int(self.frame.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.frame.shape[1])

    # === COLUMN GROUPS ===

    def feature_columns(self, include_entity: bool = False) -> List[str]:
        """Model inputs: numeric features and the time column, in frame order."""
        allowed = {"numeric", "time"} | ({"entity"} if include_entity else set())
        return [
            c for c, kind in zip(self.column_names, self.column_kinds) if kind in allowed
        ]

    @property
    def imputable_columns(self) -> List[str]:
        """Numeric feature columns; entity, time, target and labels are never imputed."""
        return [
            c for c, kind in zip(self.column_names, self.column_kinds) if kind == "numeric"
        ]

    def missing_mask(self) -> pd.DataFrame:
        return self.frame.isna()

    def features(self, include_entity: bool = False) -> np.ndarray:
        return self.frame[self.feature_columns(include_entity)].to_numpy(dtype=float)

    @property
    def target(self) -> np.ndarray:
        return self.frame[self.schema.target].to_numpy(dtype=float)

    # === DERIVATION ===

    def with_frame(self, frame: pd.DataFrame, schema: TableSchema | None = None) -> "DataTable":
        return DataTable(frame.reset_index(drop=True), schema or self.schema)

    def take(self, rows: Sequence[int] | np.ndarray) -> "DataTable":
        """Rows by position, kept in ascending position order."""
        positions = np.sort(np.asarray(rows, dtype=int))
        return self.with_frame(self.frame.iloc[positions])

    def labels(self, codebook: "EntityCodebook | None" = None) -> List[Tuple[str, float]]:
        """(entity name, period) per row; period falls back to the time column."""
        entities = self.frame[self.schema.entity].tolist()
        periods = self.frame[self.schema.order_column].tolist()
        names = [
            codebook.decode(int(e)) if codebook is not None else str(e) for e in entities
        ]
        return [(name, float(p)) for name, p in zip(names, periods)]


class EntityCodebook(BaseModel):
    """Entity name -> integer code, assigned in lexicographic name order."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    codes: Dict[str, int]

    @model_validator(mode="after")
    def contiguous(self) -> Self:
        if sorted(self.codes.values()) != list(range(len(self.codes))):
            raise ValueError("CODEBOOK REJECTED: codes must be 0..n_entities-1 without gaps.")
        return self

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "EntityCodebook":
        return cls(codes={name: i for i, name in enumerate(sorted(set(names)))})

    def encode(self, name: str) -> int:
        try:
            return self.codes[name]
        except KeyError as exc:
            raise TableError(f"TABLE REJECTED: unknown entity '{name}'.") from exc

    def decode(self, code: int) -> str:
        for name, value in self.codes.items():
            if value == code:
                return name
        raise TableError(f"TABLE REJECTED: unknown entity code {code}.")


# === IO ===


def load_csv(
    path: Path | str,
    schema: TableSchema,
    renames: Mapping[str, str] | None = None,
) -> DataTable:
    """Read an RFC 4180 CSV into a validated table sorted by (entity, time).

    Empty cells and ``N/A``/``NA`` (any case) become missing. Quoted numbers
    with thousands separators are accepted.

    Raises:
        TableError: unreadable file, schema/header mismatch, non-numeric token
            in a numeric column, or a duplicate (entity, time) pair
    """
    path = Path(path)
    try:
        raw = pd.read_csv(
            path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8"
        )
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise TableError(f"TABLE REJECTED: cannot read {path}: {exc}") from exc

    frame = pd.DataFrame(index=raw.index)
    for column in raw.columns:
        kind = schema.kind_of(column)
        text = raw[column].str.strip()
        missing = text.str.upper().isin(MISSING_TOKENS)
        if kind in ("entity", "categorical"):
            frame[column] = text.where(~missing, None)
            continue
        values = pd.to_numeric(
            text.str.replace(",", "", regex=False).where(~missing), errors="coerce"
        )
        bad = ~missing & values.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise TableError(
                f"TABLE REJECTED: non-numeric token {raw[column].iloc[row]!r} in numeric "
                f"column '{column}' (data row {row + 1})."
            )
        frame[column] = values.astype(float)

    absent = [c for c in (schema.entity, schema.time, schema.target) if c not in frame.columns]
    if absent:
        raise TableError(f"TABLE REJECTED: {path} has no column(s) {absent}.")
    if frame[schema.time].isna().any():
        raise TableError(f"TABLE REJECTED: time column '{schema.time}' has missing cells.")

    if renames:
        frame[schema.entity] = frame[schema.entity].replace(dict(renames))
    for column in (schema.time, schema.period):
        if column is not None and column in frame.columns:
            frame[column] = _tidy_integer(frame[column])

    frame = frame.sort_values([schema.entity, schema.order_column], kind="mergesort")
    table = DataTable(frame.reset_index(drop=True), schema)
    logger.debug("Loaded %s: %d rows x %d columns", path, table.n_rows, table.n_cols)
    return table


def write_csv(table: DataTable, path: Path | str) -> Path:
    """Write with the load conventions; missing cells become empty strings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.frame.to_csv(path, index=False, na_rep="", lineterminator="\n")
    return path


def load_rename_map(path: Path | str) -> Dict[str, str]:
    """Two-column ``old_name,new_name`` CSV -> mapping."""
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise TableError(f"TABLE REJECTED: cannot read rename map {path}: {exc}") from exc
    if list(raw.columns) != ["old_name", "new_name"]:
        raise TableError(
            f"TABLE REJECTED: rename map {path} must have header 'old_name,new_name'."
        )
    return dict(zip(raw["old_name"].str.strip(), raw["new_name"].str.strip()))


def apply_renames(table: DataTable, renames: Mapping[str, str]) -> DataTable:
    """Rename entities, then re-sort and re-validate (merges can collide)."""
    s = table.schema
    frame = table.frame.copy()
    frame[s.entity] = frame[s.entity].replace(dict(renames))
    frame = frame.sort_values([s.entity, s.order_column], kind="mergesort")
    return table.with_frame(frame)


def bundled_fixture(name: str) -> Path:
    """Path of a CSV shipped in ``panelime/fixtures``."""
    return Path(str(resources.files("panelime").joinpath("fixtures", name)))


# === ENCODING AND SPLITTING ===


def encode_entities(table: DataTable) -> Tuple[DataTable, EntityCodebook]:
    """Replace entity names with lexicographic-order integer codes.

    Already-encoded (integer) entity columns map onto themselves.
    """
    column = table.frame[table.schema.entity]
    if pd.api.types.is_integer_dtype(column):
        values = sorted({int(v) for v in column})
        codebook = EntityCodebook(codes={str(v): i for i, v in enumerate(values)})
        encoded = column.map(lambda v: codebook.codes[str(int(v))])
    else:
        codebook = EntityCodebook.from_names(column.astype(str).tolist())
        encoded = column.astype(str).map(codebook.codes)

    frame = table.frame.copy()
    frame[table.schema.entity] = encoded.astype("int64")
    return table.with_frame(frame), codebook


def split_indices(n_rows: int, spec: SplitSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) row positions of a seeded uniform partition."""
    if n_rows < 2:
        raise TableError(f"SPLIT REJECTED: need at least 2 rows, got {n_rows}.")
    n_train = int(np.floor(spec.train_fraction * n_rows + 0.5))
    order = np.random.default_rng(spec.seed).permutation(n_rows)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def split(table: DataTable, spec: SplitSpec) -> Tuple[DataTable, DataTable]:
    train_rows, test_rows = split_indices(table.n_rows, spec)
    return table.take(train_rows), table.take(test_rows)


# === TEMPORAL REFORMATTING ===


def _check_differencable(table: DataTable) -> None:
    s = table.schema
    if s.period is not None:
        raise TableError("REFORMAT REJECTED: table is already reformatted.")
    if PERIOD_COLUMN in table.frame.columns:
        raise TableError(f"REFORMAT REJECTED: column name '{PERIOD_COLUMN}' is reserved.")
    if s.categorical:
        raise TableError(
            f"REFORMAT REJECTED: categorical columns {s.categorical} cannot be differenced."
        )


def _finish(
    table: DataTable, values: pd.DataFrame, keep: pd.Series, strategy: str
) -> DataTable:
    s = table.schema
    frame = pd.concat([table.frame[[s.entity]], values], axis=1)[table.column_names]
    frame[PERIOD_COLUMN] = table.frame[s.time]
    frame = frame.loc[keep.to_numpy()]
    for column in (s.time, PERIOD_COLUMN):
        frame[column] = _tidy_integer(frame[column])

    sizes = table.frame.groupby(s.entity, sort=False).size()
    singles = int((sizes == 1).sum())
    if singles:
        logger.warning(
            "%s: %d entit%s with a single row contribute no output rows",
            strategy,
            singles,
            "y" if singles == 1 else "ies",
        )
    return table.with_frame(frame, s.model_copy(update={"period": PERIOD_COLUMN}))


def diff_all(table: DataTable) -> DataTable:
    """Every non-entity column becomes current minus previous within its entity.

    The first row of each entity is dropped; a missing operand gives a
    missing difference.
    """
    _check_differencable(table)
    s = table.schema
    values = [c for c in table.column_names if c != s.entity]
    groups = table.frame.groupby(s.entity, sort=False)
    diffs = table.frame[values] - groups[values].shift(1)
    return _finish(table, diffs, groups.cumcount() > 0, "diff_all")


def diff_target_lag_features(table: DataTable) -> DataTable:
    """Target becomes current minus previous; other columns take the previous row's level."""
    _check_differencable(table)
    s = table.schema
    values = [c for c in table.column_names if c != s.entity]
    groups = table.frame.groupby(s.entity, sort=False)
    lagged = groups[values].shift(1)
    lagged[s.target] = table.frame[s.target] - lagged[s.target]
    return _finish(table, lagged, groups.cumcount() > 0, "diff_target_lag")


def reformat(table: DataTable, strategy: ReformatStrategy) -> DataTable:
    if strategy == "diff_all":
        return diff_all(table)
    return diff_target_lag_features(table)


def drop_incomplete(table: DataTable, include_entity: bool = False) -> DataTable:
    """Drop rows with a missing feature or target cell."""
    columns = [*table.feature_columns(include_entity), table.schema.target]
    complete = table.frame[columns].notna().all(axis=1)
    dropped = int((~complete).sum())
    if dropped:
        logger.info("Dropped %d incomplete row(s) of %d", dropped, table.n_rows)
    return table.with_frame(table.frame.loc[complete.to_numpy()])


__all__ = [
    "MISSING_TOKENS",
    "DataTable",
    "EntityCodebook",
    "load_csv",
    "write_csv",
    "load_rename_map",
    "apply_renames",
    "bundled_fixture",
    "encode_entities",
    "split_indices",
    "split",
    "diff_all",
    "diff_target_lag_features",
    "reformat",
    "drop_incomplete",
]
