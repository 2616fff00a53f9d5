"""Column-typed tabular data: CSV ingestion, sorted orderings, row subsets.

A Dataset is immutable after construction. Numeric columns hold float64
values; categorical columns hold int64 level codes plus the label table
(levels ordered by first appearance). Missing values are rejected at load
so the split algebra downstream stays exact.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ConfigError

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass
class Column:
    name: str
    kind: str
    values: np.ndarray            # float64 (numeric) or int64 level codes
    levels: tuple[str, ...] = ()  # categorical only


@dataclass(frozen=True)
class LinearFeatureSet:
    """Ordered set of numeric-column indices used by the leaf linear models."""

    indices: tuple[int, ...]

    @property
    def d_lin(self) -> int:
        return len(self.indices)


class Dataset:
    def __init__(self, columns: list[Column], response: np.ndarray,
                 response_name: str = "y"):
        n = len(response)
        for col in columns:
            if len(col.values) != n:
                raise DataError(f"column '{col.name}' has {len(col.values)} "
                                f"entries, expected {n}")
        self.columns = columns
        self.response = np.asarray(response, dtype=np.float64)
        self.response_name = response_name
        # Full-column stable sort orders, built once; subset calls re-sort.
        self._sort_cache = {
            i: np.argsort(c.values, kind="stable")
            for i, c in enumerate(columns) if c.kind == NUMERIC
        }

    @property
    def n(self) -> int:
        return len(self.response)

    @property
    def d_total(self) -> int:
        return len(self.columns)

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise DataError(f"no column named '{name}'")

    def feature_matrix(self) -> np.ndarray:
        """All feature columns as float64 (categorical as level codes)."""
        return np.column_stack([c.values.astype(np.float64) for c in self.columns])


def linear_feature_set(ds: Dataset, indices) -> LinearFeatureSet:
    idx = tuple(int(i) for i in indices)
    if not idx:
        raise ConfigError("linear feature set must be non-empty")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ConfigError("linear feature indices must be strictly increasing")
    for i in idx:
        if i < 0 or i >= ds.d_total:
            raise ConfigError(f"linear feature index {i} out of range")
        if ds.columns[i].kind != NUMERIC:
            raise ConfigError(f"linear feature '{ds.columns[i].name}' is not numeric")
    return LinearFeatureSet(idx)


# ---------------------------------------------------------------------------
# construction


def from_arrays(X: np.ndarray, y: np.ndarray, names=None,
                response_name: str = "y") -> Dataset:
    """Build an all-numeric Dataset from a feature matrix and response."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("feature matrix must be 2-dimensional")
    if names is None:
        names = [f"X{j + 1}" for j in range(X.shape[1])]
    cols = [Column(str(names[j]), NUMERIC, np.ascontiguousarray(X[:, j]))
            for j in range(X.shape[1])]
    return Dataset(cols, np.asarray(y, dtype=np.float64), response_name)


def _parse_numeric(cell: str, row_no: int, col_name: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"unparseable numeric value '{cell}' at row {row_no}, "
                        f"column '{col_name}'") from None


def load_csv(path, response_column: str, categorical_columns=()) -> Dataset:
    """Load a CSV (header row, comma-separated, decimal-point reals).

    `categorical_columns` names the columns to encode as levels; everything
    else (including the response) must parse as a real number. Any empty
    cell is an error naming its row and column.
    """
    categorical = set(categorical_columns)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot open '{path}': {e}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"'{path}' is empty") from None
        if response_column not in header:
            raise DataError(f"response column '{response_column}' not in header "
                            f"of '{path}'")
        unknown = categorical - set(header)
        if unknown:
            raise DataError(f"categorical column '{sorted(unknown)[0]}' not in "
                            f"header of '{path}'")
        if response_column in categorical:
            raise DataError(f"response column '{response_column}' cannot be "
                            "categorical")
        raw = {name: [] for name in header}
        for row_no, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise DataError(f"row {row_no} has {len(record)} fields, "
                                f"expected {len(header)}")
            for name, cell in zip(header, record):
                if cell.strip() == "":
                    raise DataError(f"empty cell at row {row_no}, column '{name}'")
                raw[name].append(cell)

    n = len(raw[header[0]])
    if n == 0:
        raise DataError(f"'{path}' has no data rows")
    columns = []
    response = None
    for name in header:
        cells = raw[name]
        if name == response_column:
            response = np.array([_parse_numeric(c, i + 1, name)
                                 for i, c in enumerate(cells)])
        elif name in categorical:
            levels: list[str] = []
            seen: dict[str, int] = {}
            codes = np.empty(n, dtype=np.int64)
            for i, c in enumerate(cells):
                if c not in seen:
                    seen[c] = len(levels)
                    levels.append(c)
                codes[i] = seen[c]
            columns.append(Column(name, CATEGORICAL, codes, tuple(levels)))
        else:
            vals = np.array([_parse_numeric(c, i + 1, name)
                             for i, c in enumerate(cells)])
            columns.append(Column(name, NUMERIC, vals))
    return Dataset(columns, response, response_column)


def conform_csv(path, features: list[dict], response_name: str | None = None) -> Dataset:
    """Load a CSV against a trained model's feature schema.

    `features` entries carry name and kind (dataset columns keep their own
    first-appearance level coding; prediction re-maps labels). Extra file
    columns are ignored. Without `response_name` the response is zeros.
    """
    wanted = [entry["name"] for entry in features]
    kinds = {entry["name"]: entry["kind"] for entry in features}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot open '{path}': {e}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"'{path}' is empty") from None
        for name in wanted:
            if name not in header:
                raise DataError(f"input is missing column '{name}'")
        if response_name is not None and response_name not in header:
            raise DataError(f"input is missing response column '{response_name}'")
        keep = set(wanted)
        if response_name is not None:
            keep.add(response_name)
        raw = {name: [] for name in header if name in keep}
        for row_no, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise DataError(f"row {row_no} has {len(record)} fields, "
                                f"expected {len(header)}")
            for name, cell in zip(header, record):
                if name not in keep:
                    continue
                if cell.strip() == "":
                    raise DataError(f"empty cell at row {row_no}, column '{name}'")
                raw[name].append(cell)

    n = len(next(iter(raw.values()))) if raw else 0
    if n == 0:
        raise DataError(f"'{path}' has no data rows")
    columns = []
    for name in wanted:
        cells = raw[name]
        if kinds[name] == CATEGORICAL:
            levels: list[str] = []
            seen: dict[str, int] = {}
            codes = np.empty(n, dtype=np.int64)
            for i, c in enumerate(cells):
                if c not in seen:
                    seen[c] = len(levels)
                    levels.append(c)
                codes[i] = seen[c]
            columns.append(Column(name, CATEGORICAL, codes, tuple(levels)))
        else:
            vals = np.array([_parse_numeric(c, i + 1, name)
                             for i, c in enumerate(cells)])
            columns.append(Column(name, NUMERIC, vals))
    if response_name is None:
        response = np.zeros(n)
        response_label = ""
    else:
        response = np.array([_parse_numeric(c, i + 1, response_name)
                             for i, c in enumerate(raw[response_name])])
        response_label = response_name
    return Dataset(columns, response, response_label)


def write_csv(ds: Dataset, path) -> None:
    """Write features then response; floats printed in round-trip form."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.feature_names + [ds.response_name])
        for i in range(ds.n):
            record = []
            for col in ds.columns:
                if col.kind == CATEGORICAL:
                    record.append(col.levels[col.values[i]])
                else:
                    record.append(repr(float(col.values[i])))
            record.append(repr(float(ds.response[i])))
            writer.writerow(record)


# ---------------------------------------------------------------------------
# row-subset views used by the split sweep


def sorted_order(ds: Dataset, feature: int, rows=None) -> np.ndarray:
    """Row ids permuted so the feature is ascending; ties stay in row order."""
    col = ds.columns[feature]
    if col.kind != NUMERIC:
        raise ConfigError(f"sorted_order on categorical column '{col.name}'")
    if rows is None:
        return ds._sort_cache[feature].copy()
    rows = np.asarray(rows, dtype=np.intp)
    # lexsort: ascending value, ties by row id regardless of input order
    return rows[np.lexsort((rows, col.values[rows]))]


def linear_row(ds: Dataset, row: int, lin: LinearFeatureSet) -> np.ndarray:
    """Selected numeric features of one row followed by the constant 1."""
    z = np.empty(lin.d_lin + 1)
    for j, f in enumerate(lin.indices):
        z[j] = ds.columns[f].values[row]
    z[-1] = 1.0
    return z


def linear_matrix(ds: Dataset, rows, lin: LinearFeatureSet) -> np.ndarray:
    """Augmented design matrix [X_lin, 1] over a row subset."""
    rows = np.asarray(rows, dtype=np.intp)
    Z = np.empty((rows.size, lin.d_lin + 1))
    for j, f in enumerate(lin.indices):
        Z[:, j] = ds.columns[f].values[rows]
    Z[:, -1] = 1.0
    return Z


def group_distinct(ds: Dataset, feature: int, order: np.ndarray):
    """Split a sorted row order into blocks of equal feature value.

    Returns [(value, rows_block), ...] in ascending value order; the blocks
    concatenate back to `order`.
    """
    order = np.asarray(order, dtype=np.intp)
    vals = ds.columns[feature].values[order]
    if order.size == 0:
        return []
    starts = np.flatnonzero(np.r_[True, vals[1:] != vals[:-1]])
    bounds = np.r_[starts, order.size]
    return [(vals[bounds[i]], order[bounds[i]:bounds[i + 1]])
            for i in range(len(starts))]
