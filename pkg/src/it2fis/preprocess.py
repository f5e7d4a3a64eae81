"""CSV ingestion and cleaning: missing-label drop, outlier rules, one-hot
encoding, and correlation pruning.

The raw table keeps every cell verbatim.  Cleaning drops rows whose label
cell is one of the configured missing codes, then rows matched by declarative
outlier rules (conjunctions of column == value on the raw cells).  Listed
categorical columns expand to one "col=value" binary column per observed
category (sentinel codes like 97 simply become their own category); the rest
must parse as numbers.  Finally, walking columns left to right, any column
whose |Pearson r| with an already-kept column exceeds the threshold is
dropped, so exactly one member of each offending pair survives.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError

COVID_CATEGORICAL = (
    "sex", "patient_type", "intubed", "pneumonia", "pregnancy", "diabetes",
    "copd", "asthma", "inmsupr", "hypertension", "other_disease",
    "cardiovascular", "obesity", "renal_chronic", "tobacco",
    "contact_other_covid", "covid_res",
)


@dataclass(frozen=True)
class RawTable:
    column_names: tuple
    rows: list

    @property
    def n_rows(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (N, d) float
    labels: tuple         # N verbatim label cells
    feature_names: tuple
    label_name: str = "label"

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=float))
        if feats.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if len(self.labels) != feats.shape[0]:
            raise ValueError("label count does not match feature rows")
        if len(self.feature_names) != feats.shape[1]:
            raise ValueError("feature name count does not match columns")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class OutlierRule:
    """Drop every row where all (column, value) conditions hold verbatim."""
    name: str
    conditions: tuple  # ((column, value), ...)


@dataclass(frozen=True)
class PreprocessConfig:
    label_column: str = "icu"
    corr_threshold: float = 0.85
    missing_codes: tuple = ("97", "98", "99", "")
    drop_columns: tuple = ("id", "entry_date", "date_symptoms", "date_died")
    categorical_columns: tuple = COVID_CATEGORICAL
    outlier_rules: tuple = (
        OutlierRule("male_pregnancy", (("sex", "2"), ("pregnancy", "1"))),
    )

    def __post_init__(self):
        if not (0.0 < self.corr_threshold <= 1.0):
            raise ValueError("correlation threshold must lie in (0, 1]")


@dataclass(frozen=True)
class PreprocessReport:
    input_rows: int
    input_columns: tuple
    dropped_columns: tuple
    missing_label_rows: int
    outlier_rows: tuple          # ((rule name, rows dropped), ...)
    skipped_rules: tuple         # ((rule name, reason), ...)
    kept_rows: int
    onehot: tuple                # ((column, (new columns...)), ...)
    numeric_columns: tuple
    pruned: tuple                # ((dropped, kept against, r), ...)
    feature_names: tuple
    label_column: str

    @property
    def dropped_rows_total(self) -> int:
        return self.missing_label_rows + sum(n for _, n in self.outlier_rows)

    def text(self) -> str:
        lines = [
            f"input rows: {self.input_rows}",
            f"input columns: {len(self.input_columns)}",
            f"dropped columns (configured): {', '.join(self.dropped_columns) or '-'}",
            f"rows dropped for missing label: {self.missing_label_rows}",
        ]
        for name, n in self.outlier_rows:
            lines.append(f"rows dropped by outlier rule {name}: {n}")
        for name, reason in self.skipped_rules:
            lines.append(f"outlier rule {name} skipped: {reason}")
        lines.append(f"rows kept: {self.kept_rows}")
        for col, new in self.onehot:
            lines.append(f"one-hot {col}: {', '.join(new)}")
        if self.numeric_columns:
            lines.append(f"numeric columns: {', '.join(self.numeric_columns)}")
        for dropped, kept, r in self.pruned:
            lines.append(f"pruned {dropped} (|r|={abs(r):.4f} with {kept})")
        lines.append(f"final feature count: {len(self.feature_names)}")
        lines.append(f"label column: {self.label_column}")
        return "\n".join(lines) + "\n"


def load_csv(path) -> RawTable:
    """Parse an RFC-4180 CSV with a header row, preserving cells verbatim.

    Completely empty rows are skipped; any other row whose cell count differs
    from the header is an error naming that (1-based) data row.
    """
    try:
        f = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with f:
        rows = list(csv.reader(f))
    if not rows:
        raise DataError(f"{path}: no header row")
    header = tuple(rows[0])
    seen = set()
    for name in header:
        if name in seen:
            raise DataError(f"duplicate column name {name!r}")
        seen.add(name)
    data = []
    for i, row in enumerate(rows[1:], start=1):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(
                f"row {i} has {len(row)} cells; expected {len(header)}"
            )
        data.append(row)
    return RawTable(header, data)


def preprocess(table: RawTable, config: PreprocessConfig = PreprocessConfig()):
    """Clean a raw table into a numeric Dataset; returns (Dataset, report)."""
    cols = list(table.column_names)
    if config.label_column not in cols:
        raise DataError(f"label column {config.label_column!r} not found")
    dropped_cols = tuple(c for c in config.drop_columns if c in cols)
    col_idx = {c: i for i, c in enumerate(cols)}
    feature_cols = [c for c in cols
                    if c not in dropped_cols and c != config.label_column]

    label_i = col_idx[config.label_column]
    missing = set(config.missing_codes)
    kept = [r for r in table.rows if r[label_i] not in missing]
    n_missing = table.n_rows - len(kept)

    outlier_counts = []
    skipped_rules = []
    for rule in config.outlier_rules:
        absent = [c for c, _ in rule.conditions if c not in col_idx]
        if absent:
            skipped_rules.append((rule.name, f"column {absent[0]!r} absent"))
            continue
        cond = [(col_idx[c], v) for c, v in rule.conditions]
        before = len(kept)
        kept = [r for r in kept if not all(r[i] == v for i, v in cond)]
        outlier_counts.append((rule.name, before - len(kept)))

    if not kept:
        raise DataError("all rows dropped during preprocessing")

    columns, names = [], []
    onehot, numeric_cols = [], []
    for c in feature_cols:
        i = col_idx[c]
        cells = [r[i] for r in kept]
        if c in config.categorical_columns:
            cats = sorted(set(cells))
            group = []
            for cat in cats:
                names.append(f"{c}={cat}")
                group.append(f"{c}={cat}")
                columns.append(np.fromiter((1.0 if v == cat else 0.0
                                            for v in cells), dtype=float))
            onehot.append((c, tuple(group)))
        else:
            vals = np.empty(len(cells))
            for j, v in enumerate(cells):
                try:
                    vals[j] = float(v)
                except ValueError:
                    raise DataError(
                        f"column {c!r}, data row {j + 1}: "
                        f"cannot parse {v!r} as a number"
                    ) from None
            if not np.isfinite(vals).all():
                j = int(np.flatnonzero(~np.isfinite(vals))[0])
                raise DataError(f"column {c!r}, data row {j + 1}: non-finite value")
            names.append(c)
            numeric_cols.append(c)
            columns.append(vals)

    if not columns:
        raise DataError("zero surviving feature columns")
    mat = np.column_stack(columns)

    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(mat.T) if mat.shape[1] > 1 else np.ones((1, 1))
    corr = np.nan_to_num(corr, nan=0.0)

    keep_idx, pruned = [], []
    for j in range(mat.shape[1]):
        against = next((i for i in keep_idx
                        if abs(corr[i, j]) > config.corr_threshold), None)
        if against is None:
            keep_idx.append(j)
        else:
            pruned.append((names[j], names[against], float(corr[against, j])))
    if not keep_idx:
        raise DataError("zero surviving feature columns")

    labels = tuple(r[label_i] for r in kept)
    codes = sorted(set(labels))
    if len(codes) != 2:
        raise DataError(
            f"label must have exactly two codes after cleaning, found {codes}"
        )

    final_names = tuple(names[j] for j in keep_idx)
    ds = Dataset(
        features=np.ascontiguousarray(mat[:, keep_idx]),
        labels=labels,
        feature_names=final_names,
        label_name=config.label_column,
    )
    report = PreprocessReport(
        input_rows=table.n_rows,
        input_columns=table.column_names,
        dropped_columns=dropped_cols,
        missing_label_rows=n_missing,
        outlier_rows=tuple(outlier_counts),
        skipped_rules=tuple(skipped_rules),
        kept_rows=len(kept),
        onehot=tuple(onehot),
        numeric_columns=tuple(numeric_cols),
        pruned=tuple(pruned),
        feature_names=final_names,
        label_column=config.label_column,
    )
    return ds, report


def save_dataset(ds: Dataset, path):
    """Write a Dataset as CSV: feature columns then the label column.

    Floats are written with repr (shortest round-trip form), so saving and
    reloading reproduces every value bit-exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [ds.label_name])
        for i in range(ds.n_rows):
            w.writerow([repr(float(v)) for v in ds.features[i]] + [ds.labels[i]])


def load_dataset(path, label_column=None) -> Dataset:
    """Read a Dataset CSV; the label is the named or last column."""
    table = load_csv(path)
    if label_column is None:
        label_column = table.column_names[-1]
    if label_column not in table.column_names:
        raise DataError(f"label column {label_column!r} not found")
    li = table.column_names.index(label_column)
    fnames = tuple(c for c in table.column_names if c != label_column)
    feats = np.empty((table.n_rows, len(fnames)))
    labels = []
    for j, row in enumerate(table.rows):
        cells = [v for i, v in enumerate(row) if i != li]
        for k, v in enumerate(cells):
            try:
                feats[j, k] = float(v)
            except ValueError:
                raise DataError(
                    f"column {fnames[k]!r}, data row {j + 1}: "
                    f"cannot parse {v!r} as a number"
                ) from None
        labels.append(row[li])
    return Dataset(feats, tuple(labels), fnames, label_column)


def feature_matrix(table: RawTable) -> np.ndarray:
    """Parse every column of a raw table as numbers (for unlabeled inputs)."""
    n, d = table.n_rows, len(table.column_names)
    X = np.empty((n, d))
    for j, row in enumerate(table.rows):
        for k, v in enumerate(row):
            try:
                X[j, k] = float(v)
            except ValueError:
                raise DataError(
                    f"column {table.column_names[k]!r}, data row {j + 1}: "
                    f"cannot parse {v!r} as a number"
                ) from None
    return X
