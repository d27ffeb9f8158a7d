"""Survey ingestion, schema validation, and constraint-design construction.

The loaders are strict on purpose: every used column must be declared with a
kind (``categorical``, ``binary``, ``continuous``), unparseable cells raise
``SchemaError`` with the row number, and rows with missing values in declared
columns are removed listwise with a logged count. Downstream code never sees
NaN.
"""

from __future__ import annotations

import csv
import logging
import operator
from dataclasses import dataclass, replace
from itertools import product

import numpy as np
import scipy.linalg

from .errors import RankDeficiencyError, SchemaError

logger = logging.getLogger(__name__)

KINDS = frozenset({"categorical", "binary", "continuous"})

#: cell texts treated as missing by the loaders
MISSING_TOKENS = ("", "NA")

_FILTER_OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class SurveyFrame:
    """Column store for one rectangular dataset.

    ``columns`` maps name to a numpy array (float64 for binary/continuous,
    object dtype of str for categorical); ``row_ids`` keeps the 1-based
    source row numbers so weight output stays joinable after listwise
    deletion and filtering.
    """

    columns: dict[str, np.ndarray]
    kinds: dict[str, str]
    row_ids: np.ndarray

    @property
    def n(self) -> int:
        return len(self.row_ids)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise SchemaError(f"column {name!r} is not in the frame")
        return self.columns[name]

    def kind(self, name: str) -> str:
        if name not in self.kinds:
            raise SchemaError(f"column {name!r} has no declared kind")
        return self.kinds[name]

    def select(self, mask: np.ndarray) -> "SurveyFrame":
        cols = {k: v[mask] for k, v in self.columns.items()}
        return replace(self, columns=cols, row_ids=self.row_ids[mask])

    def levels(self, name: str) -> tuple[str, ...]:
        """Sorted distinct levels of a categorical column."""
        if self.kind(name) != "categorical":
            raise SchemaError(f"column {name!r} is not categorical")
        return tuple(sorted(set(self.columns[name].tolist())))


def _parse_cell(text: str, kind: str, column: str, row: int):
    if kind == "categorical":
        return text
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(
            f"row {row}, column {column!r}: {text!r} is not numeric"
        ) from None
    if kind == "binary" and value not in (0.0, 1.0):
        raise SchemaError(
            f"row {row}, column {column!r}: binary value must be 0 or 1, got {text!r}"
        )
    return value


def frame_from_columns(
    columns: dict[str, np.ndarray], kinds: dict[str, str]
) -> SurveyFrame:
    """Build a frame from in-memory arrays, validating kinds and lengths."""
    if not columns:
        raise SchemaError("frame needs at least one column")
    lengths = {len(v) for v in columns.values()}
    if len(lengths) != 1:
        raise SchemaError(f"column lengths differ: {sorted(lengths)}")
    out: dict[str, np.ndarray] = {}
    for name, values in columns.items():
        kind = kinds.get(name)
        if kind not in KINDS:
            raise SchemaError(f"column {name!r}: unknown kind {kind!r}")
        arr = np.asarray(values)
        if kind == "categorical":
            out[name] = np.asarray([str(v) for v in arr.tolist()], dtype=object)
        else:
            arr = arr.astype(np.float64)
            if not np.all(np.isfinite(arr)):
                raise SchemaError(f"column {name!r} contains non-finite values")
            if kind == "binary" and not np.all(np.isin(arr, (0.0, 1.0))):
                raise SchemaError(f"column {name!r}: binary values must be 0 or 1")
            out[name] = arr
    n = lengths.pop()
    return SurveyFrame(out, dict(kinds), np.arange(1, n + 1, dtype=np.int64))


def load_table(
    path: str,
    schema: dict[str, str],
    *,
    delimiter: str = ",",
    missing: tuple[str, ...] = MISSING_TOKENS,
) -> SurveyFrame:
    """Read a delimited file, keeping only the declared columns.

    Rows with a missing token in any declared column are dropped and the
    count is logged. Raises ``SchemaError`` for undeclared kinds, absent
    columns, or unparseable cells.
    """
    for name, kind in schema.items():
        if kind not in KINDS:
            raise SchemaError(f"column {name!r}: unknown kind {kind!r}")
    raw: dict[str, list] = {name: [] for name in schema}
    row_ids: list[int] = []
    dropped = 0
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle, delimiter=delimiter)
        header = reader.fieldnames or []
        absent = [name for name in schema if name not in header]
        if absent:
            raise SchemaError(f"{path}: declared columns missing from header: {absent}")
        for lineno, record in enumerate(reader, start=1):
            cells = {name: record[name] for name in schema}
            if any(cells[name] is None or cells[name].strip() in missing for name in schema):
                dropped += 1
                continue
            for name in schema:
                raw[name].append(_parse_cell(cells[name].strip(), schema[name], name, lineno))
            row_ids.append(lineno)
    if dropped:
        logger.info("%s: dropped %d rows with missing values (listwise)", path, dropped)
    if not row_ids:
        raise SchemaError(f"{path}: no complete rows after listwise deletion")
    columns = {
        name: (
            np.asarray(raw[name], dtype=object)
            if schema[name] == "categorical"
            else np.asarray(raw[name], dtype=np.float64)
        )
        for name in schema
    }
    return SurveyFrame(columns, dict(schema), np.asarray(row_ids, dtype=np.int64))


def apply_filters(frame: SurveyFrame, filters: list[dict]) -> SurveyFrame:
    """Apply row filters of the form {column, op, value}.

    ``op`` is one of ==, !=, <, <=, >, >= (ordering ops require a numeric
    column). Categorical comparisons are on the level string.
    """
    mask = np.ones(frame.n, dtype=bool)
    for spec in filters:
        try:
            column, op, value = spec["column"], spec["op"], spec["value"]
        except KeyError as err:
            raise SchemaError(f"filter needs column/op/value, got {spec!r}") from err
        if op not in _FILTER_OPS:
            raise SchemaError(f"filter op {op!r} not supported")
        values = frame.column(column)
        if frame.kind(column) == "categorical":
            if op not in ("==", "!="):
                raise SchemaError(f"op {op!r} needs a numeric column, {column!r} is categorical")
            hit = np.asarray([_FILTER_OPS[op](v, str(value)) for v in values.tolist()])
        else:
            hit = _FILTER_OPS[op](values, float(value))
        mask &= hit
    kept = frame.select(mask)
    if kept.n < frame.n:
        logger.info("filters kept %d of %d rows", kept.n, frame.n)
    if kept.n == 0:
        raise SchemaError("filters removed every row")
    return kept


def derive_indicator(
    frame: SurveyFrame, name: str, source: str, op: str, value
) -> SurveyFrame:
    """Add a 0/1 column from a comparison on an existing column."""
    if name in frame.columns:
        raise SchemaError(f"column {name!r} already exists")
    if op not in _FILTER_OPS:
        raise SchemaError(f"op {op!r} not supported")
    values = frame.column(source)
    if frame.kind(source) == "categorical":
        if op not in ("==", "!="):
            raise SchemaError(f"op {op!r} needs a numeric column, {source!r} is categorical")
        flag = np.asarray([_FILTER_OPS[op](v, str(value)) for v in values.tolist()])
    else:
        flag = _FILTER_OPS[op](values, float(value))
    columns = dict(frame.columns)
    columns[name] = flag.astype(np.float64)
    kinds = dict(frame.kinds)
    kinds[name] = "binary"
    return SurveyFrame(columns, kinds, frame.row_ids)


# --- targets -----------------------------------------------------------------


@dataclass(frozen=True)
class PopulationTarget:
    """Target moments taken from a population frame (census, big probe)."""

    frame: SurveyFrame
    weights: np.ndarray  # positive, one per row

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(w) != self.frame.n:
            raise SchemaError("population weights length differs from frame rows")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise SchemaError("population weights must be positive and finite")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class MarginTarget:
    """Target moments given directly as margins.

    ``margins`` maps variable name to either {level: share} for categorical,
    binary (levels "0"/"1"), and interaction variables ("a:b" with joint
    levels "x:y"), or {None: mean} for continuous variables. Shares lie in
    [0, 1]; with two or more levels listed they must sum to 1 within 1e-9
    (a lone level's complement is implied).
    """

    margins: dict[str, dict[str | None, float]]

    def __post_init__(self):
        for var, entry in self.margins.items():
            keys = set(entry)
            if keys == {None}:
                continue
            if None in keys:
                raise SchemaError(f"margin variable {var!r} mixes mean and level rows")
            shares = np.asarray(list(entry.values()), dtype=np.float64)
            if np.any(shares < 0) or np.any(shares > 1):
                raise SchemaError(f"margin shares for {var!r} must lie in [0, 1]")
            if len(shares) > 1 and abs(shares.sum() - 1.0) > 1e-9:
                raise SchemaError(
                    f"margin shares for {var!r} sum to {shares.sum():.12g}, expected 1"
                )


TargetSpec = PopulationTarget | MarginTarget


def load_population_target(
    path: str,
    schema: dict[str, str],
    *,
    weight_column: str | None = None,
    delimiter: str = ",",
) -> PopulationTarget:
    """Load a population frame; ``weight_column`` defaults to uniform."""
    full_schema = dict(schema)
    if weight_column is not None:
        full_schema[weight_column] = "continuous"
    frame = load_table(path, full_schema, delimiter=delimiter)
    if weight_column is None:
        weights = np.ones(frame.n)
    else:
        weights = frame.column(weight_column)
        columns = {k: v for k, v in frame.columns.items() if k != weight_column}
        kinds = {k: v for k, v in frame.kinds.items() if k != weight_column}
        frame = SurveyFrame(columns, kinds, frame.row_ids)
    return PopulationTarget(frame, weights)


def load_margins(path: str, *, delimiter: str = ",") -> MarginTarget:
    """Read a margin file with header ``variable,level,value``."""
    margins: dict[str, dict[str | None, float]] = {}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle, delimiter=delimiter)
        required = {"variable", "level", "value"}
        if not required.issubset(reader.fieldnames or []):
            raise SchemaError(f"{path}: margin file needs columns variable,level,value")
        for lineno, record in enumerate(reader, start=1):
            var = record["variable"].strip()
            level = record["level"].strip()
            try:
                value = float(record["value"])
            except (TypeError, ValueError):
                raise SchemaError(
                    f"{path} row {lineno}: value {record['value']!r} is not numeric"
                ) from None
            entry = margins.setdefault(var, {})
            key = level if level else None
            if key in entry:
                raise SchemaError(f"{path} row {lineno}: duplicate margin for {var!r}/{level!r}")
            entry[key] = value
    if not margins:
        raise SchemaError(f"{path}: margin file is empty")
    return MarginTarget(margins)


# --- feature expansion -------------------------------------------------------


@dataclass(frozen=True)
class FeatureTerm:
    """One weighting term: a single variable or a product interaction."""

    sources: tuple[str, ...]

    @property
    def name(self) -> str:
        return ":".join(self.sources)

    @property
    def is_interaction(self) -> bool:
        return len(self.sources) > 1


def terms_from_config(
    variables: list[str], interactions: list[list[str]] | None = None
) -> tuple[FeatureTerm, ...]:
    terms = [FeatureTerm((v,)) for v in variables]
    for combo in interactions or []:
        if len(combo) < 2:
            raise SchemaError(f"interaction needs at least two variables, got {combo}")
        terms.append(FeatureTerm(tuple(combo)))
    names = [t.name for t in terms]
    if len(set(names)) != len(names):
        raise SchemaError("duplicate weighting terms")
    return tuple(terms)


@dataclass(frozen=True)
class Design:
    """Constraint design: columns of f(X) with their population targets."""

    matrix: np.ndarray  # (n, p) float64
    column_names: tuple[str, ...]
    column_sources: tuple[frozenset, ...]
    targets: np.ndarray  # (p,)
    term_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def to_problem(self, base_weights=None, *, tol: float = 1e-8, max_iter: int = 200):
        from .calibrate import CalibrationProblem

        return CalibrationProblem(
            self.matrix,
            self.targets,
            column_names=self.column_names,
            column_sources=self.column_sources,
            base_weights=base_weights,
            tol=tol,
            max_iter=max_iter,
        )


def _expand_variable(
    frame: SurveyFrame, var: str, levels: tuple[str, ...] | None
) -> list[tuple[str, np.ndarray]]:
    """Expanded columns of one variable, reference level dropped.

    The reference is the lexicographically smallest level; for binary and
    continuous variables the column passes through under its own name.
    """
    kind = frame.kind(var)
    if kind == "categorical":
        assert levels is not None
        values = frame.column(var)
        return [
            (f"{var}={level}", (values == level).astype(np.float64))
            for level in levels[1:]
        ]
    return [(var, frame.column(var))]


def _level_sets(
    survey: SurveyFrame, target: TargetSpec, variables: set[str]
) -> dict[str, tuple[str, ...]]:
    """Shared level sets for categorical variables; mismatches are errors."""
    levels: dict[str, tuple[str, ...]] = {}
    for var in sorted(variables):
        if survey.kind(var) != "categorical":
            continue
        survey_levels = set(survey.levels(var))
        if isinstance(target, PopulationTarget):
            target_levels = set(target.frame.levels(var))
        else:
            entry = target.margins.get(var)
            if entry is None or set(entry) == {None}:
                raise SchemaError(f"no margin rows for categorical variable {var!r}")
            target_levels = {str(k) for k in entry}
        extra_survey = survey_levels - target_levels
        extra_target = target_levels - survey_levels
        problems = []
        if extra_survey:
            problems.append(f"levels {sorted(extra_survey)} appear in the survey only")
        if extra_target:
            problems.append(f"levels {sorted(extra_target)} appear in the target only")
        if problems:
            raise SchemaError(f"variable {var!r}: " + "; ".join(problems))
        levels[var] = tuple(sorted(survey_levels))
    return levels


def _margin_lookup(target: MarginTarget, term: FeatureTerm, column: str) -> float:
    """Margin value for one expanded column name."""
    if term.is_interaction:
        entry = target.margins.get(term.name)
        if entry is None:
            raise SchemaError(
                f"interaction {term.name!r} needs margin rows or a population frame"
            )
        # column is like "a=x:b=y"; the margin level key is "x:y"
        level = ":".join(part.split("=", 1)[1] if "=" in part else part
                         for part in column.split(":"))
        if level not in entry:
            raise SchemaError(f"margin for {term.name!r} lacks level {level!r}")
        return float(entry[level])
    var = term.sources[0]
    entry = target.margins.get(var)
    if entry is None:
        raise SchemaError(f"no margin rows for variable {var!r}")
    if "=" in column:
        level = column.split("=", 1)[1]
        if level not in entry:
            raise SchemaError(f"margin for {var!r} lacks level {level!r}")
        return float(entry[level])
    if None in entry:
        return float(entry[None])
    # binary variable given as level shares
    if "1" not in entry:
        raise SchemaError(f"margin for binary variable {var!r} needs a level-1 row")
    return float(entry["1"])


def check_rank(matrix: np.ndarray) -> tuple[int, ...]:
    """Indices of linearly dependent columns, judged with the implicit
    normalization constraint included (a constant column is dependent)."""
    n = matrix.shape[0]
    scaled = matrix / np.maximum(np.abs(matrix).max(axis=0), 1e-300)
    augmented = np.column_stack([np.ones(n), scaled])
    r = scipy.linalg.qr(augmented, mode="r", pivoting=True)
    diag = np.abs(np.diag(r[0]))
    pivots = r[1]
    rank = int(np.sum(diag > 1e-10 * max(diag[0], 1.0)))
    dependent = sorted(int(j) - 1 for j in pivots[rank:] if j > 0)
    # if the intercept itself got pivoted out, blame the constant column kept
    if len(dependent) < len(pivots) - rank:
        constant = [
            j for j in range(matrix.shape[1])
            if np.ptp(matrix[:, j]) == 0.0 and j not in dependent
        ]
        dependent = sorted(set(dependent) | set(constant))
    return tuple(dependent)


def build_features(
    survey: SurveyFrame, target: TargetSpec, terms: tuple[FeatureTerm, ...]
) -> Design:
    """Expand weighting terms into a full-rank design with targets.

    Categorical variables expand to level indicators with the reference
    (lexicographically smallest) level dropped; interactions are products
    of the expanded columns. Targets are weighted means on the population
    frame or direct margin values. Rank deficiency raises with the
    dependent column names.
    """
    if not terms:
        raise SchemaError("at least one weighting term is required")
    variables = {v for t in terms for v in t.sources}
    for var in sorted(variables):
        survey.kind(var)  # raises if undeclared
    levels = _level_sets(survey, target, variables)

    pop_frame = target.frame if isinstance(target, PopulationTarget) else None
    pop_w = None
    if isinstance(target, PopulationTarget):
        pop_w = target.weights / target.weights.sum()

    columns: list[np.ndarray] = []
    names: list[str] = []
    sources: list[frozenset] = []
    targets: list[float] = []
    for term in terms:
        expansions = [_expand_variable(survey, v, levels.get(v)) for v in term.sources]
        if pop_frame is not None:
            pop_expansions = [
                _expand_variable(pop_frame, v, levels.get(v)) for v in term.sources
            ]
        for idx in product(*[range(len(e)) for e in expansions]):
            parts = [expansions[k][i] for k, i in enumerate(idx)]
            name = ":".join(p[0] for p in parts)
            col = parts[0][1].copy()
            for _, extra in parts[1:]:
                col = col * extra
            if pop_frame is not None:
                pop_col = pop_expansions[0][idx[0]][1].copy()
                for k, i in enumerate(idx[1:], start=1):
                    pop_col = pop_col * pop_expansions[k][i][1]
                tgt = float(pop_w @ pop_col)
            else:
                tgt = _margin_lookup(target, term, name)
            columns.append(col)
            names.append(name)
            sources.append(frozenset(term.sources))
            targets.append(tgt)

    matrix = np.column_stack(columns).astype(np.float64)
    dependent = check_rank(matrix)
    if dependent:
        raise RankDeficiencyError(tuple(names[j] for j in dependent))
    return Design(
        matrix=matrix,
        column_names=tuple(names),
        column_sources=tuple(sources),
        targets=np.asarray(targets, dtype=np.float64),
        term_names=tuple(t.name for t in terms),
    )
