"""Database schema model and the Spider-style tables.json interchange."""

from __future__ import annotations

from dataclasses import dataclass, field

from .vocab import SEP, tokenize

COLUMN_TYPES = ("text", "number", "time", "boolean", "other")

STAR = 0  # descriptor index of the star pseudo-column


class SchemaValidationError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnDescriptor:
    table_index: int  # -1 for the star pseudo-column
    table_name: str
    column_name: str
    is_star: bool
    column_type: str

    def token_sequence(self):
        """table-name words, [SEP], column-name words, then the type word.
        The star pseudo-column is the bare '*' token."""
        if self.is_star:
            return ["*"]
        return tokenize(self.table_name) + [SEP] + tokenize(self.column_name) + [
            self.column_type
        ]

    def identity(self):
        """Alias-free identity used by the evaluator."""
        if self.is_star:
            return ("", "*")
        return (self.table_name.lower(), self.column_name.lower())


@dataclass
class Schema:
    db_id: str
    table_names: list
    columns: list  # ColumnDescriptor, star at index 0
    foreign_keys: list = field(default_factory=list)  # (col_idx, col_idx)

    def __post_init__(self):
        if not self.columns or not self.columns[STAR].is_star:
            raise SchemaValidationError(
                f"{self.db_id}: descriptor 0 must be the star pseudo-column"
            )
        seen = set()
        for d in self.columns[1:]:
            key = d.identity()
            if key in seen:
                raise SchemaValidationError(
                    f"{self.db_id}: duplicate column {key[0]}.{key[1]}"
                )
            seen.add(key)
            if not 0 <= d.table_index < len(self.table_names):
                raise SchemaValidationError(
                    f"{self.db_id}: bad table index on {d.column_name}"
                )
        n = len(self.columns)
        for a, b in self.foreign_keys:
            if not (0 < a < n and 0 < b < n):
                raise SchemaValidationError(f"{self.db_id}: foreign key out of range")

    # ------------------------------------------------------------------

    def columns_of_table(self, table_index):
        return [
            i
            for i, d in enumerate(self.columns)
            if not d.is_star and d.table_index == table_index
        ]

    def find_table(self, name):
        low = name.lower()
        for i, t in enumerate(self.table_names):
            if t.lower() == low:
                return i
        return None

    def find_column(self, column_name, table_index=None):
        """Descriptor index by name, optionally restricted to one table."""
        if column_name == "*":
            return STAR
        low = column_name.lower()
        for i, d in enumerate(self.columns):
            if d.is_star:
                continue
            if d.column_name.lower() == low and (
                table_index is None or d.table_index == table_index
            ):
                return i
        return None

    def fk_edges(self):
        """(table_a, table_b, col_a, col_b) per foreign key."""
        out = []
        for a, b in self.foreign_keys:
            out.append(
                (self.columns[a].table_index, self.columns[b].table_index, a, b)
            )
        return out

    # ------------------------------------------------------------------
    # Spider tables.json interchange

    @classmethod
    def from_spider_dict(cls, d):
        tables = list(d["table_names_original"])
        raw_cols = d["column_names_original"]
        types = d["column_types"]
        has_star = raw_cols and raw_cols[0][0] == -1
        shift = 0 if has_star else 1
        columns = [ColumnDescriptor(-1, "", "*", True, "other")]
        start = 1 if has_star else 0
        for (ti, name), ctype in list(zip(raw_cols, types))[start:]:
            if ctype not in COLUMN_TYPES:
                ctype = "other"
            columns.append(ColumnDescriptor(ti, tables[ti], name, False, ctype))
        fks = [(a + shift, b + shift) for a, b in d.get("foreign_keys", [])]
        return cls(d["db_id"], tables, columns, fks)

    def to_spider_dict(self):
        return {
            "db_id": self.db_id,
            "table_names_original": list(self.table_names),
            "column_names_original": [
                [d.table_index, d.column_name] for d in self.columns
            ],
            "column_types": [d.column_type for d in self.columns],
            "foreign_keys": [list(fk) for fk in self.foreign_keys],
        }
