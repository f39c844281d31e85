"""Clause-wise recursive text-to-SQL with a from-scratch training core."""

__version__ = "0.1.0"
