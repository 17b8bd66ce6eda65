"""queryboard: interactive visualization interfaces generated from SQL query logs."""

__version__ = "0.1.0"
