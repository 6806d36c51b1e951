"""Shared test helpers, re-exported from the library's gradient-case list."""

from muser.numerics.gradcases import primitive_cases, scalarize

__all__ = ["primitive_cases", "scalarize"]
