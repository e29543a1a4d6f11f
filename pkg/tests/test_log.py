"""Tests for the development log formatter."""
# ruff: noqa: S101

import numpy as np

from src.logger.log import DevelopFormatter


class TestFormatValue:
    """Tests for DevelopFormatter.format_value."""

    def test_floats_are_compact(self) -> None:
        """Floats keep six significant digits."""
        assert DevelopFormatter.format_value(1.0 / 3.0) == "0.333333"
        assert DevelopFormatter.format_value(np.float64(2.5e-12)) == "2.5e-12"

    def test_ints_and_bools_unchanged(self) -> None:
        """Integral values are printed as they are."""
        assert DevelopFormatter.format_value(12345678) == "12345678"
        assert DevelopFormatter.format_value(True) == "True"  # noqa: FBT003

    def test_other_values_use_str(self) -> None:
        """Non-numeric extras fall back to ``str``."""
        assert DevelopFormatter.format_value("C") == "C"


class TestFormatRecord:
    """Tests for the extra, exception and full-line formatting."""

    def test_extra_escapes_braces(self) -> None:
        """Dict-valued extras cannot be mistaken for format fields."""
        record = {"extra": {"cost": 0.5, "shape": {"nx": 4}}}
        assert DevelopFormatter.format_extra(record) == "<lvl>cost=0.5</> <lvl>shape={{'nx': 4}}</>"

    def test_no_extra(self) -> None:
        """Records without extras format to an empty string."""
        assert DevelopFormatter.format_extra({}) == ""

    def test_exception_placeholder(self) -> None:
        """The traceback field appears only when an exception is attached."""
        assert DevelopFormatter.format_exception({"exception": None}) == "\n"
        assert DevelopFormatter.format_exception({"exception": ValueError("x")}) == "\n{exception}\n"

    def test_line_names_component(self) -> None:
        """The component name and message field are in the template."""
        template = DevelopFormatter("slm-ghost")({"extra": {"iteration": 3}})
        assert "<cyan>slm-ghost</>" in template
        assert "{message}" in template
        assert "iteration=3" in template
