"""Plain-text report rendering with Jinja2 templates.

The built-in templates live in the package's ``templates`` directory; a
custom directory can be supplied to override them.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from kse_toolkit.validation import validate_safe_path

TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"


def format_ratio(value: float, digits: int = 3) -> str:
    """Format a ratio for tables; infinite ratios print as ``inf``."""
    if math.isinf(value):
        return "inf"
    return f"{value:.{digits}f}"


def format_count(value: float) -> str:
    """Format a large count with an M or K suffix."""
    if abs(value) >= 1e6:
        return f"{value / 1e6:.2f}M"
    if abs(value) >= 1e3:
        return f"{value / 1e3:.2f}K"
    return f"{value:g}"


class ReportRenderer:
    """Jinja2-based renderer for the toolkit's text reports.

    Attributes
    ----------
    base_dir : Path
        Directory templates are loaded from.

    Methods
    -------
    render(template_path, context=None)
        Render a template with the given context variables.

    Examples
    --------
    >>> renderer = ReportRenderer()
    >>> renderer.base_dir.name
    'templates'
    """

    def __init__(self, base_dir: Path | None = None) -> None:
        """Initialize the renderer.

        Parameters
        ----------
        base_dir : Path or None, default None
            Template directory. None selects the built-in templates.
        """
        self.base_dir = TEMPLATE_DIR if base_dir is None else Path(base_dir)
        self._env = Environment(
            loader=FileSystemLoader(str(self.base_dir)),
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
            undefined=StrictUndefined,
        )
        self._env.filters["ratio"] = format_ratio
        self._env.filters["magnitude"] = format_count

    def render(self, template_path: str, context: dict[str, Any] | None = None) -> str:
        """Render a template with the given context variables.

        Parameters
        ----------
        template_path : str
            Absolute path, or path relative to ``base_dir``.
        context : dict[str, Any] or None, default None
            Template variables.

        Returns
        -------
        str
            Rendered text.

        Raises
        ------
        InputValidationError
            If a relative path escapes ``base_dir``.
        jinja2.TemplateNotFound
            If the template does not exist.
        """
        path = Path(template_path)
        if path.is_absolute():
            env = self._env.overlay(loader=FileSystemLoader(str(path.parent)))
            return env.get_template(path.name).render(context or {})
        resolved = validate_safe_path(
            self.base_dir / template_path, base_dir=self.base_dir, field_name="template_path"
        )
        relative = resolved.relative_to(self.base_dir.resolve()).as_posix()
        return self._env.get_template(relative).render(context or {})


__all__ = ["ReportRenderer", "TEMPLATE_DIR", "format_ratio", "format_count"]
