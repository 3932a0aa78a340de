"""Base class for serializable report records.

Reports (per-layer KSE analysis, ratio reports, study results) are
Pydantic models so they validate on load and serialize to one JSON record
each; the line-oriented report files the command-line front end writes are
sequences of these records.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from enum import Enum
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import ManifestError
from ..utils import check_filepath, customJSONEncoder

T = TypeVar("T", bound="BaseStructure")


def _plain(obj: Any) -> Any:
    # model_dump(mode="json") would turn inf into null
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, Sequence) and not isinstance(obj, (str, bytes, bytearray)):
        return [_plain(item) for item in obj]
    return obj


class BaseStructure(BaseModel):
    """Base class for report records.

    Non-finite floats survive a file round trip as JSON ``Infinity`` and
    ``NaN``; a fully pruned layer has an infinite compression ratio.

    Methods
    -------
    to_json()
        Serialize the record to a JSON-compatible dictionary.
    to_json_line()
        Serialize the record to one compact JSON line.
    to_json_file(filepath)
        Write the serialized record to a file.
    from_json_file(filepath)
        Load and validate a record from a file.
    write_records(records, filepath)
        Write several records, one JSON line each.
    read_records(filepath)
        Read records written by ``write_records``.
    """

    model_config = ConfigDict(use_enum_values=False, extra="forbid")

    def to_json(self) -> dict[str, Any]:
        """Return the record as a dictionary with enum members as values."""
        return _plain(self.model_dump())

    def to_json_line(self) -> str:
        """Return the record as one compact JSON line."""
        return json.dumps(self.to_json(), cls=customJSONEncoder, sort_keys=True)

    def to_json_file(self, filepath: str | Path) -> str:
        """Write :meth:`to_json` output to ``filepath``.

        Parameters
        ----------
        filepath : str or Path
            Destination path; missing parent directories are created.

        Returns
        -------
        str
            Path to the written file.
        """
        target = check_filepath(fullfilepath=str(filepath))
        target.write_text(
            json.dumps(self.to_json(), indent=4, ensure_ascii=False, cls=customJSONEncoder),
            encoding="utf-8",
        )
        return str(target)

    @classmethod
    def from_json_file(cls: type[T], filepath: str | Path) -> T:
        """Load and validate a record written by :meth:`to_json_file`.

        Raises
        ------
        ManifestError
            If the file is not JSON or does not match the record schema.
        """
        return cls._parse(Path(filepath).read_text(encoding="utf-8"), str(filepath))

    @classmethod
    def _parse(cls: type[T], text: str, where: str) -> T:
        try:
            return cls.model_validate(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{where} is not valid JSON: {exc}") from exc
        except ValidationError as exc:
            raise ManifestError(
                f"{where} is not a valid {cls.__name__}: {exc.error_count()} problem(s)",
                context={"errors": exc.errors(include_url=False)},
            ) from exc

    @classmethod
    def write_records(cls, records: Iterable[BaseStructure], filepath: str | Path) -> str:
        """Write ``records`` to ``filepath``, one JSON line each, in order."""
        target = check_filepath(fullfilepath=str(filepath))
        with open(target, mode="w", encoding="utf-8") as handle:
            for record in records:
                handle.write(record.to_json_line() + "\n")
        return str(target)

    @classmethod
    def read_records(cls: type[T], filepath: str | Path) -> list[T]:
        """Read records written by :meth:`write_records`; blank lines are skipped.

        Raises
        ------
        ManifestError
            If a line is not JSON or does not match the record schema.
        """
        with open(filepath, encoding="utf-8") as handle:
            return [
                cls._parse(line, f"{filepath} line {number}")
                for number, line in enumerate(handle, start=1)
                if line.strip()
            ]


def spec_field(name: str, *, description: str | None = None, **overrides: Any) -> Any:
    """Return a Pydantic ``Field`` titled after ``name``.

    Parameters
    ----------
    name : str
        Field name used to derive the title.
    description : str or None, default=None
        Optional field description.
    **overrides
        Additional keyword arguments forwarded to ``pydantic.Field``.

    Returns
    -------
    Any
        Configured Pydantic ``Field``.
    """
    field_kwargs: dict[str, Any] = {"title": name.replace("_", " ").title()}
    if description is not None:
        field_kwargs["description"] = description
    field_kwargs.update(overrides)
    return Field(**field_kwargs)


__all__ = ["BaseStructure", "spec_field"]
