"""Base enum class carrying per-member metadata."""

from __future__ import annotations

from enum import Enum
from typing import Any


class CrosswalkJSONEnum(str, Enum):
    """String-valued enum whose members carry a metadata crosswalk.

    Members serialize as their string value (manifests, reports), while
    ``CROSSWALK()`` exposes structured facts about each member, for
    example whether a layer kind carries weights.

    Methods
    -------
    CROSSWALK()
        Return metadata describing enum values keyed by member name.
    meta(key)
        Return one metadata entry for this member.
    """

    @classmethod
    def CROSSWALK(cls) -> dict[str, dict[str, Any]]:
        """Return metadata describing enum values keyed by member name.

        Returns
        -------
        dict[str, dict[str, Any]]
            Mapping of member names to metadata dictionaries.

        Raises
        ------
        NotImplementedError
            If called on a subclass that has not implemented this method.
        """
        raise NotImplementedError(
            f"{cls.__name__}.CROSSWALK() must be implemented by subclasses"
        )

    def meta(self, key: str) -> Any:
        """Return the metadata entry ``key`` for this member.

        Parameters
        ----------
        key : str
            Metadata field name.

        Returns
        -------
        Any
            Stored metadata value.
        """
        return self.CROSSWALK()[self.name][key]


__all__ = ["CrosswalkJSONEnum"]
