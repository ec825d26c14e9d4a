"""Shared exception types.

``DataError`` covers problems with input files and their contents; the CLI
maps it (and ``OSError``) to exit code 2, while ``ValueError`` from bad
arguments or configuration maps to exit code 1.
"""


class DataError(Exception):
    """Input data is missing, malformed, or inconsistent."""


class ManifestError(DataError):
    """A labeled-image manifest could not be parsed or validated."""


class EmbeddingFileError(DataError):
    """An embedding file could not be parsed or validated."""


class ReportFormatError(DataError):
    """A metrics report file has an unknown format or version."""


class LandmarkFileError(DataError):
    """A landmark file could not be parsed or validated."""
