"""Converter error hierarchy; the CLI maps these to exit code 1."""


class IngestError(Exception):
    """Base class for conversion failures."""


class SourceMissingError(IngestError):
    """A required source file is absent and was not (or could not be) downloaded."""


class ChecksumMismatchError(IngestError):
    """The source files do not hash to the expected checksum."""


class CorruptSourceError(IngestError):
    """A source file exists but cannot be parsed as its documented format."""
