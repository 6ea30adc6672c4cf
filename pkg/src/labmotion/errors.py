"""Exception types shared across the library."""

from __future__ import annotations


class LabmotionError(Exception):
    """Base class for all domain errors raised by this package."""


class PgmError(LabmotionError):
    """Malformed PGM data; the message names the offending byte offset."""


class SceneSpecError(LabmotionError):
    """Invalid synthetic-scene specification."""


class DetectionFileError(LabmotionError):
    """Invalid detection file; the message names the record index and field."""


class TrackingError(LabmotionError):
    """Target association or tracking failure; the message names the frame."""


class MatchingError(LabmotionError):
    """Descriptor matching cannot proceed as configured."""


class NoConsensusError(LabmotionError):
    """No match survived the motion-consensus filter."""
