"""Exception hierarchy, grouped by subsystem."""


class AuditoriumError(Exception):
    """Base class for all package errors."""


# --- dataset / asset loading ---

class DatasetError(AuditoriumError):
    pass


class MalformedManifest(DatasetError):
    pass


class MissingFile(DatasetError):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class ChannelCountMismatch(DatasetError):
    def __init__(self, path, expected, found):
        super().__init__(f"{path}: expected {expected} channels, found {found}")
        self.path = path
        self.expected = expected
        self.found = found


class SampleRateMismatch(DatasetError):
    def __init__(self, path, expected, found):
        super().__init__(f"{path}: expected {expected} Hz, found {found} Hz")
        self.path = path
        self.expected = expected
        self.found = found


class NonFiniteSample(DatasetError):
    def __init__(self, path, index):
        super().__init__(f"{path}: non-finite sample at flat index {index}")
        self.path = path
        self.index = index


class KeyNotFound(DatasetError):
    pass


class NotMono(DatasetError):
    pass


class UnreadableFile(DatasetError):
    pass


# --- DSP ---

class DspError(AuditoriumError):
    pass


class EmptyIr(DspError):
    pass


class InvalidBlockSize(DspError):
    pass


class UnsupportedOrder(DspError):
    pass


class DimensionMismatch(DspError):
    pass


class CutoffOutOfRange(DspError):
    pass


class NotPlaying(DspError):
    pass


class MissingDecoder(DspError):
    pass


class UnknownCondition(DspError):
    pass


class UnknownSeat(DspError):
    pass


# --- OSC wire protocol ---

class OscError(AuditoriumError):
    pass


class InvalidAddress(OscError):
    pass


class UnsupportedArgType(OscError):
    pass


class NotOsc(OscError):
    pass


class Truncated(OscError):
    pass


class BadPadding(OscError):
    pass


class UnknownTypeTag(OscError):
    def __init__(self, tag):
        super().__init__(f"unknown OSC type tag {tag!r}")
        self.tag = tag


class BindFailed(OscError):
    pass


# --- session ---

class SessionError(AuditoriumError):
    pass


class InvalidConfig(SessionError):
    pass


class UnknownLabel(SessionError):
    pass


class OutOfRange(SessionError):
    pass


class WrongPhase(SessionError):
    pass


class Incomplete(SessionError):
    """Trial advance refused; ``missing`` lists unrated "attribute/label" cells."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"trial incomplete, missing ratings: {', '.join(self.missing)}")


class NotFinished(SessionError):
    pass


class PersistFailure(SessionError):
    pass


# --- telemetry / analysis ---

class UnorderedInput(AuditoriumError):
    pass


class NoHiddenReference(AuditoriumError):
    pass


class EmptyInput(AuditoriumError):
    pass


# --- configuration / CLI ---

class ConfigError(AuditoriumError):
    pass


class MalformedTrace(AuditoriumError):
    pass


class UnreachableTarget(AuditoriumError):
    pass


class AudioUnavailable(AuditoriumError):
    """Requested audio output cannot be opened (device missing or backend absent)."""
