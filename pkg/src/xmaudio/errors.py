"""Exception hierarchy shared by every subsystem.

Each error class carries a distinct process exit code so the CLI can
surface failures in a scriptable way.
"""


class XmAudioError(Exception):
    exit_code = 1


# --- embedding store -------------------------------------------------------

class FormatError(XmAudioError):
    exit_code = 10


class DuplicateIdError(XmAudioError):
    exit_code = 11


class DataError(XmAudioError):
    exit_code = 12


class TruncationError(XmAudioError):
    exit_code = 13


class IoError(XmAudioError):
    exit_code = 14


class ZeroNormError(XmAudioError):
    exit_code = 15


class DimError(XmAudioError):
    exit_code = 16


# --- pairing ---------------------------------------------------------------

class InsufficientPoolError(XmAudioError):
    exit_code = 17


class EmptyInputError(XmAudioError):
    exit_code = 18


class MissingStyleError(XmAudioError):
    exit_code = 19


class SplitError(XmAudioError):
    exit_code = 20


class OracleSizeError(XmAudioError):
    exit_code = 21


# --- audio DSP -------------------------------------------------------------

class UnsupportedCodecError(XmAudioError):
    exit_code = 22


class TooShortError(XmAudioError):
    exit_code = 23


class BandError(XmAudioError):
    exit_code = 24


# --- diffusion -------------------------------------------------------------

class ScheduleError(XmAudioError):
    exit_code = 25


class ShapeError(XmAudioError):
    exit_code = 26


class TimestepError(XmAudioError):
    exit_code = 27


class StepsError(XmAudioError):
    exit_code = 28


# --- neural nets -----------------------------------------------------------

class GradError(XmAudioError):
    exit_code = 29


class ConfigError(XmAudioError):
    exit_code = 30


# --- metrics ---------------------------------------------------------------

class SampleError(XmAudioError):
    exit_code = 31


class SymmetryError(XmAudioError):
    exit_code = 32


class SupportError(XmAudioError):
    exit_code = 33


class IdLookupError(XmAudioError):
    exit_code = 34
