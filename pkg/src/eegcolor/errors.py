"""Exception hierarchy shared by all pipeline stages."""


class EEGColorError(ValueError):
    """Base class for every validation/contract failure raised by the package."""


# ingest
class MissingColumn(EEGColorError):
    def __init__(self, column):
        super().__init__(f"missing required column: {column}")
        self.column = column


class NonMonotoneTimestamps(EEGColorError):
    pass


class EmptyRecording(EEGColorError):
    pass


class NoStartMarker(EEGColorError):
    pass


class RecordingTooShort(EEGColorError):
    def __init__(self, fits, requested):
        super().__init__(
            f"recording too short: {fits} of {requested} epochs fit")
        self.fits = fits
        self.requested = requested


class InvalidSchedule(EEGColorError):
    pass


# preprocess / dsp / features
class SegmentTooShort(EEGColorError):
    pass


class MaskLengthMismatch(EEGColorError):
    pass


class NonPowerOfTwoLength(EEGColorError):
    pass


class InsufficientSupport(EEGColorError):
    pass


class BandNotCovered(EEGColorError):
    pass


class SeriesTooShort(EEGColorError):
    pass


class DegenerateWindow(EEGColorError):
    pass


class ZeroVariance(EEGColorError):
    pass


# reduce / models
class InsufficientData(EEGColorError):
    pass


class DegenerateClass(EEGColorError):
    pass


class NonFiniteLoss(EEGColorError):
    pass


class DimensionMismatch(EEGColorError):
    pass


class SingularData(EEGColorError):
    pass


class ClassMissing(EEGColorError):
    pass


# eval
class LengthMismatch(EEGColorError):
    pass


class EmptyInput(EEGColorError):
    pass


class SingleClass(EEGColorError):
    pass


class ClassTooSmall(EEGColorError):
    pass


class SingleSubject(EEGColorError):
    pass


class EmptyReport(EEGColorError):
    pass
