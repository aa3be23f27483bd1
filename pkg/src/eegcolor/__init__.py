"""Color-stimulus classification from 4-channel EEG: wavelet band power,
an 86-feature window descriptor, reduction to ten features, six classifier
families and a cross-validation harness."""

__version__ = "0.1.0"
BUILD_ID = f"eegcolor {__version__} (features v1, report v1)"
