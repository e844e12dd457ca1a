"""Detection and waveform/phase-shift design for RIS-assisted MIMO radar."""

__version__ = "0.1.0"
