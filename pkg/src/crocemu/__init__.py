"""Deterministic full-system emulator for the Croc RISC-V microcontroller platform."""

__version__ = "0.1.0"
