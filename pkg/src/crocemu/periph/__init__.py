from .pins import PinEvent, PinRecorder
from .uart import FramingError, Uart, uart_decode_oracle
from .gpio import Gpio
from .timer import MachineTimer
from .neopixel import (AmbiguousPulse, NeoPixel, PartialByte,
                       neopixel_decode_oracle)

__all__ = ["PinEvent", "PinRecorder", "FramingError", "Uart",
           "uart_decode_oracle", "Gpio", "MachineTimer", "AmbiguousPulse",
           "NeoPixel", "PartialByte", "neopixel_decode_oracle"]
