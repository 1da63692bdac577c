from .decode import (DecodedInstr, IllegalInstruction, InstrKind,
                     NotCompressed, decode, decode_compressed)

__all__ = ["DecodedInstr", "IllegalInstruction", "InstrKind", "NotCompressed",
           "decode", "decode_compressed"]
