"""Pulse programs: typed elements, the text format and protocol builders."""

from .builders import (ENDOR_EXTRA_WAIT, build_conventional_qdyne, build_endor_qdyne,
                       build_n14_response, with_nuclear_drive)
from .dsl import load_sequence, parse_sequence, serialize_sequence
from .elements import (FreeEvolution, Interaction, NuclearPulse, OpticalReadout, PhaseStep,
                       Polarize, RepeatBlock, SensorPulse, Sequence, SequenceTiming,
                       WeakMeasurement, sequence_timing)

__all__ = [
    "ENDOR_EXTRA_WAIT", "FreeEvolution", "Interaction", "NuclearPulse", "OpticalReadout",
    "PhaseStep", "Polarize", "RepeatBlock", "SensorPulse", "Sequence", "SequenceTiming",
    "WeakMeasurement", "build_conventional_qdyne", "build_endor_qdyne", "build_n14_response",
    "load_sequence", "parse_sequence", "sequence_timing", "serialize_sequence",
    "with_nuclear_drive",
]
