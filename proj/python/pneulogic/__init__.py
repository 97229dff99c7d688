"""Pneumatic logic toolchain: FSM compiler, valve-level simulation, fluidic plants."""

from pathlib import Path

from ._core import (
    CapacityError,
    Compilation,
    DilutionLadder,
    EmbeddedSession,
    Error,
    HolePattern,
    ParseError,
    RotaryMixer,
    SimulationError,
    compile,
    decode_membrane,
    verify,
)

_here = Path(__file__).resolve().parent
# wheels bundle the programs; editable installs run from python/pneulogic
PROGRAMS = next((d for d in (_here / "programs", _here.parents[1] / "programs") if d.is_dir()), _here / "programs")


def program(name: str) -> str:
    """Text of a bundled program or plant file, e.g. program("mixer.fsm")."""
    return (PROGRAMS / name).read_text()


__all__ = [
    "CapacityError", "Compilation", "DilutionLadder", "EmbeddedSession", "Error",
    "HolePattern", "ParseError", "RotaryMixer", "SimulationError", "compile",
    "decode_membrane", "verify", "PROGRAMS", "program",
]
