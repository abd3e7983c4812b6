from __future__ import annotations

from dataclasses import asdict, dataclass

AIRY_WKB = "AiryWKB"
DW_WKB = "DWWKB"
SPLITTING = "SplittingFormula"
ORACLE = "Oracle"
METHODS = (AIRY_WKB, DW_WKB, SPLITTING, ORACLE)


@dataclass(frozen=True)
class SpectralRecord:
    """One energy level.  ``energy`` is physical; ``energy / hbar`` is the rescaled E."""

    N: int
    hbar: float
    theta: float
    p: int
    n: int
    energy: complex
    method: str
    flagged: bool = False

    @property
    def rescaled(self) -> complex:
        return self.energy / self.hbar

    def row(self) -> dict:
        d = asdict(self)
        d["energy"] = complex(self.energy)
        return d
