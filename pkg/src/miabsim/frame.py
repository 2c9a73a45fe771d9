"""TDD frame patterns for donor access, backhaul and mIAB access links.

A pattern is a cyclic sequence of slot directions per link role. The
donor-access row drives the fixed gNBs, the backhaul row drives the
donor <-> mIAB-MT link and the mIAB-access row drives the mIAB-DU.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple


class InvalidPatternError(ValueError):
    pass


class SlotDirection(enum.Enum):
    DL = "DL"
    UL = "UL"
    SPECIAL_DL = "S"
    SILENT = "-"

    @property
    def is_dl(self) -> bool:
        # S slots carry downlink data
        return self in (SlotDirection.DL, SlotDirection.SPECIAL_DL)

    @property
    def is_ul(self) -> bool:
        return self is SlotDirection.UL

    @property
    def is_active(self) -> bool:
        return self is not SlotDirection.SILENT

    @classmethod
    def parse(cls, token: str) -> "SlotDirection":
        token = token.strip().upper()
        for d in cls:
            if d.value == token:
                return d
        raise InvalidPatternError(f"unknown slot token {token!r}")


DL = SlotDirection.DL
UL = SlotDirection.UL
S = SlotDirection.SPECIAL_DL
SILENT = SlotDirection.SILENT

ROLES = ("donor_access", "backhaul", "miab_access")


@dataclass(frozen=True)
class FramePattern:
    """Cyclic per-role slot directions.

    ``backhaul`` and ``miab_access`` are ``None`` for deployments without
    mobile IAB nodes (the fixed-gNB pattern has a single row).
    """

    donor_access: Tuple[SlotDirection, ...]
    backhaul: Optional[Tuple[SlotDirection, ...]] = None
    miab_access: Optional[Tuple[SlotDirection, ...]] = None
    name: str = ""

    def __post_init__(self):
        rows = {}
        for role in ROLES:
            row = getattr(self, role)
            if row is None:
                continue
            row = tuple(row)
            object.__setattr__(self, role, row)
            rows[role] = row
        if "donor_access" not in rows or len(rows["donor_access"]) == 0:
            raise InvalidPatternError("pattern needs a non-empty donor_access row")
        if (self.backhaul is None) != (self.miab_access is None):
            raise InvalidPatternError("backhaul and miab_access rows go together")
        lengths = {len(r) for r in rows.values()}
        if len(lengths) != 1:
            raise InvalidPatternError(f"rows have different lengths: {sorted(lengths)}")
        for role, row in rows.items():
            for d in row:
                if not isinstance(d, SlotDirection):
                    raise InvalidPatternError(f"{role}: {d!r} is not a SlotDirection")

    @property
    def length(self) -> int:
        return len(self.donor_access)

    @property
    def has_miab_rows(self) -> bool:
        return self.backhaul is not None

    def roles(self) -> List[str]:
        return [r for r in ROLES if getattr(self, r) is not None]

    def row(self, role: str) -> Tuple[SlotDirection, ...]:
        row = getattr(self, role, None)
        if row is None:
            raise KeyError(f"pattern {self.name or '<anon>'} has no {role} row")
        return row

    def direction(self, role: str, slot: int) -> SlotDirection:
        """Direction of ``role`` at absolute slot index ``slot`` (cyclic)."""
        return self.row(role)[slot % self.length]

    def column(self, slot: int) -> Dict[str, SlotDirection]:
        return {r: self.direction(r, slot) for r in self.roles()}


@dataclass(frozen=True)
class RoleUsage:
    dl_fraction: Fraction
    ul_fraction: Fraction
    total_fraction: Fraction


def compute_usage(pattern: FramePattern) -> Dict[str, RoleUsage]:
    """Exact DL/UL/total active-slot fractions per role over one cycle."""
    if pattern.length == 0:
        raise InvalidPatternError("empty pattern")
    out = {}
    n = pattern.length
    for role in pattern.roles():
        row = pattern.row(role)
        dl = sum(1 for d in row if d.is_dl)
        ul = sum(1 for d in row if d.is_ul)
        out[role] = RoleUsage(Fraction(dl, n), Fraction(ul, n), Fraction(dl + ul, n))
    return out


class OperationMode(enum.Enum):
    A = "A"  # MT receives backhaul DL, DU receives access UL
    B = "B"  # MT transmits backhaul UL, DU transmits access DL
    C_D = "C/D"  # opposite actions: self-interference
    SAFE_BY_SILENCE = "silence"


def _mode(backhaul: SlotDirection, access: SlotDirection) -> OperationMode:
    if not backhaul.is_active or not access.is_active:
        return OperationMode.SAFE_BY_SILENCE
    mt_receives = backhaul.is_dl
    du_receives = access.is_ul
    if mt_receives and du_receives:
        return OperationMode.A
    if not mt_receives and not du_receives:
        return OperationMode.B
    return OperationMode.C_D


def check_self_interference(pattern: FramePattern) -> List[OperationMode]:
    """Per-slot mIAB operation mode; ``C_D`` marks self-interference."""
    if not pattern.has_miab_rows:
        raise InvalidPatternError("self-interference check needs backhaul and miab_access rows")
    return [_mode(b, a) for b, a in zip(pattern.backhaul, pattern.miab_access)]


def is_self_interference_free(pattern: FramePattern) -> bool:
    return all(m is not OperationMode.C_D for m in check_self_interference(pattern))


class InterferenceCase(enum.Enum):
    CASE01 = "Case01"  # passenger UL -> pedestrian DL from donor
    CASE02 = "Case02"  # donor DL -> DU receiving passenger UL
    CASE03 = "Case03"  # pedestrian UL -> passenger DL from DU
    CASE04 = "Case04"  # DU DL -> donor receiving pedestrian UL

    @property
    def aggressor(self) -> str:
        return {
            "Case01": "miab_access",
            "Case02": "donor_access",
            "Case03": "donor_access",
            "Case04": "miab_access",
        }[self.value]

    @property
    def victim(self) -> str:
        return {
            "Case01": "donor_access",
            "Case02": "miab_access",
            "Case03": "miab_access",
            "Case04": "donor_access",
        }[self.value]


@dataclass(frozen=True)
class SlotCases:
    slot: int
    possible: frozenset
    avoided: Dict[InterferenceCase, str]  # case -> "silence" | "alignment"


def _cases_for(donor: SlotDirection, access: SlotDirection) -> Tuple[frozenset, Dict[InterferenceCase, str]]:
    possible = set()
    if donor.is_dl and access.is_ul:
        possible |= {InterferenceCase.CASE01, InterferenceCase.CASE02}
    if donor.is_ul and access.is_dl:
        possible |= {InterferenceCase.CASE03, InterferenceCase.CASE04}
    reason = "silence" if not (donor.is_active and access.is_active) else "alignment"
    avoided = {c: reason for c in InterferenceCase if c not in possible}
    return frozenset(possible), avoided


def avoided_cases(pattern: FramePattern) -> List[SlotCases]:
    """Which cross-link interference cases each slot allows or avoids.

    Only the structural condition is checked (directions of donor access
    and mIAB access in the same slot); geometry is ignored.
    """
    if not pattern.has_miab_rows:
        raise InvalidPatternError("interference cases need a miab_access row")
    out = []
    for i, (d, a) in enumerate(zip(pattern.donor_access, pattern.miab_access)):
        possible, avoided = _cases_for(d, a)
        out.append(SlotCases(i, possible, avoided))
    return out


def _row(tokens: str) -> Tuple[SlotDirection, ...]:
    return tuple(SlotDirection.parse(t) for t in tokens.split(","))


_BUILTIN = {
    "no_silence": FramePattern(
        donor_access=_row("DL,UL"),
        backhaul=_row("DL,UL"),
        miab_access=_row("UL,DL"),
        name="no_silence",
    ),
    "with_silence": FramePattern(
        donor_access=_row("DL,UL,-,DL,-,UL,DL,-,UL,DL"),
        backhaul=_row("DL,-,UL,DL,UL,-,-,UL,-,DL"),
        miab_access=_row("-,UL,DL,-,DL,UL,DL,DL,UL,-"),
        name="with_silence",
    ),
    "macro_only": FramePattern(
        donor_access=_row("DL,S,UL,UL,UL,DL,S,UL,UL,DL"),
        name="macro_only",
    ),
}


def builtin_patterns() -> Dict[str, FramePattern]:
    return dict(_BUILTIN)


def get_pattern(name: str) -> FramePattern:
    try:
        return _BUILTIN[name]
    except KeyError:
        raise KeyError(f"unknown frame pattern {name!r}; known: {sorted(_BUILTIN)}") from None


def parse_pattern(text: str, name: str = "") -> FramePattern:
    """Parse the plain-text format: one role per line, tokens DL, UL, S, -.

    Lines are read in the order donor_access, backhaul, miab_access. A
    single line gives a fixed-gNB pattern. Blank lines and ``#`` comments
    are skipped.
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if len(lines) == 1:
        return FramePattern(donor_access=_row(lines[0]), name=name)
    if len(lines) == 3:
        return FramePattern(*(_row(x) for x in lines), name=name)
    raise InvalidPatternError(f"expected 1 or 3 pattern rows, got {len(lines)}")


def load_pattern(path) -> FramePattern:
    path = Path(path)
    return parse_pattern(path.read_text(), name=path.stem)


def format_pattern(pattern: FramePattern) -> str:
    rows = [getattr(pattern, r) for r in pattern.roles()]
    return "\n".join(",".join(d.value for d in row) for row in rows) + "\n"


def realized_directions(pattern: FramePattern, role: str, slots: Iterable[int]) -> List[SlotDirection]:
    return [pattern.direction(role, t) for t in slots]


__all__ = [
    "DL",
    "UL",
    "S",
    "SILENT",
    "FramePattern",
    "InterferenceCase",
    "InvalidPatternError",
    "OperationMode",
    "RoleUsage",
    "SlotCases",
    "SlotDirection",
    "avoided_cases",
    "builtin_patterns",
    "check_self_interference",
    "compute_usage",
    "format_pattern",
    "get_pattern",
    "is_self_interference_free",
    "load_pattern",
    "parse_pattern",
]
