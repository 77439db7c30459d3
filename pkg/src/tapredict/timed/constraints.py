"""Conjunctive clock constraints ``x ~ c`` and the guard grammar."""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from fractions import Fraction

from ..automata import ModelError

OPS = ("<", "<=", "==", ">=", ">")
_CMP = {
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}
_ATOM = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_']*)\s*(<=|>=|==|<|>)\s*(\d+)\s*\Z")


class GuardSyntaxError(ModelError):
    def __init__(self, text, column, message):
        self.text = text
        self.column = column
        super().__init__(f"{message} at column {column} in {text!r}")


@dataclass(frozen=True)
class ClockConstraint:
    """Conjunction of atoms ``(clock, op, constant)``; no atoms means TRUE."""

    atoms: tuple = ()

    def __post_init__(self):
        atoms = []
        for clock, op, c in self.atoms:
            if op not in _CMP:
                raise ModelError(f"unknown comparison {op!r}")
            if c < 0:
                raise ModelError(f"negative constant in {clock}{op}{c}")
            atom = (clock, op, c)
            if atom not in atoms:
                atoms.append(atom)
        object.__setattr__(self, "atoms", tuple(atoms))

    @classmethod
    def parse(cls, text) -> "ClockConstraint":
        if text is None:
            return TRUE
        if not isinstance(text, str):
            raise ModelError(f"a guard must be a string, got {text!r}")
        if text.strip() in ("", "true"):
            return TRUE
        atoms = []
        col = 1
        for part in text.split("&&"):
            m = _ATOM.match(part)
            if m is None:
                offset = len(part) - len(part.lstrip())
                raise GuardSyntaxError(text, col + offset, "expected `clock op constant`")
            atoms.append((m.group(1), m.group(2), int(m.group(3))))
            col += len(part) + 2
        return cls(tuple(atoms))

    def __str__(self):
        if not self.atoms:
            return "true"
        return " && ".join(f"{x}{op}{c}" for x, op, c in self.atoms)

    def is_true(self) -> bool:
        return not self.atoms

    def clocks(self) -> frozenset:
        return frozenset(x for x, _, _ in self.atoms)

    def holds(self, valuation) -> bool:
        return all(_CMP[op](valuation[x], c) for x, op, c in self.atoms)

    def __and__(self, other: "ClockConstraint") -> "ClockConstraint":
        return ClockConstraint(self.atoms + other.atoms)

    def is_upper_bound(self) -> bool:
        """True when only ``<`` and ``<=`` atoms occur (invariant form)."""
        return all(op in ("<", "<=") for _, op, _ in self.atoms)

    def bounds_above(self) -> frozenset:
        return frozenset(x for x, op, _ in self.atoms if op in ("<", "<=", "=="))

    def scaled(self, factor) -> "ClockConstraint":
        return ClockConstraint(tuple((x, op, c * factor) for x, op, c in self.atoms))

    def renamed(self, mapping) -> "ClockConstraint":
        return ClockConstraint(tuple((mapping.get(x, x), op, c) for x, op, c in self.atoms))

    def after_reset(self, resets):
        """The constraint on pre-reset values ensuring it holds after `resets`.

        Atoms on reset clocks are decided by the value 0: true ones vanish,
        and a false one makes the whole result None (unsatisfiable).
        """
        kept = []
        for x, op, c in self.atoms:
            if x in resets:
                if not _CMP[op](0, c):
                    return None
            else:
                kept.append((x, op, c))
        return ClockConstraint(tuple(kept))

    def max_constants(self) -> dict:
        out = {}
        for x, _, c in self.atoms:
            out[x] = max(out.get(x, 0), c)
        return out


TRUE = ClockConstraint(())


def atom(clock, op, c) -> ClockConstraint:
    return ClockConstraint(((clock, op, c),))


def as_fraction(value) -> Fraction:
    """Exact rational from an int, a Fraction or a decimal/``p/q`` string."""
    if isinstance(value, float):
        raise TypeError("floating-point time values are not accepted; use a string")
    return Fraction(value)
