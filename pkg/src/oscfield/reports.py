"""Pass/fail check tables shared by the algebra, field and rate reports."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["CheckRow", "Report"]


@dataclass
class CheckRow:
    name: str
    deviation: float
    tol: float
    at_least: bool = False

    @property
    def passed(self):
        # at_least rows are witnesses: the value must EXCEED the threshold
        if self.at_least:
            return self.deviation > self.tol
        return self.deviation <= self.tol


@dataclass
class Report:
    title: str
    rows: list[CheckRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add(self, name, deviation, tol, at_least=False):
        self.rows.append(CheckRow(name, float(deviation), float(tol), at_least))

    def note(self, text):
        self.notes.append(text)

    def extend(self, other):
        """Absorb another report's rows and notes."""
        self.rows.extend(other.rows)
        self.notes.extend(other.notes)

    @property
    def all_passed(self):
        return all(r.passed for r in self.rows)

    def to_text(self):
        width = max([len(r.name) for r in self.rows] + [len(self.title), 8])
        sep = "-" * (width + 34)
        out = [self.title, sep,
               f"{'check':<{width}}  {'deviation':>12}  {'tol':>8}  result"]
        for r in self.rows:
            rel = ">" if r.at_least else "<"
            out.append(f"{r.name:<{width}}  {r.deviation:>12.3e} {rel} {r.tol:>8.1e}  "
                       + ("pass" if r.passed else "FAIL"))
        out.append(sep)
        for n in self.notes:
            out.append(f"note: {n}")
        out.append(f"result: {'all passed' if self.all_passed else 'FAILURES present'}")
        return "\n".join(out) + "\n"

    def csv_rows(self):
        """(check, deviation, tol, passed) rows for machine output."""
        return [(r.name, r.deviation, r.tol, int(r.passed)) for r in self.rows]
