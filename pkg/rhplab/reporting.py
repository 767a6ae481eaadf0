"""
Report objects shared by the management commands: a JSON form for machines
and a plain text form for terminals.
"""

import json
from dataclasses import dataclass, field


@dataclass
class Report:
    command: str
    bounds: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    fuel_limited: bool = False
    wall_time: float = 0.0
    payload: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)

    def add_verdict(self, name, verdict):
        entry = {"name": name}
        entry.update(verdict.to_dict())
        self.verdicts.append(entry)
        if verdict.witness is not None:
            self.witnesses.append({"name": name, "witness": verdict.witness})
        self.fuel_limited = self.fuel_limited or verdict.fuel_limited
        return verdict

    @property
    def holds(self):
        return all(v["holds"] for v in self.verdicts)

    def to_dict(self, timing=False):
        data = {
            "command": self.command,
            "bounds": self.bounds,
            "verdicts": self.verdicts,
            "witnesses": self.witnesses,
            "fuel_limited": self.fuel_limited,
            "output": self.payload,
            "lines": self.lines,
        }
        if timing:
            data["wall_time"] = round(self.wall_time, 6)
        return data

    def to_json(self, timing=False):
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True, default=str)

    def render_text(self):
        out = list(self.lines)
        for v in self.verdicts:
            status = "HOLDS" if v["holds"] else "FAILS"
            marker = " (fuel-limited)" if v["fuel_limited"] else ""
            out.append(f"{v['name']}: {status}{marker}")
            for key, value in sorted((v["witness"] or {}).items()):
                out.append(f"  {key}: {_flat(value)}")
        out.append(f"wall time: {self.wall_time:.3f}s")
        return "\n".join(out)


def _flat(value):
    if isinstance(value, (list, tuple)):
        return " | ".join(_flat(v) for v in value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True, default=str)
    return str(value)
