"""Packing files and key:value reports.

Packing file::

    # granustat packing v1
    DISKS
    <id> <x> <y> <radius>
    GROUPS
    <name> <id> <id> ...
    MOTIONS
    <group> <cx> <cy> <alpha> <xs_x> <xs_y>
    END

Reports are ``key: value`` lines; vectors are space-separated. Floats use
17 significant digits so a write/parse/write cycle is byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import GranustatError, ParseError
from .packing import Disk, BoundaryGroup, Packing, RigidMotion

HEADER = "# granustat packing v1"
SECTIONS = ("DISKS", "GROUPS", "MOTIONS")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    if isinstance(x, str):
        return x
    if x is None:
        return "none"
    return " ".join(fmt(v) for v in x)


# ---------------------------------------------------------------- packing files


def packing_lines(packing: Packing, motions: Mapping[str, RigidMotion] | None = None) -> list[str]:
    lines = [HEADER, "DISKS"]
    for d in packing.disks:
        lines.append(fmt([d.id, d.center[0], d.center[1], d.radius]))
    lines.append("GROUPS")
    for g in packing.groups:
        lines.append(" ".join([g.name] + [str(m) for m in g.members]))
    lines.append("MOTIONS")
    for name, m in (motions or {}).items():
        lines.append(" ".join([name, fmt([m.c[0], m.c[1], m.alpha, m.x_star[0], m.x_star[1]])]))
    lines.append("END")
    return lines


def dumps_packing(packing: Packing, motions: Mapping[str, RigidMotion] | None = None) -> str:
    return "\n".join(packing_lines(packing, motions)) + "\n"


def write_packing(path, packing: Packing, motions=None) -> None:
    Path(path).write_text(dumps_packing(packing, motions))


def _floats(tokens, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"line {lineno}: expected numbers, got {' '.join(tokens)!r}") from None


def loads_packing(text: str) -> tuple[Packing, dict[str, RigidMotion]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ParseError("missing packing header")
    section, seen = None, []
    disks, groups, motions = [], [], {}
    for n, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in SECTIONS:
            if line in seen:
                raise ParseError(f"line {n}: duplicate section {line}")
            section = line
            seen.append(line)
            continue
        if line == "END":
            section = "END"
            continue
        tok = line.split()
        if section == "DISKS":
            if len(tok) != 4:
                raise ParseError(f"line {n}: disk needs id x y radius")
            try:
                did = int(tok[0])
            except ValueError:
                raise ParseError(f"line {n}: bad disk id {tok[0]!r}") from None
            x, y, r = _floats(tok[1:], n)
            disks.append((did, x, y, r))
        elif section == "GROUPS":
            try:
                groups.append((tok[0], tuple(int(t) for t in tok[1:])))
            except ValueError:
                raise ParseError(f"line {n}: bad group member list") from None
        elif section == "MOTIONS":
            if len(tok) != 6:
                raise ParseError(f"line {n}: motion needs group cx cy alpha xs_x xs_y")
            cx, cy, al, sx, sy = _floats(tok[1:], n)
            motions[tok[0]] = RigidMotion((cx, cy), al, (sx, sy))
        else:
            raise ParseError(f"line {n}: content outside a section")
    if "DISKS" not in seen or section != "END":
        raise ParseError("packing file needs a DISKS section and a closing END")
    disks.sort()
    try:
        packing = Packing(
            tuple(Disk(i, (x, y), r) for i, x, y, r in disks),
            tuple(BoundaryGroup(name, mem) for name, mem in groups),
        )
    except GranustatError as exc:
        raise ParseError(f"invalid packing: {exc}") from exc
    unknown = set(motions) - {g.name for g in packing.groups}
    if unknown:
        raise ParseError(f"motions for unknown groups {sorted(unknown)}")
    return packing, motions


def read_packing(path) -> tuple[Packing, dict[str, RigidMotion]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return loads_packing(text)


# ---------------------------------------------------------------- reports


def dumps_report(items: Iterable[tuple[str, object]]) -> str:
    out = []
    for k, v in items:
        if ":" in k or "\n" in k:
            raise ValueError(f"bad report key {k!r}")
        out.append(f"{k}: {fmt(v)}".rstrip())
    return "\n".join(out) + "\n"


def write_report(path, items) -> None:
    Path(path).write_text(dumps_report(items))


def loads_report(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        if ":" not in raw:
            raise ParseError(f"report line {n} lacks 'key: value'")
        k, v = raw.split(":", 1)
        out[k.strip()] = v.strip()
    return out


def read_report(path) -> dict[str, str]:
    try:
        return loads_report(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def report_floats(rep: Mapping[str, str], key: str) -> np.ndarray:
    try:
        v = rep[key]
    except KeyError:
        raise ParseError(f"report lacks {key!r}") from None
    return np.array([float(t) for t in v.split()], dtype=float)


def report_ints(rep: Mapping[str, str], key: str) -> list[int]:
    try:
        return [int(t) for t in rep[key].split()]
    except KeyError:
        raise ParseError(f"report lacks {key!r}") from None


def packing_report_items(packing: Packing, motions: Mapping[str, RigidMotion]) -> list[tuple[str, object]]:
    """Embed a packing and its motions as report lines."""
    items: list[tuple[str, object]] = []
    for d in packing.disks:
        items.append((f"disk.{d.id}", [d.center[0], d.center[1], d.radius]))
    for g in packing.groups:
        items.append((f"group.{g.name}", list(g.members)))
    for name, m in motions.items():
        items.append((f"motion.{name}", [m.c[0], m.c[1], m.alpha, m.x_star[0], m.x_star[1]]))
    return items


def packing_from_report(rep: Mapping[str, str]) -> tuple[Packing, dict[str, RigidMotion]]:
    disks, groups, motions = [], [], {}
    for k, v in rep.items():
        kind, _, name = k.partition(".")
        if kind == "disk":
            x, y, r = (float(t) for t in v.split())
            disks.append((int(name), x, y, r))
        elif kind == "group":
            groups.append((name, tuple(int(t) for t in v.split())))
        elif kind == "motion":
            cx, cy, al, sx, sy = (float(t) for t in v.split())
            motions[name] = RigidMotion((cx, cy), al, (sx, sy))
    if not disks:
        raise ParseError("report does not embed a packing")
    disks.sort()
    packing = Packing(
        tuple(Disk(i, (x, y), r) for i, x, y, r in disks),
        tuple(BoundaryGroup(n, m) for n, m in groups),
    )
    return packing, motions
