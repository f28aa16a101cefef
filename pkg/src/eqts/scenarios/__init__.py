"""Generators and shipped bundles for the grid-search and blocksworld domains."""

from __future__ import annotations

from pathlib import Path

from .blocksworld import gen_blocksworld, partitions
from .grid import LAYOUTS, GridInstance, gen_grid, parse_layout, render_layout

DATA = Path(__file__).parent / "data"


def bundle_path(name: str) -> Path:
    """Path of a shipped ``.scn`` file, e.g. ``grid_a`` or ``blocksworld4``."""
    p = DATA / f"{name}.scn"
    if not p.exists():
        raise FileNotFoundError(f"no shipped bundle named {name!r}")
    return p


def shipped() -> list:
    return sorted(p.stem for p in DATA.glob("*.scn"))


def write_bundle(directory, name, cal, scn, layout=None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{name}.cal").write_text(cal)
    (directory / f"{name}.scn").write_text(scn)
    if layout is not None:
        (directory / f"{name}.layout").write_text(layout)
    return directory / f"{name}.scn"


def generate_all(directory=DATA, sizes=range(2, 7)) -> list:
    """(Re)write every shipped bundle into ``directory``."""
    out = []
    for key, inst in sorted(LAYOUTS.items()):
        name = f"grid_{key}"
        cal, scn = gen_grid(inst, name=name)
        out.append(write_bundle(directory, name, cal, scn, render_layout(inst)))
    for n in sizes:
        cal, scn = gen_blocksworld(n)
        out.append(write_bundle(directory, f"blocksworld{n}", cal, scn))
    return out


__all__ = ["DATA", "GridInstance", "LAYOUTS", "bundle_path", "gen_blocksworld", "gen_grid",
           "generate_all", "parse_layout", "partitions", "render_layout", "shipped",
           "write_bundle"]
