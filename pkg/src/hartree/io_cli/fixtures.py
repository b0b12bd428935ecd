"""Shipped molecular problems as immutable FCIDUMP data files."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..fermion import BLOCKED, MolecularIntegrals
from .fcidump import SpatialIntegrals, parse_fcidump, parse_fcidump_spatial

_BOND_LENGTHS_H2_STO3G = [0.35, 0.50, 0.65, 0.7414, 0.75, 0.90, 1.10, 1.50]

FIXTURES = {
    **{f"h2_sto3g_{r:.4f}": f"h2_sto3g_{r:.4f}.fcidump" for r in _BOND_LENGTHS_H2_STO3G},
    "h2_631g_0.7414": "h2_631g_0.7414.fcidump",
    "h2_ccpvdz_0.75": "h2_ccpvdz_0.75.fcidump",
    "lih_sto3g_1.45": "lih_sto3g_1.45.fcidump",
}

H2_EQUILIBRIUM = "h2_sto3g_0.7414"
H2_CURVE = [(r, f"h2_sto3g_{r:.4f}") for r in _BOND_LENGTHS_H2_STO3G]


def list_fixtures() -> list[str]:
    return sorted(FIXTURES)


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(list_fixtures())}")
    return (resources.files("hartree") / "fixtures" / FIXTURES[name]).read_text()


def load_fixture(name: str, ordering: str = BLOCKED) -> MolecularIntegrals:
    return parse_fcidump(fixture_text(name), ordering)


def load_fixture_spatial(name: str) -> SpatialIntegrals:
    return parse_fcidump_spatial(fixture_text(name))


def load_problem(fixture: str | None = None,
                 fcidump_path: str | Path | None = None,
                 ordering: str = BLOCKED) -> MolecularIntegrals:
    """Load from a named fixture or an FCIDUMP path (exactly one of the two)."""
    if (fixture is None) == (fcidump_path is None):
        raise ValueError("pass exactly one of fixture / fcidump_path")
    if fixture is not None:
        return load_fixture(fixture, ordering)
    return parse_fcidump(Path(fcidump_path).read_text(), ordering)
