"""Second-quantised operator algebra.

Molecular Hamiltonian assembly from integrals, fermionic normal ordering,
action on occupation vectors and UCC generator construction. Operators obey
{a_p, a+_q} = delta_pq, {a_p, a_q} = {a+_p, a+_q} = 0.

Spin-orbital ordering is spin-blocked by default (indices 0..M/2-1 spin-up,
M/2..M-1 spin-down); the interleaved alternative (up, down, up, down) is
supported for problems stated in that labelling. Normal form puts creation
factors left of annihilation factors with indices decreasing left to right
within each block.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

BLOCKED = "blocked"
INTERLEAVED = "interleaved"

COEFF_TOLERANCE = 1e-12


class InvalidIntegrals(ValueError):
    """Integral tensors violate the required index symmetries."""


def spin_of(index: int, m: int, ordering: str = BLOCKED) -> int:
    """0 for spin-up, 1 for spin-down."""
    if ordering == BLOCKED:
        return 0 if index < m // 2 else 1
    if ordering == INTERLEAVED:
        return index % 2
    raise ValueError(f"unknown ordering {ordering!r}")


def spatial_of(index: int, m: int, ordering: str = BLOCKED) -> int:
    if ordering == BLOCKED:
        return index % (m // 2)
    if ordering == INTERLEAVED:
        return index // 2
    raise ValueError(f"unknown ordering {ordering!r}")


@dataclass(frozen=True)
class MolecularIntegrals:
    """Spin-orbital integrals defining a molecular problem, in Hartree.

    ``h_two[p, q, r, s]`` multiplies a+_p a+_q a_r a_s in the Hamiltonian
    (physicists' index order).
    """

    m: int
    n_electrons: int
    n_up: int
    core_energy: float
    h_one: np.ndarray
    h_two: np.ndarray
    ordering: str = BLOCKED

    def __post_init__(self):
        if self.h_one.shape != (self.m, self.m):
            raise InvalidIntegrals("h_one shape mismatch")
        if self.h_two.shape != (self.m,) * 4:
            raise InvalidIntegrals("h_two shape mismatch")

    @property
    def n_down(self) -> int:
        return self.n_electrons - self.n_up

    def validate(self, tol: float = 1e-8) -> None:
        if not np.allclose(self.h_one, self.h_one.conj().T, atol=tol):
            raise InvalidIntegrals("h_one is not Hermitian")
        if not np.allclose(self.h_two, self.h_two.transpose(1, 0, 3, 2), atol=tol):
            raise InvalidIntegrals("h_pqrs != h_qpsr")
        if not np.allclose(self.h_two, self.h_two.conj().transpose(3, 2, 1, 0), atol=tol):
            raise InvalidIntegrals("h_pqrs != conj(h_srqp)")
        spins = np.array([spin_of(p, self.m, self.ordering) for p in range(self.m)])
        mixing = spins[:, None] != spins[None, :]
        if np.max(np.abs(self.h_one[mixing]), initial=0.0) > tol:
            raise InvalidIntegrals("one-body block mixes spins")


@dataclass(frozen=True)
class OccupationVector:
    """Bits f_{M-1}...f_0, one per spin-orbital."""

    m: int
    mask: int

    @classmethod
    def from_string(cls, bits: str) -> "OccupationVector":
        return cls(len(bits), int(bits, 2))

    @classmethod
    def from_occupied(cls, occupied: Iterable[int], m: int) -> "OccupationVector":
        mask = 0
        for p in occupied:
            if p >= m:
                raise ValueError(f"orbital {p} outside 0..{m - 1}")
            mask |= 1 << p
        return cls(m, mask)

    def bit(self, p: int) -> int:
        return self.mask >> p & 1

    def occupied(self) -> list[int]:
        return [p for p in range(self.m) if self.bit(p)]

    @property
    def n_electrons(self) -> int:
        return bin(self.mask).count("1")

    def __str__(self) -> str:
        return format(self.mask, f"0{self.m}b")


@dataclass(frozen=True)
class FermionOperator:
    """Single product of ladder factors with a coefficient.

    ``factors`` is applied right-to-left to kets; each entry is
    (mode index, dagger flag).
    """

    factors: tuple[tuple[int, bool], ...]
    coeff: complex = 1.0

    @classmethod
    def from_spec(cls, spec: Sequence[tuple[int, bool]], coeff: complex = 1.0):
        return cls(tuple((int(p), bool(d)) for p, d in spec), complex(coeff))

    def adjoint(self) -> "FermionOperator":
        flipped = tuple((p, not d) for p, d in reversed(self.factors))
        return FermionOperator(flipped, self.coeff.conjugate())

    def max_mode(self) -> int:
        return max((p for p, _ in self.factors), default=-1)

    def __str__(self) -> str:
        if not self.factors:
            return f"{self.coeff} * 1"
        ops = " ".join(f"a{'+' if d else '-'}_{p}" for p, d in self.factors)
        return f"{self.coeff} * {ops}"


class FermionSum:
    """Linear combination of ladder-operator products."""

    __slots__ = ("terms", "canonical")

    def __init__(self, terms: Iterable[FermionOperator] = (), canonical: bool = False):
        self.terms = list(terms)
        self.canonical = canonical

    @classmethod
    def single(cls, spec: Sequence[tuple[int, bool]], coeff: complex = 1.0) -> "FermionSum":
        return cls([FermionOperator.from_spec(spec, coeff)])

    def adjoint(self) -> "FermionSum":
        return FermionSum([t.adjoint() for t in self.terms])

    def max_mode(self) -> int:
        return max((t.max_mode() for t in self.terms), default=-1)

    def __add__(self, other: "FermionSum") -> "FermionSum":
        return FermionSum(self.terms + other.terms)

    def __sub__(self, other: "FermionSum") -> "FermionSum":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "FermionSum":
        return FermionSum([replace(t, coeff=scalar * t.coeff) for t in self.terms])

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __str__(self) -> str:
        return " + ".join(str(t) for t in self.terms) if self.terms else "0"


def normal_order(s: FermionSum, tol: float = COEFF_TOLERANCE) -> FermionSum:
    """Canonical form via the anticommutation relations; operator equality kept.

    Creation factors end up left of annihilation factors, indices decreasing
    left to right within each block; duplicate products merge and repeated
    ladder operators annihilate the term.
    """
    merged: dict[tuple, complex] = {}
    stack = [(t.coeff, list(t.factors)) for t in s.terms]
    while stack:
        coeff, factors = stack.pop()
        for i in range(len(factors) - 1):
            (p, dp), (q, dq) = factors[i], factors[i + 1]
            if not dp and dq:
                swapped = factors[:i] + [(q, dq), (p, dp)] + factors[i + 2:]
                stack.append((-coeff, swapped))
                if p == q:
                    stack.append((coeff, factors[:i] + factors[i + 2:]))
                break
            if dp == dq:
                if p == q:
                    break  # nilpotent: a a or a+ a+ on the same mode
                if p < q:
                    swapped = factors[:i] + [(q, dq), (p, dp)] + factors[i + 2:]
                    stack.append((-coeff, swapped))
                    break
        else:
            key = tuple(factors)
            merged[key] = merged.get(key, 0.0) + coeff
    kept = [FermionOperator(k, c) for k, c in sorted(merged.items()) if abs(c) > tol]
    return FermionSum(kept, canonical=True)


def sums_equal(a: FermionSum, b: FermionSum, tol: float = 1e-10) -> bool:
    diff = normal_order(a - b, tol=tol)
    return len(diff) == 0


def apply_to_occupation(op: FermionOperator,
                        f: OccupationVector) -> tuple[complex, OccupationVector] | None:
    """Apply the factors right-to-left; None when the state is annihilated.

    Each a_p / a+_p contributes the sign (-1)^(sum of occupations below p).
    """
    mask = f.mask
    phase = 1
    for p, dagger in reversed(op.factors):
        bit = 1 << p
        if dagger == bool(mask & bit):
            return None
        if bin(mask & (bit - 1)).count("1") % 2:
            phase = -phase
        mask ^= bit
    return phase * op.coeff, OccupationVector(f.m, mask)


def build_molecular_hamiltonian(ints: MolecularIntegrals) -> FermionSum:
    """H = sum h_pq a+_p a_q + 1/2 sum h_pqrs a+_p a+_q a_r a_s + core."""
    ints.validate()
    terms = []
    if abs(ints.core_energy) > COEFF_TOLERANCE:
        terms.append(FermionOperator((), ints.core_energy))
    m = ints.m
    for p in range(m):
        for q in range(m):
            c = ints.h_one[p, q]
            if abs(c) > COEFF_TOLERANCE:
                terms.append(FermionOperator(((p, True), (q, False)), c))
    nonzero = np.argwhere(np.abs(ints.h_two) > COEFF_TOLERANCE)
    for p, q, r, s in nonzero:
        terms.append(FermionOperator(
            ((int(p), True), (int(q), True), (int(r), False), (int(s), False)),
            0.5 * ints.h_two[p, q, r, s]))
    return FermionSum(terms)


def number_operator(modes: Iterable[int]) -> FermionSum:
    return FermionSum([FermionOperator(((p, True), (p, False)), 1.0) for p in modes])


def hf_occupation(ints: MolecularIntegrals) -> OccupationVector:
    """Lowest-index orbitals filled per spin, respecting the ordering flag."""
    occupied = []
    n_spatial = ints.m // 2
    for k in range(ints.n_up):
        occupied.append(k if ints.ordering == BLOCKED else 2 * k)
    for k in range(ints.n_down):
        occupied.append(n_spatial + k if ints.ordering == BLOCKED else 2 * k + 1)
    return OccupationVector.from_occupied(occupied, ints.m)


def hf_energy(ints: MolecularIntegrals) -> float:
    """Mean-field energy of the Aufbau determinant, evaluated directly."""
    occ = hf_occupation(ints).occupied()
    energy = ints.core_energy + sum(ints.h_one[p, p].real for p in occ)
    for p in occ:
        for q in occ:
            if p != q:
                energy += 0.5 * (ints.h_two[p, q, q, p] - ints.h_two[p, q, p, q]).real
    return float(energy)


@dataclass(frozen=True)
class UccGenerator:
    label: str
    generator: FermionSum = field(repr=False)


def uccsd_generators(m: int,
                     occ: Iterable[int],
                     virt: Iterable[int],
                     spin_conserving: bool = True,
                     spins: Sequence[int] | None = None,
                     ordering: str = BLOCKED) -> list[UccGenerator]:
    """Anti-Hermitian single and double excitation generators T_k - T_k+.

    One generator per distinct single a+_v a_o and double a+_v a+_w a_p a_o
    excitation (strict pair enumeration, so no duplicates arise under
    anticommutation). ``spins`` assigns 0/1 per mode; by default it follows
    the ordering rule for ``m`` modes.
    """
    occ = sorted(occ)
    virt = sorted(virt)
    if set(occ) & set(virt):
        raise ValueError("occupied and virtual sets overlap")
    if spins is None:
        spins = [spin_of(p, m, ordering) for p in range(m)]

    generators = []
    for o in occ:
        for v in virt:
            if spin_conserving and spins[o] != spins[v]:
                continue
            t = FermionSum.single([(v, True), (o, False)])
            generators.append(UccGenerator(f"s:{o}->{v}", t - t.adjoint()))
    for i, o1 in enumerate(occ):
        for o2 in occ[i + 1:]:
            for j, v1 in enumerate(virt):
                for v2 in virt[j + 1:]:
                    if spin_conserving and (
                            spins[v1] + spins[v2] != spins[o1] + spins[o2]):
                        continue
                    t = FermionSum.single([(v2, True), (v1, True), (o2, False), (o1, False)])
                    generators.append(
                        UccGenerator(f"d:{o1},{o2}->{v1},{v2}", t - t.adjoint()))
    return generators
