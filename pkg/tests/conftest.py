"""Shared test helpers: independent dense oracles and fixture loading."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from hartree.pauli import PauliString, PauliSum

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "hartree" / "fixtures"


def kron_string_matrix(string: PauliString, n: int) -> np.ndarray:
    """Oracle: build the dense matrix letter-by-letter with np.kron.

    Qubit 0 is the least-significant tensor factor, so it sits rightmost in
    the kron chain.
    """
    out = np.array([[1.0 + 0j]])
    for q in range(n - 1, -1, -1):
        out = np.kron(out, PAULI_MATRICES[string.letter(q)])
    return out


def kron_sum_matrix(s: PauliSum, n: int) -> np.ndarray:
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for string, coeff in s.items():
        out += coeff * kron_string_matrix(string, n)
    return out


LOWERING = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|


def jw_mode_matrix(p: int, m: int, dagger: bool) -> np.ndarray:
    """Oracle: a_p (or a+_p) on m modes as Q_p x Z_{p-1} ... Z_0 via np.kron."""
    q = LOWERING.conj().T if dagger else LOWERING
    out = np.array([[1.0 + 0j]])
    for k in range(m - 1, -1, -1):
        if k == p:
            factor = q
        elif k < p:
            factor = PAULI_MATRICES["Z"]
        else:
            factor = PAULI_MATRICES["I"]
        out = np.kron(out, factor)
    return out


def fermion_matrix(fsum, m: int) -> np.ndarray:
    """Oracle: dense matrix of a FermionSum under the kron-built JW map."""
    dim = 1 << m
    out = np.zeros((dim, dim), dtype=complex)
    for term in fsum:
        acc = np.eye(dim, dtype=complex)
        for p, dagger in term.factors:
            acc = acc @ jw_mode_matrix(p, m, dagger)
        out += term.coeff * acc
    return out


def random_pauli_string(rng: np.random.Generator, n: int) -> PauliString:
    letters = rng.choice(list("IXYZ"), size=n)
    text = " ".join(f"{letter}{q}" for q, letter in enumerate(letters) if letter != "I")
    return PauliString.from_text(text or "I")


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260816)
