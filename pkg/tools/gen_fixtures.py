"""One-time generator for the FCIDUMP fixtures shipped under src/hartree/fixtures/.

Computes Gaussian-basis molecular integrals (McMurchie-Davidson scheme), runs a
closed-shell RHF, transforms to the molecular-orbital basis and writes FCIDUMP
files. The package itself never computes integrals; it only reads these files.

Run from the repository root:

    python tools/gen_fixtures.py

The script validates itself before writing anything:
  * H2/STO-3G integrals at R = 1.4 bohr against the textbook values
    (Szabo & Ostlund, Table 3.5 and surrounding text),
  * determinant-basis FCI energies and natural-orbital occupations for the
    generated systems, printed for comparison with independent references.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammainc, gammaln

ANGSTROM_TO_BOHR = 1.8897259886

# Contraction data: element -> list of (angular momentum, exponents, coefficients).
# Coefficients are for normalized primitives; contractions are renormalized below.
BASIS_SETS = {
    "sto-3g": {
        "H": [
            (0, [3.425250914, 0.6239137298, 0.1688554040],
                [0.1543289673, 0.5353281423, 0.4446345422]),
        ],
        "Li": [
            (0, [16.1195750, 2.9362007, 0.7946505],
                [0.1543289673, 0.5353281423, 0.4446345422]),
            (0, [0.6362897, 0.1478601, 0.0480887],
                [-0.09996723, 0.39951283, 0.70011547]),
            (1, [0.6362897, 0.1478601, 0.0480887],
                [0.15591627, 0.60768372, 0.39195739]),
        ],
    },
    "6-31g": {
        "H": [
            (0, [18.7311370, 2.8253937, 0.6401217],
                [0.03349460, 0.23472695, 0.81375733]),
            (0, [0.1612778], [1.0]),
        ],
    },
    "cc-pvdz": {
        "H": [
            (0, [13.0100, 1.9620, 0.4446, 0.1220],
                [0.0196850, 0.1379770, 0.4781480, 0.5012400]),
            (0, [0.1220], [1.0]),
            (1, [0.7270], [1.0]),
        ],
    },
}

NUCLEAR_CHARGE = {"H": 1, "Li": 3}


@dataclass
class BasisFunction:
    """Contracted cartesian Gaussian: sum_k c_k N_k x^l y^m z^n exp(-a_k r^2)."""

    center: np.ndarray
    lmn: tuple[int, int, int]
    exps: np.ndarray
    coefs: np.ndarray  # includes primitive norms and contraction renorm


def _double_factorial(n: int) -> int:
    return 1 if n <= 1 else n * _double_factorial(n - 2)


def _prim_norm(alpha: float, lmn: tuple[int, int, int]) -> float:
    l, m, n = lmn
    num = (2 * alpha / math.pi) ** 1.5 * (4 * alpha) ** (l + m + n)
    den = (_double_factorial(2 * l - 1) * _double_factorial(2 * m - 1)
           * _double_factorial(2 * n - 1))
    return math.sqrt(num / den)


def build_basis(atoms: list[tuple[str, np.ndarray]], basis_name: str) -> list[BasisFunction]:
    functions = []
    for element, center in atoms:
        for l, exps, coefs in BASIS_SETS[basis_name][element]:
            cartesians = [(l - a - b, a, b) for a in range(l + 1) for b in range(l + 1 - a)]
            # order p shells as (x, y, z)
            if l == 1:
                cartesians = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
            for lmn in cartesians:
                exps_a = np.asarray(exps, dtype=float)
                coefs_a = np.asarray(coefs, dtype=float)
                normed = coefs_a * np.array([_prim_norm(a, lmn) for a in exps_a])
                bf = BasisFunction(np.asarray(center, dtype=float), lmn, exps_a, normed)
                self_overlap = _overlap(bf, bf)
                bf.coefs = bf.coefs / math.sqrt(self_overlap)
                functions.append(bf)
    return functions


def _hermite_e(i: int, j: int, t: int, q_x: float, a: float, b: float) -> float:
    """Hermite expansion coefficient E_t^{ij} for a 1D Gaussian product."""
    p = a + b
    mu = a * b / p
    if t < 0 or t > i + j:
        return 0.0
    if i == 0 and j == 0 and t == 0:
        return math.exp(-mu * q_x * q_x)
    if i > 0:
        return (_hermite_e(i - 1, j, t - 1, q_x, a, b) / (2 * p)
                - (mu * q_x / a) * _hermite_e(i - 1, j, t, q_x, a, b)
                + (t + 1) * _hermite_e(i - 1, j, t + 1, q_x, a, b))
    return (_hermite_e(i, j - 1, t - 1, q_x, a, b) / (2 * p)
            + (mu * q_x / b) * _hermite_e(i, j - 1, t, q_x, a, b)
            + (t + 1) * _hermite_e(i, j - 1, t + 1, q_x, a, b))


def _boys(n: int, x: float) -> float:
    if x < 1e-12:
        return 1.0 / (2 * n + 1) - x / (2 * n + 3)
    g = math.exp(gammaln(n + 0.5))
    return g * gammainc(n + 0.5, x) / (2 * x ** (n + 0.5))


def _hermite_r(t: int, u: int, v: int, n: int, p: float, pc: np.ndarray) -> float:
    """Hermite Coulomb integral R^n_{tuv}."""
    if t < 0 or u < 0 or v < 0:
        return 0.0
    if t == 0 and u == 0 and v == 0:
        return (-2.0 * p) ** n * _boys(n, p * float(pc @ pc))
    if t > 0:
        return ((t - 1) * _hermite_r(t - 2, u, v, n + 1, p, pc)
                + pc[0] * _hermite_r(t - 1, u, v, n + 1, p, pc))
    if u > 0:
        return ((u - 1) * _hermite_r(t, u - 2, v, n + 1, p, pc)
                + pc[1] * _hermite_r(t, u - 1, v, n + 1, p, pc))
    return ((v - 1) * _hermite_r(t, u, v - 2, n + 1, p, pc)
            + pc[2] * _hermite_r(t, u, v - 1, n + 1, p, pc))


def _overlap_prim(a: float, lmn1, ra, b: float, lmn2, rb) -> float:
    p = a + b
    s = (math.pi / p) ** 1.5
    for k in range(3):
        s *= _hermite_e(lmn1[k], lmn2[k], 0, ra[k] - rb[k], a, b)
    return s


def _overlap(f1: BasisFunction, f2: BasisFunction) -> float:
    total = 0.0
    for a, ca in zip(f1.exps, f1.coefs):
        for b, cb in zip(f2.exps, f2.coefs):
            total += ca * cb * _overlap_prim(a, f1.lmn, f1.center, b, f2.lmn, f2.center)
    return total


def _kinetic_prim(a: float, lmn1, ra, b: float, lmn2, rb) -> float:
    # T = -1/2 <a|del^2|b>, decomposed per cartesian direction
    def s1d(i, j, k):
        return _hermite_e(i, j, 0, ra[k] - rb[k], a, b)

    def t1d(i, j, k):
        term = -2.0 * b * b * s1d(i, j + 2, k)
        term += b * (2 * j + 1) * s1d(i, j, k)
        if j >= 2:
            term -= 0.5 * j * (j - 1) * s1d(i, j - 2, k)
        return term

    p = a + b
    pre = (math.pi / p) ** 1.5
    l1, m1, n1 = lmn1
    l2, m2, n2 = lmn2
    tx = t1d(l1, l2, 0) * s1d(m1, m2, 1) * s1d(n1, n2, 2)
    ty = s1d(l1, l2, 0) * t1d(m1, m2, 1) * s1d(n1, n2, 2)
    tz = s1d(l1, l2, 0) * s1d(m1, m2, 1) * t1d(n1, n2, 2)
    return pre * (tx + ty + tz)


def _kinetic(f1: BasisFunction, f2: BasisFunction) -> float:
    total = 0.0
    for a, ca in zip(f1.exps, f1.coefs):
        for b, cb in zip(f2.exps, f2.coefs):
            total += ca * cb * _kinetic_prim(a, f1.lmn, f1.center, b, f2.lmn, f2.center)
    return total


def _nuclear_prim(a: float, lmn1, ra, b: float, lmn2, rb, rc) -> float:
    p = a + b
    rp = (a * ra + b * rb) / p
    pc = rp - rc
    l1, m1, n1 = lmn1
    l2, m2, n2 = lmn2
    total = 0.0
    for t in range(l1 + l2 + 1):
        et = _hermite_e(l1, l2, t, ra[0] - rb[0], a, b)
        for u in range(m1 + m2 + 1):
            eu = _hermite_e(m1, m2, u, ra[1] - rb[1], a, b)
            for v in range(n1 + n2 + 1):
                ev = _hermite_e(n1, n2, v, ra[2] - rb[2], a, b)
                total += et * eu * ev * _hermite_r(t, u, v, 0, p, pc)
    return 2.0 * math.pi / p * total


def _nuclear(f1: BasisFunction, f2: BasisFunction, atoms) -> float:
    total = 0.0
    for a, ca in zip(f1.exps, f1.coefs):
        for b, cb in zip(f2.exps, f2.coefs):
            for element, rc in atoms:
                z = NUCLEAR_CHARGE[element]
                total -= z * ca * cb * _nuclear_prim(
                    a, f1.lmn, f1.center, b, f2.lmn, f2.center, np.asarray(rc, float))
    return total


def _eri_prim(a, lmn1, ra, b, lmn2, rb, c, lmn3, rc, d, lmn4, rd) -> float:
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    pq = rp - rq
    l1, m1, n1 = lmn1
    l2, m2, n2 = lmn2
    l3, m3, n3 = lmn3
    l4, m4, n4 = lmn4
    total = 0.0
    for t in range(l1 + l2 + 1):
        e1t = _hermite_e(l1, l2, t, ra[0] - rb[0], a, b)
        for u in range(m1 + m2 + 1):
            e1u = _hermite_e(m1, m2, u, ra[1] - rb[1], a, b)
            for v in range(n1 + n2 + 1):
                e1v = _hermite_e(n1, n2, v, ra[2] - rb[2], a, b)
                e1 = e1t * e1u * e1v
                if e1 == 0.0:
                    continue
                for tau in range(l3 + l4 + 1):
                    e2t = _hermite_e(l3, l4, tau, rc[0] - rd[0], c, d)
                    for nu in range(m3 + m4 + 1):
                        e2u = _hermite_e(m3, m4, nu, rc[1] - rd[1], c, d)
                        for phi in range(n3 + n4 + 1):
                            e2v = _hermite_e(n3, n4, phi, rc[2] - rd[2], c, d)
                            e2 = e2t * e2u * e2v
                            if e2 == 0.0:
                                continue
                            sign = -1.0 if (tau + nu + phi) % 2 else 1.0
                            total += e1 * e2 * sign * _hermite_r(
                                t + tau, u + nu, v + phi, 0, alpha, pq)
    return total * 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))


def _eri(f1, f2, f3, f4) -> float:
    total = 0.0
    for a, ca in zip(f1.exps, f1.coefs):
        for b, cb in zip(f2.exps, f2.coefs):
            for c, cc in zip(f3.exps, f3.coefs):
                for d, cd in zip(f4.exps, f4.coefs):
                    total += ca * cb * cc * cd * _eri_prim(
                        a, f1.lmn, f1.center, b, f2.lmn, f2.center,
                        c, f3.lmn, f3.center, d, f4.lmn, f4.center)
    return total


def integral_tensors(basis, atoms):
    n = len(basis)
    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s[i, j] = s[j, i] = _overlap(basis[i], basis[j])
            t[i, j] = t[j, i] = _kinetic(basis[i], basis[j])
            v[i, j] = v[j, i] = _nuclear(basis[i], basis[j], atoms)
    eri = np.zeros((n, n, n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1)]
    for ij, (i, j) in enumerate(pairs):
        for k, l in pairs[: ij + 1]:
            val = _eri(basis[i], basis[j], basis[k], basis[l])
            for a, b in ((i, j), (j, i)):
                for c, d in ((k, l), (l, k)):
                    eri[a, b, c, d] = val
                    eri[c, d, a, b] = val
    return s, t, v, eri


def nuclear_repulsion(atoms) -> float:
    total = 0.0
    for (e1, r1), (e2, r2) in itertools.combinations(atoms, 2):
        total += (NUCLEAR_CHARGE[e1] * NUCLEAR_CHARGE[e2]
                  / np.linalg.norm(np.asarray(r1, float) - np.asarray(r2, float)))
    return total


def rhf(s, hcore, eri, n_electrons, e_nuc, max_iter=200, tol=1e-12):
    n_occ = n_electrons // 2
    evals, evecs = np.linalg.eigh(s)
    x = evecs @ np.diag(evals ** -0.5) @ evecs.T
    density = np.zeros_like(s)
    energy = 0.0
    for _ in range(max_iter):
        j = np.einsum("mnls,ls->mn", eri, density)
        k = np.einsum("mlsn,ls->mn", eri, density)
        fock = hcore + j - 0.5 * k
        e_new = 0.5 * np.sum(density * (hcore + fock)) + e_nuc
        f_prime = x.T @ fock @ x
        _, c_prime = np.linalg.eigh(f_prime)
        c = x @ c_prime
        density_new = 2.0 * c[:, :n_occ] @ c[:, :n_occ].T
        if abs(e_new - energy) < tol and np.max(np.abs(density_new - density)) < 1e-10:
            return c, e_new
        density = density_new
        energy = e_new
    raise RuntimeError("SCF failed to converge")


def mo_integrals(c, hcore, eri):
    h_mo = c.T @ hcore @ c
    eri_mo = np.einsum("ijkl,ip,jq,kr,ls->pqrs", eri, c, c, c, c, optimize=True)
    return h_mo, eri_mo


def write_fcidump(path: Path, h_mo, eri_mo, e_core, n_electrons, ms2=0, tol=1e-12):
    n = h_mo.shape[0]
    lines = [f"&FCI NORB={n:3d},NELEC={n_electrons:3d},MS2={ms2:2d},"]
    lines.append(" ORBSYM=" + ",".join(["1"] * n) + ",")
    lines.append(" ISYM=1,")
    lines.append("&END")

    def rec(val, i, j, k, l):
        lines.append(f"{val: 23.16E} {i:4d} {j:4d} {k:4d} {l:4d}")

    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(i + 1):
                for l in range(k + 1):
                    kl = k * (k + 1) // 2 + l
                    if kl > ij:
                        continue
                    val = eri_mo[i, j, k, l]
                    if abs(val) > tol:
                        rec(val, i + 1, j + 1, k + 1, l + 1)
    for i in range(n):
        for j in range(i + 1):
            if abs(h_mo[i, j]) > tol:
                rec(h_mo[i, j], i + 1, j + 1, 0, 0)
    rec(e_core, 0, 0, 0, 0)
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Determinant FCI used only to validate the generated integrals.

def _apply_second_quantized(mask, ops):
    """Apply (index, dagger) factors right-to-left with fermionic signs."""
    phase = 1
    for idx, dagger in reversed(ops):
        bit = 1 << idx
        below = bin(mask & (bit - 1)).count("1")
        if dagger:
            if mask & bit:
                return None
            mask |= bit
        else:
            if not mask & bit:
                return None
            mask &= ~bit
        if below % 2:
            phase = -phase
    return phase, mask


def fci_ground(h_mo, eri_mo, e_core, n_up, n_down):
    """Exact diagonalization in the fixed-(n_up, n_down) determinant sector.

    Spin orbitals are blocked: up = 0..n-1, down = n..2n-1. Two-body amplitudes
    follow h_pqrs = (PS|QR) delta(sp,ss) delta(sq,sr) with chemists' (ij|kl).
    """
    n = h_mo.shape[0]
    m = 2 * n

    def spin(p):
        return 0 if p < n else 1

    def spatial(p):
        return p % n

    one_body = [(p, q, h_mo[spatial(p), spatial(q)])
                for p in range(m) for q in range(m)
                if spin(p) == spin(q) and abs(h_mo[spatial(p), spatial(q)]) > 1e-12]
    two_body = []
    for p in range(m):
        for q in range(m):
            for r in range(m):
                for s in range(m):
                    if spin(p) != spin(s) or spin(q) != spin(r):
                        continue
                    val = eri_mo[spatial(p), spatial(s), spatial(q), spatial(r)]
                    if abs(val) > 1e-12:
                        two_body.append((p, q, r, s, 0.5 * val))

    ups = [sum(1 << i for i in combo) for combo in itertools.combinations(range(n), n_up)]
    downs = [sum(1 << (i + n) for i in combo)
             for combo in itertools.combinations(range(n), n_down)]
    dets = [u | d for u in ups for d in downs]
    index = {d: i for i, d in enumerate(dets)}
    dim = len(dets)
    ham = np.zeros((dim, dim))
    for col, det in enumerate(dets):
        for p, q, val in one_body:
            out = _apply_second_quantized(det, [(p, True), (q, False)])
            if out is not None:
                ham[index[out[1]], col] += out[0] * val
        for p, q, r, s, val in two_body:
            out = _apply_second_quantized(
                det, [(p, True), (q, True), (r, False), (s, False)])
            if out is not None:
                ham[index[out[1]], col] += out[0] * val
    evals, evecs = np.linalg.eigh(ham)
    ground = evecs[:, 0]

    rdm = np.zeros((n, n))
    for k_orb in range(n):
        for l_orb in range(n):
            for sp in (0, 1):
                p = k_orb + sp * n
                q = l_orb + sp * n
                for col, det in enumerate(dets):
                    if abs(ground[col]) < 1e-14:
                        continue
                    out = _apply_second_quantized(det, [(p, True), (q, False)])
                    if out is not None:
                        rdm[k_orb, l_orb] += out[0] * ground[index[out[1]]] * ground[col]
    return evals[0] + e_core, rdm


# ---------------------------------------------------------------------------

def solve(atoms, basis_name, n_electrons):
    basis = build_basis(atoms, basis_name)
    s, t, v, eri = integral_tensors(basis, atoms)
    e_nuc = nuclear_repulsion(atoms)
    hcore = t + v
    c, e_hf = rhf(s, hcore, eri, n_electrons, e_nuc)
    h_mo, eri_mo = mo_integrals(c, hcore, eri)
    return h_mo, eri_mo, e_nuc, e_hf


def validate_against_textbook():
    """H2/STO-3G at R = 1.4 bohr: Szabo & Ostlund reference values."""
    atoms = [("H", np.zeros(3)), ("H", np.array([0.0, 0.0, 1.4]))]
    basis = build_basis(atoms, "sto-3g")
    s, t, v, eri = integral_tensors(basis, atoms)
    refs = {
        "S12": (s[0, 1], 0.6593),
        "T11": (t[0, 0], 0.7600),
        "T12": (t[0, 1], 0.2365),
        "(11|11)": (eri[0, 0, 0, 0], 0.7746),
        "(11|22)": (eri[0, 0, 1, 1], 0.5697),
        "(21|11)": (eri[1, 0, 0, 0], 0.4441),
        "(21|21)": (eri[1, 0, 1, 0], 0.2970),
    }
    for name, (got, want) in refs.items():
        assert abs(got - want) < 5e-4, f"{name}: {got} vs {want}"
    hcore = t + v
    _, e_hf = rhf(s, hcore, eri, 2, nuclear_repulsion(atoms))
    assert abs(e_hf - (-1.1167)) < 2e-4, e_hf
    print(f"textbook H2 check passed (E_HF = {e_hf:.4f})")


def main():
    validate_against_textbook()
    out_dir = Path(__file__).resolve().parents[1] / "src" / "hartree" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)

    def h2(r_angstrom):
        r = r_angstrom * ANGSTROM_TO_BOHR
        return [("H", np.zeros(3)), ("H", np.array([0.0, 0.0, r]))]

    for r in [0.35, 0.50, 0.65, 0.7414, 0.75, 0.90, 1.10, 1.50]:
        h_mo, eri_mo, e_nuc, e_hf = solve(h2(r), "sto-3g", 2)
        name = f"h2_sto3g_{r:.4f}.fcidump"
        write_fcidump(out_dir / name, h_mo, eri_mo, e_nuc, 2)
        e_fci, _ = fci_ground(h_mo, eri_mo, e_nuc, 1, 1)
        print(f"{name}: E_HF = {e_hf:.6f}  E_FCI = {e_fci:.6f}")

    h_mo, eri_mo, e_nuc, e_hf = solve(h2(0.7414), "6-31g", 2)
    write_fcidump(out_dir / "h2_631g_0.7414.fcidump", h_mo, eri_mo, e_nuc, 2)
    e_fci, _ = fci_ground(h_mo, eri_mo, e_nuc, 1, 1)
    print(f"h2_631g_0.7414.fcidump: E_HF = {e_hf:.6f}  E_FCI = {e_fci:.6f}")

    h_mo, eri_mo, e_nuc, e_hf = solve(h2(0.75), "cc-pvdz", 2)
    write_fcidump(out_dir / "h2_ccpvdz_0.75.fcidump", h_mo, eri_mo, e_nuc, 2)
    e_fci, rdm = fci_ground(h_mo, eri_mo, e_nuc, 1, 1)
    noons = np.sort(np.linalg.eigvalsh(rdm))[::-1]
    print(f"h2_ccpvdz_0.75.fcidump: E_HF = {e_hf:.6f}  E_FCI = {e_fci:.6f}")
    print("  cc-pVDZ NOONs:", np.array2string(noons, precision=5, suppress_small=False))

    r = 1.45 * ANGSTROM_TO_BOHR
    atoms = [("Li", np.zeros(3)), ("H", np.array([0.0, 0.0, r]))]
    h_mo, eri_mo, e_nuc, e_hf = solve(atoms, "sto-3g", 4)
    write_fcidump(out_dir / "lih_sto3g_1.45.fcidump", h_mo, eri_mo, e_nuc, 4)
    e_fci, rdm = fci_ground(h_mo, eri_mo, e_nuc, 2, 2)
    noons = np.sort(np.linalg.eigvalsh(rdm))[::-1]
    print(f"lih_sto3g_1.45.fcidump: E_HF = {e_hf:.6f}  E_FCI = {e_fci:.6f}")
    print("  LiH NOONs:", np.array2string(noons, precision=5, suppress_small=False))


if __name__ == "__main__":
    main()
