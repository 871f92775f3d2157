"""Three-spin register: Hamiltonian, product operators, thermal and pseudo-pure states."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .linalg import (DEFAULT_TOL, DimensionError, ID2, SIGMA_X, SIGMA_Y, SIGMA_Z,
                     is_hermitian, kron_all, n_spins_of)

# Rotating-frame placeholders for a 13C-labelled alanine chain (C1, C2, C3).
DEFAULT_OFFSETS_HZ = (0.0, 15000.0, -4000.0)
DEFAULT_J_HZ = ((0.0, 35.0, 1.3),
                (35.0, 0.0, 35.0),
                (1.3, 35.0, 0.0))
DEFAULT_T2_S = 0.893
DEFAULT_T1_S = 2.0


class SpinSystemError(ValueError):
    pass


class PseudoPureError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpinSystem:
    """Immutable description of a weakly coupled spin-1/2 register.

    Offsets and couplings are in Hz, relaxation times in seconds.
    """

    offsets: tuple = DEFAULT_OFFSETS_HZ
    j_couplings: tuple = DEFAULT_J_HZ
    t1: tuple = (DEFAULT_T1_S,) * 3
    t2: tuple = (DEFAULT_T2_S,) * 3
    thermal_weights: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        # normalise to nested tuples of floats so instances hash and compare by value
        conv = lambda v: tuple(float(x) for x in v)
        object.__setattr__(self, "offsets", conv(self.offsets))
        object.__setattr__(self, "j_couplings", tuple(conv(r) for r in self.j_couplings))
        object.__setattr__(self, "t1", conv(self.t1))
        object.__setattr__(self, "t2", conv(self.t2))
        object.__setattr__(self, "thermal_weights", conv(self.thermal_weights))
        n = len(self.offsets)
        if not 1 <= n <= 3:
            raise SpinSystemError(f"register must hold 1 to 3 spins, got {n}")
        for name in ("t1", "t2", "thermal_weights"):
            if len(getattr(self, name)) != n:
                raise SpinSystemError(f"{name} needs {n} entries, got {len(getattr(self, name))}")
        j = np.array(self.j_couplings)
        if j.shape != (n, n):
            raise SpinSystemError(f"j_couplings must be {n}x{n}, got {j.shape}")
        if not np.allclose(j, j.T, atol=0) or np.any(np.diag(j) != 0):
            raise SpinSystemError("j_couplings must be symmetric with zero diagonal")
        for k, (a, b) in enumerate(zip(self.t1, self.t2)):
            if not (a >= b > 0):
                raise SpinSystemError(f"spin {k}: need t1 >= t2 > 0, got t1={a}, t2={b}")

    @property
    def n_spins(self) -> int:
        return len(self.offsets)

    @property
    def dim(self) -> int:
        return 2 ** self.n_spins

    @property
    def j(self) -> np.ndarray:
        return np.array(self.j_couplings)

    def energies(self) -> np.ndarray:
        """Diagonal of the rotating-frame Hamiltonian in rad/s."""
        return np.real(np.diag(hamiltonian(self)))


def z_eigenvalues(n: int) -> np.ndarray:
    """``m[s, k]``: eigenvalue of ``I_z`` on spin ``k`` in basis state ``s`` (|0> = +1/2)."""
    bits = np.array(list(itertools.product((0, 1), repeat=n)))
    return 0.5 - bits


def hamiltonian(sys: SpinSystem) -> np.ndarray:
    """Weak-coupling Hamiltonian in angular units: sum 2πν_k Iz_k + sum 2πJ_kl Iz_k Iz_l."""
    m = z_eigenvalues(sys.n_spins)
    nu = np.array(sys.offsets)
    j = sys.j
    diag = 2 * np.pi * (m @ nu)
    # sum over k<l equals half the full symmetric double sum
    diag = diag + 2 * np.pi * 0.5 * np.einsum("sk,kl,sl->s", m, j, m)
    return np.diag(diag).astype(complex)


# ---------------------------------------------------------------- product operators

_SINGLE = {"E": ID2, "x": SIGMA_X / 2, "y": SIGMA_Y / 2, "z": SIGMA_Z / 2}


def po_label(comps: str) -> str:
    """``'zxE'`` -> ``'Iz1Ix2'``; all-identity -> ``'E'``."""
    parts = [f"I{c}{k + 1}" for k, c in enumerate(comps) if c != "E"]
    return "".join(parts) or "E"


@lru_cache(maxsize=None)
def po_basis(n: int) -> tuple:
    """Orthogonal product-operator basis as ``(labels, comps, stacked matrices, norms)``."""
    comps = ["".join(c) for c in itertools.product("Exyz", repeat=n)]
    mats = np.array([kron_all([_SINGLE[c] for c in cs]) for cs in comps])
    norms = np.real(np.einsum("pij,pji->p", mats, mats))
    labels = [po_label(cs) for cs in comps]
    return tuple(labels), tuple(comps), mats, norms


def po_coefficients(rho) -> np.ndarray:
    """Coefficients ``c_P = Tr(P rho) / Tr(P P)`` in the order of :func:`po_basis`."""
    rho = np.asarray(rho, dtype=complex)
    n = n_spins_of(rho)
    _, _, mats, norms = po_basis(n)
    return np.einsum("pij,ji->p", mats, rho) / norms


def po_recompose(coeffs, n: int) -> np.ndarray:
    _, _, mats, _ = po_basis(n)
    return np.einsum("p,pij->ij", np.asarray(coeffs, dtype=complex), mats)


@dataclass
class ProductOperatorDecomposition:
    n_spins: int
    coefficients: dict = field(default_factory=dict)

    def __getitem__(self, label):
        return self.coefficients.get(label, 0.0)

    def recompose(self) -> np.ndarray:
        labels, _, mats, _ = po_basis(self.n_spins)
        out = np.zeros(mats.shape[1:], dtype=complex)
        for lab, m in zip(labels, mats):
            c = self.coefficients.get(lab, 0.0)
            if c != 0:
                out += c * m
        return out


def decompose(rho, tol: float = DEFAULT_TOL) -> ProductOperatorDecomposition:
    """Product-operator expansion of an ``n``-spin operator, dropping terms below ``tol``."""
    rho = np.asarray(rho, dtype=complex)
    n = n_spins_of(rho)
    labels = po_basis(n)[0]
    coeffs = po_coefficients(rho)
    kept = {}
    for lab, c in zip(labels, coeffs):
        if abs(c) > tol:
            kept[lab] = c.real if abs(c.imag) <= tol else c
    return ProductOperatorDecomposition(n, kept)


def decompose_single_qubit(rho_q1, tol: float = DEFAULT_TOL) -> ProductOperatorDecomposition:
    """Expand a one-spin density matrix as ``a Iz + b Ix + c Iy + d E``.

    The coefficients are read directly off the matrix elements:
    ``Iz: r00 - r11``, ``Ix: r01 + r10``, ``Iy: i (r01 - r10)``,
    ``E: (r00 + r11) / 2``.
    """
    r = np.asarray(rho_q1, dtype=complex)
    if r.shape != (2, 2):
        raise DimensionError("single-qubit state", (2, 2), r.shape)
    if not is_hermitian(r, tol):
        raise SpinSystemError("single-qubit state is not Hermitian within tolerance")
    raw = {
        "Iz1": r[0, 0] - r[1, 1],
        "Ix1": r[0, 1] + r[1, 0],
        "Iy1": 1j * (r[0, 1] - r[1, 0]),
        "E": 0.5 * (r[0, 0] + r[1, 1]),
    }
    # Hermitian input makes every coefficient real
    return ProductOperatorDecomposition(1, {k: float(v.real) for k, v in raw.items()
                                            if abs(v) > tol})


# ---------------------------------------------------------------- thermal / pseudo-pure

@dataclass
class DeviationState:
    """Traceless-part-plus-identity deviation density matrix."""

    matrix: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if not is_hermitian(self.matrix, DEFAULT_TOL):
            raise SpinSystemError("deviation matrix must be Hermitian")


def thermal_deviation(sys: SpinSystem) -> np.ndarray:
    """High-temperature deviation state ``sum_k w_k Iz_k``."""
    m = z_eigenvalues(sys.n_spins)
    return np.diag(m @ np.array(sys.thermal_weights)).astype(complex)


def permutation_matrix(perm) -> np.ndarray:
    """Unitary ``P`` with ``P|s> = |perm[s]>``."""
    perm = list(perm)
    p = np.zeros((len(perm), len(perm)), dtype=complex)
    p[perm, range(len(perm))] = 1.0
    return p


def _find_population_permutations(pops, n_exp, tol):
    """Assign thermal populations to basis states across ``n_exp`` experiments.

    Experiment 0 keeps the thermal order. Returns a list of ``perm`` arrays with
    ``perm[src] = dst`` such that the summed populations are ``a`` on state 0 and
    a common ``b < a`` on every other state, or None.
    """
    dim = len(pops)
    vals = np.asarray(pops, dtype=float)
    if n_exp < 2:
        return None
    # work on unique values with multiplicities; permutations are rebuilt at the end
    uniq = []
    for v in sorted(vals, reverse=True):
        if not any(abs(v - u) <= tol for u in uniq):
            uniq.append(float(v))
    counts0 = [sum(abs(v - u) <= tol for v in vals) for u in uniq]

    def value_index(v):
        for i, u in enumerate(uniq):
            if abs(v - u) <= tol:
                return i
        return None

    total = float(np.sum(vals)) * n_exp

    def search(pos, counts, choice, b):
        if pos == dim:
            return choice
        base = vals[pos]  # experiment 0 is unpermuted
        for combo in itertools.product(range(len(uniq)), repeat=n_exp - 2):
            used = list(counts)
            s = base
            ok = True
            for e, ci in enumerate(combo, start=1):
                if used[e][ci] == 0:
                    ok = False
                    break
                used[e] = used[e][:ci] + [used[e][ci] - 1] + used[e][ci + 1:]
                s += uniq[ci]
            if not ok:
                continue
            if pos == 0:
                a = s
                # remaining slots all carry the same b; need room for one last value
                bb_cands = []
                for ci in range(len(uniq)):
                    if used[n_exp - 1][ci]:
                        a_full = a + uniq[ci]
                        bb = (total - a_full) / (dim - 1)
                        if a_full > bb + tol:
                            bb_cands.append((ci, a_full, bb))
                for ci, a_full, bb in bb_cands:
                    last = list(used[n_exp - 1])
                    last[ci] -= 1
                    used2 = list(used)
                    used2[n_exp - 1] = last
                    res = search(1, used2, choice + [combo + (ci,)], bb)
                    if res is not None:
                        return res
                continue
            need = b - s
            ci = value_index(need)
            if ci is None or used[n_exp - 1][ci] == 0:
                continue
            last = list(used[n_exp - 1])
            last[ci] -= 1
            used2 = list(used)
            used2[n_exp - 1] = last
            res = search(pos + 1, used2, choice + [combo + (ci,)], b)
            if res is not None:
                return res
        return None

    counts = [list(counts0) for _ in range(n_exp)]
    counts[0] = [0] * len(uniq)  # experiment 0 is fixed
    choice = search(0, counts, [], None)
    if choice is None:
        return None

    perms = [np.arange(dim)]
    for e in range(1, n_exp):
        perm = np.empty(dim, dtype=int)
        free = {i: [s for s in range(dim) if abs(vals[s] - uniq[i]) <= tol] for i in range(len(uniq))}
        for dst, combo in enumerate(choice):
            src = free[combo[e - 1]].pop(0)
            perm[src] = dst
        perms.append(perm)
    return perms


@dataclass
class PseudoPureScheme:
    """Temporal-averaging preparation: per-experiment states and their sum."""

    permutations: list
    states: list
    total: np.ndarray
    scale: float
    offset: float

    def unitaries(self) -> list:
        return [permutation_matrix(p) for p in self.permutations]


def pseudo_pure_components(total, tol: float = 1e-10) -> tuple[float, float]:
    """Split ``total = scale |0..0><0..0| + offset I``; raises if it is not of that form."""
    total = np.asarray(total, dtype=complex)
    dim = total.shape[0]
    offset = float(np.real(total[1, 1]))
    scale = float(np.real(total[0, 0])) - offset
    proj = np.zeros_like(total)
    proj[0, 0] = 1.0
    resid = total - scale * proj - offset * np.eye(dim)
    if np.max(np.abs(resid)) > tol:
        raise PseudoPureError(f"state is not pseudo-pure (residual {np.max(np.abs(resid)):.3e})")
    return scale, offset


MAX_EXPERIMENTS = 6


def pseudo_pure_000(sys: SpinSystem, n_experiments: int | None = 3) -> PseudoPureScheme:
    """Temporal-averaging preparation of the pseudo-pure ground state.

    Each experiment relabels the thermal populations with a permutation of basis
    states; the experiments are chosen so that their summed deviation matrix is
    a positive multiple of ``|0..0><0..0|`` plus a multiple of the identity.
    ``n_experiments=None`` tries three first, then 2 up to ``MAX_EXPERIMENTS``.
    """
    thermal = thermal_deviation(sys)
    pops = np.real(np.diag(thermal))
    if n_experiments is None:
        counts = [3] + [k for k in range(2, MAX_EXPERIMENTS + 1) if k != 3]
    else:
        counts = [n_experiments]
    perms = None
    for k in counts:
        perms = _find_population_permutations(pops, k, tol=1e-12)
        if perms is not None:
            break
    if perms is None:
        raise PseudoPureError(
            f"no {'/'.join(map(str, counts))}-experiment population permutation yields a "
            f"pseudo-pure state for thermal weights {sys.thermal_weights}")
    states = []
    for perm in perms:
        p = permutation_matrix(perm)
        states.append(DeviationState(p @ thermal @ p.conj().T))
    total = sum(s.matrix for s in states)
    scale, offset = pseudo_pure_components(total)
    return PseudoPureScheme(perms, states, total, scale, offset)


# ---------------------------------------------------------------- configuration file

_LIST_KEYS = ("offsets_hz", "t1_s", "t2_s", "thermal_weights")


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Repeated ``j_hz`` lines are matrix rows. Values are whitespace or comma
    separated numbers; unknown keys are returned verbatim as strings.
    """
    out: dict = {}
    j_rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = (p.strip() for p in line.split("=", 1))
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise SpinSystemError(f"config line {lineno}: expected 'key = value', got {raw!r}")
            key, val = parts
        key = key.lower()
        if key == "j_hz":
            j_rows.append(_floats(val, lineno))
        elif key in _LIST_KEYS:
            out[key] = _floats(val, lineno)
        else:
            out[key] = val
    if j_rows:
        out["j_hz"] = j_rows
    return out


def _floats(val: str, lineno: int) -> list:
    try:
        return [float(x) for x in val.replace(",", " ").split()]
    except ValueError:
        raise SpinSystemError(f"config line {lineno}: non-numeric value {val!r}") from None


def system_from_config(cfg: dict, base: SpinSystem | None = None) -> SpinSystem:
    base = base or SpinSystem()
    kw = {}
    if "offsets_hz" in cfg:
        kw["offsets"] = cfg["offsets_hz"]
    if "j_hz" in cfg:
        kw["j_couplings"] = cfg["j_hz"]
    if "t1_s" in cfg:
        kw["t1"] = _broadcast(cfg["t1_s"], len(cfg.get("offsets_hz", base.offsets)))
    if "t2_s" in cfg:
        kw["t2"] = _broadcast(cfg["t2_s"], len(cfg.get("offsets_hz", base.offsets)))
    if "thermal_weights" in cfg:
        kw["thermal_weights"] = cfg["thermal_weights"]
    fields = dict(offsets=base.offsets, j_couplings=base.j_couplings, t1=base.t1,
                  t2=base.t2, thermal_weights=base.thermal_weights)
    fields.update(kw)
    return SpinSystem(**fields)


def _broadcast(vals, n):
    return list(vals) * n if len(vals) == 1 else list(vals)


def load_spin_system(path) -> SpinSystem:
    return system_from_config(parse_config(Path(path).read_text()))
