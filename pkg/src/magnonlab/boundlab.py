"""Direct matrix certification of the operator inequalities behind the
free-energy bounds, plus the lower-bound budget constants.

Every verifier assembles the two sides of one inequality on a small
sector, forms the difference, and reports the minimum eigenvalue as the
certificate slack.  Random-state property checks draw from per-job
seeded streams so grid cells are order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .basis import (
    MagnonSectorBasis,
    SpinLattice,
    SpinMagnitude,
    _bounded_compositions,
    enumerate_sector_basis,
    sector_dimension,
)
from .certificates import InequalityCertificate
from .magnongas import delta_dilution, preliminary_free_energy_bound
from .operators import (
    assemble_dirichlet_heisenberg,
    assemble_free_boson_t,
    assemble_heisenberg,
    assemble_projector_p,
    assemble_total_spin_squared,
)

PSD_TOL_FACTOR = 1e-10


def rng_for(root_seed: int, *key_ints) -> np.random.Generator:
    """Deterministic per-job stream derived from a root seed and the job's
    parameter tuple; results do not depend on execution order."""
    ss = np.random.SeedSequence(root_seed, spawn_key=tuple(int(k) for k in key_ints))
    return np.random.default_rng(ss)


def _operator_norm(dense_eigs) -> float:
    return float(np.abs(dense_eigs).max()) if len(dense_eigs) else 0.0


def _psd_certificate(name, params, difference, norm_scale, seed=None, extras=None):
    eigs = sla.eigvalsh(difference)
    slack = float(eigs[0]) if eigs.size else 0.0
    return InequalityCertificate(
        name=name,
        params=params,
        slack=slack,
        tolerance=PSD_TOL_FACTOR * max(norm_scale, 1e-300),
        seed=seed,
        extras=extras or {},
    )


# ---------------------------------------------------------------------------
# projected pinned Hamiltonian below the free hopping operator
# ---------------------------------------------------------------------------

def verify_php_leq_t(
    ell: int, spin: SpinMagnitude, n: int, dim_cap: int = 20000
) -> InequalityCertificate:
    """Certify T - P H^D P >= 0 on the uncapped n-boson sector of a
    pinned chain of length ell."""
    from .spectra import ResourceLimitError

    dim = sector_dimension(ell, n, n)
    if dim > dim_cap:
        raise ResourceLimitError(
            f"uncapped sector (ell={ell}, n={n}) has dimension {dim} > {dim_cap}"
        )
    basis = enumerate_sector_basis(SpinLattice.chain(ell), spin, n, capped=False)
    t = assemble_free_boson_t(basis).to_dense()
    hd = assemble_dirichlet_heisenberg(basis).to_dense()
    p = assemble_projector_p(basis).weights
    diff = t - (p[:, None] * hd) * p[None, :]
    t_norm = _operator_norm(sla.eigvalsh(t)) if basis.dim > 1 else float(abs(t[0, 0]))
    return _psd_certificate(
        "projected-hopping-dominance",
        {"ell": ell, "two_s": spin.two_s, "n": n},
        diff,
        t_norm,
    )


# ---------------------------------------------------------------------------
# Casimir energy floor
# ---------------------------------------------------------------------------

def verify_casimir_lower_bound(ell: int, spin: SpinMagnitude) -> InequalityCertificate:
    """Certify H >= (2/l^3)(Sl(Sl+1) - S_tot^2) on every sector, and the
    chained scalar floor E >= (2S/l^2)(Sl - t) on every joint (E, t)."""
    from .spectra import DENSE_SECTOR_CAP, ResourceLimitError, sector_energy_spin_pairs

    worst_dim = max(
        sector_dimension(ell, n, spin.two_s) for n in range(spin.two_s * ell + 1)
    )
    if worst_dim > DENSE_SECTOR_CAP:
        raise ResourceLimitError(
            f"largest sector of the (ell={ell}, 2S={spin.two_s}) chain has "
            f"dimension {worst_dim} > {DENSE_SECTOR_CAP}"
        )
    lattice = SpinLattice.chain(ell)
    s = spin.s
    s_max = s * ell
    k0 = s_max * (s_max + 1.0)
    worst = math.inf
    worst_chain = math.inf
    scale = 1.0
    for n in range(spin.two_s * ell + 1):
        basis = enumerate_sector_basis(lattice, spin, n)
        h = assemble_heisenberg(basis).to_dense()
        s2 = assemble_total_spin_squared(basis).to_dense()
        diff = h - (2.0 / ell**3) * (k0 * np.eye(basis.dim) - s2)
        eigs = sla.eigvalsh(diff)
        worst = min(worst, float(eigs[0]))
        scale = max(scale, float(np.abs(sla.eigvalsh(h)).max()))
        for e, t in sector_energy_spin_pairs(lattice, spin, n):
            worst_chain = min(worst_chain, e - (2.0 * s / ell**2) * (s_max - t))
    return InequalityCertificate(
        name="casimir-energy-floor",
        params={"ell": ell, "two_s": spin.two_s},
        slack=min(worst, worst_chain),
        tolerance=PSD_TOL_FACTOR * scale,
        extras={"matrix_slack": worst, "scalar_chain_slack": worst_chain},
    )


# ---------------------------------------------------------------------------
# coordinate-collapse map and the free-Laplacian floor
# ---------------------------------------------------------------------------

def build_coordinate_map_v(ell: int, n: int) -> dict:
    """Collapse table on sorted distinct coordinates:
    (x_1 < ... < x_n) -> (x_1, x_2-1, ..., x_n-n+1) in [1, l-n+1]^n.

    Surjectivity onto nondecreasing tuples is checked by enumeration.
    """
    if n > ell:
        raise ValueError(f"need n <= ell for distinct coordinates, got n={n} ell={ell}")
    from itertools import combinations, combinations_with_replacement

    table = {}
    for xs in combinations(range(1, ell + 1), max(n, 0)):
        table[xs] = tuple(x - i for i, x in enumerate(xs))
    images = set(table.values())
    expected = set(combinations_with_replacement(range(1, ell - n + 2), max(n, 0)))
    if images != expected:
        raise RuntimeError("collapse map failed to cover the target box")
    return table


def _plain_boson_basis(nsites, n):
    """Occupation basis of n unconstrained bosons on `nsites` sites (the
    target box of the collapse map may have a single site)."""
    states = np.array(
        list(_bounded_compositions(n, nsites, n)), dtype=np.int64
    ).reshape(-1, nsites)
    index = {tuple(row): i for i, row in enumerate(states.tolist())}
    return states, index


def neumann_boson_laplacian(nsites: int, n: int) -> np.ndarray:
    """Second-quantized free-boundary graph Laplacian on the n-boson
    sector of a path of `nsites` sites: diagonal sum_a deg(a) m_a,
    hopping -sqrt((m_b+1) m_a)."""
    states, index = _plain_boson_basis(nsites, n)
    dim = states.shape[0]
    out = np.zeros((dim, dim))
    deg = np.ones(nsites)
    if nsites >= 2:
        deg[1:-1] = 2.0
    else:
        deg[:] = 0.0
    for i, occ in enumerate(states):
        out[i, i] = float(np.dot(deg, occ))
        occ_list = occ.tolist()
        for a in range(nsites - 1):
            for src, dst in ((a, a + 1), (a + 1, a)):
                if occ_list[src] == 0:
                    continue
                amp = math.sqrt(occ_list[src] * (occ_list[dst] + 1))
                occ_list[src] -= 1
                occ_list[dst] += 1
                j = index[tuple(occ_list)]
                occ_list[src] += 1
                occ_list[dst] -= 1
                out[j, i] -= amp
    return out


def coordinate_collapse_matrix(basis: MagnonSectorBasis):
    """Orthonormal-basis matrix of the collapse map.

    Maps the n-boson sector on [1, l] to the n-boson sector on
    [1, l-n+1]: states with any doubly occupied site are annihilated;
    a distinct-coordinate state goes to its collapsed occupation with
    amplitude 1/sqrt(prod_a m_a!), the multinomial factor relating
    symmetric wave-function values to occupation amplitudes.
    """
    ell = basis.lattice.nsites
    n = basis.n
    if n > ell:
        raise ValueError(f"need n <= ell, got n={n} ell={ell}")
    target_sites = ell - n + 1
    t_states, t_index = _plain_boson_basis(target_sites, n)
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.states):
        if np.any(occ > 1):
            continue
        xs = np.flatnonzero(occ) + 1  # sorted 1-based occupied sites
        image = np.zeros(target_sites, dtype=np.int64)
        for i, x in enumerate(xs):
            image[x - i - 1] += 1
        weight = 1.0
        for m in image:
            if m > 1:
                weight /= math.sqrt(math.factorial(int(m)))
        rows.append(t_index[tuple(image.tolist())])
        cols.append(col)
        vals.append(weight)
    mat = sp.coo_matrix(
        (vals, (rows, cols)), shape=(t_states.shape[0], basis.dim)
    ).tocsr()
    return mat, t_states


def verify_laplacian_lower_bound(
    ell: int, spin: SpinMagnitude, n: int
) -> InequalityCertificate:
    """Certify H|_n - S V^T (-Laplacian) V >= 0 on the physical sector:
    the collapsed coordinates see at least the free-boundary Laplacian
    of the shrunken box."""
    basis = enumerate_sector_basis(SpinLattice.chain(ell), spin, n)
    h = assemble_heisenberg(basis).to_dense()
    vmat, _ = coordinate_collapse_matrix(basis)
    lap = neumann_boson_laplacian(ell - n + 1, n)
    rhs = spin.s * (vmat.T @ (lap @ vmat.toarray()))
    diff = h - rhs
    scale = _operator_norm(sla.eigvalsh(h)) if basis.dim > 1 else abs(float(h[0, 0]))
    return _psd_certificate(
        "coordinate-laplacian-bound",
        {"ell": ell, "two_s": spin.two_s, "n": n},
        diff,
        scale,
    )


def verify_halfspin_quadratic_form_equality(
    ell: int, n: int, samples: int = 100, seed: int = 7
) -> InequalityCertificate:
    """For S = 1/2 the energy form equals the graph Dirichlet form on
    distinct-coordinate configurations: <psi|H psi> = S sum |psi(X) - psi(Y)|^2
    over unordered single-step neighbor pairs.  Checked on random states."""
    spin = SpinMagnitude(1)
    basis = enumerate_sector_basis(SpinLattice.chain(ell), spin, n)
    h = assemble_heisenberg(basis).to_dense()
    pairs = []
    for i, occ in enumerate(basis.states):
        occ_list = occ.tolist()
        for x in range(ell - 1):
            if occ_list[x] == 1 and occ_list[x + 1] == 0:
                occ_list[x] = 0
                occ_list[x + 1] = 1
                pairs.append((i, basis.index[tuple(occ_list)]))
                occ_list[x] = 1
                occ_list[x + 1] = 0
    rng = rng_for(seed, 5, ell, n)
    worst = 0.0
    for _ in range(max(samples, 1)):
        psi = rng.standard_normal(basis.dim)
        psi /= np.linalg.norm(psi)
        lhs = float(psi @ h @ psi)
        rhs = spin.s * float(sum((psi[i] - psi[j]) ** 2 for i, j in pairs))
        worst = max(worst, abs(lhs - rhs))
    return InequalityCertificate(
        name="halfspin-quadratic-form",
        params={"ell": ell, "n": n, "samples": samples},
        slack=-worst,
        tolerance=1e-10,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# two-particle density bounds
# ---------------------------------------------------------------------------

@dataclass
class CoordinateState:
    """Normalized n-boson state stored on its occupation basis."""

    basis: MagnonSectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        nrm = np.linalg.norm(self.amplitudes)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        self.amplitudes = np.asarray(self.amplitudes, dtype=float) / nrm

    @classmethod
    def from_occupation(cls, basis, occ):
        v = np.zeros(basis.dim)
        v[basis.state_index(occ)] = 1.0
        return cls(basis, v)


def haar_random_state(basis: MagnonSectorBasis, rng) -> CoordinateState:
    return CoordinateState(basis, rng.standard_normal(basis.dim))


def gibbs_random_state(basis, hamiltonian_dense, beta, rng) -> CoordinateState:
    """Draw an eigenstate of the sector block with probability proportional
    to its Boltzmann weight."""
    w, u = sla.eigh(hamiltonian_dense)
    logp = -beta * (w - w.min())
    p = np.exp(logp)
    p /= p.sum()
    idx = rng.choice(len(w), p=p)
    return CoordinateState(basis, u[:, idx])


def two_particle_density(state: CoordinateState) -> np.ndarray:
    """rho(x, y) = <n_x n_y> - delta_xy <n_x>: the pair density of the
    state; symmetric, entrywise nonnegative, sums to n(n-1)."""
    occ = state.basis.states.astype(float)
    w = state.amplitudes**2
    rho = occ.T @ (w[:, None] * occ)
    rho[np.diag_indices_from(rho)] -= occ.T @ w
    return rho


def verify_vnorm_lower_bound(state: CoordinateState) -> InequalityCertificate:
    """Certify |V psi|^2 >= 1 - (1/2) sum rho(x,x) - sum rho(x,x+1):
    collapsing distinct coordinates loses at most the doubly occupied
    and neighboring-pair weight."""
    basis = state.basis
    vmat, _ = coordinate_collapse_matrix(basis)
    vpsi = vmat @ state.amplitudes
    rho = two_particle_density(state)
    rhs = 1.0 - 0.5 * float(np.trace(rho)) - float(
        np.sum(np.diag(rho, 1))
    )
    slack = float(vpsi @ vpsi) - rhs
    return InequalityCertificate(
        name="vnorm-lower-bound",
        params={"ell": basis.lattice.nsites, "two_s": basis.spin.two_s, "n": basis.n},
        slack=slack,
        tolerance=1e-10,
        extras={"vnorm_sq": float(vpsi @ vpsi), "rhs": rhs},
    )


def verify_density_bounds(
    state: CoordinateState, hamiltonian_dense=None
) -> tuple:
    """Certify the pair-density bounds against the energy of the state:

    sum_x rho(x+1, x) <= (4/l) n(n-1) + 4 (n-1) sqrt(n/S) <H>^(1/2)
    sum_x rho(x, x)   <= (4/l) n(n-1) + (4+sqrt 3)(n-1) sqrt(n/S) <H>^(1/2)

    with <H> taken in the free chain.  Returns (offdiag, diag) certificates.
    """
    basis = state.basis
    ell = basis.lattice.nsites
    n = basis.n
    s = basis.spin.s
    if hamiltonian_dense is None:
        hamiltonian_dense = assemble_heisenberg(basis).to_dense()
    energy = max(0.0, float(state.amplitudes @ hamiltonian_dense @ state.amplitudes))
    rho = two_particle_density(state)
    off = float(np.sum(np.diag(rho, 1)))
    diag = float(np.trace(rho))
    base = 4.0 / ell * n * (n - 1)
    root = (n - 1) * math.sqrt(n / s) * math.sqrt(energy)
    params = {"ell": ell, "two_s": basis.spin.two_s, "n": n}
    cert_off = InequalityCertificate(
        name="pair-density-offdiag-bound",
        params=params,
        slack=base + 4.0 * root - off,
        tolerance=1e-10,
        extras={"lhs": off, "energy": energy},
    )
    cert_diag = InequalityCertificate(
        name="pair-density-diag-bound",
        params=params,
        slack=base + (4.0 + math.sqrt(3.0)) * root - diag,
        tolerance=1e-10,
        extras={"lhs": diag, "energy": energy},
    )
    return cert_off, cert_diag


# ---------------------------------------------------------------------------
# energy truncation and the lower-bound budget
# ---------------------------------------------------------------------------

def verify_low_energy_truncation(
    ell: int, spin: SpinMagnitude, beta: float
) -> InequalityCertificate:
    """Certify Tr e^{-beta H} <= 1 + Tr e^{-beta H} 1_{H < E0} with
    E0 = -l f_l(beta/2), and that every counted state with minimal
    3-component for its multiplet sits in a sector n < N0 = E0 l^2/(2S)."""
    from .spectra import sector_energy_spin_pairs

    lattice = SpinLattice.chain(ell)
    s = spin.s
    s_max = s * ell
    per_sector = [
        sector_energy_spin_pairs(lattice, spin, n)
        for n in range(spin.two_s * ell + 1)
    ]
    energies = np.array([e for pairs in per_sector for e, _ in pairs])
    from .spectra import free_energy_from_eigenvalues

    e0 = -ell * free_energy_from_eigenvalues(energies, beta / 2.0, ell)
    n0 = e0 * ell**2 / (2.0 * s)
    lhs = float(np.exp(-beta * energies).sum())
    rhs = 1.0 + float(np.exp(-beta * energies[energies < e0]).sum())
    trunc_slack = rhs - lhs
    sector_slack = math.inf
    for n, pairs in enumerate(per_sector):
        for e, t in pairs:
            if e < e0 and abs(t - (s_max - n)) < 0.25:
                sector_slack = min(sector_slack, n0 - n)
    if sector_slack is math.inf:
        sector_slack = n0
    return InequalityCertificate(
        name="low-energy-truncation",
        params={"ell": ell, "two_s": spin.two_s, "beta": beta},
        slack=min(trunc_slack, sector_slack),
        tolerance=1e-12 * max(1.0, lhs),
        extras={
            "truncation_slack": trunc_slack,
            "sector_restriction_slack": sector_slack,
            "e0": e0,
            "n0": n0,
        },
    )


@dataclass
class LowerBoundBudget:
    """Cutoff energy, particle cap, dilution, and box scale feeding the
    assembled lower envelope."""

    beta: float
    s: float
    ell: int
    e0: float
    n0: float
    delta: float
    ell0: float
    e0_source: str
    implied_c: float | None = None

    @property
    def informative(self) -> bool:
        return self.delta < 1.0


E0_SOURCES = ("preliminary", "exact-ed")


def compute_budget(
    ell: int,
    beta: float,
    spin,
    e0_source: str = "preliminary",
) -> LowerBoundBudget:
    """Assemble (E0, N0, delta, l0) for a box of size ell at inverse
    temperature beta.

    E0 = -l f_l(beta/2) with f_l either from exact diagonalization
    ("exact-ed", needs a SpinMagnitude and a feasible dimension) or from
    the coarse preliminary bound ("preliminary", any size; requires
    ell >= l0(beta/2)/2, the scale below which that bound is not
    designed to operate).  N0 = E0 l^2 / (2S); delta is the dilution
    budget; l0 reports sqrt(4 beta S / ln(beta S)) at the budget's own
    beta.
    """
    if isinstance(spin, SpinMagnitude):
        s = spin.s
        spin_obj = spin
    else:
        s = float(spin)
        spin_obj = None
    x = beta * s
    if x <= 1.0:
        raise ValueError(f"budget requires beta*S > 1, got {x}")
    ell0 = math.sqrt(4.0 * x / math.log(x))
    beta_half = beta / 2.0
    if e0_source == "preliminary":
        x_half = beta_half * s
        if x_half <= 1.0:
            raise ValueError(f"preliminary bound requires (beta/2)*S > 1, got {x_half}")
        ell0_half = math.sqrt(4.0 * x_half / math.log(x_half))
        if ell < ell0_half / 2.0:
            raise ValueError(
                f"preliminary-bound budget needs ell >= l0/2 = {ell0_half / 2.0:.2f} "
                f"at beta/2, got ell={ell}"
            )
        bound = preliminary_free_energy_bound(beta_half, s, ell)
    elif e0_source == "exact-ed":
        if spin_obj is None:
            spin_obj = SpinMagnitude(int(round(2 * s)))
        from .spectra import chain_free_energy

        bound = chain_free_energy(ell, spin_obj, beta_half)
    else:
        raise ValueError(f"e0_source must be one of {E0_SOURCES}, got {e0_source!r}")
    e0 = -ell * bound
    n0 = e0 * ell**2 / (2.0 * s)
    delta = delta_dilution(e0, ell, s)
    log_arg = beta_half * s**3
    implied_c = None
    if log_arg > 1.0:
        denom = (
            math.sqrt(math.log(beta_half * s))
            * beta_half**-1.5
            * s**-0.5
            * math.log(log_arg)
        )
        if denom > 0:
            implied_c = (e0 / ell) / denom
    return LowerBoundBudget(
        beta=beta,
        s=s,
        ell=ell,
        e0=e0,
        n0=n0,
        delta=delta,
        ell0=ell0,
        e0_source=e0_source,
        implied_c=implied_c,
    )
