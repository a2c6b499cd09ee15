"""Sparse sector-block assembly of every operator used by the toolkit.

All assemblies are pure functions of a `MagnonSectorBasis`: the chain
Hamiltonian with its square-root-dressed hopping, the boundary-pinned
variant, the free-boson hopping operator, the diagonal occupancy
projector, and the total-spin Casimir.  Matrices are collected as
coordinate triplets and densified only at diagonalization time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .basis import MagnonSectorBasis, SpinLattice, SpinMagnitude, enumerate_sector_basis


@dataclass
class HermitianOperator:
    """Real symmetric operator on a sector basis, stored as COO triplets."""

    basis: MagnonSectorBasis
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.dim

    def to_csr(self) -> sp.csr_matrix:
        return sp.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.dim, self.dim)
        ).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def hermiticity_defect(self) -> float:
        """max |M - M^T| entry relative to max |M| (0 for empty operators)."""
        m = self.to_csr()
        scale = abs(m).max() if m.nnz else 0.0
        if scale == 0.0:
            return 0.0
        return abs(m - m.T).max() / scale

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.to_dense())


class _CooBuilder:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, i, j, v):
        if v != 0.0:
            self.rows.append(i)
            self.cols.append(j)
            self.vals.append(v)

    def build(self, basis) -> HermitianOperator:
        return HermitianOperator(
            basis,
            np.asarray(self.rows, dtype=np.int64),
            np.asarray(self.cols, dtype=np.int64),
            np.asarray(self.vals, dtype=np.float64),
        )


def _sqrt_dressing(occ_after, two_s):
    """sqrt of the positive part of 1 - n/(2S), with n the occupation the
    factor sees after the annihilation acted."""
    val = 1.0 - occ_after / two_s
    return math.sqrt(val) if val > 0.0 else 0.0


def _hop_amplitude(n_src, n_dst, two_s, dressed):
    """Matrix element of a^dag_dst [sqrt factors] a_src moving one boson.

    `n_src`, `n_dst` are occupations before the move.  With `dressed`
    the square-root occupancy factors of the spin representation are
    applied: sqrt(1 - n_dst/2S) and sqrt(1 - (n_src-1)/2S), clamped at 0.
    """
    amp = math.sqrt(n_src * (n_dst + 1))
    if dressed:
        amp *= _sqrt_dressing(n_dst, two_s) * _sqrt_dressing(n_src - 1, two_s)
    return amp


def _assemble_hopping(basis, bonds, dressed, diag_fn, extra_diag=None):
    """Shared kernel: nearest-neighbor hops plus a per-state diagonal."""
    two_s = basis.spin.two_s
    out = _CooBuilder()
    s = two_s / 2.0
    for i, occ in enumerate(basis.states):
        out.add(i, i, diag_fn(occ) + (extra_diag(occ) if extra_diag else 0.0))
        occ_list = occ.tolist()
        for x, y in bonds:
            for src, dst in ((x, y), (y, x)):
                ns = occ_list[src]
                if ns == 0:
                    continue
                nd = occ_list[dst]
                if nd + 1 > basis.cap:
                    continue
                amp = _hop_amplitude(ns, nd, two_s, dressed)
                if amp == 0.0:
                    continue
                occ_list[src] -= 1
                occ_list[dst] += 1
                j = basis.index[tuple(occ_list)]
                occ_list[src] += 1
                occ_list[dst] -= 1
                out.add(j, i, -s * amp)
    return out.build(basis)


def assemble_heisenberg(basis: MagnonSectorBasis) -> HermitianOperator:
    """Heisenberg Hamiltonian block on an n-magnon sector.

    Nearest-neighbor exchange with unit coupling and the ground-state
    energy normalized to zero: the diagonal carries
    S*(n_x + n_y) - n_x*n_y per bond, the hopping carries the
    square-root occupancy dressing that encodes the hard-core
    constraint.  Works for open chains and open 2d grids.
    """
    lattice = basis.lattice
    s = basis.spin.s
    bonds = lattice.bonds()

    def diag(occ):
        return sum(
            s * (occ[x] + occ[y]) - occ[x] * occ[y] for x, y in bonds
        )

    return _assemble_hopping(basis, bonds, dressed=True, diag_fn=diag)


def assemble_dirichlet_heisenberg(basis: MagnonSectorBasis) -> HermitianOperator:
    """Chain Hamiltonian with both end spins pinned maximally down.

    Equals the free-chain block plus the diagonal S*(n_1 + n_M); the
    additive constants of the pinning cancel against the normalization.
    Only defined for 1d chains.
    """
    lattice = basis.lattice
    if lattice.dimension != 1:
        raise ValueError(
            "boundary pinning is assembled for 1d chains only; the 2d upper "
            "bound enters through the free-boson operator instead"
        )
    s = basis.spin.s
    bonds = lattice.bonds()
    last = lattice.nsites - 1

    def diag(occ):
        return sum(
            s * (occ[x] + occ[y]) - occ[x] * occ[y] for x, y in bonds
        )

    def pin(occ):
        return s * (occ[0] + occ[last])

    return _assemble_hopping(basis, bonds, dressed=True, diag_fn=diag, extra_diag=pin)


def assemble_free_boson_t(basis: MagnonSectorBasis) -> HermitianOperator:
    """Free-boson hopping operator S * sum (-Laplacian_D)(x,y) a^dag_x a_y.

    The one-particle operator is the Dirichlet discrete Laplacian on the
    open box, so the diagonal is 2*d*S*n_x at every site (missing
    neighbors act as hard walls).  Requires an uncapped sector basis:
    free bosons are not subject to the 2S hard core.
    """
    if basis.capped:
        raise ValueError(
            "the free-boson operator lives on the uncapped sector; "
            "enumerate the basis with capped=False"
        )
    lattice = basis.lattice
    s = basis.spin.s
    d = lattice.dimension
    bonds = lattice.bonds()

    def diag(occ):
        return 2.0 * d * s * int(np.sum(occ))

    return _assemble_hopping(basis, bonds, dressed=False, diag_fn=diag)


@dataclass
class DiagonalProjector:
    """Diagonal occupancy projector: weight(state) = prod_x f(n_x)."""

    basis: MagnonSectorBasis
    weights: np.ndarray


def occupancy_weight(n: int, spin: SpinMagnitude) -> float:
    """Single-site weight f(n): 1 for n in {0,1}, the square root of the
    falling-factorial ratio (2S)(2S-1)...(2S-n+1)/(2S)^n for n <= 2S,
    and 0 beyond the hard core.  Evaluated through exact rationals."""
    if n == 0:
        return 1.0
    if n > spin.two_s:
        return 0.0
    prod = Fraction(1)
    for j in range(1, n + 1):
        prod *= Fraction(spin.two_s - (j - 1), spin.two_s)
    return math.sqrt(prod)


def assemble_projector_p(basis: MagnonSectorBasis) -> DiagonalProjector:
    """Product projector over sites; vanishes on states breaking the
    hard core, equals 1 whenever every occupation is 0 or 1."""
    site_w = np.array(
        [occupancy_weight(k, basis.spin) for k in range(basis.cap + 1)]
    )
    weights = np.prod(site_w[basis.states], axis=1)
    return DiagonalProjector(basis, weights)


def assemble_total_spin_squared(basis: MagnonSectorBasis) -> HermitianOperator:
    """Total-spin Casimir on a physical sector.

    Assembled from pair couplings: diagonal M*S(S+1) + sum_{x!=y}
    (n_x - S)(n_y - S), plus the long-range dressed hop of the
    transverse part.  Eigenvalues are t(t+1) with t between |n - S*M|
    and S*M.
    """
    if not basis.capped:
        raise ValueError("the Casimir is assembled on the physical (capped) basis")
    lattice = basis.lattice
    spin = basis.spin
    two_s = spin.two_s
    s = spin.s
    m = lattice.nsites
    out = _CooBuilder()
    for i, occ in enumerate(basis.states):
        occ_f = occ.astype(float)
        dev = occ_f - s
        diag = m * s * (s + 1.0) + np.sum(dev) ** 2 - np.sum(dev**2)
        out.add(i, i, diag)
        occ_list = occ.tolist()
        for dst in range(m):
            for src in range(m):
                if src == dst:
                    continue
                ns = occ_list[src]
                if ns == 0 or occ_list[dst] + 1 > two_s:
                    continue
                amp = _hop_amplitude(ns, occ_list[dst], two_s, dressed=True)
                if amp == 0.0:
                    continue
                occ_list[src] -= 1
                occ_list[dst] += 1
                j = basis.index[tuple(occ_list)]
                occ_list[src] += 1
                occ_list[dst] -= 1
                # transverse part reduces to one dressed 2S-hop per ordered pair
                out.add(j, i, 2.0 * s * amp)
    return out.build(basis)


def ground_multiplet_vector(basis: MagnonSectorBasis) -> np.ndarray:
    """Unit vector of the maximal-total-spin state inside a sector.

    The fully symmetric n-magnon state has occupation amplitudes
    proportional to prod_x sqrt(C(2S, n_x)); it spans the zero-energy
    eigenspace of the sector block.
    """
    two_s = basis.spin.two_s
    site_amp = np.array(
        [math.sqrt(math.comb(two_s, k)) if k <= two_s else 0.0
         for k in range(basis.cap + 1)]
    )
    v = np.prod(site_amp[basis.states], axis=1)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("sector carries no maximal-spin state")
    return v / nrm


# ---------------------------------------------------------------------------
# single-site spin matrices and the tensor-product assembly oracle
# ---------------------------------------------------------------------------

def boson_spin_matrices(spin: SpinMagnitude):
    """(S+, S-, S3) on the occupation ladder |0>, ..., |2S>.

    Built from truncated boson ladder operators dressed with the
    positive part of sqrt(1 - n/2S); S3 = n - S.  This is the
    representation all sector assemblies are derived from.
    """
    d = spin.site_dim
    two_s = spin.two_s
    s = spin.s
    sp_ = np.zeros((d, d))
    for k in range(d - 1):
        # raise |k> -> |k+1>: sqrt(2S) * sqrt(k+1) * sqrt(1 - k/2S)
        sp_[k + 1, k] = math.sqrt(two_s) * math.sqrt(k + 1) * _sqrt_dressing(k, two_s)
    sm_ = sp_.T.copy()
    s3 = np.diag(np.arange(d, dtype=float) - s)
    return sp_, sm_, s3


def ladder_spin_matrices(spin: SpinMagnitude):
    """(S+, S-, S3) from the textbook m-projection ladder, ordered by
    increasing S3 to align with the occupation labeling."""
    s = spin.s
    proj = np.arange(-s, s + 1, 1.0)
    d = len(proj)
    sp_ = np.zeros((d, d))
    for k in range(d - 1):
        m = proj[k]
        sp_[k + 1, k] = math.sqrt(s * (s + 1) - m * (m + 1))
    return sp_, sp_.T.copy(), np.diag(proj)


def verify_su2_representation(spin: SpinMagnitude, site_dim_check: int):
    """Certify the commutators and Casimir of the single-site matrices.

    Returns a dict with the worst absolute residual of [S3,S+-] -+ S+-,
    [S+,S-] - 2 S3 and vec(S)^2 - S(S+1) Id; all must vanish for the
    occupation ladder to carry spin S.
    """
    if site_dim_check != spin.site_dim:
        raise ValueError(
            f"site dimension {site_dim_check} inconsistent with 2S+1={spin.site_dim}"
        )
    sp_, sm_, s3 = boson_spin_matrices(spin)
    comm = lambda a, b: a @ b - b @ a
    res = [
        np.abs(comm(s3, sp_) - sp_).max(),
        np.abs(comm(s3, sm_) + sm_).max(),
        np.abs(comm(sp_, sm_) - 2.0 * s3).max(),
    ]
    casimir = 0.5 * (sp_ @ sm_ + sm_ @ sp_) + s3 @ s3
    s = spin.s
    res.append(np.abs(casimir - s * (s + 1) * np.eye(spin.site_dim)).max())
    return {"max_residual": float(max(res)), "residuals": [float(r) for r in res]}


def tensor_product_heisenberg(lattice: SpinLattice, spin: SpinMagnitude) -> np.ndarray:
    """Dense Heisenberg Hamiltonian on the full tensor-product space.

    Independent assembly path used as an oracle against the sector
    blocks: sum over bonds of S^2 - S3 S3 - (S+ S- + S- S+)/2 built by
    Kronecker products of single-site ladder matrices.
    """
    d = spin.site_dim
    m = lattice.nsites
    dim = d**m
    if dim > 1 << 20:
        raise ValueError(f"tensor-product dimension {dim} exceeds the oracle cap")
    sp_, sm_, s3 = ladder_spin_matrices(spin)
    eye = np.eye(d)

    def site_op(op, site):
        out = np.array([[1.0]])
        for k in range(m):
            out = np.kron(out, op if k == site else eye)
        return out

    s = spin.s
    h = np.zeros((dim, dim))
    for x, y in lattice.bonds():
        spx, smx, szx = site_op(sp_, x), site_op(sm_, x), site_op(s3, x)
        spy, smy, szy = site_op(sp_, y), site_op(sm_, y), site_op(s3, y)
        h += s * s * np.eye(dim) - szx @ szy - 0.5 * (spx @ smy + smx @ spy)
    return h


def all_sector_bases(lattice: SpinLattice, spin: SpinMagnitude):
    """Physical sector bases for n = 0 .. 2S * nsites, in order."""
    return [
        enumerate_sector_basis(lattice, spin, n)
        for n in range(spin.two_s * lattice.nsites + 1)
    ]
