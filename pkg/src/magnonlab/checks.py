"""Named certificate suites over parameter grids.

Each check maps a name to a runner producing a list of certificates;
the default grids match the sizes the package is expected to certify,
the quick grids are trimmed for smoke runs, and explicit overrides
(`ells`, `spins`, `ns`, `betas`) replace the corresponding axis of the
grid.  Cells are independent jobs with per-cell seeded randomness, so a
worker pool may execute them in any order without changing the emitted
ledger.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .basis import SpinLattice, SpinMagnitude, enumerate_sector_basis
from .boundlab import (
    gibbs_random_state,
    haar_random_state,
    rng_for,
    verify_casimir_lower_bound,
    verify_density_bounds,
    verify_halfspin_quadratic_form_equality,
    verify_laplacian_lower_bound,
    verify_low_energy_truncation,
    verify_php_leq_t,
    verify_vnorm_lower_bound,
)
from .certificates import InequalityCertificate
from .operators import assemble_heisenberg, verify_su2_representation
from .spectra import check_localization_bound, check_subadditivity

DEFAULT_SEED = 20260811


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("MAGNONLAB_WORKERS", "1")))
    except ValueError:
        return 1


def _map_ordered(fn, jobs):
    """Apply fn over jobs, optionally on a thread pool; results keep the
    job order so output ledgers are deterministic."""
    workers = worker_count()
    if workers == 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _flatten(nested):
    out = []
    for item in nested:
        if isinstance(item, InequalityCertificate):
            out.append(item)
        else:
            out.extend(item)
    return out


def _axis(override, default):
    if override is None:
        return tuple(default)
    return tuple(override)


def run_su2(grid="default", seed=DEFAULT_SEED, spins=None, **_):
    two_s_list = _axis(spins, (1, 2, 3) if grid == "default" else (1, 2))
    certs = []
    for two_s in two_s_list:
        spin = SpinMagnitude(two_s)
        res = verify_su2_representation(spin, spin.site_dim)
        certs.append(
            InequalityCertificate(
                name="su2-representation",
                params={"two_s": two_s},
                slack=-res["max_residual"],
                tolerance=1e-12,
            )
        )
    return certs


def run_php_leq_t(grid="default", seed=DEFAULT_SEED, ells=None, spins=None, ns=None, **_):
    if grid == "default":
        ell_ax, spin_ax, n_ax = range(2, 6), (1, 2, 3), range(0, 9)
    else:
        ell_ax, spin_ax, n_ax = (2, 3), (1, 2), range(0, 4)
    cells = [
        (ell, two_s, n)
        for ell in _axis(ells, ell_ax)
        for two_s in _axis(spins, spin_ax)
        for n in _axis(ns, n_ax)
    ]
    return _map_ordered(
        lambda c: verify_php_leq_t(c[0], SpinMagnitude(c[1]), c[2]), cells
    )


def run_casimir(grid="default", seed=DEFAULT_SEED, ells=None, spins=None, **_):
    if ells is not None or spins is not None:
        cells = [
            (ell, two_s)
            for ell in _axis(ells, (4,))
            for two_s in _axis(spins, (1,))
        ]
    elif grid == "default":
        cells = [(ell, 1) for ell in range(2, 11)] + [(ell, 2) for ell in range(2, 7)]
    else:
        cells = [(ell, 1) for ell in (2, 3, 4)] + [(2, 2), (3, 2)]
    return _map_ordered(
        lambda c: verify_casimir_lower_bound(c[0], SpinMagnitude(c[1])), cells
    )


def run_laplacian(grid="default", seed=DEFAULT_SEED, ells=None, spins=None, ns=None, **_):
    if grid == "default":
        ell_ax, spin_ax, samples = range(2, 7), (1, 2), 100
    else:
        ell_ax, spin_ax, samples = range(2, 5), (1, 2), 20

    def cell(job):
        ell, two_s, n = job
        out = [verify_laplacian_lower_bound(ell, SpinMagnitude(two_s), n)]
        if two_s == 1 and n >= 1:
            out.append(
                verify_halfspin_quadratic_form_equality(ell, n, samples, seed=seed)
            )
        return out

    cells = [
        (ell, two_s, n)
        for ell in _axis(ells, ell_ax)
        for two_s in _axis(spins, spin_ax)
        for n in (ns if ns is not None else range(0, ell + 1))
        if n <= ell
    ]
    return _flatten(_map_ordered(cell, cells))


def _random_state_cells(ells, ns, spins):
    return [
        (ell, n, two_s)
        for ell in ells
        for n in ns
        for two_s in spins
        if n <= two_s * ell
    ]


def run_vnorm(grid="default", seed=DEFAULT_SEED, ells=None, spins=None, ns=None, **_):
    if grid == "default":
        ell_ax, n_ax, spin_ax, samples = (4, 5), (2, 3), (1, 2), 100
    else:
        ell_ax, n_ax, spin_ax, samples = (4,), (2,), (1, 2), 20
    cells = _random_state_cells(_axis(ells, ell_ax), _axis(ns, n_ax), _axis(spins, spin_ax))

    def cell(job):
        ell, n, two_s = job
        basis = enumerate_sector_basis(SpinLattice.chain(ell), SpinMagnitude(two_s), n)
        rng = rng_for(seed, 1, ell, n, two_s)
        worst = None
        for _ in range(samples):
            cert = verify_vnorm_lower_bound(haar_random_state(basis, rng))
            if worst is None or cert.slack < worst.slack:
                worst = cert
        worst.params["samples"] = samples
        worst.seed = seed
        return worst

    return _map_ordered(cell, cells)


def run_density(grid="default", seed=DEFAULT_SEED, beta_gibbs=2.0,
                ells=None, spins=None, ns=None, **_):
    if grid == "default":
        ell_ax, n_ax, spin_ax, samples = (4, 5, 6), (2, 3), (1, 2), 100
    else:
        ell_ax, n_ax, spin_ax, samples = (4, 5), (2,), (1, 2), 20
    cells = _random_state_cells(_axis(ells, ell_ax), _axis(ns, n_ax), _axis(spins, spin_ax))

    def cell(job):
        ell, n, two_s = job
        basis = enumerate_sector_basis(SpinLattice.chain(ell), SpinMagnitude(two_s), n)
        h = assemble_heisenberg(basis).to_dense()
        worst_off = worst_diag = None
        for kind in ("haar", "gibbs"):
            rng = rng_for(seed, 2, ell, n, two_s, 0 if kind == "haar" else 1)
            for _ in range(samples):
                if kind == "haar":
                    state = haar_random_state(basis, rng)
                else:
                    state = gibbs_random_state(basis, h, beta_gibbs, rng)
                c_off, c_diag = verify_density_bounds(state, h)
                if worst_off is None or c_off.slack < worst_off.slack:
                    worst_off = c_off
                if worst_diag is None or c_diag.slack < worst_diag.slack:
                    worst_diag = c_diag
        for cert in (worst_off, worst_diag):
            cert.params["samples"] = 2 * samples
            cert.seed = seed
        return [worst_off, worst_diag]

    return _flatten(_map_ordered(cell, cells))


def run_truncation(grid="default", seed=DEFAULT_SEED, ells=None, spins=None, betas=None, **_):
    if ells is not None or spins is not None or betas is not None:
        cells = [
            (ell, two_s, beta)
            for ell in _axis(ells, (4,))
            for two_s in _axis(spins, (1,))
            for beta in _axis(betas, (8.0,))
        ]
    elif grid == "default":
        cells = [(ell, 1, beta) for ell in (3, 4, 5) for beta in (4.0, 8.0)]
        cells += [(3, 2, 4.0), (4, 2, 4.0)]
    else:
        cells = [(3, 1, 4.0), (4, 1, 8.0)]
    return _map_ordered(
        lambda c: verify_low_energy_truncation(c[0], SpinMagnitude(c[1]), c[2]), cells
    )


def run_subadditivity(grid="default", seed=DEFAULT_SEED, ells=None, spins=None, betas=None, **_):
    if ells is not None or spins is not None or betas is not None:
        cells = [
            (total, two_s, beta)
            for total in _axis(ells, (6,))
            for two_s in _axis(spins, (1,))
            for beta in _axis(betas, (2.0,))
        ]
    elif grid == "default":
        cells = [(total, 1, beta) for total in (4, 6, 8) for beta in (1.0, 2.0, 8.0)]
        cells += [(total, 2, beta) for total in (4, 5) for beta in (1.0, 2.0)]
    else:
        cells = [(4, 1, 2.0), (4, 2, 1.0)]
    return _map_ordered(
        lambda c: check_subadditivity(c[0], SpinMagnitude(c[1]), c[2]), cells
    )


def run_localization(grid="default", seed=DEFAULT_SEED, betas=None, **_):
    if grid == "default":
        cells = [
            (7, 2, 1, 2.0),
            (7, 2, 1, 4.0),
            (9, 3, 1, 2.0),
            (10, 2, 1, 4.0),
            (7, 2, 2, 2.0),
        ]
    else:
        cells = [(7, 2, 1, 4.0)]
    if betas is not None:
        cells = [(total, ell, two_s, beta) for total, ell, two_s, _ in cells
                 for beta in betas]
    return _map_ordered(
        lambda c: check_localization_bound(c[0], c[1], SpinMagnitude(c[2]), c[3]),
        cells,
    )


CHECKS = {
    "su2": run_su2,
    "php-leq-t": run_php_leq_t,
    "casimir": run_casimir,
    "laplacian": run_laplacian,
    "vnorm": run_vnorm,
    "density": run_density,
    "truncation": run_truncation,
    "subadditivity": run_subadditivity,
    "localization": run_localization,
}


def run_check(name, grid="default", seed=DEFAULT_SEED, **overrides):
    if name not in CHECKS:
        raise ValueError(
            f"unknown check {name!r}; valid names: {', '.join(sorted(CHECKS))}"
        )
    return CHECKS[name](grid=grid, seed=seed, **overrides)
