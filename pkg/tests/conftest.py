import json
import os
import pickle
import time
from typing import NamedTuple

import numpy as np
import pytest

from akltgap.eigensolver import GapTable, LanczosConfig, sector_gap_scan
from akltgap.hilbert_sector import enumerate_sector, make_hamiltonian, to_dense
from akltgap.lattice import build_patch_12, build_patch_F, build_torus

from oracles import make_ring6, make_star


class ScanRun(NamedTuple):
    table: GapTable
    seconds: "float | None"


@pytest.fixture(scope="session")
def ring6():
    return make_ring6()


@pytest.fixture(scope="session")
def star():
    return make_star()


@pytest.fixture(scope="session")
def patch12():
    return build_patch_12(1.2)


@pytest.fixture(scope="session")
def patchF():
    return build_patch_F(1.4)


@pytest.fixture(scope="session")
def torus12():
    return build_torus(12, 12)


@pytest.fixture(scope="session")
def scan12(patch12):
    """Full 12-site sector scan, shared by the heavy acceptance tests.

    Set AKLTGAP_TEST_SCAN_CACHE to a pickle path to reuse a previous run
    during development; the default is a live scan.
    """
    cache = os.environ.get("AKLTGAP_TEST_SCAN_CACHE", "")
    if cache and os.path.exists(cache):
        with open(cache, "rb") as fh:
            table = pickle.load(fh)
        seconds = None
        sidecar = cache.rsplit(".", 1)[0] + ".json"
        if os.path.exists(sidecar):
            with open(sidecar) as fh:
                seconds = json.load(fh).get("wall_seconds")
        return ScanRun(table, seconds)
    t0 = time.perf_counter()
    table = sector_gap_scan(patch12, config=LanczosConfig(n_eigenpairs=3, seed=7))
    return ScanRun(table, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def dense12_small(patch12):
    """Dense spectra of every 12-site sector small enough to diagonalize."""
    h = make_hamiltonian(patch12)
    spectra = {}
    for sign in (1, -1):
        for two_m in range(24, 37, 2):
            basis = enumerate_sector(patch12, sign * two_m)
            spectra[sign * two_m] = np.linalg.eigvalsh(to_dense(h, basis))
            basis.release_caches()
    return spectra
