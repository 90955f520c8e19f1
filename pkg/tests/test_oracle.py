import numpy as np

from twinloops.collide import SolverConfig, find_collisions
from twinloops.families import family_T, spin_loop
from twinloops.invariants import degree_kp, w2, w2_bruteforce
from twinloops.oracle import fd_sign, oracle_collisions, oracle_degree


def test_oracle_matches_pipeline_on_T1():
    f = family_T(1)
    cfg = SolverConfig()
    pipe = find_collisions(f, cfg).classes
    orc = oracle_collisions(f, cfg)
    assert len(pipe) == len(orc) == 2
    for c, r in zip(pipe, orc):
        assert np.allclose([c.t, c.z1, c.z2], [r.t, r.z1, r.z2], atol=1e-6)
        assert c.sign == r.sign
        assert degree_kp(f, c, cfg).k == oracle_degree(f, r)
    assert w2_bruteforce(f, cfg) == w2(f, cfg).w2


def test_oracle_finds_nothing_for_spin():
    assert oracle_collisions(spin_loop(0)) == []


def test_fd_sign_is_swap_invariant():
    f = family_T(1)
    for c in find_collisions(f, SolverConfig()).classes:
        assert fd_sign(f, c.t, c.z1, c.z2) == fd_sign(f, c.t, c.z2, c.z1) == c.sign
