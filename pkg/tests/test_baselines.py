import numpy as np
import pytest

from picard_nls.baselines import lie_step, nonlinear_phase_flow, run_splitting, strang_step
from picard_nls.config import SchemeConfig
from picard_nls.nqs import _Kit
from picard_nls.oracles import gaussian_initial
from picard_nls.spectral import filtered_flow, l2_error, l2_norm, random_field


def cfg(**kw):
    base = dict(scheme="strang", p=5, d=1, N=1, eps=0.5, tau=0.05, T=0.5, a=0.1, K=256)
    base.update(kw)
    return SchemeConfig(**base)


def test_phase_flow_isometry():
    rng = np.random.default_rng(0)
    w = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    for t in (0.1, 1.7, -0.4):
        out = nonlinear_phase_flow(w, t, eps=0.8, p=5)
        np.testing.assert_allclose(np.abs(out), np.abs(w), rtol=1e-15)


def test_eps_zero_reduces_to_filtered_flow():
    c = cfg(eps=0.0)
    phi = gaussian_initial(c.grid())
    direct = filtered_flow(phi, c.tau, c.tau, c.cutoff_profile())
    assert l2_error(lie_step(phi, c), direct) <= 1e-13
    assert l2_error(strang_step(phi, c), direct) <= 1e-13


def test_strang_middle_stage_is_phase_only():
    c = cfg()
    phi = gaussian_initial(c.grid())
    kit = _Kit(phi.grid, c.tau, c.cutoff_profile())
    half = kit.ifft(kit.fft(phi.data) * kit.sym_half)
    mid = nonlinear_phase_flow(half, c.tau, c.eps, c.p)
    np.testing.assert_allclose(np.abs(mid), np.abs(half), rtol=1e-15)


def test_splitting_norm_behavior():
    # phase flow is exactly isometric; the filtered flow only removes mass
    c = cfg()
    rng = np.random.default_rng(1)
    u = random_field(c.grid(), rng)
    for step in (lie_step, strang_step):
        out = step(u, c)
        assert l2_norm(out) <= l2_norm(u) * (1 + 1e-13)


def test_strang_self_convergence_second_order():
    c0 = cfg(eps=1.0, T=0.5)
    phi = gaussian_initial(c0.grid())
    ref = run_splitting(phi, c0.with_(tau=1.25e-4), kind="strang")
    errs = []
    taus = (0.02, 0.01, 0.005)
    for tau in taus:
        errs.append(l2_error(run_splitting(phi, c0.with_(tau=tau), kind="strang"), ref))
    slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
    assert 1.7 <= slope <= 2.3


def test_lie_self_convergence_first_order():
    c0 = cfg(eps=1.0, T=0.5)
    phi = gaussian_initial(c0.grid())
    ref = run_splitting(phi, c0.with_(tau=1.25e-4), kind="strang")
    errs = []
    taus = (0.02, 0.01, 0.005)
    for tau in taus:
        errs.append(l2_error(run_splitting(phi, c0.with_(tau=tau), kind="lie"), ref))
    slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
    assert 0.8 <= slope <= 1.2


def test_run_splitting_rejects_unknown_kind():
    c = cfg()
    with pytest.raises(ValueError):
        run_splitting(gaussian_initial(c.grid()), c, kind="yoshida")
