import io
import math

import numpy as np
import pytest

from gaptooth.errors import ConfigError, NumericalError
from gaptooth.microsim import ModelSpec, build_patch_config, rhs, stable_dt, step
from gaptooth.ptbc import stencil_pair
from gaptooth.spectra import (
    assemble_map,
    convergence_order,
    default_dt,
    dominant_growth_rates,
    eigen_growth,
    format_table,
    patch_spectrum,
    table_report,
    table_row,
    write_table_csv,
)

PI = math.pi


@pytest.fixture(scope="module")
def m8():
    return patch_spectrum(8, n=11, r=0.1, order=4)


class TestAssembleMap:
    def test_dimensions(self):
        cfg = build_patch_config(2 * PI, 4, 0.1, 11)
        M = assemble_map(cfg, stencil_pair(2, 0.1), 1e-6)
        assert M.matrix.shape == (44, 44)
        assert M.order == 4

    def test_euler_structure(self):
        cfg = build_patch_config(2 * PI, 4, 0.1, 7)
        st = stencil_pair(2, 0.1)
        dt = 1e-6
        M = assemble_map(cfg, st, dt).matrix
        N = cfg.m * cfg.n
        basis = np.eye(N).reshape(N, cfg.m, cfg.n)
        A = rhs(basis, cfg, ModelSpec(), st).reshape(N, N).T
        assert np.allclose(M, np.eye(N) + dt * A, atol=1e-15, rtol=0)

    @pytest.mark.parametrize("scheme", ["euler", "rk4"])
    def test_matches_integrator(self, scheme):
        cfg = build_patch_config(2 * PI, 5, 0.2, 7)
        st = stencil_pair(3, 0.2)
        M = assemble_map(cfg, st, 1e-5, scheme=scheme).matrix
        v = np.random.default_rng(2).normal(size=(5, 7))
        want = step(v, cfg, ModelSpec(), st, 1e-5, scheme).ravel()
        assert np.allclose(M @ v.ravel(), want, rtol=0, atol=1e-14)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_ones_preserved(self, p):
        cfg = build_patch_config(2 * PI, 8, 0.1, 11)
        M = assemble_map(cfg, stencil_pair(p, 0.1), 1e-6).matrix
        assert np.allclose(M @ np.ones(88), 1.0, atol=1e-13, rtol=0)

    def test_refuses_burgers(self):
        cfg = build_patch_config(2 * PI, 4, 0.1, 11)
        with pytest.raises(ConfigError):
            assemble_map(cfg, stencil_pair(2, 0.1), 1e-6, ModelSpec("burgers"))


class TestEigenGrowth:
    def test_table1_row_m8(self, m8):
        row = table_row(m8)
        assert abs(row.lam1) < 1e-6
        assert row.lam23 == pytest.approx(-0.996139, rel=1e-3)
        assert row.lam45 == pytest.approx(-3.787268, rel=1e-3)
        assert row.lam67 == pytest.approx(-7.132829, rel=1e-3)

    def test_pairs_are_conjugate_or_double(self, m8):
        s = m8.slow
        assert s[1].real == pytest.approx(s[2].real, rel=1e-8)
        assert s[3].real == pytest.approx(s[4].real, rel=1e-8)

    def test_first_internal_mode_m4(self):
        row = table_row(patch_spectrum(4, order=4))
        assert row.internal == pytest.approx(-99.79, rel=0.02)
        assert row.lam67 is None

    def test_internal_near_pi2_over_h2(self):
        spec = patch_spectrum(8, order=4)
        h = 2 * 0.1 * 2 * PI / 8
        assert spec.group(1).real[0] == pytest.approx(-PI**2 / h**2, rel=0.02)

    def test_order6_m32_lam45(self):
        spec = patch_spectrum(32, order=6)
        assert spec.growth[3].real == pytest.approx(-4.000023, rel=1e-4)

    def test_group_structure(self, m8):
        assert sum(len(g) for g in m8.groups) == 8 * 11
        # slow group well separated from the first internal group
        assert m8.group(0).real.min() > -20
        assert m8.group(1).real.max() < -300

    def test_sorted_descending(self, m8):
        assert np.all(np.diff(m8.growth.real) <= 1e-9)

    def test_growth_is_log_mu_over_dt(self, m8):
        assert np.allclose(np.exp(m8.growth * m8.dt), m8.mu, rtol=1e-12)

    def test_stable(self, m8):
        assert m8.max_abs_mu <= 1 + 1e-8

    def test_arnoldi_matches_dense(self, m8):
        cfg = build_patch_config(2 * PI, 8, 0.1, 11)
        got = dominant_growth_rates(cfg, stencil_pair(2, 0.1), m8.dt, 5)
        # Arnoldi may return one copy of a double eigenvalue, so match each value
        for lam in got:
            assert np.min(np.abs(m8.growth[:8] - lam)) < 1e-5

    def test_csv(self, m8):
        buf = io.StringIO()
        m8.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "index,re_lambda,im_lambda,abs_mu,group"
        assert len(lines) == 89
        assert lines[-1].endswith(",10")


class TestDefaults:
    def test_default_dt(self):
        assert default_dt(build_patch_config(2 * PI, 4, 0.1, 11)) == 1e-6
        cfg = build_patch_config(2 * PI, 64, 0.1, 41)
        assert default_dt(cfg) < 1e-6
        assert default_dt(cfg) == pytest.approx(0.5 * stable_dt(cfg))


class TestTable:
    def test_format_and_csv(self):
        rows = table_report([4, 8], n=7)
        text = format_table(rows)
        assert "n/a" in text.splitlines()[2]
        buf = io.StringIO()
        write_table_csv(rows, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "m,lambda_1,lambda_2_3,lambda_4_5,lambda_6_7,internal"
        assert lines[1].split(",")[4] == ""


class TestConvergenceOrder:
    def test_exact_power(self):
        H = np.array([1.0, 0.5, 0.25, 0.125])
        assert convergence_order(H, 3 * H**4) == pytest.approx(4.0)

    def test_drops_floored_points(self):
        H = np.array([1.0, 0.5, 0.25, 0.125])
        err = np.array([1.0, 1 / 64, 1e-9, 1e-9])
        assert convergence_order(H, err, floor=1e-8) == pytest.approx(6.0)

    def test_degenerate_fit_flagged(self):
        with pytest.raises(NumericalError):
            convergence_order([1.0, 0.5, 0.25], [0.0, 0.0, 0.0])

    def test_needs_three_points(self):
        with pytest.raises(ConfigError):
            convergence_order([1.0, 0.5], [1.0, 0.1])
