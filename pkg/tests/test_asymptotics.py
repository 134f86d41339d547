import csv
import math

import numpy as np
import pytest

from optransfer.asymptotics import (Classification, Verdict, classify, fit_decay_bound,
                                    increment_ratios, normalized_iteration, predict_pn,
                                    write_trajectory_csv)
from optransfer.coeff_model import chebyshev, from_arrays, legendre
from optransfer.errors import DegenerateStart, NotClassified, NotHyperbolic
from optransfer.pointmass import PointMassSpec, perturb, perturbed_orthonormal_at_atom
from optransfer.poly_eval import eval_orthonormal
from optransfer.transfer import eigen_step, hyperbolic_onset

from helpers import BV_FAMILY, BV_X0, cheb_closed_form, rel_err

ATOM = PointMassSpec(1.25, 0.3)


@pytest.fixture(scope="module")
def atom_seq():
    return perturb(chebyshev(), ATOM, 2100).seq_tilde


@pytest.fixture(scope="module")
def cheb_traj():
    return normalized_iteration(chebyshev(), 1.25, N=2000)


def constant_seq():
    return from_arrays([0.5], [], (0.5, 0.0), 1.0)


class TestIteration:
    def test_constant_coefficients_are_diagonal(self):
        tr = normalized_iteration(chebyshev(), 1.25, E=2, N=200)
        assert max(abs(u - tr.u[0]) for u in tr.u) < 1e-14
        for i, n in enumerate(tr.n):
            expect = tr.w[0] * 0.25 ** (n - 2)
            assert abs(tr.w[i] - expect) < 1e-13

    def test_log_L_increments(self, cheb_traj):
        tr = normalized_iteration(legendre(), 1.25, N=300)
        for i in range(1, len(tr.n)):
            assert tr.lnL[i] - tr.lnL[i - 1] == pytest.approx(math.log(tr.lambda_plus[i]),
                                                              abs=1e-13)

    @pytest.mark.parametrize("name", ["chebyshev", "legendre"] + sorted(BV_FAMILY))
    def test_reconstruction(self, name):
        seq = {"chebyshev": chebyshev, "legendre": legendre}.get(name) or BV_FAMILY[name]
        s = seq()
        x0 = BV_X0 if name in BV_FAMILY else 1.25
        tr = normalized_iteration(s, x0, N=500)
        ev = eval_orthonormal(s, x0, 500)
        for i, n in enumerate(tr.n):
            y0, y1 = tr.reconstruct(s, i)
            ref0, ref1 = ev.p[n], ev.p[n - 1] * s.a(n)
            big = max(abs(ref0), abs(ref1))
            assert abs((y0 - ref0) / big).to_real() < 1e-9
            assert abs((y1 - ref1) / big).to_real() < 1e-9

    def test_decaying_reconstruction_before_noise(self, atom_seq):
        tr = normalized_iteration(atom_seq, 1.25, N=200)
        ev = eval_orthonormal(atom_seq, 1.25, 200)
        for i in range(4):
            assert rel_err(tr.reconstruct(atom_seq, i)[0].to_real(),
                           ev.p[tr.n[i]].to_real()) < 1e-9

    def test_default_start_after_onset(self):
        tr = normalized_iteration(chebyshev(), 1.25, N=100)
        assert tr.E == hyperbolic_onset(chebyshev(), 1.25) + 5

    def test_start_before_onset_rejected(self):
        with pytest.raises(NotHyperbolic):
            normalized_iteration(chebyshev(), 1.25, E=1, N=100)

    def test_zero_start_rejected(self):
        with pytest.raises(DegenerateStart):
            normalized_iteration(chebyshev(), 1.25, E=3, N=100, start=[0.0, 0.0])


class TestClassify:
    def test_regular_growth(self, cheb_traj):
        c = classify(cheb_traj)
        assert c.verdict is Verdict.REGULAR_GROWTH
        assert abs(c.u_infinity) > 0
        assert c.diagnostics["r_window_max"] < 1e-6

    def test_point_mass_decay(self, atom_seq):
        c = classify(normalized_iteration(atom_seq, 1.25, N=2000))
        assert c.verdict is Verdict.POINT_MASS_DECAY
        # |v(n)| / L_n decays like lambda^- / lambda^+
        assert c.decay_rate == pytest.approx(0.25, rel=1e-3)

    def test_degenerate_growth(self):
        s = constant_seq()
        g = eigen_step(s, 3, 1.25).G
        tr = normalized_iteration(s, 1.25, E=3, N=400, start=g[:, 0])
        c = classify(tr)
        assert tr.v2_degenerate and not tr.v1_degenerate
        assert c.verdict is Verdict.DEGENERATE_GROWTH
        # p_n = lambda_plus^(n - E + 1) times the first start component
        for n in (50, 200, 400):
            assert rel_err(predict_pn(tr, c, s, 1.25, n).ln_mag,
                           (n - 3 + 1) * math.log(2.0)) < 1e-13

    def test_degenerate_decay(self):
        s = constant_seq()
        g = eigen_step(s, 3, 1.25).G
        tr = normalized_iteration(s, 1.25, E=3, N=400, start=g[:, 1])
        c = classify(tr)
        assert tr.v1_degenerate
        assert c.verdict is Verdict.DEGENERATE_DECAY
        assert c.decay_rate == pytest.approx(0.25, rel=1e-9)

    def test_needs_two_windows(self):
        tr = normalized_iteration(chebyshev(), 1.25, N=60)
        with pytest.raises(ValueError):
            classify(tr, window=50)

    @pytest.mark.parametrize("x0", [1.25, BV_X0, -1.5, 3.0])
    @pytest.mark.parametrize("name", ["chebyshev", "legendre"] + sorted(BV_FAMILY))
    def test_never_inconclusive(self, name, x0):
        seq = {"chebyshev": chebyshev, "legendre": legendre}.get(name) or BV_FAMILY[name]
        c = classify(normalized_iteration(seq(), x0, N=2000), window=50)
        assert c.verdict is not Verdict.INCONCLUSIVE

    def test_to_dict(self, cheb_traj):
        d = classify(cheb_traj).to_dict()
        assert d["verdict"] == "RegularGrowth" and d["decay_rate"] is None


class TestPrediction:
    def test_growth(self, cheb_traj):
        c = classify(cheb_traj)
        got = predict_pn(cheb_traj, c, chebyshev(), 1.25, 60).to_real()
        assert abs(got / cheb_closed_form(60) - 1) <= 1e-3

    def test_growth_beyond_trajectory(self, cheb_traj):
        c = classify(cheb_traj)
        got = predict_pn(cheb_traj, c, chebyshev(), 1.25, 2500)
        ref = eval_orthonormal(chebyshev(), 1.25, 2500).p[2500]
        assert abs(got.ln_mag - ref.ln_mag) < 1e-9

    def test_inconclusive_cannot_predict(self, cheb_traj):
        with pytest.raises(NotClassified):
            predict_pn(cheb_traj, Classification(Verdict.INCONCLUSIVE), chebyshev(), 1.25, 10)

    def test_decay_bound_on_held_out_data(self, atom_seq):
        tr = normalized_iteration(atom_seq, 1.25, N=2000)
        c = classify(tr)
        bound = fit_decay_bound(tr, atom_seq, c)
        assert bound.rate < 1
        ln_p = tr.ln_abs_p(atom_seq)
        stop = tr.n.index(c.diagnostics["floor_index"])
        held_out = [i for i in range(len(tr.n)) if bound.fit_range[1] < tr.n[i] <= tr.n[stop]]
        assert held_out
        for i in held_out:
            assert ln_p[i] <= bound.ln_bound(tr.n[i])

    def test_decay_bound_against_exact_values(self, atom_seq):
        tr = normalized_iteration(atom_seq, 1.25, N=2000)
        c = classify(tr)
        exact = perturbed_orthonormal_at_atom(chebyshev(), ATOM, 2000)
        bound = fit_decay_bound(tr, atom_seq, c)
        for n in range(tr.E, 2001):
            assert exact[n].ln_mag <= bound.ln_bound(n)
        assert predict_pn(tr, c, atom_seq, 1.25, 1500).ln_mag == bound.ln_bound(1500)


class TestEmpiricalConstants:
    @pytest.mark.parametrize("name", sorted(BV_FAMILY))
    def test_ratios_bounded_without_trend(self, name):
        s = BV_FAMILY[name]()
        tr = normalized_iteration(s, BV_X0, N=1000)
        rows = increment_ratios(tr, s)
        for n, ru, rw, d_a, num_u, num_w in rows:
            if d_a == 0.0:
                assert num_u < 1e-12 and num_w < 1e-12
        for k in (1, 2):
            vals = [r[k] for r in rows if r[k] is not None]
            if not vals:
                continue
            assert max(vals) < 1e3
            d = max(1, len(vals) // 10)
            assert np.median(vals[-d:]) <= 2 * np.median(vals[:d])

    @pytest.mark.parametrize("name", ["short_prefix", "geometric_prefix", "alternating_prefix"])
    def test_u_has_bounded_variation(self, name):
        s = BV_FAMILY[name]()
        tr = normalized_iteration(s, BV_X0, N=1000)
        inc = np.abs(np.diff(tr.u))
        assert np.sum(inc[len(inc) // 2:]) < 1e-8

    def test_growth_rate_of_log(self):
        ln_p = eval_orthonormal(chebyshev(), 1.25, 2000).p[2000].ln_mag
        assert abs(ln_p / 2000 - math.log(2)) < 0.01


def test_trajectory_csv(tmp_path, cheb_traj):
    path = tmp_path / "traj.csv"
    write_trajectory_csv(cheb_traj, path)
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["n", "lnL", "u", "w", "r"]
    assert len(rows) == len(cheb_traj.n)
    assert float(rows[-1]["lnL"]) == cheb_traj.lnL[-1]
