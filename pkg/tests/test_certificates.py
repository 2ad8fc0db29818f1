import math

import numpy as np
import pytest

from peplift.certificates import (
    FuncCertificate,
    GradCertificate,
    aggregate_identity_residual,
    aggregates,
    certificate_from_dict,
    certificate_to_dict,
    gsw_grad_certificate,
    load_certificate,
    ogm_func_certificate,
    ogmg_grad_certificate,
    save_certificate,
    silver_func_certificate,
    silver_lambda_bar,
    verify_func_identity,
    verify_grad_identity,
)
from peplift.schedules import (
    SILVER_RATIO,
    from_diagonal,
    gsw_schedule,
    gsw_taus,
    ogm_stepsize_matrix,
    ogmg_stepsize_matrix,
    silver_schedule,
    theta_sequence,
)

RHO = SILVER_RATIO
SQ2 = math.sqrt(2.0)


def silver_H(k):
    return from_diagonal(silver_schedule(k))


def gsw_H(k):
    return from_diagonal(gsw_schedule(k).steps)


class TestSilverCertificate:
    def test_order_one_values(self):
        cert = silver_func_certificate(1)
        assert cert.lam[0, 1] == RHO
        assert cert.lam[1, 0] == 1.0
        np.testing.assert_allclose(cert.lam[2], [SQ2, RHO])
        np.testing.assert_allclose(cert.gamma, [SQ2, RHO])
        assert cert.r == 2 * RHO - 1

    def test_order_two_table_hand_expanded(self):
        # paste the 2x2 base block twice (second copy scaled by rho^2), then
        # the sparse entries at (1,3)/(3,1) and the low-rank row corrections
        bar = np.zeros((4, 4))
        bar[0, 1] = RHO
        bar[1, 0] = 1.0
        bar[2, 3] = RHO**3
        bar[3, 2] = RHO**2
        bar[1, 3] += RHO
        bar[3, 1] += RHO**1
        bar[1, 2] += RHO * SQ2
        bar[3, 2] += RHO * SQ2
        cert = silver_func_certificate(2)
        np.testing.assert_allclose(cert.lam[:4], bar, rtol=1e-15)
        np.testing.assert_allclose(cert.lam[4], [SQ2, 2.0, SQ2, RHO**2], rtol=1e-15)
        assert cert.r == 2 * RHO**2 - 1

    def test_rec_block_entry(self):
        # the (2, 3) entry is the scaled copy of the base (0, 1) entry
        assert silver_lambda_bar(2)[2, 3] == RHO**2 * silver_lambda_bar(1)[0, 1]

    @pytest.mark.parametrize("k", range(1, 7))
    def test_identity(self, k):
        report = verify_func_identity(silver_H(k), silver_func_certificate(k))
        assert report.passed, report

    @pytest.mark.parametrize("k", range(1, 7))
    def test_invariants(self, k):
        res = silver_func_certificate(k).invariant_residuals()
        assert max(res.values()) < 1e-10


class TestOgmCertificate:
    def test_order_one_values(self):
        cert = ogm_func_certificate(1)
        assert cert.lam[0, 1] == 2.0
        assert cert.lam[2, 0] == 2.0 and cert.lam[2, 1] == 2.0
        np.testing.assert_allclose(cert.gamma, [2.0, 2.0])
        assert cert.r == 4.0

    @pytest.mark.parametrize("n", [1, 2, 5, 17, 64])
    def test_identity_and_invariants(self, n):
        cert = ogm_func_certificate(n)
        assert max(cert.invariant_residuals().values()) < 1e-10
        assert verify_func_identity(ogm_stepsize_matrix(n), cert).passed


class TestGswCertificate:
    def test_order_one_values(self):
        cert = gsw_grad_certificate(1)
        assert cert.lam[0, 1] == 2.0
        assert cert.lam[1, 0] == 1.0
        assert cert.r == 3.0

    def test_order_two_table_hand_expanded(self):
        tau2 = gsw_taus(2)[-1]
        lam = np.zeros((4, 4))
        lam[0, 1] = 2.0
        lam[1, 0] = 1.0
        scale = tau2 / RHO**2
        lam[2, 3] = scale * RHO  # scaled base (0,1)
        lam[3, 2] = scale * 1.0  # scaled base (1,0)
        lam[1, 3] += tau2 / (2 * RHO**2)
        lam[3, 1] += tau2 / (2 * RHO) - 1.0
        lam[1, 2] += tau2 / (2 * RHO**2) * SQ2
        lam[3, 2] += tau2 / (2 * RHO**2) * SQ2
        cert = gsw_grad_certificate(2)
        np.testing.assert_allclose(cert.lam, lam, rtol=1e-14)
        assert cert.r == tau2 - 1.0

    def test_closing_pair_sum(self):
        # lam[n-1, n] + lam[n, n-1] collapses to tau_k / sqrt(2) for k >= 2
        for k in range(2, 7):
            cert = gsw_grad_certificate(k)
            n = cert.n
            total = cert.lam[n - 1, n] + cert.lam[n, n - 1]
            assert abs(total - gsw_taus(k)[-1] / SQ2) < 1e-9

    @pytest.mark.parametrize("k", range(1, 7))
    def test_identity_and_invariants(self, k):
        cert = gsw_grad_certificate(k)
        assert max(cert.invariant_residuals().values()) < 1e-10
        assert verify_grad_identity(gsw_H(k), cert).passed


class TestOgmgCertificate:
    def test_order_one_values(self):
        cert = ogmg_grad_certificate(1)
        assert cert.lam[0, 1] == 2.0
        assert cert.lam[1, 0] == 1.0
        assert cert.r == 3.0

    @pytest.mark.parametrize("n", range(2, 65, 7))
    def test_closing_pair_sum(self, n):
        cert = ogmg_grad_certificate(n)
        tn2 = theta_sequence(n).values[-1] ** 2
        total = cert.lam[n - 1, n] + cert.lam[n, n - 1]
        assert abs(total - (math.sqrt(5) + 1) / 4 * tn2) < 1e-9 * tn2

    @pytest.mark.parametrize("n", [1, 2, 5, 17, 64])
    def test_identity_and_invariants(self, n):
        cert = ogmg_grad_certificate(n)
        assert max(cert.invariant_residuals().values()) < 1e-10
        assert verify_grad_identity(ogmg_stepsize_matrix(n), cert).passed


class TestPerturbationDetector:
    def test_func_single_entry_bump_fails(self):
        cert = silver_func_certificate(2)
        lam = np.array(cert.lam)
        lam[0, 1] += 1e-3
        bumped = FuncCertificate(lam=lam, gamma=cert.gamma, r=cert.r)
        report = verify_func_identity(silver_H(2), bumped)
        assert not report.passed
        assert report.max_residual > 1e-4

    def test_grad_single_entry_bump_fails(self):
        cert = ogmg_grad_certificate(3)
        lam = np.array(cert.lam)
        lam[3, 0] += 1e-3
        bumped = GradCertificate(lam=lam, r=cert.r)
        report = verify_grad_identity(ogmg_stepsize_matrix(3), bumped)
        assert not report.passed
        assert report.max_residual > 1e-4


class TestAggregates:
    def test_hat_symmetric_and_diagonal(self):
        cert = ogm_func_certificate(4)
        agg = aggregates(cert)
        np.testing.assert_array_equal(agg.hat, agg.hat.T)
        col = cert.lam.sum(axis=0)
        row = cert.lam[:5].sum(axis=1)
        np.testing.assert_allclose(np.diag(agg.hat), -(col[:4] + row[:4]))

    def test_ogm_n2_tilde_pattern(self):
        cert = ogm_func_certificate(2)
        agg = aggregates(cert)
        lam = cert.lam
        col = lam.sum(axis=0)
        expected = np.array([[lam[1, 0], -col[1]], [lam[2, 0], lam[2, 1]]])
        np.testing.assert_array_equal(agg.tilde, expected)

    @pytest.mark.parametrize("k", range(1, 7))
    def test_func_quadratic_consequence(self, k):
        cert = silver_func_certificate(k)
        assert aggregate_identity_residual(silver_H(k), cert) < 1e-10 * max(1.0, cert.r**2)

    @pytest.mark.parametrize("n", [1, 2, 3, 8, 32])
    def test_grad_zero_matrix_identity(self, n):
        cert = ogmg_grad_certificate(n)
        assert aggregate_identity_residual(ogmg_stepsize_matrix(n), cert) < 1e-10 * max(1.0, cert.r)


class TestSnapshots:
    def test_func_roundtrip(self, tmp_path):
        cert = silver_func_certificate(3)
        path = tmp_path / "cert.json"
        save_certificate(cert, path)
        back = load_certificate(path)
        assert isinstance(back, FuncCertificate)
        np.testing.assert_array_equal(back.lam, cert.lam)
        np.testing.assert_array_equal(back.gamma, cert.gamma)
        assert back.r == cert.r

    def test_grad_roundtrip_dict(self):
        cert = gsw_grad_certificate(2)
        back = certificate_from_dict(certificate_to_dict(cert))
        assert isinstance(back, GradCertificate)
        np.testing.assert_array_equal(back.lam, cert.lam)

    def test_user_supplied_certificate_verify_only(self):
        # external certificates go through the same verifier; a wrong one fails
        doc = certificate_to_dict(ogm_func_certificate(2))
        doc["r"] = doc["r"] * 1.01
        cert = certificate_from_dict(doc)
        assert not verify_func_identity(ogm_stepsize_matrix(2), cert).passed

    def test_rejects_unknown_metric(self):
        with pytest.raises(ValueError):
            certificate_from_dict({"metric": "nope", "lam": [[0.0]], "r": 1.0})
