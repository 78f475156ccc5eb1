import pytest

from loggas.exceptions import NumericalError
from loggas.models.report import CheckResult, CheckStatus
from loggas.services import verify_service


def test_kernel_group(scaling_scenario):
    report = verify_service.run_checks(scaling_scenario, only=['kernels'])
    names = [c.name for c in report.checks]
    assert names == ['hermite_triangle', 'gmap_kernel', 'pde_kernel', 'short_distance', 'mean_moment',
                     'equal_time_psd', 'equal_time_variance']
    by_name = {c.name: c for c in report.checks}
    assert by_name['mean_moment'].status is CheckStatus.PASSED
    assert by_name['short_distance'].status is CheckStatus.PASSED
    assert by_name['equal_time_psd'].status is CheckStatus.PASSED
    assert by_name['equal_time_variance'].status is CheckStatus.PASSED
    assert all(c.details['group'] == 'kernels' for c in report.checks)
    assert report.as_dict()['scenario'] == 'hermite-scaling'


def test_unknown_group(scaling_scenario):
    with pytest.raises(ValueError, match="Unknown check group"):
        verify_service.run_checks(scaling_scenario, only=['astrology'])


def test_solver_errors_become_failed_checks(scaling_scenario, monkeypatch):
    def broken(ctx):
        raise NumericalError("edge solve did not bracket", {'t': 0.5})

    def fine(ctx):
        return CheckResult('stub', CheckStatus.PASSED, 0.0, 1.0)

    monkeypatch.setattr(verify_service, 'CHECKS', {'support': broken, 'stub': fine})
    report = verify_service.run_checks(scaling_scenario)
    assert not report.passed
    failure, = report.failures
    assert failure.name == 'support'
    assert failure.details == {'error': "edge solve did not bracket", 't': 0.5, 'group': 'support'}
    assert report.checks[1].passed


def test_non_finite_observations_fail():
    assert verify_service._measured('x', float('nan'), 1.0).status is CheckStatus.FAILED
    assert verify_service._measured('x', 1.0, 1.0).status is CheckStatus.PASSED
    assert verify_service._skipped('x', 'n/a').passed
