from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class CheckStatus(Enum):
    PASSED = "passed"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass
class CheckResult:
    """One acceptance check: the observed number against its tolerance"""
    name: str
    status: CheckStatus
    observed: Optional[float] = None
    tolerance: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status is not CheckStatus.FAILED

    def as_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'status': self.status.value, 'observed': self.observed,
                'tolerance': self.tolerance, 'details': self.details}


@dataclass
class VerifyReport:
    scenario: str
    seed: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def as_dict(self) -> Dict[str, Any]:
        return {'scenario': self.scenario, 'seed': self.seed, 'passed': self.passed,
                'checks': [check.as_dict() for check in self.checks]}
