"""Warning categories for numerical contracts.

Placed at repository root for stable imports (works from tests/ and scripts).
pytest.ini escalates ContractWarning to an error; info warnings stay silent.
"""


class ContractWarning(UserWarning):
    """A numerical contract was bent but the run continued (e.g. log terms truncated)."""
    pass


class ContractInfoWarning(UserWarning):
    """Informational: a legitimate outcome worth surfacing (horizon reached, formula mismatch)."""
    pass


class FloorWarning(ContractInfoWarning):
    """Data sits below the numerical floor; fitted exponents are not reported."""
    pass
