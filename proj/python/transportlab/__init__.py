"""Trial transport lab: causal graphs, exact oracles, estimators, verification.

Thin convenience layer over the compiled core. Structured results cross the
boundary as JSON text; the helpers here hand back parsed dicts, and every
function taking a spec accepts a scenario name, a spec dict, or spec JSON text.
"""

import json

from . import _core
from ._core import (
    CoreError,
    d_separated,
    default_spec_json,
    estimate_csv_json,
    estimate_json,
    graph_dot,
    graph_text,
    independence_claims,
    open_paths,
    override_spec_json,
    scenarios,
    structure_of,
    structures,
    validate_spec_json,
    verify_json,
)

__all__ = [
    "CoreError",
    "consistency",
    "d_separated",
    "dataset_csv",
    "default_spec",
    "default_spec_json",
    "estimate",
    "estimate_csv_json",
    "estimate_json",
    "functional_value",
    "graph_dot",
    "graph_text",
    "identified",
    "independence_claims",
    "open_paths",
    "oracle_value",
    "override_spec",
    "override_spec_json",
    "sample_columns",
    "scenarios",
    "structure_of",
    "structures",
    "validate_spec_json",
    "verify",
    "verify_json",
]

__version__ = "0.1.0"


def _spec_text(spec):
    if isinstance(spec, dict):
        return json.dumps(spec)
    if isinstance(spec, str) and not spec.lstrip().startswith("{"):
        return default_spec_json(spec)
    return spec


def default_spec(scenario):
    """Shipped fixture for a registered scenario, as a dict."""
    return json.loads(default_spec_json(scenario))


def override_spec(spec, overrides):
    """Apply 'name=value' edits to a spec and revalidate; returns a dict."""
    return json.loads(override_spec_json(_spec_text(spec), list(overrides)))


def oracle_value(spec, kind, population, z, z_alt=0):
    """Exact estimand value by enumeration of the structural model."""
    return _core.oracle_value(_spec_text(spec), kind, population, z, z_alt)


def functional_value(spec, kind, population, z, z_alt=0):
    """What the covariate-standardized trial functional converges to."""
    return _core.functional_value(_spec_text(spec), kind, population, z, z_alt)


def identified(spec, kind, population, z, z_alt=0):
    """Whether the functional equals the estimand for this spec."""
    return _core.identified(_spec_text(spec), kind, population, z, z_alt)


def sample_columns(spec, n, seed, **kwargs):
    """Draw a dataset; returns {'x','s','z','a','y'} -> list of ints (-1 = masked)."""
    return _core.sample_columns(_spec_text(spec), n, seed, **kwargs)


def dataset_csv(spec, n, seed, **kwargs):
    """Draw a dataset and render it as 'x,s,z,a,y' CSV text."""
    return _core.dataset_csv(_spec_text(spec), n, seed, **kwargs)


def consistency(spec, n, seed, **kwargs):
    """Cross-regime row-level consistency sweep; returns a dict with 'pass'."""
    return _core.consistency(_spec_text(spec), n, seed, **kwargs)


def estimate(spec, n, seed, kind, population, z, **kwargs):
    """Sample, estimate, and annotate with exact truths; returns a dict."""
    return json.loads(estimate_json(_spec_text(spec), n, seed, kind, population, z, **kwargs))


def verify(scenarios=(), **kwargs):
    """Run the verification sweep; returns the report as a dict."""
    return json.loads(verify_json(list(scenarios), **kwargs))
