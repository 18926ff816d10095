"""oddcov: bin-combination coverage verification for Operational Design Domains.

Discretizes ODD parameters into bins, restricts the Cartesian combination
space with constraints and groupings, measures which combinations a
scenario dataset exercises, and emits gap lists plus new scenario
parameters until the relevant space is fully covered.
"""

from importlib import resources

from .binning import BinEdges, bin_center, build_edges, edges_from_criticality, value_to_bin
from .coverage import CoveredSet, CoverageReport, compute_report, list_gaps
from .errors import (DataError, EvalError, ExprError, OddCovError, SpecError,
                     SpecHashMismatch)
from .expr import check_expr, eval_expr, parse_expr, pretty_print
from .grouping import Dimension, EffectiveDimensions, apply_groupings
from .ingest import IngestStats, ingest_csv, open_dataset, record_to_combo
from .model import OddModel, build_model
from .scenarios import gaps_to_scenarios
from .space import (CombinationSpace, Constraint, build_space, count_relevant,
                    count_spaces, decode, encode, iter_relevant)
from .spec import (Diagnostic, OddSpec, load_spec, parse_spec, serialize_spec,
                   spec_hash, validate_spec)

__version__ = "0.1.0"


def bundled_spec_path(name: str = "verticalcas") -> str:
    """Filesystem path of a bundled example spec ('verticalcas' or
    'verticalcas_tau60')."""
    return str(resources.files("oddcov").joinpath("data", f"{name}.json"))
