"""One-stop construction of the discretized coverage model from a spec."""

from __future__ import annotations

from dataclasses import dataclass

from . import expr as expr_mod
from .binning import BinEdges, build_edges
from .errors import SpecError
from .grouping import EffectiveDimensions, apply_groupings
from .space import CombinationSpace, Constraint, build_space
from .spec import OddSpec, spec_hash, validate_spec


@dataclass(frozen=True)
class OddModel:
    spec: OddSpec
    spec_hash: str
    edges: dict[str, BinEdges]  # per pre-grouping parameter
    dims: EffectiveDimensions
    space: CombinationSpace
    constraints: tuple[Constraint, ...]  # enabled constraints only

    def column_order(self) -> list[str]:
        """Dataset columns for the mapped parameters, in declaration order."""
        return [self.spec.column_for(p.name) for p in self.spec.parameters]


def build_model(spec: OddSpec) -> OddModel:
    """Validate the spec and derive edges, dimensions, space and constraints.

    Raises SpecError carrying every error diagnostic when validation fails;
    downstream stages can then assume a consistent spec.
    """
    diagnostics = [d for d in validate_spec(spec) if d.severity == "error"]
    if diagnostics:
        lines = "\n".join(f"  {d.path}: {d.message}" for d in diagnostics)
        raise SpecError(f"invalid spec:\n{lines}")

    edges = {p.name: build_edges(p, spec.criticality_profiles) for p in spec.parameters}
    dims = apply_groupings(spec, edges)
    space = build_space(dims)
    constraints = tuple(Constraint(c.name, expr_mod.parse_expr(c.expression))
                        for c in spec.constraints if c.enabled)
    return OddModel(spec=spec, spec_hash=spec_hash(spec), edges=edges,
                    dims=dims, space=space, constraints=constraints)
