import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oddcov.errors import EvalError, ExprError
from oddcov.expr import (Binary, Call, Compare, Ident, Logic, Num, Unary,
                         check_expr, eval_expr, eval_expr_batch, eval_value,
                         identifiers, parse_expr, pretty_print)

ENVELOPE = "abs(h) <= (1200 / ln(61)) * ln(tau + 1) + 300"
DIVERGENCE = "!((h > 0 && hdot_own < 0) || (h < 0 && hdot_own > 0))"
DIMS = ["h", "hdot_own", "hdot_int", "tau", "s_adv"]


# ---------------------------------------------------------------------------
# parsing


def test_envelope_parses_to_band_comparison():
    tree = parse_expr(ENVELOPE)
    assert isinstance(tree, Compare) and tree.op == "<="
    assert tree.left == Call("abs", (Ident("h"),))
    assert identifiers(tree.right) == {"tau"}


def test_divergence_parses_to_negated_disjunction():
    tree = parse_expr(DIVERGENCE)
    assert isinstance(tree, Unary) and tree.op == "!"
    assert isinstance(tree.operand, Logic) and tree.operand.op == "||"


def test_truncated_input_reports_offset():
    with pytest.raises(ExprError) as exc:
        parse_expr("h <=")
    assert exc.value.offset == 4


def test_unknown_function_reports_offset():
    with pytest.raises(ExprError, match="unknown function"):
        parse_expr("h + foo(2) < 1")


def test_arity_mismatch_rejected():
    with pytest.raises(ExprError, match="takes 1 argument"):
        parse_expr("ln(1, 2) < 3")
    with pytest.raises(ExprError, match="takes 2 argument"):
        parse_expr("min(1) < 3")


def test_lexical_error_reports_offset():
    with pytest.raises(ExprError) as exc:
        parse_expr("h < 3 @ 4")
    assert exc.value.offset == 6


def test_precedence():
    assert parse_expr("1 + 2 * 3 < 8") == Compare(
        "<", Binary("+", Num(1.0), Binary("*", Num(2.0), Num(3.0))), Num(8.0))
    # and binds tighter than or
    assert parse_expr("a < 1 || b < 2 && c < 3") == Logic(
        "||", parse_expr("a < 1"), Logic("&&", parse_expr("b < 2"), parse_expr("c < 3")))


def test_log_is_alias_for_ln():
    assert parse_expr("log(x) < 1") == parse_expr("ln(x) < 1")


# ---------------------------------------------------------------------------
# static checks


def test_bundled_constraints_check_against_dims():
    assert check_expr(parse_expr(ENVELOPE), DIMS) == []
    assert check_expr(parse_expr(DIVERGENCE), DIMS) == []


def test_unknown_identifier_diagnosed():
    diags = check_expr(parse_expr("speed > 3"), DIMS)
    assert len(diags) == 1 and "speed" in diags[0].message


def test_numeric_children_of_boolean_op_diagnosed():
    diags = check_expr(parse_expr("h && tau"), DIMS)
    assert any("boolean operands" in d.message for d in diags)


def test_numeric_root_diagnosed():
    diags = check_expr(parse_expr("h + tau"), DIMS)
    assert any("boolean at the top level" in d.message for d in diags)


# ---------------------------------------------------------------------------
# evaluation


def test_envelope_at_origin_is_admissible():
    tree = parse_expr(ENVELOPE)
    assert eval_expr(tree, {"h": 0.0, "tau": 0.0}) is True


def test_envelope_limit_at_tau_zero_is_300():
    tree = parse_expr(ENVELOPE)
    assert eval_expr(tree, {"h": 400.0, "tau": 0.0}) is False
    assert eval_expr(tree, {"h": 300.0, "tau": 0.0}) is True


def test_envelope_opens_to_1500_at_tau_60():
    tree = parse_expr(ENVELOPE)
    assert eval_expr(tree, {"h": 1495.0, "tau": 60.0}) is True


def test_division_by_zero_raises():
    tree = parse_expr("1 / x > 0")
    with pytest.raises(EvalError, match="division by zero"):
        eval_expr(tree, {"x": 0.0})
    with pytest.raises(EvalError, match="division by zero"):
        eval_expr_batch(tree, {"x": np.array([1.0, 0.0])})


def test_ln_of_nonpositive_raises():
    tree = parse_expr("ln(x) < 1")
    with pytest.raises(EvalError, match="non-positive"):
        eval_expr(tree, {"x": -1.0})
    err = None
    try:
        eval_expr_batch(tree, {"x": np.array([2.0, 3.0, 0.0])})
    except EvalError as exc:
        err = exc
    assert err is not None and err.position == 2


def test_batch_matches_scalar_on_divergence():
    tree = parse_expr(DIVERGENCE)
    h = np.array([-10.0, -10.0, 10.0, 10.0, 5.0])
    own = np.array([-1.0, 1.0, -1.0, 1.0, 0.0])
    batch = eval_expr_batch(tree, {"h": h, "hdot_own": own})
    scalar = [eval_expr(tree, {"h": float(a), "hdot_own": float(b)}) for a, b in zip(h, own)]
    assert batch.tolist() == scalar


def test_min_max_abs_exp():
    tree = parse_expr("min(x, 2) + max(x, 5) + abs(0 - x) == 10")
    assert eval_value(tree.left, {"x": 3.0}) == 10.0
    assert eval_expr(tree, {"x": 3.0}) is True
    assert eval_expr(parse_expr("exp(0) == 1"), {}) is True


# ---------------------------------------------------------------------------
# round trip

_ident = st.sampled_from(["h", "tau", "x", "y_2", "spd"])
_num = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False)


def _numeric(children):
    return st.one_of(
        st.builds(lambda v: Num(abs(v)), _num),
        st.builds(Ident, _ident),
        st.builds(lambda a: Unary("-", a), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(lambda f, a: Call(f, (a,)), st.sampled_from(["ln", "exp", "abs"]), children),
        st.builds(lambda f, a, b: Call(f, (a, b)), st.sampled_from(["min", "max"]),
                  children, children),
    )


numeric_ast = st.recursive(
    st.one_of(st.builds(lambda v: Num(abs(v)), _num), st.builds(Ident, _ident)),
    _numeric, max_leaves=12)


def _boolean(children):
    return st.one_of(
        st.builds(lambda a: Unary("!", a), children),
        st.builds(Logic, st.sampled_from(["&&", "||"]), children, children),
    )


boolean_ast = st.recursive(
    st.builds(Compare, st.sampled_from(["<", "<=", ">", ">=", "==", "!="]),
              numeric_ast, numeric_ast),
    _boolean, max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(tree=boolean_ast)
def test_pretty_print_parse_round_trip(tree):
    assert parse_expr(pretty_print(tree)) == tree


@settings(max_examples=100, deadline=None)
@given(tree=boolean_ast, data=st.data())
def test_batch_and_scalar_evaluation_agree(tree, data):
    names = sorted(identifiers(tree) | {"h"})
    rows = 5
    env_batch = {n: np.array([data.draw(st.floats(-100, 100)) for _ in range(rows)])
                 for n in names}
    try:
        scalar = [eval_expr(tree, {n: float(env_batch[n][r]) for n in names})
                  for r in range(rows)]
    except EvalError:
        with pytest.raises(EvalError):
            eval_expr_batch(tree, env_batch)
        return
    assert eval_expr_batch(tree, env_batch).tolist() == scalar
