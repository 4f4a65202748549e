from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credaltrees import (
    CredalSet,
    DecisionTree,
    FactoredModel,
    Gamble,
    InconsistentAssessment,
    JointModel,
    MassFunction,
    PossibilitySpace,
    TreeFactoredAssessment,
    UnknownLabel,
    UnrepresentableGamble,
    UtilityFunctionSet,
    ZeroProbabilityCondition,
    chance,
    decision,
    expectation,
    factored_expectation,
    gamble_of,
    enumerate_strategies,
    leaf,
    lower_expectation,
    precise_gamble_value,
    product_credal,
    upper_expectation,
    utility_expectations,
    validate_tree,
)

from conftest import build_eu2, build_eu3, build_imprecise_utility


@pytest.fixture
def abc():
    return PossibilitySpace(("a", "b", "c"))


def test_mass_function_validation(abc):
    with pytest.raises(ValueError):
        MassFunction.from_mapping(abc, {"a": Fraction(1, 2), "b": Fraction(1, 2), "c": 1})
    with pytest.raises(ValueError):
        MassFunction.from_mapping(abc, {"a": Fraction(-1, 2), "b": 1, "c": Fraction(1, 2)})


def test_mass_and_event_probability(abc):
    p = MassFunction.from_mapping(abc, {"a": Fraction(1, 2), "b": Fraction(1, 3), "c": Fraction(1, 6)})
    assert p.mass("b") == Fraction(1, 3)
    assert p.prob(abc.event(["a", "b"])) == Fraction(5, 6)
    assert p.is_strictly_positive
    q = MassFunction.from_mapping(abc, {"a": Fraction(1, 2), "b": Fraction(1, 2), "c": 0})
    assert not q.is_strictly_positive


def test_conditional_expectation_is_the_ratio(abc):
    p = MassFunction.from_mapping(abc, {"a": Fraction(1, 2), "b": Fraction(1, 4), "c": Fraction(1, 4)})
    x = Gamble.from_mapping(abc.omega(), {"a": 4, "b": 0, "c": 8})
    ab = abc.event(["a", "b"])
    assert expectation(p, x, ab) == Fraction(8, 3)
    assert expectation(p, x, abc.omega()) == Fraction(4)


def test_zero_probability_conditioning_is_an_error(abc):
    p = MassFunction.from_mapping(abc, {"a": Fraction(1, 2), "b": Fraction(1, 2), "c": 0})
    x = Gamble.constant(abc.omega(), Fraction(1))
    with pytest.raises(ZeroProbabilityCondition):
        expectation(p, x, abc.event(["c"]))


def test_credal_envelopes(abc):
    p1 = MassFunction.from_mapping(abc, {"a": Fraction(1, 2), "b": Fraction(1, 4), "c": Fraction(1, 4)})
    p2 = MassFunction.from_mapping(abc, {"a": Fraction(1, 4), "b": Fraction(1, 2), "c": Fraction(1, 4)})
    m = CredalSet((p1, p2))
    x = Gamble.from_mapping(abc.omega(), {"a": 4, "b": 0, "c": 2})
    assert lower_expectation(m, x, abc.omega()) == Fraction(3, 2)
    assert upper_expectation(m, x, abc.omega()) == Fraction(5, 2)
    # conditioning narrows to the event before enveloping
    ab = abc.event(["a", "b"])
    assert lower_expectation(m, x, ab) == Fraction(4, 3)
    assert upper_expectation(m, x, ab) == Fraction(8, 3)


def test_singleton_credal_set_matches_the_joint(abc):
    p = MassFunction.from_mapping(abc, {"a": Fraction(1, 3), "b": Fraction(1, 3), "c": Fraction(1, 3)})
    m = CredalSet((p,))
    x = Gamble.from_mapping(abc.omega(), {"a": 1, "b": 5, "c": 0})
    assert lower_expectation(m, x, abc.omega()) == expectation(p, x, abc.omega())
    assert upper_expectation(m, x, abc.omega()) == expectation(p, x, abc.omega())


def test_factored_assessment_needs_every_chance_node():
    tree, _ = build_eu2()
    with pytest.raises(Exception):
        TreeFactoredAssessment(tree, {"N": (Fraction(1, 2), Fraction(1, 2))})


def test_factored_rows_must_be_distributions():
    tree, _ = build_eu2()
    rows = {
        "N": (Fraction(1, 2), Fraction(1, 2)),
        "N1c1": (Fraction(3, 5), Fraction(2, 5)),
        "N1c2": (Fraction(3, 5), Fraction(2, 5)),
        "N2": (Fraction(2, 5), Fraction(2, 5)),
    }
    with pytest.raises(ValueError):
        TreeFactoredAssessment(tree, rows)


def _two_roads_to_one_gamble():
    """Two chance nodes realise the same gamble under different arc rows."""
    sp = PossibilitySpace(("e1", "e2"))
    E1, E2 = sp.event(["e1"]), sp.event(["e2"])
    root = decision(
        "N",
        [
            ("d1", chance("C1", [(E1, leaf("L1", 1)), (E2, leaf("L2", 0))])),
            ("d2", chance("C2", [(E1, leaf("L3", 1)), (E2, leaf("L4", 0))])),
        ],
    )
    tree = validate_tree(DecisionTree(sp, root))
    a = TreeFactoredAssessment(
        tree, {"C1": (Fraction(1, 2), Fraction(1, 2)), "C2": (Fraction(1, 3), Fraction(2, 3))}
    )
    return sp, FactoredModel(a)


def test_conflicting_assessments_of_one_gamble_are_rejected():
    sp, model = _two_roads_to_one_gamble()
    x = Gamble.from_mapping(sp.omega(), {"e1": 1, "e2": 0})
    with pytest.raises(InconsistentAssessment):
        precise_gamble_value(model, x, sp.omega())


def test_gambles_no_strategy_induces_are_rejected():
    sp, model = _two_roads_to_one_gamble()
    x = Gamble.from_mapping(sp.omega(), {"e1": 0, "e2": 1})
    with pytest.raises(UnrepresentableGamble):
        precise_gamble_value(model, x, sp.omega())


def test_factored_expectation_multiplies_along_paths():
    tree, _ = build_eu2()
    a = TreeFactoredAssessment(
        tree,
        {
            "N": (Fraction(1, 2), Fraction(1, 2)),
            "N1c1": (Fraction(3, 5), Fraction(2, 5)),
            "N1c2": (Fraction(3, 5), Fraction(2, 5)),
            "N2": (Fraction(2, 5), Fraction(3, 5)),
        },
    )
    strats = enumerate_strategies(tree)
    # both strategies agree with the joint-model expectations 6/5 and 11/10
    vals = sorted(factored_expectation(a, s) for s in strats)
    assert vals == [Fraction(11, 10), Fraction(6, 5)]


def test_factored_expectation_survives_zero_probability_arcs():
    tree, model = build_eu3()
    strats = enumerate_strategies(tree)
    vals = {factored_expectation(model.assessment, s) for s in strats}
    assert vals == {Fraction(6, 5)}
    # under the zero-mass branch, the local value is still defined per node
    sub_vals = sorted(
        factored_expectation(model.assessment, s, node_id="N1") for s in strats
    )
    assert sub_vals == [Fraction(1), Fraction(6, 5)]


def test_precise_gamble_value_agrees_across_model_kinds():
    tree, joint = build_eu2()
    _, factored = build_eu3()
    strats = enumerate_strategies(tree)
    x = gamble_of(strats[0])
    b = tree.root_scope
    assert precise_gamble_value(joint, x, b) == expectation(joint.p, x, b)
    assert isinstance(precise_gamble_value(factored, x, b), Fraction)


def test_utility_function_sets_score_labelled_gambles():
    tree, model = build_imprecise_utility()
    strats = enumerate_strategies(tree)
    by_label = {gamble_of(s).values_on(tree.root_scope)[0]: s for s in strats}
    r1 = utility_expectations(model.utilities, model.chance, by_label["r1"])
    r3 = utility_expectations(model.utilities, model.chance, by_label["r3"])
    assert r1 == (Fraction(3), Fraction(-3))
    assert r3 == (Fraction(2), Fraction(2))


def test_unknown_reward_label_is_an_error():
    tree, model = build_imprecise_utility()
    strats = enumerate_strategies(tree)
    bad = UtilityFunctionSet.from_tables([{"r1": Fraction(1), "r2": Fraction(1)}])
    victim = next(
        s for s in strats if gamble_of(s).values_on(tree.root_scope)[0] == "r3"
    )
    with pytest.raises(UnknownLabel):
        utility_expectations(bad, None, victim)


def test_product_credal_combines_families():
    sp = PossibilitySpace(("a1b1", "a1b2", "a2b1", "a2b2"))
    A1 = sp.event(["a1b1", "a1b2"])
    A2 = sp.event(["a2b1", "a2b2"])
    cs = product_credal(
        sp,
        [A1, A2],
        [[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 4), Fraction(3, 4)]],
        [
            [
                {"a1b1": Fraction(3, 5), "a1b2": Fraction(2, 5)},
                {"a1b1": Fraction(1, 2), "a1b2": Fraction(1, 2)},
            ],
            [
                {"a2b1": Fraction(1, 5), "a2b2": Fraction(4, 5)},
                {"a2b1": Fraction(1, 2), "a2b2": Fraction(1, 2)},
            ],
        ],
    )
    assert len(cs.members) == 8
    tables = {tuple(m.mass(a) for a in sp.atoms) for m in cs.members}
    assert (Fraction(3, 10), Fraction(1, 5), Fraction(1, 10), Fraction(2, 5)) in tables


def test_product_credal_lower_expectation_decomposes_in_stages():
    sp = PossibilitySpace(("a1b1", "a1b2", "a2b1", "a2b2"))
    A1 = sp.event(["a1b1", "a1b2"])
    A2 = sp.event(["a2b1", "a2b2"])
    margs = [[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 3), Fraction(2, 3)]]
    conds = [
        [
            {"a1b1": Fraction(3, 5), "a1b2": Fraction(2, 5)},
            {"a1b1": Fraction(1, 4), "a1b2": Fraction(3, 4)},
        ],
        [
            {"a2b1": Fraction(1, 5), "a2b2": Fraction(4, 5)},
            {"a2b1": Fraction(2, 3), "a2b2": Fraction(1, 3)},
        ],
    ]
    cs = product_credal(sp, [A1, A2], margs, conds)
    x = Gamble.from_mapping(
        sp.omega(), {"a1b1": 7, "a1b2": -2, "a2b1": 0, "a2b2": 5}
    )
    # stage one: the lower value within each cell
    inner = [lower_expectation(cs, x, A1), lower_expectation(cs, x, A2)]
    # stage two: the lower expectation of the cell-wise values over the marginals
    staged = min(
        sum(w * v for w, v in zip(row, inner)) for row in margs
    )
    assert lower_expectation(cs, x, sp.omega()) == staged


# --- randomized envelope sanity --------------------------------------------------


@st.composite
def credal_and_gamble(draw):
    atoms = tuple(f"w{i}" for i in range(draw(st.integers(2, 4))))
    sp = PossibilitySpace(atoms)

    def member():
        weights = [draw(st.integers(1, 9)) for _ in atoms]
        total = sum(weights)
        return MassFunction.from_mapping(
            sp, {a: Fraction(w, total) for a, w in zip(atoms, weights)}
        )

    m = CredalSet(tuple(member() for _ in range(draw(st.integers(1, 3)))))
    x = Gamble.from_mapping(
        sp.omega(), {a: draw(st.integers(-10, 10)) for a in atoms}
    )
    return sp, m, x


@given(credal_and_gamble())
@settings(max_examples=80, deadline=None)
def test_lower_never_exceeds_upper(data):
    sp, m, x = data
    lo = lower_expectation(m, x, sp.omega())
    hi = upper_expectation(m, x, sp.omega())
    assert lo <= hi
    values = [v for _, v in x.items()]
    assert min(values) <= lo and hi <= max(values)


@given(credal_and_gamble(), st.integers(-5, 5))
@settings(max_examples=80, deadline=None)
def test_envelopes_are_affine_in_constants(data, c):
    sp, m, x = data
    shifted = x.map_values(lambda v: v + c)
    assert lower_expectation(m, shifted, sp.omega()) == lower_expectation(m, x, sp.omega()) + c
    assert upper_expectation(m, shifted, sp.omega()) == upper_expectation(m, x, sp.omega()) + c
