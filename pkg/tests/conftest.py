"""Shared builders for the worked-example problems used across the tests.

Each builder returns freshly constructed objects so tests can mutate or
re-model without cross-talk.  Node ids and arc labels match the shipped
problem files (N1, N2, d1, A1, ...) so failures read naturally.
"""

from fractions import Fraction

import pytest

from credaltrees import (
    CredalModel,
    CredalSet,
    DecisionTree,
    FactoredModel,
    JointModel,
    MassFunction,
    PossibilitySpace,
    TreeFactoredAssessment,
    UtilityFunctionSet,
    UtilityModel,
    chance,
    decision,
    leaf,
    validate_tree,
)


def F(n, d=1):
    return Fraction(n, d)


# --- first expected-utility example: decision root, two decision children ----


def build_eu1():
    sp = PossibilitySpace(("e1", "e2"))
    E1 = sp.event(["e1"])
    E2 = sp.event(["e2"])
    root = decision(
        "N",
        [
            (
                "to_N1",
                decision(
                    "N1",
                    [
                        ("d1", chance("N1c1", [(E1, leaf("N1c1a", 2)), (E2, leaf("N1c1b", 0))])),
                        ("d2", chance("N1c2", [(E1, leaf("N1c2a", 1)), (E2, leaf("N1c2b", 1))])),
                    ],
                ),
            ),
            (
                "to_N2",
                decision(
                    "N2",
                    [
                        ("d1", chance("N2c1", [(E1, leaf("N2c1a", 3)), (E2, leaf("N2c1b", 0))])),
                        ("d2", chance("N2c2", [(E1, leaf("N2c2a", 4)), (E2, leaf("N2c2b", -1))])),
                    ],
                ),
            ),
        ],
    )
    tree = validate_tree(DecisionTree(sp, root))
    model = JointModel(MassFunction.from_mapping(sp, {"e1": F(3, 5), "e2": F(2, 5)}))
    return tree, model


# --- second and third examples: chance root, one decision branch --------------


def build_eu2_tree():
    sp = PossibilitySpace(("a1e1", "a1e2", "a2e1", "a2e2"))
    A1 = sp.event(["a1e1", "a1e2"])
    A2 = sp.event(["a2e1", "a2e2"])
    root = chance(
        "N",
        [
            (
                A1,
                decision(
                    "N1",
                    [
                        (
                            "d1",
                            chance(
                                "N1c1",
                                [
                                    (sp.event(["a1e1"]), leaf("N1c1a", 2)),
                                    (sp.event(["a1e2"]), leaf("N1c1b", 0)),
                                ],
                            ),
                        ),
                        (
                            "d2",
                            chance(
                                "N1c2",
                                [
                                    (sp.event(["a1e1"]), leaf("N1c2a", 1)),
                                    (sp.event(["a1e2"]), leaf("N1c2b", 1)),
                                ],
                            ),
                        ),
                    ],
                ),
            ),
            (
                A2,
                chance(
                    "N2",
                    [
                        (sp.event(["a2e1"]), leaf("N2a", 3)),
                        (sp.event(["a2e2"]), leaf("N2b", 0)),
                    ],
                ),
            ),
        ],
    )
    return validate_tree(DecisionTree(sp, root))


def build_eu2():
    tree = build_eu2_tree()
    sp = tree.space
    model = JointModel(
        MassFunction.from_mapping(
            sp,
            {"a1e1": F(3, 10), "a1e2": F(1, 5), "a2e1": F(1, 5), "a2e2": F(3, 10)},
        )
    )
    return tree, model


def build_eu3():
    """Same tree, factored chances, and the first split gets probability zero."""
    tree = build_eu2_tree()
    assessment = TreeFactoredAssessment(
        tree,
        {
            "N": (F(0), F(1)),
            "N1c1": (F(3, 5), F(2, 5)),
            "N1c2": (F(3, 5), F(2, 5)),
            "N2": (F(2, 5), F(3, 5)),
        },
    )
    return tree, FactoredModel(assessment)


# --- the six-strategy sequential example --------------------------------------


def build_lake():
    sp = PossibilitySpace(("s1e1", "s1e2", "s2e1", "s2e2"))
    S1E1 = sp.event(["s1e1"])
    S1E2 = sp.event(["s1e2"])
    S2E1 = sp.event(["s2e1"])
    S2E2 = sp.event(["s2e2"])
    S1 = sp.event(["s1e1", "s1e2"])
    S2 = sp.event(["s2e1", "s2e2"])
    E1 = sp.event(["s1e1", "s2e1"])
    E2 = sp.event(["s1e2", "s2e2"])

    def pair(prefix, ev_hi, ev_lo, hi, lo):
        return chance(
            prefix,
            [(ev_hi, leaf(prefix + "a", hi)), (ev_lo, leaf(prefix + "b", lo))],
        )

    root = decision(
        "N1",
        [
            (
                "dS",
                chance(
                    "N1S",
                    [
                        (
                            S1,
                            decision(
                                "NS1",
                                [
                                    ("d1", pair("NS1c1", S1E1, S1E2, 9, 14)),
                                    ("d2", pair("NS1c2", S1E1, S1E2, 4, 19)),
                                ],
                            ),
                        ),
                        (
                            S2,
                            decision(
                                "NS2",
                                [
                                    ("d1", pair("NS2c1", S2E1, S2E2, 9, 14)),
                                    ("d2", pair("NS2c2", S2E1, S2E2, 4, 19)),
                                ],
                            ),
                        ),
                    ],
                ),
            ),
            (
                "dnoS",
                decision(
                    "N2",
                    [
                        ("d1", pair("N2c1", E1, E2, 10, 15)),
                        ("d2", pair("N2c2", E1, E2, 5, 20)),
                    ],
                ),
            ),
        ],
    )
    return validate_tree(DecisionTree(sp, root))


# --- imprecise utility over reward labels -------------------------------------


def build_imprecise_utility():
    sp = PossibilitySpace(("w",))
    root = decision(
        "N1",
        [
            ("down", decision("N2", [("r1", leaf("L1", "r1")), ("r2", leaf("L2", "r2"))])),
            ("r3", leaf("L3", "r3")),
        ],
    )
    tree = validate_tree(DecisionTree(sp, root))
    utilities = UtilityFunctionSet.from_tables(
        [
            {"r1": F(3), "r2": F(1), "r3": F(2)},
            {"r1": F(-3), "r2": F(1), "r3": F(2)},
        ]
    )
    return tree, UtilityModel(utilities, None)


# --- e-admissibility: the success tree with two mirrored branches -------------


def build_eadm_success():
    sp = PossibilitySpace(("a1b1", "a1b2", "a2b1", "a2b2"))
    A1 = sp.event(["a1b1", "a1b2"])
    A2 = sp.event(["a2b1", "a2b2"])
    root = chance(
        "N",
        [
            (
                A1,
                decision(
                    "N1",
                    [
                        (
                            "gamble",
                            chance(
                                "N11",
                                [
                                    (sp.event(["a1b1"]), leaf("N11a", 1)),
                                    (sp.event(["a1b2"]), leaf("N11b", -1)),
                                ],
                            ),
                        ),
                        ("safe", leaf("N1z", 0)),
                    ],
                ),
            ),
            (
                A2,
                decision(
                    "N2",
                    [
                        (
                            "gamble",
                            chance(
                                "N21",
                                [
                                    (sp.event(["a2b1"]), leaf("N21a", -1)),
                                    (sp.event(["a2b2"]), leaf("N21b", 1)),
                                ],
                            ),
                        ),
                        ("safe", leaf("N2z", 0)),
                    ],
                ),
            ),
        ],
    )
    tree = validate_tree(DecisionTree(sp, root))
    p1 = MassFunction.from_mapping(
        sp, {"a1b1": F(3, 10), "a1b2": F(1, 5), "a2b1": F(3, 10), "a2b2": F(1, 5)}
    )
    p2 = MassFunction.from_mapping(
        sp, {"a1b1": F(1, 5), "a1b2": F(3, 10), "a2b1": F(1, 5), "a2b2": F(3, 10)}
    )
    return tree, CredalModel(CredalSet((p1, p2)))


# --- e-admissibility: the nested-decision failure tree ------------------------


def build_eadm_failure():
    sp = PossibilitySpace(("a1", "a2"))
    A1 = sp.event(["a1"])
    A2 = sp.event(["a2"])
    root = decision(
        "N1",
        [
            (
                "down",
                decision(
                    "N2",
                    [
                        ("risky", chance("N3", [(A1, leaf("N3a", 5)), (A2, leaf("N3b", -5))])),
                        ("one", leaf("L1", 1)),
                    ],
                ),
            ),
            ("two", leaf("L2", 2)),
        ],
    )
    tree = validate_tree(DecisionTree(sp, root))
    p1 = MassFunction.from_mapping(sp, {"a1": F(4, 5), "a2": F(1, 5)})
    p2 = MassFunction.from_mapping(sp, {"a1": F(1, 5), "a2": F(4, 5)})
    return tree, CredalModel(CredalSet((p1, p2)))


# --- maximin: chance node above the only decision ------------------------------


def build_maximin_failure():
    sp = PossibilitySpace(("a1", "a2"))
    A1 = sp.event(["a1"])
    A2 = sp.event(["a2"])
    root = chance(
        "N1",
        [
            (A1, decision("N2", [("two", leaf("L2", 2)), ("one", leaf("L1", 1))])),
            (A2, leaf("L0", 0)),
        ],
    )
    return validate_tree(DecisionTree(sp, root)), None


# --- gamma-maximin: preference reversal between tree and subtree ---------------


def build_gamma_failure():
    sp = PossibilitySpace(("a1b1", "a1b2", "a2b1", "a2b2"))
    A1 = sp.event(["a1b1", "a1b2"])
    A2 = sp.event(["a2b1", "a2b2"])
    root = chance(
        "N",
        [
            (
                A1,
                decision(
                    "N1",
                    [
                        (
                            "gamble",
                            chance(
                                "N11",
                                [
                                    (sp.event(["a1b1"]), leaf("N11a", 2)),
                                    (sp.event(["a1b2"]), leaf("N11b", -1)),
                                ],
                            ),
                        ),
                        ("safe", leaf("N1z", 0)),
                    ],
                ),
            ),
            (
                A2,
                chance(
                    "N2",
                    [
                        (sp.event(["a2b1"]), leaf("N2a", -1)),
                        (sp.event(["a2b2"]), leaf("N2b", 2)),
                    ],
                ),
            ),
        ],
    )
    tree = validate_tree(DecisionTree(sp, root))
    p1 = MassFunction.from_mapping(
        sp, {"a1b1": F(1, 10), "a1b2": F(2, 5), "a2b1": F(1, 10), "a2b2": F(2, 5)}
    )
    p2 = MassFunction.from_mapping(
        sp, {"a1b1": F(2, 5), "a1b2": F(1, 10), "a2b1": F(2, 5), "a2b2": F(1, 10)}
    )
    return tree, CredalModel(CredalSet((p1, p2)))


# --- fixtures ------------------------------------------------------------------


@pytest.fixture
def eu1():
    return build_eu1()


@pytest.fixture
def eu2():
    return build_eu2()


@pytest.fixture
def eu3():
    return build_eu3()


@pytest.fixture
def lake():
    return build_lake()


@pytest.fixture
def imprecise_utility_problem():
    return build_imprecise_utility()


@pytest.fixture
def eadm_success():
    return build_eadm_success()


@pytest.fixture
def eadm_failure():
    return build_eadm_failure()


@pytest.fixture
def maximin_failure():
    return build_maximin_failure()


@pytest.fixture
def gamma_failure():
    return build_gamma_failure()
