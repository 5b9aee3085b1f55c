import random
from fractions import Fraction
from math import log

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs
from scipy.special import gammaln

from stagedlong import (
    Staging,
    assign_mass_conserving_prior,
    build_event_tree,
    estimate_probabilities,
    merge_log_bayes_factor,
    stage_log_ml,
    staging_log_score,
)
from stagedlong.errors import ArgumentError
from stagedlong.scoring import StageData, default_alpha_bar, stage_data

from conftest import DEPRESSION_ORDER, random_tree
from oracles import polya_urn_log_ml


def _sd(n, alpha, members=(0,)):
    return StageData(members, ("a", "b"), tuple(n), tuple(float(a) for a in alpha))


def test_prior_binary_levels():
    from stagedlong import Dataset, VariableSchema

    schema = (VariableSchema("A", ("x", "y")), VariableSchema("B", ("u", "v")))
    prior = assign_mass_conserving_prior(build_event_tree(Dataset(schema, ()), ["A", "B"]), 4)
    assert prior.alphas[0] == (2, 2)
    assert prior.alphas[1] == prior.alphas[2] == (1, 1)


def test_prior_three_edges():
    from stagedlong import Dataset, VariableSchema

    tree = build_event_tree(Dataset((VariableSchema("A", ("x", "y", "z")),), ()), ["A"])
    assert assign_mass_conserving_prior(tree, 3).alphas[0] == (1, 1, 1)


def test_prior_depression_leaf_edges(depression):
    tree = build_event_tree(depression, DEPRESSION_ORDER)
    prior = assign_mass_conserving_prior(tree, 2)
    assert all(a == Fraction(1, 16) for s in tree.level(4) for a in prior.alphas[s])
    assert float(prior.alphas[30][0]) == 0.0625


def test_prior_default_and_validation(depression):
    tree = build_event_tree(depression, DEPRESSION_ORDER)
    assert default_alpha_bar(tree) == 2
    assert assign_mass_conserving_prior(tree).alpha_bar == 2
    with pytest.raises(ArgumentError):
        assign_mass_conserving_prior(tree, 0)
    with pytest.raises(ArgumentError):
        assign_mass_conserving_prior(tree, "abc")


def test_prior_mass_conservation_random(rng):
    for _ in range(30):
        tree = random_tree(rng, rng.randint(1, 4))
        ab = Fraction(rng.randint(1, 20), rng.randint(1, 4))
        prior = assign_mass_conserving_prior(tree, ab)
        assert sum(prior.alphas[0]) == ab
        for s in tree.situations:
            if s:
                par, k = tree.parent(s)
                assert sum(prior.alphas[s]) == prior.alphas[par][k]


def test_log_ml_examples():
    assert stage_log_ml((0, 0), (1, 1)) == 0
    assert stage_log_ml((1, 0), (1, 1)) == pytest.approx(log(1 / 2), abs=1e-12)
    assert stage_log_ml((2, 1), (1, 1)) == pytest.approx(log(1 / 12), abs=1e-12)
    assert stage_log_ml((2, 1), (1, 1)) == pytest.approx(-2.484907, abs=1e-6)


def test_log_ml_errors():
    with pytest.raises(ArgumentError):
        stage_log_ml((1, 2, 3), (1, 1))
    with pytest.raises(ArgumentError):
        stage_log_ml((1,), (1,))


@settings(max_examples=200, deadline=None)
@given(
    hs.integers(2, 6).flatmap(
        lambda k: hs.tuples(
            hs.lists(hs.integers(0, 50), min_size=k, max_size=k),
            hs.lists(hs.floats(0.05, 10), min_size=k, max_size=k),
            hs.randoms(use_true_random=False),
        )
    )
)
def test_log_ml_matches_polya_urn(case):
    n, alpha, r = case
    seq = [k for k, nk in enumerate(n) for _ in range(nk)]
    r.shuffle(seq)
    assert abs(stage_log_ml(n, alpha) - polya_urn_log_ml(n, alpha, seq)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(hs.lists(hs.integers(0, 30), min_size=2, max_size=5), hs.floats(0.1, 5))
def test_log_ml_matches_gamma_closed_form(n, a):
    alpha = [a] * len(n)
    ref = gammaln(sum(alpha)) - gammaln(sum(alpha) + sum(n)) + sum(
        gammaln(x + y) - gammaln(x) for x, y in zip(alpha, n)
    )
    assert stage_log_ml(n, alpha) == pytest.approx(ref, abs=1e-9)


def test_merge_bf_examples():
    assert merge_log_bayes_factor(_sd((1, 0), (1, 1)), _sd((0, 1), (1, 1), (1,))) == pytest.approx(log(0.8))
    assert merge_log_bayes_factor(_sd((0, 0), (1, 1)), _sd((0, 0), (1, 1), (1,))) == 0


def test_merge_bf_label_mismatch():
    u = _sd((1, 0), (1, 1))
    v = StageData((1,), ("c", "d"), (0, 1), (1.0, 1.0))
    with pytest.raises(ArgumentError):
        merge_log_bayes_factor(u, v)


@settings(max_examples=100, deadline=None)
@given(
    hs.lists(hs.integers(0, 20), min_size=2, max_size=2),
    hs.lists(hs.integers(0, 20), min_size=2, max_size=2),
    hs.floats(0.1, 4),
)
def test_merge_bf_symmetric(nu, nv, a):
    u, v = _sd(nu, (a, a)), _sd(nv, (a, a), (1,))
    assert merge_log_bayes_factor(u, v) == pytest.approx(merge_log_bayes_factor(v, u), abs=1e-12)


def _three_situation_tree(counts):
    from stagedlong import EventTree, VariableSchema

    variables = (VariableSchema("A", ("x", "y")), VariableSchema("B", ("x", "y")))
    return EventTree(variables, counts)


def test_three_situation_finest_vs_coarsest():
    counts = ((3, 2), (2, 1), (0, 2))
    tree = _three_situation_tree(counts)
    prior = assign_mass_conserving_prior(tree, 2)
    finest = Staging.singletons(tree.situations)
    coarsest = Staging(((0, 1, 2),))
    alphas = [(1, 1), (0.5, 0.5), (0.5, 0.5)]
    direct_fine = sum(polya_urn_log_ml(n, a) for n, a in zip(counts, alphas))
    direct_coarse = polya_urn_log_ml((5, 5), (2, 2))
    assert staging_log_score(tree, finest, prior) == pytest.approx(direct_fine, abs=1e-12)
    assert staging_log_score(tree, coarsest, prior) == pytest.approx(direct_coarse, abs=1e-12)


def test_score_zero_without_data():
    tree = _three_situation_tree(((0, 0), (0, 0), (0, 0)))
    prior = assign_mass_conserving_prior(tree, 2)
    assert staging_log_score(tree, Staging.singletons(tree.situations), prior) == 0


def test_score_rejects_bad_staging():
    tree = _three_situation_tree(((1, 0), (0, 0), (0, 0)))
    prior = assign_mass_conserving_prior(tree, 2)
    with pytest.raises(ArgumentError):
        staging_log_score(tree, Staging(((0, 1),)), prior)


def test_score_additivity_along_merge_chain(rng):
    for _ in range(30):
        tree = random_tree(rng, 3, shared_labels=True, max_cats=2)
        prior = assign_mass_conserving_prior(tree, 2)
        staging = Staging.singletons(tree.situations)
        score = staging_log_score(tree, staging, prior)
        for _ in range(4):
            stages = list(staging.stages)
            a, b = random.Random(rng.random()).sample(stages, 2)
            bf = merge_log_bayes_factor(stage_data(tree, prior, a), stage_data(tree, prior, b))
            staging = staging.merged(a, b)
            score += bf
            assert staging_log_score(tree, staging, prior) == pytest.approx(score, abs=1e-9)


def test_estimators():
    tree = _three_situation_tree(((3, 1), (0, 0), (0, 0)))
    prior = assign_mass_conserving_prior(tree, 2)
    staging = Staging.singletons(tree.situations)
    mean = estimate_probabilities(tree, staging, prior, "mean")
    mode = estimate_probabilities(tree, staging, prior, "map")
    assert mean.probs[0] == pytest.approx((2 / 3, 1 / 3))
    assert mode.probs[0] == pytest.approx((3 / 4, 1 / 4))
    assert mean.prior_only == {(1,), (2,)}
    # zero-count stages have parameters 0.5 < 1, so MAP falls back to the mean
    assert len(mode.warnings) == 2
    assert mode.probs[1] == (0.5, 0.5)
    with pytest.raises(ArgumentError):
        estimate_probabilities(tree, staging, prior, "median")


def test_probabilities_sum_to_one_and_shared_within_stage(rng):
    for _ in range(20):
        tree = random_tree(rng, 3, shared_labels=True, max_cats=2)
        prior = assign_mass_conserving_prior(tree)
        staging = Staging((tuple(tree.situations),))
        probs = estimate_probabilities(tree, staging, prior, "mean")
        for s in tree.situations:
            assert abs(sum(probs.probs[s]) - 1) < 1e-12
            assert probs.probs[s] == probs.probs[0]
