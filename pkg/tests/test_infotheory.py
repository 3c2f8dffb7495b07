import itertools
import math

import numpy as np
import pytest

from sclewis.game import ConfigError, GameConfig, disjoint_config, make_rng, sample_rounds, uniform_disjoint_config
from sclewis.infotheory import (
    JointDistribution,
    check_lemma1,
    conditional_mutual_information,
    entropy,
    fano_bound,
    is_error_free_encoding,
    joint_from_policies,
    rate_conditions,
    srsa,
    verify_lemma2,
)
from sclewis.policy import canonical_policies

from tests.oracles import (
    brute_force_best_srsa,
    naive_cmi,
    naive_entropy,
    naive_joint,
    naive_srsa,
    random_stochastic,
)

LOG3 = math.log2(3)
SUBSETS = [c for k in range(1, 6) for c in itertools.combinations(("K_A", "K_B", "T", "S", "R"), k)]


def canonical_joint(eps, l=3, m=3):
    cfg = uniform_disjoint_config(l, m, eps)
    sender, receiver = canonical_policies(cfg)
    return cfg, sender, receiver, joint_from_policies(cfg, sender, receiver)


def random_disjoint_config(rng, max_l=4, max_m=4, eps=None):
    l = int(rng.integers(1, max_l + 1))
    m = int(rng.integers(1, max_m + 1))
    sizes = rng.integers(1, m + 2, size=l)
    eps = float(rng.random()) if eps is None else eps
    return disjoint_config(sizes, m, eps, knowledge_prior=rng.random(l) + 0.05,
                           type_weights=[rng.random(s) + 0.05 for s in sizes])


def test_canonical_joint_factorisation_and_mass():
    cfg, _, _, joint = canonical_joint(0.4)
    assert joint.table.shape == (3, 3, 9, 3, 9)
    assert joint.table.sum() == pytest.approx(1.0, abs=1e-12)
    assert joint.dims == {"K_A": 3, "K_B": 3, "T": 9, "S": 3, "R": 9}
    np.testing.assert_allclose(joint.marginal(("K_A", "K_B")),
                               cfg.knowledge_prior[:, None] * cfg.channel_matrix())


@pytest.mark.parametrize("eps, expected", [(0.0, 1.0), (1.0, 1 / 3), (0.5, 2 / 3), (0.3, 0.8)])
def test_srsa_canonical_equals_agreement_probability(eps, expected):
    *_, joint = canonical_joint(eps)
    assert srsa(joint) == pytest.approx(expected, abs=1e-12)
    assert srsa(joint) == pytest.approx(1 - eps * (1 - 1 / 3), abs=1e-12)


def test_srsa_constant_receiver_is_chance():
    cfg = uniform_disjoint_config(1, 5, 0.0)
    joint = joint_from_policies(cfg, np.zeros(5, dtype=int), np.full((5, 1), 2))
    assert srsa(joint) == pytest.approx(1 / 5)


def test_entropy_examples():
    cfg, _, _, joint = canonical_joint(0.0)
    assert entropy(joint, ("T",)) == pytest.approx(math.log2(9))
    assert entropy(joint, ("K_A",)) == pytest.approx(LOG3)
    point = JointDistribution(np.pad(np.ones((1, 1, 1, 1, 1)), ((0, 1),) * 5))
    assert entropy(point, ("T", "R")) == 0.0
    with pytest.raises(ValueError):
        entropy(joint, ())
    with pytest.raises(ValueError):
        entropy(joint, ("X",))


def test_cmi_examples():
    *_, j0 = canonical_joint(0.0)
    *_, j1 = canonical_joint(1.0)
    *_, jh = canonical_joint(0.5)
    assert conditional_mutual_information(j0, ("K_A",), ("K_B",), ("S",)) == pytest.approx(LOG3)
    assert conditional_mutual_information(j1, ("K_A",), ("K_B",), ("S",)) == pytest.approx(0.0, abs=1e-12)
    # log2 3 - H(2/3, 1/6, 1/6) = 1/3 exactly
    assert conditional_mutual_information(jh, ("K_A",), ("K_B",), ("S",)) == pytest.approx(1 / 3, abs=1e-12)
    with pytest.raises(ValueError):
        conditional_mutual_information(j0, ("K_A",), ("K_A", "S"))


def test_entropies_match_naive_oracle_on_random_stochastic_policies():
    rng = np.random.default_rng(2024)
    for _ in range(15):
        cfg = random_disjoint_config(rng, 3, 3)
        p_s = random_stochastic(rng, (cfg.n_types, cfg.n_signals))
        p_r = random_stochastic(rng, (cfg.n_signals, cfg.n_knowledge, cfg.n_types))
        joint = joint_from_policies(cfg, p_s, p_r)
        ref = naive_joint(cfg.knowledge_prior, cfg.type_given_knowledge, cfg.epsilon, p_s, p_r)
        for names in SUBSETS:
            assert entropy(joint, names) == pytest.approx(naive_entropy(ref, names), abs=1e-10)
        assert srsa(joint) == pytest.approx(naive_srsa(ref), abs=1e-12)
        got = conditional_mutual_information(joint, ("K_A",), ("K_B",), ("S",))
        assert got == pytest.approx(max(0.0, naive_cmi(ref, ("K_A",), ("K_B",), ("S",))), abs=1e-10)


def test_information_identities_on_random_joints():
    rng = np.random.default_rng(77)
    for _ in range(30):
        cfg = random_disjoint_config(rng)
        p_s = random_stochastic(rng, (cfg.n_types, cfg.n_signals))
        p_r = random_stochastic(rng, (cfg.n_signals, cfg.n_knowledge, cfg.n_types))
        joint = joint_from_policies(cfg, p_s, p_r)
        i_tr = joint.mutual_information(("T",), ("R",))
        assert i_tr >= 0.0
        for x, y in [(("T",), ("R",)), (("K_A", "S"), ("K_B",)), (("S",), ("T", "R"))]:
            assert entropy(joint, x + y) == pytest.approx(
                entropy(joint, x) + joint.conditional_entropy(y, x), abs=1e-10)
        # data processing along T -> (S, K_B) -> R
        assert i_tr <= joint.mutual_information(("T",), ("S", "K_B")) + 1e-10
        assert conditional_mutual_information(joint, ("K_A",), ("R",), ("K_B", "S")) >= 0.0


@pytest.mark.parametrize("l, m, eps", [(2, 2, 0.3), (1, 2, 0.0), (2, 1, 0.9), (1, 4, 0.0)])
def test_srsa_enumeration_matches_monte_carlo(l, m, eps):
    rng = np.random.default_rng(l * 100 + m)
    cfg = uniform_disjoint_config(l, m, eps)
    p_s = random_stochastic(rng, (cfg.n_types, cfg.n_signals))
    p_r = random_stochastic(rng, (cfg.n_signals, cfg.n_knowledge, cfg.n_types))
    exact = srsa(joint_from_policies(cfg, p_s, p_r))

    n = 1_000_000
    stream = make_rng(31)
    _, t, k_b = sample_rounds(cfg, stream, n)
    s = (stream.random(n)[:, None] > np.cumsum(p_s, axis=1)[t]).sum(axis=1)
    s = np.minimum(s, cfg.n_signals - 1)
    cdf_r = np.cumsum(p_r, axis=2)[s, k_b]
    r = np.minimum((stream.random(n)[:, None] > cdf_r).sum(axis=1), cfg.n_types - 1)
    estimate = np.mean(r == t)
    se = math.sqrt(max(exact * (1 - exact), 1e-12) / n)
    assert abs(estimate - exact) <= 3 * se + 1e-9


def test_joint_rejects_bad_shapes():
    cfg = uniform_disjoint_config(3, 2, 0.0)
    sender, receiver = canonical_policies(cfg)
    with pytest.raises(ConfigError):
        joint_from_policies(cfg, sender[:-1], receiver)
    with pytest.raises(ConfigError):
        joint_from_policies(cfg, sender, receiver.T)
    with pytest.raises(ConfigError):
        joint_from_policies(cfg, np.full((6, 2), 0.6), receiver)


def test_lemma1_counting_condition():
    assert check_lemma1(uniform_disjoint_config(3, 3, 0.0)).satisfied
    assert check_lemma1(uniform_disjoint_config(1, 1, 0.0)).satisfied
    report = check_lemma1(disjoint_config([3, 2], 2))
    assert (report.lhs, report.rhs, report.satisfied) == (4.0, 5.0, False)


def test_lemma1_necessity_brute_force_l2_m2_n5():
    cfg = disjoint_config([3, 2], 2)
    best, psi, phi = brute_force_best_srsa(cfg.knowledge_prior, cfg.type_given_knowledge, 2)
    assert best < 1.0
    # the brute-force optimum agrees with the exact joint
    assert srsa(joint_from_policies(cfg, psi, phi)) == pytest.approx(best, abs=1e-12)


def test_error_free_encoding_examples():
    cfg = uniform_disjoint_config(3, 3, 0.2)
    sender, _ = canonical_policies(cfg)
    assert is_error_free_encoding(cfg, sender)
    assert not is_error_free_encoding(cfg, np.zeros(9, dtype=int))
    assert is_error_free_encoding(uniform_disjoint_config(4, 1, 0.2), np.zeros(4, dtype=int))


@pytest.mark.parametrize("eps, expected_lhs", [
    (0.0, math.log2(9)),
    (1.0, LOG3),
    (0.5, LOG3 + 1 / 3),
])
def test_lemma2_canonical(eps, expected_lhs):
    cfg, sender, _, joint = canonical_joint(eps)
    report = verify_lemma2(joint, sender, cfg)
    assert report.applicable and report.satisfied
    assert report.lhs == pytest.approx(expected_lhs, abs=1e-10)
    assert abs(report.lhs - report.rhs) <= 1e-10
    assert report.lhs >= entropy(joint, ("S",)) - 1e-12


def test_lemma2_flags_non_error_free_encoder():
    cfg = uniform_disjoint_config(3, 3, 0.5)
    sender = np.zeros(9, dtype=int)
    receiver = np.zeros((3, 3), dtype=int)
    report = verify_lemma2(joint_from_policies(cfg, sender, receiver), sender, cfg)
    assert not report.applicable
    assert not report.details["error_free_encoding"]


def test_fano_bound_examples():
    *_, j1 = canonical_joint(1.0)
    report = fano_bound(j1)
    assert report.lhs == pytest.approx(1 / 3)
    assert report.rhs == pytest.approx(1 - (LOG3 - 1) / 3)
    assert report.rhs == pytest.approx(0.8050124997596146, abs=1e-12)
    assert report.satisfied and not report.vacuous

    *_, j0 = canonical_joint(0.0)
    report = fano_bound(j0)
    assert report.details["H(K_A|K_B,S)"] == pytest.approx(0.0, abs=1e-12)
    assert report.rhs > 1 and report.vacuous and report.satisfied

    *_, jh = canonical_joint(0.5)
    assert fano_bound(jh).rhs == pytest.approx(1 - (LOG3 - 1 / 3 - 1) / 3, abs=1e-12)


def test_fano_bound_binary_and_trivial_type_spaces():
    two = uniform_disjoint_config(2, 1, 0.5)
    joint = joint_from_policies(two, np.zeros(2, dtype=int), np.array([[0, 1]]))
    assert fano_bound(joint).vacuous
    one = uniform_disjoint_config(1, 1, 0.0)
    report = fano_bound(joint_from_policies(one, np.zeros(1, dtype=int), np.zeros((1, 1), dtype=int)))
    assert not report.applicable


def test_fano_bound_needs_knowledge_determined_by_type():
    # every instance generates the same types, so K_A carries no information
    # about T and the residual entropy H(K_A | K_B, S) is log2 16 = 4 bits
    cfg = GameConfig(n_types=3, n_signals=3, n_knowledge=16,
                     knowledge_prior=np.full(16, 1 / 16),
                     type_given_knowledge=np.full((16, 3), 1 / 3), epsilon=1.0)
    sender = np.arange(3)
    receiver = np.tile(np.arange(3)[:, None], (1, 16))
    report = fano_bound(joint_from_policies(cfg, sender, receiver))
    assert report.lhs == pytest.approx(1.0)
    assert not report.satisfied
    assert not report.applicable and report.passed


def test_fano_bound_holds_on_random_disjoint_configs():
    rng = np.random.default_rng(5)
    for _ in range(50):
        cfg = random_disjoint_config(rng)
        p_s = random_stochastic(rng, (cfg.n_types, cfg.n_signals))
        p_r = random_stochastic(rng, (cfg.n_signals, cfg.n_knowledge, cfg.n_types))
        report = fano_bound(joint_from_policies(cfg, p_s, p_r))
        assert report.applicable or cfg.n_types < 2
        assert report.lhs <= report.rhs + 1e-12


def test_rate_conditions_paper_setup():
    rates = rate_conditions(uniform_disjoint_config(3, 3, 0.0))
    assert rates.r_a == pytest.approx(LOG3)
    assert rates.h_t == pytest.approx(math.log2(9))
    assert rates.h_t_given_ka == pytest.approx(LOG3)
    assert rates.a1_holds and rates.encodable


def test_rate_conditions_classic_degenerate():
    rates = rate_conditions(uniform_disjoint_config(1, 4, 0.0))
    assert rates.r_a == pytest.approx(rates.h_t)
    assert not rates.a1_holds


def test_rate_conditions_oversized_support():
    cfg = disjoint_config([3, 3], 2)
    rates = rate_conditions(cfg)
    assert not rates.encodable
    assert not any(is_error_free_encoding(cfg, np.array(psi))
                   for psi in itertools.product(range(2), repeat=cfg.n_types))
