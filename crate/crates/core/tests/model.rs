use std::sync::Arc;

use boostgap::model::{
    advantage, advantage_packed, draw_sample, Classifier, Hypothesis, MajorityVote, SampleDistribution, SampleSet,
    Universe, VotingClassifier, MASS_TOLERANCE,
};
use boostgap::rng::{counter_word, stream};
use proptest::prelude::*;
use rand::Rng;

fn uni(u: usize) -> Universe {
    Universe::new(u).unwrap()
}

/// Signs of `h` written out point by point through `sign`.
fn naive_signs(h: &Hypothesis, u: usize) -> Vec<i8> {
    (0..u).map(|p| h.sign(u, p)).collect()
}

fn naive_advantage(h: &Hypothesis, dist: &SampleDistribution) -> f64 {
    let u = dist.universe().size();
    let mut s = 0.0;
    for (p, x) in dist.iter() {
        s += x * f64::from(h.sign(u, p));
    }
    s
}

fn naive_error(terms: &[(f64, Hypothesis)], u: usize) -> f64 {
    let mut wrong = 0;
    for p in 0..u {
        let mut v = 0.0;
        for (w, h) in terms {
            v += w * f64::from(h.sign(u, p));
        }
        if v < 0.0 {
            wrong += 1;
        }
    }
    wrong as f64 / u as f64
}

fn random_dist(u: usize, n: usize, seed: u64) -> SampleDistribution {
    let mut rng = stream(seed, &[900]);
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    while pairs.len() < n.min(u) {
        let p = rng.gen_range(0..u);
        if seen.insert(p) {
            pairs.push((p, rng.gen_range(0.01..1.0)));
        }
    }
    let total: f64 = pairs.iter().map(|&(_, x)| x).sum();
    for pair in &mut pairs {
        pair.1 /= total;
    }
    SampleDistribution::from_pairs(uni(u), pairs).unwrap()
}

#[test]
fn sample_replay_matches_independent_redraw() {
    let s = draw_sample(uni(100), 500, 42).unwrap();
    let mut rng = stream(42, &[boostgap::rng::label::SAMPLE]);
    let mut seen = [false; 100];
    for _ in 0..500 {
        seen[rng.gen_range(0..100usize)] = true;
    }
    assert_eq!(s.distinct().len(), seen.iter().filter(|&&b| b).count());
}

#[test]
fn structural_errors() {
    let u = uni(1000);
    assert_eq!(VotingClassifier::single(u, Hypothesis::near_all_ones(52)).exact_error(), 52.0 / 1000.0);
    assert_eq!(VotingClassifier::single(u, Hypothesis::all_ones()).exact_error(), 0.0);
    let tie = VotingClassifier::new(u, vec![(0.5, Hypothesis::near_all_ones(52)), (0.5, Hypothesis::all_ones())]).unwrap();
    assert_eq!(tie.exact_error(), 0.0);
    let f = VotingClassifier::single(u, Hypothesis::near_all_ones(52));
    assert_eq!(f.margin(999).unwrap(), -1.0);
    assert_eq!(VotingClassifier::single(u, Hypothesis::all_ones()).margin(17).unwrap(), 1.0);
    assert!(f.margin(1000).is_err());
}

#[test]
fn three_terms_on_ten_points() {
    let a = Hypothesis::explicit(&[1, -1, 1, -1, 1, -1, 1, -1, 1, -1]).unwrap();
    let b = Hypothesis::explicit(&[-1, -1, 1, 1, -1, -1, 1, 1, -1, -1]).unwrap();
    let c = Hypothesis::near_all_ones(3);
    let terms = vec![(0.5, a), (0.25, b), (0.25, c)];
    let f = VotingClassifier::new(uni(10), terms.clone()).unwrap();
    // margins by hand; points 3 and 8 are ties
    let hand = [0.5, -0.5, 1.0, 0.0, 0.5, -0.5, 1.0, -0.5, 0.0, -1.0];
    for (p, want) in hand.iter().enumerate() {
        assert_eq!(f.margin(p).unwrap(), *want, "point {p}");
    }
    assert_eq!(f.exact_error(), 0.4);
    assert_eq!(f.exact_error(), naive_error(&terms, 10));
}

#[test]
fn advantage_over_fifty_point_sample() {
    let u = 5000;
    let dist = random_dist(u, 50, 3);
    for idx in 0..20 {
        let h = Hypothesis::lazy(77, idx);
        assert_eq!(advantage(&h, &dist), naive_advantage(&h, &dist));
    }
}

#[test]
fn bagged_vote_counting() {
    let u = uni(200);
    let inner = vec![
        VotingClassifier::single(u, Hypothesis::all_ones()),
        VotingClassifier::single(u, Hypothesis::all_ones()),
        VotingClassifier::single(u, Hypothesis::near_all_ones(20)),
    ];
    let maj = MajorityVote::new(u, inner).unwrap();
    assert_eq!(maj.exact_error(), 0.0);
    for p in 0..200 {
        assert!(!maj.predicts_minus(p).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lazy_words_regenerate(seed in any::<u64>(), index in 0u64..1_000_000, u in 1usize..2000) {
        let h = Hypothesis::lazy(seed, index);
        let again = Hypothesis::lazy(seed, index);
        prop_assert_eq!(h.materialize(u), again.materialize(u));
        for w in 0..u.div_ceil(64) {
            let n = (u - 64 * w).min(64);
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            prop_assert_eq!(h.word(u, w), counter_word(seed, index, w as u64) & mask);
        }
    }

    #[test]
    fn packed_signs_match_pointwise(seed in any::<u64>(), u in 1usize..3000, picks in 1usize..300) {
        let h = Hypothesis::lazy(seed, 5);
        let dist = random_dist(u, picks, seed);
        let packed = h.signs_on(u, dist.support());
        let full = naive_signs(&h, u);
        for (j, &p) in dist.support().iter().enumerate() {
            prop_assert_eq!(packed.get(j), full[p]);
        }
        prop_assert_eq!(h.count_minus_on(u, dist.support()), dist.support().iter().filter(|&&p| full[p] < 0).count());
        prop_assert_eq!(h.materialize(u).to_signs(), full);
    }

    #[test]
    fn advantage_is_linear_in_the_distribution(seed in any::<u64>(), u in 2usize..2000, lambda in 0.05f64..0.95) {
        let h = Hypothesis::lazy(seed, 1);
        let a = random_dist(u, 40, seed);
        let b = random_dist(u, 40, seed ^ 0x5555);
        let mixed = a.mix(&b, lambda).unwrap();
        let lhs = advantage(&h, &mixed);
        let rhs = lambda * advantage(&h, &a) + (1.0 - lambda) * advantage(&h, &b);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn advantage_matches_naive_sum(seed in any::<u64>(), u in 1usize..4000, n in 1usize..400) {
        let h = Hypothesis::lazy(seed, 9);
        let dist = random_dist(u, n, seed);
        let packed = h.signs_on(u, dist.support());
        prop_assert_eq!(advantage_packed(&packed, &dist), naive_advantage(&h, &dist));
        let fast = packed.signed_sum_fast(dist.masses(), 1.0);
        prop_assert!((fast - naive_advantage(&h, &dist)).abs() < 1e-12);
    }

    #[test]
    fn distributions_sum_to_one(u in 1usize..5000, n in 1usize..500, seed in any::<u64>()) {
        let d = random_dist(u, n, seed);
        let total: f64 = d.masses().iter().sum();
        prop_assert!((total - 1.0).abs() <= MASS_TOLERANCE * 10.0);
        prop_assert!(d.masses().iter().all(|&x| x > 0.0));
        let s = draw_sample(uni(u), n, seed).unwrap();
        let uniform = SampleDistribution::uniform(uni(u), s.distinct_shared()).unwrap();
        prop_assert_eq!(uniform.support(), s.distinct());
    }

    #[test]
    fn bit_parallel_error_matches_margin_count(seed in any::<u64>(), u in 1usize..3000, terms in 1usize..6) {
        let mut rng = stream(seed, &[901]);
        let mut raw: Vec<(f64, Hypothesis)> = (0..terms as u64)
            .map(|i| (rng.gen_range(0.0..1.0), Hypothesis::lazy(seed, i)))
            .collect();
        raw.push((rng.gen_range(0.0..1.0), Hypothesis::near_all_ones(rng.gen_range(0..=u))));
        let f = VotingClassifier::from_raw(uni(u), raw).unwrap();
        prop_assert_eq!(f.exact_error(), f.exact_error_naive());
        prop_assert_eq!(f.exact_error(), naive_error(f.terms(), u));
        let margins = f.margins();
        let negative = margins.iter().filter(|&&m| m < 0.0).count();
        prop_assert_eq!(f.exact_error(), negative as f64 / u as f64);
    }

    #[test]
    fn complement_partitions_universe(u in 1usize..3000, m in 1usize..500, seed in any::<u64>()) {
        let s = draw_sample(uni(u), m, seed).unwrap();
        let comp: Vec<usize> = s.complement().collect();
        prop_assert_eq!(comp.len() + s.distinct().len(), u);
        prop_assert!(comp.iter().all(|&p| !s.contains(p)));
        let again = SampleSet::from_draws(uni(u), s.draws().to_vec()).unwrap();
        prop_assert_eq!(again, s);
    }
}

#[test]
fn whole_sample_has_empty_complement() {
    let s = SampleSet::whole(uni(300));
    assert_eq!(s.complement().count(), 0);
    let d = SampleDistribution::uniform(uni(300), Arc::clone(&s.distinct_shared())).unwrap();
    assert!((advantage(&Hypothesis::all_ones(), &d) - 1.0).abs() < 1e-12);
}
