//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use boostgap::adversary::{
    derive_params, AdversaryParams, CalibrationConstants, HypId, HypothesisSets, SetId, Via,
};
use boostgap::model::{draw_sample, Hypothesis, SampleDistribution, Universe};
use boostgap::rng::stream;
use rand::Rng;

/// Small parameters whose hypothesis families can be materialized whole:
/// `gamma = 0.1, d = 3, alpha = 1` gives `r = r1 = 5` and a quota of 5.
pub fn small_params(m: usize, blocks: usize, budget: usize) -> AdversaryParams {
    derive_params(0.1, 3, m, 1.0, CalibrationConstants::default())
        .unwrap()
        .with_blocks(blocks)
        .unwrap()
        .with_budget(budget)
        .unwrap()
}

/// The first `r` points of `[0, first_part)` missing from `support`, by a
/// plain membership scan; `None` when fewer exist.
pub fn naive_frs(support: &[usize], first_part: usize, r: usize) -> Option<Vec<usize>> {
    let out: Vec<usize> = (0..first_part).filter(|p| !support.contains(p)).take(r).collect();
    (out.len() == r).then_some(out)
}

/// `sum_i D(i) h(i)` over the support in ascending order from a full sign
/// vector.
pub fn naive_edge(signs: &[i8], dist: &SampleDistribution) -> f64 {
    let mut s = 0.0;
    for (p, x) in dist.iter() {
        s += x * f64::from(signs[p]);
    }
    s
}

/// First entry of `set`, in block order with `h0` heading every block,
/// whose materialized signs clear `threshold` and (when given) carry at
/// least `quota` minus signs on `frs`.
pub fn exhaustive_scan(
    sets: &HypothesisSets,
    set: SetId,
    dist: &SampleDistribution,
    threshold: f64,
    quota: Option<(&[usize], usize)>,
) -> Option<(HypId, f64)> {
    let u = dist.universe().size();
    for block in 0..sets.blocks(set) {
        for index in 0..sets.block_len(set, block) {
            let id = HypId { block, index };
            let signs = sets.get(set, id).materialize(u).to_signs();
            if let Some((frs, q)) = quota {
                if frs.iter().filter(|&&p| signs[p] < 0).count() < q {
                    continue;
                }
            }
            let edge = naive_edge(&signs, dist);
            if edge >= threshold {
                return Some((id, edge));
            }
        }
    }
    None
}

/// The adversarial selector written out from its definition.
pub fn exhaustive_g(sets: &HypothesisSets, dist: &SampleDistribution, params: &AdversaryParams) -> Option<(HypId, f64, Via)> {
    let u = dist.universe().size();
    let first_part = u - params.r1;
    let mut first_mass = 0.0;
    for (p, x) in dist.iter() {
        if p < first_part {
            first_mass += x;
        }
    }
    if first_mass > params.mass_threshold {
        let signs = Hypothesis::near_all_ones(params.r1).materialize(u).to_signs();
        let edge = naive_edge(&signs, dist);
        if edge >= params.select_threshold {
            return Some((HypId { block: 0, index: 0 }, edge, Via::H0Mass));
        }
    }
    let frs = naive_frs(dist.support(), first_part, params.r);
    let quota = frs.as_deref().map(|f| (f, params.minus_quota));
    exhaustive_scan(sets, SetId::H1, dist, params.select_threshold, quota).map(|(id, e)| (id, e, Via::H1Scan))
}

/// A seeded fixture: hypothesis families and a random distribution over a
/// sample of `m` draws. Every fourth fixture keeps the sample as drawn, so
/// nearly all mass sits on the first part; the others add three last-part
/// points and leave the first part between 20% and 55% of the mass, which
/// sends the selector to its scan.
pub fn fixture(seed: u64, params: &AdversaryParams) -> (HypothesisSets, SampleDistribution) {
    let sets = HypothesisSets::new(seed, params);
    let universe = Universe::new(params.u).unwrap();
    let sample = draw_sample(universe, params.m, seed).unwrap();
    let mut rng = stream(seed, &[777]);
    let first_part = params.u - params.r1;
    let mut points = sample.distinct().to_vec();
    if seed % 4 != 0 {
        while points.iter().filter(|&&p| p >= first_part).count() < 3 {
            let p = rng.gen_range(first_part..params.u);
            if !points.contains(&p) {
                points.push(p);
            }
        }
        points.sort_unstable();
    }
    let mut mass: Vec<f64> = points.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    if seed % 4 != 0 {
        let target = rng.gen_range(0.2..0.55);
        let split = points.partition_point(|&p| p < first_part);
        let (head, tail) = mass.split_at_mut(split);
        let (a, b): (f64, f64) = (head.iter().sum(), tail.iter().sum());
        head.iter_mut().for_each(|x| *x *= target / a);
        tail.iter_mut().for_each(|x| *x *= (1.0 - target) / b);
    }
    let total: f64 = mass.iter().sum();
    for x in &mut mass {
        *x /= total;
    }
    let dist = SampleDistribution::new(universe, points.into(), mass).unwrap();
    (sets, dist)
}
