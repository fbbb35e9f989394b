use std::sync::Arc;

use rand::Rng;

use crate::rng;

use super::{Hypothesis, ModelError, PackedSigns, Universe};

/// Tolerance on `sum(mass) == 1` for every distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// `m` draws with replacement from the universe, plus their distinct set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    universe: Universe,
    draws: Vec<usize>,
    distinct: Arc<[usize]>,
}

impl SampleSet {
    pub fn from_draws(universe: Universe, draws: Vec<usize>) -> Result<Self, ModelError> {
        if draws.is_empty() {
            return Err(ModelError::EmptySample);
        }
        if let Some(&p) = draws.iter().find(|&&p| p >= universe.size()) {
            return Err(ModelError::PointOutOfRange { point: p, universe: universe.size() });
        }
        let mut distinct = draws.clone();
        distinct.sort_unstable();
        distinct.dedup();
        Ok(Self { universe, draws, distinct: distinct.into() })
    }

    /// Every point of the universe, drawn once.
    pub fn whole(universe: Universe) -> Self {
        let all: Vec<usize> = (0..universe.size()).collect();
        Self { universe, distinct: all.clone().into(), draws: all }
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn draws(&self) -> &[usize] {
        &self.draws
    }

    /// Distinct sampled points, ascending.
    pub fn distinct(&self) -> &[usize] {
        &self.distinct
    }

    pub fn distinct_shared(&self) -> Arc<[usize]> {
        Arc::clone(&self.distinct)
    }

    pub fn m(&self) -> usize {
        self.draws.len()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.distinct.binary_search(&p).is_ok()
    }

    /// Points of the universe never drawn, ascending.
    pub fn complement(&self) -> impl Iterator<Item = usize> + '_ {
        let mut next = 0usize;
        (0..self.universe.size()).filter(move |&p| {
            while next < self.distinct.len() && self.distinct[next] < p {
                next += 1;
            }
            !(next < self.distinct.len() && self.distinct[next] == p)
        })
    }

    /// A bootstrap bag: `size` draws with replacement from `self.draws()`.
    pub fn bootstrap<R: Rng>(&self, size: usize, rng: &mut R) -> Result<Self, ModelError> {
        let draws = (0..size).map(|_| self.draws[rng.gen_range(0..self.draws.len())]).collect();
        Self::from_draws(self.universe, draws)
    }
}

/// `m` i.i.d. uniform draws from `[u]`; a pure function of `seed`.
pub fn draw_sample(universe: Universe, m: usize, seed: u64) -> Result<SampleSet, ModelError> {
    if m == 0 {
        return Err(ModelError::EmptySample);
    }
    let mut rng = rng::stream(seed, &[rng::label::SAMPLE]);
    let draws = (0..m).map(|_| rng.gen_range(0..universe.size())).collect();
    SampleSet::from_draws(universe, draws)
}

/// A probability vector with strictly positive mass on an ascending list of
/// points and zero elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleDistribution {
    universe: Universe,
    points: Arc<[usize]>,
    mass: Vec<f64>,
}

impl SampleDistribution {
    pub fn new(universe: Universe, points: Arc<[usize]>, mass: Vec<f64>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::InvalidDistribution("empty support".into()));
        }
        if points.len() != mass.len() {
            return Err(ModelError::InvalidDistribution(format!(
                "{} points but {} masses",
                points.len(),
                mass.len()
            )));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::InvalidDistribution("support not strictly ascending".into()));
        }
        if let Some(&p) = points.last().filter(|&&p| p >= universe.size()) {
            return Err(ModelError::PointOutOfRange { point: p, universe: universe.size() });
        }
        if let Some((j, &x)) = mass.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x.is_finite())) {
            return Err(ModelError::InvalidDistribution(format!(
                "mass {x} at point {} is not strictly positive",
                points[j]
            )));
        }
        let total = crate::compensated_sum(&mass);
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(ModelError::InvalidDistribution(format!("total mass {total} != 1")));
        }
        Ok(Self { universe, points, mass })
    }

    pub fn uniform(universe: Universe, points: Arc<[usize]>) -> Result<Self, ModelError> {
        let n = points.len();
        Self::new(universe, points, vec![1.0 / n as f64; n])
    }

    /// From unordered `(point, mass)` pairs; duplicates are rejected.
    pub fn from_pairs(universe: Universe, mut pairs: Vec<(usize, f64)>) -> Result<Self, ModelError> {
        pairs.sort_by_key(|&(p, _)| p);
        let points: Vec<usize> = pairs.iter().map(|&(p, _)| p).collect();
        let mass = pairs.into_iter().map(|(_, x)| x).collect();
        Self::new(universe, points.into(), mass)
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    /// Support points, ascending.
    pub fn support(&self) -> &[usize] {
        &self.points
    }

    pub fn support_shared(&self) -> &Arc<[usize]> {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_at(&self, p: usize) -> f64 {
        self.points.binary_search(&p).map(|j| self.mass[j]).unwrap_or(0.0)
    }

    /// Total mass on points `< limit`.
    pub fn mass_below(&self, limit: usize) -> f64 {
        let end = self.points.partition_point(|&p| p < limit);
        self.mass[..end].iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.points.iter().copied().zip(self.mass.iter().copied())
    }

    /// Convex combination `lambda * self + (1 - lambda) * other` over the
    /// union of supports; `0 < lambda < 1`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self, ModelError> {
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.points.len() || j < other.points.len() {
            let a = self.points.get(i).copied().unwrap_or(usize::MAX);
            let b = other.points.get(j).copied().unwrap_or(usize::MAX);
            if a == b {
                pairs.push((a, lambda * self.mass[i] + (1.0 - lambda) * other.mass[j]));
                i += 1;
                j += 1;
            } else if a < b {
                pairs.push((a, lambda * self.mass[i]));
                i += 1;
            } else {
                pairs.push((b, (1.0 - lambda) * other.mass[j]));
                j += 1;
            }
        }
        let total: f64 = pairs.iter().map(|&(_, x)| x).sum();
        let (points, mass): (Vec<usize>, Vec<f64>) = pairs.into_iter().map(|(p, x)| (p, x / total)).unzip();
        Self::new(self.universe, points.into(), mass)
    }
}

/// `sum_i dist(i) * h(i)`: the edge of `h` under the all-ones concept.
///
/// Accumulated over the support in ascending order.
pub fn advantage(h: &Hypothesis, dist: &SampleDistribution) -> f64 {
    advantage_packed(&h.signs_on(dist.universe().size(), dist.support()), dist)
}

/// [`advantage`] for signs already restricted to `dist.support()`.
pub fn advantage_packed(signs: &PackedSigns, dist: &SampleDistribution) -> f64 {
    signs.signed_sum(dist.masses())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(u: usize) -> Universe {
        Universe::new(u).unwrap()
    }

    #[test]
    fn single_point_universe() {
        let s = draw_sample(uni(1), 5, 0).unwrap();
        assert_eq!(s.draws(), &[0, 0, 0, 0, 0]);
        assert_eq!(s.distinct(), &[0]);
    }

    #[test]
    fn distinct_never_exceeds_m() {
        for seed in 0..20 {
            let s = draw_sample(uni(1_000_000), 10, seed).unwrap();
            assert!(s.distinct().len() <= 10);
            assert_eq!(s.m(), 10);
        }
    }

    #[test]
    fn zero_draws_rejected() {
        assert!(matches!(draw_sample(uni(5), 0, 1), Err(ModelError::EmptySample)));
    }

    #[test]
    fn complement_is_set_difference() {
        let s = SampleSet::from_draws(uni(12), vec![3, 0, 3, 11, 7]).unwrap();
        let comp: Vec<usize> = s.complement().collect();
        assert_eq!(comp, vec![1, 2, 4, 5, 6, 8, 9, 10]);
        assert!(s.contains(7) && !s.contains(8));
    }

    #[test]
    fn distribution_validation() {
        let u = uni(10);
        assert!(SampleDistribution::new(u, vec![1, 2].into(), vec![0.5, 0.5]).is_ok());
        assert!(SampleDistribution::new(u, vec![2, 1].into(), vec![0.5, 0.5]).is_err());
        assert!(SampleDistribution::new(u, vec![1, 2].into(), vec![1.0, 0.0]).is_err());
        assert!(SampleDistribution::new(u, vec![1, 2].into(), vec![0.5, 0.6]).is_err());
        assert!(SampleDistribution::new(u, vec![1, 10].into(), vec![0.5, 0.5]).is_err());
        assert!(SampleDistribution::new(u, Vec::new().into(), Vec::new()).is_err());
    }

    #[test]
    fn advantage_of_structural_hypotheses() {
        let u = 100;
        let r1 = 7;
        let dist = SampleDistribution::uniform(uni(u), (0..u).step_by(9).collect::<Vec<_>>().into()).unwrap();
        assert_eq!(advantage(&Hypothesis::all_ones(), &dist), 1.0);
        let tail = SampleDistribution::uniform(uni(u), ((u - r1)..u).collect::<Vec<_>>().into()).unwrap();
        assert!((advantage(&Hypothesis::near_all_ones(r1), &tail) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn mass_below_counts_prefix() {
        let d = SampleDistribution::from_pairs(uni(10), vec![(8, 0.25), (1, 0.5), (4, 0.25)]).unwrap();
        assert_eq!(d.mass_below(4), 0.5);
        assert_eq!(d.mass_below(5), 0.75);
        assert_eq!(d.mass_at(8), 0.25);
        assert_eq!(d.mass_at(2), 0.0);
    }
}
