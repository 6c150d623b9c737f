//! Synthetic link streams with known change points.
//!
//! Every node pair carries an independent Poisson arrival process whose rate
//! depends on whether the pair is intra- or inter-block in the current regime.
//! Each arrival opens a link with an exponentially distributed duration. Rates
//! switch abruptly at regime boundaries; a link opened before a boundary keeps
//! its drawn duration.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkstream::{Event, LinkStream};

/// One stationary stretch of a generated stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub duration: f64,
    /// Block id of every node.
    pub block_assignment: Vec<usize>,
    /// Link arrivals per second for a pair inside one block.
    pub intra_rate: f64,
    /// Link arrivals per second for a pair across blocks.
    pub inter_rate: f64,
    pub mean_link_duration: f64,
}

impl RegimeSpec {
    pub fn new(
        duration: f64,
        block_assignment: Vec<usize>,
        intra_rate: f64,
        inter_rate: f64,
        mean_link_duration: f64,
    ) -> Result<Self> {
        let spec = RegimeSpec { duration, block_assignment, intra_rate, inter_rate, mean_link_duration };
        spec.validate()?;
        Ok(spec)
    }

    /// Regime whose expected total link rate is `total_rate`, a fraction
    /// `inter_fraction` of it on inter-block pairs.
    pub fn balanced(
        duration: f64,
        block_assignment: Vec<usize>,
        total_rate: f64,
        inter_fraction: f64,
        mean_link_duration: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&inter_fraction) {
            return Err(Error::arg(format!("inter fraction must lie in [0, 1], got {inter_fraction}")));
        }
        let (intra_pairs, inter_pairs) = pair_counts(&block_assignment);
        let share = |part: f64, pairs: usize| if pairs == 0 { 0.0 } else { part / pairs as f64 };
        Self::new(
            duration,
            block_assignment,
            share(total_rate * (1.0 - inter_fraction), intra_pairs),
            share(total_rate * inter_fraction, inter_pairs),
            mean_link_duration,
        )
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::arg(format!("regime duration must be positive, got {}", self.duration)));
        }
        if !(self.mean_link_duration.is_finite() && self.mean_link_duration > 0.0) {
            return Err(Error::arg("mean link duration must be positive"));
        }
        if !(self.intra_rate.is_finite() && self.intra_rate >= 0.0 && self.inter_rate.is_finite() && self.inter_rate >= 0.0) {
            return Err(Error::arg("link rates must be non-negative"));
        }
        if self.block_assignment.len() < 2 {
            return Err(Error::arg("a regime needs at least 2 nodes"));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.block_assignment.len()
    }

    /// Expected link arrivals per second over all pairs.
    pub fn expected_link_rate(&self) -> f64 {
        let (intra, inter) = pair_counts(&self.block_assignment);
        intra as f64 * self.intra_rate + inter as f64 * self.inter_rate
    }
}

/// Numbers of intra- and inter-block pairs.
pub fn pair_counts(blocks: &[usize]) -> (usize, usize) {
    let n = blocks.len();
    let mut sizes = std::collections::HashMap::new();
    for &b in blocks {
        *sizes.entry(b).or_insert(0usize) += 1;
    }
    let intra: usize = sizes.values().map(|&s| s * (s.saturating_sub(1)) / 2).sum();
    (intra, n * (n - 1) / 2 - intra)
}

/// `b` contiguous blocks of (nearly) equal size.
pub fn contiguous_blocks(n: usize, b: usize) -> Vec<usize> {
    (0..n).map(|i| i * b / n).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSample {
    pub stream: LinkStream,
    /// Regime boundaries in seconds, strictly inside the domain.
    pub true_changepoints: Vec<f64>,
    pub label: String,
    pub seed: u64,
}

/// Draws links on `[boundaries[k], boundaries[k+1])` from `regimes[k]`.
fn generate_piecewise(boundaries: &[f64], regimes: &[RegimeSpec], rng: &mut ChaCha8Rng) -> Result<LinkStream> {
    debug_assert_eq!(boundaries.len(), regimes.len() + 1);
    let n = regimes[0].node_count();
    if regimes.iter().any(|r| r.node_count() != n) {
        return Err(Error::arg("regimes disagree on the number of nodes"));
    }
    let t_max = *boundaries.last().unwrap();
    let mut events = Vec::new();
    for (k, r) in regimes.iter().enumerate() {
        let (start, end) = (boundaries[k], boundaries[k + 1]);
        let hold = Exp::new(1.0 / r.mean_link_duration).map_err(|e| Error::arg(e.to_string()))?;
        for u in 0..n {
            for v in (u + 1)..n {
                let rate = if r.block_assignment[u] == r.block_assignment[v] { r.intra_rate } else { r.inter_rate };
                if rate == 0.0 {
                    continue;
                }
                let gap = Exp::new(rate).map_err(|e| Error::arg(e.to_string()))?;
                let mut t = start + gap.sample(rng);
                while t < end {
                    let omega = (t + hold.sample(rng)).min(t_max);
                    if omega > t {
                        events.push(Event::new(t, omega, u, v));
                    }
                    t += gap.sample(rng);
                }
            }
        }
    }
    LinkStream::new(n, t_max, events)
}

/// Stream over consecutive regimes, reproducible from `seed`.
pub fn generate_stream(regimes: &[RegimeSpec], seed: u64) -> Result<BenchmarkSample> {
    if regimes.is_empty() {
        return Err(Error::arg("at least one regime is required"));
    }
    for r in regimes {
        r.validate()?;
    }
    let mut boundaries = vec![0.0];
    for r in regimes {
        boundaries.push(boundaries.last().unwrap() + r.duration);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream = generate_piecewise(&boundaries, regimes, &mut rng)?;
    Ok(BenchmarkSample {
        stream,
        true_changepoints: boundaries[1..regimes.len()].to_vec(),
        label: "custom".into(),
        seed,
    })
}

/// Block-count sequences for the three merge/split scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeSplitPattern {
    /// 4 → 2 → 1
    A,
    /// 4 → 1 → 2
    B,
    /// 2 → 4 → 1
    C,
}

impl MergeSplitPattern {
    pub fn block_counts(self) -> [usize; 3] {
        match self {
            MergeSplitPattern::A => [4, 2, 1],
            MergeSplitPattern::B => [4, 1, 2],
            MergeSplitPattern::C => [2, 4, 1],
        }
    }
}

impl FromStr for MergeSplitPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "merge-merge" => Ok(MergeSplitPattern::A),
            "b" | "merge-split" => Ok(MergeSplitPattern::B),
            "c" | "split-merge" => Ok(MergeSplitPattern::C),
            _ => Err(Error::arg(format!("unknown merge/split pattern `{s}`"))),
        }
    }
}

/// Three 100 s regimes on 100 nodes with changes at 100 and 200. The per-pair
/// rate is constant, so merging blocks raises each node's activity.
pub fn merge_split_stream(pattern: MergeSplitPattern, intra_rate: f64, seed: u64) -> Result<BenchmarkSample> {
    const N: usize = 100;
    let regimes = pattern
        .block_counts()
        .iter()
        .map(|&b| RegimeSpec::new(100.0, contiguous_blocks(N, b), intra_rate, 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let mut sample = generate_stream(&regimes, seed)?;
    sample.label = format!("merge-split-{pattern:?}");
    Ok(sample)
}

/// Path on `n` nodes whose first `k + 1` edges share the support `[0, k+1)`
/// while the others follow one another on unit intervals.
pub fn toy_path(n: usize, k: usize) -> Result<LinkStream> {
    if n < 2 {
        return Err(Error::arg(format!("a toy path needs at least 2 nodes, got {n}")));
    }
    if k > n - 2 {
        return Err(Error::arg(format!("overlap depth {k} exceeds {}", n - 2)));
    }
    let events = (1..n).map(|i| {
        let (a, b) = if i <= k + 1 { (0.0, (k + 1) as f64) } else { ((i - 1) as f64, i as f64) };
        Event::new(a, b, i - 1, i)
    });
    LinkStream::new(n, (n - 1) as f64, events)
}

/// Three nodes linked in turn: `{0,1}` on `[0,1)`, `{1,2}` on `[1,2)`,
/// `{0,2}` on `[2,3)`.
pub fn temporal_cycle() -> LinkStream {
    LinkStream::new(3, 3.0, [Event::new(0., 1., 0, 1), Event::new(1., 2., 1, 2), Event::new(2., 3., 0, 2)])
        .expect("static events are valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    ActivityBench,
    CommunityBench,
    MultiBench,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::ActivityBench, Family::CommunityBench, Family::MultiBench];

    fn tag(self) -> u64 {
        match self {
            Family::ActivityBench => 1,
            Family::CommunityBench => 2,
            Family::MultiBench => 3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_end_matches("bench") {
            "activity" => Ok(Family::ActivityBench),
            "community" => Ok(Family::CommunityBench),
            "multi" => Ok(Family::MultiBench),
            _ => Err(Error::arg(format!("unknown benchmark family `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Generator settings shared by the benchmark families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkParams {
    pub node_count: usize,
    pub t_max: f64,
    pub mean_link_duration: f64,
    /// Fixed block count of the activity-driven families.
    pub activity_blocks: usize,
    pub activity_intra_rate: f64,
    pub activity_inter_rate: f64,
    /// Ratio between the busy and the quiet regime rates.
    pub activity_factor: f64,
    /// Single change times are drawn uniformly in `[margin, t_max − margin]`.
    pub change_margin: f64,
    pub community_blocks_coarse: usize,
    pub community_blocks_fine: usize,
    /// Expected link arrivals per second over all pairs, in both regimes.
    pub community_total_rate: f64,
    pub community_inter_fraction: f64,
    pub multi_max_breaks: usize,
    /// Minimum gap between consecutive changes and from either end.
    pub multi_min_spacing: f64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams {
            node_count: 200,
            t_max: 200.0,
            mean_link_duration: 1.0,
            activity_blocks: 4,
            activity_intra_rate: 0.012,
            activity_inter_rate: 0.0006,
            activity_factor: 3.0,
            change_margin: 40.0,
            community_blocks_coarse: 2,
            community_blocks_fine: 8,
            community_total_rate: 200.0,
            community_inter_fraction: 0.05,
            multi_max_breaks: 4,
            multi_min_spacing: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub family: Family,
    pub train: Vec<BenchmarkSample>,
    pub test: Vec<BenchmarkSample>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one benchmark sample, a pure function of its coordinates.
pub fn sample_seed(seed: u64, family: Family, split: Split, index: usize) -> u64 {
    let split = match split {
        Split::Train => 1,
        Split::Test => 2,
    };
    [family.tag(), split, index as u64].into_iter().fold(splitmix64(seed), |h, x| splitmix64(h ^ x))
}

/// Sorted change times in `[s, t_max − s]` with pairwise gaps of at least `s`.
fn spaced_times(rng: &mut ChaCha8Rng, count: usize, t_max: f64, s: f64) -> Result<Vec<f64>> {
    if t_max - 2.0 * s < (count as f64 - 1.0) * s {
        return Err(Error::arg(format!("{count} changes with spacing {s} do not fit in {t_max}")));
    }
    loop {
        let mut ts: Vec<f64> = (0..count).map(|_| rng.random_range(s..=t_max - s)).collect();
        ts.sort_by(f64::total_cmp);
        if ts.windows(2).all(|w| w[1] - w[0] >= s) {
            return Ok(ts);
        }
    }
}

pub fn make_sample(family: Family, params: &BenchmarkParams, seed: u64) -> Result<BenchmarkSample> {
    let p = params;
    let n = p.node_count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (changes, regimes) = match family {
        Family::ActivityBench => {
            let tau = rng.random_range(p.change_margin..=p.t_max - p.change_margin);
            let blocks = contiguous_blocks(n, p.activity_blocks);
            let up = rng.random_bool(0.5);
            let scales = if up { [1.0, p.activity_factor] } else { [p.activity_factor, 1.0] };
            let regimes = scales
                .iter()
                .map(|&f| {
                    RegimeSpec::new(1.0, blocks.clone(), f * p.activity_intra_rate, f * p.activity_inter_rate, p.mean_link_duration)
                })
                .collect::<Result<Vec<_>>>()?;
            (vec![tau], regimes)
        }
        Family::CommunityBench => {
            let tau = rng.random_range(p.change_margin..=p.t_max - p.change_margin);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let map = |b: usize| -> Vec<usize> {
                let base = contiguous_blocks(n, b);
                let mut out = vec![0; n];
                for (pos, &node) in perm.iter().enumerate() {
                    out[node] = base[pos];
                }
                out
            };
            let mut maps = [map(p.community_blocks_coarse), map(p.community_blocks_fine)];
            if rng.random_bool(0.5) {
                maps.swap(0, 1);
            }
            let regimes = maps
                .into_iter()
                .map(|m| RegimeSpec::balanced(1.0, m, p.community_total_rate, p.community_inter_fraction, p.mean_link_duration))
                .collect::<Result<Vec<_>>>()?;
            (vec![tau], regimes)
        }
        Family::MultiBench => {
            if p.multi_max_breaks == 0 {
                return Err(Error::arg("multi_max_breaks must be at least 1"));
            }
            let count = rng.random_range(1..=p.multi_max_breaks);
            let changes = spaced_times(&mut rng, count, p.t_max, p.multi_min_spacing)?;
            let blocks = contiguous_blocks(n, p.activity_blocks);
            let busy_first = rng.random_bool(0.5);
            let regimes = (0..=count)
                .map(|k| {
                    let f = if (k % 2 == 0) == busy_first { p.activity_factor } else { 1.0 };
                    RegimeSpec::new(1.0, blocks.clone(), f * p.activity_intra_rate, f * p.activity_inter_rate, p.mean_link_duration)
                })
                .collect::<Result<Vec<_>>>()?;
            (changes, regimes)
        }
    };
    let mut boundaries = vec![0.0];
    boundaries.extend_from_slice(&changes);
    boundaries.push(p.t_max);
    let stream = generate_piecewise(&boundaries, &regimes, &mut rng)?;
    Ok(BenchmarkSample { stream, true_changepoints: changes, label: family.to_string(), seed })
}

/// Train and test samples of one family. Each sample depends only on
/// `(seed, family, split, index)`.
pub fn make_benchmark(
    family: Family,
    params: &BenchmarkParams,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<Benchmark> {
    let build = |split: Split, count: usize| {
        (0..count).map(|i| make_sample(family, params, sample_seed(seed, family, split, i))).collect::<Result<Vec<_>>>()
    };
    Ok(Benchmark { family, train: build(Split::Train, n_train)?, test: build(Split::Test, n_test)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> BenchmarkParams {
        BenchmarkParams { node_count: 40, t_max: 80.0, change_margin: 16.0, multi_min_spacing: 8.0, ..Default::default() }
    }

    #[test]
    fn toy_path_examples() {
        let l40 = toy_path(4, 0).unwrap();
        let got: Vec<_> = l40.events().iter().map(|e| (e.alpha, e.omega, e.u, e.v)).collect();
        assert_eq!(got, vec![(0., 1., 0, 1), (1., 2., 1, 2), (2., 3., 2, 3)]);
        let l42 = toy_path(4, 2).unwrap();
        assert!(l42.events().iter().all(|e| e.alpha == 0.0 && e.omega == 3.0));
        assert_eq!(l42.events().len(), 3);
        assert!(toy_path(4, 3).is_err());
        assert!(toy_path(1, 0).is_err());
        for k in 0..=8 {
            let fp = toy_path(10, k).unwrap().footprint(0.0, 9.0, false).unwrap();
            assert_eq!(fp.edges(), (0..9).map(|i| (i, i + 1)).collect::<Vec<_>>().as_slice());
        }
    }

    #[test]
    fn temporal_cycle_shape() {
        let c = temporal_cycle();
        assert_eq!(c.temporal_grid().times(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(c.footprint(0.0, 3.0, false).unwrap().edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn separate_blocks_never_connect() {
        let r = RegimeSpec::new(50.0, contiguous_blocks(40, 4), 0.2, 0.0, 1.0).unwrap();
        let s = generate_stream(&[r], 3).unwrap();
        assert!(s.true_changepoints.is_empty());
        let comps = s.stream.footprint(0.0, 50.0, false).unwrap().components();
        assert!(comps.len() >= 4);
        assert!(comps.iter().all(|c| c.iter().all(|&x| x / 10 == c[0] / 10)));
    }

    #[test]
    fn generation_is_deterministic() {
        let r = RegimeSpec::new(20.0, contiguous_blocks(30, 3), 0.1, 0.01, 1.0).unwrap();
        let a = generate_stream(&[r.clone(), r.clone()], 42).unwrap();
        let b = generate_stream(&[r.clone(), r.clone()], 42).unwrap();
        let c = generate_stream(&[r.clone(), r], 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.stream, c.stream);
        assert_eq!(a.true_changepoints, vec![20.0]);
        for fam in Family::ALL {
            let x = make_benchmark(fam, &small_params(), 2, 3, 9).unwrap();
            let y = make_benchmark(fam, &small_params(), 2, 3, 9).unwrap();
            assert_eq!(x, y);
            assert_eq!((x.train.len(), x.test.len()), (2, 3));
        }
    }

    #[test]
    fn sample_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for fam in Family::ALL {
            for split in [Split::Train, Split::Test] {
                for i in 0..50 {
                    assert!(seen.insert(sample_seed(7, fam, split, i)));
                }
            }
        }
    }

    #[test]
    fn arrival_counts_match_the_poisson_mean() {
        // pairs are independent, so the total count over all pairs is Poisson
        let n = 30;
        let r = RegimeSpec::new(100.0, contiguous_blocks(n, 3), 0.05, 0.005, 0.2).unwrap();
        let (intra, inter) = pair_counts(&r.block_assignment);
        for seed in 0..20 {
            let s = generate_stream(&[r.clone()], seed).unwrap().stream;
            let blocks = &r.block_assignment;
            let count_intra = s.events().iter().filter(|e| blocks[e.u] == blocks[e.v]).count() as f64;
            let count_inter = s.events().len() as f64 - count_intra;
            // merging of overlapping links only lowers counts slightly at these rates
            for (got, mean) in [(count_intra, intra as f64 * 0.05 * 100.0), (count_inter, inter as f64 * 0.005 * 100.0)] {
                assert!((got - mean).abs() < 5.0 * mean.sqrt(), "seed {seed}: {got} vs {mean}");
            }
        }
    }

    #[test]
    fn community_regimes_are_balanced() {
        let p = BenchmarkParams::default();
        for (b1, b2) in [(p.community_blocks_coarse, p.community_blocks_fine), (4, 5), (3, 7)] {
            let r = |b| RegimeSpec::balanced(1.0, contiguous_blocks(200, b), 150.0, 0.1, 1.0).unwrap().expected_link_rate();
            assert!((r(b1) - r(b2)).abs() / r(b1) < 0.05);
        }
    }

    #[test]
    fn family_samples_respect_their_shapes() {
        let p = small_params();
        for seed in 0..30 {
            let a = make_sample(Family::ActivityBench, &p, seed).unwrap();
            assert_eq!(a.true_changepoints.len(), 1);
            let tau = a.true_changepoints[0];
            assert!((16.0..=64.0).contains(&tau));
            assert_eq!(a.stream.t_max(), 80.0);
            let m = make_sample(Family::MultiBench, &p, seed).unwrap();
            let c = &m.true_changepoints;
            assert!((1..=4).contains(&c.len()));
            assert!(c[0] >= 8.0 && *c.last().unwrap() <= 72.0);
            assert!(c.windows(2).all(|w| w[1] - w[0] >= 8.0));
        }
    }

    #[test]
    fn merge_split_block_counts() {
        assert_eq!(MergeSplitPattern::A.block_counts(), [4, 2, 1]);
        assert_eq!(MergeSplitPattern::B.block_counts(), [4, 1, 2]);
        assert!("z".parse::<MergeSplitPattern>().is_err());
        let s = merge_split_stream(MergeSplitPattern::A, 0.02, 1).unwrap();
        assert_eq!(s.true_changepoints, vec![100.0, 200.0]);
        assert_eq!(s.stream.node_count(), 100);
        assert_eq!(s.stream.t_max(), 300.0);
        // before the first change only the four quarter blocks interact
        let early = s.stream.footprint(0.0, 99.0, false).unwrap();
        assert!(early.edges().iter().all(|&(u, v)| u / 25 == v / 25));
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("ActivityBench".parse::<Family>().unwrap(), Family::ActivityBench);
        assert_eq!("multi".parse::<Family>().unwrap(), Family::MultiBench);
        assert!("other".parse::<Family>().is_err());
    }
}
