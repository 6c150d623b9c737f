//! Offline change-point detection with a piecewise-affine cost.
//!
//! Both searches are exact dynamic programs over suffixes. The cost of every
//! segment `[a, b)` is produced by extending `b` one sample at a time from a
//! fixed start with running co-moments, so no Γ×Γ cost table is stored.
//! Among equally good segmentations the lexicographically smallest breakpoint
//! vector is returned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack under which two objective values count as tied.
const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    values: Vec<f64>,
    /// Fit abscissa; sample indices when absent.
    times: Option<Vec<f64>>,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::arg(format!("a signal needs at least 2 samples, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("signal has non-finite values"));
        }
        Ok(Signal { values, times: None })
    }

    /// Signal whose affine fits use `times` as abscissa.
    pub fn with_times(values: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(values)?;
        if times.len() != s.values.len() {
            return Err(Error::arg("times and values differ in length"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::arg("signal times must be strictly increasing"));
        }
        s.times = Some(times);
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> Option<&[f64]> {
        self.times.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn x(&self, i: usize) -> f64 {
        self.times.as_ref().map_or(i as f64, |t| t[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Strictly increasing, inside `(0, Γ)`.
    pub breakpoints: Vec<usize>,
    /// Sum of segment costs, penalty excluded.
    pub total_cost: f64,
    pub penalty_beta: Option<f64>,
}

/// Running least-squares state of `y ~ x` on a growing segment.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mx: f64,
    my: f64,
    cxx: f64,
    cxy: f64,
    cyy: f64,
}

impl Moments {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        let dx = x - self.mx;
        let dy = y - self.my;
        self.mx += dx / self.n;
        self.my += dy / self.n;
        self.cxx += dx * (x - self.mx);
        self.cxy += dx * (y - self.my);
        self.cyy += dy * (y - self.my);
    }

    fn rss(&self) -> f64 {
        let r = if self.cxx > 0.0 { self.cyy - self.cxy * self.cxy / self.cxx } else { self.cyy };
        r.max(0.0)
    }
}

/// Residual sum of squares of the least-squares affine fit on `y[a..b]`.
pub fn linear_cost(signal: &Signal, a: usize, b: usize, min_size: usize) -> Result<f64> {
    if !(a < b && b <= signal.len()) {
        return Err(Error::arg(format!("segment [{a}, {b}) outside [0, {})", signal.len())));
    }
    if b - a < min_size {
        return Err(Error::arg(format!("segment [{a}, {b}) shorter than min_size {min_size}")));
    }
    // two-pass form: centre first, then accumulate
    let n = (b - a) as f64;
    let mx = (a..b).map(|i| signal.x(i)).sum::<f64>() / n;
    let my = signal.values[a..b].iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in a..b {
        let (dx, dy) = (signal.x(i) - mx, signal.values[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let r = if sxx > 0.0 { syy - sxy * sxy / sxx } else { syy };
    Ok(r.max(0.0))
}

/// Calls `f(b, cost(a, b))` for every admissible end `b` in increasing order.
fn for_each_end(signal: &Signal, a: usize, min_size: usize, mut f: impl FnMut(usize, f64)) {
    let mut m = Moments::default();
    for b in (a + 1)..=signal.len() {
        m.push(signal.x(b - 1), signal.values[b - 1]);
        if b - a >= min_size {
            f(b, m.rss());
        }
    }
}

fn tied(x: f64, best: f64) -> bool {
    x <= best + TIE_TOLERANCE * (1.0 + best.abs())
}

fn check_min_size(min_size: usize) -> Result<()> {
    if min_size == 0 {
        return Err(Error::arg("min_size must be at least 1"));
    }
    Ok(())
}

/// Optimal segmentation with exactly `k` breakpoints.
pub fn segment_fixed_k(signal: &Signal, k: usize, min_size: usize) -> Result<Segmentation> {
    check_min_size(min_size)?;
    let gamma = signal.len();
    if k == 0 {
        return Err(Error::arg("the number of breakpoints must be at least 1"));
    }
    if gamma < (k + 1) * min_size {
        return Err(Error::arg(format!(
            "{k} breakpoints with min_size {min_size} need at least {} samples, signal has {gamma}",
            (k + 1) * min_size
        )));
    }
    // best[j][a]: cheapest split of y[a..] into j + 1 segments
    let mut best = vec![vec![f64::INFINITY; gamma + 1]; k + 1];
    for a in 0..gamma {
        for_each_end(signal, a, min_size, |b, c| {
            if b == gamma {
                best[0][a] = c;
            }
        });
    }
    for j in 1..=k {
        let (done, rest) = best.split_at_mut(j);
        let prev = &done[j - 1];
        let cur = &mut rest[0];
        for a in 0..gamma {
            let mut v = f64::INFINITY;
            for_each_end(signal, a, min_size, |b, c| {
                if b < gamma {
                    v = v.min(c + prev[b]);
                }
            });
            cur[a] = v;
        }
    }
    let mut breakpoints = Vec::with_capacity(k);
    let (mut a, mut total) = (0, 0.0);
    for j in (1..=k).rev() {
        let target = best[j][a];
        let mut choice = None;
        for_each_end(signal, a, min_size, |b, c| {
            if choice.is_none() && b < gamma && tied(c + best[j - 1][b], target) {
                choice = Some((b, c));
            }
        });
        let (b, c) = choice.ok_or_else(|| Error::Numerical("segmentation backtrack failed".into()))?;
        breakpoints.push(b);
        total += c;
        a = b;
    }
    total += linear_cost(signal, a, gamma, min_size)?;
    Ok(Segmentation { breakpoints, total_cost: total, penalty_beta: None })
}

/// Optimal segmentation under the objective `cost + beta · |breakpoints|`.
pub fn segment_penalized(signal: &Signal, beta: f64, min_size: usize) -> Result<Segmentation> {
    check_min_size(min_size)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::arg(format!("penalty must be positive, got {beta}")));
    }
    let gamma = signal.len();
    if gamma < min_size {
        return Err(Error::arg(format!("signal of {gamma} samples is shorter than min_size {min_size}")));
    }
    // f[a]: penalized optimum on y[a..]
    let mut f = vec![f64::INFINITY; gamma + 1];
    for a in (0..gamma).rev() {
        let mut v = f64::INFINITY;
        for_each_end(signal, a, min_size, |b, c| {
            let tail = if b == gamma { 0.0 } else { beta + f[b] };
            v = v.min(c + tail);
        });
        f[a] = v;
    }
    let mut breakpoints = Vec::new();
    let (mut a, mut total) = (0, 0.0);
    while a < gamma {
        let target = f[a];
        let last = linear_cost(signal, a, gamma, min_size).ok().filter(|&c| tied(c, target));
        if let Some(c) = last {
            total += c;
            break;
        }
        let mut choice = None;
        for_each_end(signal, a, min_size, |b, c| {
            if choice.is_none() && b < gamma && tied(c + beta + f[b], target) {
                choice = Some((b, c));
            }
        });
        let (b, c) = choice.ok_or_else(|| Error::Numerical("segmentation backtrack failed".into()))?;
        breakpoints.push(b);
        total += c;
        a = b;
    }
    Ok(Segmentation { breakpoints, total_cost: total, penalty_beta: Some(beta) })
}

/// Symmetric Hausdorff distance between two non-empty index sets.
pub fn hausdorff(truth: &[usize], prediction: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptySet("truth"));
    }
    if prediction.is_empty() {
        return Err(Error::EmptySet("prediction"));
    }
    let directed = |from: &[usize], to: &[usize]| {
        from.iter().map(|&x| to.iter().map(|&y| x.abs_diff(y)).min().unwrap()).max().unwrap()
    };
    Ok(directed(truth, prediction).max(directed(prediction, truth)) as f64)
}

/// Hausdorff distance, with an empty prediction scored as the worst case `Γ`.
pub fn hausdorff_score(truth: &[usize], prediction: &[usize], gamma: usize) -> Result<f64> {
    if prediction.is_empty() && !truth.is_empty() {
        return Ok(gamma as f64);
    }
    hausdorff(truth, prediction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    /// Least-squares residual through an SVD solve of the design matrix.
    fn rss_oracle(x: &[f64], y: &[f64]) -> f64 {
        let a = DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let b = DVector::from_column_slice(y);
        let coef = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
        (a * coef - b).norm_squared()
    }

    fn cost_of(sig: &Signal, bps: &[usize], min_size: usize) -> f64 {
        let mut edges = vec![0];
        edges.extend_from_slice(bps);
        edges.push(sig.len());
        edges.windows(2).map(|w| linear_cost(sig, w[0], w[1], min_size).unwrap()).sum()
    }

    /// Every admissible breakpoint vector, in lexicographic order.
    fn all_segmentations(gamma: usize, min_size: usize, max_breaks: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, gamma: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            out.push(cur.clone());
            if left == 0 {
                return;
            }
            for b in (start + m)..=gamma.saturating_sub(m) {
                cur.push(b);
                rec(b, gamma, m, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, gamma, min_size, max_breaks, &mut Vec::new(), &mut out);
        out.sort();
        out
    }

    /// Lexicographically first minimizer under the same tie rule.
    fn argmin(cands: impl Iterator<Item = (Vec<usize>, f64)>) -> (Vec<usize>, f64) {
        let all: Vec<_> = cands.collect();
        let best = all.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        all.into_iter().find(|c| tied(c.1, best)).unwrap()
    }

    #[test]
    fn cost_examples() {
        let s = Signal::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(linear_cost(&s, 0, 3, 2).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let line = Signal::new((0..20).map(|i| 3.0 - 0.7 * i as f64).collect()).unwrap();
        assert!(linear_cost(&line, 2, 17, 2).unwrap() < 1e-9);
        let flat = Signal::new(vec![4.0; 6]).unwrap();
        assert_eq!(linear_cost(&flat, 0, 6, 2).unwrap(), 0.0);
        assert!(linear_cost(&flat, 3, 4, 2).is_err());
        assert!(linear_cost(&flat, 3, 7, 2).is_err());
    }

    #[test]
    fn step_signal_splits_at_the_step() {
        let s = Signal::new([vec![1.0; 12], vec![5.0; 9]].concat()).unwrap();
        let seg = segment_fixed_k(&s, 1, 2).unwrap();
        assert_eq!(seg.breakpoints, vec![12]);
        assert!(seg.total_cost < 1e-12);
    }

    #[test]
    fn infeasible_k_fails() {
        let s = Signal::new(vec![0.0; 7]).unwrap();
        assert!(segment_fixed_k(&s, 3, 2).is_err());
        assert!(segment_fixed_k(&s, 2, 2).is_ok());
        assert!(segment_fixed_k(&s, 0, 2).is_err());
    }

    #[test]
    fn constant_signal_has_no_penalized_breaks() {
        let s = Signal::new(vec![2.5; 30]).unwrap();
        for beta in [1e-6, 1.0, 8.0] {
            let seg = segment_penalized(&s, beta, 2).unwrap();
            assert!(seg.breakpoints.is_empty());
            assert_eq!(seg.penalty_beta, Some(beta));
        }
        assert!(segment_penalized(&s, 0.0, 2).is_err());
    }

    #[test]
    fn ties_resolve_to_the_earliest_vector() {
        // every split of a line costs zero
        let s = Signal::new((0..10).map(|i| i as f64).collect()).unwrap();
        assert_eq!(segment_fixed_k(&s, 2, 3).unwrap().breakpoints, vec![3, 6]);
    }

    #[test]
    fn noisy_piecewise_linear_recovers_slope_changes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let slopes = [1.0, -2.0, 0.5, 3.0];
        let truth = [10, 20, 30];
        let mut y = Vec::new();
        let mut level = 0.0;
        for i in 0..40 {
            let seg = truth.iter().filter(|&&t| i >= t).count();
            level += slopes[seg];
            y.push(level + rng.random_range(-0.05..0.05));
        }
        let sig = Signal::new(y).unwrap();
        let seg = segment_fixed_k(&sig, 3, 2).unwrap();
        for (b, t) in seg.breakpoints.iter().zip(truth) {
            assert!(b.abs_diff(t) <= 1, "{:?}", seg.breakpoints);
        }
        let (oracle, _) = argmin(
            all_segmentations(40, 2, 3).into_iter().filter(|v| v.len() == 3).map(|v| {
                let c = cost_of(&sig, &v, 2);
                (v, c)
            }),
        );
        assert_eq!(seg.breakpoints, oracle);
    }

    #[test]
    fn time_abscissa_changes_the_fit() {
        let y = vec![0.0, 1.0, 2.0, 3.0];
        let t = vec![0.0, 1.0, 2.0, 10.0];
        let by_index = Signal::new(y.clone()).unwrap();
        let by_time = Signal::with_times(y.clone(), t.clone()).unwrap();
        assert!(linear_cost(&by_index, 0, 4, 2).unwrap() < 1e-12);
        assert_relative_eq!(linear_cost(&by_time, 0, 4, 2).unwrap(), rss_oracle(&t, &y), epsilon = 1e-12);
        assert!(Signal::with_times(y, vec![0.0, 1.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff(&[3, 9], &[3, 9]).unwrap(), 0.0);
        assert_eq!(hausdorff(&[10], &[12]).unwrap(), 2.0);
        assert_eq!(hausdorff(&[10, 50], &[12]).unwrap(), 38.0);
        assert!(matches!(hausdorff(&[1], &[]), Err(Error::EmptySet(_))));
        assert_eq!(hausdorff_score(&[10], &[], 50).unwrap(), 50.0);
    }

    fn signal(max_len: usize) -> impl Strategy<Value = Signal> {
        prop::collection::vec(-5.0f64..5.0, 6..=max_len).prop_map(|v| Signal::new(v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn welford_matches_two_pass_and_oracle(s in signal(30), a in 0usize..30, len in 1usize..30) {
            let a = a % s.len();
            let b = (a + len).min(s.len());
            let mut got = None;
            for_each_end(&s, a, 1, |e, c| if e == b { got = Some(c) });
            let two_pass = linear_cost(&s, a, b, 1).unwrap();
            let xs: Vec<f64> = (a..b).map(|i| i as f64).collect();
            let scale = 1.0 + s.values()[a..b].iter().map(|v| v * v).sum::<f64>();
            prop_assert!((got.unwrap() - two_pass).abs() < 1e-9 * scale);
            prop_assert!((two_pass - rss_oracle(&xs, &s.values()[a..b])).abs() < 1e-9 * scale);
        }

        #[test]
        fn fixed_k_matches_exhaustive_search(s in signal(40), k in 1usize..=3, m in 2usize..=4) {
            prop_assume!(s.len() >= (k + 1) * m);
            let seg = segment_fixed_k(&s, k, m).unwrap();
            let (oracle, cost) = argmin(
                all_segmentations(s.len(), m, k).into_iter().filter(|v| v.len() == k).map(|v| {
                    let c = cost_of(&s, &v, m);
                    (v, c)
                }),
            );
            prop_assert!(tied(seg.total_cost, cost) && tied(cost, seg.total_cost));
            prop_assert_eq!(&seg.breakpoints, &oracle);
            prop_assert!((seg.total_cost - cost_of(&s, &seg.breakpoints, m)).abs() < 1e-9);
        }

        #[test]
        fn penalized_matches_exhaustive_search(s in signal(40), beta in 0.01f64..20.0) {
            let m = if s.len() <= 18 { 2 } else { 5 };
            let seg = segment_penalized(&s, beta, m).unwrap();
            let (oracle, obj) = argmin(all_segmentations(s.len(), m, usize::MAX).into_iter().map(|v| {
                let c = cost_of(&s, &v, m) + beta * v.len() as f64;
                (v, c)
            }));
            let got = seg.total_cost + beta * seg.breakpoints.len() as f64;
            prop_assert!(tied(got, obj) && tied(obj, got));
            prop_assert_eq!(&seg.breakpoints, &oracle);
            prop_assert!(seg.breakpoints.windows(2).all(|w| w[1] - w[0] >= m));
        }

        #[test]
        fn break_count_falls_as_penalty_grows(s in signal(40)) {
            let counts: Vec<usize> = [0.01, 0.1, 1.0, 4.0, 16.0, 64.0]
                .iter()
                .map(|&b| segment_penalized(&s, b, 2).unwrap().breakpoints.len())
                .collect();
            prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", counts);
        }

        #[test]
        fn hausdorff_is_a_metric(
            a in prop::collection::btree_set(0usize..100, 1..6),
            b in prop::collection::btree_set(0usize..100, 1..6),
            c in prop::collection::btree_set(0usize..100, 1..6),
        ) {
            let (a, b, c): (Vec<_>, Vec<_>, Vec<_>) = (a.into_iter().collect(), b.into_iter().collect(), c.into_iter().collect());
            prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(hausdorff(&a, &b).unwrap(), hausdorff(&b, &a).unwrap());
            prop_assert!(hausdorff(&a, &c).unwrap() <= hausdorff(&a, &b).unwrap() + hausdorff(&b, &c).unwrap());
        }
    }
}
