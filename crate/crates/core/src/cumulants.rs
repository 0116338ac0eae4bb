//! Set partitions, the moment-to-cumulant partition formula, and empirical
//! cumulant estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_PARTITION_ORDER: usize = 12;
const JACKKNIFE_BLOCKS: usize = 50;

/// A partition of `{1, …, m}` into nonempty disjoint blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Builds a partition from a restricted-growth string (`rgs[0] = 0`,
    /// `rgs[i] ≤ 1 + max(rgs[..i])`), labelling elements from 1.
    fn from_rgs(rgs: &[usize], nblocks: usize) -> Self {
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i + 1);
        }
        SetPartition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// `(-1)^{n-1} (n-1)!`, the weight of an `n`-block partition.
pub fn partition_weight(n: usize) -> i128 {
    let fact: i128 = (1..n as i128).product();
    if n % 2 == 1 {
        fact
    } else {
        -fact
    }
}

fn check_order(m: usize) -> Result<()> {
    if (1..=MAX_PARTITION_ORDER).contains(&m) {
        Ok(())
    } else {
        Err(Error::invalid(format!("partition order must lie in 1..={MAX_PARTITION_ORDER}, got {m}")))
    }
}

/// Calls `visit(block_sizes)` once per partition of `{1, …, m}`, in
/// restricted-growth-string order, without materializing the blocks.
pub fn for_each_partition_shape(m: usize, mut visit: impl FnMut(&[usize])) -> Result<()> {
    for_each_rgs(m, |rgs, nblocks| {
        let mut sizes = [0usize; MAX_PARTITION_ORDER];
        for &b in rgs {
            sizes[b] += 1;
        }
        visit(&sizes[..nblocks]);
    })
}

fn for_each_rgs(m: usize, mut visit: impl FnMut(&[usize], usize)) -> Result<()> {
    check_order(m)?;
    let mut rgs = vec![0usize; m];
    // prefix_max[i] = max(rgs[..=i])
    let mut prefix_max = vec![0usize; m];
    loop {
        visit(&rgs, prefix_max[m - 1] + 1);
        // Rightmost position that can still grow.
        let mut i = m - 1;
        loop {
            if i == 0 {
                return Ok(());
            }
            if rgs[i] <= prefix_max[i - 1] {
                break;
            }
            i -= 1;
        }
        rgs[i] += 1;
        prefix_max[i] = prefix_max[i - 1].max(rgs[i]);
        for j in i + 1..m {
            rgs[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
}

/// All partitions of `{1, …, m}`, each exactly once.
pub fn partitions(m: usize) -> Result<Vec<SetPartition>> {
    let mut out = Vec::new();
    for_each_rgs(m, |rgs, n| out.push(SetPartition::from_rgs(rgs, n)))?;
    Ok(out)
}

/// `κ_m` of a single variable from its raw moments `μ_1, …, μ_m` by the
/// partition formula `Σ_π (-1)^{|π|-1}(|π|-1)! Π_{B∈π} μ_{|B|}`.
pub fn cumulant_from_moments(moments: &[f64]) -> Result<f64> {
    let m = moments.len();
    let mut total = 0.0;
    for_each_partition_shape(m, |sizes| {
        let prod: f64 = sizes.iter().map(|&k| moments[k - 1]).product();
        total += partition_weight(sizes.len()) as f64 * prod;
    })?;
    Ok(total)
}

/// Exact left-hand sides of the three partition identities:
/// `Σ_π w(π)`, `Σ_π w(π) Σ_i |B_i|²`, `Σ_π w(π) Σ_{i≠j} |B_i||B_j|`.
pub fn cmb_identity_sums(m: usize) -> Result<(i128, i128, i128)> {
    let (mut s1, mut s2, mut s3) = (0i128, 0i128, 0i128);
    for_each_partition_shape(m, |sizes| {
        let w = partition_weight(sizes.len());
        let sq: i128 = sizes.iter().map(|&k| (k * k) as i128).sum();
        let total = m as i128;
        // Σ_{i≠j} |B_i||B_j| = m² − Σ |B_i|²
        s1 += w;
        s2 += w * sq;
        s3 += w * (total * total - sq);
    })?;
    Ok((s1, s2, s3))
}

/// Stirling numbers of the second kind `S(m, n)` for `n ≤ m`.
pub fn stirling2(m: usize) -> Vec<u128> {
    let mut row = vec![1u128];
    for i in 1..=m {
        let mut next = vec![0u128; i + 1];
        for (k, slot) in next.iter_mut().enumerate().skip(1) {
            let keep = if k < i { k as u128 * row[k] } else { 0 };
            *slot = keep + row[k - 1];
        }
        row = next;
    }
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantEstimate {
    pub order: usize,
    pub value: f64,
    /// Delete-a-block jackknife standard error.
    pub std_error: f64,
    /// Orders above four use the biased central-moment plug-in.
    pub biased: bool,
}

/// Cumulants of orders `1..=max_order` from central power sums.
fn cumulants_from_power_sums(n: f64, s: &[f64; 7], max_order: usize) -> Vec<f64> {
    // s[j] = Σ (x - c)^j for a fixed shift c; recentre on the sample mean.
    let delta = s[1] / n;
    let mut raw = [0.0; 7];
    for (j, r) in raw.iter_mut().enumerate() {
        *r = s[j] / n;
    }
    let mut central = [0.0; 7];
    central[0] = 1.0;
    for k in 1..=max_order.max(4) {
        let mut acc = 0.0;
        for j in 0..=k {
            acc += binomial(k, j) * raw[j] * (-delta).powi((k - j) as i32);
        }
        central[k] = acc;
    }
    central[1] = 0.0;
    let m2 = central[2];
    let m3 = central[3];
    let m4 = central[4];
    let mut out = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        let v = match order {
            1 => delta,
            2 => n / (n - 1.0) * m2,
            3 => n * n / ((n - 1.0) * (n - 2.0)) * m3,
            4 => {
                n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2)
                    / ((n - 1.0) * (n - 2.0) * (n - 3.0))
            }
            _ => cumulant_from_moments(&central[1..=order]).expect("order <= 6"),
        };
        out.push(v);
    }
    // The shift only enters order one.
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Empirical cumulants of orders `1..=max_order` (≤ 6): k-statistics up to
/// order four, central-moment plug-in for orders five and six, with
/// jackknife standard errors over 50 contiguous blocks.
pub fn empirical_cumulants(samples: &[f64], max_order: usize) -> Result<Vec<CumulantEstimate>> {
    if !(1..=6).contains(&max_order) {
        return Err(Error::invalid(format!("max_order must lie in 1..=6, got {max_order}")));
    }
    let n = samples.len();
    let required = 10 * (1usize << max_order);
    if n < required {
        return Err(Error::InsufficientSamples { required, got: n });
    }
    let shift = samples.iter().sum::<f64>() / n as f64;
    let blocks = JACKKNIFE_BLOCKS.min(n);
    let mut block_sums = vec![[0.0f64; 7]; blocks];
    let mut block_len = vec![0usize; blocks];
    for (i, &x) in samples.iter().enumerate() {
        let b = i * blocks / n;
        let d = x - shift;
        let mut p = 1.0;
        for j in 0..7 {
            block_sums[b][j] += p;
            p *= d;
        }
        block_len[b] += 1;
    }
    let mut total = [0.0f64; 7];
    for bs in &block_sums {
        for j in 0..7 {
            total[j] += bs[j];
        }
    }
    let mut full = cumulants_from_power_sums(n as f64, &total, max_order);
    full[0] += shift;

    let mut loo: Vec<Vec<f64>> = Vec::with_capacity(blocks);
    for (b, bs) in block_sums.iter().enumerate() {
        let mut s = total;
        for j in 0..7 {
            s[j] -= bs[j];
        }
        let mut est = cumulants_from_power_sums((n - block_len[b]) as f64, &s, max_order);
        est[0] += shift;
        loo.push(est);
    }
    let g = blocks as f64;
    let out = (0..max_order)
        .map(|k| {
            let mean = loo.iter().map(|e| e[k]).sum::<f64>() / g;
            let ss = loo.iter().map(|e| (e[k] - mean).powi(2)).sum::<f64>();
            CumulantEstimate {
                order: k + 1,
                value: full[k],
                std_error: ((g - 1.0) / g * ss).sqrt(),
                biased: k + 1 > 4,
            }
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Poisson, StandardNormal};

    fn bell(m: usize) -> u128 {
        stirling2(m).iter().sum()
    }

    #[test]
    fn partition_counts() {
        assert_eq!(partitions(1).unwrap().len(), 1);
        assert_eq!(partitions(4).unwrap().len(), 15);
        assert_eq!(partitions(8).unwrap().len(), 4140);
        // Bell recurrence B(n+1) = Σ C(n,k) B(k) as an independent oracle.
        let mut b = vec![1u128];
        for n in 0..12usize {
            let next: u128 = (0..=n).map(|k| binomial(n, k).round() as u128 * b[k]).sum();
            b.push(next);
        }
        for m in 1..=12 {
            let mut count = 0u128;
            for_each_partition_shape(m, |_| count += 1).unwrap();
            assert_eq!(count, b[m], "m={m}");
            assert_eq!(bell(m), b[m]);
        }
        assert!(partitions(13).is_err());
        assert!(partitions(0).is_err());
    }

    #[test]
    fn partitions_are_valid_and_distinct() {
        let ps = partitions(6).unwrap();
        let set: std::collections::HashSet<_> = ps.iter().cloned().collect();
        assert_eq!(set.len(), ps.len());
        for p in &ps {
            let mut all: Vec<usize> = p.blocks().iter().flatten().copied().collect();
            all.sort();
            assert_eq!(all, (1..=6).collect::<Vec<_>>());
            assert!(p.blocks().iter().all(|b| !b.is_empty()));
        }
    }

    #[test]
    fn cumulant_from_moments_examples() {
        let a: f64 = 1.7;
        let mom: Vec<f64> = (1..=3).map(|k| a.powi(k)).collect();
        assert!(cumulant_from_moments(&mom).unwrap().abs() < 1e-12);
        assert!(cumulant_from_moments(&[0.0, 1.0, 0.0, 3.0]).unwrap().abs() < 1e-15);
        assert!((cumulant_from_moments(&[1.0, 2.0, 5.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cumulant_from_moments(&[1.0, 2.0, 5.0, 15.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cmb_identities() {
        for m in 3..=10 {
            assert_eq!(cmb_identity_sums(m).unwrap(), (0, 0, 0), "m={m}");
        }
        // m = 2 is outside the identity's range; the weight-one sum still vanishes.
        let (s1, s2, s3) = cmb_identity_sums(2).unwrap();
        assert_eq!(s1, 0);
        assert_eq!((s2, s3), (2, -2));
    }

    fn recursive_cumulant(mu: &[f64]) -> f64 {
        let m = mu.len();
        let mut kappa = vec![0.0; m + 1];
        for n in 1..=m {
            let mut v = mu[n - 1];
            for k in 1..n {
                v -= binomial(n - 1, k - 1) * kappa[k] * mu[n - k - 1];
            }
            kappa[n] = v;
        }
        kappa[m]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn partition_formula_matches_recursion(mu in prop::collection::vec(-2.0f64..2.0, 1..=8)) {
            let a = cumulant_from_moments(&mu).unwrap();
            let b = recursive_cumulant(&mu);
            let scale = mu.iter().map(|v| v.abs()).fold(1.0f64, f64::max).powi(mu.len() as i32);
            prop_assert!((a - b).abs() <= 1e-12 * scale * 1e3, "{} vs {}", a, b);
        }

        #[test]
        fn stirling_bound(m in 1usize..=12) {
            let s = stirling2(m);
            for (n, &count) in s.iter().enumerate().skip(1) {
                let bound = binomial(m, n) * (n as f64).powi((m - n) as i32);
                prop_assert!(count as f64 <= bound + 1e-9);
            }
        }

        #[test]
        fn affine_equivariance(a in 0.2f64..3.0, b in -5.0f64..5.0, seed in 0u64..1000) {
            let mut s = Stream::new(seed, 0);
            let xs: Vec<f64> = (0..2000).map(|_| s.std_exp()).collect();
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let kx = empirical_cumulants(&xs, 6).unwrap();
            let ky = empirical_cumulants(&ys, 6).unwrap();
            prop_assert!((ky[0].value - (a * kx[0].value + b)).abs() < 1e-9 * (1.0 + b.abs()));
            for m in 2..=6 {
                let want = a.powi(m as i32) * kx[m - 1].value;
                prop_assert!((ky[m - 1].value - want).abs() <= 1e-8 * want.abs().max(1e-6), "m={}", m);
            }
        }
    }

    #[test]
    fn constant_samples() {
        let xs = vec![2.5; 1000];
        let k = empirical_cumulants(&xs, 4).unwrap();
        assert_eq!(k[0].value, 2.5);
        for e in &k {
            assert_eq!(e.std_error, 0.0);
        }
        for e in &k[1..] {
            assert_eq!(e.value, 0.0);
        }
    }

    #[test]
    fn gaussian_and_poisson_samples() {
        let mut s = Stream::new(77, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.sample::<f64, _>(StandardNormal)).collect();
        let k = empirical_cumulants(&xs, 4).unwrap();
        assert!(k[2].value.abs() < 3.0 * k[2].std_error, "{:?}", k[2]);
        assert!(k[3].value.abs() < 3.0 * k[3].std_error, "{:?}", k[3]);
        assert!((k[1].value - 1.0).abs() < 3.0 * k[1].std_error);

        let pois = Poisson::new(2.0).unwrap();
        let ps: Vec<f64> = (0..1_000_000).map(|_| s.sample(pois)).collect();
        let k = empirical_cumulants(&ps, 4).unwrap();
        assert!((k[1].value - 2.0).abs() < 3.0 * k[1].std_error, "{:?}", k[1]);
        assert!((k[2].value - 2.0).abs() < 3.0 * k[2].std_error, "{:?}", k[2]);
    }

    #[test]
    fn k_statistics_are_unbiased_on_small_samples() {
        // Average of k4 over many samples of size 40 from Exp(1), whose κ4 = 6.
        let mut s = Stream::new(3, 0);
        let reps = 20_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..reps {
            let xs: Vec<f64> = (0..160).map(|_| s.std_exp()).collect();
            let k4 = empirical_cumulants(&xs, 4).unwrap()[3].value;
            acc += k4;
            acc2 += k4 * k4;
        }
        let mean = acc / reps as f64;
        let se = ((acc2 / reps as f64 - mean * mean) / reps as f64).sqrt();
        assert!((mean - 6.0).abs() < 3.5 * se, "{mean} ± {se}");
    }

    #[test]
    fn too_few_samples() {
        let xs = vec![0.0; 100];
        assert!(matches!(
            empirical_cumulants(&xs, 4),
            Err(Error::InsufficientSamples { required: 160, got: 100 })
        ));
    }
}
