//! Deterministic label-stratified downsampling.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::RawExample;
use crate::error::{Error, Result};

/// Split `full` into disjoint (train, val) of the requested sizes,
/// stratified by label where possible and reproducible per seed.
pub fn make_downsampled_split(
    full: &[RawExample],
    n_train: usize,
    n_val: usize,
    seed: u64,
) -> Result<(Vec<RawExample>, Vec<RawExample>)> {
    if full.len() < n_train + n_val {
        return Err(Error::data(format!(
            "need {} examples for a {n_train}/{n_val} split, have {}",
            n_train + n_val,
            full.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, ex) in full.iter().enumerate() {
        by_label.entry(ex.label).or_default().push(i);
    }
    for indices in by_label.values_mut() {
        indices.shuffle(&mut rng);
    }

    let total = full.len();
    let take = |by_label: &mut BTreeMap<usize, Vec<usize>>, want: usize| -> Vec<usize> {
        // largest-remainder apportionment over class sizes
        let sizes: Vec<(usize, usize)> =
            by_label.iter().map(|(&l, v)| (l, v.len())).collect();
        let available: usize = sizes.iter().map(|&(_, s)| s).sum();
        let mut quota: Vec<(usize, usize, f64)> = sizes
            .iter()
            .map(|&(l, s)| {
                let exact = want as f64 * s as f64 / available.max(1) as f64;
                (l, exact as usize, exact - (exact as usize) as f64)
            })
            .collect();
        let mut assigned: usize = quota.iter().map(|&(_, q, _)| q).sum();
        quota.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
        let mut idx = 0;
        while assigned < want {
            let label = quota[idx % quota.len()].0;
            if by_label[&label].len() > quota.iter().find(|q| q.0 == label).unwrap().1 {
                quota.iter_mut().find(|q| q.0 == label).unwrap().1 += 1;
                assigned += 1;
            }
            idx += 1;
        }
        let mut out = Vec::with_capacity(want);
        for (label, count, _) in quota {
            let pool = by_label.get_mut(&label).unwrap();
            let count = count.min(pool.len());
            out.extend(pool.drain(..count));
        }
        // top up from whatever remains when some class ran dry
        let mut labels: Vec<usize> = by_label.keys().copied().collect();
        labels.sort_unstable();
        'outer: while out.len() < want {
            for &label in &labels {
                let pool = by_label.get_mut(&label).unwrap();
                if !pool.is_empty() {
                    out.push(pool.remove(0));
                    if out.len() == want {
                        break 'outer;
                    }
                }
            }
        }
        out
    };

    let _ = total;
    let train_idx = take(&mut by_label, n_train);
    let val_idx = take(&mut by_label, n_val);
    let train = train_idx.iter().map(|&i| full[i].clone()).collect();
    let val = val_idx.iter().map(|&i| full[i].clone()).collect();
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize) -> Vec<RawExample> {
        (0..n)
            .map(|i| RawExample::new(format!("e{i}"), format!("text {i}"), i % 2))
            .collect()
    }

    #[test]
    fn sizes_and_disjointness() {
        let full = corpus(600);
        let (train, val) = make_downsampled_split(&full, 400, 100, 9).unwrap();
        assert_eq!(train.len(), 400);
        assert_eq!(val.len(), 100);
        let train_ids: std::collections::HashSet<_> = train.iter().map(|e| &e.id).collect();
        assert!(val.iter().all(|e| !train_ids.contains(&e.id)));
    }

    #[test]
    fn balanced_source_stays_balanced() {
        let full = corpus(600);
        let (train, _) = make_downsampled_split(&full, 401, 100, 3).unwrap();
        let zeros = train.iter().filter(|e| e.label == 0).count();
        let ones = train.len() - zeros;
        assert!((zeros as i64 - ones as i64).abs() <= 1, "{zeros} vs {ones}");
    }

    #[test]
    fn deterministic_per_seed() {
        let full = corpus(100);
        let a = make_downsampled_split(&full, 60, 20, 5).unwrap();
        let b = make_downsampled_split(&full, 60, 20, 5).unwrap();
        assert_eq!(a, b);
        let c = make_downsampled_split(&full, 60, 20, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn insufficient_data_is_an_error() {
        let full = corpus(10);
        assert!(make_downsampled_split(&full, 8, 3, 0).is_err());
    }
}
