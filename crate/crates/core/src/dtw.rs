//! Dynamic time warping between two real-valued sequences, exactly and via
//! the multiresolution coarsen–project–refine approximation.

use crate::{Error, Result};

/// Alignment cost plus the warping path that achieves it. The path starts at
/// (0, 0), ends at (n−1, m−1) and moves by (1,0), (0,1) or (1,1) steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub cost: f64,
    pub path: Vec<(usize, usize)>,
}

/// Pointwise distance: |p − q|.
pub fn local_cost(p: f64, q: f64) -> f64 {
    (p - q).abs()
}

fn min3(a: f64, b: f64, c: f64) -> f64 {
    a.min(b).min(c)
}

fn check_nonempty(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySequence);
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParam("sequences must be finite".into()));
    }
    Ok(())
}

/// Full-table dynamic programming:
/// `D(i,j) = d(x_i, y_j) + min(D(i−1,j−1), D(i−1,j), D(i,j−1))`.
/// Ties during backtracking prefer diagonal, then vertical, then horizontal.
pub fn dtw_exact(x: &[f64], y: &[f64]) -> Result<DtwResult> {
    check_nonempty(x, y)?;
    let (n, m) = (x.len(), y.len());
    let mut d = vec![0.0f64; n * m];
    let at = |i: usize, j: usize| i * m + j;

    for i in 0..n {
        for j in 0..m {
            let cost = local_cost(x[i], y[j]);
            d[at(i, j)] = cost
                + match (i, j) {
                    (0, 0) => 0.0,
                    (0, _) => d[at(0, j - 1)],
                    (_, 0) => d[at(i - 1, 0)],
                    _ => min3(d[at(i - 1, j - 1)], d[at(i - 1, j)], d[at(i, j - 1)]),
                };
        }
    }

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    path.push((i, j));
    while i > 0 || j > 0 {
        let (pi, pj) = match (i, j) {
            (0, _) => (0, j - 1),
            (_, 0) => (i - 1, 0),
            _ => {
                let diag = d[at(i - 1, j - 1)];
                let up = d[at(i - 1, j)];
                let left = d[at(i, j - 1)];
                let best = min3(diag, up, left);
                if diag == best {
                    (i - 1, j - 1)
                } else if up == best {
                    (i - 1, j)
                } else {
                    (i, j - 1)
                }
            }
        };
        i = pi;
        j = pj;
        path.push((i, j));
    }
    path.reverse();

    Ok(DtwResult {
        cost: d[at(n - 1, m - 1)],
        path,
    })
}

/// Halve a sequence by averaging adjacent pairs; an odd trailing element is
/// kept as-is.
fn coarsen(x: &[f64]) -> Vec<f64> {
    x.chunks(2)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Per-row inclusive column bounds of the search window.
type Band = Vec<(usize, usize)>;

/// Project a coarse path onto the finer grid and widen by `radius`.
fn expand_window(path: &[(usize, usize)], n: usize, m: usize, radius: usize) -> Band {
    let mut lo = vec![usize::MAX; n];
    let mut hi = vec![0usize; n];
    for &(ci, cj) in path {
        for fi in [2 * ci, 2 * ci + 1] {
            if fi >= n {
                continue;
            }
            let c0 = (2 * cj).min(m - 1);
            let c1 = (2 * cj + 1).min(m - 1);
            lo[fi] = lo[fi].min(c0);
            hi[fi] = hi[fi].max(c1);
        }
    }
    // Any uncovered row (odd-length edge cases) gets its neighbours' span.
    for i in 0..n {
        if lo[i] == usize::MAX {
            lo[i] = if i > 0 { lo[i - 1] } else { 0 };
            hi[i] = if i > 0 { hi[i - 1] } else { 0 };
        }
    }
    // Radius expansion in both grid directions.
    let mut band = Vec::with_capacity(n);
    for i in 0..n {
        let r0 = i.saturating_sub(radius);
        let r1 = (i + radius).min(n - 1);
        let mut l = usize::MAX;
        let mut h = 0usize;
        for r in r0..=r1 {
            l = l.min(lo[r]);
            h = h.max(hi[r]);
        }
        band.push((l.saturating_sub(radius), (h + radius).min(m - 1)));
    }
    band
}

/// Dynamic programming restricted to a per-row band; cells outside are
/// unreachable.
fn dtw_banded(x: &[f64], y: &[f64], band: &Band) -> DtwResult {
    let (n, m) = (x.len(), y.len());
    debug_assert_eq!(band.len(), n);
    let starts: Vec<usize> = {
        let mut s = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for &(l, h) in band {
            s.push(acc);
            acc += h - l + 1;
        }
        s.push(acc);
        s
    };
    let total = starts[n];
    let mut d = vec![f64::INFINITY; total];

    let get = |d: &[f64], i: usize, j: usize| -> f64 {
        let (l, h) = band[i];
        if j < l || j > h {
            f64::INFINITY
        } else {
            d[starts[i] + (j - l)]
        }
    };

    for i in 0..n {
        let (l, h) = band[i];
        for j in l..=h {
            let cost = local_cost(x[i], y[j]);
            let prev = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => get(&d, 0, j - 1),
                (_, 0) => get(&d, i - 1, 0),
                _ => min3(get(&d, i - 1, j - 1), get(&d, i - 1, j), get(&d, i, j - 1)),
            };
            d[starts[i] + (j - l)] = cost + prev;
        }
    }

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    path.push((i, j));
    while i > 0 || j > 0 {
        let (pi, pj) = match (i, j) {
            (0, _) => (0, j - 1),
            (_, 0) => (i - 1, 0),
            _ => {
                let diag = get(&d, i - 1, j - 1);
                let up = get(&d, i - 1, j);
                let left = get(&d, i, j - 1);
                let best = min3(diag, up, left);
                if diag == best {
                    (i - 1, j - 1)
                } else if up == best {
                    (i - 1, j)
                } else {
                    (i, j - 1)
                }
            }
        };
        i = pi;
        j = pj;
        path.push((i, j));
    }
    path.reverse();

    DtwResult {
        cost: d[starts[n - 1] + (m - 1 - band[n - 1].0)],
        path,
    }
}

/// Multiresolution approximate DTW: recursively coarsen by pairwise
/// averaging, solve the small problem, then refine inside a window of the
/// given radius around the projected coarse path. Sequences no longer than
/// `radius + 2` are solved exactly, so `radius ≥ max(n, m)` degenerates to
/// `dtw_exact`.
pub fn dtw_fast(x: &[f64], y: &[f64], radius: usize) -> Result<DtwResult> {
    check_nonempty(x, y)?;
    if x.len().max(y.len()) <= radius + 2 {
        return dtw_exact(x, y);
    }
    let coarse = dtw_fast(&coarsen(x), &coarsen(y), radius)?;
    let band = expand_window(&coarse.path, x.len(), y.len(), radius);
    Ok(dtw_banded(x, y, &band))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_seq(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-5.0..5.0)).collect()
    }

    #[test]
    fn local_cost_is_absolute_difference() {
        assert_eq!(local_cost(3.0, 3.0), 0.0);
        assert_eq!(local_cost(1.0, 4.0), 3.0);
        assert_eq!(local_cost(-2.0, 2.0), 4.0);
    }

    #[test]
    fn identical_sequences_cost_zero() {
        let x = vec![0.3, 1.7, -2.2, 4.0, 4.0];
        let r = dtw_exact(&x, &x).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.path, (0..5).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn single_cell_table() {
        let r = dtw_exact(&[0.0], &[1.0]).unwrap();
        assert_eq!(r.cost, 1.0);
        assert_eq!(r.path, vec![(0, 0)]);
    }

    #[test]
    fn three_by_two_case() {
        let r = dtw_exact(&[1.0, 2.0, 3.0], &[1.0, 3.0]).unwrap();
        assert_eq!(r.cost, 1.0);
        assert_eq!(r.path.first(), Some(&(0, 0)));
        assert_eq!(r.path.last(), Some(&(2, 1)));
    }

    #[test]
    fn rejects_empty_input() {
        assert!(matches!(dtw_exact(&[], &[1.0]), Err(Error::EmptySequence)));
        assert!(matches!(
            dtw_fast(&[1.0], &[], 5),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn cost_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n_x = rng.random_range(1..40);
            let x = random_seq(&mut rng, n_x);
            let n_y = rng.random_range(1..40);
            let y = random_seq(&mut rng, n_y);
            let a = dtw_exact(&x, &y).unwrap().cost;
            let b = dtw_exact(&y, &x).unwrap().cost;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cost_is_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n_x = rng.random_range(1..40);
            let x = random_seq(&mut rng, n_x);
            let n_y = rng.random_range(1..40);
            let y = random_seq(&mut rng, n_y);
            let c: f64 = rng.random_range(-100.0..100.0);
            let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
            let ys: Vec<f64> = y.iter().map(|v| v + c).collect();
            let a = dtw_exact(&x, &y).unwrap().cost;
            let b = dtw_exact(&xs, &ys).unwrap().cost;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn path_is_monotone_with_unit_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n_x = rng.random_range(1..30);
            let x = random_seq(&mut rng, n_x);
            let n_y = rng.random_range(1..30);
            let y = random_seq(&mut rng, n_y);
            let r = dtw_exact(&x, &y).unwrap();
            assert_eq!(r.path[0], (0, 0));
            assert_eq!(*r.path.last().unwrap(), (x.len() - 1, y.len() - 1));
            for w in r.path.windows(2) {
                let di = w[1].0 as i64 - w[0].0 as i64;
                let dj = w[1].1 as i64 - w[0].1 as i64;
                assert!(
                    matches!((di, dj), (1, 0) | (0, 1) | (1, 1)),
                    "illegal step {:?} -> {:?}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn fast_base_case_equals_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..30 {
            let n_x = rng.random_range(1..10);
            let x = random_seq(&mut rng, n_x);
            let n_y = rng.random_range(1..10);
            let y = random_seq(&mut rng, n_y);
            let exact = dtw_exact(&x, &y).unwrap();
            let fast = dtw_fast(&x, &y, 10).unwrap();
            assert_eq!(exact.cost, fast.cost);
            assert_eq!(exact.path, fast.path);
        }
    }

    #[test]
    fn fast_identity_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for radius in [0usize, 1, 5, 20] {
            let x = random_seq(&mut rng, 300);
            let r = dtw_fast(&x, &x, radius).unwrap();
            assert_eq!(r.cost, 0.0, "radius {radius}");
        }
    }

    #[test]
    fn fast_tracks_exact_within_five_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let n_x = rng.random_range(50..=200);
            let x = random_seq(&mut rng, n_x);
            let n_y = rng.random_range(50..=200);
            let y = random_seq(&mut rng, n_y);
            let exact = dtw_exact(&x, &y).unwrap().cost;
            let fast = dtw_fast(&x, &y, 20).unwrap().cost;
            assert!(fast >= exact - 1e-9, "approximation below optimum");
            let rel = (fast - exact) / exact.max(1e-12);
            assert!(rel <= 0.05, "relative error {rel}");
        }
    }

    #[test]
    fn fast_with_huge_radius_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let n_x = rng.random_range(5..80);
            let x = random_seq(&mut rng, n_x);
            let n_y = rng.random_range(5..80);
            let y = random_seq(&mut rng, n_y);
            let radius = x.len().max(y.len());
            let exact = dtw_exact(&x, &y).unwrap();
            let fast = dtw_fast(&x, &y, radius).unwrap();
            assert_eq!(exact.cost, fast.cost);
        }
    }

    #[test]
    fn fast_nonnegative_for_all_radii() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = random_seq(&mut rng, 157);
        let y = random_seq(&mut rng, 211);
        for radius in 0..8 {
            let r = dtw_fast(&x, &y, radius).unwrap();
            assert!(r.cost >= 0.0);
            assert!(r.cost.is_finite(), "radius {radius} produced infinity");
            assert_eq!(r.path[0], (0, 0));
            assert_eq!(*r.path.last().unwrap(), (x.len() - 1, y.len() - 1));
        }
    }
}
