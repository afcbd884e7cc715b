//! Exact squared Euclidean distance transform on unit-spaced rasters of
//! dimension 1 to 3 (Felzenszwalb–Huttenlocher lower envelopes, one pass per
//! axis). Axis 0 is the fastest-varying index.

/// Squared distance (in cell units) from every cell to the nearest `true`
/// cell. Cells are `f64::INFINITY` when there is no site at all.
pub(crate) fn squared_distance(sites: &[bool], shape: &[usize]) -> Vec<f64> {
    let total: usize = shape.iter().product();
    assert_eq!(sites.len(), total, "shape does not match raster length");
    let mut field: Vec<f64> = sites
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();
    let longest = shape.iter().copied().max().unwrap_or(0);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut scratch = Envelope::with_capacity(longest);

    let mut stride = 1;
    for &len in shape {
        let block = stride * len;
        for start in 0..total {
            // first cell of each line along this axis
            if (start % block) >= stride {
                continue;
            }
            for k in 0..len {
                line[k] = field[start + k * stride];
            }
            scratch.transform(&line[..len], &mut out[..len]);
            for k in 0..len {
                field[start + k * stride] = out[k];
            }
        }
        stride = block;
    }
    field
}

struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// One-dimensional transform `out[q] = min_p (q - p)² + f[p]`.
    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        self.sites.clear();
        self.bounds.clear();
        for (q, &fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            loop {
                match self.sites.last() {
                    None => {
                        self.sites.push(q);
                        self.bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&p) => {
                        let s = intersection(f, p, q);
                        if s <= *self.bounds.last().unwrap() {
                            self.sites.pop();
                            self.bounds.pop();
                        } else {
                            self.sites.push(q);
                            self.bounds.push(s);
                            break;
                        }
                    }
                }
            }
        }
        if self.sites.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, slot) in out.iter_mut().enumerate() {
            let x = q as f64;
            while k + 1 < self.sites.len() && self.bounds[k + 1] < x {
                k += 1;
            }
            let p = self.sites[k];
            let d = x - p as f64;
            *slot = d * d + f[p];
        }
    }
}

fn intersection(f: &[f64], p: usize, q: usize) -> f64 {
    let (pf, qf) = (p as f64, q as f64);
    ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(sites: &[bool], shape: &[usize]) -> Vec<f64> {
        let coords = |i: usize| {
            let mut c = [0i64; 3];
            let mut rest = i;
            for (axis, &n) in shape.iter().enumerate() {
                c[axis] = (rest % n) as i64;
                rest /= n;
            }
            c
        };
        (0..sites.len())
            .map(|i| {
                let ci = coords(i);
                sites
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s)
                    .map(|(j, _)| {
                        let cj = coords(j);
                        (0..3).map(|a| ((ci[a] - cj[a]) as f64).powi(2)).sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn no_sites_is_infinite() {
        let d = squared_distance(&[false; 6], &[3, 2]);
        assert!(d.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn single_site_2d() {
        let mut sites = vec![false; 25];
        sites[0] = true;
        let d = squared_distance(&sites, &[5, 5]);
        assert_eq!(d[3 + 4 * 5], 25.0);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            shape in prop::sample::select(vec![vec![9usize], vec![7, 5], vec![4, 3, 5]]),
            seed in prop::collection::vec(any::<bool>(), 60),
        ) {
            let total: usize = shape.iter().product();
            let sites: Vec<bool> = seed.iter().cycle().take(total).copied().collect();
            let fast = squared_distance(&sites, &shape);
            let slow = brute(&sites, &shape);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-9 || (a.is_infinite() && b.is_infinite()));
            }
        }
    }
}
