//! Band LU factorization with partial pivoting (the `gbtrf`/`gbtrs` scheme).

use crate::error::{Error, Result};

/// Square band matrix holding `kl` sub- and `ku` super-diagonals, with `kl`
/// extra super-diagonals reserved for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ld,
            data: vec![0.0; ld * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i);
        j * self.ld + (self.kl + self.ku + i - j)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    /// Adds `v` to entry `(i, j)`; the entry must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j <= i + self.ku && i <= j + self.kl,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        *self.get_mut(i, j) += v;
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        let mut pivot_min = f64::INFINITY;
        let mut pivot_max = 0.0f64;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivot_min = pivot_min.min(best);
            pivot_max = pivot_max.max(best);
            if !(best > f64::EPSILON * 1e-2 * scale) {
                return Err(Error::SingularSystem {
                    row: k,
                    pivot: best,
                    ratio: pivot_min / pivot_max.max(f64::MIN_POSITIVE),
                });
            }
            pivots[k] = p;
            let last_col = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let diag = self.get(k, k);
            for i in k + 1..=last_row {
                let l = self.get(i, k) / diag;
                *self.get_mut(i, k) = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let u = self.get(k, j);
                        *self.get_mut(i, j) -= l * u;
                    }
                }
            }
        }
        Ok(BandLu {
            lu: self,
            pivots,
            pivot_ratio: pivot_min / pivot_max,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
    pivot_ratio: f64,
}

impl BandLu {
    /// Smallest over largest pivot magnitude, a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let lu = &self.lu;
        let (n, kl, ku) = (lu.n, lu.kl, lu.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= lu.get(i, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + ku + kl).min(n - 1) {
                s -= lu.get(k, j) * b[j];
            }
            b[k] = s / lu.get(k, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_with_pivoting() {
        // zero leading diagonal forces a row swap
        let n = 6;
        let mut a = BandMatrix::zeros(n, 1, 1);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            let d = if i == 0 { 0.0 } else { 4.0 + i as f64 };
            a.add(i, i, d);
            dense[i][i] = d;
            if i + 1 < n {
                a.add(i, i + 1, 1.0 + i as f64);
                a.add(i + 1, i, -2.0);
                dense[i][i + 1] = 1.0 + i as f64;
                dense[i + 1][i] = -2.0;
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let mut b: Vec<f64> = dense
            .iter()
            .map(|row| row.iter().zip(&x_true).map(|(a, x)| a * x).sum())
            .collect();
        a.factor().unwrap().solve_in_place(&mut b);
        for (x, t) in b.iter().zip(&x_true) {
            assert!((x - t).abs() < 1e-13);
        }
    }

    #[test]
    fn detects_singular_matrix() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 0, 1.0);
        a.add(0, 1, 2.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 4.0);
        a.add(2, 2, 1.0);
        assert!(matches!(a.factor(), Err(Error::SingularSystem { row: 1, .. })));
    }
}
