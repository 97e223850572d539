//! Banded LU with partial pivoting (the unblocked LAPACK `gbtf2` scheme).

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Storage keeps
/// `kl` extra super-diagonals for fill-in from row interchanges.
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
        Self {
            n,
            kl,
            ku,
            ld,
            data: vec![0.0; ld * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + j * self.ld
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i <= j + self.kl && j <= i + self.ku);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j + self.kl || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// y = A x for the matrix as assembled (before factorization).
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.data[self.slot(i, j)] * x[j];
            }
        }
        y
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = self.data[self.slot(j, j)].abs();
            for r in 1..=km {
                let v = self.data[self.slot(j + r, j)].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            piv[j] = j + jp;
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::LinearSolve(format!(
                    "zero or non-finite pivot in column {j}"
                )));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.slot(j, c);
                    let b = self.slot(j + jp, c);
                    self.data.swap(a, b);
                }
            }
            let inv = 1.0 / self.data[self.slot(j, j)];
            for r in 1..=km {
                let s = self.slot(j + r, j);
                self.data[s] *= inv;
            }
            for c in j + 1..=ju {
                let ujc = self.data[self.slot(j, c)];
                if ujc != 0.0 {
                    // column c, rows j+1..=j+km
                    let base_l = self.slot(j + 1, j);
                    let base_c = self.slot(j + 1, c);
                    for r in 0..km {
                        self.data[base_c + r] -= self.data[base_l + r] * ujc;
                    }
                }
            }
        }
        Ok(BandLu { a: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [f64]) {
        let a = &self.a;
        let n = a.n;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = a.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let base = a.slot(j + 1, j);
                for r in 0..km {
                    b[j + 1 + r] -= a.data[base + r] * bj;
                }
            }
        }
        let kv = a.kl + a.ku;
        for j in (0..n).rev() {
            b[j] /= a.data[a.slot(j, j)];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for (i, bi) in b.iter_mut().enumerate().take(j).skip(lo) {
                *bi -= a.data[a.slot(i, j)] * bj;
            }
        }
    }
}
