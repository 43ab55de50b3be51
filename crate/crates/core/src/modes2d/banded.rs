//! Square band matrices with in-place LU factorization (no pivoting).
//!
//! Fill-in of an unpivoted LU stays inside the band, so the factors reuse the
//! matrix storage. The caller is responsible for a matrix whose leading
//! principal minors stay away from zero; a negligible pivot is reported.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    /// `n × n` zero matrix with `bw` sub- and super-diagonals.
    pub fn zeros(n: usize, bw: usize) -> Self {
        let width = 2 * bw + 1;
        Self { n, bw, width, data: vec![0.0; n * width] }
    }

    /// Bytes needed for an `n × n` matrix of half-bandwidth `bw`.
    pub fn storage_bytes(n: usize, bw: usize) -> usize {
        n * (2 * bw + 1) * std::mem::size_of::<f64>()
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.bw >= row && col <= row + self.bw);
        row * self.width + col + self.bw - row
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col + self.bw < row || col > row + self.bw {
            0.0
        } else {
            self.data[self.slot(row, col)]
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let s = self.slot(row, col);
        self.data[s] = value;
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.n) {
            let lo = r.saturating_sub(self.bw);
            let hi = (r + self.bw).min(self.n - 1);
            let row = &self.data[r * self.width..(r + 1) * self.width];
            let mut s = 0.0;
            for c in lo..=hi {
                s += row[c + self.bw - r] * x[c];
            }
            *o = s;
        }
    }

    /// Factorizes in place into unit-lower `L` and upper `U`.
    pub fn factorize(mut self) -> Result<BandLu> {
        let (n, bw, w) = (self.n, self.bw, self.width);
        let mut scale = 0.0f64;
        for v in &self.data {
            scale = scale.max(v.abs());
        }
        let tiny = scale * 1e-14;
        for k in 0..n {
            let pivot = self.data[k * w + bw];
            if !(pivot.abs() > tiny) {
                return Err(Error::SingularPivot(k));
            }
            let last = (k + bw).min(n - 1);
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let upper = &head[k * w + bw + 1..k * w + bw + 1 + (last - k)];
            for i in k + 1..=last {
                let row = &mut tail[(i - k - 1) * w..(i - k) * w];
                let lik = row[k + bw - i];
                if lik == 0.0 {
                    continue;
                }
                let l = lik / pivot;
                row[k + bw - i] = l;
                let start = k + 1 + bw - i;
                for (a, &u) in row[start..start + (last - k)].iter_mut().zip(upper) {
                    *a -= l * u;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
}

impl BandLu {
    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.m.n, self.m.bw, self.m.width);
        let d = &self.m.data;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &d[i * w..(i + 1) * w];
            let mut s = b[i];
            for c in lo..i {
                s -= row[c + bw - i] * b[c];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let row = &d[i * w..(i + 1) * w];
            let mut s = b[i];
            for c in i + 1..=hi {
                s -= row[c + bw - i] * b[c];
            }
            b[i] = s / row[bw];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dominant(n: usize, bw: usize, seed: u64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BandMatrix::zeros(n, bw);
        for r in 0..n {
            let lo = r.saturating_sub(bw);
            let hi = (r + bw).min(n - 1);
            let mut sum = 0.0;
            for c in lo..=hi {
                if c != r {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    m.set(r, c, v);
                    sum += v.abs();
                }
            }
            m.set(r, r, -(sum + 0.5));
        }
        m
    }

    #[test]
    fn solves_banded_systems() {
        for (n, bw) in [(1, 0), (5, 1), (40, 3), (200, 17)] {
            let m = random_dominant(n, bw, n as u64);
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut b = vec![0.0; n];
            m.mul_vec(&x, &mut b);
            let lu = m.factorize().unwrap();
            lu.solve_in_place(&mut b);
            for (a, e) in b.iter().zip(&x) {
                assert!((a - e).abs() < 1e-12, "{n} {bw}: {a} vs {e}");
            }
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut m = BandMatrix::zeros(3, 1);
        m.set(0, 0, 1.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 1.0);
        m.set(2, 2, 1.0);
        assert!(matches!(m.factorize(), Err(Error::SingularPivot(1))));
    }

    #[test]
    fn out_of_band_reads_are_zero() {
        let mut m = BandMatrix::zeros(6, 1);
        m.set(2, 3, 4.0);
        assert_eq!(m.get(2, 3), 4.0);
        assert_eq!(m.get(0, 5), 0.0);
        assert_eq!(m.get(5, 0), 0.0);
    }
}
