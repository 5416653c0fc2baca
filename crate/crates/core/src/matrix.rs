use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

/// Dense row-major N×N matrix of `f64`.
///
/// Used for propagation delays (seconds), fork probabilities and win
/// probabilities. Entry `(i, j)` always reads "from miner `i` to miner `j`".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Matrix with `value` off the diagonal and zero on it.
    pub fn uniform_off_diagonal(n: usize, value: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m[(i, j)] = value;
                }
            }
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds from nested rows. Returns `None` unless every row has length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n.max(1)).take(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// If every off-diagonal entry holds the same value, returns it.
    pub fn common_off_diagonal(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let v = self[(0, 1)];
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self[(i, j)] != v {
                    return None;
                }
            }
        }
        Some(v)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Relabels rows and columns: entry `(p[i], p[j])` of the result is entry `(i, j)` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_detection() {
        let m = SquareMatrix::uniform_off_diagonal(3, 6.0);
        assert_eq!(m.common_off_diagonal(), Some(6.0));
        assert_eq!(m[(1, 1)], 0.0);
        let mut m2 = m.clone();
        m2[(2, 0)] = 5.0;
        assert_eq!(m2.common_off_diagonal(), None);
        assert!(!m2.is_symmetric());
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0]]).is_none());
    }

    #[test]
    fn permutation_moves_entries() {
        let m = SquareMatrix::from_fn(3, |i, j| (10 * i + j) as f64);
        let p = m.permuted(&[2, 0, 1]);
        assert_eq!(p[(2, 0)], m[(0, 1)]);
        assert_eq!(p[(1, 2)], m[(2, 0)]);
    }
}
