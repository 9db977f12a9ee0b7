use crate::error::{Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n×n` matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= n || *c >= n) {
            return Err(Error::dim(
                "SparseMatrix::from_triplets",
                format!("entry ({r},{c}) outside a {n}x{n} matrix"),
            ));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::dim(
                "SparseMatrix::matvec",
                format!("vector length {} for a {}x{} matrix", x.len(), self.n, self.n),
            ));
        }
        Ok((0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect())
    }

    /// Lower and upper bandwidths `(kl, ku)`.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i)
                .all(|(j, _)| self.col_idx[self.row_ptr[j]..self.row_ptr[j + 1]].binary_search(&i).is_ok())
        })
    }

    pub fn columns_strictly_increasing(&self) -> bool {
        (0..self.n).all(|i| self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]].windows(2).all(|w| w[0] < w[1]))
    }
}

/// LU factorization with partial pivoting of a banded matrix.
///
/// Rows are kept as windows of width `2·kl + ku + 1` so that fill-in from
/// row exchanges stays inside the band.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    // row r covers absolute columns r-kl .. r-kl+width
    rows: Vec<f64>,
    // multipliers for column k, rows k+1..=k+kl
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factors `a`. `pivot_tol` is the absolute pivot magnitude below which the
    /// matrix is declared singular.
    pub fn factor(a: &SparseMatrix, pivot_tol: f64) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut rows = vec![0.0; n * width];
        for i in 0..n {
            for (j, v) in a.row(i) {
                rows[i * width + (j + kl - i)] = v;
            }
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            rows,
            lower: vec![0.0; n * kl.max(1)],
            pivots: vec![0; n],
        };
        lu.eliminate(pivot_tol)?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.rows[r * self.width + (c + self.kl - r)]
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    fn eliminate(&mut self, pivot_tol: f64) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for r in k + 1..=last {
                let v = self.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= pivot_tol || !best.is_finite() {
                return Err(Error::Solver(format!(
                    "singular system: pivot {best:e} at unknown {k}; the shift is (numerically) an \
                     eigenvalue of the discrete operator, change the grid size or wavenumber"
                )));
            }
            self.pivots[k] = p;
            let col_end = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=col_end {
                    let (i, j) = (self.idx(k, c), self.idx(p, c));
                    self.rows.swap(i, j);
                }
            }
            let pivot = self.at(k, k);
            for r in k + 1..=last {
                let ir = self.idx(r, k);
                let m = self.rows[ir] / pivot;
                self.rows[ir] = 0.0;
                self.lower[k * kl + (r - k - 1)] = m;
                if m == 0.0 {
                    continue;
                }
                let (src, dst) = (self.idx(k, k + 1), self.idx(r, k + 1));
                let len = col_end - k;
                for t in 0..len {
                    let v = self.rows[src + t];
                    self.rows[dst + t] -= m * v;
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        if b.len() != n {
            return Err(Error::dim("BandedLu::solve", format!("rhs length {} vs {n}", b.len())));
        }
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            x.swap(k, p);
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    x[r] -= self.lower[k * kl + (r - k - 1)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.at(k, c) * x[c];
            }
            x[k] = s / self.at(k, k);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triplets_are_sorted_and_summed() {
        let a = SparseMatrix::from_triplets(3, vec![(1, 2, 1.0), (1, 0, 2.0), (1, 2, 0.5), (0, 0, 1.0)]).unwrap();
        assert!(a.columns_strictly_increasing());
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.get(2, 2), 0.0);
        assert_eq!(a.nnz(), 3);
        assert!(SparseMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn banded_lu_matches_dense_solution() {
        // random banded system with a weak diagonal so pivoting actually happens
        let n: usize = 40;
        let (kl, ku) = (3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut trips = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v: f64 = rng.random_range(-1.0..1.0);
                trips.push((i, j, if i == j { 0.01 * v } else { v }));
            }
        }
        let a = SparseMatrix::from_triplets(n, trips).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.matvec(&x_true).unwrap();
        let lu = BandedLu::factor(&a, 1e-14).unwrap();
        assert!(lu.pivots.iter().enumerate().any(|(k, &p)| p != k));
        let x = lu.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = SparseMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(BandedLu::factor(&a, 1e-12), Err(Error::Solver(_))));
    }
}
