//! Linear solves for the coupled Newton step.
//!
//! The Jacobian has a small dense circuit block bordering a banded FEM
//! block. The band is factored without pivoting (the FEM tangent is
//! symmetric positive definite) and the circuit unknowns are found from the
//! Schur complement.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Square band matrix with equal lower and upper half-bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(
            i.abs_diff(j) <= self.bw,
            "({i},{j}) outside band {}",
            self.bw
        );
        i * (2 * self.bw + 1) + j + self.bw - i
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// In-place LU without pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, bw) = (self.n, self.bw);
        let scale = self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if !pivot.is_finite() || pivot.abs() <= 1e-14 * scale {
                return Err(Error::Numerical(format!(
                    "zero pivot {pivot:e} in band factorization at row {k}"
                )));
            }
            let end = (k + bw + 1).min(n);
            for i in k + 1..end {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..end {
                    let skj = self.slot(k, j);
                    let sij = self.slot(i, j);
                    self.data[sij] -= l * self.data[skj];
                }
            }
        }
        Ok(BandLu { a: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
}

impl BandLu {
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.a;
        let (n, bw) = (a.n, a.bw);
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let mut s = b[i];
            for j in start..i {
                s -= a.data[a.slot(i, j)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let end = (i + bw + 1).min(n);
            let mut s = b[i];
            for j in i + 1..end {
                s -= a.data[a.slot(i, j)] * b[j];
            }
            b[i] = s / a.data[a.slot(i, i)];
        }
    }
}

/// `[[cc, cf], [fc, ff]]` with `ff` banded; unknowns ordered circuit first.
#[derive(Debug, Clone)]
pub struct BorderedMatrix {
    pub cc: DMatrix<f64>,
    pub cf: DMatrix<f64>,
    pub fc: DMatrix<f64>,
    pub ff: BandMatrix,
}

impl BorderedMatrix {
    pub fn zeros(n_circuit: usize, n_field: usize, bw: usize) -> Self {
        Self {
            cc: DMatrix::zeros(n_circuit, n_circuit),
            cf: DMatrix::zeros(n_circuit, n_field),
            fc: DMatrix::zeros(n_field, n_circuit),
            ff: BandMatrix::zeros(n_field, bw),
        }
    }

    pub fn n_circuit(&self) -> usize {
        self.cc.nrows()
    }

    pub fn n_field(&self) -> usize {
        self.ff.dim()
    }

    pub fn dim(&self) -> usize {
        self.n_circuit() + self.n_field()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (nc, nf) = (self.n_circuit(), self.n_field());
        let mut d = DMatrix::zeros(nc + nf, nc + nf);
        d.view_mut((0, 0), (nc, nc)).copy_from(&self.cc);
        d.view_mut((0, nc), (nc, nf)).copy_from(&self.cf);
        d.view_mut((nc, 0), (nf, nc)).copy_from(&self.fc);
        d.view_mut((nc, nc), (nf, nf))
            .copy_from(&self.ff.to_dense());
        d
    }

    /// Solves `self * x = b`.
    pub fn solve(self, b: &[f64]) -> Result<Vec<f64>> {
        let (nc, nf) = (self.n_circuit(), self.n_field());
        if b.len() != nc + nf {
            return Err(Error::Numerical(format!(
                "right-hand side has {} entries, system has {}",
                b.len(),
                nc + nf
            )));
        }
        let lu = self.ff.factor()?;

        // Z = ff^-1 fc, skipping all-zero columns
        let mut z = DMatrix::zeros(nf, nc);
        for c in 0..nc {
            if self.fc.column(c).iter().all(|v| *v == 0.0) {
                continue;
            }
            let mut col: Vec<f64> = self.fc.column(c).iter().copied().collect();
            lu.solve_in_place(&mut col);
            z.column_mut(c).copy_from_slice(&col);
        }
        let mut yf = b[nc..].to_vec();
        lu.solve_in_place(&mut yf);

        let schur = &self.cc - &self.cf * &z;
        let rhs_c = nalgebra::DVector::from_column_slice(&b[..nc])
            - &self.cf * nalgebra::DVector::from_column_slice(&yf);
        let xc = if nc == 0 {
            rhs_c
        } else {
            schur
                .lu()
                .solve(&rhs_c)
                .ok_or_else(|| Error::Numerical("singular circuit Schur complement".into()))?
        };

        let mut x = Vec::with_capacity(nc + nf);
        x.extend(xc.iter().copied());
        for i in 0..nf {
            let mut v = yf[i];
            for c in 0..nc {
                v -= z[(i, c)] * xc[c];
            }
            x.push(v);
        }
        Ok(x)
    }
}
