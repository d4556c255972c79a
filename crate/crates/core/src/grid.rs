//! Uniform grid on `[0, 1]`, difference quotients under the hinged ghost
//! closure `W_0 = W_J = 0`, `W_{-1} = −W_1`, `W_{J+1} = −W_{J−1}`, and the
//! banded biharmonic matrix.
//!
//! Grid functions are plain slices of the `J − 1` interior values; ghost and
//! boundary values are never stored.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    intervals: usize,
    h: f64,
}

impl Grid {
    /// `intervals` is `J`; at least 4 so the five-point stencil has an
    /// unclipped row.
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 subintervals, got {intervals}"
            )));
        }
        Ok(Grid {
            intervals,
            h: 1.0 / intervals as f64,
        })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior unknowns, `J − 1`.
    pub fn interior_len(&self) -> usize {
        self.intervals - 1
    }

    /// `x_j` for `j = 1..J−1`, computed as `j/J` so nested grids share
    /// bit-identical nodes.
    pub fn nodes(&self) -> Vec<f64> {
        (1..self.intervals)
            .map(|j| j as f64 / self.intervals as f64)
            .collect()
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.intervals as f64
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes().into_iter().map(f).collect()
    }

    pub(crate) fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.interior_len() {
            return Err(Error::LengthMismatch {
                expected: self.interior_len(),
                found: w.len(),
            });
        }
        Ok(())
    }

    /// `(W_{j+1} − 2W_j + W_{j−1}) / h²`.
    pub fn second_difference(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check(w)?;
        let m = w.len();
        let inv_h2 = 1.0 / (self.h * self.h);
        let at = |i: isize| -> f64 {
            if i < 0 || i as usize >= m {
                0.0
            } else {
                w[i as usize]
            }
        };
        Ok((0..m as isize)
            .map(|i| (at(i + 1) - 2.0 * at(i) + at(i - 1)) * inv_h2)
            .collect())
    }

    /// `(W_{j+2} − 4W_{j+1} + 6W_j − 4W_{j−1} + W_{j−2}) / h⁴` with the odd
    /// ghost extension.
    pub fn fourth_difference(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check(w)?;
        let m = w.len() as isize;
        // Index 0 of `w` is x_1; k below is the node index j.
        let ext = |k: isize| -> f64 {
            if k == -1 {
                -w[0]
            } else if k == m + 2 {
                -w[(m - 1) as usize]
            } else if k <= 0 || k == m + 1 {
                0.0
            } else {
                w[(k - 1) as usize]
            }
        };
        let inv_h4 = 1.0 / self.h.powi(4);
        Ok((1..=m)
            .map(|j| {
                (ext(j + 2) - 4.0 * ext(j + 1) + 6.0 * ext(j) - 4.0 * ext(j - 1) + ext(j - 2))
                    * inv_h4
            })
            .collect())
    }

    /// `⟨V, W⟩ = h Σ V_j W_j`.
    pub fn inner(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        self.check(v)?;
        self.check(w)?;
        Ok(self.h * v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn norm(&self, w: &[f64]) -> Result<f64> {
        Ok(self.inner(w, w)?.sqrt())
    }

    pub fn max_norm(&self, w: &[f64]) -> Result<f64> {
        self.check(w)?;
        Ok(w.iter().fold(0.0, |m: f64, x| m.max(x.abs())))
    }

    /// `‖W_{xx̄}‖`.
    pub fn curvature_norm(&self, w: &[f64]) -> Result<f64> {
        self.norm(&self.second_difference(w)?)
    }

    /// The pentadiagonal matrix `D4` with `D4·W = fourth_difference(W)`.
    pub fn assemble_biharmonic(&self) -> BandedMatrix {
        let m = self.interior_len();
        let inv_h4 = 1.0 / self.h.powi(4);
        let mut diag = vec![6.0 * inv_h4; m];
        diag[0] = 5.0 * inv_h4;
        diag[m - 1] = 5.0 * inv_h4;
        BandedMatrix {
            diag,
            off1: vec![-4.0 * inv_h4; m - 1],
            off2: vec![inv_h4; m - 2],
        }
    }
}

/// Symmetric pentadiagonal matrix stored as its main diagonal and first two
/// super-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    diag: Vec<f64>,
    off1: Vec<f64>,
    off2: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(diag: Vec<f64>, off1: Vec<f64>, off2: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 3 || off1.len() != n - 1 || off2.len() != n - 2 {
            return Err(Error::Config(format!(
                "inconsistent band lengths {}/{}/{}",
                n,
                off1.len(),
                off2.len()
            )));
        }
        Ok(BandedMatrix { diag, off1, off2 })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off1(&self) -> &[f64] {
        &self.off1
    }

    pub fn off2(&self) -> &[f64] {
        &self.off2
    }

    /// `a·self + shift·I`.
    pub fn scaled_shifted(&self, a: f64, shift: f64) -> BandedMatrix {
        BandedMatrix {
            diag: self.diag.iter().map(|d| a * d + shift).collect(),
            off1: self.off1.iter().map(|d| a * d).collect(),
            off2: self.off2.iter().map(|d| a * d).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; x.len()];
        self.mul_vec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.size();
        if x.len() != n || y.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: if x.len() != n { x.len() } else { y.len() },
            });
        }
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i >= 1 {
                acc += self.off1[i - 1] * x[i - 1];
            }
            if i >= 2 {
                acc += self.off2[i - 2] * x[i - 2];
            }
            if i + 1 < n {
                acc += self.off1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc += self.off2[i] * x[i + 2];
            }
            y[i] = acc;
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.off1[i];
                a[i + 1][i] = self.off1[i];
            }
            if i + 2 < n {
                a[i][i + 2] = self.off2[i];
                a[i + 2][i] = self.off2[i];
            }
        }
        a
    }

    /// `LDLᵀ` factorization; fails on the first non-positive pivot.
    pub fn factor(&self) -> Result<BandedLdl> {
        let n = self.size();
        let mut d = vec![0.0; n];
        let mut l1 = vec![0.0; n]; // l1[i] = L[i][i-1]
        let mut l2 = vec![0.0; n]; // l2[i] = L[i][i-2]
        for i in 0..n {
            if i >= 2 {
                l2[i] = self.off2[i - 2] / d[i - 2];
            }
            if i >= 1 {
                let mut v = self.off1[i - 1];
                if i >= 2 {
                    v -= l2[i] * l1[i - 1] * d[i - 2];
                }
                l1[i] = v / d[i - 1];
            }
            let mut piv = self.diag[i];
            if i >= 1 {
                piv -= l1[i] * l1[i] * d[i - 1];
            }
            if i >= 2 {
                piv -= l2[i] * l2[i] * d[i - 2];
            }
            if !(piv > 0.0) {
                return Err(Error::Factorization { row: i, value: piv });
            }
            d[i] = piv;
        }
        Ok(BandedLdl { d, l1, l2 })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLdl {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandedLdl {
    /// Solves in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.d.len();
        if b.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: b.len(),
            });
        }
        for i in 1..n {
            let mut v = b[i] - self.l1[i] * b[i - 1];
            if i >= 2 {
                v -= self.l2[i] * b[i - 2];
            }
            b[i] = v;
        }
        for (x, d) in b.iter_mut().zip(&self.d) {
            *x /= d;
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                b[i] -= self.l1[i + 1] * b[i + 1];
            }
            if i + 2 < n {
                b[i] -= self.l2[i + 2] * b[i + 2];
            }
        }
        Ok(())
    }
}
