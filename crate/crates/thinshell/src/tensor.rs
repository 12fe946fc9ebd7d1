//! Small dense rank-3/rank-4 arrays and matrices of jets.
//!
//! Dimensions here are tiny (2–4), so these are plain `Vec`-backed
//! containers with multi-index access; nalgebra covers rank ≤ 2.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::jet::{Jet, JetError, JetSpace};
use std::sync::Arc;

/// Rank-3 array with all axes of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Tensor3 {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Tensor3 {
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t[[i, j, k]] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<[usize; 3]> for Tensor3 {
    type Output = f64;
    fn index(&self, [i, j, k]: [usize; 3]) -> &f64 {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl IndexMut<[usize; 3]> for Tensor3 {
    fn index_mut(&mut self, [i, j, k]: [usize; 3]) -> &mut f64 {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

/// Rank-4 array with all axes of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Tensor4 {
        Tensor4 {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Tensor4 {
        let mut t = Tensor4::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        t[[i, j, k, l]] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<[usize; 4]> for Tensor4 {
    type Output = f64;
    fn index(&self, [i, j, k, l]: [usize; 4]) -> &f64 {
        &self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

impl IndexMut<[usize; 4]> for Tensor4 {
    fn index_mut(&mut self, [i, j, k, l]: [usize; 4]) -> &mut f64 {
        &mut self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

/// Christoffel symbols (second kind) and their coordinate derivatives
/// from a metric given as values, first, and second derivatives.
///
/// `gamma[[i,j,k]] = Γ^i_{jk}`, `gamma_deriv[[i,j,k,l]] = ∂_l Γ^i_{jk}`.
pub fn christoffel_from_metric(
    g: &DMatrix<f64>,
    g_inv: &DMatrix<f64>,
    dg: &Tensor3,  // dg[[i,j,k]] = ∂_k g_ij
    d2g: &Tensor4, // d2g[[i,j,k,l]] = ∂²_{kl} g_ij
) -> (Tensor3, Tensor4) {
    let n = g.nrows();
    let gamma = Tensor3::from_fn(n, |i, j, k| {
        let mut acc = 0.0;
        for l in 0..n {
            acc += 0.5 * g_inv[(i, l)] * (dg[[l, k, j]] + dg[[l, j, k]] - dg[[j, k, l]]);
        }
        acc
    });

    // ∂_m g^{il} = -g^{ia} (∂_m g_ab) g^{bl}
    let dg_inv = Tensor3::from_fn(n, |i, l, m| {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc -= g_inv[(i, a)] * dg[[a, b, m]] * g_inv[(b, l)];
            }
        }
        acc
    });

    let gamma_deriv = Tensor4::from_fn(n, |i, j, k, m| {
        let mut acc = 0.0;
        for l in 0..n {
            acc += 0.5 * dg_inv[[i, l, m]] * (dg[[l, k, j]] + dg[[l, j, k]] - dg[[j, k, l]]);
            acc +=
                0.5 * g_inv[(i, l)] * (d2g[[l, k, j, m]] + d2g[[l, j, k, m]] - d2g[[j, k, l, m]]);
        }
        acc
    });

    (gamma, gamma_deriv)
}

/// Dense matrix of jets. Used for the metric, shape operator, and field
/// coefficients when their spatial derivatives are still needed.
#[derive(Debug, Clone)]
pub struct JetMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Jet>,
}

impl JetMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet) -> JetMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        JetMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.data[i * self.cols + j]
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).value())
    }

    pub fn mul(&self, rhs: &JetMatrix) -> JetMatrix {
        assert_eq!(self.cols, rhs.rows);
        JetMatrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = self.get(i, 0) * rhs.get(0, j);
            for k in 1..self.cols {
                acc = &acc + &(self.get(i, k) * rhs.get(k, j));
            }
            acc
        })
    }

    pub fn mul_vec(&self, rhs: &[Jet]) -> Vec<Jet> {
        assert_eq!(self.cols, rhs.len());
        (0..self.rows)
            .map(|i| crate::jet::jet_dot(&self.data[i * self.cols..(i + 1) * self.cols], rhs))
            .collect()
    }

    /// Gauss-Jordan inverse with partial pivoting on jet values.
    pub fn inverse(&self, space: &Arc<JetSpace>) -> Result<JetMatrix, JetError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a: Vec<Vec<Jet>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut inv: Vec<Vec<Jet>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Jet::constant(space, if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| {
                    a[p][col]
                        .value()
                        .abs()
                        .partial_cmp(&a[q][col].value().abs())
                        .unwrap()
                })
                .unwrap();
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let piv = a[col][col].clone();
            let piv_inv = piv.recip()?;
            for j in 0..n {
                a[col][j] = &a[col][j] * &piv_inv;
                inv[col][j] = &inv[col][j] * &piv_inv;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[row][col].clone();
                if factor.value() == 0.0 && factor.is_constant() {
                    continue;
                }
                for j in 0..n {
                    a[row][j] = &a[row][j] - &(&factor * &a[col][j]);
                    inv[row][j] = &inv[row][j] - &(&factor * &inv[col][j]);
                }
            }
        }
        Ok(JetMatrix {
            rows: n,
            cols: n,
            data: inv.into_iter().flatten().collect(),
        })
    }
}

/// Determinant of a square matrix of jets by Laplace expansion along the
/// first column; fine for the tiny sizes used here.
pub fn jet_determinant(m: &[Vec<Jet>], space: &Arc<JetSpace>) -> Jet {
    let n = m.len();
    match n {
        0 => Jet::constant(space, 1.0),
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut acc = Jet::constant(space, 0.0);
            for row in 0..n {
                let minor: Vec<Vec<Jet>> = (0..n)
                    .filter(|&r| r != row)
                    .map(|r| m[r][1..].to_vec())
                    .collect();
                let term = &m[row][0] * &jet_determinant(&minor, space);
                acc = if row % 2 == 0 {
                    &acc + &term
                } else {
                    &acc - &term
                };
            }
            acc
        }
    }
}
