//! Thin helpers over `sprs` CSR matrices.

use sprs::{CsMat, TriMat};

pub type Csr = CsMat<f64>;

/// Accumulates triplets; duplicates are summed in insertion order on build.
pub struct Assembler {
    tri: TriMat<f64>,
}

impl Assembler {
    pub fn new(n: usize) -> Self {
        Self {
            tri: TriMat::new((n, n)),
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.tri.add_triplet(row, col, value);
    }

    pub fn build(self) -> Csr {
        self.tri.to_csr()
    }
}

/// `row · x` for one CSR row.
#[inline]
pub fn row_dot(a: &Csr, row: usize, x: &[f64]) -> f64 {
    let indptr = a.indptr();
    let range = indptr.outer_inds_sz(row);
    let cols = &a.indices()[range.clone()];
    let vals = &a.data()[range];
    cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
}

/// `y = A x`.
pub fn mul_vec(a: &Csr, x: &[f64], y: &mut [f64]) {
    for (row, out) in y.iter_mut().enumerate().take(a.rows()) {
        *out = row_dot(a, row, x);
    }
}

pub fn row_sum(a: &Csr, row: usize) -> f64 {
    let range = a.indptr().outer_inds_sz(row);
    a.data()[range].iter().sum()
}

pub fn entry(a: &Csr, row: usize, col: usize) -> f64 {
    a.get(row, col).copied().unwrap_or(0.0)
}

/// `max |A − Aᵀ|` over stored entries.
pub fn max_asymmetry(a: &Csr) -> f64 {
    let mut worst = 0.0f64;
    for (row, vec) in a.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            worst = worst.max((v - entry(a, col, row)).abs());
        }
    }
    worst
}

pub fn max_abs(a: &Csr) -> f64 {
    a.data().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `max |A − B|` over the union of both patterns.
pub fn max_difference(a: &Csr, b: &Csr) -> f64 {
    let mut worst = 0.0f64;
    for (row, vec) in a.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            worst = worst.max((v - entry(b, row, col)).abs());
        }
    }
    for (row, vec) in b.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            worst = worst.max((v - entry(a, row, col)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut asm = Assembler::new(2);
        asm.add(0, 0, 1.0);
        asm.add(0, 0, 2.0);
        asm.add(1, 0, -1.0);
        let a = asm.build();
        assert_eq!(entry(&a, 0, 0), 3.0);
        assert_eq!(entry(&a, 0, 1), 0.0);
        let mut y = [0.0; 2];
        mul_vec(&a, &[1.0, 5.0], &mut y);
        assert_eq!(y, [3.0, -1.0]);
        assert_eq!(max_asymmetry(&a), 1.0);
    }
}
