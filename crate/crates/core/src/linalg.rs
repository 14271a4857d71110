//! Dense-band direct solver and a one-sided Jacobi SVD.
//!
//! The 5-point Laplacian on an `nx × ny` rectangle has bandwidth `nx − 2`
//! in row-major interior ordering, so a banded LU with partial pivoting is
//! the whole linear-algebra story: it is deterministic, it factors the
//! (possibly indefinite) Newton Jacobians near the smallness boundary, and
//! one factorization serves thousands of right-hand sides in the
//! reconstruction sweep.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::Result;

/// Band matrix in LAPACK-style band storage with room for pivoting fill:
/// entry `(i, j)` lives at `ab[(i − j + kl + ku) + j·ldab]` for
/// `j − (kl + ku) ≤ i ≤ j + kl`, with `ldab = 2·kl + ku + 1`.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        assert!(n > 0);
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.kl + self.ku >= j && i <= j + self.kl, "outside band");
        (i + self.kl + self.ku - j) + j * self.ldab
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.ab[o] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.ab[o] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.ab[self.offset(i, j)]
    }

    /// In-place LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let kw = self.kl + self.ku; // working upper bandwidth after pivoting
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let imax = if j + kl < n { j + kl } else { n - 1 };
            let mut p = j;
            let mut best = libm::fabs(self.get(j, j));
            for i in (j + 1)..=imax {
                let a = libm::fabs(self.get(i, j));
                if a > best {
                    best = a;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SolverFailure("zero or non-finite pivot in band LU"));
            }
            ipiv[j] = p;
            let jmax = if j + kw < n { j + kw } else { n - 1 };
            if p != j {
                for k in j..=jmax {
                    let a = self.get(j, k);
                    let b = self.get(p, k);
                    self.set(j, k, b);
                    self.set(p, k, a);
                }
            }
            let d = self.get(j, j);
            for i in (j + 1)..=imax {
                let l = self.get(i, j) / d;
                self.set(i, j, l);
                if l != 0.0 {
                    for k in (j + 1)..=jmax {
                        let u = self.get(j, k);
                        if u != 0.0 {
                            self.add(i, k, -l * u);
                        }
                    }
                }
            }
        }
        Ok(BandLu { m: self, ipiv })
    }
}

/// Factored band matrix; `solve_in_place` is pure and reusable.
pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.m.n;
        assert_eq!(b.len(), n);
        let kl = self.m.kl;
        let kw = self.m.kl + self.m.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                let imax = if j + kl < n { j + kl } else { n - 1 };
                for i in (j + 1)..=imax {
                    b[i] -= self.m.get(i, j) * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.m.get(j, j);
            let bj = b[j];
            if bj != 0.0 {
                let imin = if j > kw { j - kw } else { 0 };
                for i in imin..j {
                    b[i] -= self.m.get(i, j) * bj;
                }
            }
        }
    }
}

/// Singular values of a `rows × cols` matrix given in column-major order,
/// by one-sided (Hestenes) Jacobi. Returned sorted in decreasing order.
/// The sweep order is fixed, so the result is bit-reproducible.
pub fn singular_values(a: &mut [f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let tol = 1e-15;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let up = a[p * rows + r];
                    let uq = a[q * rows + r];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if libm::fabs(gamma) <= tol * libm::sqrt(alpha * beta) || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for r in 0..rows {
                    let up = a[p * rows + r];
                    let uq = a[q * rows + r];
                    a[p * rows + r] = c * up - s * uq;
                    a[q * rows + r] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..cols)
        .map(|p| {
            let mut s = 0.0;
            for r in 0..rows {
                let v = a[p * rows + r];
                s += v * v;
            }
            libm::sqrt(s)
        })
        .collect();
    sv.sort_unstable_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    sv
}
