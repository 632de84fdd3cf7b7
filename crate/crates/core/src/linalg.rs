//! Banded and dense direct solvers for the complex-symmetric harmonic systems.
//!
//! The film operator on a structured grid is symmetric with a small bandwidth
//! once nodes are numbered along the short plate axis. Harmonic systems are
//! complex symmetric (not Hermitian) with positive-definite real part, so an
//! LDLᵀ factorization without pivoting is stable; pivot magnitudes are still
//! checked and a `Solve` error is raised on breakdown.

use crate::{Cplx, Error, Real, Result};

/// Real symmetric banded matrix, lower half stored row-major.
#[derive(Debug, Clone)]
pub struct SymBand<T> {
    n: usize,
    bw: usize,
    /// Strictly-lower band entries: row `i`, column `j = i-bw..i` at
    /// `low[i*bw + j - i + bw]`.
    low: Vec<T>,
    diag: Vec<T>,
}

impl<T: Real> SymBand<T> {
    pub fn new(n: usize, bw: usize) -> Self {
        SymBand {
            n,
            bw,
            low: vec![T::zero(); n * bw],
            diag: vec![T::zero(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Accumulates `v` at `(i, j)`; the pair is folded into the lower half.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r == c {
            self.diag[r] += v;
        } else {
            debug_assert!(r - c <= self.bw, "entry outside band");
            self.low[r * self.bw + c + self.bw - r] += v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r == c {
            self.diag[r]
        } else if r - c <= self.bw {
            self.low[r * self.bw + c + self.bw - r]
        } else {
            T::zero()
        }
    }

    /// `y = A x` for a complex vector, using the symmetric storage.
    pub fn mul_complex(&self, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            y[i] = x[i] * self.diag[i];
        }
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let base = i * self.bw + self.bw - i;
            let mut acc = Cplx::new(T::zero(), T::zero());
            for j in lo..i {
                let a = self.low[base + j];
                acc += x[j] * a;
                y[j] += x[i] * a;
            }
            y[i] += acc;
        }
    }

    /// `y = A x` for a real vector.
    pub fn mul_real(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            y[i] = x[i] * self.diag[i];
        }
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let base = i * self.bw + self.bw - i;
            let mut acc = T::zero();
            for j in lo..i {
                let a = self.low[base + j];
                acc += x[j] * a;
                y[j] += x[i] * a;
            }
            y[i] += acc;
        }
    }

    /// Row sums (equals `A·1`).
    pub fn row_sums(&self) -> Vec<T> {
        let ones = vec![T::one(); self.n];
        let mut out = vec![T::zero(); self.n];
        self.mul_real(&ones, &mut out);
        out
    }
}

/// Complex symmetric banded matrix in the same lower row-major layout.
#[derive(Debug, Clone)]
pub struct ComplexBand<T> {
    n: usize,
    bw: usize,
    low: Vec<Cplx<T>>,
    diag: Vec<Cplx<T>>,
}

impl<T: Real> ComplexBand<T> {
    pub fn new(n: usize, bw: usize) -> Self {
        ComplexBand {
            n,
            bw,
            low: vec![Cplx::new(T::zero(), T::zero()); n * bw],
            diag: vec![Cplx::new(T::zero(), T::zero()); n],
        }
    }

    /// Builds `re + scale_im * i * im` over the wider of the two bands.
    pub fn combine(re: &SymBand<T>, im: &SymBand<T>, scale_im: T) -> Self {
        assert_eq!(re.n, im.n);
        let bw = re.bw.max(im.bw);
        let mut out = ComplexBand::new(re.n, bw);
        for i in 0..re.n {
            out.diag[i] = Cplx::new(re.diag[i], scale_im * im.diag[i]);
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                out.low[i * bw + j + bw - i] = Cplx::new(re.get(i, j), scale_im * im.get(i, j));
            }
        }
        out
    }

    pub fn add(&mut self, i: usize, j: usize, v: Cplx<T>) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r == c {
            self.diag[r] += v;
        } else {
            debug_assert!(r - c <= self.bw, "entry outside band");
            self.low[r * self.bw + c + self.bw - r] += v;
        }
    }

    /// `y = A x` with symmetric banded storage.
    pub fn mul(&self, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
        assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            y[i] = x[i] * self.diag[i];
        }
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let base = i * self.bw + self.bw - i;
            let mut acc = Cplx::new(T::zero(), T::zero());
            for j in lo..i {
                let a = self.low[base + j];
                acc += x[j] * a;
                y[j] += x[i] * a;
            }
            y[i] += acc;
        }
    }

    /// In-place LDLᵀ factorization (complex symmetric, no pivoting).
    pub fn factor(mut self) -> Result<BandLdlt<T>> {
        let (n, bw) = (self.n, self.bw);
        let scale: T = self
            .diag
            .iter()
            .map(|d| d.norm_sqr())
            .fold(T::zero(), T::max);
        let tiny = scale * lit2::<T>(1e-28) + T::min_positive_value();
        let mut row = vec![Cplx::new(T::zero(), T::zero()); bw + 1];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            // gather row i of A into scratch (indices k = lo..i)
            for k in lo..i {
                row[k - lo] = self.low[i * bw + k + bw - i];
            }
            // eliminate against finalized rows lo..i
            for j in lo..i {
                let base_j = j * bw + bw - j;
                let mut sum = row[j - lo];
                for k in lo..j {
                    sum -= row[k - lo] * self.low[base_j + k] * self.diag[k];
                }
                row[j - lo] = sum / self.diag[j];
            }
            let mut d = self.diag[i];
            for k in lo..i {
                let l = row[k - lo];
                d -= l * l * self.diag[k];
            }
            if d.norm_sqr() <= tiny {
                return Err(Error::Solve(format!(
                    "zero pivot at row {i} during banded factorization"
                )));
            }
            self.diag[i] = d;
            for k in lo..i {
                self.low[i * bw + k + bw - i] = row[k - lo];
            }
        }
        Ok(BandLdlt {
            n,
            bw,
            low: self.low,
            diag: self.diag,
        })
    }
}

/// Factored banded LDLᵀ ready for repeated solves.
#[derive(Debug, Clone)]
pub struct BandLdlt<T> {
    n: usize,
    bw: usize,
    low: Vec<Cplx<T>>,
    diag: Vec<Cplx<T>>,
}

impl<T: Real> BandLdlt<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [Cplx<T>]) {
        assert_eq!(x.len(), self.n);
        let bw = self.bw;
        // forward: L y = b (row sweep, contiguous band rows)
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let base = i * bw + bw - i;
            let mut acc = x[i];
            for j in lo..i {
                acc -= self.low[base + j] * x[j];
            }
            x[i] = acc;
        }
        // diagonal
        for i in 0..self.n {
            x[i] = x[i] / self.diag[i];
        }
        // backward: Lᵀ x = z (column sweep, contiguous band rows)
        for j in (0..self.n).rev() {
            let lo = j.saturating_sub(bw);
            let base = j * bw + bw - j;
            let xj = x[j];
            for k in lo..j {
                x[k] -= self.low[base + k] * xj;
            }
        }
    }
}

/// Dense complex-symmetric LDLᵀ, in place on row-major storage.
pub fn dense_ldlt_factor<T: Real>(a: &mut [Cplx<T>], diag: &mut Vec<Cplx<T>>, n: usize) -> Result<()> {
    assert_eq!(a.len(), n * n);
    diag.clear();
    diag.resize(n, Cplx::new(T::zero(), T::zero()));
    let scale: T = (0..n)
        .map(|i| a[i * n + i].norm_sqr())
        .fold(T::zero(), T::max);
    let tiny = scale * lit2::<T>(1e-28) + T::min_positive_value();
    for i in 0..n {
        for j in 0..i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= a[i * n + k] * a[j * n + k] * diag[k];
            }
            a[i * n + j] = sum / diag[j];
        }
        let mut d = a[i * n + i];
        for k in 0..i {
            let l = a[i * n + k];
            d -= l * l * diag[k];
        }
        if d.norm_sqr() <= tiny {
            return Err(Error::Solve(format!(
                "zero pivot at row {i} during dense factorization"
            )));
        }
        diag[i] = d;
    }
    Ok(())
}

/// Solves with a factorization produced by [`dense_ldlt_factor`].
pub fn dense_ldlt_solve<T: Real>(a: &[Cplx<T>], diag: &[Cplx<T>], n: usize, x: &mut [Cplx<T>]) {
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= a[i * n + j] * x[j];
        }
        x[i] = acc;
    }
    for i in 0..n {
        x[i] = x[i] / diag[i];
    }
    for j in (0..n).rev() {
        let xj = x[j];
        for k in 0..j {
            x[k] -= a[j * n + k] * xj;
        }
    }
}

/// Euclidean norm of a complex vector.
pub fn norm2<T: Real>(x: &[Cplx<T>]) -> T {
    x.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
}

fn lit2<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal")
}
