//! Dense complex linear algebra for the correction solver: column-major
//! matrices and a Householder-QR least-squares solve. Small and
//! deterministic; the systems here are at most a few thousand rows.

use num_complex::Complex64;

/// Column-major dense complex matrix.
#[derive(Debug, Clone)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `A x` for a full-length vector `x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for c in 0..self.cols {
            let xc = x[c];
            if xc.norm() == 0.0 {
                continue;
            }
            for (r, &a) in self.col(c).iter().enumerate() {
                y[r] += a * xc;
            }
        }
        y
    }
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative pivot threshold below which trailing columns count as
/// numerically dependent on the pivoted prefix.
const RANK_TOL: f64 = 1e-12;

/// Least-squares solve of `min ‖A x − b‖₂` by rank-revealing Householder QR
/// with column pivoting. Dependent columns (the flow operator has a large
/// kernel) get zero coefficients; the returned residual is recomputed as
/// `‖A x − b‖₂` from the original data and is the attainable minimum up to
/// the rank tolerance.
pub fn lstsq_qr(a: &CMatrix, b: &[Complex64]) -> (Vec<Complex64>, f64) {
    assert_eq!(b.len(), a.rows);
    let m = a.rows;
    let n = a.cols;
    assert!(m >= n, "system must not be underdetermined ({m} rows, {n} cols)");
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    let mut rank = n;
    let mut first_pivot = 0.0f64;
    for k in 0..n {
        // Pivot: bring the remaining column with the largest trailing norm
        // to position k (ties broken by lowest index for determinism).
        let mut best = k;
        let mut best_norm = 0.0f64;
        for c in k..n {
            let mut s = 0.0;
            for i in k..m {
                s += r.get(i, c).norm_sqr();
            }
            if s > best_norm * (1.0 + 1e-15) {
                best_norm = s;
                best = c;
            }
        }
        let col_norm = best_norm.sqrt();
        if k == 0 {
            first_pivot = col_norm;
        }
        if col_norm <= RANK_TOL * first_pivot.max(1e-300) {
            rank = k;
            break;
        }
        if best != k {
            for i in 0..m {
                let t = r.get(i, k);
                r.set(i, k, r.get(i, best));
                r.set(i, best, t);
            }
            perm.swap(k, best);
        }

        // Householder reflector for column k.
        let akk = r.get(k, k);
        let phase = if akk.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { akk / akk.norm() };
        let alpha = -phase * col_norm;
        let mut v: Vec<Complex64> = (k..m).map(|i| r.get(i, k)).collect();
        v[0] -= alpha;
        let vnorm = vec_norm(&v);
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        for c in k..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for (j, &vj) in v.iter().enumerate() {
                dot += vj.conj() * r.get(k + j, c);
            }
            let dot = dot * 2.0;
            for (j, &vj) in v.iter().enumerate() {
                let cur = r.get(k + j, c);
                r.set(k + j, c, cur - vj * dot);
            }
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for (j, &vj) in v.iter().enumerate() {
            dot += vj.conj() * rhs[k + j];
        }
        let dot = dot * 2.0;
        for (j, &vj) in v.iter().enumerate() {
            rhs[k + j] -= vj * dot;
        }
    }

    // Back substitution on the leading rank×rank triangle; dependent
    // columns keep zero coefficients.
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..rank).rev() {
        let mut acc = rhs[k];
        for c in k + 1..rank {
            acc -= r.get(k, c) * y[c];
        }
        y[k] = acc / r.get(k, k);
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        x[perm[k]] = y[k];
    }

    let ax = a.matvec(&x);
    let res: Vec<Complex64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    (x, vec_norm(&res))
}
