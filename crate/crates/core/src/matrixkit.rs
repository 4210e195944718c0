//! Complex dense linear algebra for detection and precoding.
//!
//! Matrices here are small (at most a few hundred rows by a few tens of
//! columns), so everything is a plain row-major `Vec` with no blocking.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Relative pivot tolerance for rank decisions.
pub const RANK_TOL: f64 = 1e-12;

/// Absolute tolerance below which a diagonal entry counts as zero.
pub const DIAG_TOL: f64 = 1e-14;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMat {
    /// Builds a matrix from row-major entries. Entries must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite entry at ({}, {})",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(CMat { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = CMat::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Single-column matrix.
    pub fn column_vector(v: &[C64]) -> Self {
        CMat {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for (r, &z) in v.iter().enumerate() {
            self[(r, c)] = z;
        }
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMat {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &CMat) -> Result<CMat> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CMat) -> Result<CMat> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &CMat, f: impl Fn(C64, C64) -> C64) -> Result<CMat> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        if self.cols != rhs.rows {
            return Err(Error::dims(
                format!("inner dimension {}", self.cols),
                format!("{}", rhs.rows),
            ));
        }
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[C64]) -> Result<CMat> {
        if d.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                actual: d.len(),
            });
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, c| d[r] * self[(r, c)]))
    }

    /// `self * diag(d)`.
    pub fn scale_cols(&self, d: &[C64]) -> Result<CMat> {
        if d.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: d.len(),
            });
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * d[c]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &CMat) -> Result<CMat> {
        if self.cols != below.cols {
            return Err(Error::dims(
                format!("{} columns", self.cols),
                format!("{} columns", below.cols),
            ));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(CMat {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        })
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> CMat {
        CMat {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Thin QR factors: `q` is m×n with orthonormal columns, `r` is n×n upper
/// triangular with a real non-negative diagonal.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: CMat,
    pub r: CMat,
}

/// Algorithm used to invert the (regularized) Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseEngine {
    /// Modified Gram-Schmidt QR of the augmented channel matrix.
    Qr,
    /// Truncated Neumann series with diagonal preconditioning.
    Neumann { terms: usize },
    /// LU with partial pivoting on the Gram matrix.
    Direct,
}

/// Gram matrix `aᴴa`.
pub fn gram(a: &CMat) -> CMat {
    let n = a.cols();
    let mut g = CMat::zeros(n, n);
    for m in 0..a.rows() {
        let row = a.row(m);
        for j in 0..n {
            let cj = row[j].conj();
            for k in j..n {
                g[(j, k)] += cj * row[k];
            }
        }
    }
    for j in 0..n {
        // exact Hermitian symmetry, real diagonal
        g[(j, j)].im = 0.0;
        for k in (j + 1)..n {
            g[(k, j)] = g[(j, k)].conj();
        }
    }
    g
}

/// Modified Gram-Schmidt QR, single orthogonalization pass.
pub fn qr_mgs(a: &CMat) -> Result<QrFactors> {
    let (m, n) = a.shape();
    if n > m {
        return Err(Error::RankDeficient {
            column: m,
            pivot: 0.0,
        });
    }
    // column-major working copy
    let mut v: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let col_norms: Vec<f64> = v.iter().map(|c| norm(c)).collect();
    let mut r = CMat::zeros(n, n);

    for i in 0..n {
        let pivot = norm(&v[i]);
        if col_norms[i] == 0.0 || pivot < RANK_TOL * col_norms[i] {
            return Err(Error::RankDeficient { column: i, pivot });
        }
        r[(i, i)] = C64::new(pivot, 0.0);
        let inv = 1.0 / pivot;
        v[i].iter_mut().for_each(|z| *z *= inv);

        let (done, rest) = v.split_at_mut(i + 1);
        let qi = &done[i];
        for (offset, vj) in rest.iter_mut().enumerate() {
            let j = i + 1 + offset;
            let rij: C64 = qi.iter().zip(vj.iter()).map(|(q, x)| q.conj() * x).sum();
            r[(i, j)] = rij;
            for (x, q) in vj.iter_mut().zip(qi) {
                *x -= rij * q;
            }
        }
    }

    let q = CMat::from_fn(m, n, |row, col| v[col][row]);
    Ok(QrFactors { q, r })
}

/// Truncated Neumann series `Σ_{n<terms} (X0 (D − A))ⁿ X0` with `X0 = D⁻¹`.
pub fn neumann_inverse(a: &CMat, terms: usize) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::dims(
            "square matrix",
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    if terms == 0 {
        return Err(Error::InvalidParameter("Neumann series needs at least one term".into()));
    }
    let n = a.rows();
    let mut d_inv = Vec::with_capacity(n);
    for (i, d) in a.diag().into_iter().enumerate() {
        if d.norm() < DIAG_TOL {
            return Err(Error::SingularDiagonal {
                index: i,
                magnitude: d.norm(),
            });
        }
        d_inv.push(d.inv());
    }

    // iteration matrix E = D⁻¹(D − A) = I − D⁻¹A
    let mut e = a.scale_rows(&d_inv)?.scale_real(-1.0);
    for i in 0..n {
        e[(i, i)] += C64::new(1.0, 0.0);
    }

    let x0 = CMat::from_diag(&d_inv);
    let mut term = x0.clone();
    let mut sum = x0;
    for _ in 1..terms {
        term = e.matmul(&term)?;
        sum = sum.add(&term)?;
    }
    Ok(sum)
}

/// `(gᴴg + βI)⁻¹gᴴ`; `beta = 0` gives the zero-forcing pseudo-inverse.
pub fn regularized_pinv(g: &CMat, beta: f64, via: InverseEngine) -> Result<CMat> {
    let (m, k) = g.shape();
    if m < k {
        return Err(Error::dims(
            format!("rows >= cols ({k})"),
            format!("{m}x{k}"),
        ));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("regularization {beta} must be >= 0")));
    }

    match via {
        InverseEngine::Qr => {
            let augmented = if beta > 0.0 {
                g.vstack(&CMat::identity(k).scale_real(beta.sqrt()))?
            } else {
                g.clone()
            };
            let QrFactors { q, r } = qr_mgs(&augmented)?;
            // gᴴ = Rᴴ Q_topᴴ, so (RᴴR)⁻¹gᴴ = R⁻¹ Q_topᴴ
            let q_top = q.row_block(0, m);
            upper_triangular_inverse(&r)?.matmul(&q_top.hermitian())
        }
        InverseEngine::Neumann { terms } => {
            let mut a = gram(g);
            for i in 0..k {
                a[(i, i)] += C64::new(beta, 0.0);
            }
            neumann_inverse(&a, terms)?.matmul(&g.hermitian())
        }
        InverseEngine::Direct => {
            let mut a = gram(g);
            for i in 0..k {
                a[(i, i)] += C64::new(beta, 0.0);
            }
            lu_solve(&a, &g.hermitian())
        }
    }
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn upper_triangular_inverse(r: &CMat) -> Result<CMat> {
    let n = r.rows();
    if !r.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", r.rows(), r.cols())));
    }
    let scale = r.diag().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut inv = CMat::zeros(n, n);
    for col in 0..n {
        for i in (0..=col).rev() {
            let mut acc = if i == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for j in (i + 1)..=col {
                acc -= r[(i, j)] * inv[(j, col)];
            }
            let d = r[(i, i)];
            if d.norm() <= RANK_TOL * scale || d.norm() == 0.0 {
                return Err(Error::RankDeficient {
                    column: i,
                    pivot: d.norm(),
                });
            }
            inv[(i, col)] = acc / d;
        }
    }
    Ok(inv)
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn lu_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::dims(
            format!("square system with {n} rows"),
            format!("{}x{} and {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    let scale = a.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut lu = a.clone();
    let mut x = b.clone();
    let nrhs = b.cols();

    for col in 0..n {
        let (piv_row, piv_mag) = (col..n)
            .map(|r| (r, lu[(r, col)].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_mag <= RANK_TOL * scale || piv_mag == 0.0 {
            return Err(Error::RankDeficient {
                column: col,
                pivot: piv_mag,
            });
        }
        if piv_row != col {
            for c in 0..n {
                let tmp = lu[(col, c)];
                lu[(col, c)] = lu[(piv_row, c)];
                lu[(piv_row, c)] = tmp;
            }
            for c in 0..nrhs {
                let tmp = x[(col, c)];
                x[(col, c)] = x[(piv_row, c)];
                x[(piv_row, c)] = tmp;
            }
        }
        let pivot = lu[(col, col)];
        for r in (col + 1)..n {
            let factor = lu[(r, col)] / pivot;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = lu[(col, c)];
                lu[(r, c)] -= factor * v;
            }
            for c in 0..nrhs {
                let v = x[(col, c)];
                x[(r, c)] -= factor * v;
            }
        }
    }

    for c in 0..nrhs {
        for r in (0..n).rev() {
            let mut acc = x[(r, c)];
            for j in (r + 1)..n {
                acc -= lu[(r, j)] * x[(j, c)];
            }
            x[(r, c)] = acc / lu[(r, r)];
        }
    }
    Ok(x)
}

/// Exact inverse through [`lu_solve`].
pub fn inverse(a: &CMat) -> Result<CMat> {
    lu_solve(a, &CMat::identity(a.rows()))
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(rows, cols, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn rel_err(a: &CMat, b: &CMat) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
    }

    #[test]
    fn gram_of_identity() {
        assert_eq!(gram(&CMat::identity(3)), CMat::identity(3));
    }

    #[test]
    fn gram_of_column() {
        let a = CMat::column_vector(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let g = gram(&a);
        assert_eq!(g.shape(), (1, 1));
        assert!((g[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gram_matches_triple_loop() {
        let a = random(8, 2, 11);
        let g = gram(&a);
        for j in 0..2 {
            for k in 0..2 {
                let mut acc = c(0.0, 0.0);
                for m in 0..8 {
                    acc += a[(m, j)].conj() * a[(m, k)];
                }
                assert!((g[(j, k)] - acc).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn qr_of_identity() {
        let f = qr_mgs(&CMat::identity(4)).unwrap();
        assert_eq!(f.q, CMat::identity(4));
        assert_eq!(f.r, CMat::identity(4));
    }

    #[test]
    fn qr_single_column() {
        let a = CMat::column_vector(&[c(3.0, 0.0), c(4.0, 0.0)]);
        let f = qr_mgs(&a).unwrap();
        assert!((f.q[(0, 0)] - c(0.6, 0.0)).norm() < 1e-15);
        assert!((f.q[(1, 0)] - c(0.8, 0.0)).norm() < 1e-15);
        assert!((f.r[(0, 0)] - c(5.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn qr_reconstructs_tall_matrix() {
        let a = random(200, 12, 3);
        let f = qr_mgs(&a).unwrap();
        assert!(rel_err(&f.q.matmul(&f.r).unwrap(), &a) < 1e-10);
        let qtq = gram(&f.q);
        assert!(qtq.sub(&CMat::identity(12)).unwrap().frobenius_norm() < 1e-10);
        for i in 0..12 {
            assert!(f.r[(i, i)].im == 0.0 && f.r[(i, i)].re > 0.0);
            for j in 0..i {
                assert_eq!(f.r[(i, j)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn qr_flags_rank_deficiency() {
        let mut a = random(6, 3, 5);
        let col0 = a.column(0);
        let dup: Vec<C64> = col0.iter().map(|z| z * c(0.0, 2.0)).collect();
        a.set_column(2, &dup);
        assert!(matches!(qr_mgs(&a), Err(Error::RankDeficient { column: 2, .. })));
        assert!(matches!(
            qr_mgs(&CMat::zeros(4, 2)),
            Err(Error::RankDeficient { column: 0, .. })
        ));
    }

    #[test]
    fn neumann_exact_on_diagonal() {
        let a = CMat::from_diag(&[c(2.0, 0.0), c(4.0, 0.0)]);
        let inv = neumann_inverse(&a, 1).unwrap();
        assert_eq!(inv, CMat::from_diag(&[c(0.5, 0.0), c(0.25, 0.0)]));
        assert_eq!(neumann_inverse(&CMat::identity(5), 3).unwrap(), CMat::identity(5));
    }

    #[test]
    fn neumann_rejects_zero_diagonal() {
        let a = CMat::from_diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            neumann_inverse(&a, 2),
            Err(Error::SingularDiagonal { index: 1, .. })
        ));
        assert!(neumann_inverse(&CMat::zeros(2, 3), 2).is_err());
    }

    #[test]
    fn neumann_converges_for_tall_gram() {
        let g = gram(&random(400, 4, 9));
        let exact = inverse(&g).unwrap();
        let mut prev = f64::INFINITY;
        for terms in 1..=12 {
            let err = rel_err(&neumann_inverse(&g, terms).unwrap(), &exact);
            assert!(err <= prev, "terms {terms}: {err} > {prev}");
            prev = err;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn pinv_identity_direct() {
        let w = regularized_pinv(&CMat::identity(2), 0.0, InverseEngine::Direct).unwrap();
        assert!(rel_err(&w, &CMat::identity(2)) < 1e-15);
    }

    #[test]
    fn pinv_engines_agree() {
        let g = random(100, 12, 21);
        let direct = regularized_pinv(&g, 0.0, InverseEngine::Direct).unwrap();
        let qr = regularized_pinv(&g, 0.0, InverseEngine::Qr).unwrap();
        assert!(rel_err(&qr, &direct) < 1e-9);
        let direct_b = regularized_pinv(&g, 0.7, InverseEngine::Direct).unwrap();
        let qr_b = regularized_pinv(&g, 0.7, InverseEngine::Qr).unwrap();
        assert!(rel_err(&qr_b, &direct_b) < 1e-9);
    }

    #[test]
    fn pinv_residual_grows_with_beta() {
        let g = random(40, 4, 2);
        let residual = |beta: f64| {
            let w = regularized_pinv(&g, beta, InverseEngine::Qr).unwrap();
            w.matmul(&g).unwrap().sub(&CMat::identity(4)).unwrap().frobenius_norm()
        };
        let r: Vec<f64> = [0.0, 0.1, 1.0].iter().map(|&b| residual(b)).collect();
        assert!(r[0] < 1e-10);
        assert!(r[0] < r[1] && r[1] < r[2]);
    }

    #[test]
    fn pinv_rejects_wide_and_rank_deficient() {
        assert!(regularized_pinv(&random(2, 3, 1), 0.0, InverseEngine::Direct).is_err());
        let mut g = random(5, 2, 4);
        let col = g.column(0);
        g.set_column(1, &col);
        assert!(matches!(
            regularized_pinv(&g, 0.0, InverseEngine::Qr),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            regularized_pinv(&g, 0.0, InverseEngine::Direct),
            Err(Error::RankDeficient { .. })
        ));
        // regularization restores invertibility
        assert!(regularized_pinv(&g, 0.5, InverseEngine::Qr).is_ok());
    }

    #[test]
    fn new_validates_entries() {
        assert!(CMat::new(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(CMat::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(CMat::new(1, 2, vec![c(1.0, 0.0); 2]).is_ok());
    }
}
