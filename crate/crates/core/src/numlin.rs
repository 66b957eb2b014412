//! Dense complex linear algebra for desk-scale dimensions.
//!
//! Everything here works on small row-major matrices of `Complex<T>`:
//! adjoints, operator norms, positivity, a cyclic Jacobi eigensolver for
//! Hermitian matrices, Gaussian elimination, and simultaneous
//! diagonalization of commuting normal families.

use std::cmp::Ordering;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{lit, one, zero, Real};

/// Seed of the random Hermitian combination used by [`joint_diagonalize`].
const JOINT_SEED: u64 = 0x5eed_0f_c0de;
const MAX_JACOBI_SWEEPS: usize = 100;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::SizeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::SizeMismatch("non-finite entry".into()));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = one();
        }
        m
    }

    pub fn from_diag(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let d: Vec<_> = diag.iter().map(|x| Complex::new(*x, T::zero())).collect();
        Self::from_diag(&d)
    }

    /// Builds a matrix from rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::SizeMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Complex<T>>]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(Error::SizeMismatch("ragged columns".into()));
        }
        let mut m = Self::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| *z * s).collect() }
    }

    /// Kronecker product with row-major index pairing `(i, k) -> i * other.rows + k`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut m = Self::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn mat_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(zero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest modulus of an off-diagonal entry.
    pub fn max_off_diagonal(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn diagonal(&self) -> Vec<Complex<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Submatrix keeping the listed columns.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                m[(i, jj)] = self[(i, j)];
            }
        }
        m
    }

    /// Max-modulus distance to another matrix of the same shape.
    pub fn distance(&self, other: &Self) -> T {
        if self.rows != other.rows || self.cols != other.cols {
            return T::infinity();
        }
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    fn checked_mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == zero() {
                    continue;
                }
                for j in 0..other.cols {
                    m.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        m
    }

    fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        let half = Complex::new(lit::<T>(0.5), T::zero());
        (self + &adj).scale(half)
    }

    fn anti_hermitian_part(&self) -> Self {
        // (m - m*) / 2i
        let adj = self.adjoint();
        let f = Complex::new(T::zero(), lit::<T>(-0.5));
        (self - &adj).scale(f)
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        self.checked_mul(rhs)
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

/// Conjugate transpose.
pub fn adjoint<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.adjoint()
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in ascending order and a unitary whose columns are the
/// matching eigenvectors. Only the Hermitian part of `m` is used.
pub fn hermitian_eigen<T: Real>(m: &CMatrix<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut q = CMatrix::identity(n);
    let eps = T::epsilon();
    let total = a.frobenius();
    if total == T::zero() {
        return Ok((vec![T::zero(); n], q));
    }
    for _ in 0..MAX_JACOBI_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<T>()
            .sqrt();
        if off <= eps * total {
            break;
        }
        for p in 0..n {
            for qi in (p + 1)..n {
                let b = a[(p, qi)];
                let t_abs = b.norm();
                if t_abs <= eps * eps * total {
                    continue;
                }
                let ph = b.conj() / t_abs;
                let app = a[(p, p)].re;
                let aqq = a[(qi, qi)].re;
                let theta = (aqq - app) / (lit::<T>(2.0) * t_abs);
                let t = if theta.abs() > lit::<T>(1e150) {
                    lit::<T>(0.5) / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let t = if theta == T::zero() { T::one() } else { t };
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                let vpp = Complex::new(cs, T::zero());
                let vpq = Complex::new(sn, T::zero());
                let vqp = ph * (-sn);
                let vqq = ph * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, qi)];
                    a[(k, p)] = akp * vpp + akq * vqp;
                    a[(k, qi)] = akp * vpq + akq * vqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(qi, k)];
                    a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
                    a[(qi, k)] = vpq.conj() * apk + vqq.conj() * aqk;
                }
                a[(p, qi)] = zero();
                a[(qi, p)] = zero();
                a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
                a[(qi, qi)] = Complex::new(a[(qi, qi)].re, T::zero());
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, qi)];
                    q[(k, p)] = qkp * vpp + qkq * vqp;
                    q[(k, qi)] = qkp * vpq + qkq * vqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap_or(Ordering::Equal));
    let vals = order.iter().map(|&i| a[(i, i)].re).collect();
    Ok((vals, q.select_columns(&order)))
}

/// Largest singular value of `m`.
///
/// `tol` is accepted for interface uniformity; the Jacobi solver always runs to
/// machine precision, which is well inside any sensible `tol`.
pub fn operator_norm<T: Real>(m: &CMatrix<T>, _tol: T) -> Result<T> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let gram = &m.adjoint() * m;
    let (vals, _) = hermitian_eigen(&gram)?;
    Ok(vals.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt())
}

/// Amount by which a square matrix fails to be positive semidefinite.
///
/// Returns `max(hermitian deviation, -min eigenvalue)` relative to
/// `max(1, max|m_ij|)`; zero for positive matrices.
pub fn positivity_defect<T: Real>(m: &CMatrix<T>) -> Result<T> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    if m.rows == 0 {
        return Ok(T::zero());
    }
    let scale = T::one().max(m.max_abs());
    let herm_dev = m.distance(&m.adjoint());
    let (vals, _) = hermitian_eigen(m)?;
    let neg = (-vals[0]).max(T::zero());
    Ok(herm_dev.max(neg) / scale)
}

/// True iff `m` is Hermitian within `tol` and its eigenvalues are `>= -tol`.
pub fn is_positive<T: Real>(m: &CMatrix<T>, tol: T) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    if m.distance(&m.adjoint()) > tol {
        return Ok(false);
    }
    let (vals, _) = hermitian_eigen(m)?;
    Ok(vals.first().map_or(true, |v| *v >= -tol))
}

/// Spectral radius of an arbitrary square matrix by normalized repeated squaring.
///
/// With `M_0 = m/|m|` and `M_{k+1} = M_k^2 / c_k`, `c_k = |M_k^2|`,
/// `log rho(m) = log|m| + sum_k log c_k / 2^(k+1) + log rho(M_K) / 2^K`,
/// and at the fixed point `rho(M_K) = c_K`.
pub fn spectral_radius<T: Real>(m: &CMatrix<T>) -> Result<T> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    let norm0 = m.frobenius();
    if norm0 == T::zero() {
        return Ok(T::zero());
    }
    let mut cur = m.scale(Complex::new(T::one() / norm0, T::zero()));
    let mut log_rho = norm0.ln();
    let mut weight = lit::<T>(0.5);
    let mut prev_c: Option<T> = None;
    for _ in 0..64 {
        let sq = &cur * &cur;
        let ck = sq.frobenius();
        if ck == T::zero() || !ck.is_finite() {
            return Ok(T::zero());
        }
        if let Some(p) = prev_c {
            if (ck - p).abs() <= lit::<T>(4.0) * T::epsilon() * ck {
                // fixed point reached: remaining tail equals log c_K / 2^K
                return Ok((log_rho + lit::<T>(2.0) * weight * ck.ln()).exp());
            }
        }
        log_rho += weight * ck.ln();
        weight *= lit::<T>(0.5);
        prev_c = Some(ck);
        cur = sq.scale(Complex::new(T::one() / ck, T::zero()));
    }
    let tail = prev_c.map_or(T::zero(), |c| lit::<T>(2.0) * weight * c.ln());
    Ok((log_rho + tail).exp())
}

/// Solves `a * x = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    if a.rows != b.rows {
        return Err(Error::SizeMismatch("right-hand side rows".into()));
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().partial_cmp(&m[(j, col)].norm()).unwrap_or(Ordering::Equal))
            .expect("nonempty range");
        if m[(piv, col)].norm() <= T::epsilon() * scale * lit::<T>(16.0) || m[(piv, col)].norm() == T::zero() {
            return Err(Error::Singular);
        }
        if piv != col {
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            for j in 0..x.cols {
                let t = x[(col, j)];
                x[(col, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let d = m[(col, col)];
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[(i, col)] / d;
            if f == zero() {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(i, j)] -= f * v;
            }
            for j in 0..x.cols {
                let v = x[(col, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for i in 0..n {
        let d = m[(i, i)];
        for j in 0..x.cols {
            x[(i, j)] = x[(i, j)] / d;
        }
    }
    Ok(x)
}

pub fn inverse<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    solve(a, &CMatrix::identity(a.rows))
}

/// Numerical rank of the span of `vectors` (all of equal length `dim`).
///
/// Counts singular values above `tol * max(1, largest singular value)`.
pub fn rank<T: Real>(vectors: &[Vec<Complex<T>>], dim: usize, tol: T) -> Result<usize> {
    if vectors.is_empty() || dim == 0 {
        return Ok(0);
    }
    let m = CMatrix::from_columns(vectors)?;
    if m.rows != dim {
        return Err(Error::SizeMismatch("vector length".into()));
    }
    let gram = &m * &m.adjoint();
    let (vals, _) = hermitian_eigen(&gram)?;
    let top = vals.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt();
    let cut = tol * T::one().max(top);
    Ok(vals.iter().filter(|v| v.max(T::zero()).sqrt() > cut).count())
}

/// Result of a simultaneous diagonalization.
#[derive(Clone, Debug)]
pub struct SpectralDecomp<T: Real> {
    /// Columns form the common eigenbasis.
    pub unitary: CMatrix<T>,
    /// `eigenvalue_lists[k][i]` is the eigenvalue of input `k` on column `i`.
    pub eigenvalue_lists: Vec<Vec<Complex<T>>>,
    /// Joint eigenspaces as groups of column indices.
    pub cluster_labels: Vec<Vec<usize>>,
}

fn lex_cmp<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal) {
            Ordering::Equal => {}
            o => return o,
        }
        match x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

fn random_combination<T: Real>(hs: &[CMatrix<T>], rng: &mut ChaCha8Rng) -> CMatrix<T> {
    let n = hs[0].rows;
    let mut acc = CMatrix::zeros(n, n);
    for h in hs {
        let w: f64 = rng.gen_range(-1.0..1.0);
        acc = &acc + &h.scale(Complex::new(lit(w), T::zero()));
    }
    acc
}

fn diagonalize_commuting_hermitian<T: Real>(
    hs: &[CMatrix<T>],
    rng: &mut ChaCha8Rng,
    tol: T,
    depth: usize,
) -> Result<CMatrix<T>> {
    let n = hs[0].rows;
    let comb = random_combination(hs, rng);
    let (vals, mut q) = hermitian_eigen(&comb)?;
    if depth >= 16 {
        return Ok(q);
    }
    let scale = hs.iter().fold(T::one(), |m, h| m.max(h.max_abs()));
    let gap = tol * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] <= gap {
            end += 1;
        }
        if end - start > 1 {
            let cols: Vec<usize> = (start..end).collect();
            let qg = q.select_columns(&cols);
            let blocks: Vec<CMatrix<T>> = hs.iter().map(|h| &(&qg.adjoint() * h) * &qg).collect();
            let worst = blocks.iter().fold(T::zero(), |m, b| m.max(b.max_off_diagonal()));
            if worst > tol * scale {
                let w = diagonalize_commuting_hermitian(&blocks, rng, tol, depth + 1)?;
                let updated = &qg * &w;
                for (jj, &j) in cols.iter().enumerate() {
                    for i in 0..n {
                        q[(i, j)] = updated[(i, jj)];
                    }
                }
            }
        }
        start = end;
    }
    Ok(q)
}

/// Simultaneously diagonalizes pairwise-commuting normal matrices.
///
/// Eigenvalue tuples come out sorted lexicographically by `(re, im)` of
/// each coordinate, tuples closer than `tol * (1 + max input norm)` in every
/// coordinate forming one cluster. The random combination is seeded, so the
/// output is deterministic for fixed input.
pub fn joint_diagonalize<T: Real>(ms: &[CMatrix<T>], tol: T) -> Result<SpectralDecomp<T>> {
    let first = ms.first().ok_or_else(|| Error::SizeMismatch("empty matrix list".into()))?;
    let n = first.rows;
    for m in ms {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
        }
        if m.rows != n {
            return Err(Error::SizeMismatch(format!("expected {n}x{n}, got {}x{}", m.rows, m.cols)));
        }
    }
    let norms: Vec<T> = ms.iter().map(|m| m.frobenius()).collect();
    for (k, m) in ms.iter().enumerate() {
        let adj = m.adjoint();
        let defect = (&(m * &adj) - &(&adj * m)).frobenius();
        if defect > tol * T::one().max(norms[k] * norms[k]) {
            return Err(Error::NotNormal(format!("input {k}: |[m,m*]| = {defect:e}")));
        }
    }
    for i in 0..ms.len() {
        for j in (i + 1)..ms.len() {
            let comm = (&(&ms[i] * &ms[j]) - &(&ms[j] * &ms[i])).frobenius();
            if comm > tol * T::one().max(norms[i] * norms[j]) {
                return Err(Error::NotCommuting(format!("inputs {i},{j}: |[a,b]| = {comm:e}")));
            }
        }
    }
    if n == 0 {
        return Ok(SpectralDecomp {
            unitary: CMatrix::zeros(0, 0),
            eigenvalue_lists: vec![Vec::new(); ms.len()],
            cluster_labels: Vec::new(),
        });
    }
    let mut parts = Vec::with_capacity(2 * ms.len());
    for m in ms {
        parts.push(m.hermitian_part());
        parts.push(m.anti_hermitian_part());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(JOINT_SEED);
    let q = diagonalize_commuting_hermitian(&parts, &mut rng, tol, 0)?;
    let qa = q.adjoint();
    let eig: Vec<Vec<Complex<T>>> = ms.iter().map(|m| (&(&qa * m) * &q).diagonal()).collect();
    let tuple = |i: usize| -> Vec<Complex<T>> { eig.iter().map(|e| e[i]).collect() };

    // single-linkage clustering with a scale-aware threshold
    let max_norm = ms.iter().fold(T::zero(), |m, a| m.max(a.max_abs()));
    let ctol = tol * (T::one() + max_norm);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let close = eig.iter().all(|e| {
                (e[i].re - e[j].re).abs() <= ctol && (e[i].im - e[j].im).abs() <= ctol
            });
            if close {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    let rep = |g: &Vec<usize>| -> Vec<Complex<T>> {
        let w = Complex::new(T::one() / T::from_usize(g.len()).unwrap(), T::zero());
        let mut acc = vec![zero::<T>(); ms.len()];
        for &i in g {
            for (a, v) in acc.iter_mut().zip(tuple(i)) {
                *a += v * w;
            }
        }
        acc
    };
    let mut keyed: Vec<(Vec<Complex<T>>, Vec<usize>)> = groups.into_iter().map(|g| (rep(&g), g)).collect();
    keyed.sort_by(|a, b| lex_cmp(&a.0, &b.0));

    let order: Vec<usize> = keyed.iter().flat_map(|(_, g)| g.iter().copied()).collect();
    let mut clusters = Vec::with_capacity(keyed.len());
    let mut pos = 0;
    for (_, g) in &keyed {
        clusters.push((pos..pos + g.len()).collect());
        pos += g.len();
    }
    Ok(SpectralDecomp {
        unitary: q.select_columns(&order),
        eigenvalue_lists: eig.iter().map(|e| order.iter().map(|&i| e[i]).collect()).collect(),
        cluster_labels: clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn m(rows: &[&[(f64, f64)]]) -> CMatrix<f64> {
        CMatrix::from_rows(&rows.iter().map(|r| r.iter().map(|&(a, b)| c(a, b)).collect()).collect::<Vec<_>>())
            .unwrap()
    }

    /// Largest eigenvalue of a 2x2 Hermitian matrix from its characteristic polynomial.
    fn char_poly_top(h: &CMatrix<f64>) -> f64 {
        let a = h[(0, 0)].re;
        let d = h[(1, 1)].re;
        let b2 = h[(0, 1)].norm_sqr();
        let tr = a + d;
        let det = a * d - b2;
        (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(adjoint(&m(&[&[(0.0, 1.0)]])), m(&[&[(0.0, -1.0)]]));
        assert_eq!(adjoint(&CMatrix::<f64>::identity(2)), CMatrix::identity(2));
        assert_eq!(
            adjoint(&m(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]])),
            m(&[&[(0.0, 0.0), (0.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]])
        );
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&CMatrix::<f64>::identity(3), 1e-12).unwrap() - 1.0).abs() < 1e-14);
        let d = CMatrix::from_diag(&[c(3.0, 0.0), c(0.0, -4.0)]);
        let oracle = char_poly_top(&(&d.adjoint() * &d)).sqrt();
        assert!((oracle - 4.0).abs() < 1e-14);
        assert!((operator_norm(&d, 1e-12).unwrap() - oracle).abs() < 1e-12);
        let n = m(&[&[(0.0, 0.0), (2.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]]);
        let oracle = char_poly_top(&(&n.adjoint() * &n)).sqrt();
        assert!((operator_norm(&n, 1e-12).unwrap() - oracle).abs() < 1e-12);
        assert_eq!(operator_norm(&CMatrix::<f64>::zeros(0, 0), 1e-9), Err(Error::EmptyMatrix));
    }

    #[test]
    fn positivity_examples() {
        assert!(is_positive(&CMatrix::from_real_diag(&[0.0, 1.0]), 1e-9).unwrap());
        assert!(!is_positive(&CMatrix::from_real_diag(&[-1.0, 1.0]), 1e-9).unwrap());
        let h = m(&[&[(2.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (2.0, 0.0)]]);
        // eigenvalues 1 and 3
        assert!(is_positive(&h, 1e-9).unwrap());
        let (vals, _) = hermitian_eigen(&h).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        assert!(matches!(is_positive(&CMatrix::<f64>::zeros(1, 2), 1e-9), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn jacobi_reconstructs_complex_hermitian() {
        let h = m(&[
            &[(2.0, 0.0), (1.0, 0.5), (0.0, -1.0)],
            &[(1.0, -0.5), (-1.0, 0.0), (0.3, 0.2)],
            &[(0.0, 1.0), (0.3, -0.2), (0.5, 0.0)],
        ]);
        let (vals, q) = hermitian_eigen(&h).unwrap();
        let back = &(&q * &CMatrix::from_real_diag(&vals)) * &q.adjoint();
        assert!(back.distance(&h) < 1e-12);
        assert!((&q.adjoint() * &q).distance(&CMatrix::identity(3)) < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn joint_diagonalize_examples() {
        let d = joint_diagonalize(&[CMatrix::<f64>::identity(2)], 1e-9).unwrap();
        assert!(d.unitary.distance(&CMatrix::identity(2)) < 1e-12);
        assert_eq!(d.cluster_labels, vec![vec![0, 1]]);

        let d = joint_diagonalize(&[CMatrix::from_real_diag(&[1.0, 2.0])], 1e-9).unwrap();
        assert_eq!(d.cluster_labels, vec![vec![0], vec![1]]);
        assert!((d.eigenvalue_lists[0][0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((d.eigenvalue_lists[0][1] - c(2.0, 0.0)).norm() < 1e-12);

        let x = m(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let d = joint_diagonalize(std::slice::from_ref(&x), 1e-9).unwrap();
        assert!((d.eigenvalue_lists[0][0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((d.eigenvalue_lists[0][1] - c(1.0, 0.0)).norm() < 1e-12);
        let conj = &(&d.unitary.adjoint() * &x) * &d.unitary;
        assert!(conj.max_off_diagonal() < 1e-12);
        // Hadamard oracle: eigenvectors (1, -1)/sqrt2 and (1, 1)/sqrt2 up to phase
        let s = 0.5f64.sqrt();
        let v0 = d.unitary.column(0);
        let overlap = (v0[0] * s - v0[1] * s).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_diagonalize_errors() {
        let a = m(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]]);
        assert!(matches!(joint_diagonalize(&[a], 1e-9), Err(Error::NotNormal(_))));
        let x = m(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let z = CMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(matches!(joint_diagonalize(&[x.clone(), z], 1e-9), Err(Error::NotCommuting(_))));
        assert!(matches!(
            joint_diagonalize(&[x, CMatrix::identity(3)], 1e-9),
            Err(Error::SizeMismatch(_))
        ));
    }

    #[test]
    fn joint_diagonalize_splits_degenerate_directions() {
        // a has a double eigenvalue that b separates
        let a = CMatrix::from_real_diag(&[1.0, 1.0, 2.0]);
        let b = CMatrix::from_real_diag(&[0.0, 5.0, 0.0]);
        let d = joint_diagonalize(&[a.clone(), b.clone()], 1e-9).unwrap();
        assert_eq!(d.cluster_labels.len(), 3);
        for mat in [&a, &b] {
            let conj = &(&d.unitary.adjoint() * mat) * &d.unitary;
            assert!(conj.max_off_diagonal() < 1e-10);
        }
    }

    #[test]
    fn spectral_radius_matches_hermitian_and_similar() {
        let h = m(&[&[(2.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (2.0, 0.0)]]);
        assert!((spectral_radius(&h).unwrap() - 3.0).abs() < 1e-12);
        // non-normal, similar to diag(1, 3)
        let s = m(&[&[(1.0, 0.0), (7.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0)]]);
        let si = inverse(&s).unwrap();
        let t = &(&s * &CMatrix::from_real_diag(&[1.0, 3.0])) * &si;
        assert!((spectral_radius(&t).unwrap() - 3.0).abs() < 1e-11);
        let nil = m(&[&[(0.0, 0.0), (2.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]]);
        assert_eq!(spectral_radius(&nil).unwrap(), 0.0);
    }

    #[test]
    fn solve_and_rank() {
        let a = m(&[&[(1.0, 1.0), (2.0, 0.0)], &[(0.0, -1.0), (1.0, 0.0)]]);
        let ai = inverse(&a).unwrap();
        assert!((&a * &ai).distance(&CMatrix::identity(2)) < 1e-14);
        let sing = m(&[&[(1.0, 0.0), (2.0, 0.0)], &[(2.0, 0.0), (4.0, 0.0)]]);
        assert_eq!(inverse(&sing), Err(Error::Singular));
        let vs = vec![vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]];
        assert_eq!(rank(&vs, 2, 1e-9).unwrap(), 1);
    }

    #[test]
    fn works_in_single_precision() {
        let h = CMatrix::<f32>::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(2.0, 0.0)],
        ])
        .unwrap();
        let (vals, _) = hermitian_eigen(&h).unwrap();
        assert!((vals[1] - 3.0).abs() < 1e-5);
    }
}
