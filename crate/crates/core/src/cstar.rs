//! Finite-dimensional C*-categories given by structure constants.
//!
//! `C_AB` is the hom-space from `B` to `A`. Composition `C_AB x C_BC -> C_AC`
//! is a 3-tensor, the involution `C_BA -> C_AB` is a matrix applied after
//! entrywise conjugation, and norms are always recomputed from the algebra.

use std::fmt;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numlin::{self, CMatrix};
use crate::scalar::{lit, one, rel_gap_vec, zero, Real};

/// Samples per hom pair in the submultiplicativity check.
pub const SUBMULT_SAMPLES: usize = 64;
const VERIFY_SEED: u64 = 0xc57a_2025;

/// Dense 3-tensor `T[i][j][k]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T: Real> {
    dims: [usize; 3],
    data: Vec<Complex<T>>,
}

impl<T: Real> Tensor3<T> {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Tensor3 { dims: [d0, d1, d2], data: vec![zero(); d0 * d1 * d2] }
    }

    pub fn from_data(dims: [usize; 3], data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::ShapeMismatch(format!("{} entries for tensor {dims:?}", data.len())));
        }
        Ok(Tensor3 { dims, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex<T> {
        self.data[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Complex<T>) {
        let d = self.dims;
        self.data[(i * d[1] + j) * d[2] + k] = v;
    }

    /// `(x, y) -> sum_ij x_i y_j T[i][j][.]`
    pub fn contract(&self, x: &[Complex<T>], y: &[Complex<T>]) -> Vec<Complex<T>> {
        let [d0, d1, d2] = self.dims;
        let mut out = vec![zero(); d2];
        for i in 0..d0 {
            if x[i] == zero() {
                continue;
            }
            for j in 0..d1 {
                let w = x[i] * y[j];
                if w == zero() {
                    continue;
                }
                let base = (i * d1 + j) * d2;
                for (o, t) in out.iter_mut().zip(&self.data[base..base + d2]) {
                    *o += w * *t;
                }
            }
        }
        out
    }

    /// Matrix of `y -> contract(x, y)`.
    pub fn left_matrix(&self, x: &[Complex<T>]) -> CMatrix<T> {
        let [d0, d1, d2] = self.dims;
        let mut m = CMatrix::zeros(d2, d1);
        for i in 0..d0 {
            if x[i] == zero() {
                continue;
            }
            for j in 0..d1 {
                for k in 0..d2 {
                    m[(k, j)] += x[i] * self.get(i, j, k);
                }
            }
        }
        m
    }
}

/// Element of `C_{target, source}` in coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Mor<T: Real> {
    pub source: usize,
    pub target: usize,
    pub coords: Vec<Complex<T>>,
}

impl<T: Real> Mor<T> {
    pub fn new(source: usize, target: usize, coords: Vec<Complex<T>>) -> Self {
        Mor { source, target, coords }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Mor { source: self.source, target: self.target, coords: self.coords.iter().map(|z| *z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.source, self.target), (other.source, other.target));
        Mor {
            source: self.source,
            target: self.target,
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| *a + *b).collect(),
        }
    }
}

/// One named pass/fail line of a verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct Check<T: Real> {
    pub name: String,
    pub passed: bool,
    pub discrepancy: T,
}

/// Ordered list of named checks.
#[derive(Clone, Debug, PartialEq)]
pub struct Report<T: Real> {
    pub checks: Vec<Check<T>>,
    /// Remarks about conditions that hold vacuously rather than by computation.
    pub notes: Vec<String>,
}

impl<T: Real> Default for Report<T> {
    fn default() -> Self {
        Report { checks: Vec::new(), notes: Vec::new() }
    }
}

impl<T: Real> Report<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a check that passes iff `discrepancy <= tol` (NaN fails).
    pub fn record(&mut self, name: impl Into<String>, discrepancy: T, tol: T) {
        self.checks.push(Check { name: name.into(), passed: discrepancy <= tol, discrepancy });
    }

    pub fn record_bool(&mut self, name: impl Into<String>, ok: bool) {
        let d = if ok { T::zero() } else { T::infinity() };
        self.checks.push(Check { name: name.into(), passed: ok, discrepancy: d });
    }

    /// Appends another report with its names prefixed.
    pub fn extend_prefixed(&mut self, prefix: &str, other: Report<T>) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
        self.notes.extend(other.notes);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_discrepancy(&self) -> T {
        self.checks.iter().fold(T::zero(), |m, c| if c.discrepancy.is_nan() { T::infinity() } else { m.max(c.discrepancy) })
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check<T>> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check<T>> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl<T: Real> fmt::Display for Report<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "CHECK {} {} {:.3e}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.discrepancy)?;
        }
        for n in &self.notes {
            writeln!(f, "NOTE {n}")?;
        }
        Ok(())
    }
}

/// A finite-dimensional algebra with involution: the diagonal hom-spaces of a
/// category, or fiber algebras of a bundle.
#[derive(Clone, Debug)]
pub struct FiniteAlgebra<T: Real> {
    pub tensor: Tensor3<T>,
    pub star: CMatrix<T>,
}

impl<T: Real> FiniteAlgebra<T> {
    pub fn dim(&self) -> usize {
        self.star.rows()
    }

    pub fn mul(&self, x: &[Complex<T>], y: &[Complex<T>]) -> Vec<Complex<T>> {
        self.tensor.contract(x, y)
    }

    pub fn involve(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let cx: Vec<_> = x.iter().map(|z| z.conj()).collect();
        self.star.mat_vec(&cx)
    }

    pub fn left_matrix(&self, x: &[Complex<T>]) -> CMatrix<T> {
        self.tensor.left_matrix(x)
    }

    /// Gram matrix of the trace form `<a, b> = Tr L(a* b)`.
    pub fn trace_gram(&self) -> CMatrix<T> {
        let d = self.dim();
        let stars: Vec<Vec<Complex<T>>> = (0..d).map(|i| self.star.column(i)).collect();
        let mut g = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut e = vec![zero(); d];
                e[j] = one();
                let p = self.mul(&stars[i], &e);
                // trace of L(p)
                let l = self.left_matrix(&p);
                g[(i, j)] = l.diagonal().into_iter().fold(zero(), |a, b| a + b);
            }
        }
        g
    }

    /// Orthonormalizing pair `(R, R^-1)` with `R^* R` equal to the trace Gram.
    pub fn orthonormalizer(&self) -> Result<(CMatrix<T>, CMatrix<T>)> {
        let g = self.trace_gram();
        let (vals, q) = numlin::hermitian_eigen(&g)?;
        let top = vals.last().copied().unwrap_or(T::zero());
        let floor = T::epsilon().sqrt() * T::one().max(top);
        if vals.iter().any(|v| *v <= floor) {
            return Err(Error::InvalidCategory("trace form is not positive definite".into()));
        }
        let sq: Vec<T> = vals.iter().map(|v| v.sqrt()).collect();
        let inv: Vec<T> = sq.iter().map(|s| T::one() / *s).collect();
        let r = &CMatrix::from_real_diag(&sq) * &q.adjoint();
        let rinv = &q * &CMatrix::from_real_diag(&inv);
        Ok((r, rinv))
    }
}

/// Finite C*-category as structure constants.
#[derive(Clone, Debug, PartialEq)]
pub struct CStarCategory<T: Real> {
    objects: Vec<String>,
    hom_dim: Vec<Vec<usize>>,
    comp: Vec<Vec<Vec<Tensor3<T>>>>,
    inv: Vec<Vec<CMatrix<T>>>,
    unit_coords: Vec<Vec<Complex<T>>>,
}

impl<T: Real> CStarCategory<T> {
    /// Assembles a category after validating every shape.
    ///
    /// `comp[a][b][c]` has shape `d_ab x d_bc x d_ac`, `inv[a][b]` is
    /// `d_ab x d_ba`, and `unit_coords[a]` has length `d_aa`.
    pub fn new(
        objects: Vec<String>,
        hom_dim: Vec<Vec<usize>>,
        comp: Vec<Vec<Vec<Tensor3<T>>>>,
        inv: Vec<Vec<CMatrix<T>>>,
        unit_coords: Vec<Vec<Complex<T>>>,
    ) -> Result<Self> {
        let k = objects.len();
        let bad = |m: String| Err(Error::InvalidCategory(m));
        if hom_dim.len() != k || hom_dim.iter().any(|r| r.len() != k) {
            return bad("hom_dim is not square over objects".into());
        }
        if comp.len() != k || inv.len() != k || unit_coords.len() != k {
            return bad("per-object tables have wrong length".into());
        }
        for a in 0..k {
            if comp[a].len() != k || inv[a].len() != k {
                return bad(format!("row {a} has wrong length"));
            }
            if unit_coords[a].len() != hom_dim[a][a] {
                return bad(format!("unit of object {a} has wrong length"));
            }
            for b in 0..k {
                let j = &inv[a][b];
                if (j.rows(), j.cols()) != (hom_dim[a][b], hom_dim[b][a]) {
                    return bad(format!("inv[{a}][{b}] has shape {}x{}", j.rows(), j.cols()));
                }
                if comp[a][b].len() != k {
                    return bad(format!("comp[{a}][{b}] has wrong length"));
                }
                for c in 0..k {
                    let want = [hom_dim[a][b], hom_dim[b][c], hom_dim[a][c]];
                    if comp[a][b][c].dims() != want {
                        return bad(format!("comp[{a}][{b}][{c}] has shape {:?}, want {want:?}", comp[a][b][c].dims()));
                    }
                }
            }
        }
        Ok(CStarCategory { objects, hom_dim, comp, inv, unit_coords })
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    /// Dimension of `C_ab`, the homs from `b` to `a`.
    pub fn hom_dim(&self, a: usize, b: usize) -> usize {
        self.hom_dim[a][b]
    }

    pub fn comp(&self, a: usize, b: usize, c: usize) -> &Tensor3<T> {
        &self.comp[a][b][c]
    }

    pub fn comp_mut(&mut self, a: usize, b: usize, c: usize) -> &mut Tensor3<T> {
        &mut self.comp[a][b][c]
    }

    pub fn inv(&self, a: usize, b: usize) -> &CMatrix<T> {
        &self.inv[a][b]
    }

    pub fn inv_mut(&mut self, a: usize, b: usize) -> &mut CMatrix<T> {
        &mut self.inv[a][b]
    }

    pub fn unit_coords(&self, a: usize) -> &[Complex<T>] {
        &self.unit_coords[a]
    }

    pub fn unit_coords_mut(&mut self, a: usize) -> &mut Vec<Complex<T>> {
        &mut self.unit_coords[a]
    }

    pub fn unit(&self, a: usize) -> Mor<T> {
        Mor::new(a, a, self.unit_coords[a].clone())
    }

    pub fn zero_mor(&self, target: usize, source: usize) -> Mor<T> {
        Mor::new(source, target, vec![zero(); self.hom_dim[target][source]])
    }

    /// Canonical basis of `C_{target, source}`.
    pub fn basis(&self, target: usize, source: usize) -> Vec<Mor<T>> {
        let d = self.hom_dim[target][source];
        (0..d)
            .map(|i| {
                let mut v = vec![zero(); d];
                v[i] = one();
                Mor::new(source, target, v)
            })
            .collect()
    }

    fn check_mor(&self, x: &Mor<T>) -> Result<()> {
        let k = self.n_objects();
        if x.source >= k {
            return Err(Error::UnknownObject(x.source));
        }
        if x.target >= k {
            return Err(Error::UnknownObject(x.target));
        }
        if x.coords.len() != self.hom_dim[x.target][x.source] {
            return Err(Error::SizeMismatch(format!(
                "morphism has {} coordinates, hom space has dimension {}",
                x.coords.len(),
                self.hom_dim[x.target][x.source]
            )));
        }
        Ok(())
    }

    /// `x ∘ y`, defined when `x.source == y.target`.
    pub fn compose(&self, x: &Mor<T>, y: &Mor<T>) -> Result<Mor<T>> {
        self.check_mor(x)?;
        self.check_mor(y)?;
        if x.source != y.target {
            return Err(Error::NotComposable(format!(
                "source {} of left factor differs from target {} of right factor",
                x.source, y.target
            )));
        }
        let t = &self.comp[x.target][x.source][y.source];
        Ok(Mor::new(y.source, x.target, t.contract(&x.coords, &y.coords)))
    }

    /// `x*`, with source and target swapped.
    pub fn involve(&self, x: &Mor<T>) -> Mor<T> {
        let cx: Vec<_> = x.coords.iter().map(|z| z.conj()).collect();
        Mor::new(x.target, x.source, self.inv[x.source][x.target].mat_vec(&cx))
    }

    /// Matrix of left multiplication by `x ∈ C_ab` as a map `C_bc -> C_ac`.
    pub fn left_matrix(&self, x: &Mor<T>, c: usize) -> CMatrix<T> {
        self.comp[x.target][x.source][c].left_matrix(&x.coords)
    }

    /// The C*-norm: square root of the spectral radius of left
    /// multiplication by `x* ∘ x` on `C_{x.source, x.source}`.
    pub fn norm(&self, x: &Mor<T>) -> Result<T> {
        self.check_mor(x).map_err(|e| Error::InvalidCategory(e.to_string()))?;
        let xs = self.involve(x);
        let p = self.compose(&xs, x)?;
        let l = self.left_matrix(&p, x.source);
        if l.is_empty() {
            return Ok(T::zero());
        }
        let r = numlin::spectral_radius(&l)?;
        if !r.is_finite() {
            return Err(Error::InvalidCategory("non-finite spectral radius".into()));
        }
        Ok(r.sqrt())
    }

    /// The diagonal algebra `C_aa`.
    pub fn diagonal_algebra(&self, a: usize) -> FiniteAlgebra<T> {
        FiniteAlgebra { tensor: self.comp[a][a][a].clone(), star: self.inv[a][a].clone() }
    }

    /// Runs every axiom check and returns one line per axiom.
    pub fn verify_cstar(&self, tol: T) -> Report<T> {
        let k = self.n_objects();
        let mut rep = Report::new();
        let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);

        let mut assoc = T::zero();
        for a in 0..k {
            for b in 0..k {
                let eab = self.basis(a, b);
                for c in 0..k {
                    let ebc = self.basis(b, c);
                    let xy: Vec<Vec<Mor<T>>> =
                        eab.iter().map(|x| ebc.iter().map(|y| self.compose(x, y).unwrap()).collect()).collect();
                    for d in 0..k {
                        let ecd = self.basis(c, d);
                        for (i, x) in eab.iter().enumerate() {
                            for (j, y) in ebc.iter().enumerate() {
                                for z in &ecd {
                                    let l = self.compose(&xy[i][j], z).unwrap();
                                    let r = self.compose(x, &self.compose(y, z).unwrap()).unwrap();
                                    assoc = assoc.max(rel_gap_vec(&l.coords, &r.coords));
                                }
                            }
                        }
                    }
                }
            }
        }
        rep.record("associativity", assoc, tol);

        let (mut left, mut right) = (T::zero(), T::zero());
        for a in 0..k {
            for b in 0..k {
                for x in self.basis(a, b) {
                    let l = self.compose(&self.unit(a), &x).unwrap();
                    let r = self.compose(&x, &self.unit(b)).unwrap();
                    left = left.max(rel_gap_vec(&l.coords, &x.coords));
                    right = right.max(rel_gap_vec(&r.coords, &x.coords));
                }
            }
        }
        rep.record("left_unit", left, tol);
        rep.record("right_unit", right, tol);

        let mut invol = T::zero();
        let mut antilin = T::zero();
        for a in 0..k {
            for b in 0..k {
                for x in self.basis(a, b) {
                    let xx = self.involve(&self.involve(&x));
                    invol = invol.max(rel_gap_vec(&xx.coords, &x.coords));
                }
                let x = self.random_mor(&mut rng, a, b);
                let lam = Complex::new(lit::<T>(rng.gen_range(-1.0..1.0)), lit::<T>(rng.gen_range(-1.0..1.0)));
                let l = self.involve(&x.scale(lam));
                let r = self.involve(&x).scale(lam.conj());
                antilin = antilin.max(rel_gap_vec(&l.coords, &r.coords));
            }
        }
        rep.record("involutivity", invol, tol);
        rep.record("antilinearity", antilin, tol);

        let mut anti = T::zero();
        for a in 0..k {
            for b in 0..k {
                let eab = self.basis(a, b);
                for c in 0..k {
                    let ebc = self.basis(b, c);
                    for x in &eab {
                        for y in &ebc {
                            let l = self.involve(&self.compose(x, y).unwrap());
                            let r = self.compose(&self.involve(y), &self.involve(x)).unwrap();
                            anti = anti.max(rel_gap_vec(&l.coords, &r.coords));
                        }
                    }
                }
            }
        }
        rep.record("antimultiplicativity", anti, tol);

        let mut sub = T::zero();
        let mut norm_err = false;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    if self.hom_dim[a][b] == 0 || self.hom_dim[b][c] == 0 {
                        continue;
                    }
                    for _ in 0..SUBMULT_SAMPLES {
                        let x = self.random_mor(&mut rng, a, b);
                        let y = self.random_mor(&mut rng, b, c);
                        match (self.norm(&x), self.norm(&y), self.compose(&x, &y).and_then(|p| self.norm(&p))) {
                            (Ok(nx), Ok(ny), Ok(nxy)) => {
                                let bound = nx * ny;
                                sub = sub.max((nxy - bound).max(T::zero()) / (T::one() + bound));
                            }
                            _ => norm_err = true,
                        }
                    }
                }
            }
        }
        rep.record("submultiplicativity", if norm_err { T::infinity() } else { sub }, tol);

        let mut cstar = T::zero();
        let mut pos = T::zero();
        let ortho: Vec<Option<(CMatrix<T>, CMatrix<T>)>> =
            (0..k).map(|a| self.diagonal_algebra(a).orthonormalizer().ok()).collect();
        for a in 0..k {
            for b in 0..k {
                let mut samples = self.basis(a, b);
                if self.hom_dim[a][b] > 0 {
                    samples.push(self.random_mor(&mut rng, a, b));
                }
                for x in samples {
                    let p = self.compose(&self.involve(&x), &x).unwrap();
                    match (self.norm(&p), self.norm(&x)) {
                        (Ok(np), Ok(nx)) => {
                            cstar = cstar.max((np - nx * nx).abs() / (T::one() + nx * nx));
                        }
                        _ => cstar = T::infinity(),
                    }
                    match &ortho[b] {
                        Some((r, rinv)) => {
                            let h = &(r * &self.left_matrix(&p, b)) * rinv;
                            pos = pos.max(numlin::positivity_defect(&h).unwrap_or(T::infinity()));
                        }
                        None => pos = T::infinity(),
                    }
                }
            }
        }
        rep.record("cstar_identity", cstar, tol);
        rep.record("positivity", pos, tol);
        rep
    }

    /// Random morphism of unit C*-norm (or raw coordinates when the norm vanishes).
    pub fn random_mor(&self, rng: &mut ChaCha8Rng, target: usize, source: usize) -> Mor<T> {
        let d = self.hom_dim[target][source];
        let coords: Vec<Complex<T>> = (0..d)
            .map(|_| Complex::new(lit(rng.gen_range(-1.0..1.0)), lit(rng.gen_range(-1.0..1.0))))
            .collect();
        let x = Mor::new(source, target, coords);
        match self.norm(&x) {
            Ok(n) if n > T::zero() && n.is_finite() => x.scale(Complex::new(T::one() / n, T::zero())),
            _ => x,
        }
    }

    /// Whether every diagonal composition tensor is symmetric within the
    /// default tolerance.
    pub fn is_commutative(&self) -> bool {
        let tol = T::default_tol();
        (0..self.n_objects()).all(|a| {
            let t = &self.comp[a][a][a];
            let [d, _, e] = t.dims();
            let scale = T::one() + t.data().iter().fold(T::zero(), |m, z| m.max(z.norm()));
            (0..d).all(|i| (0..d).all(|j| (0..e).all(|kk| (t.get(i, j, kk) - t.get(j, i, kk)).norm() <= tol * scale)))
        })
    }

    /// Whether `span{x* ∘ y : x, y ∈ basis C_ab}` is all of `C_bb` for every pair.
    pub fn is_full(&self, tol: T) -> Result<bool> {
        let k = self.n_objects();
        for a in 0..k {
            for b in 0..k {
                let dbb = self.hom_dim[b][b];
                let basis = self.basis(a, b);
                let mut span = Vec::new();
                for x in &basis {
                    let xs = self.involve(x);
                    for y in &basis {
                        span.push(self.compose(&xs, y)?.coords);
                    }
                }
                if numlin::rank(&span, dbb, tol)? != dbb {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Whether each stored unit is a two-sided unit of `C_aa`.
    pub fn is_unital(&self, tol: T) -> Result<bool> {
        for a in 0..self.n_objects() {
            let u = self.unit(a);
            for x in self.basis(a, a) {
                let l = self.compose(&u, &x)?;
                let r = self.compose(&x, &u)?;
                if rel_gap_vec(&l.coords, &x.coords) > tol || rel_gap_vec(&r.coords, &x.coords) > tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Object-bijective *-functor given by its object map and one matrix per hom pair.
///
/// `arrow_maps[a][b]` maps `C1_ab` into `C2_{F(a) F(b)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarFunctor<T: Real> {
    pub object_map: Vec<usize>,
    pub arrow_maps: Vec<Vec<CMatrix<T>>>,
}

impl<T: Real> StarFunctor<T> {
    pub fn identity(cat: &CStarCategory<T>) -> Self {
        let k = cat.n_objects();
        StarFunctor {
            object_map: (0..k).collect(),
            arrow_maps: (0..k).map(|a| (0..k).map(|b| CMatrix::identity(cat.hom_dim(a, b))).collect()).collect(),
        }
    }

    fn check_shapes(&self, cat1: &CStarCategory<T>, cat2: &CStarCategory<T>) -> Result<()> {
        let k = cat1.n_objects();
        if self.object_map.len() != k || cat2.n_objects() != k {
            return Err(Error::ObjectMapNotBijective);
        }
        let mut seen = vec![false; k];
        for &o in &self.object_map {
            if o >= k || seen[o] {
                return Err(Error::ObjectMapNotBijective);
            }
            seen[o] = true;
        }
        if self.arrow_maps.len() != k || self.arrow_maps.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch("arrow_maps is not indexed by object pairs".into()));
        }
        for a in 0..k {
            for b in 0..k {
                let m = &self.arrow_maps[a][b];
                let want = (cat2.hom_dim(self.object_map[a], self.object_map[b]), cat1.hom_dim(a, b));
                if (m.rows(), m.cols()) != want {
                    return Err(Error::ShapeMismatch(format!("arrow map ({a},{b}) has wrong shape")));
                }
            }
        }
        Ok(())
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &StarFunctor<T>) -> Result<StarFunctor<T>> {
        let k = inner.object_map.len();
        if self.object_map.len() != k || inner.arrow_maps.len() != k {
            return Err(Error::NotComposable("functors over different object sets".into()));
        }
        let (f, g) = (&inner.object_map, &self.arrow_maps);
        let arrow_maps = (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| {
                        let (outer, inn) = (&g[f[a]][f[b]], &inner.arrow_maps[a][b]);
                        if outer.cols() != inn.rows() {
                            return Err(Error::NotComposable(format!("arrow maps at ({a},{b}) do not chain")));
                        }
                        Ok(outer * inn)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StarFunctor { object_map: f.iter().map(|&o| self.object_map[o]).collect(), arrow_maps })
    }

    /// Max entrywise distance between two functors with equal object maps.
    pub fn distance(&self, other: &StarFunctor<T>) -> T {
        if self.object_map != other.object_map {
            return T::infinity();
        }
        self.arrow_maps
            .iter()
            .flatten()
            .zip(other.arrow_maps.iter().flatten())
            .fold(T::zero(), |m, (a, b)| m.max(a.distance(b)))
    }

    pub fn apply(&self, cat1: &CStarCategory<T>, cat2: &CStarCategory<T>, x: &Mor<T>) -> Result<Mor<T>> {
        self.check_shapes(cat1, cat2)?;
        cat1.check_mor(x)?;
        Ok(Mor::new(
            self.object_map[x.source],
            self.object_map[x.target],
            self.arrow_maps[x.target][x.source].mat_vec(&x.coords),
        ))
    }

    /// Checks multiplicativity, compatibility with `*`, and preservation of units.
    pub fn verify(&self, cat1: &CStarCategory<T>, cat2: &CStarCategory<T>, tol: T) -> Result<Report<T>> {
        self.check_shapes(cat1, cat2)?;
        let k = cat1.n_objects();
        let (mut mult, mut star, mut unit) = (T::zero(), T::zero(), T::zero());
        for a in 0..k {
            for b in 0..k {
                let eab = cat1.basis(a, b);
                for x in &eab {
                    let l = self.apply(cat1, cat2, &cat1.involve(x))?;
                    let r = cat2.involve(&self.apply(cat1, cat2, x)?);
                    star = star.max(rel_gap_vec(&l.coords, &r.coords));
                }
                for c in 0..k {
                    for x in &eab {
                        let fx = self.apply(cat1, cat2, x)?;
                        for y in cat1.basis(b, c) {
                            let l = self.apply(cat1, cat2, &cat1.compose(x, &y)?)?;
                            let r = cat2.compose(&fx, &self.apply(cat1, cat2, &y)?)?;
                            mult = mult.max(rel_gap_vec(&l.coords, &r.coords));
                        }
                    }
                }
            }
            let fu = self.apply(cat1, cat2, &cat1.unit(a))?;
            unit = unit.max(rel_gap_vec(&fu.coords, cat2.unit_coords(self.object_map[a])));
        }
        let mut rep = Report::new();
        rep.record("functor_multiplicativity", mult, tol);
        rep.record("functor_star", star, tol);
        rep.record("functor_unit", unit, tol);
        Ok(rep)
    }
}

/// Functions on `n` points with pointwise product, as a one-object category.
pub fn diagonal_functions<T: Real>(n: usize) -> CStarCategory<T> {
    let mut t = Tensor3::zeros(n, n, n);
    for p in 0..n {
        t.set(p, p, p, one());
    }
    CStarCategory::new(
        vec!["A".into()],
        vec![vec![n]],
        vec![vec![vec![t]]],
        vec![vec![CMatrix::identity(n)]],
        vec![vec![one(); n]],
    )
    .expect("well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn pt(v: &[(f64, f64)]) -> Mor<f64> {
        Mor::new(0, 0, v.iter().map(|&(a, b)| c(a, b)).collect())
    }

    #[test]
    fn pointwise_product() {
        let cat = diagonal_functions::<f64>(2);
        let r = cat.compose(&pt(&[(1.0, 0.0), (2.0, 0.0)]), &pt(&[(3.0, 0.0), (4.0, 0.0)])).unwrap();
        assert_eq!(r.coords, vec![c(3.0, 0.0), c(8.0, 0.0)]);
        assert_eq!(cat.compose(&cat.unit(0), &cat.unit(0)).unwrap(), cat.unit(0));
    }

    #[test]
    fn norm_is_max_modulus() {
        let cat = diagonal_functions::<f64>(2);
        let x = pt(&[(3.0, 0.0), (0.0, -4.0)]);
        let oracle = x.coords.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((cat.norm(&x).unwrap() - oracle).abs() < 1e-12);
        assert!((cat.norm(&cat.unit(0)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_object_complex_numbers_pass() {
        let cat = diagonal_functions::<f64>(1);
        let rep = cat.verify_cstar(1e-9);
        assert!(rep.passed(), "{rep}");
        assert!(cat.is_commutative());
        assert!(cat.is_full(1e-9).unwrap());
        assert!(cat.is_unital(1e-9).unwrap());
    }

    #[test]
    fn doubled_involution_breaks_cstar_identity() {
        let mut cat = diagonal_functions::<f64>(1);
        *cat.inv_mut(0, 0) = CMatrix::from_real_diag(&[2.0]);
        let rep = cat.verify_cstar(1e-9);
        assert!(!rep.get("cstar_identity").unwrap().passed, "{rep}");
    }

    #[test]
    fn zero_hom_space_is_not_full() {
        let mut one_t = Tensor3::zeros(1, 1, 1);
        one_t.set(0, 0, 0, one());
        let z = |a, b, cc| Tensor3::<f64>::zeros(a, b, cc);
        // two objects, C_00 = C_11 = C, no arrows between them
        let dims = vec![vec![1, 0], vec![0, 1]];
        let comp = (0..2)
            .map(|a| {
                (0..2)
                    .map(|b| {
                        (0..2)
                            .map(|cc| {
                                if a == b && b == cc {
                                    one_t.clone()
                                } else {
                                    z(dims[a][b], dims[b][cc], dims[a][cc])
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let inv = (0..2)
            .map(|a| (0..2).map(|b| if a == b { CMatrix::identity(1) } else { CMatrix::zeros(0, 0) }).collect())
            .collect();
        let cat = CStarCategory::new(vec!["A".into(), "B".into()], dims, comp, inv, vec![vec![one()], vec![one()]])
            .unwrap();
        assert!(cat.verify_cstar(1e-9).passed());
        assert!(!cat.is_full(1e-9).unwrap());
    }

    #[test]
    fn identity_functor_and_broken_functor() {
        let cat = diagonal_functions::<f64>(3);
        let id = StarFunctor::identity(&cat);
        assert!(id.verify(&cat, &cat, 1e-9).unwrap().passed());
        let mut bad = id.clone();
        bad.arrow_maps[0][0] = CMatrix::zeros(3, 3);
        let rep = bad.verify(&cat, &cat, 1e-9).unwrap();
        assert!(!rep.get("functor_multiplicativity").unwrap().passed || !rep.get("functor_unit").unwrap().passed);
        bad.object_map = vec![1];
        assert_eq!(bad.verify(&cat, &cat, 1e-9), Err(Error::ObjectMapNotBijective));
    }

    #[test]
    fn compose_rejects_mismatch() {
        let cat = diagonal_functions::<f64>(2);
        let x = Mor::new(0, 0, vec![one(); 2]);
        let y = Mor::new(1, 0, vec![one(); 2]);
        assert!(cat.compose(&x, &y).is_err());
    }

    #[test]
    fn trace_form_orthonormalizer() {
        let cat = diagonal_functions::<f64>(3);
        let alg = cat.diagonal_algebra(0);
        let (r, rinv) = alg.orthonormalizer().unwrap();
        assert!((&(&r.adjoint() * &r) - &alg.trace_gram()).max_abs() < 1e-12);
        assert!((&r * &rinv).distance(&CMatrix::identity(3)) < 1e-12);
    }
}
