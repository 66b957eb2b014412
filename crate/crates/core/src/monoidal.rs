//! Monoidal *-categories with executable coherence cells.
//!
//! Three concrete instances: Hermitian line bundles over a finite space,
//! finite Hilbert bundles (which double as symmetric bimodules over `C(X)`),
//! and one-dimensional C*-categories over a fixed object set, the last one
//! in bicategory mode where only equal objects tensor.

use std::fmt::Debug;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cstar::{CStarCategory, Report, Tensor3};
use crate::error::{Error, Result};
use crate::numlin::{self, CMatrix};
use crate::scalar::{lit, one, rel_gap, Real};

/// Coherence cells and their inverses.
///
/// `Alpha: (A⊗B)⊗C -> A⊗(B⊗C)`, `Lambda: I⊗A -> A`, `Rho: A⊗I -> A`,
/// `Beta: A -> A††`, `Gamma: (A⊗B)† -> B†⊗A†`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Alpha,
    AlphaInv,
    Lambda,
    LambdaInv,
    Rho,
    RhoInv,
    Beta,
    BetaInv,
    Gamma,
    GammaInv,
}

impl Cell {
    pub const ALL: [Cell; 10] = [
        Cell::Alpha,
        Cell::AlphaInv,
        Cell::Lambda,
        Cell::LambdaInv,
        Cell::Rho,
        Cell::RhoInv,
        Cell::Beta,
        Cell::BetaInv,
        Cell::Gamma,
        Cell::GammaInv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Cell::Alpha => "alpha",
            Cell::AlphaInv => "alpha_inv",
            Cell::Lambda => "lambda",
            Cell::LambdaInv => "lambda_inv",
            Cell::Rho => "rho",
            Cell::RhoInv => "rho_inv",
            Cell::Beta => "beta",
            Cell::BetaInv => "beta_inv",
            Cell::Gamma => "gamma",
            Cell::GammaInv => "gamma_inv",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Cell::Alpha | Cell::AlphaInv => 3,
            Cell::Gamma | Cell::GammaInv => 2,
            _ => 1,
        }
    }

    pub fn inverse(self) -> Cell {
        match self {
            Cell::Alpha => Cell::AlphaInv,
            Cell::AlphaInv => Cell::Alpha,
            Cell::Lambda => Cell::LambdaInv,
            Cell::LambdaInv => Cell::Lambda,
            Cell::Rho => Cell::RhoInv,
            Cell::RhoInv => Cell::Rho,
            Cell::Beta => Cell::BetaInv,
            Cell::BetaInv => Cell::Beta,
            Cell::Gamma => Cell::GammaInv,
            Cell::GammaInv => Cell::Gamma,
        }
    }

    fn check_arity<O>(self, args: &[O]) -> Result<()> {
        if args.len() != self.arity() {
            return Err(Error::BadArity { cell: self.name(), expected: self.arity(), got: args.len() });
        }
        Ok(())
    }
}

/// A (weak-)monoidal category with contravariant dagger and executable cells.
pub trait MonoidalStarCategory<T: Real>: Clone {
    type Obj: Clone + Debug + PartialEq;
    type Mor: Clone + Debug + PartialEq;

    /// Monoidal unit; in bicategory mode the identity 1-cell matching `a`.
    fn unit_for(&self, a: &Self::Obj) -> Self::Obj;
    fn tensor(&self, a: &Self::Obj, b: &Self::Obj) -> Result<Self::Obj>;
    fn tensor_mor(&self, f: &Self::Mor, g: &Self::Mor) -> Result<Self::Mor>;
    fn dagger(&self, a: &Self::Obj) -> Self::Obj;
    /// `f: A -> B` goes to `f†: B† -> A†`.
    fn dagger_mor(&self, f: &Self::Mor) -> Self::Mor;
    /// `f ∘ g`.
    fn compose(&self, f: &Self::Mor, g: &Self::Mor) -> Result<Self::Mor>;
    fn identity(&self, a: &Self::Obj) -> Self::Mor;
    fn cell(&self, cell: Cell, args: &[Self::Obj]) -> Result<Self::Mor>;
    /// Scale-aware distance between objects (infinite for incompatible shapes).
    fn obj_distance(&self, a: &Self::Obj, b: &Self::Obj) -> T;
    /// Scale-aware distance between morphisms (infinite for incompatible shapes).
    fn mor_distance(&self, f: &Self::Mor, g: &Self::Mor) -> T;
    fn sample_object(&self, rng: &mut ChaCha8Rng) -> Self::Obj;
    fn sample_morphism(&self, rng: &mut ChaCha8Rng, source: &Self::Obj, target: &Self::Obj) -> Self::Mor;

    /// Tuple of objects on which diagrams are evaluated.
    fn sample_tuple(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<Self::Obj> {
        (0..n).map(|_| self.sample_object(rng)).collect()
    }

    /// True when only equal objects tensor (per-object units).
    fn bicategory_mode(&self) -> bool {
        false
    }

    /// How far `f` is from being a legitimate morphism of the instance.
    fn morphism_defect(&self, _f: &Self::Mor) -> T {
        T::zero()
    }

    /// Per-point Gram matrices when objects are pointwise Hilbert spaces.
    fn local_grams(&self, _a: &Self::Obj) -> Option<Vec<CMatrix<T>>> {
        None
    }

    /// Per-point matrices of a morphism, in the same fiber bases as [`Self::local_grams`].
    fn local_maps(&self, _f: &Self::Mor) -> Option<Vec<CMatrix<T>>> {
        None
    }
}

fn random_complex<T: Real>(rng: &mut ChaCha8Rng) -> Complex<T> {
    Complex::new(lit(rng.gen_range(-1.0..1.0)), lit(rng.gen_range(-1.0..1.0)))
}

fn scalar_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    if a.len() != b.len() {
        return T::infinity();
    }
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max(rel_gap(*x, *y)))
}

fn blocks_distance<T: Real>(a: &[CMatrix<T>], b: &[CMatrix<T>]) -> T {
    if a.len() != b.len() {
        return T::infinity();
    }
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| {
        let scale = T::one() + x.max_abs().max(y.max_abs());
        m.max(x.distance(y) / scale)
    })
}

// ---------------------------------------------------------------------------
// Line bundles

/// Hermitian line bundle over a finite space: one positive metric per point.
#[derive(Clone, Debug, PartialEq)]
pub struct LineBundle<T: Real> {
    pub metric: Vec<T>,
}

impl<T: Real> LineBundle<T> {
    pub fn trivial(n_points: usize) -> Self {
        LineBundle { metric: vec![T::one(); n_points] }
    }
}

/// Bundle map between line bundles: one scalar per point.
#[derive(Clone, Debug, PartialEq)]
pub struct LineMap<T: Real> {
    pub scalars: Vec<Complex<T>>,
}

/// Hermitian line bundles over `n_points` points.
#[derive(Clone, Debug, PartialEq)]
pub struct LineBundles {
    pub n_points: usize,
    pub point_names: Vec<String>,
}

impl LineBundles {
    pub fn new(n_points: usize) -> Self {
        LineBundles { n_points, point_names: (0..n_points).map(|p| format!("p{p}")).collect() }
    }

    pub fn named(point_names: Vec<String>) -> Self {
        LineBundles { n_points: point_names.len(), point_names }
    }

    fn ones<T: Real>(&self) -> LineMap<T> {
        LineMap { scalars: vec![one(); self.n_points] }
    }
}

impl<T: Real> MonoidalStarCategory<T> for LineBundles {
    type Obj = LineBundle<T>;
    type Mor = LineMap<T>;

    fn unit_for(&self, _a: &LineBundle<T>) -> LineBundle<T> {
        LineBundle::trivial(self.n_points)
    }

    fn tensor(&self, a: &LineBundle<T>, b: &LineBundle<T>) -> Result<LineBundle<T>> {
        if a.metric.len() != b.metric.len() {
            return Err(Error::SizeMismatch("line bundles over different point sets".into()));
        }
        Ok(LineBundle { metric: a.metric.iter().zip(&b.metric).map(|(x, y)| *x * *y).collect() })
    }

    fn tensor_mor(&self, f: &LineMap<T>, g: &LineMap<T>) -> Result<LineMap<T>> {
        if f.scalars.len() != g.scalars.len() {
            return Err(Error::SizeMismatch("bundle maps over different point sets".into()));
        }
        Ok(LineMap { scalars: f.scalars.iter().zip(&g.scalars).map(|(x, y)| *x * *y).collect() })
    }

    fn dagger(&self, a: &LineBundle<T>) -> LineBundle<T> {
        LineBundle { metric: a.metric.iter().map(|h| T::one() / *h).collect() }
    }

    fn dagger_mor(&self, f: &LineMap<T>) -> LineMap<T> {
        f.clone()
    }

    fn compose(&self, f: &LineMap<T>, g: &LineMap<T>) -> Result<LineMap<T>> {
        self.tensor_mor(f, g)
    }

    fn identity(&self, _a: &LineBundle<T>) -> LineMap<T> {
        self.ones()
    }

    fn cell(&self, cell: Cell, args: &[LineBundle<T>]) -> Result<LineMap<T>> {
        cell.check_arity(args)?;
        Ok(self.ones())
    }

    fn obj_distance(&self, a: &LineBundle<T>, b: &LineBundle<T>) -> T {
        if a.metric.len() != b.metric.len() {
            return T::infinity();
        }
        a.metric.iter().zip(&b.metric).fold(T::zero(), |m, (x, y)| {
            m.max((*x - *y).abs() / (T::one() + x.abs().max(y.abs())))
        })
    }

    fn mor_distance(&self, f: &LineMap<T>, g: &LineMap<T>) -> T {
        scalar_distance(&f.scalars, &g.scalars)
    }

    fn sample_object(&self, rng: &mut ChaCha8Rng) -> LineBundle<T> {
        LineBundle { metric: (0..self.n_points).map(|_| lit(rng.gen_range(0.25..4.0))).collect() }
    }

    fn sample_morphism(&self, rng: &mut ChaCha8Rng, _s: &LineBundle<T>, _t: &LineBundle<T>) -> LineMap<T> {
        LineMap { scalars: (0..self.n_points).map(|_| random_complex(rng)).collect() }
    }

    fn local_grams(&self, a: &LineBundle<T>) -> Option<Vec<CMatrix<T>>> {
        Some(a.metric.iter().map(|h| CMatrix::from_real_diag(&[*h])).collect())
    }

    fn local_maps(&self, f: &LineMap<T>) -> Option<Vec<CMatrix<T>>> {
        Some(f.scalars.iter().map(|z| CMatrix::from_diag(&[*z])).collect())
    }
}

// ---------------------------------------------------------------------------
// Hilbert bundles

/// Finite Hilbert bundle: a positive-definite Gram matrix per point, in a
/// fixed fiber basis. Rank one gives a line bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct HilbBundle<T: Real> {
    pub grams: Vec<CMatrix<T>>,
}

impl<T: Real> HilbBundle<T> {
    pub fn fiber_dims(&self) -> Vec<usize> {
        self.grams.iter().map(|g| g.rows()).collect()
    }

    pub fn n_points(&self) -> usize {
        self.grams.len()
    }

    /// Checks every Gram is Hermitian positive-definite.
    pub fn validate(&self, tol: T) -> Result<()> {
        for (p, g) in self.grams.iter().enumerate() {
            if !g.is_square() {
                return Err(Error::NotSquare { rows: g.rows(), cols: g.cols() });
            }
            if g.rows() == 0 {
                continue;
            }
            let (vals, _) = numlin::hermitian_eigen(g)?;
            if g.distance(&g.adjoint()) > tol * (T::one() + g.max_abs()) || vals[0] <= T::zero() {
                return Err(Error::SizeMismatch(format!("Gram at point {p} is not positive definite")));
            }
        }
        Ok(())
    }
}

impl<T: Real> From<&LineBundle<T>> for HilbBundle<T> {
    fn from(l: &LineBundle<T>) -> Self {
        HilbBundle { grams: l.metric.iter().map(|h| CMatrix::from_real_diag(&[*h])).collect() }
    }
}

/// Bundle map: per point a `dim_target x dim_source` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleMap<T: Real> {
    pub blocks: Vec<CMatrix<T>>,
}

/// Finite Hilbert bundles over `n_points` points; samples have fibers of
/// dimension `1..=max_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct HilbBundles {
    pub n_points: usize,
    pub max_dim: usize,
}

impl HilbBundles {
    pub fn new(n_points: usize, max_dim: usize) -> Self {
        HilbBundles { n_points, max_dim: max_dim.max(1) }
    }
}

fn swap_permutation<T: Real>(na: usize, nb: usize) -> CMatrix<T> {
    // (A⊗B) index i*nb + j  ->  (B⊗A) index j*na + i
    let mut m = CMatrix::zeros(na * nb, na * nb);
    for i in 0..na {
        for j in 0..nb {
            m[(j * na + i, i * nb + j)] = one();
        }
    }
    m
}

impl<T: Real> MonoidalStarCategory<T> for HilbBundles {
    type Obj = HilbBundle<T>;
    type Mor = BundleMap<T>;

    fn unit_for(&self, _a: &HilbBundle<T>) -> HilbBundle<T> {
        HilbBundle { grams: vec![CMatrix::identity(1); self.n_points] }
    }

    fn tensor(&self, a: &HilbBundle<T>, b: &HilbBundle<T>) -> Result<HilbBundle<T>> {
        if a.grams.len() != b.grams.len() {
            return Err(Error::SizeMismatch("bundles over different point sets".into()));
        }
        Ok(HilbBundle { grams: a.grams.iter().zip(&b.grams).map(|(x, y)| x.kron(y)).collect() })
    }

    fn tensor_mor(&self, f: &BundleMap<T>, g: &BundleMap<T>) -> Result<BundleMap<T>> {
        if f.blocks.len() != g.blocks.len() {
            return Err(Error::SizeMismatch("bundle maps over different point sets".into()));
        }
        Ok(BundleMap { blocks: f.blocks.iter().zip(&g.blocks).map(|(x, y)| x.kron(y)).collect() })
    }

    fn dagger(&self, a: &HilbBundle<T>) -> HilbBundle<T> {
        HilbBundle {
            grams: a
                .grams
                .iter()
                .map(|g| numlin::inverse(g).expect("positive-definite Gram").transpose())
                .collect(),
        }
    }

    fn dagger_mor(&self, f: &BundleMap<T>) -> BundleMap<T> {
        BundleMap { blocks: f.blocks.iter().map(|m| m.transpose()).collect() }
    }

    fn compose(&self, f: &BundleMap<T>, g: &BundleMap<T>) -> Result<BundleMap<T>> {
        if f.blocks.len() != g.blocks.len() {
            return Err(Error::NotComposable("bundle maps over different point sets".into()));
        }
        let mut blocks = Vec::with_capacity(f.blocks.len());
        for (p, (x, y)) in f.blocks.iter().zip(&g.blocks).enumerate() {
            if x.cols() != y.rows() {
                return Err(Error::NotComposable(format!("fiber dimensions differ at point {p}")));
            }
            blocks.push(x * y);
        }
        Ok(BundleMap { blocks })
    }

    fn identity(&self, a: &HilbBundle<T>) -> BundleMap<T> {
        BundleMap { blocks: a.grams.iter().map(|g| CMatrix::identity(g.rows())).collect() }
    }

    fn cell(&self, cell: Cell, args: &[HilbBundle<T>]) -> Result<BundleMap<T>> {
        cell.check_arity(args)?;
        let dims: Vec<Vec<usize>> = args.iter().map(|a| a.fiber_dims()).collect();
        let n = args[0].n_points();
        let blocks = (0..n)
            .map(|p| match cell {
                Cell::Alpha | Cell::AlphaInv => CMatrix::identity(dims[0][p] * dims[1][p] * dims[2][p]),
                Cell::Gamma => swap_permutation(dims[0][p], dims[1][p]),
                Cell::GammaInv => swap_permutation::<T>(dims[0][p], dims[1][p]).transpose(),
                _ => CMatrix::identity(dims[0][p]),
            })
            .collect();
        Ok(BundleMap { blocks })
    }

    fn obj_distance(&self, a: &HilbBundle<T>, b: &HilbBundle<T>) -> T {
        if a.fiber_dims() != b.fiber_dims() {
            return T::infinity();
        }
        blocks_distance(&a.grams, &b.grams)
    }

    fn mor_distance(&self, f: &BundleMap<T>, g: &BundleMap<T>) -> T {
        let shapes = |m: &BundleMap<T>| m.blocks.iter().map(|b| (b.rows(), b.cols())).collect::<Vec<_>>();
        if shapes(f) != shapes(g) {
            return T::infinity();
        }
        blocks_distance(&f.blocks, &g.blocks)
    }

    fn sample_object(&self, rng: &mut ChaCha8Rng) -> HilbBundle<T> {
        let grams = (0..self.n_points)
            .map(|_| {
                let d = rng.gen_range(1..=self.max_dim);
                let mut m = CMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        m[(i, j)] = random_complex(rng);
                    }
                }
                let g = &(&m * &m.adjoint()) + &CMatrix::from_real_diag(&vec![lit::<T>(0.5); d]);
                // exact Hermitian symmetry
                let mut h = g.clone();
                for i in 0..d {
                    h[(i, i)] = Complex::new(g[(i, i)].re, T::zero());
                    for j in (i + 1)..d {
                        h[(j, i)] = g[(i, j)].conj();
                    }
                }
                h
            })
            .collect();
        HilbBundle { grams }
    }

    fn sample_morphism(&self, rng: &mut ChaCha8Rng, s: &HilbBundle<T>, t: &HilbBundle<T>) -> BundleMap<T> {
        let blocks = s
            .grams
            .iter()
            .zip(&t.grams)
            .map(|(gs, gt)| {
                let mut m = CMatrix::zeros(gt.rows(), gs.rows());
                for i in 0..gt.rows() {
                    for j in 0..gs.rows() {
                        m[(i, j)] = random_complex(rng);
                    }
                }
                m
            })
            .collect();
        BundleMap { blocks }
    }

    fn local_grams(&self, a: &HilbBundle<T>) -> Option<Vec<CMatrix<T>>> {
        Some(a.grams.clone())
    }

    fn local_maps(&self, f: &BundleMap<T>) -> Option<Vec<CMatrix<T>>> {
        Some(f.blocks.clone())
    }
}

/// Monoidal dual of a finite Hilbert bundle viewed as a symmetric bimodule
/// over functions on its base; pointwise this is the conjugate dual.
pub fn rieffel_dual<T: Real>(b: &HilbBundle<T>) -> HilbBundle<T> {
    HilbBundles::new(b.n_points(), 1).dagger(b)
}

// ---------------------------------------------------------------------------
// One-dimensional C*-categories

/// C*-category over a fixed object set with every hom one-dimensional.
///
/// `e_ab` spans `C_ab` with `|e_ab|^2 = metric[a][b]`,
/// `e_ab ∘ e_bc = comp[a][b][c] e_ac` and
/// `(z e_ab)* = conj(z) metric[a][b] inv[a][b] e_ba`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneDimCStarCat<T: Real> {
    pub objects: Vec<String>,
    pub metric: Vec<Vec<T>>,
    pub comp: Vec<Vec<Vec<Complex<T>>>>,
    pub inv: Vec<Vec<Complex<T>>>,
}

impl<T: Real> OneDimCStarCat<T> {
    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    /// Coefficient of the involution, `metric * inv`.
    pub fn sigma(&self, a: usize, b: usize) -> Complex<T> {
        self.inv[a][b] * self.metric[a][b]
    }

    /// Coordinates of the identity of `C_aa`.
    pub fn unit_coord(&self, a: usize) -> Complex<T> {
        one::<T>() / self.comp[a][a][a]
    }

    /// The same category as general structure constants.
    pub fn to_cstar(&self) -> Result<CStarCategory<T>> {
        let k = self.n_objects();
        let comp = (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| {
                        (0..k)
                            .map(|c| Tensor3::from_data([1, 1, 1], vec![self.comp[a][b][c]]).expect("1x1x1"))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        // x in C_ba, x* in C_ab has coordinate sigma(b, a) conj(x)
        let inv = (0..k).map(|a| (0..k).map(|b| CMatrix::from_diag(&[self.sigma(b, a)])).collect()).collect();
        let units = (0..k).map(|a| vec![self.unit_coord(a)]).collect();
        CStarCategory::new(self.objects.clone(), vec![vec![1; k]; k], comp, inv, units)
    }

    fn shape_ok(&self) -> bool {
        let k = self.n_objects();
        self.metric.len() == k
            && self.inv.len() == k
            && self.comp.len() == k
            && self.metric.iter().all(|r| r.len() == k)
            && self.inv.iter().all(|r| r.len() == k)
            && self.comp.iter().all(|r| r.len() == k && r.iter().all(|s| s.len() == k))
    }
}

/// Object-relabelling *-functor between one-dimensional C*-categories:
/// `e_ab -> scalars[a][b] e'_{ψ(a) ψ(b)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneDimFunctor<T: Real> {
    pub source: OneDimCStarCat<T>,
    pub target: OneDimCStarCat<T>,
    pub object_map: Vec<usize>,
    pub scalars: Vec<Vec<Complex<T>>>,
}

impl<T: Real> OneDimFunctor<T> {
    pub fn identity(c: &OneDimCStarCat<T>) -> Self {
        let k = c.n_objects();
        OneDimFunctor {
            source: c.clone(),
            target: c.clone(),
            object_map: (0..k).collect(),
            scalars: vec![vec![one(); k]; k],
        }
    }

    /// Max relative failure of the *-functor equations.
    pub fn defect(&self) -> T {
        let (s, t, psi) = (&self.source, &self.target, &self.object_map);
        let k = s.n_objects();
        if psi.len() != k || t.n_objects() != k || self.scalars.len() != k {
            return T::infinity();
        }
        let mut seen = vec![false; k];
        for &o in psi {
            if o >= k || seen[o] {
                return T::infinity();
            }
            seen[o] = true;
        }
        let f = &self.scalars;
        let mut worst = T::zero();
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let l = s.comp[a][b][c] * f[a][c];
                    let r = f[a][b] * f[b][c] * t.comp[psi[a]][psi[b]][psi[c]];
                    worst = worst.max(rel_gap(l, r));
                }
                let l = s.sigma(a, b) * f[b][a];
                let r = f[a][b].conj() * t.sigma(psi[a], psi[b]);
                worst = worst.max(rel_gap(l, r));
            }
            worst = worst.max(rel_gap(f[a][a] * s.unit_coord(a), t.unit_coord(psi[a])));
        }
        worst
    }
}

/// One-dimensional C*-categories over `n_objects` objects, as the identity
/// 1-cells of a bicategory: only equal objects tensor, and every cell is an
/// identity.
#[derive(Clone, Debug, PartialEq)]
pub struct OneDimCats {
    pub n_objects: usize,
}

const ONE_DIM_MATCH: f64 = 1e-12;

impl<T: Real> MonoidalStarCategory<T> for OneDimCats {
    type Obj = OneDimCStarCat<T>;
    type Mor = OneDimFunctor<T>;

    fn unit_for(&self, a: &OneDimCStarCat<T>) -> OneDimCStarCat<T> {
        a.clone()
    }

    fn tensor(&self, a: &OneDimCStarCat<T>, b: &OneDimCStarCat<T>) -> Result<OneDimCStarCat<T>> {
        if MonoidalStarCategory::<T>::obj_distance(self, a, b) > lit(ONE_DIM_MATCH) {
            return Err(Error::NotComposable("one-dimensional categories differ".into()));
        }
        Ok(a.clone())
    }

    fn tensor_mor(&self, f: &OneDimFunctor<T>, g: &OneDimFunctor<T>) -> Result<OneDimFunctor<T>> {
        // whiskering by an identity is the other factor
        let d = |x: &OneDimFunctor<T>, y: &OneDimFunctor<T>| MonoidalStarCategory::<T>::mor_distance(self, x, y);
        if d(f, g) <= lit(ONE_DIM_MATCH) || d(f, &OneDimFunctor::identity(&f.source)) <= lit(ONE_DIM_MATCH) {
            return Ok(g.clone());
        }
        if d(g, &OneDimFunctor::identity(&g.source)) <= lit(ONE_DIM_MATCH) {
            return Ok(f.clone());
        }
        Err(Error::NotComposable("functors differ".into()))
    }

    fn dagger(&self, a: &OneDimCStarCat<T>) -> OneDimCStarCat<T> {
        a.clone()
    }

    fn dagger_mor(&self, f: &OneDimFunctor<T>) -> OneDimFunctor<T> {
        let k = f.object_map.len();
        let mut back = vec![0; k];
        for (a, &b) in f.object_map.iter().enumerate() {
            back[b] = a;
        }
        let scalars = (0..k).map(|a| (0..k).map(|b| one::<T>() / f.scalars[back[a]][back[b]]).collect()).collect();
        OneDimFunctor { source: f.target.clone(), target: f.source.clone(), object_map: back, scalars }
    }

    fn compose(&self, f: &OneDimFunctor<T>, g: &OneDimFunctor<T>) -> Result<OneDimFunctor<T>> {
        if MonoidalStarCategory::<T>::obj_distance(self, &g.target, &f.source) > lit(ONE_DIM_MATCH) {
            return Err(Error::NotComposable("functor endpoints differ".into()));
        }
        let k = g.object_map.len();
        let psi: Vec<usize> = g.object_map.iter().map(|&b| f.object_map[b]).collect();
        let scalars = (0..k)
            .map(|a| (0..k).map(|b| g.scalars[a][b] * f.scalars[g.object_map[a]][g.object_map[b]]).collect())
            .collect();
        Ok(OneDimFunctor { source: g.source.clone(), target: f.target.clone(), object_map: psi, scalars })
    }

    fn identity(&self, a: &OneDimCStarCat<T>) -> OneDimFunctor<T> {
        OneDimFunctor::identity(a)
    }

    fn cell(&self, cell: Cell, args: &[OneDimCStarCat<T>]) -> Result<OneDimFunctor<T>> {
        cell.check_arity(args)?;
        for a in &args[1..] {
            if MonoidalStarCategory::<T>::obj_distance(self, a, &args[0]) > lit(ONE_DIM_MATCH) {
                return Err(Error::NotComposable("cell arguments differ".into()));
            }
        }
        Ok(OneDimFunctor::identity(&args[0]))
    }

    fn obj_distance(&self, a: &OneDimCStarCat<T>, b: &OneDimCStarCat<T>) -> T {
        if a.n_objects() != b.n_objects() || !a.shape_ok() || !b.shape_ok() {
            return T::infinity();
        }
        let k = a.n_objects();
        let mut worst = T::zero();
        for x in 0..k {
            for y in 0..k {
                let (ha, hb) = (a.metric[x][y], b.metric[x][y]);
                worst = worst.max((ha - hb).abs() / (T::one() + ha.abs().max(hb.abs())));
                worst = worst.max(rel_gap(a.inv[x][y], b.inv[x][y]));
                for z in 0..k {
                    worst = worst.max(rel_gap(a.comp[x][y][z], b.comp[x][y][z]));
                }
            }
        }
        worst
    }

    fn mor_distance(&self, f: &OneDimFunctor<T>, g: &OneDimFunctor<T>) -> T {
        if f.object_map != g.object_map {
            return T::infinity();
        }
        let flat = |m: &OneDimFunctor<T>| m.scalars.iter().flatten().copied().collect::<Vec<_>>();
        scalar_distance(&flat(f), &flat(g))
            .max(MonoidalStarCategory::<T>::obj_distance(self, &f.source, &g.source))
            .max(MonoidalStarCategory::<T>::obj_distance(self, &f.target, &g.target))
    }

    fn sample_object(&self, rng: &mut ChaCha8Rng) -> OneDimCStarCat<T> {
        twisted_one_dim(rng, self.n_objects)
    }

    fn sample_morphism(&self, rng: &mut ChaCha8Rng, s: &OneDimCStarCat<T>, _t: &OneDimCStarCat<T>) -> OneDimFunctor<T> {
        // phase automorphism e_ab -> u_a conj(u_b) e_ab
        let k = s.n_objects();
        let u: Vec<Complex<T>> =
            (0..k).map(|_| Complex::from_polar(T::one(), lit(rng.gen_range(0.0..std::f64::consts::TAU)))).collect();
        let mut f = OneDimFunctor::identity(s);
        for a in 0..k {
            for b in 0..k {
                f.scalars[a][b] = u[a] * u[b].conj();
            }
        }
        f
    }

    fn sample_tuple(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<OneDimCStarCat<T>> {
        let o = MonoidalStarCategory::<T>::sample_object(self, rng);
        vec![o; n]
    }

    fn bicategory_mode(&self) -> bool {
        true
    }

    fn morphism_defect(&self, f: &OneDimFunctor<T>) -> T {
        f.defect()
    }
}

/// One-dimensional category whose basis is a twisted copy of the trivial one:
/// `e_ab = λ_ab e`, `λ_ab = (r_a / r_b) exp(iθ_ab)`.
pub fn twisted_one_dim<T: Real>(rng: &mut ChaCha8Rng, k: usize) -> OneDimCStarCat<T> {
    let r: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..2.0)).collect();
    let lam: Vec<Vec<Complex<f64>>> = (0..k)
        .map(|a| (0..k).map(|b| Complex::from_polar(r[a] / r[b], rng.gen_range(0.0..std::f64::consts::TAU))).collect())
        .collect();
    let cv = |z: Complex<f64>| Complex::new(lit::<T>(z.re), lit::<T>(z.im));
    OneDimCStarCat {
        objects: (0..k).map(|a| format!("O{a}")).collect(),
        metric: (0..k).map(|a| (0..k).map(|b| lit(lam[a][b].norm_sqr())).collect()).collect(),
        comp: (0..k)
            .map(|a| (0..k).map(|b| (0..k).map(|c| cv(lam[a][b] * lam[b][c] / lam[a][c])).collect()).collect())
            .collect(),
        inv: (0..k).map(|a| (0..k).map(|b| cv(Complex::new(1.0, 0.0) / (lam[a][b] * lam[b][a]))).collect()).collect(),
    }
}

// ---------------------------------------------------------------------------
// Coherence

/// Formal word in object variables, the unit, `⊗` and `†`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Word {
    Var(usize),
    Unit,
    Tensor(Box<Word>, Box<Word>),
    Dagger(Box<Word>),
}

impl Word {
    fn has_unit(&self) -> bool {
        match self {
            Word::Var(_) => false,
            Word::Unit => true,
            Word::Tensor(a, b) => a.has_unit() || b.has_unit(),
            Word::Dagger(a) => a.has_unit(),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            Word::Var(_) => 1,
            Word::Unit => 0,
            Word::Tensor(a, b) => a.leaves() + b.leaves(),
            Word::Dagger(a) => a.leaves(),
        }
    }

    fn relabel(&self, next: &mut usize) -> Word {
        match self {
            Word::Var(_) => {
                *next += 1;
                Word::Var(*next - 1)
            }
            Word::Unit => Word::Unit,
            Word::Tensor(a, b) => {
                let l = a.relabel(next);
                Word::Tensor(Box::new(l), Box::new(b.relabel(next)))
            }
            Word::Dagger(a) => Word::Dagger(Box::new(a.relabel(next))),
        }
    }

    fn at(&self, path: &[u8]) -> &Word {
        match (path.first(), self) {
            (None, w) => w,
            (Some(0), Word::Tensor(a, _)) | (Some(0), Word::Dagger(a)) => a.at(&path[1..]),
            (Some(1), Word::Tensor(_, b)) => b.at(&path[1..]),
            _ => unreachable!("invalid word path"),
        }
    }

    fn replace(&self, path: &[u8], new: Word) -> Word {
        match (path.first(), self) {
            (None, _) => new,
            (Some(0), Word::Tensor(a, b)) => Word::Tensor(Box::new(a.replace(&path[1..], new)), b.clone()),
            (Some(1), Word::Tensor(a, b)) => Word::Tensor(a.clone(), Box::new(b.replace(&path[1..], new))),
            (Some(0), Word::Dagger(a)) => Word::Dagger(Box::new(a.replace(&path[1..], new))),
            _ => unreachable!("invalid word path"),
        }
    }
}

/// Words with exactly `ops` occurrences of `⊗`/`†`, variables numbered left
/// to right, and no unit under a dagger.
pub fn enumerate_words(ops: usize) -> Vec<Word> {
    fn raw(n: usize) -> Vec<Word> {
        if n == 0 {
            return vec![Word::Var(0), Word::Unit];
        }
        let mut out: Vec<Word> = raw(n - 1)
            .into_iter()
            .filter(|w| !w.has_unit())
            .map(|w| Word::Dagger(Box::new(w)))
            .collect();
        for i in 0..n {
            for l in raw(i) {
                for r in raw(n - 1 - i) {
                    out.push(Word::Tensor(Box::new(l.clone()), Box::new(r)));
                }
            }
        }
        out
    }
    raw(ops).into_iter().map(|w| w.relabel(&mut 0)).collect()
}

/// One rewrite toward normal form (right-nested tensors, daggers on variables only).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rule {
    Assoc,
    LeftUnit,
    RightUnit,
    Reverse,
    DoubleDagger,
}

fn redexes(w: &Word, path: &mut Vec<u8>, out: &mut Vec<(Vec<u8>, Rule)>) {
    match w {
        Word::Tensor(a, b) => {
            if matches!(**a, Word::Tensor(..)) {
                out.push((path.clone(), Rule::Assoc));
            }
            if **a == Word::Unit {
                out.push((path.clone(), Rule::LeftUnit));
            }
            if **b == Word::Unit {
                out.push((path.clone(), Rule::RightUnit));
            }
            path.push(0);
            redexes(a, path, out);
            path.pop();
            path.push(1);
            redexes(b, path, out);
            path.pop();
        }
        Word::Dagger(a) => {
            match **a {
                Word::Tensor(..) => out.push((path.clone(), Rule::Reverse)),
                Word::Dagger(_) => out.push((path.clone(), Rule::DoubleDagger)),
                _ => {}
            }
            path.push(0);
            redexes(a, path, out);
            path.pop();
        }
        _ => {}
    }
}

fn contract(w: &Word, rule: Rule) -> Word {
    match (rule, w) {
        (Rule::Assoc, Word::Tensor(ab, c)) => match &**ab {
            Word::Tensor(a, b) => Word::Tensor(a.clone(), Box::new(Word::Tensor(b.clone(), c.clone()))),
            _ => unreachable!(),
        },
        (Rule::LeftUnit, Word::Tensor(_, b)) => (**b).clone(),
        (Rule::RightUnit, Word::Tensor(a, _)) => (**a).clone(),
        (Rule::Reverse, Word::Dagger(ab)) => match &**ab {
            Word::Tensor(a, b) => Word::Tensor(
                Box::new(Word::Dagger(b.clone())),
                Box::new(Word::Dagger(a.clone())),
            ),
            _ => unreachable!(),
        },
        (Rule::DoubleDagger, Word::Dagger(a)) => match &**a {
            Word::Dagger(x) => (**x).clone(),
            _ => unreachable!(),
        },
        _ => unreachable!("rule does not apply"),
    }
}

struct Evaluator<'a, T: Real, M: MonoidalStarCategory<T>> {
    inst: &'a M,
    vars: &'a [M::Obj],
    _t: std::marker::PhantomData<T>,
}

impl<T: Real, M: MonoidalStarCategory<T>> Evaluator<'_, T, M> {
    fn obj(&self, w: &Word) -> Result<M::Obj> {
        Ok(match w {
            Word::Var(i) => self.vars[*i].clone(),
            Word::Unit => self.inst.unit_for(&self.vars[0]),
            Word::Tensor(a, b) => self.inst.tensor(&self.obj(a)?, &self.obj(b)?)?,
            Word::Dagger(a) => self.inst.dagger(&self.obj(a)?),
        })
    }

    /// Morphism for rewriting the redex at `path`; `forward` picks old -> new.
    fn step(&self, w: &Word, path: &[u8], rule: Rule, forward: bool) -> Result<M::Mor> {
        if path.is_empty() {
            let (cell, args) = match (rule, w) {
                (Rule::Assoc, Word::Tensor(ab, c)) => match &**ab {
                    Word::Tensor(a, b) => (Cell::Alpha, vec![self.obj(a)?, self.obj(b)?, self.obj(c)?]),
                    _ => unreachable!(),
                },
                (Rule::LeftUnit, Word::Tensor(_, b)) => (Cell::Lambda, vec![self.obj(b)?]),
                (Rule::RightUnit, Word::Tensor(a, _)) => (Cell::Rho, vec![self.obj(a)?]),
                (Rule::Reverse, Word::Dagger(ab)) => match &**ab {
                    Word::Tensor(a, b) => (Cell::Gamma, vec![self.obj(a)?, self.obj(b)?]),
                    _ => unreachable!(),
                },
                (Rule::DoubleDagger, Word::Dagger(a)) => match &**a {
                    Word::Dagger(x) => (Cell::BetaInv, vec![self.obj(x)?]),
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            };
            let cell = if forward { cell } else { cell.inverse() };
            return self.inst.cell(cell, &args);
        }
        match w {
            Word::Tensor(a, b) if path[0] == 0 => {
                self.inst.tensor_mor(&self.step(a, &path[1..], rule, forward)?, &self.inst.identity(&self.obj(b)?))
            }
            Word::Tensor(a, b) => {
                self.inst.tensor_mor(&self.inst.identity(&self.obj(a)?), &self.step(b, &path[1..], rule, forward)?)
            }
            Word::Dagger(a) => Ok(self.inst.dagger_mor(&self.step(a, &path[1..], rule, !forward)?)),
            _ => unreachable!(),
        }
    }
}

/// Worst failure of naturality of α, λ, ρ, β, γ against sampled morphisms.
fn naturality_defect<T: Real, M: MonoidalStarCategory<T>>(inst: &M, rng: &mut ChaCha8Rng) -> T {
    let run = |rng: &mut ChaCha8Rng| -> Result<T> {
        let objs = inst.sample_tuple(rng, 6);
        let (src, dst) = objs.split_at(3);
        let fs: Vec<M::Mor> = if inst.bicategory_mode() {
            vec![inst.sample_morphism(rng, &src[0], &dst[0]); 3]
        } else {
            (0..3).map(|i| inst.sample_morphism(rng, &src[i], &dst[i])).collect()
        };
        let (f, g, h) = (&fs[0], &fs[1], &fs[2]);
        let mut worst = T::zero();

        let lhs = inst.compose(&inst.cell(Cell::Alpha, dst)?, &inst.tensor_mor(&inst.tensor_mor(f, g)?, h)?)?;
        let rhs = inst.compose(&inst.tensor_mor(f, &inst.tensor_mor(g, h)?)?, &inst.cell(Cell::Alpha, src)?)?;
        worst = worst.max(inst.mor_distance(&lhs, &rhs));

        let id_unit = inst.identity(&inst.unit_for(&src[0]));
        let lhs = inst.compose(&inst.cell(Cell::Lambda, &dst[..1])?, &inst.tensor_mor(&id_unit, f)?)?;
        let rhs = inst.compose(f, &inst.cell(Cell::Lambda, &src[..1])?)?;
        worst = worst.max(inst.mor_distance(&lhs, &rhs));

        let lhs = inst.compose(&inst.cell(Cell::Rho, &dst[..1])?, &inst.tensor_mor(f, &id_unit)?)?;
        let rhs = inst.compose(f, &inst.cell(Cell::Rho, &src[..1])?)?;
        worst = worst.max(inst.mor_distance(&lhs, &rhs));

        let ff = inst.dagger_mor(&inst.dagger_mor(f));
        let lhs = inst.compose(&inst.cell(Cell::Beta, &dst[..1])?, f)?;
        let rhs = inst.compose(&ff, &inst.cell(Cell::Beta, &src[..1])?)?;
        worst = worst.max(inst.mor_distance(&lhs, &rhs));

        // γ_{a,b} ∘ (f⊗g)† = (g†⊗f†) ∘ γ_{a',b'}
        let lhs = inst.compose(&inst.cell(Cell::Gamma, &src[..2])?, &inst.dagger_mor(&inst.tensor_mor(f, g)?))?;
        let rhs = inst.compose(
            &inst.tensor_mor(&inst.dagger_mor(g), &inst.dagger_mor(f))?,
            &inst.cell(Cell::Gamma, &dst[..2])?,
        )?;
        worst = worst.max(inst.mor_distance(&lhs, &rhs));
        Ok(worst)
    };
    run(rng).unwrap_or(T::infinity())
}

#[derive(Clone, Copy)]
enum Strategy {
    First,
    Last,
    Random,
}

fn rewrite_path(w: &Word, strategy: Strategy, rng: &mut ChaCha8Rng) -> Vec<(Word, Vec<u8>, Rule)> {
    let mut cur = w.clone();
    let mut steps = Vec::new();
    loop {
        let mut rs = Vec::new();
        redexes(&cur, &mut Vec::new(), &mut rs);
        let Some((path, rule)) = (match strategy {
            Strategy::First => rs.first().cloned(),
            Strategy::Last => rs.last().cloned(),
            Strategy::Random => rs.choose(rng).cloned(),
        }) else {
            break;
        };
        let next = cur.replace(&path, contract(cur.at(&path), rule));
        steps.push((cur, path, rule));
        cur = next;
    }
    steps.push((cur, Vec::new(), Rule::Assoc));
    steps
}

/// Evaluates every formal diagram with at most `depth` occurrences of `⊗`/`†`.
///
/// Each word is rewritten to its normal form along several different
/// paths (outermost-first, innermost-last, two seeded random); the composite
/// of cells along each path is evaluated on `samples` object tuples drawn from
/// the instance and compared. Words containing a unit under a dagger are not
/// generated. Also records that every cell composed with its inverse is an
/// identity.
pub fn check_coherence<T: Real, M: MonoidalStarCategory<T>>(
    inst: &M,
    depth: usize,
    samples: usize,
    seed: u64,
    tol: T,
) -> Report<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<Word> = (1..=depth.max(1)).flat_map(enumerate_words).collect();
    let arity = words.iter().map(Word::leaves).max().unwrap_or(1).max(3);

    // rewrite paths depend only on the word
    let mut plans = Vec::with_capacity(words.len());
    for w in &words {
        let mut ps = vec![
            rewrite_path(w, Strategy::First, &mut rng),
            rewrite_path(w, Strategy::Last, &mut rng),
            rewrite_path(w, Strategy::Random, &mut rng),
            rewrite_path(w, Strategy::Random, &mut rng),
        ];
        ps.dedup_by(|a, b| a.iter().map(|s| (&s.1, s.2)).eq(b.iter().map(|s| (&s.1, s.2))));
        plans.push(ps);
    }
    let confluent = plans.iter().all(|ps| ps.iter().all(|p| p.last().map(|s| &s.0) == ps[0].last().map(|s| &s.0)));

    let mut worst = T::zero();
    let mut inverses = T::zero();
    let mut endpoint = T::zero();
    let mut natural = T::zero();
    for _ in 0..samples {
        let vars = inst.sample_tuple(&mut rng, arity);
        let ev = Evaluator { inst, vars: &vars, _t: std::marker::PhantomData };
        for (w, ps) in words.iter().zip(&plans) {
            let mut results: Vec<M::Mor> = Vec::new();
            for p in ps {
                let mut acc = match ev.obj(w) {
                    Ok(o) => inst.identity(&o),
                    Err(_) => {
                        worst = T::infinity();
                        continue;
                    }
                };
                let mut ok = true;
                for (word, path, rule) in &p[..p.len() - 1] {
                    match ev.step(word, path, *rule, true).and_then(|s| inst.compose(&s, &acc)) {
                        Ok(m) => acc = m,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    worst = T::infinity();
                    continue;
                }
                // codomain of the composite must be the normal form object
                if let Ok(nf) = ev.obj(&p[p.len() - 1].0) {
                    let via = inst.compose(&inst.identity(&nf), &acc);
                    if via.is_err() {
                        endpoint = T::infinity();
                    }
                }
                results.push(acc);
            }
            for r in &results[1.min(results.len())..] {
                worst = worst.max(inst.mor_distance(&results[0], r));
            }
        }
        natural = natural.max(naturality_defect(inst, &mut rng));
        let a = &vars[..3];
        for cell in [Cell::Alpha, Cell::Lambda, Cell::Rho, Cell::Beta, Cell::Gamma] {
            let args = &a[..cell.arity()];
            let fwd = inst.cell(cell, args);
            let bwd = inst.cell(cell.inverse(), args);
            match (fwd, bwd) {
                (Ok(f), Ok(b)) => match inst.compose(&b, &f) {
                    Ok(id) => {
                        let start = match cell {
                            Cell::Alpha => inst.tensor(&args[0], &args[1]).and_then(|x| inst.tensor(&x, &args[2])),
                            Cell::Lambda => inst.tensor(&inst.unit_for(&args[0]), &args[0]),
                            Cell::Rho => inst.tensor(&args[0], &inst.unit_for(&args[0])),
                            Cell::Beta => Ok(args[0].clone()),
                            _ => inst.tensor(&args[0], &args[1]).map(|x| inst.dagger(&x)),
                        };
                        match start {
                            Ok(s) => inverses = inverses.max(inst.mor_distance(&id, &inst.identity(&s))),
                            Err(_) => inverses = T::infinity(),
                        }
                    }
                    Err(_) => inverses = T::infinity(),
                },
                _ => inverses = T::infinity(),
            }
        }
    }
    let mut rep = Report::new();
    rep.record_bool("normal_form_confluence", confluent);
    rep.record("diagram_commutativity", worst, tol);
    rep.record("normal_form_codomain", endpoint, tol);
    rep.record("cells_invertible", inverses, tol);
    rep.record("cell_naturality", natural, tol);
    rep
}
