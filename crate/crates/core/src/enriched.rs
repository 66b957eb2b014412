//! Enriched categorical bundles over finite base categories.
//!
//! A bundle assigns an object `E_x` of a monoidal *-category to each base
//! arrow, with structure morphisms `μ_{x,y}: E_x⊗E_y -> E_{x∘y}`,
//! `j_a: I -> E_{id_a}` and optionally `ν_x: E_x† -> E_{x*}`.

use std::fmt::Debug;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cstar::{CStarCategory, FiniteAlgebra, Report, Tensor3};
use crate::error::{Error, Result};
use crate::monoidal::{
    Cell, HilbBundles, LineBundles, MonoidalStarCategory, OneDimCStarCat, OneDimCats, OneDimFunctor,
};
use crate::numlin::{self, CMatrix};
use crate::scalar::{lit, one, zero, Real};

/// Random fiber elements per arrow in the Fell check, on top of a basis.
pub const FELL_SAMPLES: usize = 32;
const FELL_SEED: u64 = 0xfe11_b0d1;

/// Finite category with finite composition and involution tables.
///
/// Arrow `x` goes from `arrows[x].1` to `arrows[x].0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseCategory {
    n_objects: usize,
    arrows: Vec<(usize, usize)>,
    comp: Vec<Vec<Option<usize>>>,
    star: Option<Vec<usize>>,
    ids: Vec<usize>,
    object_names: Vec<String>,
}

impl BaseCategory {
    /// Builds and validates a base category: endpoints, identities,
    /// associativity, and (if given) that `star` is an involutive
    /// contravariant endpoint-swapping map fixing identities.
    pub fn new(
        n_objects: usize,
        arrows: Vec<(usize, usize)>,
        comp: Vec<Vec<Option<usize>>>,
        star: Option<Vec<usize>>,
        ids: Vec<usize>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidCategory(m));
        let n = arrows.len();
        if ids.len() != n_objects || comp.len() != n || comp.iter().any(|r| r.len() != n) {
            return bad("table sizes do not match".into());
        }
        if arrows.iter().any(|&(t, s)| t >= n_objects || s >= n_objects) {
            return bad("arrow endpoint out of range".into());
        }
        for (a, &i) in ids.iter().enumerate() {
            if i >= n || arrows[i] != (a, a) {
                return bad(format!("identity of object {a} is not a loop at {a}"));
            }
        }
        for x in 0..n {
            for y in 0..n {
                let composable = arrows[x].1 == arrows[y].0;
                match comp[x][y] {
                    Some(z) if !composable || z >= n || arrows[z] != (arrows[x].0, arrows[y].1) => {
                        return bad(format!("composite of {x} and {y} has wrong endpoints"));
                    }
                    None if composable => return bad(format!("{x} and {y} are composable but have no composite")),
                    _ => {}
                }
            }
        }
        let object_names = (0..n_objects).map(|a| format!("O{a}")).collect();
        let cat = BaseCategory { n_objects, arrows, comp, star, ids, object_names };
        for x in 0..n {
            let (t, s) = cat.arrows[x];
            if cat.compose(cat.ids[t], x) != Some(x) || cat.compose(x, cat.ids[s]) != Some(x) {
                return bad(format!("identity law fails at arrow {x}"));
            }
            for y in 0..n {
                for z in 0..n {
                    if let (Some(xy), Some(yz)) = (cat.compose(x, y), cat.compose(y, z)) {
                        if cat.compose(xy, z) != cat.compose(x, yz) {
                            return bad(format!("associativity fails at ({x},{y},{z})"));
                        }
                    }
                }
            }
        }
        if let Some(st) = &cat.star {
            if st.len() != n {
                return bad("involution table has wrong length".into());
            }
            for x in 0..n {
                let (t, s) = cat.arrows[x];
                if st[x] >= n || cat.arrows[st[x]] != (s, t) || st[st[x]] != x {
                    return bad(format!("involution is not an endpoint-swapping involution at {x}"));
                }
                for y in 0..n {
                    if let Some(xy) = cat.compose(x, y) {
                        if cat.compose(st[y], st[x]) != Some(st[xy]) {
                            return bad(format!("involution is not contravariant at ({x},{y})"));
                        }
                    }
                }
            }
            if cat.ids.iter().any(|&i| st[i] != i) {
                return bad("involution moves an identity".into());
            }
        }
        Ok(cat)
    }

    /// The total relation on `n` objects: one arrow `a <- b` for each pair,
    /// numbered `a * n + b`.
    pub fn full_relation(n: usize) -> Self {
        let labels = vec![0; n];
        Self::equivalence_relation(&labels)
    }

    /// The discrete category on `n` objects (only identities).
    pub fn delta(n: usize) -> Self {
        let labels: Vec<usize> = (0..n).collect();
        Self::equivalence_relation(&labels)
    }

    /// The equivalence relation "same label", as a groupoid with involution
    /// `(a, b) -> (b, a)`. Arrows are ordered lexicographically by `(target, source)`.
    pub fn equivalence_relation(labels: &[usize]) -> Self {
        let n = labels.len();
        let mut arrows = Vec::new();
        let mut index = vec![vec![None; n]; n];
        for a in 0..n {
            for b in 0..n {
                if labels[a] == labels[b] {
                    index[a][b] = Some(arrows.len());
                    arrows.push((a, b));
                }
            }
        }
        let m = arrows.len();
        let mut comp = vec![vec![None; m]; m];
        for x in 0..m {
            for y in 0..m {
                if arrows[x].1 == arrows[y].0 {
                    comp[x][y] = index[arrows[x].0][arrows[y].1];
                }
            }
        }
        let star = (0..m).map(|x| index[arrows[x].1][arrows[x].0].expect("symmetric")).collect();
        let ids = (0..n).map(|a| index[a][a].expect("reflexive")).collect();
        BaseCategory::new(n, arrows, comp, Some(star), ids).expect("equivalence relations are valid")
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn object_names(&self) -> &[String] {
        &self.object_names
    }

    pub fn with_object_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_objects {
            return Err(Error::InvalidCategory("wrong number of object names".into()));
        }
        self.object_names = names;
        Ok(self)
    }

    pub fn n_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn target(&self, x: usize) -> usize {
        self.arrows[x].0
    }

    pub fn source(&self, x: usize) -> usize {
        self.arrows[x].1
    }

    pub fn arrows(&self) -> &[(usize, usize)] {
        &self.arrows
    }

    /// `x ∘ y` when defined.
    pub fn compose(&self, x: usize, y: usize) -> Option<usize> {
        self.comp[x][y]
    }

    pub fn star(&self, x: usize) -> Option<usize> {
        self.star.as_ref().map(|s| s[x])
    }

    pub fn has_involution(&self) -> bool {
        self.star.is_some()
    }

    pub fn identity(&self, a: usize) -> usize {
        self.ids[a]
    }

    pub fn is_identity(&self, x: usize) -> bool {
        self.ids[self.target(x)] == x
    }

    /// Arrow with the given endpoints, if there is exactly one such arrow.
    pub fn arrow_between(&self, target: usize, source: usize) -> Option<usize> {
        let mut it = (0..self.n_arrows()).filter(|&x| self.arrows[x] == (target, source));
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    /// Whether `x ∘ x* ∘ x = x` for every arrow.
    pub fn is_inverse_star(&self) -> bool {
        let Some(st) = &self.star else { return false };
        (0..self.n_arrows()).all(|x| {
            self.compose(x, st[x]).and_then(|xx| self.compose(xx, x)) == Some(x)
        })
    }

    pub fn composable_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_arrows();
        (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| self.comp[x][y].is_some()).collect()
    }

    pub fn composable_triples(&self) -> Vec<(usize, usize, usize)> {
        let n = self.n_arrows();
        let mut out = Vec::new();
        for (x, y) in self.composable_pairs() {
            for z in 0..n {
                if self.comp[y][z].is_some() {
                    out.push((x, y, z));
                }
            }
        }
        out
    }
}

/// Functor between base categories, by object and arrow tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseFunctor {
    pub object_map: Vec<usize>,
    pub arrow_map: Vec<usize>,
}

impl BaseFunctor {
    pub fn identity(base: &BaseCategory) -> Self {
        BaseFunctor { object_map: (0..base.n_objects()).collect(), arrow_map: (0..base.n_arrows()).collect() }
    }

    /// The functor between relations induced by an object map, if it exists.
    pub fn from_object_map(src: &BaseCategory, dst: &BaseCategory, object_map: Vec<usize>) -> Result<Self> {
        if object_map.len() != src.n_objects() || object_map.iter().any(|&o| o >= dst.n_objects()) {
            return Err(Error::NotAFunctor("object map has wrong size".into()));
        }
        let arrow_map = (0..src.n_arrows())
            .map(|x| {
                let (t, s) = src.arrows[x];
                dst.arrow_between(object_map[t], object_map[s])
                    .ok_or_else(|| Error::NotAFunctor(format!("no unique image for arrow {x}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let f = BaseFunctor { object_map, arrow_map };
        f.verify(src, dst)?;
        Ok(f)
    }

    /// Checks the functor laws, and compatibility with involutions when both
    /// bases have one.
    pub fn verify(&self, src: &BaseCategory, dst: &BaseCategory) -> Result<()> {
        let bad = |m: String| Err(Error::NotAFunctor(m));
        if self.object_map.len() != src.n_objects() || self.arrow_map.len() != src.n_arrows() {
            return bad("tables have wrong size".into());
        }
        if self.object_map.iter().any(|&o| o >= dst.n_objects()) || self.arrow_map.iter().any(|&x| x >= dst.n_arrows())
        {
            return bad("image out of range".into());
        }
        for x in 0..src.n_arrows() {
            let fx = self.arrow_map[x];
            if dst.arrows[fx] != (self.object_map[src.target(x)], self.object_map[src.source(x)]) {
                return bad(format!("arrow {x} lands on wrong endpoints"));
            }
            if let (Some(sx), Some(sfx)) = (src.star(x), dst.star(fx)) {
                if self.arrow_map[sx] != sfx {
                    return bad(format!("involution not preserved at {x}"));
                }
            }
        }
        for a in 0..src.n_objects() {
            if self.arrow_map[src.identity(a)] != dst.identity(self.object_map[a]) {
                return bad(format!("identity of {a} not preserved"));
            }
        }
        for (x, y) in src.composable_pairs() {
            let xy = src.compose(x, y).expect("composable");
            if dst.compose(self.arrow_map[x], self.arrow_map[y]) != Some(self.arrow_map[xy]) {
                return bad(format!("composition not preserved at ({x},{y})"));
            }
        }
        Ok(())
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &BaseFunctor) -> Result<BaseFunctor> {
        if inner.object_map.iter().any(|&o| o >= self.object_map.len())
            || inner.arrow_map.iter().any(|&x| x >= self.arrow_map.len())
        {
            return Err(Error::NotComposable("functor images out of range".into()));
        }
        Ok(BaseFunctor {
            object_map: inner.object_map.iter().map(|&o| self.object_map[o]).collect(),
            arrow_map: inner.arrow_map.iter().map(|&x| self.arrow_map[x]).collect(),
        })
    }
}

/// Random class-preserving functor between two equivalence relations.
pub fn random_relation_functor(
    rng: &mut ChaCha8Rng,
    src_labels: &[usize],
    dst_labels: &[usize],
) -> Result<BaseFunctor> {
    if dst_labels.is_empty() {
        return Err(Error::BadSize("empty target relation".into()));
    }
    let src = BaseCategory::equivalence_relation(src_labels);
    let dst = BaseCategory::equivalence_relation(dst_labels);
    let mut classes: Vec<usize> = dst_labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut class_image = std::collections::BTreeMap::new();
    let object_map = src_labels
        .iter()
        .map(|l| {
            let c = *class_image.entry(*l).or_insert_with(|| classes[rng.gen_range(0..classes.len())]);
            let members: Vec<usize> = (0..dst_labels.len()).filter(|&o| dst_labels[o] == c).collect();
            members[rng.gen_range(0..members.len())]
        })
        .collect();
    BaseFunctor::from_object_map(&src, &dst, object_map)
}

/// Enriched (optionally *-) categorical bundle.
#[derive(Clone, Debug)]
pub struct EnrichedBundle<T: Real, M: MonoidalStarCategory<T>> {
    pub base: BaseCategory,
    pub enriching: M,
    /// `E_x` per arrow.
    pub fiber: Vec<M::Obj>,
    /// `μ_{x,y}` for every composable pair.
    pub mu: Vec<Vec<Option<M::Mor>>>,
    /// `j_a: I -> E_{id_a}` per object.
    pub j: Vec<M::Mor>,
    /// `ν_x: E_x† -> E_{x*}` per arrow.
    pub nu: Option<Vec<M::Mor>>,
    pub _scalar: std::marker::PhantomData<T>,
}

/// Same-base morphism: one enriching morphism `F_x: E¹_x -> E²_x` per arrow.
#[derive(Clone, Debug, PartialEq)]
pub struct EnrichedMorphism<Mor> {
    pub components: Vec<Mor>,
}

fn ok_or_inf<T: Real>(r: Result<T>) -> T {
    r.unwrap_or(T::infinity())
}

impl<T: Real, M: MonoidalStarCategory<T>> EnrichedBundle<T, M> {
    pub fn new(
        base: BaseCategory,
        enriching: M,
        fiber: Vec<M::Obj>,
        mu: Vec<Vec<Option<M::Mor>>>,
        j: Vec<M::Mor>,
        nu: Option<Vec<M::Mor>>,
    ) -> Result<Self> {
        let n = base.n_arrows();
        if fiber.len() != n || j.len() != base.n_objects() || nu.as_ref().is_some_and(|v| v.len() != n) {
            return Err(Error::ShapeMismatch("bundle tables do not match the base".into()));
        }
        if mu.len() != n || mu.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("mu table does not match the base".into()));
        }
        for x in 0..n {
            for y in 0..n {
                if base.compose(x, y).is_some() != mu[x][y].is_some() {
                    return Err(Error::ShapeMismatch(format!("mu defined off composable pairs at ({x},{y})")));
                }
            }
        }
        if nu.is_some() && !base.has_involution() {
            return Err(Error::ShapeMismatch("involution data over a base without involution".into()));
        }
        Ok(EnrichedBundle { base, enriching, fiber, mu, j, nu, _scalar: std::marker::PhantomData })
    }

    pub fn mu(&self, x: usize, y: usize) -> Result<&M::Mor> {
        self.mu[x][y].as_ref().ok_or_else(|| Error::NotComposable(format!("arrows {x} and {y}")))
    }

    fn inst(&self) -> &M {
        &self.enriching
    }

    /// `μ_{x∘y,z}∘(μ_{x,y}⊗ι) = μ_{x,y∘z}∘(ι⊗μ_{y,z})∘α` on every composable triple.
    pub fn check_pentagon(&self, tol: T) -> Report<T> {
        let m = self.inst();
        let mut worst = T::zero();
        for (x, y, z) in self.base.composable_triples() {
            let d = (|| -> Result<T> {
                let xy = self.base.compose(x, y).expect("composable");
                let yz = self.base.compose(y, z).expect("composable");
                let (ex, ey, ez) = (&self.fiber[x], &self.fiber[y], &self.fiber[z]);
                let lhs = m.compose(self.mu(xy, z)?, &m.tensor_mor(self.mu(x, y)?, &m.identity(ez))?)?;
                let rhs = m.compose(
                    self.mu(x, yz)?,
                    &m.compose(
                        &m.tensor_mor(&m.identity(ex), self.mu(y, z)?)?,
                        &m.cell(Cell::Alpha, &[ex.clone(), ey.clone(), ez.clone()])?,
                    )?,
                )?;
                Ok(m.mor_distance(&lhs, &rhs))
            })();
            worst = worst.max(ok_or_inf(d));
        }
        let mut rep = Report::new();
        rep.record("pentagon", worst, tol);
        rep
    }

    /// `μ_{id,x}∘(j⊗ι) = λ` and `μ_{x,id}∘(ι⊗j) = ρ` for every arrow.
    pub fn check_unit_triangles(&self, tol: T) -> Report<T> {
        let m = self.inst();
        let (mut left, mut right) = (T::zero(), T::zero());
        for x in 0..self.base.n_arrows() {
            let ex = &self.fiber[x];
            let (t, s) = (self.base.target(x), self.base.source(x));
            let l = (|| -> Result<T> {
                let lhs = m.compose(self.mu(self.base.identity(t), x)?, &m.tensor_mor(&self.j[t], &m.identity(ex))?)?;
                Ok(m.mor_distance(&lhs, &m.cell(Cell::Lambda, std::slice::from_ref(ex))?))
            })();
            let r = (|| -> Result<T> {
                let lhs = m.compose(self.mu(x, self.base.identity(s))?, &m.tensor_mor(&m.identity(ex), &self.j[s])?)?;
                Ok(m.mor_distance(&lhs, &m.cell(Cell::Rho, std::slice::from_ref(ex))?))
            })();
            left = left.max(ok_or_inf(l));
            right = right.max(ok_or_inf(r));
        }
        let mut rep = Report::new();
        rep.record("left_unit_triangle", left, tol);
        rep.record("right_unit_triangle", right, tol);
        rep
    }

    /// The two involution diagrams, stated for a contravariant `†`:
    /// `β_{E_x}∘ν_{x*} = (ν_x)†` and
    /// `μ_{y*,x*}∘(ν_y⊗ν_x)∘γ_{E_x,E_y}∘(μ_{x,y})† = ν_{x∘y}`.
    pub fn check_star_diagrams(&self, tol: T) -> Result<Report<T>> {
        let nu = self.nu.as_ref().ok_or(Error::MissingInvolution)?;
        let m = self.inst();
        let st = |x: usize| self.base.star(x).expect("involution present");
        let mut double = T::zero();
        for x in 0..self.base.n_arrows() {
            let d = (|| -> Result<T> {
                let lhs = m.compose(&m.cell(Cell::Beta, std::slice::from_ref(&self.fiber[x]))?, &nu[st(x)])?;
                Ok(m.mor_distance(&lhs, &m.dagger_mor(&nu[x])))
            })();
            double = double.max(ok_or_inf(d));
        }
        let mut anti = T::zero();
        for (x, y) in self.base.composable_pairs() {
            let d = (|| -> Result<T> {
                let xy = self.base.compose(x, y).expect("composable");
                let (sx, sy) = (st(x), st(y));
                let gamma = m.cell(Cell::Gamma, &[self.fiber[x].clone(), self.fiber[y].clone()])?;
                let lhs = m.compose(
                    self.mu(sy, sx)?,
                    &m.compose(
                        &m.tensor_mor(&nu[y], &nu[x])?,
                        &m.compose(&gamma, &m.dagger_mor(self.mu(x, y)?))?,
                    )?,
                )?;
                Ok(m.mor_distance(&lhs, &nu[xy]))
            })();
            anti = anti.max(ok_or_inf(d));
        }
        let mut rep = Report::new();
        rep.record("double_dagger", double, tol);
        rep.record("star_antimultiplicativity", anti, tol);
        Ok(rep)
    }

    /// Enriched C*-property: `|μ_{x*,x}(ν_x(e), e)| = |e|^2` on sampled
    /// `e ∈ E_x`, `ν_x` isometric, and `μ_{x*,x}(ν_x(e), e)` positive in the
    /// fiber algebra `E_{x*x}`.
    ///
    /// `ν_x(e)` means `ν_x` applied to the functional `<e, ->`.
    pub fn check_fell_property(&self, tol: T) -> Result<Report<T>> {
        let nu = self.nu.as_ref().ok_or(Error::MissingInvolution)?;
        if !self.base.is_inverse_star() {
            return Err(Error::NotInverseBase);
        }
        let m = self.inst();
        let grams: Vec<Vec<CMatrix<T>>> =
            self.fiber.iter().map(|e| m.local_grams(e).ok_or(Error::NoNorm)).collect::<Result<_>>()?;
        let local = |f: &M::Mor| m.local_maps(f).ok_or(Error::NoNorm);
        let mut rng = ChaCha8Rng::seed_from_u64(FELL_SEED);
        let (mut ident, mut iso, mut pos) = (T::zero(), T::zero(), T::zero());
        let n_points = grams.first().map_or(0, Vec::len);

        // fiber algebras over x*x, built lazily per arrow
        let mut algebras: Vec<Option<Vec<Option<(FiniteAlgebra<T>, CMatrix<T>, CMatrix<T>)>>>> =
            vec![None; self.base.n_arrows()];

        for x in 0..self.base.n_arrows() {
            let sx = self.base.star(x).expect("inverse base has involution");
            let p_arrow = self.base.compose(sx, x).expect("x* x composable");
            let nx = local(&nu[x])?;
            let mux = local(self.mu(sx, x)?)?;
            // ν_x isometric: N^* G_{x*} N equals the dual Gram G_x^{-T}
            for p in 0..n_points {
                let g = &grams[x][p];
                if g.rows() == 0 {
                    continue;
                }
                let dual = numlin::inverse(g)?.transpose();
                let pulled = &(&nx[p].adjoint() * &grams[sx][p]) * &nx[p];
                iso = iso.max(pulled.distance(&dual) / (T::one() + dual.max_abs()));
            }
            if algebras[p_arrow].is_none() {
                let mu_pp = local(self.mu(p_arrow, p_arrow)?)?;
                let nu_pp = local(&nu[p_arrow])?;
                let algs = (0..n_points)
                    .map(|p| {
                        let d = grams[p_arrow][p].rows();
                        let mut t = Tensor3::zeros(d, d, d);
                        for i in 0..d {
                            for jj in 0..d {
                                let mut v = vec![zero(); d * d];
                                v[i * d + jj] = one();
                                let out = mu_pp[p].mat_vec(&v);
                                for (k, z) in out.into_iter().enumerate() {
                                    t.set(i, jj, k, z);
                                }
                            }
                        }
                        let star = &nu_pp[p] * &grams[p_arrow][p].transpose();
                        let alg = FiniteAlgebra { tensor: t, star };
                        alg.orthonormalizer().ok().map(|(r, ri)| (alg, r, ri))
                    })
                    .collect();
                algebras[p_arrow] = Some(algs);
            }
            let algs = algebras[p_arrow].as_ref().expect("built above");

            let dims: Vec<usize> = grams[x].iter().map(|g| g.rows()).collect();
            let mut samples: Vec<Vec<Vec<Complex<T>>>> = Vec::new();
            for p in 0..n_points {
                for i in 0..dims[p] {
                    let mut e: Vec<Vec<Complex<T>>> = dims.iter().map(|&d| vec![zero(); d]).collect();
                    e[p][i] = one();
                    samples.push(e);
                }
            }
            for _ in 0..FELL_SAMPLES {
                samples.push(
                    dims.iter()
                        .map(|&d| {
                            (0..d)
                                .map(|_| Complex::new(lit(rng.gen_range(-1.0..1.0)), lit(rng.gen_range(-1.0..1.0))))
                                .collect()
                        })
                        .collect(),
                );
            }
            for e in &samples {
                let mut norm_e2 = T::zero();
                let mut norm_t = T::zero();
                for p in 0..n_points {
                    let v = &e[p];
                    if v.is_empty() {
                        continue;
                    }
                    let g = &grams[x][p];
                    let gv = g.mat_vec(v);
                    let n2 = v.iter().zip(&gv).fold(zero::<T>(), |a, (x, y)| a + x.conj() * *y).re;
                    norm_e2 = norm_e2.max(n2);
                    let riesz: Vec<Complex<T>> = g.transpose().mat_vec(&v.iter().map(|z| z.conj()).collect::<Vec<_>>());
                    let w = nx[p].mat_vec(&riesz);
                    let mut wv = Vec::with_capacity(w.len() * v.len());
                    for a in &w {
                        for b in v {
                            wv.push(*a * *b);
                        }
                    }
                    let t = mux[p].mat_vec(&wv);
                    let gt = grams[p_arrow][p].mat_vec(&t);
                    let nt = t.iter().zip(&gt).fold(zero::<T>(), |a, (x, y)| a + x.conj() * *y).re;
                    norm_t = norm_t.max(nt.max(T::zero()).sqrt());
                    match &algs[p] {
                        Some((alg, r, ri)) => {
                            let h = &(r * &alg.left_matrix(&t)) * ri;
                            let scale = T::one() + n2;
                            pos = pos.max(ok_or_inf(numlin::positivity_defect(&h)) * T::one().max(h.max_abs()) / scale);
                        }
                        None => pos = T::infinity(),
                    }
                }
                ident = ident.max((norm_t - norm_e2).abs() / (T::one() + norm_e2));
            }
        }
        let mut rep = Report::new();
        rep.record("fell_cstar_identity", ident, tol);
        rep.record("nu_isometry", iso, tol);
        rep.record("fell_positivity", pos, tol);
        rep.note("Banach bundle topology axioms hold vacuously over a finite discrete base");
        Ok(rep)
    }

    /// All checks that apply to this bundle.
    pub fn verify(&self, tol: T) -> Report<T> {
        let mut rep = self.check_pentagon(tol);
        rep.extend_prefixed("", self.check_unit_triangles(tol));
        if self.nu.is_some() {
            if let Ok(r) = self.check_star_diagrams(tol) {
                rep.extend_prefixed("", r);
            }
            match self.check_fell_property(tol) {
                Ok(r) => rep.extend_prefixed("", r),
                Err(Error::NoNorm) => rep.note("enriching category carries no norms; Fell property not applicable"),
                Err(e) => rep.note(format!("Fell property not checked: {e}")),
            }
        }
        rep
    }

    /// Pullback along a functor `f: src -> self.base`.
    ///
    /// Fibers and structure morphisms are copied from the image arrows, so
    /// iterated pullbacks agree strictly with pullbacks along composites.
    pub fn pullback(&self, f: &BaseFunctor, src: &BaseCategory) -> Result<Self> {
        f.verify(src, &self.base)?;
        if self.nu.is_some() && !src.has_involution() {
            return Err(Error::NotAFunctor("pullback of a *-bundle needs a *-functor".into()));
        }
        let n = src.n_arrows();
        let fiber = f.arrow_map.iter().map(|&x| self.fiber[x].clone()).collect();
        let mu = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| src.compose(x, y).map(|_| self.mu[f.arrow_map[x]][f.arrow_map[y]].clone().expect("functor")))
                    .collect()
            })
            .collect();
        let j = f.object_map.iter().map(|&a| self.j[a].clone()).collect();
        let nu = self.nu.as_ref().map(|nu| f.arrow_map.iter().map(|&x| nu[x].clone()).collect());
        EnrichedBundle::new(src.clone(), self.enriching.clone(), fiber, mu, j, nu)
    }

    /// Identity morphism of the bundle.
    pub fn identity_morphism(&self) -> EnrichedMorphism<M::Mor> {
        EnrichedMorphism { components: self.fiber.iter().map(|e| self.inst().identity(e)).collect() }
    }

    /// Checks a same-base morphism `F: self -> other`.
    pub fn verify_morphism(&self, f: &EnrichedMorphism<M::Mor>, other: &Self, tol: T) -> Result<Report<T>> {
        let n = self.base.n_arrows();
        if self.base != other.base || f.components.len() != n {
            return Err(Error::ShapeMismatch("morphism does not match the bundles' base".into()));
        }
        let m = self.inst();
        let fc = &f.components;
        let mut mu_w = T::zero();
        let mut alpha_w = T::zero();
        let mut gamma_w = T::zero();
        for (x, y) in self.base.composable_pairs() {
            let xy = self.base.compose(x, y).expect("composable");
            let d = (|| -> Result<T> {
                let lhs = m.compose(&fc[xy], self.mu(x, y)?)?;
                let rhs = m.compose(other.mu(x, y)?, &m.tensor_mor(&fc[x], &fc[y])?)?;
                Ok(m.mor_distance(&lhs, &rhs))
            })();
            mu_w = mu_w.max(ok_or_inf(d));
            if self.nu.is_some() {
                let d = (|| -> Result<T> {
                    let src = [self.fiber[x].clone(), self.fiber[y].clone()];
                    let dst = [other.fiber[x].clone(), other.fiber[y].clone()];
                    let lhs = m.compose(&m.cell(Cell::Gamma, &src)?, &m.dagger_mor(&m.tensor_mor(&fc[x], &fc[y])?))?;
                    let rhs = m.compose(
                        &m.tensor_mor(&m.dagger_mor(&fc[y]), &m.dagger_mor(&fc[x]))?,
                        &m.cell(Cell::Gamma, &dst)?,
                    )?;
                    Ok(m.mor_distance(&lhs, &rhs))
                })();
                gamma_w = gamma_w.max(ok_or_inf(d));
            }
        }
        for (x, y, z) in self.base.composable_triples() {
            let d = (|| -> Result<T> {
                let src = [self.fiber[x].clone(), self.fiber[y].clone(), self.fiber[z].clone()];
                let dst = [other.fiber[x].clone(), other.fiber[y].clone(), other.fiber[z].clone()];
                let lhs = m.compose(&m.cell(Cell::Alpha, &dst)?, &m.tensor_mor(&m.tensor_mor(&fc[x], &fc[y])?, &fc[z])?)?;
                let rhs = m.compose(&m.tensor_mor(&fc[x], &m.tensor_mor(&fc[y], &fc[z])?)?, &m.cell(Cell::Alpha, &src)?)?;
                Ok(m.mor_distance(&lhs, &rhs))
            })();
            alpha_w = alpha_w.max(ok_or_inf(d));
        }
        let (mut lam_w, mut rho_w, mut beta_w, mut valid) = (T::zero(), T::zero(), T::zero(), T::zero());
        for x in 0..n {
            let (e1, e2) = (&self.fiber[x], &other.fiber[x]);
            let d = (|| -> Result<(T, T)> {
                let i1 = m.identity(&m.unit_for(e1));
                let l = m.compose(&m.cell(Cell::Lambda, std::slice::from_ref(e2))?, &m.tensor_mor(&i1, &fc[x])?)?;
                let l2 = m.compose(&fc[x], &m.cell(Cell::Lambda, std::slice::from_ref(e1))?)?;
                let r = m.compose(&m.cell(Cell::Rho, std::slice::from_ref(e2))?, &m.tensor_mor(&fc[x], &i1)?)?;
                let r2 = m.compose(&fc[x], &m.cell(Cell::Rho, std::slice::from_ref(e1))?)?;
                Ok((m.mor_distance(&l, &l2), m.mor_distance(&r, &r2)))
            })();
            let (a, b) = d.unwrap_or((T::infinity(), T::infinity()));
            lam_w = lam_w.max(a);
            rho_w = rho_w.max(b);
            if self.nu.is_some() {
                let d = (|| -> Result<T> {
                    let lhs = m.compose(&m.cell(Cell::Beta, std::slice::from_ref(e2))?, &fc[x])?;
                    let rhs = m.compose(&m.dagger_mor(&m.dagger_mor(&fc[x])), &m.cell(Cell::Beta, std::slice::from_ref(e1))?)?;
                    Ok(m.mor_distance(&lhs, &rhs))
                })();
                beta_w = beta_w.max(ok_or_inf(d));
            }
            valid = valid.max(m.morphism_defect(&fc[x]));
        }
        let mut j_w = T::zero();
        for a in 0..self.base.n_objects() {
            let ia = self.base.identity(a);
            // in bicategory mode the units themselves move with F
            let on_unit =
                if m.bicategory_mode() { fc[ia].clone() } else { m.identity(&m.unit_for(&self.fiber[ia])) };
            let d = m
                .compose(&fc[ia], &self.j[a])
                .and_then(|l| Ok(m.mor_distance(&l, &m.compose(&other.j[a], &on_unit)?)));
            j_w = j_w.max(ok_or_inf(d));
        }
        let mut rep = Report::new();
        rep.record("morphism_mu", mu_w, tol);
        rep.record("morphism_unit", j_w, tol);
        rep.record("morphism_alpha", alpha_w, tol);
        rep.record("morphism_lambda", lam_w, tol);
        rep.record("morphism_rho", rho_w, tol);
        rep.record("morphism_components", valid, tol);
        if let (Some(n1), Some(n2)) = (&self.nu, &other.nu) {
            let mut nu_w = T::zero();
            for x in 0..n {
                let sx = self.base.star(x).expect("involution");
                // F_{x*}∘ν¹_x∘(F_x)† = ν²_x
                let d = m
                    .compose(&fc[sx], &n1[x])
                    .and_then(|l| m.compose(&l, &m.dagger_mor(&fc[x])))
                    .map(|l| m.mor_distance(&l, &n2[x]));
                nu_w = nu_w.max(ok_or_inf(d));
            }
            rep.record("morphism_nu", nu_w, tol);
            rep.record("morphism_beta", beta_w, tol);
            rep.record("morphism_gamma", gamma_w, tol);
        }
        Ok(rep)
    }

    /// Max discrepancy between two bundles over the same base, entry by entry.
    pub fn distance(&self, other: &Self) -> T {
        if self.base != other.base || self.nu.is_some() != other.nu.is_some() {
            return T::infinity();
        }
        let m = self.inst();
        let mut d = T::zero();
        for (a, b) in self.fiber.iter().zip(&other.fiber) {
            d = d.max(m.obj_distance(a, b));
        }
        for (r1, r2) in self.mu.iter().zip(&other.mu) {
            for (a, b) in r1.iter().zip(r2) {
                if let (Some(a), Some(b)) = (a, b) {
                    d = d.max(m.mor_distance(a, b));
                }
            }
        }
        for (a, b) in self.j.iter().zip(&other.j) {
            d = d.max(m.mor_distance(a, b));
        }
        if let (Some(n1), Some(n2)) = (&self.nu, &other.nu) {
            for (a, b) in n1.iter().zip(n2) {
                d = d.max(m.mor_distance(a, b));
            }
        }
        d
    }

    /// Composite `G ∘ F` of same-base morphisms (`F` first).
    pub fn compose_morphisms(
        &self,
        g: &EnrichedMorphism<M::Mor>,
        f: &EnrichedMorphism<M::Mor>,
    ) -> Result<EnrichedMorphism<M::Mor>> {
        if g.components.len() != f.components.len() {
            return Err(Error::NotComposable("morphisms over different bases".into()));
        }
        let m = self.inst();
        Ok(EnrichedMorphism {
            components: g.components.iter().zip(&f.components).map(|(a, b)| m.compose(a, b)).collect::<Result<_>>()?,
        })
    }

    /// Flattens a bundle whose fibers are pointwise Hilbert spaces into a
    /// single C*-category on the base objects, together with the block
    /// offsets `blocks[x] = (target, source, offset)` of each arrow's sections
    /// inside its hom-space.
    pub fn total_space_category(&self) -> Result<(CStarCategory<T>, Vec<(usize, usize, usize)>)> {
        let m = self.inst();
        let nu = self.nu.as_ref().ok_or(Error::MissingInvolution)?;
        let grams: Vec<Vec<CMatrix<T>>> =
            self.fiber.iter().map(|e| m.local_grams(e).ok_or(Error::NoNorm)).collect::<Result<_>>()?;
        let local = |f: &M::Mor| m.local_maps(f).ok_or(Error::NoNorm);
        let k = self.base.n_objects();
        let n = self.base.n_arrows();
        let n_points = grams.first().map_or(0, Vec::len);
        // per arrow: offset within its hom-space, and per-point offsets
        let mut hom_dim = vec![vec![0usize; k]; k];
        let mut offset = vec![0usize; n];
        let mut point_off = vec![vec![0usize; n_points]; n];
        for x in 0..n {
            let (t, s) = (self.base.target(x), self.base.source(x));
            offset[x] = hom_dim[t][s];
            let mut acc = offset[x];
            for p in 0..n_points {
                point_off[x][p] = acc;
                acc += grams[x][p].rows();
            }
            hom_dim[t][s] = acc;
        }
        let mut comp: Vec<Vec<Vec<Tensor3<T>>>> = (0..k)
            .map(|a| (0..k).map(|b| (0..k).map(|c| Tensor3::zeros(hom_dim[a][b], hom_dim[b][c], hom_dim[a][c])).collect()).collect())
            .collect();
        for (x, y) in self.base.composable_pairs() {
            let z = self.base.compose(x, y).expect("composable");
            let (a, b, c) = (self.base.target(x), self.base.source(x), self.base.source(y));
            let mu = local(self.mu(x, y)?)?;
            let t = &mut comp[a][b][c];
            for p in 0..n_points {
                let (dx, dy, dz) = (grams[x][p].rows(), grams[y][p].rows(), grams[z][p].rows());
                for i in 0..dx {
                    for jj in 0..dy {
                        for kk in 0..dz {
                            let v = mu[p][(kk, i * dy + jj)];
                            let (ii, jy, kz) = (point_off[x][p] + i, point_off[y][p] + jj, point_off[z][p] + kk);
                            let cur = t.get(ii, jy, kz);
                            t.set(ii, jy, kz, cur + v);
                        }
                    }
                }
            }
        }
        let mut inv: Vec<Vec<CMatrix<T>>> =
            (0..k).map(|a| (0..k).map(|b| CMatrix::zeros(hom_dim[a][b], hom_dim[b][a])).collect()).collect();
        for w in 0..n {
            // w: a -> b lives in C_ba; its star lives in C_ab
            let sw = self.base.star(w).ok_or(Error::MissingInvolution)?;
            let (b, a) = (self.base.target(w), self.base.source(w));
            let nw = local(&nu[w])?;
            for p in 0..n_points {
                let block = &nw[p] * &grams[w][p].transpose();
                for r in 0..block.rows() {
                    for cc in 0..block.cols() {
                        inv[a][b][(point_off[sw][p] + r, point_off[w][p] + cc)] = block[(r, cc)];
                    }
                }
            }
        }
        let mut units = Vec::with_capacity(k);
        for a in 0..k {
            let ia = self.base.identity(a);
            let ja = local(&self.j[a])?;
            let mut u = vec![zero(); hom_dim[a][a]];
            for p in 0..n_points {
                for r in 0..ja[p].rows() {
                    u[point_off[ia][p] + r] = ja[p][(r, 0)];
                }
            }
            units.push(u);
        }
        let objects = (0..k).map(|a| format!("O{a}")).collect();
        let cat = CStarCategory::new(objects, hom_dim, comp, inv, units)?;
        let blocks = (0..n).map(|x| (self.base.target(x), self.base.source(x), offset[x])).collect();
        Ok((cat, blocks))
    }
}

/// Checks that a flattened category respects its arrow blocks: products of
/// blocks `x`, `y` land in block `x∘y` and the involution maps block `x` to
/// block `x*`. This is the projection onto the base being a *-functor.
pub fn projection_report<T: Real>(
    cat: &CStarCategory<T>,
    base: &BaseCategory,
    blocks: &[(usize, usize, usize)],
    tol: T,
) -> Report<T> {
    let block_of = |t: usize, s: usize, i: usize| -> Option<usize> {
        (0..base.n_arrows())
            .filter(|&x| blocks[x].0 == t && blocks[x].1 == s && blocks[x].2 <= i)
            .max_by_key(|&x| blocks[x].2)
    };
    let mut worst = T::zero();
    for (x, y) in base.composable_pairs() {
        let z = base.compose(x, y).expect("composable");
        let (a, b, c) = (base.target(x), base.source(x), base.source(y));
        let t = cat.comp(a, b, c);
        let [d0, d1, d2] = t.dims();
        for i in (0..d0).filter(|&i| block_of(a, b, i) == Some(x)) {
            for jj in (0..d1).filter(|&jj| block_of(b, c, jj) == Some(y)) {
                for kk in 0..d2 {
                    if block_of(a, c, kk) != Some(z) {
                        worst = worst.max(t.get(i, jj, kk).norm());
                    }
                }
            }
        }
    }
    for w in 0..base.n_arrows() {
        let Some(sw) = base.star(w) else { continue };
        let (b, a) = (base.target(w), base.source(w));
        let j = cat.inv(a, b);
        for r in 0..j.rows() {
            for cc in (0..j.cols()).filter(|&cc| block_of(b, a, cc) == Some(w)) {
                if block_of(a, b, r) != Some(sw) {
                    worst = worst.max(j[(r, cc)].norm());
                }
            }
        }
    }
    let mut rep = Report::new();
    rep.record("projection_functor", worst, tol);
    rep
}

/// Canonical isomorphism `Θ: (g∘f)•E -> f•(g•E)`.
///
/// Pullbacks copy data along arrow tables, so both sides are equal and `Θ`
/// is the identity on every fiber.
pub fn theta<T: Real, M: MonoidalStarCategory<T>>(
    b: &EnrichedBundle<T, M>,
    f: &BaseFunctor,
    g: &BaseFunctor,
) -> Result<EnrichedMorphism<M::Mor>> {
    let gf = g.after(f)?;
    Ok(EnrichedMorphism { components: gf.arrow_map.iter().map(|&x| b.enriching.identity(&b.fiber[x])).collect() })
}

/// Enriching categories that can be pulled back along a change of base
/// space (a point map, or an object relabelling).
pub trait BaseChange<T: Real>: MonoidalStarCategory<T> + Sized {
    type Change: Clone + Debug + PartialEq;
    fn identity_change(&self) -> Self::Change;
    /// `outer ∘ inner`, `inner` applied first.
    fn compose_change(&self, outer: &Self::Change, inner: &Self::Change) -> Self::Change;
    /// The enriching category on the source side of a change.
    fn pull_instance(&self, c: &Self::Change) -> Self;
    fn pull_object(&self, c: &Self::Change, o: &Self::Obj) -> Self::Obj;
    fn pull_morphism(&self, c: &Self::Change, f: &Self::Mor) -> Self::Mor;
}

impl<T: Real> BaseChange<T> for LineBundles {
    type Change = Vec<usize>;
    fn identity_change(&self) -> Vec<usize> {
        (0..self.n_points).collect()
    }
    fn compose_change(&self, outer: &Vec<usize>, inner: &Vec<usize>) -> Vec<usize> {
        inner.iter().map(|&p| outer[p]).collect()
    }
    fn pull_instance(&self, c: &Vec<usize>) -> Self {
        LineBundles::named(c.iter().map(|&p| self.point_names[p].clone()).collect())
    }
    fn pull_object(&self, c: &Vec<usize>, o: &crate::monoidal::LineBundle<T>) -> crate::monoidal::LineBundle<T> {
        crate::monoidal::LineBundle { metric: c.iter().map(|&p| o.metric[p]).collect() }
    }
    fn pull_morphism(&self, c: &Vec<usize>, f: &crate::monoidal::LineMap<T>) -> crate::monoidal::LineMap<T> {
        crate::monoidal::LineMap { scalars: c.iter().map(|&p| f.scalars[p]).collect() }
    }
}

impl<T: Real> BaseChange<T> for HilbBundles {
    type Change = Vec<usize>;
    fn identity_change(&self) -> Vec<usize> {
        (0..self.n_points).collect()
    }
    fn compose_change(&self, outer: &Vec<usize>, inner: &Vec<usize>) -> Vec<usize> {
        inner.iter().map(|&p| outer[p]).collect()
    }
    fn pull_instance(&self, c: &Vec<usize>) -> Self {
        HilbBundles::new(c.len(), self.max_dim)
    }
    fn pull_object(&self, c: &Vec<usize>, o: &crate::monoidal::HilbBundle<T>) -> crate::monoidal::HilbBundle<T> {
        crate::monoidal::HilbBundle { grams: c.iter().map(|&p| o.grams[p].clone()).collect() }
    }
    fn pull_morphism(&self, c: &Vec<usize>, f: &crate::monoidal::BundleMap<T>) -> crate::monoidal::BundleMap<T> {
        crate::monoidal::BundleMap { blocks: c.iter().map(|&p| f.blocks[p].clone()).collect() }
    }
}

/// Relabels a one-dimensional category along `ψ: O1 -> O2`.
pub fn relabel_one_dim<T: Real>(psi: &[usize], o: &OneDimCStarCat<T>, objects: &[String]) -> OneDimCStarCat<T> {
    let k = psi.len();
    OneDimCStarCat {
        objects: objects.to_vec(),
        metric: (0..k).map(|a| (0..k).map(|b| o.metric[psi[a]][psi[b]]).collect()).collect(),
        comp: (0..k)
            .map(|a| (0..k).map(|b| (0..k).map(|c| o.comp[psi[a]][psi[b]][psi[c]]).collect()).collect())
            .collect(),
        inv: (0..k).map(|a| (0..k).map(|b| o.inv[psi[a]][psi[b]]).collect()).collect(),
    }
}

fn invert_perm(psi: &[usize]) -> Vec<usize> {
    let mut back = vec![0; psi.len()];
    for (a, &b) in psi.iter().enumerate() {
        back[b] = a;
    }
    back
}

impl<T: Real> BaseChange<T> for OneDimCats {
    type Change = Vec<usize>;
    fn identity_change(&self) -> Vec<usize> {
        (0..self.n_objects).collect()
    }
    fn compose_change(&self, outer: &Vec<usize>, inner: &Vec<usize>) -> Vec<usize> {
        inner.iter().map(|&a| outer[a]).collect()
    }
    fn pull_instance(&self, c: &Vec<usize>) -> Self {
        OneDimCats { n_objects: c.len() }
    }
    fn pull_object(&self, c: &Vec<usize>, o: &OneDimCStarCat<T>) -> OneDimCStarCat<T> {
        let labels: Vec<String> = (0..c.len()).map(|a| o.objects.get(c[a]).cloned().unwrap_or_default()).collect();
        relabel_one_dim(c, o, &labels)
    }
    fn pull_morphism(&self, c: &Vec<usize>, f: &OneDimFunctor<T>) -> OneDimFunctor<T> {
        let back = invert_perm(c);
        let k = c.len();
        OneDimFunctor {
            source: BaseChange::<T>::pull_object(self, c, &f.source),
            target: BaseChange::<T>::pull_object(self, c, &f.target),
            object_map: (0..k).map(|a| back[f.object_map[c[a]]]).collect(),
            scalars: (0..k).map(|a| (0..k).map(|b| f.scalars[c[a]][c[b]]).collect()).collect(),
        }
    }
}

/// Cross-base morphism `E1 -> E2`: a base functor `f: base1 -> base2`, a
/// change of enriching base, and a same-base morphism from the pullback
/// of `E2` onto `E1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossBaseMorphism<T: Real, M: BaseChange<T>> {
    pub functor: BaseFunctor,
    pub change: M::Change,
    pub components: Vec<M::Mor>,
}

/// Pullback of `b2` along a functor and an enriching base change.
pub fn pullback_along<T: Real, M: BaseChange<T>>(
    b2: &EnrichedBundle<T, M>,
    f: &BaseFunctor,
    src: &BaseCategory,
    change: &M::Change,
) -> Result<EnrichedBundle<T, M>> {
    let strict = b2.pullback(f, src)?;
    let m = &b2.enriching;
    let fiber = strict.fiber.iter().map(|o| m.pull_object(change, o)).collect();
    let mu = strict
        .mu
        .iter()
        .map(|r| r.iter().map(|o| o.as_ref().map(|g| m.pull_morphism(change, g))).collect())
        .collect();
    let j = strict.j.iter().map(|g| m.pull_morphism(change, g)).collect();
    let nu = strict.nu.as_ref().map(|v| v.iter().map(|g| m.pull_morphism(change, g)).collect());
    EnrichedBundle::new(src.clone(), m.pull_instance(change), fiber, mu, j, nu)
}

/// Verifies `m: b1 -> b2` by checking its components as a same-base morphism
/// from the pullback of `b2` to `b1`.
pub fn verify_cross_base<T: Real, M: BaseChange<T>>(
    m: &CrossBaseMorphism<T, M>,
    b1: &EnrichedBundle<T, M>,
    b2: &EnrichedBundle<T, M>,
    tol: T,
) -> Result<Report<T>> {
    let pulled = pullback_along(b2, &m.functor, &b1.base, &m.change)?;
    pulled.verify_morphism(&EnrichedMorphism { components: m.components.clone() }, b1, tol)
}

/// `m2 ∘ m1` for `m1: b1 -> b2`, `m2: b2 -> b3`:
/// `(f2∘f1, F1 ∘ f1•(F2) ∘ Θ)` with `Θ` the identity.
pub fn compose_cross_base<T: Real, M: BaseChange<T>>(
    inst1: &M,
    inst2: &M,
    m2: &CrossBaseMorphism<T, M>,
    m1: &CrossBaseMorphism<T, M>,
) -> Result<CrossBaseMorphism<T, M>> {
    let functor = m2.functor.after(&m1.functor)?;
    let change = inst2.compose_change(&m2.change, &m1.change);
    let components = m1
        .components
        .iter()
        .enumerate()
        .map(|(x, f1)| {
            let f2 = m2
                .components
                .get(m1.functor.arrow_map[x])
                .ok_or_else(|| Error::NotComposable("arrow image out of range".into()))?;
            inst1.compose(f1, &inst2.pull_morphism(&m1.change, f2))
        })
        .collect::<Result<_>>()?;
    Ok(CrossBaseMorphism { functor, change, components })
}

pub fn identity_cross_base<T: Real, M: BaseChange<T>>(b: &EnrichedBundle<T, M>) -> CrossBaseMorphism<T, M> {
    CrossBaseMorphism {
        functor: BaseFunctor::identity(&b.base),
        change: b.enriching.identity_change(),
        components: b.identity_morphism().components,
    }
}

/// Max distance between two cross-base morphisms with equal functors.
pub fn cross_base_distance<T: Real, M: BaseChange<T>>(
    inst: &M,
    a: &CrossBaseMorphism<T, M>,
    b: &CrossBaseMorphism<T, M>,
) -> T {
    if a.functor != b.functor || a.change != b.change || a.components.len() != b.components.len() {
        return T::infinity();
    }
    a.components.iter().zip(&b.components).fold(T::zero(), |m, (x, y)| m.max(inst.mor_distance(x, y)))
}

/// Random bundle of unit-metric-free line bundles over an equivalence
/// relation: twisted trivial data `e_x = λ_{x,p} e`, so every check holds by
/// construction.
pub fn random_line_fell_bundle<T: Real>(
    rng: &mut ChaCha8Rng,
    base: &BaseCategory,
    n_points: usize,
) -> Result<EnrichedBundle<T, LineBundles>> {
    use crate::monoidal::{LineBundle, LineMap};
    if !base.is_inverse_star() {
        return Err(Error::NotInverseBase);
    }
    let n = base.n_arrows();
    let k = base.n_objects();
    let r: Vec<Vec<f64>> = (0..n_points).map(|_| (0..k).map(|_| rng.gen_range(0.5..2.0)).collect()).collect();
    let lam: Vec<Vec<Complex<f64>>> = (0..n)
        .map(|x| {
            (0..n_points)
                .map(|p| {
                    let ratio = r[p][base.target(x)] / r[p][base.source(x)];
                    Complex::from_polar(ratio, rng.gen_range(0.0..std::f64::consts::TAU))
                })
                .collect()
        })
        .collect();
    let cv = |z: Complex<f64>| Complex::new(lit::<T>(z.re), lit::<T>(z.im));
    let fiber = (0..n).map(|x| LineBundle { metric: lam[x].iter().map(|l| lit(l.norm_sqr())).collect() }).collect();
    let mu = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    base.compose(x, y).map(|z| LineMap {
                        scalars: (0..n_points).map(|p| cv(lam[x][p] * lam[y][p] / lam[z][p])).collect(),
                    })
                })
                .collect()
        })
        .collect();
    let j = (0..k)
        .map(|a| {
            let i = base.identity(a);
            LineMap { scalars: (0..n_points).map(|p| cv(Complex::new(1.0, 0.0) / lam[i][p])).collect() }
        })
        .collect();
    let nu = (0..n)
        .map(|x| {
            let sx = base.star(x).expect("involution");
            LineMap { scalars: (0..n_points).map(|p| cv(Complex::new(1.0, 0.0) / (lam[x][p] * lam[sx][p]))).collect() }
        })
        .collect();
    EnrichedBundle::new(base.clone(), LineBundles::new(n_points), fiber, mu, j, Some(nu))
}
