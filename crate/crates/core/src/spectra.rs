//! Spectrum and section functors between commutative full C*-categories and
//! spaceoids, and the conversions between spaceoids and enriched Fell
//! bundles.

use std::cmp::Ordering;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cstar::{CStarCategory, Mor, Report, StarFunctor, Tensor3};
use crate::enriched::{BaseCategory, BaseFunctor, CrossBaseMorphism, EnrichedBundle};
use crate::error::{Error, Result};
use crate::monoidal::{
    twisted_one_dim, HilbBundles, LineBundle, LineBundles, LineMap, OneDimCStarCat, OneDimCats, OneDimFunctor,
};
use crate::numlin::{self, CMatrix};
use crate::scalar::{lit, one, zero, Real};
use crate::spaceoid::{block_metric, fiber_cstar_category, verify_morphism, verify_spaceoid, Spaceoid, SpaceoidMorphism};

/// Below this fraction of the largest modulus a coordinate counts as zero
/// when fixing the phase of a localizer.
const PHASE_CUTOFF: f64 = 1e-6;

/// Spectrum of a commutative full unital C*-category.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult<T: Real> {
    pub spaceoid: Spaceoid<T>,
    /// `characters[a][p][i] = χ^a_p(e_i)` on the basis of `C_aa`.
    pub characters: Vec<Vec<Vec<Complex<T>>>>,
    /// `projections[a][p]`: the minimal projection of `C_aa` at `p`.
    pub projections: Vec<Vec<Vec<Complex<T>>>>,
    /// `localizers[p][a][b]`: unit-norm element of `C_ab` spanning the fiber at `p`.
    pub localizers: Vec<Vec<Vec<Vec<Complex<T>>>>>,
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(zero(), |s, (x, y)| s + x.conj() * *y)
}

/// Coefficient of `y` along `l` in coordinates.
fn coefficient<T: Real>(y: &[Complex<T>], l: &[Complex<T>]) -> Complex<T> {
    dot(l, y) / dot(l, l)
}

fn evaluate<T: Real>(chi: &[Complex<T>], x: &[Complex<T>]) -> Complex<T> {
    chi.iter().zip(x).fold(zero(), |s, (c, v)| s + *c * *v)
}

/// Rescales to unit norm and makes the first non-negligible coordinate real positive.
fn normalize_localizer<T: Real>(cat: &CStarCategory<T>, y: Mor<T>) -> Result<Vec<Complex<T>>> {
    let n = cat.norm(&y)?;
    if !(n > T::zero()) {
        return Err(Error::SpectrumMismatch("empty localization".into()));
    }
    let big = y.coords.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let lead = y
        .coords
        .iter()
        .find(|z| z.norm() > big * lit(PHASE_CUTOFF))
        .copied()
        .expect("nonzero vector");
    let phase = lead.conj() / lead.norm();
    Ok(y.coords.iter().map(|z| *z * phase / n).collect())
}

/// Computes the spectrum.
///
/// Characters of `C_00` come from a joint diagonalization of its regular
/// representation, in lexicographic order of their values on the basis.
/// They are carried to `C_aa` through `a -> χ(x ∘ a ∘ x*) / χ(x ∘ x*)`,
/// using the first basis element `x ∈ C_0a` with `|χ(x x*)| > tol`.
pub fn sigma<T: Real>(cat: &CStarCategory<T>, tol: T) -> Result<SpectrumResult<T>> {
    let k = cat.n_objects();
    if k == 0 {
        return Err(Error::BadSize("category has no objects".into()));
    }
    if !cat.is_commutative() {
        return Err(Error::NotCommutative);
    }
    if !cat.is_full(tol)? {
        return Err(Error::NotFull);
    }
    if !cat.is_unital(tol)? {
        return Err(Error::NotUnital);
    }
    let n = cat.hom_dim(0, 0);
    if (0..k).any(|a| cat.hom_dim(a, a) != n) {
        return Err(Error::SpectrumMismatch("diagonal algebras have different dimensions".into()));
    }
    let alg = cat.diagonal_algebra(0);
    let (r, ri) = alg.orthonormalizer()?;
    let reps: Vec<CMatrix<T>> = cat.basis(0, 0).iter().map(|e| &(&r * &cat.left_matrix(e, 0)) * &ri).collect();
    let dec = numlin::joint_diagonalize(&reps, tol)?;
    if dec.cluster_labels.len() != n || dec.cluster_labels.iter().any(|c| c.len() != 1) {
        return Err(Error::SpectrumMismatch("degenerate joint eigenspace".into()));
    }
    let chi0: Vec<Vec<Complex<T>>> = (0..n).map(|p| (0..n).map(|i| dec.eigenvalue_lists[i][p]).collect()).collect();

    let mut characters = vec![chi0.clone()];
    for a in 1..k {
        let xs = cat.basis(0, a);
        let mut chis = Vec::with_capacity(n);
        for chi in &chi0 {
            let mut found = None;
            for x in &xs {
                let xx = cat.compose(x, &cat.involve(x))?;
                let v = evaluate(chi, &xx.coords);
                if v.norm() > tol {
                    found = Some((x, v));
                    break;
                }
            }
            let (x, norm) = found.ok_or(Error::NotFull)?;
            let xstar = cat.involve(x);
            let row = cat
                .basis(a, a)
                .iter()
                .map(|e| Ok(evaluate(chi, &cat.compose(&cat.compose(x, e)?, &xstar)?.coords) / norm))
                .collect::<Result<Vec<_>>>()?;
            chis.push(row);
        }
        characters.push(chis);
    }

    let mut projections = Vec::with_capacity(k);
    for chis in &characters {
        let m = CMatrix::from_rows(chis)?;
        let q = numlin::solve(&m, &CMatrix::identity(n))?;
        projections.push((0..n).map(|p| q.column(p)).collect::<Vec<_>>());
    }

    let mut localizers = vec![vec![vec![Vec::new(); k]; k]; n];
    for (p, loc) in localizers.iter_mut().enumerate() {
        for a in 0..k {
            for b in 0..k {
                let q = Mor::new(b, b, projections[b][p].clone());
                let mut best: Option<(T, Mor<T>)> = None;
                for y in cat.basis(a, b) {
                    let z = cat.compose(&y, &q)?;
                    let size = z.coords.iter().fold(T::zero(), |m, c| m.max(c.norm()));
                    if best.as_ref().map_or(true, |(s, _)| size > *s) {
                        best = Some((size, z));
                    }
                }
                let (_, z) = best.ok_or_else(|| Error::SpectrumMismatch(format!("hom ({a},{b}) is empty")))?;
                loc[a][b] = normalize_localizer(cat, z)?;
            }
        }
    }

    let mut s = Spaceoid {
        points: (0..n).map(|p| format!("p{p}")).collect(),
        objects: cat.objects().to_vec(),
        metric: vec![vec![vec![T::one(); k]; k]; n],
        comp: vec![vec![vec![vec![zero(); k]; k]; k]; n],
        inv: vec![vec![vec![zero(); k]; k]; n],
    };
    for (p, loc) in localizers.iter().enumerate() {
        for a in 0..k {
            for b in 0..k {
                let lab = Mor::new(b, a, loc[a][b].clone());
                s.inv[p][a][b] = coefficient(&cat.involve(&lab).coords, &loc[b][a]);
                for c in 0..k {
                    let prod = cat.compose(&lab, &Mor::new(c, b, loc[b][c].clone()))?;
                    s.comp[p][a][b][c] = coefficient(&prod.coords, &loc[a][c]);
                }
            }
        }
    }
    let rep = verify_spaceoid(&s, tol);
    if !rep.passed() {
        let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).collect();
        return Err(Error::SpectrumMismatch(format!("rebuilt spaceoid fails {}", names.join(", "))));
    }
    Ok(SpectrumResult { spaceoid: s, characters, projections, localizers })
}

fn require_valid<T: Real>(s: &Spaceoid<T>) -> Result<()> {
    let rep = verify_spaceoid(s, T::default_tol());
    if rep.passed() {
        return Ok(());
    }
    let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).collect();
    Err(Error::InvalidSpaceoid(format!("fails {}", names.join(", "))))
}

/// Section category: `C_ab` is spanned by the sections `δ_p e_ab`.
pub fn gamma<T: Real>(s: &Spaceoid<T>) -> Result<CStarCategory<T>> {
    require_valid(s)?;
    let (n, k) = (s.n_points(), s.n_objects());
    let comp = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    (0..k)
                        .map(|c| {
                            let mut t = Tensor3::zeros(n, n, n);
                            for p in 0..n {
                                t.set(p, p, p, s.comp[p][a][b][c]);
                            }
                            t
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    // x ∈ C_ba: x* ∈ C_ab has coordinate σ_p(ba) conj(x_p)
    let inv = (0..k)
        .map(|a| (0..k).map(|b| CMatrix::from_diag(&(0..n).map(|p| s.sigma(p, b, a)).collect::<Vec<_>>())).collect())
        .collect();
    let units = (0..k).map(|a| (0..n).map(|p| s.unit_coord(p, a)).collect()).collect();
    CStarCategory::new(s.objects.clone(), vec![vec![n; k]; k], comp, inv, units)
}

/// `x -> (p -> coefficient of x localized at p)`, with its inverse.
#[derive(Clone, Debug)]
pub struct GelfandTransform<T: Real> {
    pub spectrum: SpectrumResult<T>,
    pub sections: CStarCategory<T>,
    pub functor: StarFunctor<T>,
    pub inverse: StarFunctor<T>,
}

fn localized_coefficient<T: Real>(
    cat: &CStarCategory<T>,
    sp: &SpectrumResult<T>,
    x: &Mor<T>,
    p: usize,
) -> Result<Complex<T>> {
    let (a, b) = (x.target, x.source);
    let q = Mor::new(b, b, sp.projections[b][p].clone());
    Ok(coefficient(&cat.compose(x, &q)?.coords, &sp.localizers[p][a][b]))
}

fn transform_matrix<T: Real>(cat: &CStarCategory<T>, sp: &SpectrumResult<T>, a: usize, b: usize) -> Result<CMatrix<T>> {
    let n = sp.spaceoid.n_points();
    let cols = cat
        .basis(a, b)
        .iter()
        .map(|e| (0..n).map(|p| localized_coefficient(cat, sp, e, p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    CMatrix::from_columns(&cols)
}

pub fn gelfand_transform<T: Real>(cat: &CStarCategory<T>, tol: T) -> Result<GelfandTransform<T>> {
    let spectrum = sigma(cat, tol)?;
    let sections = gamma(&spectrum.spaceoid)?;
    let k = cat.n_objects();
    let mut maps = vec![Vec::with_capacity(k); k];
    let mut invs = vec![Vec::with_capacity(k); k];
    for a in 0..k {
        for b in 0..k {
            let m = transform_matrix(cat, &spectrum, a, b)?;
            if !m.is_square() {
                return Err(Error::SpectrumMismatch(format!("hom ({a},{b}) has the wrong dimension")));
            }
            invs[a].push(numlin::inverse(&m)?);
            maps[a].push(m);
        }
    }
    let ids: Vec<usize> = (0..k).collect();
    Ok(GelfandTransform {
        spectrum,
        sections,
        functor: StarFunctor { object_map: ids.clone(), arrow_maps: maps },
        inverse: StarFunctor { object_map: ids, arrow_maps: invs },
    })
}

impl<T: Real> GelfandTransform<T> {
    /// Both directions are *-functors and they compose to identities.
    pub fn verify(&self, cat: &CStarCategory<T>, tol: T) -> Result<Report<T>> {
        let mut rep = self.functor.verify(cat, &self.sections, tol)?;
        rep.extend_prefixed("inverse_", self.inverse.verify(&self.sections, cat, tol)?);
        let mut worst = T::zero();
        for (fr, ir) in self.functor.arrow_maps.iter().zip(&self.inverse.arrow_maps) {
            for (f, i) in fr.iter().zip(ir) {
                let id = CMatrix::identity(f.rows());
                worst = worst.max((f * i).distance(&id)).max((i * f).distance(&id));
            }
        }
        rep.record("roundtrip_identity", worst, tol);
        Ok(rep)
    }
}

fn invert_perm(psi: &[usize]) -> Result<Vec<usize>> {
    let mut back = vec![usize::MAX; psi.len()];
    for (a, &b) in psi.iter().enumerate() {
        if b >= psi.len() || back[b] != usize::MAX {
            return Err(Error::ObjectMapNotBijective);
        }
        back[b] = a;
    }
    Ok(back)
}

/// Inverse of a morphism whose point map is bijective.
pub fn invert_morphism<T: Real>(m: &SpaceoidMorphism<T>) -> Result<SpaceoidMorphism<T>> {
    let fback = invert_perm(&m.f_delta).map_err(|_| Error::NotVerified("point map is not bijective".into()))?;
    let oback = invert_perm(&m.f_rel)?;
    let k = m.f_rel.len();
    let scalars = (0..fback.len())
        .map(|q| (0..k).map(|a| (0..k).map(|b| one::<T>() / m.scalars[fback[q]][oback[a]][oback[b]]).collect()).collect())
        .collect();
    Ok(SpaceoidMorphism { f_delta: fback, f_rel: oback, scalars })
}

/// Checks `m: s1 -> s2` and `inv: s2 -> s1` are mutually inverse morphisms.
pub fn verify_isomorphism<T: Real>(
    m: &SpaceoidMorphism<T>,
    inv: &SpaceoidMorphism<T>,
    s1: &Spaceoid<T>,
    s2: &Spaceoid<T>,
    tol: T,
) -> Report<T> {
    use crate::spaceoid::{compose_morphisms, identity_morphism, morphism_distance};
    let mut rep = verify_morphism(m, s1, s2, tol);
    rep.extend_prefixed("inverse_", verify_morphism(inv, s2, s1, tol));
    let left = compose_morphisms(inv, m).map_or(T::infinity(), |c| morphism_distance(&c, &identity_morphism(s1)));
    let right = compose_morphisms(m, inv).map_or(T::infinity(), |c| morphism_distance(&c, &identity_morphism(s2)));
    rep.record("inverse_left", left, tol);
    rep.record("inverse_right", right, tol);
    rep
}

/// The isomorphism `s -> sigma(gamma(s))` and its inverse.
pub fn sections_spectrum_iso<T: Real>(
    s: &Spaceoid<T>,
    tol: T,
) -> Result<(SpectrumResult<T>, SpaceoidMorphism<T>, SpaceoidMorphism<T>)> {
    let cat = gamma(s)?;
    let sp = sigma(&cat, tol)?;
    let (n, k) = (s.n_points(), s.n_objects());
    // section δ_q e_00 is seen only by the character at q
    let f_delta: Vec<usize> = (0..n)
        .map(|q| {
            (0..n)
                .max_by(|&x, &y| {
                    sp.characters[0][x][q].norm().partial_cmp(&sp.characters[0][y][q].norm()).unwrap_or(Ordering::Equal)
                })
                .expect("nonempty")
        })
        .collect();
    let scalars = (0..n)
        .map(|q| (0..k).map(|a| (0..k).map(|b| sp.localizers[f_delta[q]][a][b][q]).collect()).collect())
        .collect();
    let m = SpaceoidMorphism { f_delta, f_rel: (0..k).collect(), scalars };
    let inv = invert_morphism(&m)?;
    Ok((sp, m, inv))
}

/// Transport of an object-bijective *-functor `F: cat1 -> cat2` to the
/// spaceoid morphism `Σ(cat2) -> Σ(cat1)`.
pub fn transport_star_functor<T: Real>(
    f: &StarFunctor<T>,
    cat1: &CStarCategory<T>,
    sp1: &SpectrumResult<T>,
    cat2: &CStarCategory<T>,
    sp2: &SpectrumResult<T>,
    tol: T,
) -> Result<SpaceoidMorphism<T>> {
    let rep = f.verify(cat1, cat2, tol)?;
    if !rep.passed() {
        return Err(Error::NotVerified("input is not a *-functor".into()));
    }
    let f_rel = invert_perm(&f.object_map)?;
    let (n1, n2, k) = (sp1.spaceoid.n_points(), sp2.spaceoid.n_points(), cat1.n_objects());
    let b0 = f.object_map[0];
    let images: Vec<Mor<T>> = cat1.basis(0, 0).iter().map(|e| f.apply(cat1, cat2, e)).collect::<Result<_>>()?;
    let f_delta = (0..n2)
        .map(|p| {
            let pulled: Vec<Complex<T>> = images.iter().map(|y| evaluate(&sp2.characters[b0][p], &y.coords)).collect();
            let gap = |r: usize| {
                sp1.characters[0][r].iter().zip(&pulled).fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
            };
            (0..n1).min_by(|&x, &y| gap(x).partial_cmp(&gap(y)).unwrap_or(Ordering::Equal)).expect("nonempty")
        })
        .collect::<Vec<_>>();
    let mut scalars = vec![vec![vec![zero(); k]; k]; n2];
    for p in 0..n2 {
        for a2 in 0..k {
            for b2 in 0..k {
                let (a, b) = (f_rel[a2], f_rel[b2]);
                let l = Mor::new(b, a, sp1.localizers[f_delta[p]][a][b].clone());
                let y = f.apply(cat1, cat2, &l)?;
                scalars[p][a2][b2] = localized_coefficient(cat2, sp2, &y, p)?;
            }
        }
    }
    let m = SpaceoidMorphism { f_delta, f_rel, scalars };
    if !verify_morphism(&m, &sp2.spaceoid, &sp1.spaceoid, tol).passed() {
        return Err(Error::NotVerified("transported morphism fails verification".into()));
    }
    Ok(m)
}

/// `Σ(F): Σ(cat2) -> Σ(cat1)` for `F: cat1 -> cat2`.
pub fn sigma_on_morphism<T: Real>(
    f: &StarFunctor<T>,
    cat1: &CStarCategory<T>,
    cat2: &CStarCategory<T>,
    tol: T,
) -> Result<SpaceoidMorphism<T>> {
    let sp1 = sigma(cat1, tol)?;
    let sp2 = sigma(cat2, tol)?;
    transport_star_functor(f, cat1, &sp1, cat2, &sp2, tol)
}

/// `Γ(m): Γ(s2) -> Γ(s1)` for `m: s1 -> s2`.
pub fn gamma_on_morphism<T: Real>(
    m: &SpaceoidMorphism<T>,
    s1: &Spaceoid<T>,
    s2: &Spaceoid<T>,
    tol: T,
) -> Result<StarFunctor<T>> {
    if !verify_morphism(m, s1, s2, tol).passed() {
        return Err(Error::NotVerified("spaceoid morphism fails verification".into()));
    }
    let back = invert_perm(&m.f_rel)?;
    let (n1, n2, k) = (s1.n_points(), s2.n_points(), s1.n_objects());
    let arrow_maps = (0..k)
        .map(|a2| {
            (0..k)
                .map(|b2| {
                    let mut mat = CMatrix::zeros(n1, n2);
                    for p in 0..n1 {
                        mat[(p, m.f_delta[p])] = m.scalars[p][back[a2]][back[b2]];
                    }
                    mat
                })
                .collect()
        })
        .collect();
    Ok(StarFunctor { object_map: back, arrow_maps })
}

/// Enriched Fell bundle over the total relation on objects, in line bundles
/// over the points: `E_ab` is the block `(a, b)`.
pub fn tg_linebundle<T: Real>(s: &Spaceoid<T>) -> Result<EnrichedBundle<T, LineBundles>> {
    require_valid(s)?;
    let (n, k) = (s.n_points(), s.n_objects());
    let base = BaseCategory::full_relation(k).with_object_names(s.objects.clone())?;
    let fiber = (0..k * k).map(|x| block_metric(s, x / k, x % k)).collect::<Result<Vec<_>>>()?;
    let line = |f: &dyn Fn(usize) -> Complex<T>| LineMap { scalars: (0..n).map(f).collect() };
    let mu = (0..k * k)
        .map(|x| {
            (0..k * k)
                .map(|y| {
                    let (a, b, b2, c) = (x / k, x % k, y / k, y % k);
                    (b == b2).then(|| line(&|p| s.comp[p][a][b][c]))
                })
                .collect()
        })
        .collect();
    let j = (0..k).map(|a| line(&|p| s.unit_coord(p, a))).collect();
    let nu = (0..k * k).map(|x| line(&|p| s.inv[p][x / k][x % k])).collect();
    EnrichedBundle::new(base, LineBundles::named(s.points.clone()), fiber, mu, j, Some(nu))
}

/// Inverse of [`tg_linebundle`].
pub fn sg_linebundle<T: Real>(b: &EnrichedBundle<T, LineBundles>) -> Result<Spaceoid<T>> {
    let k = b.base.n_objects();
    let full = BaseCategory::full_relation(k).with_object_names(b.base.object_names().to_vec())?;
    if b.base != full {
        return Err(Error::BaseMismatch("base is not the total relation on its objects".into()));
    }
    let nu = b.nu.as_ref().ok_or(Error::MissingInvolution)?;
    let n = b.enriching.n_points;
    let bad = || Error::NotRankOne("line data is not indexed by the points".into());
    if b.fiber.iter().any(|e| e.metric.len() != n)
        || nu.iter().chain(&b.j).any(|m| m.scalars.len() != n)
        || b.mu.iter().flatten().flatten().any(|m| m.scalars.len() != n)
    {
        return Err(bad());
    }
    let mut s = Spaceoid {
        points: b.enriching.point_names.clone(),
        objects: b.base.object_names().to_vec(),
        metric: vec![vec![vec![T::zero(); k]; k]; n],
        comp: vec![vec![vec![vec![zero(); k]; k]; k]; n],
        inv: vec![vec![vec![zero(); k]; k]; n],
    };
    for p in 0..n {
        for a in 0..k {
            for bb in 0..k {
                s.metric[p][a][bb] = b.fiber[a * k + bb].metric[p];
                s.inv[p][a][bb] = nu[a * k + bb].scalars[p];
                for c in 0..k {
                    s.comp[p][a][bb][c] = b.mu(a * k + bb, bb * k + c)?.scalars[p];
                }
            }
        }
    }
    for a in 0..k {
        for p in 0..n {
            // the unit morphism must agree with the unit of the glued fiber
            if b.j[a].scalars[p] != s.unit_coord(p, a) {
                let d = (b.j[a].scalars[p] - s.unit_coord(p, a)).norm();
                if d > T::default_tol() * (T::one() + b.j[a].scalars[p].norm()) {
                    return Err(Error::InvalidSpaceoid(format!("unit at object {a}, point {p} is inconsistent")));
                }
            }
        }
    }
    Ok(s)
}

/// Restricts a Hilbert-bundle-enriched bundle to line bundles, if every
/// fiber has rank one everywhere.
pub fn hilb_to_line<T: Real>(b: &EnrichedBundle<T, HilbBundles>) -> Result<EnrichedBundle<T, LineBundles>> {
    let scalar = |m: &CMatrix<T>, what: &str| {
        if m.rows() == 1 && m.cols() == 1 {
            Ok(m[(0, 0)])
        } else {
            Err(Error::NotRankOne(format!("{what} block is {}x{}", m.rows(), m.cols())))
        }
    };
    let line = |m: &crate::monoidal::BundleMap<T>, what: &str| -> Result<LineMap<T>> {
        Ok(LineMap { scalars: m.blocks.iter().map(|x| scalar(x, what)).collect::<Result<_>>()? })
    };
    let fiber = b
        .fiber
        .iter()
        .map(|e| Ok(LineBundle { metric: e.grams.iter().map(|g| scalar(g, "fiber").map(|z| z.re)).collect::<Result<_>>()? }))
        .collect::<Result<Vec<_>>>()?;
    let mu = b
        .mu
        .iter()
        .map(|r| r.iter().map(|m| m.as_ref().map(|m| line(m, "mu")).transpose()).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let j = b.j.iter().map(|m| line(m, "unit")).collect::<Result<Vec<_>>>()?;
    let nu = b.nu.as_ref().map(|v| v.iter().map(|m| line(m, "involution")).collect::<Result<Vec<_>>>()).transpose()?;
    EnrichedBundle::new(b.base.clone(), LineBundles::new(b.enriching.n_points), fiber, mu, j, nu)
}

/// `m: s1 -> s2` as a cross-base morphism `tg(s1) -> tg(s2)`.
pub fn tg_linebundle_morphism<T: Real>(
    m: &SpaceoidMorphism<T>,
    s1: &Spaceoid<T>,
    s2: &Spaceoid<T>,
) -> Result<CrossBaseMorphism<T, LineBundles>> {
    let (k1, k2) = (s1.n_objects(), s2.n_objects());
    invert_perm(&m.f_rel)?;
    let src = BaseCategory::full_relation(k1);
    let dst = BaseCategory::full_relation(k2);
    let object_map = m.f_rel.clone();
    let functor = BaseFunctor::from_object_map(&src, &dst, object_map)?;
    let components = (0..k1 * k1)
        .map(|x| LineMap { scalars: m.scalars.iter().map(|row| row[x / k1][x % k1]).collect() })
        .collect();
    Ok(CrossBaseMorphism { functor, change: m.f_delta.clone(), components })
}

pub fn sg_linebundle_morphism<T: Real>(c: &CrossBaseMorphism<T, LineBundles>) -> Result<SpaceoidMorphism<T>> {
    let k = c.functor.object_map.len();
    if c.components.len() != k * k {
        return Err(Error::BaseMismatch("components are not indexed by object pairs".into()));
    }
    let n = c.change.len();
    if c.components.iter().any(|l| l.scalars.len() != n) {
        return Err(Error::NotRankOne("components are not indexed by points".into()));
    }
    invert_perm(&c.functor.object_map)?;
    let scalars = (0..n)
        .map(|p| (0..k).map(|a| (0..k).map(|b| c.components[a * k + b].scalars[p]).collect()).collect())
        .collect();
    Ok(SpaceoidMorphism { f_delta: c.change.clone(), f_rel: c.functor.object_map.clone(), scalars })
}

/// Bundle over the discrete category on the points whose fiber at `p` is the
/// one-dimensional C*-category of `s` there. All structure maps are identities.
pub fn tg_cfield<T: Real>(s: &Spaceoid<T>) -> Result<EnrichedBundle<T, OneDimCats>> {
    require_valid(s)?;
    let n = s.n_points();
    let base = BaseCategory::delta(n).with_object_names(s.points.clone())?;
    let fiber = (0..n).map(|p| fiber_cstar_category(s, p)).collect::<Result<Vec<_>>>()?;
    let ids: Vec<OneDimFunctor<T>> = fiber.iter().map(OneDimFunctor::identity).collect();
    let mu = (0..n).map(|x| (0..n).map(|y| (x == y).then(|| ids[x].clone())).collect()).collect();
    EnrichedBundle::new(base, OneDimCats { n_objects: s.n_objects() }, fiber, mu, ids.clone(), Some(ids))
}

/// Inverse of [`tg_cfield`].
pub fn sg_cfield<T: Real>(b: &EnrichedBundle<T, OneDimCats>) -> Result<Spaceoid<T>> {
    let n = b.base.n_objects();
    if b.base.n_arrows() != n || (0..n).any(|x| !b.base.is_identity(x)) {
        return Err(Error::BaseMismatch("base has non-identity arrows".into()));
    }
    let k = b.enriching.n_objects;
    let fibers: Vec<OneDimCStarCat<T>> = (0..n).map(|p| b.fiber[b.base.identity(p)].clone()).collect();
    if fibers.iter().any(|f| f.n_objects() != k) {
        return Err(Error::ObjectSetMismatch("fiber object count differs from the enriching category".into()));
    }
    Spaceoid::from_fibers(b.base.object_names().to_vec(), &fibers)
}

/// Reads a general C*-category as a one-dimensional one.
pub fn one_dim_from_cstar<T: Real>(cat: &CStarCategory<T>) -> Result<OneDimCStarCat<T>> {
    let k = cat.n_objects();
    for a in 0..k {
        for b in 0..k {
            if cat.hom_dim(a, b) != 1 {
                return Err(Error::FiberNotOneDimensional(format!("hom ({a},{b}) has dimension {}", cat.hom_dim(a, b))));
            }
        }
    }
    let mut o = OneDimCStarCat {
        objects: cat.objects().to_vec(),
        metric: vec![vec![T::zero(); k]; k],
        comp: (0..k).map(|a| (0..k).map(|b| (0..k).map(|c| cat.comp(a, b, c).get(0, 0, 0)).collect()).collect()).collect(),
        inv: vec![vec![zero(); k]; k],
    };
    for a in 0..k {
        for b in 0..k {
            let h = cat.norm(&Mor::new(b, a, vec![one()]))?;
            o.metric[a][b] = h * h;
            // inv[b][a] holds the coefficient of e_ab* along e_ba
            o.inv[a][b] = cat.inv(b, a)[(0, 0)] / (h * h);
        }
    }
    Ok(o)
}

/// `m: s1 -> s2` as a cross-base morphism `tg_cfield(s1) -> tg_cfield(s2)`.
pub fn tg_cfield_morphism<T: Real>(
    m: &SpaceoidMorphism<T>,
    s1: &Spaceoid<T>,
    s2: &Spaceoid<T>,
) -> Result<CrossBaseMorphism<T, OneDimCats>> {
    use crate::enriched::BaseChange;
    let inst = OneDimCats { n_objects: s2.n_objects() };
    invert_perm(&m.f_rel)?;
    let src = BaseCategory::delta(s1.n_points());
    let dst = BaseCategory::delta(s2.n_points());
    let functor = BaseFunctor::from_object_map(&src, &dst, m.f_delta.clone())?;
    let components = (0..s1.n_points())
        .map(|p| {
            let pulled = BaseChange::<T>::pull_object(&inst, &m.f_rel, &fiber_cstar_category(s2, m.f_delta[p])?);
            let k = s1.n_objects();
            Ok(OneDimFunctor {
                source: pulled,
                target: fiber_cstar_category(s1, p)?,
                object_map: (0..k).collect(),
                scalars: m.scalars[p].clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossBaseMorphism { functor, change: m.f_rel.clone(), components })
}

pub fn sg_cfield_morphism<T: Real>(c: &CrossBaseMorphism<T, OneDimCats>) -> Result<SpaceoidMorphism<T>> {
    let k = c.change.len();
    for f in &c.components {
        if f.object_map.len() != k || f.object_map.iter().enumerate().any(|(a, &b)| a != b) {
            return Err(Error::ObjectSetMismatch("component moves objects".into()));
        }
    }
    invert_perm(&c.change)?;
    Ok(SpaceoidMorphism {
        f_delta: c.functor.object_map.clone(),
        f_rel: c.change.clone(),
        scalars: c.components.iter().map(|f| f.scalars.clone()).collect(),
    })
}

/// Random spaceoid with `e_ab = λ_p(ab) e` twisted from the trivial one at
/// every point, so every axiom holds by construction.
pub fn generate_spaceoid<T: Real>(seed: u64, n_objects: usize, n_points: usize) -> Result<Spaceoid<T>> {
    if n_objects == 0 || n_points == 0 {
        return Err(Error::BadSize(format!("need at least one object and one point, got {n_objects} and {n_points}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fibers: Vec<OneDimCStarCat<T>> = (0..n_points).map(|_| twisted_one_dim(&mut rng, n_objects)).collect();
    Spaceoid::from_fibers((0..n_points).map(|p| format!("p{p}")).collect(), &fibers)
}

/// Section category of a generated spaceoid.
pub fn generate<T: Real>(seed: u64, n_objects: usize, n_points: usize) -> Result<CStarCategory<T>> {
    gamma(&generate_spaceoid::<T>(seed, n_objects, n_points)?)
}

/// Random spaceoid `s1` over `n1` points with a morphism `s1 -> s2`.
///
/// `s1` is the pullback of `s2` along a random point map and object
/// permutation with each basis vector rescaled by a random nonzero scalar.
pub fn random_morphism_into<T: Real>(
    rng: &mut ChaCha8Rng,
    s2: &Spaceoid<T>,
    n1: usize,
) -> Result<(Spaceoid<T>, SpaceoidMorphism<T>)> {
    if n1 == 0 {
        return Err(Error::BadSize("need at least one point".into()));
    }
    let k = s2.n_objects();
    let f_delta: Vec<usize> = (0..n1).map(|_| rng.gen_range(0..s2.n_points())).collect();
    let mut f_rel: Vec<usize> = (0..k).collect();
    f_rel.shuffle(rng);
    let w: Vec<Vec<Vec<Complex<T>>>> = (0..n1)
        .map(|_| {
            (0..k)
                .map(|_| {
                    (0..k)
                        .map(|_| {
                            let r: f64 = rng.gen_range(0.5..2.0);
                            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                            Complex::from_polar(lit::<T>(r), lit(t))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut s1 = Spaceoid::trivial(n1, k);
    for p in 0..n1 {
        let q = f_delta[p];
        let ps = &f_rel;
        for a in 0..k {
            for b in 0..k {
                let wab = w[p][a][b];
                s1.metric[p][a][b] = wab.norm_sqr() * s2.metric[q][ps[a]][ps[b]];
                // σ1 = conj(w_ab) σ2 / w_ba, s1 = σ1 / h1
                let sigma1 = wab.conj() * s2.sigma(q, ps[a], ps[b]) / w[p][b][a];
                s1.inv[p][a][b] = sigma1 / s1.metric[p][a][b];
                for c in 0..k {
                    s1.comp[p][a][b][c] = wab * w[p][b][c] * s2.comp[q][ps[a]][ps[b]][ps[c]] / w[p][a][c];
                }
            }
        }
    }
    let scalars = w.iter().map(|r| r.iter().map(|v| v.iter().map(|z| one::<T>() / *z).collect()).collect()).collect();
    Ok((s1, SpaceoidMorphism { f_delta, f_rel, scalars }))
}

/// Random spaceoid automorphism `e_ab -> u_p(a) conj(u_p(b)) e_ab`.
pub fn phase_automorphism<T: Real>(rng: &mut ChaCha8Rng, s: &Spaceoid<T>) -> SpaceoidMorphism<T> {
    let k = s.n_objects();
    let scalars = (0..s.n_points())
        .map(|_| {
            let u: Vec<Complex<T>> = (0..k)
                .map(|_| Complex::from_polar(T::one(), lit(rng.gen_range(0.0..std::f64::consts::TAU))))
                .collect();
            (0..k).map(|a| (0..k).map(|b| u[a] * u[b].conj()).collect()).collect()
        })
        .collect();
    SpaceoidMorphism { f_delta: (0..s.n_points()).collect(), f_rel: (0..k).collect(), scalars }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstar::diagonal_functions;
    use crate::enriched::{compose_cross_base, verify_cross_base};
    use crate::spaceoid::{compose_morphisms, morphism_distance, spaceoid_distance};

    #[test]
    fn spectrum_of_complex_numbers_is_a_point() {
        let sp = sigma(&diagonal_functions::<f64>(1), 1e-9).unwrap();
        assert_eq!(sp.spaceoid.n_points(), 1);
        assert_eq!(spaceoid_distance(&sp.spaceoid, &Spaceoid::trivial(1, 1)), 0.0);
    }

    #[test]
    fn diagonal_characters_are_coordinate_evaluations() {
        let sp = sigma(&diagonal_functions::<f64>(2), 1e-9).unwrap();
        let chars = &sp.characters[0];
        // ascending lexicographic: (0,1) before (1,0)
        assert!((chars[0][0].norm()) < 1e-12 && (chars[0][1] - one()).norm() < 1e-12);
        assert!((chars[1][0] - one()).norm() < 1e-12 && chars[1][1].norm() < 1e-12);
    }

    #[test]
    fn non_commutative_rejected() {
        let mut t = Tensor3::zeros(4, 4, 4);
        // 2x2 matrix units e_ij e_jk = e_ik, index 2i + j
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    t.set(2 * i + j, 2 * j + k, 2 * i + k, one());
                }
            }
        }
        let mut inv = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                inv[(2 * j + i, 2 * i + j)] = one();
            }
        }
        let cat = CStarCategory::new(
            vec!["A".into()],
            vec![vec![4]],
            vec![vec![vec![t]]],
            vec![vec![inv]],
            vec![vec![one(), zero(), zero(), one()]],
        )
        .unwrap();
        assert_eq!(sigma(&cat, 1e-9).unwrap_err(), Error::NotCommutative);
    }

    #[test]
    fn gamma_of_trivial_is_diagonal_algebra() {
        let g = gamma(&Spaceoid::<f64>::trivial(3, 1)).unwrap();
        let d = diagonal_functions::<f64>(3);
        assert_eq!(g.comp(0, 0, 0), d.comp(0, 0, 0));
        assert_eq!(g.inv(0, 0), d.inv(0, 0));
    }

    #[test]
    fn generated_category_is_valid_and_has_n_characters() {
        let cat = generate::<f64>(11, 3, 4).unwrap();
        assert!(cat.verify_cstar(1e-9).passed());
        let sp = sigma(&cat, 1e-9).unwrap();
        assert_eq!(sp.spaceoid.n_points(), 4);
        assert!(sp.characters.iter().all(|c| c.len() == 4));
    }

    #[test]
    fn gelfand_transform_inverts() {
        let cat = generate::<f64>(12, 2, 3).unwrap();
        let g = gelfand_transform(&cat, 1e-9).unwrap();
        let rep = g.verify(&cat, 1e-8).unwrap();
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn two_point_gelfand_transform_is_identity() {
        let cat = diagonal_functions::<f64>(2);
        let g = gelfand_transform(&cat, 1e-9).unwrap();
        // sorted characters swap the coordinates
        let m = &g.functor.arrow_maps[0][0];
        assert!((m[(0, 1)] - one()).norm() < 1e-12 && (m[(1, 0)] - one()).norm() < 1e-12);
    }

    #[test]
    fn sections_spectrum_iso_verifies() {
        let s = generate_spaceoid::<f64>(13, 3, 3).unwrap();
        let (sp, m, inv) = sections_spectrum_iso(&s, 1e-9).unwrap();
        let rep = verify_isomorphism(&m, &inv, &s, &sp.spaceoid, 1e-8);
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn linebundle_round_trip_is_exact() {
        let s = generate_spaceoid::<f64>(14, 3, 2).unwrap();
        let b = tg_linebundle(&s).unwrap();
        assert!(b.verify(1e-10).passed(), "{}", b.verify(1e-10));
        let back = sg_linebundle(&b).unwrap();
        assert_eq!(back, s);
        let again = tg_linebundle(&back).unwrap();
        assert_eq!(again.distance(&b), 0.0);
    }

    #[test]
    fn cfield_round_trip_is_exact() {
        let s = generate_spaceoid::<f64>(15, 2, 3).unwrap();
        let b = tg_cfield(&s).unwrap();
        assert!(b.check_pentagon(1e-10).passed() && b.check_unit_triangles(1e-10).passed());
        assert!(b.check_star_diagrams(1e-10).unwrap().passed());
        assert_eq!(sg_cfield(&b).unwrap(), s);
    }

    #[test]
    fn one_dim_cstar_reading() {
        let s = generate_spaceoid::<f64>(16, 3, 1).unwrap();
        let f = fiber_cstar_category(&s, 0).unwrap();
        let back = one_dim_from_cstar(&f.to_cstar().unwrap()).unwrap();
        assert!(spaceoid_distance(&Spaceoid::from_fibers(vec!["p0".into()], &[back]).unwrap(), &s) < 1e-12);
        assert!(matches!(one_dim_from_cstar(&generate::<f64>(1, 1, 2).unwrap()), Err(Error::FiberNotOneDimensional(_))));
    }

    #[test]
    fn random_morphisms_verify_and_transport() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s3 = generate_spaceoid::<f64>(18, 3, 2).unwrap();
        let (s2, m2) = random_morphism_into(&mut rng, &s3, 3).unwrap();
        let (s1, m1) = random_morphism_into(&mut rng, &s2, 2).unwrap();
        assert!(verify_spaceoid(&s1, 1e-10).passed());
        assert!(verify_morphism(&m1, &s1, &s2, 1e-10).passed());
        let m21 = compose_morphisms(&m2, &m1).unwrap();
        assert!(verify_morphism(&m21, &s1, &s3, 1e-10).passed());

        let (b1, b2, b3) = (tg_linebundle(&s1).unwrap(), tg_linebundle(&s2).unwrap(), tg_linebundle(&s3).unwrap());
        let c1 = tg_linebundle_morphism(&m1, &s1, &s2).unwrap();
        let c2 = tg_linebundle_morphism(&m2, &s2, &s3).unwrap();
        assert!(verify_cross_base(&c1, &b1, &b2, 1e-10).unwrap().passed());
        let c21 = compose_cross_base(&b1.enriching, &b2.enriching, &c2, &c1).unwrap();
        assert!(verify_cross_base(&c21, &b1, &b3, 1e-10).unwrap().passed());
        assert!(morphism_distance(&sg_linebundle_morphism(&c21).unwrap(), &m21) < 1e-12);

        let (f1, f2) = (tg_cfield(&s1).unwrap(), tg_cfield(&s2).unwrap());
        let d1 = tg_cfield_morphism(&m1, &s1, &s2).unwrap();
        let rep = verify_cross_base(&d1, &f1, &f2, 1e-10).unwrap();
        assert!(rep.passed(), "{rep}");
        assert_eq!(sg_cfield_morphism(&d1).unwrap(), m1);
    }

    #[test]
    fn morphism_transport_is_contravariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let s3 = generate_spaceoid::<f64>(20, 2, 2).unwrap();
        let (s2, m2) = random_morphism_into(&mut rng, &s3, 3).unwrap();
        let (s1, m1) = random_morphism_into(&mut rng, &s2, 2).unwrap();
        let g1 = gamma_on_morphism(&m1, &s1, &s2, 1e-10).unwrap();
        let g2 = gamma_on_morphism(&m2, &s2, &s3, 1e-10).unwrap();
        let (c1, c2, c3) = (gamma(&s1).unwrap(), gamma(&s2).unwrap(), gamma(&s3).unwrap());
        assert!(g1.verify(&c2, &c1, 1e-10).unwrap().passed());
        let composite = gamma_on_morphism(&compose_morphisms(&m2, &m1).unwrap(), &s1, &s3, 1e-10).unwrap();
        assert!(composite.distance(&g1.after(&g2).unwrap()) < 1e-12);

        let sg1 = sigma_on_morphism(&g1, &c2, &c1, 1e-9).unwrap();
        let sg2 = sigma_on_morphism(&g2, &c3, &c2, 1e-9).unwrap();
        let sgc = sigma_on_morphism(&g1.after(&g2).unwrap(), &c3, &c1, 1e-9).unwrap();
        assert!(morphism_distance(&sgc, &compose_morphisms(&sg2, &sg1).unwrap()) < 1e-9);
    }

    #[test]
    fn generator_rejects_empty_sizes() {
        assert!(matches!(generate_spaceoid::<f64>(0, 0, 1), Err(Error::BadSize(_))));
        assert_eq!(generate_spaceoid::<f64>(5, 2, 2).unwrap(), generate_spaceoid::<f64>(5, 2, 2).unwrap());
    }
}
