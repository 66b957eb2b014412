//! Spaceoids: unital rank-one Fell bundles over `Δ_X × R_O` for finite `X`.
//!
//! At each point `p` and object pair `(A, B)` the line fiber is spanned by a
//! basis vector `e_AB` with
//!
//! * `|e_AB|^2 = h_p(AB)`,
//! * `e_AB ∘ e_BC = c_p(AB, BC) e_AC`,
//! * `(z e_AB)* = conj(z) h_p(AB) s_p(AB) e_BA`.
//!
//! Over a finite discrete `X` every line bundle is trivial; what remains is
//! carried by the phases of `c` and `s`.

use num_complex::Complex;

use crate::cstar::Report;
use crate::error::{Error, Result};
use crate::monoidal::{HilbBundle, LineBundle, OneDimCStarCat};
use crate::scalar::{one, rel_gap, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Spaceoid<T: Real> {
    pub points: Vec<String>,
    pub objects: Vec<String>,
    /// `metric[p][a][b] = h_p(ab)`.
    pub metric: Vec<Vec<Vec<T>>>,
    /// `comp[p][a][b][c] = c_p(ab, bc)`.
    pub comp: Vec<Vec<Vec<Vec<Complex<T>>>>>,
    /// `inv[p][a][b] = s_p(ab)`.
    pub inv: Vec<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> Spaceoid<T> {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    /// All `h = c = s = 1`.
    pub fn trivial(n_points: usize, n_objects: usize) -> Self {
        let k = n_objects;
        Spaceoid {
            points: (0..n_points).map(|p| format!("p{p}")).collect(),
            objects: (0..k).map(|a| format!("O{a}")).collect(),
            metric: vec![vec![vec![T::one(); k]; k]; n_points],
            comp: vec![vec![vec![vec![one(); k]; k]; k]; n_points],
            inv: vec![vec![vec![one(); k]; k]; n_points],
        }
    }

    /// Assembles a spaceoid from its fiber categories, which must share an
    /// object count.
    pub fn from_fibers(points: Vec<String>, fibers: &[OneDimCStarCat<T>]) -> Result<Self> {
        let first = fibers.first().ok_or_else(|| Error::InvalidSpaceoid("no points".into()))?;
        if points.len() != fibers.len() {
            return Err(Error::InvalidSpaceoid("point names do not match fibers".into()));
        }
        if fibers.iter().any(|f| f.objects != first.objects) {
            return Err(Error::ObjectSetMismatch("fibers have different object sets".into()));
        }
        let s = Spaceoid {
            points,
            objects: first.objects.clone(),
            metric: fibers.iter().map(|f| f.metric.clone()).collect(),
            comp: fibers.iter().map(|f| f.comp.clone()).collect(),
            inv: fibers.iter().map(|f| f.inv.clone()).collect(),
        };
        s.check_shape()?;
        Ok(s)
    }

    /// `σ_p(ab) = h_p(ab) s_p(ab)`, the coefficient of `e_ab*` along `e_ba`.
    pub fn sigma(&self, p: usize, a: usize, b: usize) -> Complex<T> {
        self.inv[p][a][b] * self.metric[p][a][b]
    }

    /// Coordinate of the unit of `E_p(AA)`.
    pub fn unit_coord(&self, p: usize, a: usize) -> Complex<T> {
        one::<T>() / self.comp[p][a][a][a]
    }

    pub fn check_shape(&self) -> Result<()> {
        let (n, k) = (self.n_points(), self.n_objects());
        let bad = |m: &str| Err(Error::InvalidSpaceoid(m.into()));
        if n == 0 || k == 0 {
            return bad("empty point or object set");
        }
        if self.metric.len() != n || self.comp.len() != n || self.inv.len() != n {
            return bad("tables are not indexed by points");
        }
        for p in 0..n {
            if self.metric[p].len() != k || self.inv[p].len() != k || self.comp[p].len() != k {
                return bad("tables are not indexed by objects");
            }
            for a in 0..k {
                if self.metric[p][a].len() != k || self.inv[p][a].len() != k || self.comp[p][a].len() != k {
                    return bad("tables are not indexed by object pairs");
                }
                if self.comp[p][a].iter().any(|r| r.len() != k) {
                    return bad("composition table is not indexed by object triples");
                }
            }
        }
        Ok(())
    }
}

/// Runs every spaceoid axiom and reports per-axiom max discrepancy.
pub fn verify_spaceoid<T: Real>(s: &Spaceoid<T>, tol: T) -> Report<T> {
    let mut rep = Report::new();
    if let Err(e) = s.check_shape() {
        rep.record_bool("shape", false);
        rep.note(e.to_string());
        return rep;
    }
    let (n, k) = (s.n_points(), s.n_objects());
    let mut positive_metric = true;
    let mut w = [T::zero(); 9];
    for p in 0..n {
        let h = &s.metric[p];
        let c = &s.comp[p];
        let sg = |a: usize, b: usize| s.sigma(p, a, b);
        for a in 0..k {
            let unit = c[a][a][a];
            w[2] = w[2].max((h[a][a] / unit.norm_sqr() - T::one()).abs());
            for b in 0..k {
                if !(h[a][b] > T::zero()) || !h[a][b].is_finite() {
                    positive_metric = false;
                }
                w[0] = w[0].max(rel_gap(c[a][a][b], unit));
                w[1] = w[1].max(rel_gap(c[a][b][b], c[b][b][b]));
                w[3] = w[3].max(rel_gap(sg(a, b).conj() * sg(b, a), one()));
                let cross = (sg(a, b) * c[b][a][b]).norm() * h[b][b].sqrt();
                w[5] = w[5].max((cross - h[a][b]).abs() / (T::one() + cross.max(h[a][b])));
                let z = sg(a, b) * c[b][a][b] * c[b][b][b];
                w[6] = w[6].max(z.im.abs().max(-z.re).max(T::zero()) / (T::one() + z.norm()));
                for cc in 0..k {
                    let l = c[a][b][cc].conj() * sg(a, cc);
                    let r = sg(b, cc) * sg(a, b) * c[cc][b][a];
                    w[4] = w[4].max(rel_gap(l, r));
                    let bound = (h[a][b] * h[b][cc]).sqrt();
                    let got = c[a][b][cc].norm() * h[a][cc].sqrt();
                    w[7] = w[7].max((got - bound).max(T::zero()) / (T::one() + bound));
                    for d in 0..k {
                        let l = c[a][b][cc] * c[a][cc][d];
                        let r = c[b][cc][d] * c[a][b][d];
                        w[8] = w[8].max(rel_gap(l, r));
                    }
                }
            }
        }
    }
    rep.record_bool("metric_positive", positive_metric);
    rep.record("associativity", w[8], tol);
    rep.record("left_unit", w[0], tol);
    rep.record("right_unit", w[1], tol);
    rep.record("unit_norm", w[2], tol);
    rep.record("involutivity", w[3], tol);
    rep.record("antimultiplicativity", w[4], tol);
    rep.record("cstar_identity", w[5], tol);
    rep.record("positivity", w[6], tol);
    rep.record("submultiplicativity", w[7], tol);
    rep
}

fn check_object<T: Real>(s: &Spaceoid<T>, a: usize) -> Result<()> {
    if a >= s.n_objects() {
        return Err(Error::UnknownObject(a));
    }
    Ok(())
}

fn check_point<T: Real>(s: &Spaceoid<T>, p: usize) -> Result<()> {
    if p >= s.n_points() {
        return Err(Error::UnknownPoint(p));
    }
    Ok(())
}

/// The line bundle `p -> h_p(ab)` restricted from the block `(a, b)`.
pub fn block_metric<T: Real>(s: &Spaceoid<T>, a: usize, b: usize) -> Result<LineBundle<T>> {
    check_object(s, a)?;
    check_object(s, b)?;
    Ok(LineBundle { metric: s.metric.iter().map(|m| m[a][b]).collect() })
}

/// The block `(a, b)` as a rank-one Hilbert bundle over `X`.
pub fn block_line_bundle<T: Real>(s: &Spaceoid<T>, a: usize, b: usize) -> Result<HilbBundle<T>> {
    Ok(HilbBundle::from(&block_metric(s, a, b)?))
}

/// The one-dimensional C*-category of the fiber over `p`.
pub fn fiber_cstar_category<T: Real>(s: &Spaceoid<T>, p: usize) -> Result<OneDimCStarCat<T>> {
    check_point(s, p)?;
    Ok(OneDimCStarCat {
        objects: s.objects.clone(),
        metric: s.metric[p].clone(),
        comp: s.comp[p].clone(),
        inv: s.inv[p].clone(),
    })
}

/// A *-functor `γ_p: E_p -> ℂ`, `e_ab -> scalars[a][b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trivialization<T: Real> {
    pub point: usize,
    pub scalars: Vec<Vec<Complex<T>>>,
}

/// Builds `γ_p` with `|γ_p(e_ab)| = √h_p(ab)`: the unit goes to 1, each
/// `e_{0b}` with `b ≠ 0` to the positive real `√h_p(0b)`, and the rest is
/// forced by multiplicativity and `*`.
pub fn trivializing_functor<T: Real>(s: &Spaceoid<T>, p: usize) -> Result<Trivialization<T>> {
    check_point(s, p)?;
    let k = s.n_objects();
    let c = &s.comp[p];
    let mut row0: Vec<Complex<T>> = (0..k).map(|b| Complex::from(s.metric[p][0][b].sqrt())).collect();
    row0[0] = c[0][0][0];
    // γ(e_a0) from γ(e_0a*) = conj(γ(e_0a))
    let col0: Vec<Complex<T>> = (0..k)
        .map(|a| if a == 0 { c[0][0][0] } else { row0[a].conj() / s.sigma(p, 0, a) })
        .collect();
    let scalars = (0..k)
        .map(|a| (0..k).map(|b| if a == 0 { row0[b] } else { col0[a] * row0[b] / c[a][0][b] }).collect())
        .collect();
    Ok(Trivialization { point: p, scalars })
}

impl<T: Real> Trivialization<T> {
    /// Multiplicativity, `*`-compatibility and unitality against the fiber.
    pub fn verify(&self, s: &Spaceoid<T>, tol: T) -> Result<Report<T>> {
        let p = self.point;
        check_point(s, p)?;
        let k = s.n_objects();
        let g = &self.scalars;
        if g.len() != k || g.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch("trivialization is not indexed by object pairs".into()));
        }
        let (mut mult, mut star, mut unit, mut iso) = (T::zero(), T::zero(), T::zero(), T::zero());
        for a in 0..k {
            unit = unit.max(rel_gap(g[a][a] * s.unit_coord(p, a), one()));
            for b in 0..k {
                star = star.max(rel_gap(s.sigma(p, a, b) * g[b][a], g[a][b].conj()));
                let h = s.metric[p][a][b];
                iso = iso.max((g[a][b].norm_sqr() - h).abs() / (T::one() + h));
                for cc in 0..k {
                    mult = mult.max(rel_gap(g[a][b] * g[b][cc], s.comp[p][a][b][cc] * g[a][cc]));
                }
            }
        }
        let mut rep = Report::new();
        rep.record("trivialization_multiplicativity", mult, tol);
        rep.record("trivialization_star", star, tol);
        rep.record("trivialization_unit", unit, tol);
        rep.record("trivialization_isometry", iso, tol);
        Ok(rep)
    }
}

/// Morphism `S1 -> S2`: a point map `X1 -> X2`, an object bijection
/// `O1 -> O2`, and per `(p, a, b)` over `X1` the scalar with which
/// `e2_{f(a) f(b)}` at `f(p)` maps into `E1_p(ab)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceoidMorphism<T: Real> {
    pub f_delta: Vec<usize>,
    pub f_rel: Vec<usize>,
    pub scalars: Vec<Vec<Vec<Complex<T>>>>,
}

pub fn identity_morphism<T: Real>(s: &Spaceoid<T>) -> SpaceoidMorphism<T> {
    let k = s.n_objects();
    SpaceoidMorphism {
        f_delta: (0..s.n_points()).collect(),
        f_rel: (0..k).collect(),
        scalars: vec![vec![vec![one(); k]; k]; s.n_points()],
    }
}

/// `m2 ∘ m1` for `m1: S1 -> S2`, `m2: S2 -> S3`.
pub fn compose_morphisms<T: Real>(m2: &SpaceoidMorphism<T>, m1: &SpaceoidMorphism<T>) -> Result<SpaceoidMorphism<T>> {
    let nc = |m: &str| Err(Error::NotComposable(m.into()));
    if m1.f_delta.iter().any(|&q| q >= m2.f_delta.len() || q >= m2.scalars.len()) {
        return nc("point map of the first morphism leaves the second's domain");
    }
    if m1.f_rel.len() != m2.f_rel.len() || m1.f_rel.iter().any(|&o| o >= m2.f_rel.len()) {
        return nc("object bijections have different sizes");
    }
    if m1.scalars.len() != m1.f_delta.len() {
        return nc("scalars are not indexed by points");
    }
    let k = m1.f_rel.len();
    let (f, psi) = (&m1.f_delta, &m1.f_rel);
    let scalars = (0..f.len())
        .map(|p| {
            (0..k)
                .map(|a| (0..k).map(|b| m1.scalars[p][a][b] * m2.scalars[f[p]][psi[a]][psi[b]]).collect())
                .collect()
        })
        .collect();
    Ok(SpaceoidMorphism {
        f_delta: f.iter().map(|&q| m2.f_delta[q]).collect(),
        f_rel: psi.iter().map(|&o| m2.f_rel[o]).collect(),
        scalars,
    })
}

/// Checks that `m: s1 -> s2` is a fiberwise *-functor on the pullback.
pub fn verify_morphism<T: Real>(m: &SpaceoidMorphism<T>, s1: &Spaceoid<T>, s2: &Spaceoid<T>, tol: T) -> Report<T> {
    let mut rep = Report::new();
    let (n1, k) = (s1.n_points(), s1.n_objects());
    let shape_ok = s1.check_shape().is_ok()
        && s2.check_shape().is_ok()
        && m.f_delta.len() == n1
        && m.f_delta.iter().all(|&q| q < s2.n_points())
        && m.scalars.len() == n1
        && m.scalars.iter().all(|r| r.len() == k && r.iter().all(|v| v.len() == k));
    rep.record_bool("morphism_shape", shape_ok);
    let mut seen = vec![false; s2.n_objects()];
    let bijective = m.f_rel.len() == k
        && s2.n_objects() == k
        && m.f_rel.iter().all(|&o| o < k && !std::mem::replace(&mut seen[o], true));
    rep.record_bool("f_rel_bijective", bijective);
    if !shape_ok || !bijective {
        return rep;
    }
    let (mut mult, mut star, mut unit) = (T::zero(), T::zero(), T::zero());
    let psi = &m.f_rel;
    for p in 0..n1 {
        let q = m.f_delta[p];
        let f = &m.scalars[p];
        for a in 0..k {
            unit = unit.max(rel_gap(f[a][a] * s1.comp[p][a][a][a], s2.comp[q][psi[a]][psi[a]][psi[a]]));
            for b in 0..k {
                let l = s2.sigma(q, psi[a], psi[b]) * f[b][a];
                let r = f[a][b].conj() * s1.sigma(p, a, b);
                star = star.max(rel_gap(l, r));
                for c in 0..k {
                    let l = s2.comp[q][psi[a]][psi[b]][psi[c]] * f[a][c];
                    let r = f[a][b] * f[b][c] * s1.comp[p][a][b][c];
                    mult = mult.max(rel_gap(l, r));
                }
            }
        }
    }
    rep.record("morphism_multiplicativity", mult, tol);
    rep.record("morphism_star", star, tol);
    rep.record("morphism_unit", unit, tol);
    rep
}

/// Max discrepancy between the data of two spaceoids (infinite on shape
/// mismatch). Names are ignored.
pub fn spaceoid_distance<T: Real>(a: &Spaceoid<T>, b: &Spaceoid<T>) -> T {
    if a.check_shape().is_err()
        || b.check_shape().is_err()
        || a.n_points() != b.n_points()
        || a.n_objects() != b.n_objects()
    {
        return T::infinity();
    }
    let mut d = T::zero();
    for p in 0..a.n_points() {
        for x in 0..a.n_objects() {
            for y in 0..a.n_objects() {
                let (h1, h2) = (a.metric[p][x][y], b.metric[p][x][y]);
                d = d.max((h1 - h2).abs() / (T::one() + h1.abs().max(h2.abs())));
                d = d.max(rel_gap(a.inv[p][x][y], b.inv[p][x][y]));
                for z in 0..a.n_objects() {
                    d = d.max(rel_gap(a.comp[p][x][y][z], b.comp[p][x][y][z]));
                }
            }
        }
    }
    d
}

/// Max discrepancy between two morphisms with the same index maps.
pub fn morphism_distance<T: Real>(a: &SpaceoidMorphism<T>, b: &SpaceoidMorphism<T>) -> T {
    if a.f_delta != b.f_delta || a.f_rel != b.f_rel || a.scalars.len() != b.scalars.len() {
        return T::infinity();
    }
    let mut d = T::zero();
    for (x, y) in a.scalars.iter().flatten().zip(b.scalars.iter().flatten()) {
        if x.len() != y.len() {
            return T::infinity();
        }
        for (u, v) in x.iter().zip(y) {
            d = d.max(rel_gap(*u, *v));
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monoidal::twisted_one_dim;
    use crate::scalar::c;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn twisted(seed: u64, n: usize, k: usize) -> Spaceoid<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fibers: Vec<_> = (0..n).map(|_| twisted_one_dim(&mut rng, k)).collect();
        Spaceoid::from_fibers((0..n).map(|p| format!("p{p}")).collect(), &fibers).unwrap()
    }

    #[test]
    fn trivial_passes() {
        let rep = verify_spaceoid(&Spaceoid::<f64>::trivial(3, 2), 1e-12);
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn twisted_passes() {
        let rep = verify_spaceoid(&twisted(1, 4, 3), 1e-10);
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn bumped_constant_fails() {
        let mut s = Spaceoid::<f64>::trivial(2, 2);
        s.comp[1][0][1][1] = c(1.1, 0.0);
        let rep = verify_spaceoid(&s, 1e-9);
        assert!(!rep.get("associativity").unwrap().passed || !rep.get("cstar_identity").unwrap().passed);
        let mut s = Spaceoid::<f64>::trivial(1, 1);
        s.comp[0][0][0][0] = c(1.1, 0.0);
        assert!(!verify_spaceoid(&s, 1e-9).passed());
    }

    #[test]
    fn bad_shape_reported() {
        let mut s = Spaceoid::<f64>::trivial(2, 2);
        s.inv[1].pop();
        let rep = verify_spaceoid(&s, 1e-9);
        assert!(!rep.get("shape").unwrap().passed);
    }

    #[test]
    fn blocks_copy_metrics() {
        let s = twisted(2, 3, 2);
        let l = block_metric(&s, 0, 1).unwrap();
        assert_eq!(l.metric, vec![s.metric[0][0][1], s.metric[1][0][1], s.metric[2][0][1]]);
        assert_eq!(block_line_bundle(&s, 0, 2).unwrap_err(), Error::UnknownObject(2));
        let d = block_line_bundle(&Spaceoid::<f64>::trivial(2, 1), 0, 0).unwrap();
        assert!(d.grams.iter().all(|g| g[(0, 0)] == c(1.0, 0.0)));
    }

    #[test]
    fn fiber_category_passes_cstar_suite() {
        let s = twisted(3, 2, 3);
        let f = fiber_cstar_category(&s, 1).unwrap();
        assert!(f.to_cstar().unwrap().verify_cstar(1e-9).passed());
        assert_eq!(fiber_cstar_category(&s, 2).unwrap_err(), Error::UnknownPoint(2));
    }

    #[test]
    fn trivialization_is_a_star_functor() {
        let s = twisted(4, 3, 4);
        for p in 0..3 {
            let g = trivializing_functor(&s, p).unwrap();
            let rep = g.verify(&s, 1e-10).unwrap();
            assert!(rep.passed(), "{rep}");
        }
        let t = trivializing_functor(&Spaceoid::<f64>::trivial(1, 3), 0).unwrap();
        assert!(t.scalars.iter().flatten().all(|z| (*z - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn identity_and_phase_morphisms() {
        let s = twisted(5, 2, 3);
        let id = identity_morphism(&s);
        assert!(verify_morphism(&id, &s, &s, 1e-12).passed());
        let u = [c(0.6, 0.8), c(-1.0, 0.0), c(0.0, 1.0)];
        let mut m = id.clone();
        for p in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    m.scalars[p][a][b] = u[a] * u[b].conj();
                }
            }
        }
        assert!(verify_morphism(&m, &s, &s, 1e-12).passed());
        m.scalars[0][0][1] = c(2.0, 0.5);
        assert!(!verify_morphism(&m, &s, &s, 1e-9).passed());
        let both = compose_morphisms(&id, &id).unwrap();
        assert_eq!(morphism_distance(&both, &id), 0.0);
    }

    #[test]
    fn non_bijective_object_map_rejected() {
        let s = Spaceoid::<f64>::trivial(1, 2);
        let mut m = identity_morphism(&s);
        m.f_rel = vec![0, 0];
        assert!(!verify_morphism(&m, &s, &s, 1e-9).get("f_rel_bijective").unwrap().passed);
    }
}
