use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spaceoid::cstar::Mor;
use spaceoid::enriched::{compose_cross_base, cross_base_distance, identity_cross_base, verify_cross_base};
use spaceoid::monoidal::{Cell, HilbBundles, LineBundles, LineMap, MonoidalStarCategory};
use spaceoid::numlin::{hermitian_eigen, is_positive, joint_diagonalize, operator_norm, CMatrix};
use spaceoid::spaceoid::{
    block_line_bundle, compose_morphisms, fiber_cstar_category, identity_morphism, morphism_distance,
};
use spaceoid::spectra::{
    gamma, gamma_on_morphism, gelfand_transform, generate, generate_spaceoid, random_morphism_into, sigma,
    sigma_on_morphism, tg_linebundle, tg_linebundle_morphism,
};
use spaceoid::textio::{parse, serialize, Document, Payload};

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    m
}

/// Commuting normal matrices `V diag(d_i) V*` sharing a random unitary `V`.
fn commuting_family(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<CMatrix<f64>> {
    let g = random_matrix(rng, n);
    let (_, v) = hermitian_eigen(&(&g + &g.adjoint())).unwrap();
    (0..count)
        .map(|_| {
            let d: Vec<C> = (0..n).map(|_| C::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            &(&v * &CMatrix::from_diag(&d)) * &v.adjoint()
        })
        .collect()
}

fn tuples(lists: &[Vec<C>]) -> Vec<Vec<(f64, f64)>> {
    let n = lists.first().map_or(0, Vec::len);
    let mut t: Vec<Vec<(f64, f64)>> =
        (0..n).map(|i| lists.iter().map(|l| ((l[i].re * 1e8).round(), (l[i].im * 1e8).round())).collect()).collect();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t
}

fn cat_shape() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 1usize..=3, 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn joint_diagonalization_diagonalizes(seed in any::<u64>(), n in 1usize..=5, count in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ms = commuting_family(&mut rng, n, count);
        let tol = 1e-9;
        let d = joint_diagonalize(&ms, tol).unwrap();
        for (m, ev) in ms.iter().zip(&d.eigenvalue_lists) {
            let conj = &(&d.unitary.adjoint() * m) * &d.unitary;
            let off = &conj - &CMatrix::from_diag(ev);
            prop_assert!(off.max_abs() <= 10.0 * tol * m.max_abs().max(1.0));
        }
        let mut rev = ms.clone();
        rev.reverse();
        let mut lists = joint_diagonalize(&rev, tol).unwrap().eigenvalue_lists;
        lists.reverse();
        prop_assert_eq!(tuples(&lists), tuples(&d.eigenvalue_lists));
    }

    #[test]
    fn matrix_norms_obey_cstar_identity(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, n);
        let norm = operator_norm(&m, 1e-12).unwrap();
        prop_assert!((operator_norm(&m.adjoint(), 1e-12).unwrap() - norm).abs() <= 1e-9 * norm.max(1.0));
        let mm = operator_norm(&(&m.adjoint() * &m), 1e-12).unwrap();
        prop_assert!((mm - norm * norm).abs() <= 1e-9 * mm.max(1.0));
    }

    #[test]
    fn category_norms_and_positivity((seed, k, n) in cat_shape()) {
        let cat = generate::<f64>(seed, k, n).unwrap();
        prop_assert!(cat.verify_cstar(1e-9).passed());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for a in 0..k {
            for b in 0..k {
                let x = cat.random_mor(&mut rng, a, b);
                let nx = cat.norm(&x).unwrap();
                let xs = cat.involve(&x);
                prop_assert!((cat.norm(&xs).unwrap() - nx).abs() <= 1e-9 * nx.max(1.0));
                let xsx = cat.compose(&xs, &x).unwrap();
                prop_assert!((cat.norm(&xsx).unwrap() - nx * nx).abs() <= 1e-9 * (nx * nx).max(1.0));
                for e in cat.basis(a, b) {
                    let p = cat.compose(&cat.involve(&e), &e).unwrap();
                    prop_assert!(is_positive(&cat.left_matrix(&p, b), 1e-9).unwrap());
                }
            }
        }
    }

    #[test]
    fn fullness_survives_isomorphism((seed, k, n) in cat_shape()) {
        let cat = generate::<f64>(seed, k, n).unwrap();
        let g = gelfand_transform(&cat, 1e-9).unwrap();
        prop_assert!(g.verify(&cat, 1e-8).unwrap().passed());
        prop_assert_eq!(cat.is_full(1e-9).unwrap(), g.sections.is_full(1e-9).unwrap());
    }

    #[test]
    fn spectrum_counts_match_diagonal_dims((seed, k, n) in cat_shape()) {
        let cat = generate::<f64>(seed, k, n).unwrap();
        let sp = sigma(&cat, 1e-9).unwrap();
        for a in 0..k {
            prop_assert_eq!(sp.characters[a].len(), cat.hom_dim(a, a));
        }
        prop_assert_eq!(sp.spaceoid.n_points(), n);
    }

    #[test]
    fn line_bundles_monoidal_laws(seed in any::<u64>(), points in 1usize..=4) {
        monoidal_laws(&LineBundles::new(points), seed)?;
    }

    #[test]
    fn hilbert_bundles_monoidal_laws(seed in any::<u64>(), points in 1usize..=3) {
        monoidal_laws(&HilbBundles::new(points, 2), seed)?;
    }

    #[test]
    fn perturbed_structure_maps_fail(seed in any::<u64>(), k in 1usize..=3, n in 1usize..=3, which in 0usize..3) {
        let s = generate_spaceoid::<f64>(seed, k, n).unwrap();
        let b = tg_linebundle(&s).unwrap();
        prop_assert!(b.verify(1e-10).passed());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bad = b.clone();
        let bump = |m: &mut LineMap<f64>, rng: &mut ChaCha8Rng| {
            let p = rng.gen_range(0..m.scalars.len());
            m.scalars[p] *= C::new(1.0 + 1e-8, 0.0);
        };
        match which {
            0 => {
                let pairs = bad.base.composable_pairs();
                let (x, y) = pairs[rng.gen_range(0..pairs.len())];
                bump(bad.mu[x][y].as_mut().unwrap(), &mut rng);
            }
            1 => {
                let a = rng.gen_range(0..bad.j.len());
                bump(&mut bad.j[a], &mut rng);
            }
            _ => {
                let nu = bad.nu.as_mut().unwrap();
                let x = rng.gen_range(0..nu.len());
                bump(&mut nu[x], &mut rng);
            }
        }
        prop_assert!(!bad.verify(1e-10).passed());
    }

    #[test]
    fn total_space_is_a_cstar_category(seed in any::<u64>(), k in 1usize..=3, n in 1usize..=3) {
        let s = generate_spaceoid::<f64>(seed, k, n).unwrap();
        let (cat, _) = tg_linebundle(&s).unwrap().total_space_category().unwrap();
        prop_assert!(cat.verify_cstar(1e-9).passed());
    }

    #[test]
    fn blocks_agree_with_fibers(seed in any::<u64>(), k in 1usize..=3, n in 1usize..=3) {
        let s = generate_spaceoid::<f64>(seed, k, n).unwrap();
        for p in 0..n {
            let f = fiber_cstar_category(&s, p).unwrap();
            let cat = f.to_cstar().unwrap();
            for a in 0..k {
                for b in 0..k {
                    let g = &block_line_bundle(&s, a, b).unwrap().grams[p];
                    let e = cat.norm(&Mor::new(b, a, vec![C::new(1.0, 0.0)])).unwrap();
                    prop_assert!((g[(0, 0)].re - f.metric[a][b]).abs() < 1e-12);
                    prop_assert!((e * e - f.metric[a][b]).abs() < 1e-9 * f.metric[a][b].max(1.0));
                }
            }
        }
    }

    #[test]
    fn spaceoid_morphisms_form_a_category(seed in any::<u64>(), k in 1usize..=3, n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s3 = generate_spaceoid::<f64>(seed, k, n).unwrap();
        let (s2, g) = random_morphism_into(&mut rng, &s3, 3).unwrap();
        let (s1, f) = random_morphism_into(&mut rng, &s2, 2).unwrap();
        let (_, e) = random_morphism_into(&mut rng, &s1, 2).unwrap();
        let gf = compose_morphisms(&g, &f).unwrap();
        let want: Vec<usize> = f.f_rel.iter().map(|&a| g.f_rel[a]).collect();
        prop_assert_eq!(&gf.f_rel, &want);
        let l = compose_morphisms(&gf, &e).unwrap();
        let r = compose_morphisms(&g, &compose_morphisms(&f, &e).unwrap()).unwrap();
        prop_assert!(morphism_distance(&l, &r) < 1e-10);
        prop_assert!(morphism_distance(&compose_morphisms(&f, &identity_morphism(&s1)).unwrap(), &f) < 1e-12);
        prop_assert!(morphism_distance(&compose_morphisms(&identity_morphism(&s2), &f).unwrap(), &f) < 1e-12);
    }

    #[test]
    fn cross_base_composition_is_a_category(seed in any::<u64>(), k in 1usize..=3, n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s3 = generate_spaceoid::<f64>(seed, k, n).unwrap();
        let (s2, g) = random_morphism_into(&mut rng, &s3, 2).unwrap();
        let (s1, f) = random_morphism_into(&mut rng, &s2, 3).unwrap();
        let (s0, e) = random_morphism_into(&mut rng, &s1, 2).unwrap();
        let b: Vec<_> = [&s0, &s1, &s2, &s3].iter().map(|s| tg_linebundle(s).unwrap()).collect();
        let me = tg_linebundle_morphism(&e, &s0, &s1).unwrap();
        let mf = tg_linebundle_morphism(&f, &s1, &s2).unwrap();
        let mg = tg_linebundle_morphism(&g, &s2, &s3).unwrap();
        let (i0, i1, i2) = (&b[0].enriching, &b[1].enriching, &b[2].enriching);
        let gf = compose_cross_base(i1, i2, &mg, &mf).unwrap();
        let l = compose_cross_base(i0, i1, &gf, &me).unwrap();
        let fe = compose_cross_base(i0, i1, &mf, &me).unwrap();
        let r = compose_cross_base(i0, i2, &mg, &fe).unwrap();
        prop_assert!(cross_base_distance(i0, &l, &r) < 1e-10);
        prop_assert!(verify_cross_base(&l, &b[0], &b[3], 1e-9).unwrap().passed());
        let left_unit = compose_cross_base(i0, i1, &identity_cross_base(&b[1]), &me).unwrap();
        let right_unit = compose_cross_base(i0, i0, &me, &identity_cross_base(&b[0])).unwrap();
        prop_assert!(cross_base_distance(i0, &left_unit, &me) < 1e-12);
        prop_assert!(cross_base_distance(i0, &right_unit, &me) < 1e-12);
    }

    #[test]
    fn sigma_is_contravariant(seed in any::<u64>(), k in 1usize..=2, n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s3 = generate_spaceoid::<f64>(seed, k, n).unwrap();
        let (s2, m23) = random_morphism_into(&mut rng, &s3, n).unwrap();
        let (s1, m12) = random_morphism_into(&mut rng, &s2, n).unwrap();
        let (c1, c2, c3) = (gamma(&s1).unwrap(), gamma(&s2).unwrap(), gamma(&s3).unwrap());
        let f = gamma_on_morphism(&m23, &s2, &s3, 1e-9).unwrap();
        let g = gamma_on_morphism(&m12, &s1, &s2, 1e-9).unwrap();
        let gf = g.after(&f).unwrap();
        let whole = sigma_on_morphism(&gf, &c3, &c1, 1e-9).unwrap();
        let parts = compose_morphisms(
            &sigma_on_morphism(&f, &c3, &c2, 1e-9).unwrap(),
            &sigma_on_morphism(&g, &c2, &c1, 1e-9).unwrap(),
        ).unwrap();
        prop_assert!(morphism_distance(&whole, &parts) < 1e-9);
    }

    #[test]
    fn serialization_is_canonical((seed, k, n) in cat_shape()) {
        let docs = [
            Document::new(Payload::CStar(generate(seed, k, n).unwrap())),
            Document::new(Payload::Spaceoid(generate_spaceoid(seed, k, n).unwrap())),
        ];
        for doc in &docs {
            let text = serialize(doc);
            prop_assert_eq!(&serialize(&doc.clone()), &text);
            let back = parse(&text).unwrap();
            prop_assert_eq!(&serialize(&back), &text);
            match (&doc.payload, &back.payload) {
                (Payload::CStar(a), Payload::CStar(b)) => prop_assert_eq!(a, b),
                (Payload::Spaceoid(a), Payload::Spaceoid(b)) => prop_assert_eq!(a, b),
                _ => prop_assert!(false, "payload kind changed"),
            }
        }
    }
}

fn monoidal_laws<M: MonoidalStarCategory<f64>>(inst: &M, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9;
    let o: Vec<M::Obj> = inst.sample_tuple(&mut rng, 6);
    let (a, b, c, a2, b2, c2) = (&o[0], &o[1], &o[2], &o[3], &o[4], &o[5]);
    let d = |x: &M::Mor, y: &M::Mor| inst.mor_distance(x, y);

    let ab = inst.tensor(a, b).unwrap();
    let sources = [
        (Cell::Alpha, Cell::AlphaInv, vec![a.clone(), b.clone(), c.clone()], inst.tensor(&ab, c).unwrap()),
        (Cell::Beta, Cell::BetaInv, vec![a.clone()], a.clone()),
        (Cell::Gamma, Cell::GammaInv, vec![a.clone(), b.clone()], inst.dagger(&ab)),
    ];
    for (cell, inv, args, source) in sources {
        let round = inst.compose(&inst.cell(inv, &args).unwrap(), &inst.cell(cell, &args).unwrap()).unwrap();
        prop_assert!(d(&round, &inst.identity(&source)) <= tol);
    }

    let f = inst.sample_morphism(&mut rng, a, a2);
    let g = inst.sample_morphism(&mut rng, b, b2);
    let h = inst.sample_morphism(&mut rng, c, c2);
    // naturality of α
    let l = inst
        .compose(&inst.cell(Cell::Alpha, &[a2.clone(), b2.clone(), c2.clone()]).unwrap(), &inst.tensor_mor(&inst.tensor_mor(&f, &g).unwrap(), &h).unwrap())
        .unwrap();
    let r = inst
        .compose(&inst.tensor_mor(&f, &inst.tensor_mor(&g, &h).unwrap()).unwrap(), &inst.cell(Cell::Alpha, &[a.clone(), b.clone(), c.clone()]).unwrap())
        .unwrap();
    prop_assert!(d(&l, &r) <= tol);

    // functoriality of ⊗ and contravariance of †
    let f2 = inst.sample_morphism(&mut rng, a2, c2);
    let g2 = inst.sample_morphism(&mut rng, b2, a);
    let l = inst.tensor_mor(&inst.compose(&f2, &f).unwrap(), &inst.compose(&g2, &g).unwrap()).unwrap();
    let r = inst.compose(&inst.tensor_mor(&f2, &g2).unwrap(), &inst.tensor_mor(&f, &g).unwrap()).unwrap();
    prop_assert!(d(&l, &r) <= tol);
    let l = inst.dagger_mor(&inst.compose(&f2, &f).unwrap());
    let r = inst.compose(&inst.dagger_mor(&f), &inst.dagger_mor(&f2)).unwrap();
    prop_assert!(d(&l, &r) <= tol);
    Ok(())
}

#[test]
fn single_precision_pipeline() {
    use spaceoid::spaceoid::verify_spaceoid;
    let cat = generate::<f32>(3, 2, 3).unwrap();
    assert!(cat.verify_cstar(1e-4).passed());
    let sp = sigma(&cat, 1e-4).unwrap();
    assert!(verify_spaceoid(&sp.spaceoid, 1e-4).passed());
    assert!(gelfand_transform(&cat, 1e-4).unwrap().verify(&cat, 1e-4).unwrap().passed());
    assert!(tg_linebundle(&sp.spaceoid).unwrap().verify(1e-4).passed());
}
