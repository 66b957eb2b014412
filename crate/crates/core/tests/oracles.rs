//! Values checked against oracles computed independently in the test itself.

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spaceoid::cstar::{diagonal_functions, CStarCategory, Mor, StarFunctor, Tensor3};
use spaceoid::numlin::{is_positive, joint_diagonalize, operator_norm, CMatrix};
use spaceoid::spaceoid::{compose_morphisms, morphism_distance, verify_morphism, verify_spaceoid, Spaceoid};
use spaceoid::spectra::{
    gamma, gelfand_transform, generate, generate_spaceoid, phase_automorphism, random_morphism_into, sigma,
};

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn m2(a: [[C; 2]; 2]) -> CMatrix<f64> {
    CMatrix::from_rows(&[a[0].to_vec(), a[1].to_vec()]).unwrap()
}

/// Largest singular value of a 2x2 matrix from the characteristic polynomial of `m* m`.
fn norm_2x2(m: &CMatrix<f64>) -> f64 {
    let g = &m.adjoint() * m;
    let t = (g[(0, 0)] + g[(1, 1)]).re;
    let d = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
    ((t + (t * t - 4.0 * d).max(0.0).sqrt()) / 2.0).sqrt()
}

#[test]
fn operator_norms_match_characteristic_polynomial() {
    let z = c(0.0, 0.0);
    let a = m2([[c(3.0, 0.0), z], [z, c(0.0, -4.0)]]);
    let b = m2([[z, c(2.0, 0.0)], [z, z]]);
    for (m, want) in [(a, 4.0), (b, 2.0)] {
        let got = operator_norm(&m, 1e-12).unwrap();
        assert!((got - norm_2x2(&m)).abs() < 1e-12);
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn positivity_matches_hand_eigenvalues() {
    let (one, two) = (c(1.0, 0.0), c(2.0, 0.0));
    let m = m2([[two, one], [one, two]]);
    // eigenvalues are 2 +- 1
    assert!(is_positive(&m, 1e-12).unwrap());
    let shifted = &m - &CMatrix::identity(2).scale(c(1.5, 0.0));
    assert!(!is_positive(&shifted, 1e-12).unwrap());
}

#[test]
fn swap_diagonalizes_along_hadamard_vectors() {
    let (z, one) = (c(0.0, 0.0), c(1.0, 0.0));
    let x = m2([[z, one], [one, z]]);
    let d = joint_diagonalize(&[x.clone()], 1e-12).unwrap();
    let mut ev: Vec<f64> = d.eigenvalue_lists[0].iter().map(|e| e.re).collect();
    ev.sort_by(f64::total_cmp);
    assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    let u = &d.unitary;
    let conj = &(&u.adjoint() * &x) * u;
    assert!(conj.max_off_diagonal() < 1e-12);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..2 {
        let col = u.column(j);
        let overlap = (col[0] * r + col[1] * r).norm().max((col[0] * r - col[1] * r).norm());
        assert!((overlap - 1.0).abs() < 1e-12);
    }
}

/// `(x∘y)_k = Σ x_i y_j T[i][j][k]` read straight off the tensor.
fn contract(t: &Tensor3<f64>, x: &[C], y: &[C]) -> Vec<C> {
    let [d0, d1, d2] = t.dims();
    let mut out = vec![c(0.0, 0.0); d2];
    for i in 0..d0 {
        for j in 0..d1 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += x[i] * y[j] * t.data()[(i * d1 + j) * d2 + k];
            }
        }
    }
    out
}

fn gap(a: &[C], b: &[C]) -> f64 {
    let scale = a.iter().chain(b).map(|z| z.norm()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn associativity_by_direct_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..10 {
        let cat = generate::<f64>(seed, 3, 3).unwrap();
        let (a, b, cc, d) = (0, 1, 2, rng.gen_range(0..3));
        let x = cat.random_mor(&mut rng, a, b);
        let y = cat.random_mor(&mut rng, b, cc);
        let z = cat.random_mor(&mut rng, cc, d);
        let xy = contract(cat.comp(a, b, cc), &x.coords, &y.coords);
        let left = contract(cat.comp(a, cc, d), &xy, &z.coords);
        let yz = contract(cat.comp(b, cc, d), &y.coords, &z.coords);
        let right = contract(cat.comp(a, b, d), &x.coords, &yz);
        assert!(gap(&left, &right) < 1e-9);
        let lib = cat.compose(&cat.compose(&x, &y).unwrap(), &z).unwrap();
        assert!(gap(&lib.coords, &left) < 1e-12);
    }
}

#[test]
fn involution_reverses_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cat = generate::<f64>(12, 3, 2).unwrap();
    for _ in 0..20 {
        let (a, b, d) = (rng.gen_range(0..3), rng.gen_range(0..3), rng.gen_range(0..3));
        let x = cat.random_mor(&mut rng, a, b);
        let y = cat.random_mor(&mut rng, b, d);
        let left = cat.involve(&cat.compose(&x, &y).unwrap());
        let right = cat.compose(&cat.involve(&y), &cat.involve(&x)).unwrap();
        assert!(gap(&left.coords, &right.coords) < 1e-9);
        assert!(gap(&cat.involve(&cat.involve(&x)).coords, &x.coords) < 1e-12);
        let (nx, nxs) = (cat.norm(&x).unwrap(), cat.norm(&cat.involve(&x)).unwrap());
        assert!((nx - nxs).abs() < 1e-9 * nx.max(1.0));
    }
}

#[test]
fn diagonal_norm_is_max_modulus() {
    let cat = diagonal_functions::<f64>(2);
    let v = vec![c(3.0, 0.0), c(0.0, -4.0)];
    let oracle = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let got = cat.norm(&Mor::new(0, 0, v)).unwrap();
    assert!((got - oracle).abs() < 1e-12);
    assert!((cat.norm(&cat.unit(0)).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn perturbed_composition_fails_associativity() {
    let mut cat = generate::<f64>(21, 3, 2).unwrap();
    assert!(cat.verify_cstar(1e-9).passed());
    // a product between three distinct objects never meets a unit
    let d = cat.comp_mut(0, 1, 2).data_mut();
    let i = d.iter().position(|z| z.norm() > 1e-6).unwrap();
    d[i] += c(1e-3, 0.0);
    let rep = cat.verify_cstar(1e-9);
    assert!(!rep.get("associativity").unwrap().passed, "{rep}");
}

#[test]
fn doubled_involution_fails_cstar_identity() {
    let mut cat = generate::<f64>(22, 2, 2).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let m = cat.inv(a, b).scale(c(2.0, 0.0));
            *cat.inv_mut(a, b) = m;
        }
    }
    let rep = cat.verify_cstar(1e-9);
    assert!(!rep.get("cstar_identity").unwrap().passed, "{rep}");
}

#[test]
fn zero_hom_between_objects_is_not_full() {
    let t = |d0, d1, d2| Tensor3::zeros(d0, d1, d2);
    let mut one = t(1, 1, 1);
    one.set(0, 0, 0, c(1.0, 0.0));
    let hd = vec![vec![1, 0], vec![0, 1]];
    let comp = (0..2)
        .map(|a| {
            (0..2)
                .map(|b| {
                    (0..2)
                        .map(|cc| if a == b && b == cc { one.clone() } else { t(hd[a][b], hd[b][cc], hd[a][cc]) })
                        .collect()
                })
                .collect()
        })
        .collect();
    let inv = (0..2).map(|a| (0..2).map(|b| if a == b { CMatrix::identity(1) } else { CMatrix::zeros(0, 0) }).collect()).collect();
    let cat = CStarCategory::new(vec!["A".into(), "B".into()], hd, comp, inv, vec![vec![c(1.0, 0.0)]; 2]).unwrap();
    assert!(cat.verify_cstar(1e-12).passed());
    assert!(cat.is_commutative());
    assert!(!cat.is_full(1e-9).unwrap());
    for seed in 0..5 {
        assert!(generate::<f64>(seed, 3, 2).unwrap().is_full(1e-9).unwrap());
    }
}

#[test]
fn zeroed_arrow_map_breaks_functor() {
    let cat = generate::<f64>(5, 2, 2).unwrap();
    let g = gelfand_transform(&cat, 1e-9).unwrap();
    assert!(g.functor.verify(&cat, &g.sections, 1e-9).unwrap().passed());
    let mut bad = StarFunctor::identity(&cat);
    bad.arrow_maps[0][1] = CMatrix::zeros(cat.hom_dim(0, 1), cat.hom_dim(0, 1));
    let rep = bad.verify(&cat, &cat, 1e-9).unwrap();
    assert!(!rep.get("functor_multiplicativity").unwrap().passed);
}

#[test]
fn two_point_spectrum_is_coordinate_evaluation() {
    let cat = diagonal_functions::<f64>(2);
    let sp = sigma(&cat, 1e-9).unwrap();
    // oracle: the basis matrices L(e_0), L(e_1) are already diagonal, so a
    // character is a row of simultaneous eigenvalues
    let basis = cat.basis(0, 0);
    let mut oracle: Vec<Vec<C>> = (0..2).map(|p| basis.iter().map(|e| cat.left_matrix(e, 0)[(p, p)]).collect()).collect();
    oracle.sort_by(|a, b| a[0].re.total_cmp(&b[0].re));
    let mut got = sp.characters[0].clone();
    got.sort_by(|a, b| a[0].re.total_cmp(&b[0].re));
    assert_eq!(got.len(), 2);
    for (g, o) in got.iter().zip(&oracle) {
        assert!(gap(g, o) < 1e-12);
    }
}

#[test]
fn gelfand_matrix_is_character_evaluation() {
    let cat = diagonal_functions::<f64>(2);
    let g = gelfand_transform(&cat, 1e-9).unwrap();
    let m = &g.functor.arrow_maps[0][0];
    let chars = &g.spectrum.characters[0];
    for (q, chi) in chars.iter().enumerate() {
        for (i, v) in chi.iter().enumerate() {
            assert!((m[(q, i)] - v).norm() < 1e-12);
        }
    }
    // rows are permuted coordinate evaluations, so reindexing by the
    // characters gives the identity
    let order: Vec<usize> = chars.iter().map(|chi| chi.iter().position(|z| z.norm() > 0.5).unwrap()).collect();
    for (q, &p) in order.iter().enumerate() {
        for i in 0..2 {
            let want = if i == p { 1.0 } else { 0.0 };
            assert!((m[(q, i)] - c(want, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn one_point_spectrum_recovers_structure_constants() {
    for seed in 0..5 {
        let cat = generate::<f64>(40 + seed, 2, 1).unwrap();
        let g = gelfand_transform(&cat, 1e-9).unwrap();
        assert_eq!(g.spectrum.spaceoid.n_points(), 1);
        let out = &g.sections;
        let f = |a: usize, b: usize| g.functor.arrow_maps[a][b][(0, 0)];
        // substitute the scalars of the transform into c_out F_ac = F_ab F_bc c_in
        for a in 0..2 {
            for b in 0..2 {
                for d in 0..2 {
                    let l = out.comp(a, b, d).get(0, 0, 0) * f(a, d);
                    let r = f(a, b) * f(b, d) * cat.comp(a, b, d).get(0, 0, 0);
                    assert!((l - r).norm() < 1e-10 * r.norm().max(1.0));
                }
            }
        }
    }
}

#[test]
fn sigma_has_n_characters_per_object() {
    for (seed, k, n) in [(1, 1, 4), (2, 2, 3), (3, 3, 5), (4, 4, 2)] {
        let sp = sigma(&generate::<f64>(seed, k, n).unwrap(), 1e-9).unwrap();
        assert_eq!(sp.characters.len(), k);
        assert!(sp.characters.iter().all(|x| x.len() == n));
        assert!(verify_spaceoid(&sp.spaceoid, 1e-9).passed());
        assert!(gamma(&sp.spaceoid).unwrap().verify_cstar(1e-9).passed());
    }
}

#[test]
fn phase_twist_solves_intertwining_equations() {
    let s = Spaceoid::<f64>::trivial(3, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = phase_automorphism(&mut rng, &s);
    // with every c = s = h = 1 the equations read F_ac = F_ab F_bc, F_ba = conj(F_ab)
    for f in &m.scalars {
        for a in 0..3 {
            for b in 0..3 {
                assert!((f[b][a] - f[a][b].conj()).norm() < 1e-12);
                for d in 0..3 {
                    assert!((f[a][d] - f[a][b] * f[b][d]).norm() < 1e-12);
                }
            }
        }
    }
    assert!(verify_morphism(&m, &s, &s, 1e-12).passed());
}

#[test]
fn morphism_composition_is_associative() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..5 {
        let s3 = generate_spaceoid::<f64>(seed, 3, 3).unwrap();
        let (s2, m23) = random_morphism_into(&mut rng, &s3, 3).unwrap();
        let (s1, m12) = random_morphism_into(&mut rng, &s2, 2).unwrap();
        let (s0, m01) = random_morphism_into(&mut rng, &s1, 4).unwrap();
        let left = compose_morphisms(&compose_morphisms(&m23, &m12).unwrap(), &m01).unwrap();
        let right = compose_morphisms(&m23, &compose_morphisms(&m12, &m01).unwrap()).unwrap();
        assert!(morphism_distance(&left, &right) < 1e-10);
        assert!(verify_morphism(&left, &s0, &s3, 1e-9).passed());
    }
}
