mod common;

use circsense::operators::{shift_apply, verify_shift_identity, ShiftOperator};
use circsense::signals::{omega_preset, rademacher_generator, rademacher_vec, OmegaPreset};
use circsense::{GeneratorKind, GeneratorVector, IndexSet, SeedSpec, StructuredOperator};
use common::{dense_from_definition, matvec, matvec_t, max_abs, max_abs_diff};
use proptest::prelude::*;

const KINDS: [GeneratorKind; 2] = [GeneratorKind::Circulant, GeneratorKind::Toeplitz];

fn random_op(kind: GeneratorKind, big_n: usize, n: usize, seed: u64) -> StructuredOperator {
    let mut rng = SeedSpec::new(seed, 1).rng();
    let g = rademacher_generator(&mut rng, kind, big_n).unwrap();
    let omega = omega_preset(OmegaPreset::UniformRandom, big_n, n, SeedSpec::new(seed, 2)).unwrap();
    StructuredOperator::new(g, omega, true).unwrap()
}

#[test]
fn delta_input_selects_a_column() {
    let g = GeneratorVector::circulant(vec![1.0, 1.0, -1.0, 1.0]).unwrap();
    let op = StructuredOperator::new(g, IndexSet::new(vec![0, 2], 4).unwrap(), false).unwrap();
    let y = op.apply(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(max_abs_diff(&y, &[1.0, -1.0]) < 1e-14);
}

#[test]
fn fft_apply_matches_definition_for_odd_and_even_sizes() {
    for &big_n in &[1usize, 2, 3, 7, 16, 31, 100] {
        for kind in KINDS {
            for n in [1, big_n.div_ceil(2), big_n] {
                let op = random_op(kind, big_n, n, big_n as u64 * 7 + n as u64);
                let a = dense_from_definition(
                    kind,
                    big_n,
                    op.generator().values(),
                    op.omega().as_slice(),
                    true,
                );
                let x = rademacher_vec(&mut SeedSpec::new(5, big_n as u64).rng(), big_n);
                let y = op.apply(&x).unwrap();
                assert!(max_abs_diff(&y, &matvec(&a, &x)) < 1e-12, "{kind} N={big_n} n={n}");
                let z = rademacher_vec(&mut SeedSpec::new(6, big_n as u64).rng(), n);
                let w = op.adjoint_apply(&z).unwrap();
                assert!(max_abs_diff(&w, &matvec_t(&a, &z)) < 1e-12);
            }
        }
    }
}

#[test]
fn to_dense_and_columns_agree_with_definition() {
    for kind in KINDS {
        let op = random_op(kind, 32, 11, 3);
        let a = dense_from_definition(kind, 32, op.generator().values(), op.omega().as_slice(), true);
        let d = op.to_dense().unwrap();
        for j in 0..32 {
            let mut e = vec![0.0; 32];
            e[j] = 1.0;
            let col = op.apply(&e).unwrap();
            for i in 0..11 {
                assert!((d[(i, j)] - a[i][j]).abs() < 1e-15);
                assert!((col[i] - a[i][j]).abs() < 1e-12);
                assert_eq!(op.entry(i, j), d[(i, j)]);
            }
            assert_eq!(op.column(j), (0..11).map(|i| d[(i, j)]).collect::<Vec<_>>());
        }
    }
}

#[test]
fn normalized_rademacher_columns_have_unit_norm() {
    for kind in KINDS {
        let op = random_op(kind, 64, 20, 11);
        for j in 0..64 {
            let c = op.column(j);
            let nrm: f64 = c.iter().map(|v| v * v).sum();
            assert!((nrm - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn single_row_adjoint_is_that_row() {
    for kind in KINDS {
        let g = rademacher_generator(&mut SeedSpec::new(1, 1).rng(), kind, 9).unwrap();
        let op = StructuredOperator::new(g.clone(), IndexSet::new(vec![4], 9).unwrap(), false).unwrap();
        let row = op.adjoint_apply(&[1.0]).unwrap();
        let a = dense_from_definition(kind, 9, g.values(), &[4], false);
        assert!(max_abs_diff(&row, &a[0]) < 1e-13);
    }
}

#[test]
fn dense_cap_is_enforced() {
    let op = random_op(GeneratorKind::Circulant, 64, 8, 0);
    assert!(op.to_dense_with_cap(32).is_err());
    assert!(op.to_dense_with_cap(64).is_ok());
}

#[test]
fn shift_operators_match_index_definition() {
    let x: Vec<f64> = (0..7).map(|v| v as f64 + 1.0).collect();
    for j in -6isize..=6 {
        let t = ShiftOperator::new(GeneratorKind::Toeplitz, j, 7).unwrap();
        let y = shift_apply(&t, &x).unwrap();
        for l in 0..7isize {
            let src = l - j;
            let want = if (0..7).contains(&src) { x[src as usize] } else { 0.0 };
            assert_eq!(y[l as usize], want);
        }
    }
    for j in 0..7isize {
        let s = ShiftOperator::new(GeneratorKind::Circulant, j, 7).unwrap();
        let y = shift_apply(&s, &x).unwrap();
        for l in 0..7isize {
            assert_eq!(y[l as usize], x[(l - j).rem_euclid(7) as usize]);
        }
    }
}

#[test]
fn shift_identity_small_cases() {
    for kind in KINDS {
        for big_n in 1..=12 {
            let omega = omega_preset(OmegaPreset::UniformRandom, big_n, big_n.div_ceil(2), SeedSpec::new(big_n as u64, 0))
                .unwrap();
            assert_eq!(verify_shift_identity(&omega, kind).unwrap(), 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_identity_holds(seed in any::<u64>(), big_n in 1usize..80, frac in 0.05f64..1.0, toeplitz in any::<bool>()) {
        let kind = if toeplitz { GeneratorKind::Toeplitz } else { GeneratorKind::Circulant };
        let n = ((big_n as f64 * frac).ceil() as usize).clamp(1, big_n);
        let op = random_op(kind, big_n, n, seed);
        let mut rng = SeedSpec::new(seed, 9).rng();
        let x = rademacher_vec(&mut rng, big_n);
        let y = rademacher_vec(&mut rng, n);
        let lhs: f64 = op.apply(&x).unwrap().iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(op.adjoint_apply(&y).unwrap()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn apply_is_linear(seed in any::<u64>(), big_n in 2usize..60, alpha in -3.0f64..3.0) {
        let op = random_op(GeneratorKind::Toeplitz, big_n, big_n / 2 + 1, seed);
        let mut rng = SeedSpec::new(seed, 4).rng();
        let x = rademacher_vec(&mut rng, big_n);
        let z = rademacher_vec(&mut rng, big_n);
        let comb: Vec<f64> = x.iter().zip(&z).map(|(a, b)| alpha * a + b).collect();
        let lhs = op.apply(&comb).unwrap();
        let ax = op.apply(&x).unwrap();
        let az = op.apply(&z).unwrap();
        let rhs: Vec<f64> = ax.iter().zip(&az).map(|(a, b)| alpha * a + b).collect();
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-10 * (1.0 + max_abs(&rhs)));
    }
}
