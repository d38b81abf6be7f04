mod common;

use circsense::analysis::{
    coherence, coherence_bound, coherence_by_diagonals, coherence_dense, exhaustive_ric, failure_probability,
    fuchs_tropp_certificate, gershgorin_ric, hoeffding_tail_check, pair_tail_check, pseudo_inverse_norm_chain,
    sample_complexity_budget, submatrix_extremes, C_TILDE,
};
use circsense::signals::{omega_preset, rademacher_generator, random_sparse_with, MagnitudeLaw, OmegaPreset};
use circsense::{GeneratorKind, IndexSet, SeedSpec, StructuredOperator};
use common::{brute_force_coherence, brute_force_ric, dense_from_definition, to_dmatrix};
use nalgebra::DMatrix;

fn random_op(kind: GeneratorKind, big_n: usize, n: usize, preset: OmegaPreset, seed: u64) -> StructuredOperator {
    let g = rademacher_generator(&mut SeedSpec::new(seed, 0).rng(), kind, big_n).unwrap();
    let omega = omega_preset(preset, big_n, n, SeedSpec::new(seed, 1)).unwrap();
    StructuredOperator::new(g, omega, true).unwrap()
}

fn oracle_dense(op: &StructuredOperator) -> Vec<Vec<f64>> {
    dense_from_definition(op.kind(), op.cols(), op.generator().values(), op.omega().as_slice(), true)
}

#[test]
fn diagonal_coherence_matches_dense_gram() {
    for kind in [GeneratorKind::Circulant, GeneratorKind::Toeplitz] {
        for (big_n, n, preset) in [
            (16, 16, OmegaPreset::FirstN),
            (33, 11, OmegaPreset::UniformRandom),
            (64, 8, OmegaPreset::Downsample),
            (100, 100, OmegaPreset::FirstN),
        ] {
            let op = random_op(kind, big_n, n, preset, big_n as u64);
            let want = brute_force_coherence(&oracle_dense(&op));
            let (mu_fft, (i, l)) = coherence_by_diagonals(&op);
            let (mu_dense, _) = coherence_dense(&op).unwrap();
            assert!((mu_fft - want).abs() < 1e-12, "{kind} N={big_n} n={n}");
            assert!((mu_dense - want).abs() < 1e-12);
            let ip: f64 = op.column(i).iter().zip(op.column(l)).map(|(a, b)| a * b).sum();
            assert!((ip.abs() - want).abs() < 1e-12);
            assert!(i != l);
        }
    }
}

#[test]
fn coherence_lies_in_unit_interval_and_reports_bound() {
    let op = random_op(GeneratorKind::Toeplitz, 128, 40, OmegaPreset::UniformRandom, 2);
    let c = coherence(&op, 0.05).unwrap();
    assert!((0.0..=1.0).contains(&c.mu));
    assert!((c.bound_value - coherence_bound(128, 40, 0.05)).abs() < 1e-15);
    assert!((coherence_bound(128, 40, 0.05) - 4.0 * (2.0 * 128.0 * 128.0 / 0.05f64).ln() / 40f64.sqrt()).abs() < 1e-12);
}

#[test]
fn exhaustive_ric_matches_brute_force_and_gershgorin() {
    for seed in 0..5 {
        let op = random_op(GeneratorKind::Circulant, 10, 6, OmegaPreset::UniformRandom, seed);
        let a = oracle_dense(&op);
        let mu = brute_force_coherence(&a);
        for s in 1..=3 {
            let d = exhaustive_ric(&op, s).unwrap();
            assert!((d - brute_force_ric(&a, s)).abs() < 1e-10);
            assert!(d <= gershgorin_ric(mu, s).unwrap() + 1e-12);
        }
    }
    let big = random_op(GeneratorKind::Circulant, 200, 20, OmegaPreset::FirstN, 0);
    assert!(exhaustive_ric(&big, 5).is_err());
}

#[test]
fn submatrix_extremes_match_dense_eigenvalues() {
    let op = random_op(GeneratorKind::Toeplitz, 50, 20, OmegaPreset::UniformRandom, 8);
    let sup = IndexSet::new(vec![2, 9, 17, 30, 44], 50).unwrap();
    let e = submatrix_extremes(&op, &sup).unwrap();
    let a = to_dmatrix(&oracle_dense(&op)).select_columns(sup.as_slice());
    let ev = (a.transpose() * &a).symmetric_eigen().eigenvalues;
    let (lo, hi) = (ev.min(), ev.max());
    assert!((e.lambda_min - lo).abs() < 1e-12 && (e.lambda_max - hi).abs() < 1e-12);
    assert!((e.delta - (1.0 - lo).max(hi - 1.0)).abs() < 1e-12);
}

#[test]
fn certificate_matches_dense_pseudo_inverse() {
    for seed in 0..6 {
        let op = random_op(GeneratorKind::Circulant, 40, 24, OmegaPreset::UniformRandom, seed);
        let x = random_sparse_with(&mut SeedSpec::new(seed, 7).rng(), 40, 4, MagnitudeLaw::Unit).unwrap();
        let sup = x.support();
        let rep = fuchs_tropp_certificate(&op, &sup, x.signs(), true).unwrap();
        // oracle: max over ρ ∉ Λ of |⟨A_Λ^† a_ρ, sgn⟩| with A_Λ^† from a dense SVD
        let a = to_dmatrix(&oracle_dense(&op));
        let al = a.select_columns(sup.as_slice());
        let pinv = al.clone().pseudo_inverse(1e-12).unwrap();
        let sgn = nalgebra::DVector::from_column_slice(x.signs());
        let mut want = 0.0f64;
        for rho in sup.complement() {
            let v = &pinv * a.column(rho);
            want = want.max(v.dot(&sgn).abs());
        }
        assert!((rep.max_abs_correlation - want).abs() < 1e-10, "seed {seed}");
        assert_eq!(rep.per_rho.as_ref().unwrap().len(), 36);
        assert_eq!(rep.satisfied, want < 1.0);
    }
}

#[test]
fn singular_support_gram_is_an_error() {
    // n = 1 row: any two columns are parallel
    let op = random_op(GeneratorKind::Circulant, 8, 1, OmegaPreset::FirstN, 0);
    let sup = IndexSet::new(vec![0, 1], 8).unwrap();
    assert!(fuchs_tropp_certificate(&op, &sup, &[1.0, 1.0], false).is_err());
}

#[test]
fn pseudo_inverse_chain_is_ordered() {
    for seed in 0..5 {
        let op = random_op(GeneratorKind::Toeplitz, 64, 32, OmegaPreset::UniformRandom, seed);
        let sup = IndexSet::new(vec![3, 20, 41], 64).unwrap();
        let c = pseudo_inverse_norm_chain(&op, &sup, 50).unwrap();
        let a = to_dmatrix(&oracle_dense(&op));
        let al = a.select_columns(sup.as_slice());
        let exact = (al.clone().pseudo_inverse(1e-12).unwrap() * a.column(50)).norm();
        assert!((c.exact_norm - exact).abs() < 1e-10);
        assert!(c.exact_norm <= c.bound + 1e-12);
        assert!(c.correlation_norm <= 3f64.sqrt() * c.mu + 1e-12);
    }
    let op = random_op(GeneratorKind::Toeplitz, 16, 8, OmegaPreset::FirstN, 0);
    let sup = IndexSet::new(vec![3], 16).unwrap();
    assert!(pseudo_inverse_norm_chain(&op, &sup, 3).is_err());
}

#[test]
fn budget_formulas() {
    let b = sample_complexity_budget(1024, 8, 0.1).unwrap();
    let l = |v: f64| v.ln();
    assert!((b.n_cond2 - 4.0 * C_TILDE * 8.0 * l(80.0).powi(2)).abs() < 1e-9 * b.n_cond2);
    let n2 = 2.0 * 1024.0f64 * 1024.0;
    assert!((b.n_cond1 - 8.0 * 8.0 * l(n2 / 0.1).powi(2) * l(2048.0 / 0.1)).abs() < 1e-9 * b.n_cond1);
    assert_eq!(b.n_required, b.n_cond1.max(b.n_cond2));
    let p_small = failure_probability(1024, 8, 0.1, 1000);
    let p_large = failure_probability(1024, 8, 0.1, 1_000_000);
    assert!(p_large < p_small);
    assert!(sample_complexity_budget(1024, 0, 0.1).is_err());
    assert!(sample_complexity_budget(1024, 8, 1.5).is_err());
}

#[test]
fn tail_checks_hold_on_small_runs() {
    let omega = omega_preset(OmegaPreset::UniformRandom, 128, 32, SeedSpec::new(0, 0)).unwrap();
    for p in pair_tail_check(GeneratorKind::Circulant, &omega, (0, 5), &[2.0, 3.0], 20_000, 3).unwrap() {
        assert!(p.holds(), "{p:?}");
    }
    for p in hoeffding_tail_check(&[0.5, 0.5, 0.5, 0.5], &[0.5, 1.0, 2.0], 20_000, 1).unwrap() {
        assert!(p.holds(), "{p:?}");
    }
    assert!(pair_tail_check(GeneratorKind::Circulant, &omega, (3, 3), &[2.0], 10, 0).is_err());
}

#[test]
fn dense_helper_agrees_with_library_materialization() {
    let op = random_op(GeneratorKind::Toeplitz, 12, 5, OmegaPreset::FirstN, 4);
    let d = op.to_dense().unwrap();
    let o: DMatrix<f64> = to_dmatrix(&oracle_dense(&op));
    assert!((d - o).abs().max() < 1e-15);
}
