use std::collections::BTreeMap;

use cantor_fup::cantor::{build_cantor, hausdorff_dim, refine, Alphabet, CantorApprox, EnsembleKind, EnsembleSpec};
use cantor_fup::fup::{
    dft_submatrix_norm, fit_exponent, measure_fup_norm, norm_curve, schur_upper_bound, volume_exponent, Operator,
};
use cantor_fup::spectral::{direct_average, fourier_nu, point_average, INV_SQRT_TAU};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = EnsembleKind> {
    prop_oneof![Just(EnsembleKind::I), Just(EnsembleKind::II), Just(EnsembleKind::III)]
}

fn spec() -> impl Strategy<Value = EnsembleSpec> {
    (kind(), 3u32..8, any::<u64>()).prop_flat_map(|(k, m, seed)| {
        (1..m, 1u32..4).prop_map(move |(a, j)| EnsembleSpec::new(k, m, a, j, seed))
    })
}

#[test]
fn figure_three_by_refinement() {
    let a = |d: &[u32]| Alphabet::new(3, d.to_vec()).unwrap();
    let level1 = CantorApprox::from_level_alphabets(EnsembleKind::III, &[a(&[0, 1])]).unwrap();
    let fig3 = refine(&level1, &BTreeMap::from([(0, a(&[0, 2])), (1, a(&[1, 2]))])).unwrap();
    assert_eq!(fig3.numerators(), &[0, 2, 4, 5]);
    assert_eq!(fig3.denominator(), 9);
    assert_eq!(fig3.parent().unwrap().numerators(), level1.numerators());
}

#[test]
fn transform_at_zero_is_total_mass() {
    let approx = build_cantor(&EnsembleSpec::new(EnsembleKind::II, 6, 3, 3, 4)).unwrap();
    assert!((fourier_nu(&approx, 0.0).re - INV_SQRT_TAU).abs() < 1e-15);
    assert!(fourier_nu(&approx, 0.0).im.abs() < 1e-15);
}

#[test]
fn measure_slope_tracks_volume_for_middle_third() {
    let spec = EnsembleSpec::new(EnsembleKind::I, 3, 2, 1, 0);
    let hs: Vec<f64> = (2..=6).map(|j| 3f64.powi(-j)).collect();
    let discrete = fit_exponent(&norm_curve(&spec, &hs, Operator::Discrete).unwrap(), 0.01).unwrap();
    let delta = hausdorff_dim(3, 2);
    assert!((discrete.delta - delta).abs() < 1e-12);
    assert!(discrete.beta_hat >= volume_exponent(delta) - 0.05, "{discrete:?}");
    assert!(discrete.beta_hat <= 0.5 + 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn envelope_and_symmetry(spec in spec(), xi in -1e4f64..1e4) {
        let approx = build_cantor(&spec).unwrap();
        let v = fourier_nu(&approx, xi);
        let bound = INV_SQRT_TAU * 1f64.min(2.0 * approx.denominator() as f64 / xi.abs());
        prop_assert!(v.norm() <= bound + 1e-12);
        prop_assert!((fourier_nu(&approx, -xi) - v.conj()).norm() <= 1e-12);
    }

    #[test]
    fn product_form_matches_direct_sum(spec in spec(), xi in -50.0f64..50.0) {
        let approx = build_cantor(&spec).unwrap();
        prop_assert!((point_average(&approx, xi) - direct_average(&approx, xi)).norm() <= 1e-10);
    }

    #[test]
    fn prefixes_are_ancestors(spec in spec()) {
        let approx = build_cantor(&spec).unwrap();
        let shallow = build_cantor(&spec.with_depth(1)).unwrap();
        let prefix = approx.prefix(1).unwrap();
        prop_assert_eq!(prefix.numerators(), shallow.numerators());
    }

    #[test]
    fn discrete_norm_between_column_norm_and_one(spec in spec()) {
        let approx = build_cantor(&spec).unwrap();
        let n = dft_submatrix_norm(&approx).unwrap();
        let column = (approx.len() as f64 / approx.denominator() as f64).sqrt();
        prop_assert!(n <= 1.0 + 1e-10);
        prop_assert!(n >= column - 1e-10);
    }

    #[test]
    fn schur_bound_dominates(spec in spec(), scale in -1.0f64..1.5) {
        let approx = build_cantor(&spec).unwrap();
        let h = approx.cell() * 10f64.powf(scale);
        let n = measure_fup_norm(&approx, h).unwrap();
        prop_assert!(n * n <= schur_upper_bound(&approx, h, 16).unwrap() + 1e-8);
    }
}
