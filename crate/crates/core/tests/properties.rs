use std::f64::consts::FRAC_PI_8;

use proptest::prelude::*;

use svbound::filtering::{apply_filter, rotated_state, FilterTriple};
use svbound::linalg::{frobenius_3x9, pauli_basis, svd_3x9, ComplexMatrix, Mat3x9, C64};
use svbound::oracle::Seesaw;
use svbound::random::{self, rng};
use svbound::svetlichny::{bilinear_value, MeasurementSettings};
use svbound::{
    build_chi_state, build_ghz_noise_state, correlation_matrix, filtered_bound, svetlichny_value, DensityMatrix,
    FilterParams,
};

fn random_settings(seed: u64) -> MeasurementSettings {
    let mut r = rng(seed);
    let mut v = || random::unit_vector(&mut r);
    MeasurementSettings { a: v(), a_p: v(), b: v(), b_p: v(), c: v(), c_p: v() }
}

fn random_filter(seed: u64) -> FilterTriple {
    let mut r = rng(seed);
    FilterTriple::new(random::psd_filter(&mut r), random::psd_filter(&mut r), random::psd_filter(&mut r)).unwrap()
}

fn state(seed: u64) -> DensityMatrix {
    random::state(&mut rng(seed))
}

fn max_diff(a: &Mat3x9, b: &Mat3x9) -> f64 {
    (0..3).flat_map(|r| (0..9).map(move |c| (r, c))).map(|(r, c)| (a[r][c] - b[r][c]).abs()).fold(0.0, f64::max)
}

/// Rotation `O[l][k] = tr(U†σ_l U σ_k)/2` induced by a 2×2 unitary.
fn rotation_of(u: &ComplexMatrix) -> [[f64; 3]; 3] {
    let s = pauli_basis();
    std::array::from_fn(|l| {
        std::array::from_fn(|k| {
            let conj = &(&u.adjoint() * &s[l + 1]) * u;
            conj.trace_product(&s[k + 1]).re / 2.0
        })
    })
}

/// `O_B · X · (O_A ⊗ O_C)ᵀ`.
fn rotate_matrix(x: &Mat3x9, oa: &[[f64; 3]; 3], ob: &[[f64; 3]; 3], oc: &[[f64; 3]; 3]) -> Mat3x9 {
    let mut out = [[0.0; 9]; 3];
    for m in 0..3 {
        for l in 0..3 {
            for n in 0..3 {
                let mut acc = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        for p in 0..3 {
                            acc += ob[m][j] * oa[l][k] * oc[n][p] * x[j][3 * k + p];
                        }
                    }
                }
                out[m][3 * l + n] = acc;
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn svd_reconstructs_and_matches_gram_spectrum(seed in any::<u64>()) {
        let m = correlation_matrix(&state(seed)).unwrap().m;
        let svd = svd_3x9(&m);
        prop_assert!(max_diff(&svd.reconstruct(), &m) <= 1e-12);
        let gram = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((0..9).map(|k| m[i][k] * m[j][k]).sum(), 0.0));
        let mut ev = gram.hermitian_eigenvalues();
        ev.sort_by(|a, b| b.total_cmp(a));
        for k in 0..3 {
            prop_assert!((svd.singular_values[k].powi(2) - ev[k]).abs() <= 1e-12);
        }
        let s = svd.singular_values;
        prop_assert!(s[0] >= s[1] && s[1] >= s[2] && s[2] >= 0.0);
        prop_assert!((s.iter().map(|v| v * v).sum::<f64>().sqrt() - frobenius_3x9(&m)).abs() <= 1e-12);
    }

    #[test]
    fn local_unitaries_rotate_the_correlation_matrix(seed in any::<u64>()) {
        let rho = state(seed);
        let mut r = rng(seed ^ 0x5a5a);
        let us: Vec<ComplexMatrix> = (0..3).map(|_| random::unitary_2x2(&mut r)).collect();
        let op = svbound::linalg::kron3(&us[0], &us[1], &us[2]);
        let rotated = rho.conjugate_unitary(&op.adjoint()).unwrap();
        let m = correlation_matrix(&rho).unwrap();
        let mr = correlation_matrix(&rotated).unwrap();
        // tr[U†ρU σ] = tr[ρ UσU†], so the rotation is that of U†.
        let o: Vec<_> = us.iter().map(|u| rotation_of(&u.adjoint())).collect();
        prop_assert!(max_diff(&mr.m, &rotate_matrix(&m.m, &o[0], &o[1], &o[2])) <= 1e-12);
        for k in 0..3 {
            prop_assert!((mr.singular_values()[k] - m.singular_values()[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn matrix_and_operator_routes_agree(seed in any::<u64>(), sseed in any::<u64>()) {
        let rho = state(seed);
        let s = random_settings(sseed);
        let corr = correlation_matrix(&rho).unwrap();
        prop_assert!((bilinear_value(&corr.m, &s) - svetlichny_value(&rho, &s)).abs() <= 1e-12);
    }

    #[test]
    fn every_setting_respects_the_bound(seed in any::<u64>(), sseed in any::<u64>()) {
        let rho = state(seed);
        let corr = correlation_matrix(&rho).unwrap();
        let v = svetlichny_value(&rho, &random_settings(sseed));
        prop_assert!(v.abs() <= 4.0 * corr.lambda1() + 1e-9);
    }

    #[test]
    fn filtered_correlations_match_x_over_n(seed in any::<u64>(), fseed in any::<u64>()) {
        let rho = state(seed);
        let f = random_filter(fseed);
        let fa = filtered_bound(&rho, &f).unwrap();
        for k in 0..3 {
            prop_assert!((fa.m_prime.singular_values()[k] - fa.x_svd.singular_values[k]).abs() <= 1e-9);
        }
        // Entry by entry: N·M′ = O_B X (O_A⊗O_C)ᵀ with O from the filters'
        // eigenbases.
        let o: Vec<_> = f.unitaries().iter().map(rotation_of).collect();
        let mapped = rotate_matrix(&fa.x_matrix, &o[0], &o[1], &o[2]);
        let scaled = fa.m_prime.m.map(|row| row.map(|v| v * fa.n_factor));
        let scale = frobenius_3x9(&fa.x_matrix).max(1.0);
        prop_assert!(max_diff(&mapped, &scaled) <= 1e-9 * scale);
    }

    #[test]
    fn canonical_normalization_matches_rotated_state(seed in any::<u64>(), fseed in any::<u64>()) {
        let rho = state(seed);
        let f = random_filter(fseed);
        let varrho = rotated_state(&rho, &f);
        prop_assert!((varrho.trace().re - 1.0).abs() <= 1e-12);
        let (out, n) = apply_filter(&rho, &f).unwrap();
        prop_assert!(n > 0.0);
        prop_assert!((out.matrix().trace().re - 1.0).abs() <= 1e-12);
        prop_assert!(out.matrix().hermitian_eigenvalues()[0] >= -1e-10);
    }

    #[test]
    fn scaling_one_filter_changes_nothing(seed in any::<u64>(), fseed in any::<u64>(), party in 0usize..3, factor in 0.01f64..100.0) {
        let rho = state(seed);
        let f = random_filter(fseed);
        let base = filtered_bound(&rho, &f).unwrap();
        let scaled = filtered_bound(&rho, &f.scaled(party, factor).unwrap()).unwrap();
        prop_assert!((base.lambda1_prime - scaled.lambda1_prime).abs() <= 1e-9);
        prop_assert!(base.rho_prime.matrix().max_abs_diff(scaled.rho_prime.matrix()) <= 1e-9);
    }

    #[test]
    fn identity_filter_reduces_to_unfiltered(seed in any::<u64>()) {
        let rho = state(seed);
        let fa = filtered_bound(&rho, &FilterTriple::identity()).unwrap();
        let corr = correlation_matrix(&rho).unwrap();
        prop_assert!((fa.n_factor - 1.0).abs() <= 1e-12);
        prop_assert!((fa.bound - 4.0 * corr.lambda1()).abs() <= 1e-12);
        prop_assert!(max_diff(&fa.x_matrix, &corr.m) <= 1e-12);
    }

    #[test]
    fn seesaw_block_updates_never_decrease(seed in any::<u64>(), sseed in any::<u64>()) {
        let corr = correlation_matrix(&state(seed)).unwrap();
        let mut ss = Seesaw::new(&corr.m, random_settings(sseed));
        let mut prev = ss.value();
        for _ in 0..10 {
            for v in ss.sweep() {
                prop_assert!(v >= prev - 1e-12, "{} after {}", v, prev);
                prev = v;
            }
        }
        prop_assert!(prev <= 4.0 * corr.lambda1() + 1e-9);
    }

    #[test]
    fn families_are_convex_in_p(p in 0.0f64..=1.0) {
        for (at_p, at0, at1) in [
            (build_chi_state(p, FRAC_PI_8), build_chi_state(0.0, FRAC_PI_8), build_chi_state(1.0, FRAC_PI_8)),
            (build_ghz_noise_state(p), build_ghz_noise_state(0.0), build_ghz_noise_state(1.0)),
        ] {
            let mix = &at1.unwrap().matrix().scale_real(p) + &at0.unwrap().matrix().scale_real(1.0 - p);
            prop_assert!(at_p.unwrap().matrix().max_abs_diff(&mix) <= 1e-15);
        }
    }

    #[test]
    fn state_files_round_trip(seed in any::<u64>()) {
        let rho = state(seed);
        let back = DensityMatrix::from_json(&rho.to_json()).unwrap();
        prop_assert_eq!(back, rho);
    }

    #[test]
    fn diagonal_filters_keep_the_families_physical(p in 0.0f64..=1.0, lx in -2.0f64..2.0, ly in -2.0f64..2.0, lz in -2.0f64..2.0) {
        let params = FilterParams::new(10f64.powf(lx), 10f64.powf(ly), 10f64.powf(lz)).unwrap();
        for rho in [build_chi_state(p, FRAC_PI_8).unwrap(), build_ghz_noise_state(p).unwrap()] {
            let fa = filtered_bound(&rho, &FilterTriple::diagonal(params)).unwrap();
            prop_assert!(fa.bound <= 4.0 * std::f64::consts::SQRT_2 + 1e-9);
            prop_assert!(fa.rho_prime.matrix().hermitian_eigenvalues()[0] >= -1e-10);
        }
    }
}
