use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sqsim::calib::{eta_el_from_snr_db, fit_gain, gain_model, total_efficiency, EfficiencyBudget, GainBranch, GainSample};
use sqsim::cluster::{nullifier_report, AdjacencyMatrix, PRESETS};
use sqsim::entanglement::{enumerate_bipartitions, extract_supermodes, ppt_value, Bipartition, TOL_PPT};
use sqsim::gaussian::{apply_loss, change_basis, homodyne_form, BasisChange, CovarianceMatrix};
use sqsim::linalg::{to_complex, CMatrix, RMatrix};
use sqsim::modes::{
    apply_clipping, frexel_basis, hermite_gauss_basis, rank_analysis, ClippingWindow, FrequencyGrid, ModeBasis,
    SpectralMode,
};
use sqsim::pipeline::ExperimentConfig;
use sqsim::spdc::SqueezingSpectrum;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn random_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    m.qr().q()
}

fn random_orthogonal(n: usize, seed: u64) -> RMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q()
}

/// Squeezed vacua mixed by a random unitary.
fn mixed_state(r: &[f64], seed: u64) -> CovarianceMatrix {
    let u = random_unitary(r.len(), seed);
    change_basis(&CovarianceMatrix::squeezed_vacuum_r(r), &BasisChange::isometry(u).unwrap()).unwrap()
}

fn hg_basis(n: usize) -> ModeBasis {
    let g = FrequencyGrid::centered(1560.0, 60.0, 0.5).unwrap();
    hermite_gauss_basis(&g, 1560.0, 15.0, n).unwrap()
}

fn r_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.5f64, 2..=max_len)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn loss_keeps_states_physical(r in r_vec(6), seed in any::<u64>(), eta_seed in any::<u64>()) {
        let cm = mixed_state(&r, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(eta_seed);
        let eta: Vec<f64> = (0..r.len()).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let lossy = apply_loss(&cm, &eta).unwrap();
        prop_assert!(lossy.physicality_margin().unwrap() >= -1e-9);
    }

    #[test]
    fn unitary_basis_change_keeps_symplectic_spectrum(r in r_vec(5), eta in 0.1..1.0f64, seed in any::<u64>()) {
        let n = r.len();
        let thermal = apply_loss(&CovarianceMatrix::squeezed_vacuum_r(&r), &vec![eta; n]).unwrap();
        let before = thermal.symplectic_eigenvalues().unwrap();
        let bc = BasisChange::isometry(random_unitary(n, seed)).unwrap();
        let after = change_basis(&thermal, &bc).unwrap().symplectic_eigenvalues().unwrap();
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn global_lo_phase_is_a_phase_offset(r in r_vec(4), seed in any::<u64>(), theta in -3.0..3.0f64, phi in -3.0..3.0f64) {
        let basis = hg_basis(r.len());
        let cm = mixed_state(&r, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let coeffs: Vec<C64> = (0..r.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let refs: Vec<&SpectralMode> = basis.modes().iter().collect();
        let lo = SpectralMode::combination(&refs, &coeffs).unwrap();
        let a = homodyne_form(&cm, &basis, &lo).unwrap().variance(phi + theta);
        let b = homodyne_form(&cm, &basis, &lo.scaled(C64::from_polar(1.0, theta))).unwrap().variance(phi);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn supermode_lo_reads_pure_squeezing(r in r_vec(5), seed in any::<u64>()) {
        // state given in a rotated mode set; LO = original mode k
        let n = r.len();
        let sup = hg_basis(n);
        let u = random_unitary(n, seed);
        let refs: Vec<&SpectralMode> = sup.modes().iter().collect();
        let rotated: Vec<SpectralMode> = (0..n)
            .map(|i| SpectralMode::combination(&refs, &u.row(i).iter().copied().collect::<Vec<_>>()).unwrap())
            .collect();
        let rotated = ModeBasis::orthonormal("rotated", rotated).unwrap();
        let bc = BasisChange::between(&rotated, &sup).unwrap();
        let cm = change_basis(&CovarianceMatrix::squeezed_vacuum_r(&r), &bc).unwrap();
        for (k, rk) in r.iter().enumerate() {
            let v = homodyne_form(&cm, &rotated, sup.mode(k)).unwrap().min_variance();
            let expect = 0.5 * (-2.0 * rk).exp();
            prop_assert!((v - expect).abs() < 1e-10, "mode {k}: {v} vs {expect}");
        }
    }

    #[test]
    fn ppt_value_is_complement_symmetric(r in prop::collection::vec(0.0..1.2f64, 4), seed in any::<u64>(), eta in 0.3..1.0f64) {
        let cm = apply_loss(&mixed_state(&r, seed), &[eta; 4]).unwrap();
        for bp in enumerate_bipartitions(4).unwrap() {
            let a = bp.subset_a();
            let rest: Vec<usize> = (0..4).filter(|i| !a.contains(i)).collect();
            let p = ppt_value(&cm, &bp).unwrap();
            // evaluate the complement directly, not through the canonical mask
            let q = ppt_value(&cm, &Bipartition::from_subset(&rest, 4).unwrap()).unwrap();
            prop_assert!((p - q).abs() < 1e-12);
            let flipped = complement_value(&cm, &rest);
            prop_assert!((p - flipped).abs() < 1e-12, "{p} vs {flipped}");
        }
    }

    #[test]
    fn product_states_pass_ppt(r in prop::collection::vec(0.0..1.5f64, 4), eta_seed in any::<u64>(), phase_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(eta_seed);
        let eta: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..=1.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(phase_seed);
        let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |_, _| C64::from_polar(1.0, rng.gen_range(0.0..6.3))));
        let local = change_basis(&CovarianceMatrix::squeezed_vacuum_r(&r), &BasisChange::isometry(phases).unwrap()).unwrap();
        let cm = apply_loss(&local, &eta).unwrap();
        for bp in enumerate_bipartitions(4).unwrap() {
            prop_assert!(ppt_value(&cm, &bp).unwrap() >= -TOL_PPT);
        }
    }

    #[test]
    fn local_passive_changes_keep_ppt_sign(r in prop::collection::vec(0.1..1.2f64, 4), seed in any::<u64>(), eta in 0.3..1.0f64) {
        let cm = apply_loss(&mixed_state(&r, seed), &[eta; 4]).unwrap();
        let bp = Bipartition::from_subset(&[0, 1], 4).unwrap();
        let mut local = CMatrix::zeros(4, 4);
        local.view_mut((0, 0), (2, 2)).copy_from(&random_unitary(2, seed ^ 2));
        local.view_mut((2, 2), (2, 2)).copy_from(&random_unitary(2, seed ^ 3));
        let moved = change_basis(&cm, &BasisChange::isometry(local).unwrap()).unwrap();
        let (a, b) = (ppt_value(&cm, &bp).unwrap(), ppt_value(&moved, &bp).unwrap());
        prop_assume!(a.abs() > 1e-9);
        prop_assert_eq!(a > 0.0, b > 0.0, "{} vs {}", a, b);
    }

    #[test]
    fn supermode_blocks_reassemble(r in prop::collection::vec(0.0..1.2f64, 8), seed in any::<u64>()) {
        let g = FrequencyGrid::centered(1560.0, 40.0, 0.5).unwrap();
        let basis = frexel_basis(&g, (1532.0, 1588.0), 8).unwrap();
        let o = random_orthogonal(8, seed);
        let cm = change_basis(&CovarianceMatrix::squeezed_vacuum_r(&r), &BasisChange::isometry(to_complex(&o)).unwrap()).unwrap();
        let rep = extract_supermodes(&cm, &basis, 1e-6).unwrap();
        let (xx, pp) = rep.reassemble();
        prop_assert!((xx - cm.xx()).norm() < 1e-8);
        prop_assert!((pp - cm.pp()).norm() < 1e-8);
    }

    #[test]
    fn more_squeezing_lowers_every_nullifier(preset in 0..PRESETS.len(), r in prop::collection::vec(0.0..1.0f64, 8), dr in 0.01..0.5f64) {
        let v = AdjacencyMatrix::preset(PRESETS[preset]).unwrap();
        let n = v.n_nodes();
        let lo = SqueezingSpectrum::from_r(r.clone()).unwrap();
        let hi = SqueezingSpectrum::from_r(r.iter().map(|x| x + dr).collect()).unwrap();
        let a = nullifier_report(&v, &lo, None, &vec![1.0; n], None).unwrap();
        let b = nullifier_report(&v, &hi, None, &vec![1.0; n], None).unwrap();
        for (x, y) in a.variances.iter().zip(&b.variances) {
            prop_assert!(y < x);
        }
    }

    #[test]
    fn lower_efficiency_never_improves_nullifiers(preset in 0..PRESETS.len(), r in prop::collection::vec(0.0..1.0f64, 8), e1 in 0.05..1.0f64, e2 in 0.05..1.0f64) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let v = AdjacencyMatrix::preset(PRESETS[preset]).unwrap();
        let n = v.n_nodes();
        let s = SqueezingSpectrum::from_r(r).unwrap();
        let a = nullifier_report(&v, &s, None, &vec![lo; n], None).unwrap();
        let b = nullifier_report(&v, &s, None, &vec![hi; n], None).unwrap();
        for (x, y) in a.squeezing_db.iter().zip(&b.squeezing_db) {
            prop_assert!(x + 1e-12 >= *y);
        }
    }

    #[test]
    fn unequal_squeezing_spreads_nullifiers(preset in 0..PRESETS.len(), r in prop::collection::vec(0.05..1.0f64, 8)) {
        prop_assume!(r.iter().any(|&x| (x - r[0]).abs() > 1e-3));
        let v = AdjacencyMatrix::preset(PRESETS[preset]).unwrap();
        let n = v.n_nodes();
        prop_assume!(r[..n].iter().any(|&x| (x - r[0]).abs() > 1e-3));
        let rep = nullifier_report(&v, &SqueezingSpectrum::from_r(r).unwrap(), None, &vec![1.0; n], None).unwrap();
        prop_assert!(rep.stats.max - rep.stats.min > 0.0);
    }

    #[test]
    fn efficiency_is_monotone_in_each_factor(f in prop::collection::vec(0.01..1.0f64, 4), which in 0..4usize, bump in 0.0..1.0f64) {
        let make = |v: &[f64]| EfficiencyBudget { eta_pd: v[0], eta_opt: v[1], eta_mod: v[2], eta_el: v[3] };
        let mut g = f.clone();
        g[which] = f[which] + bump * (1.0 - f[which]);
        prop_assert!(total_efficiency(&make(&g)).unwrap() >= total_efficiency(&make(&f)).unwrap());
    }

    #[test]
    fn electronic_efficiency_increases_with_clearance(a in 0.0..60.0f64, d in 0.01..20.0f64) {
        prop_assert!(eta_el_from_snr_db(a + d) > eta_el_from_snr_db(a));
    }

    #[test]
    fn gain_fit_inverts_the_model(eta in 0.01..2.0f64, powers in prop::collection::btree_set(1u32..1000, 3..10), plus in any::<bool>()) {
        let branch = if plus { GainBranch::Plus } else { GainBranch::Minus };
        let samples: Vec<GainSample> = powers
            .iter()
            .map(|&p| {
                let power_w = p as f64 * 1e-3;
                GainSample { power_w, gain: gain_model(eta, power_w, branch) }
            })
            .collect();
        let fit = fit_gain(&samples, branch).unwrap();
        prop_assert!((fit.eta_psa - eta).abs() / eta < 1e-9);
    }

    #[test]
    fn clipping_is_idempotent(lo in 1500.0..1560.0f64, hi in 1561.0..1620.0f64, renorm in any::<bool>()) {
        let basis = hg_basis(6);
        let w = ClippingWindow::new(basis.grid(), lo, hi).unwrap();
        let once = apply_clipping(&basis, &w, renorm).unwrap();
        let twice = apply_clipping(&once, &w, renorm).unwrap();
        prop_assert_eq!(once.len(), twice.len());
        for (a, b) in once.modes().iter().zip(twice.modes()) {
            let d = a.amplitude().iter().zip(b.amplitude()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(d < 1e-12);
        }
    }

    #[test]
    fn orthonormal_basis_has_full_rank(n in 1..12usize, threshold in 0.0..=1.0f64) {
        let rep = rank_analysis(&hg_basis(n), threshold).unwrap();
        prop_assert_eq!(rep.rank, n);
    }

    #[test]
    fn config_survives_a_toml_round_trip(seed in 0..=i64::MAX as u64, eta in 0.05..1.0f64, g in 0.0..5.0f64, topo in prop::sample::subsequence(PRESETS.to_vec(), 1..=5)) {
        let overrides = vec![
            format!("seed={seed}"),
            format!("loss.eta={eta}"),
            format!("pump_scale.g={g}"),
            format!("cluster.topologies={}", toml::Value::from(topo.iter().map(|s| s.to_string()).collect::<Vec<_>>())),
        ];
        let cfg = ExperimentConfig::from_toml_with_overrides("", &overrides).unwrap();
        prop_assert_eq!(cfg.seed, seed);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}

/// PPT value computed by transposing the complement instead of `subset`'s
/// canonical side.
fn complement_value(cm: &CovarianceMatrix, flip: &[usize]) -> f64 {
    let n = cm.n_modes();
    let mut p = RMatrix::identity(2 * n, 2 * n);
    for &i in flip {
        p[(n + i, n + i)] = -1.0;
    }
    let m = &p * cm.matrix() * &p;
    let om = sqsim::gaussian::symplectic_form(n);
    let h = CMatrix::from_fn(2 * n, 2 * n, |r, c| C64::new(m[(r, c)], 0.5 * om[(r, c)]));
    sqsim::linalg::hermitian_eigenvalues(&h).unwrap()[0]
}
