use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use drivenchain::config::RunConfig;
use drivenchain::mft::{find_steady_state, linear_steady_state, mft_rhs, IntegratorConfig};
use drivenchain::model::{hz, DriveSpec, LatticeParams, MeanFieldState};
use drivenchain::observables::{chain_eigenmodes, conjugate_state, g2_with, map_u_sign, G2Estimator};
use drivenchain::telegraph::{
    bin_dwells, fit_switching_time, homodyne_from_iq, liouvillian_spectrum, rate_liouvillian, BinScheme,
    Dwell, FitMode, RatePair,
};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e11..1e11f64, -10.0..10.0f64, Just(0.0)]
}

prop_compose! {
    fn any_params()(
        n in 1usize..80,
        omega_r in finite(), omega_q in finite(), u in finite(), g in finite(), t in finite(),
        kappa in finite(), gamma in finite(),
        drive in 0usize..82, output in 0usize..82,
        sites in proptest::option::of(proptest::collection::vec(finite(), 0..6)),
    ) -> LatticeParams {
        LatticeParams {
            n_sites: n, omega_r, omega_q, u_kerr: u, g_coupling: g, t_hop: t, kappa,
            gamma_q: gamma, drive_site: drive, output_site: output, omega_q_sites: sites,
        }
    }
}

prop_compose! {
    /// Physical chains of 1-8 sites around the device values.
    fn chain()(
        n in 1usize..8,
        dq in -1.5e9..1.5e9f64,
        u in -300e6..300e6f64,
        g in 50e6..400e6f64,
        t in 50e6..250e6f64,
        kappa in 0.5e6..5e6f64,
        gamma in 0.0..2e6f64,
        drive_frac in 0.0..1.0f64,
    ) -> LatticeParams {
        let drive_site = 1 + ((n - 1) as f64 * drive_frac) as usize;
        LatticeParams {
            n_sites: n,
            omega_r: hz(7.5e9),
            omega_q: hz(7.5e9 + dq),
            u_kerr: hz(u),
            g_coupling: hz(g),
            t_hop: hz(t),
            kappa: hz(kappa),
            gamma_q: gamma,
            drive_site,
            output_site: n,
            omega_q_sites: None,
        }
    }
}

fn state(n: usize, seed: &[f64]) -> MeanFieldState {
    let z = |k: usize| C64::new(seed[k % seed.len()] * (k as f64 + 1.0).sin(), seed[(k + 1) % seed.len()]);
    MeanFieldState {
        alpha: (0..n).map(z).collect(),
        beta: (n..2 * n).map(|k| z(k) * 0.1).collect(),
    }
}

fn close(a: &MeanFieldState, b: &MeanFieldState, tol: f64) -> bool {
    let scale = a.alpha.iter().chain(&a.beta).map(|z| z.norm()).fold(1e-300, f64::max);
    a.alpha.iter().chain(&a.beta).zip(b.alpha.iter().chain(&b.beta)).all(|(x, y)| (x - y).norm() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn params_round_trip_bit_exact(p in any_params()) {
        let text = toml::to_string(&p).unwrap();
        let back: LatticeParams = toml::from_str(&text).unwrap();
        prop_assert_eq!(toml::to_string(&back).unwrap(), text);
        for (a, b) in [
            (p.omega_r, back.omega_r), (p.omega_q, back.omega_q), (p.u_kerr, back.u_kerr),
            (p.g_coupling, back.g_coupling), (p.t_hop, back.t_hop), (p.kappa, back.kappa),
            (p.gamma_q, back.gamma_q),
        ] {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back, p);
    }

    #[test]
    fn validate_is_total_and_idempotent(p in any_params()) {
        match p.clone().validate() {
            Ok(v) => {
                prop_assert_eq!(&v, &p);
                prop_assert_eq!(v.clone().validate().unwrap(), v);
            }
            Err(e) => {
                let again = p.clone().validate().unwrap_err();
                prop_assert_eq!(e.to_string(), again.to_string());
            }
        }
    }

    #[test]
    fn run_config_round_trip(p in chain(), seed in 0..=i64::MAX as u64, fixed in any::<bool>()) {
        let mut c = RunConfig::for_params(&p);
        c.sweep.seed = seed;
        c.sweep.fixed_step = fixed;
        c.sweep.freqs_hz = Some(vec![7.4e9, 7.45e9]);
        c.drive.epsilon = Some(1e8);
        let back = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(&back, &c);
        // Hz conversion is exact to rounding
        let q = back.lattice_params().unwrap();
        for (a, b) in [(p.omega_r, q.omega_r), (p.t_hop, q.t_hop), (p.kappa, q.kappa), (p.gamma_q, q.gamma_q)] {
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs());
        }
    }

    #[test]
    fn rhs_is_phase_equivariant(p in chain(), phi in -3.2..3.2f64, amp in 0.0..1e9f64,
                                seed in proptest::collection::vec(-50.0..50.0f64, 3)) {
        let w = hz(7.45e9);
        let rot = C64::from_polar(1.0, phi);
        let s = state(p.n_sites, &seed);
        let s_rot = MeanFieldState {
            alpha: s.alpha.iter().map(|z| z * rot).collect(),
            beta: s.beta.iter().map(|z| z * rot).collect(),
        };
        let a = mft_rhs(&s, &p, &DriveSpec::constant(w, amp), 0.0).unwrap();
        let b = mft_rhs(&s_rot, &p, &DriveSpec::constant(w, rot * amp), 0.0).unwrap();
        let a_rot = MeanFieldState {
            alpha: a.alpha.iter().map(|z| z * rot).collect(),
            beta: a.beta.iter().map(|z| z * rot).collect(),
        };
        prop_assert!(close(&a_rot, &b, 1e-12));
    }

    #[test]
    fn rhs_u_sign_duality(p in chain(), wp in 7.2e9..7.8e9f64, eps in -1e9..1e9f64, phase in -3.2..3.2f64,
                          seed in proptest::collection::vec(-50.0..50.0f64, 3)) {
        let d = DriveSpec::constant(hz(wp), C64::from_polar(eps, phase));
        let (mut q, dm) = map_u_sign(&p, &d);
        q.u_kerr = -p.u_kerr;
        let s = state(p.n_sites, &seed);
        let lhs = mft_rhs(&conjugate_state(&s), &q, &dm, 0.0).unwrap();
        let rhs = conjugate_state(&mft_rhs(&s, &p, &d, 0.0).unwrap());
        prop_assert!(close(&rhs, &lhs, 1e-12));
    }

    #[test]
    fn linear_response_scales(p in chain(), wp in 7.2e9..7.8e9f64, eps in 1e3..1e10f64, k in 1e-3..1e3f64) {
        let p = p.linear();
        let a = linear_steady_state(&p, &DriveSpec::constant(hz(wp), eps)).unwrap();
        let b = linear_steady_state(&p, &DriveSpec::constant(hz(wp), eps * k)).unwrap();
        let scaled = MeanFieldState {
            alpha: a.alpha.iter().map(|z| z * k).collect(),
            beta: a.beta.iter().map(|z| z * k).collect(),
        };
        prop_assert!(close(&scaled, &b, 1e-12));
    }

    #[test]
    fn eigenmodes_match_closed_form(n in 1usize..=72, t in 10e6..300e6f64) {
        let p = LatticeParams { t_hop: hz(t), ..LatticeParams::paper_default_with_sites(n) };
        let modes = chain_eigenmodes(&p);
        let mut want: Vec<f64> = (1..=n)
            .map(|mu| p.omega_r + 2.0 * p.t_hop * (mu as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in modes.frequencies.iter().zip(&want) {
            prop_assert!((a / b - 1.0).abs() <= 1e-10);
        }
        let w = &modes.weights;
        let gram = w.transpose() * w;
        prop_assert!((gram - DMatrix::<f64>::identity(n, n)).amax() < 1e-10);
    }

    #[test]
    fn g2_of_constant_magnitude_is_one(m in 1e-6..1e6f64, n in 10usize..500) {
        let v = vec![m; n];
        for e in [G2Estimator::TimeAveraged, G2Estimator::FourthMoment] {
            prop_assert!((g2_with(&v, e).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn g2_is_nonnegative(v in proptest::collection::vec(0.0..1e3f64, 10..200)) {
        for e in [G2Estimator::TimeAveraged, G2Estimator::FourthMoment] {
            if let Ok(g) = g2_with(&v, e) {
                prop_assert!(g >= 0.0 && g.is_finite());
            }
        }
    }

    #[test]
    fn homodyne_conventions(a in 1e-6..1e3f64, theta in -3.14159..3.14159f64) {
        let (amp, th) = homodyne_from_iq(a * theta.sin(), a * theta.cos());
        prop_assert!((amp / a - 1.0).abs() < 1e-12);
        prop_assert!((th - theta).abs() < 1e-9);
    }

    #[test]
    fn binning_keeps_counts(d in proptest::collection::vec(1e-6..1e-1f64, 1..400)) {
        let h = bin_dwells(&d, &BinScheme::default()).unwrap();
        prop_assert_eq!(h.total() as usize, d.len());
        prop_assert!(h.bin_edges.windows(2).all(|w| w[1] > w[0]));
        if d.len() >= 5 {
            prop_assert!(h.counts.iter().all(|&c| c >= 5));
        }
    }

    #[test]
    fn mle_scales_with_time_unit(d in proptest::collection::vec(1e-6..1e-1f64, 1..200), k in 1e-3..1e3f64,
                                 censored in proptest::collection::vec(any::<bool>(), 1..200)) {
        let mk = |s: f64| -> Vec<Dwell> {
            d.iter().enumerate().map(|(j, &x)| Dwell { duration: x * s, censored: j > 0 && censored[j % censored.len()] }).collect()
        };
        let a = fit_switching_time(&mk(1.0), FitMode::Mle, &BinScheme::default()).unwrap();
        let b = fit_switching_time(&mk(k), FitMode::Mle, &BinScheme::default()).unwrap();
        prop_assert!((b / (a * k) - 1.0).abs() < 1e-12);
    }
}

/// Generic Lindbladian in the column-stacked basis `vec(rho)`:
/// `-i (I (x) H - H^T (x) I) + sum_k [conj(L) (x) L - (I (x) L^dag L + (L^dag L)^T (x) I) / 2]`.
fn kronecker_lindbladian(h: &Matrix2<C64>, jumps: &[Matrix2<C64>]) -> Matrix4<C64> {
    let id = Matrix2::<C64>::identity();
    let i = C64::new(0.0, 1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i);
    for j in jumps {
        let jdj = j.adjoint() * j;
        l += j.conjugate().kronecker(j) - (id.kronecker(&jdj) + jdj.transpose().kronecker(&id)) * C64::from(0.5);
    }
    l.fixed_view::<4, 4>(0, 0).into()
}

/// Reorders `vec(rho) = (r11, r21, r12, r22)` into `(r11, r22, r12, r21)`.
fn to_population_first(m: &Matrix4<C64>) -> Matrix4<C64> {
    let perm = [0usize, 3, 2, 1];
    Matrix4::from_fn(|r, c| m[(perm[r], perm[c])])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn liouvillian_matches_lindblad_oracle(g12 in 0.0..1e4f64, g21 in 0.0..1e4f64, e in -1e6..1e6f64) {
        let z = C64::default();
        let c = |x: f64| C64::from(x);
        let h = Matrix2::new(z, z, z, c(e));
        let up = Matrix2::new(z, z, c(g12.sqrt()), z);
        let down = Matrix2::new(z, c(g21.sqrt()), z, z);
        let oracle = to_population_first(&kronecker_lindbladian(&h, &[up, down]));
        let l = rate_liouvillian(e, RatePair { gamma_12: g12, gamma_21: g21 });
        let scale = 1.0 + g12 + g21 + e.abs();
        prop_assert!((oracle - l).iter().all(|d| d.norm() <= 1e-13 * scale));
    }

    #[test]
    fn liouvillian_spectrum_closed_form(g12 in 0.0..1e4f64, g21 in 0.0..1e4f64, e in -1e6..1e6f64) {
        let r = RatePair { gamma_12: g12, gamma_21: g21 };
        let l = rate_liouvillian(e, r);
        let num = nalgebra::Schur::new(l).eigenvalues().expect("complex Schur form is triangular");
        let mut want = liouvillian_spectrum(e, r).to_vec();
        let scale = 1.0 + g12 + g21 + e.abs();
        for lam in num.iter() {
            let k = (0..want.len())
                .min_by(|&a, &b| (want[a] - lam).norm().total_cmp(&(want[b] - lam).norm()))
                .unwrap();
            prop_assert!((want[k] - lam).norm() <= 1e-12 * scale, "{lam} vs {:?}", want);
            want.remove(k);
        }
        // probability conservation
        for col in 0..2 {
            prop_assert_eq!(l[(0, col)] + l[(1, col)], C64::default());
        }
        if g12 + g21 > 0.0 {
            let s = nalgebra::Vector4::new(c(g21), c(g12), C64::default(), C64::default());
            prop_assert!((l * s).norm() <= 1e-12 * scale * scale);
        }
    }
}

fn c(x: f64) -> C64 {
    C64::from(x)
}

fn quick(p: &LatticeParams) -> IntegratorConfig {
    let mut cfg = IntegratorConfig::for_params(p);
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn steady_state_phase_equivariance(n in 1usize..4, wp in 7.3e9..7.7e9f64, phi in -3.1..3.1f64, eps in 1e5..1e7f64) {
        let p = LatticeParams::paper_default_with_sites(n);
        let cfg = quick(&p);
        let w = hz(wp);
        let rot = C64::from_polar(1.0, phi);
        let init = MeanFieldState::vacuum(n);
        let a = find_steady_state(&p, &DriveSpec::constant(w, eps), &init, &cfg).unwrap();
        let b = find_steady_state(&p, &DriveSpec::constant(w, rot * eps), &init, &cfg).unwrap();
        let a_rot = MeanFieldState {
            alpha: a.final_state.alpha.iter().map(|z| z * rot).collect(),
            beta: a.final_state.beta.iter().map(|z| z * rot).collect(),
        };
        prop_assert!(close(&a_rot, &b.final_state, 1e-6));
        prop_assert!((a.alpha_abs_mean / b.alpha_abs_mean - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_drive_decays(p in chain(), gamma in 2e5..2e6f64, seed in proptest::collection::vec(-5.0..5.0f64, 3)) {
        let p = LatticeParams { gamma_q: gamma, ..p };
        let mut cfg = IntegratorConfig::for_params(&p);
        // every mode decays at least at half the smaller bare rate
        let slowest = 0.5 * p.kappa.min(p.gamma_q);
        cfg.t_transient = cfg.t_transient.max(20.0 / slowest);
        let init = state(p.n_sites, &seed);
        let start = init.alpha.iter().chain(&init.beta).map(|z| z.norm()).fold(0.0, f64::max);
        let r = find_steady_state(&p, &DriveSpec::constant(hz(7.5e9), 0.0), &init, &cfg).unwrap();
        let end = r.final_state.alpha.iter().chain(&r.final_state.beta).map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(end <= 1e-3 * start.max(1e-300), "{end} from {start}");
    }
}
