//! Randomized invariants checked with proptest: structural identities that
//! must hold for every admissible input, not just the grids the example
//! tests pin down.

use num_complex::Complex;
use proptest::prelude::*;

use cyclechain::io::{format_pmf_json, parse_pmf};
use cyclechain::{
    build_generator, dft_inverse, evolve, fit_alpha_t, kernel, simulate_paths, spectrum,
    total_variation, trig_moment, verify_detailed_balance, CycleSize, DiffusionParams, Pmf,
    RngSeed, TargetSpec,
};

fn size(m: usize) -> CycleSize {
    CycleSize::new(m).unwrap()
}

/// Strictly positive pmfs of random size; weights bounded away from zero
/// so probability ratios stay sane.
fn pmf_strategy(max_m: usize) -> impl Strategy<Value = Pmf> {
    (3..=max_m).prop_flat_map(|m| {
        proptest::collection::vec(0.05f64..1.0, m)
            .prop_map(|w| Pmf::from_weights(w).expect("positive weights normalize"))
    })
}

proptest! {
    /// Forward then inverse transform returns the original vector, and the
    /// imaginary parts it invents stay at rounding size.
    #[test]
    fn dft_round_trip(p in pmf_strategy(24)) {
        let back = dft_inverse(&p.dft());
        for (x, y) in p.as_slice().iter().zip(&back) {
            prop_assert!((x - y.re).abs() <= 1e-13);
            prop_assert!(y.im.abs() <= 1e-13);
        }
    }

    /// Average of squares equals the mean square of the coefficient moduli.
    #[test]
    fn parseval_identity(p in pmf_strategy(24)) {
        let m = p.size().get() as f64;
        let sum_sq: f64 = p.as_slice().iter().map(|x| x * x).sum();
        let coeff_sq: f64 = p.dft().as_slice().iter().map(Complex::norm_sqr).sum();
        prop_assert!((sum_sq - coeff_sq / m).abs() <= 1e-12 * sum_sq.max(1.0));
    }

    /// Kernels are stochastic symmetric circulants with nonnegative entries
    /// for every admissible parameter combination.
    #[test]
    fn kernel_rows_are_stochastic_and_nonnegative(
        m in 3usize..=20,
        beta in 0.1f64..=1.0,
        alpha in 0.01f64..=4.0,
        t in 0.0f64..=8.0,
    ) {
        let ms = size(m);
        let params = DiffusionParams::new(ms, alpha, beta, t).unwrap();
        let k = kernel(&params).unwrap();
        for r in ms.states() {
            let row = k.row(r);
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            for s in ms.states() {
                prop_assert!(row[s.get()] >= 0.0);
                prop_assert!(k.entry(r, s) == k.entry(s, r));
            }
        }
    }

    /// Evolution can only shrink the total variation distance to uniform.
    #[test]
    fn evolution_contracts_distance_to_uniform(
        p0 in pmf_strategy(16),
        beta in 0.1f64..=1.0,
        t in 0.0f64..=5.0,
    ) {
        let ms = p0.size();
        let uniform = Pmf::uniform(ms);
        let params = DiffusionParams::new(ms, 1.0, beta, t).unwrap();
        let p_t = evolve(&p0, &params).unwrap();
        let before = total_variation(&p0, &uniform).unwrap();
        let after = total_variation(&p_t, &uniform).unwrap();
        prop_assert!(after <= before + 1e-12);
    }

    /// Running for t1 then t2 equals running for t1 + t2.
    #[test]
    fn evolution_composes_over_time(
        p0 in pmf_strategy(16),
        beta in 0.1f64..=1.0,
        t1 in 0.0f64..=3.0,
        t2 in 0.0f64..=3.0,
    ) {
        let ms = p0.size();
        let step1 = evolve(&p0, &DiffusionParams::new(ms, 1.0, beta, t1).unwrap()).unwrap();
        let step2 = evolve(&step1, &DiffusionParams::new(ms, 1.0, beta, t2).unwrap()).unwrap();
        let joint = evolve(&p0, &DiffusionParams::new(ms, 1.0, beta, t1 + t2).unwrap()).unwrap();
        for (x, y) in step2.as_slice().iter().zip(joint.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    /// Every generator built for a strictly positive target satisfies
    /// detailed balance and has rows summing to zero.
    #[test]
    fn generators_balance_their_target(
        pi in pmf_strategy(24),
        alpha in 0.1f64..=5.0,
    ) {
        let spec = TargetSpec::new(pi.clone(), alpha).unwrap();
        let g = build_generator(&spec);
        let report = verify_detailed_balance(&g, &pi).unwrap();
        prop_assert!(report.pass);
        prop_assert!(report.max_gap <= 1e-13);
        for r in pi.size().states() {
            let row_sum: f64 = g.row(r).iter().sum();
            prop_assert!(row_sum.abs() <= 1e-12 * (1.0 + alpha));
        }
    }

    /// Trigonometric moments only see the frequency modulo m, and negating
    /// the frequency conjugates the moment.
    #[test]
    fn trig_moments_alias_and_conjugate(p in pmf_strategy(20), ell in 0i64..40) {
        let m = p.size().get() as i64;
        let base = trig_moment(&p, ell);
        let aliased = trig_moment(&p, ell + m);
        prop_assert!((base - aliased).norm() <= 1e-12);
        let negated = trig_moment(&p, -ell);
        prop_assert!((negated - base.conj()).norm() <= 1e-15);
    }

    /// Identical seeds reproduce paths exactly; the jump chain only ever
    /// moves to a neighbour.
    #[test]
    fn paths_are_reproducible_and_nearest_neighbour(
        pi in pmf_strategy(12),
        seed in any::<u64>(),
    ) {
        let ms = pi.size();
        let spec = TargetSpec::new(pi, 1.0).unwrap();
        let g = build_generator(&spec);
        let x0 = ms.index(0).unwrap();
        let first = simulate_paths(&g, x0, 5.0, 3, RngSeed(seed)).unwrap();
        let second = simulate_paths(&g, x0, 5.0, 3, RngSeed(seed)).unwrap();
        for (a, b) in first.iter().zip(&second) {
            prop_assert!(a.jump_times() == b.jump_times());
            prop_assert!(a.states_after_jumps() == b.states_after_jumps());
        }
        for path in &first {
            let mut here = path.initial();
            for &next in path.states_after_jumps() {
                let step = (ms.get() + next.get() - here.get()) % ms.get();
                prop_assert!(step == 1 || step == ms.get() - 1);
                here = next;
            }
        }
    }

    /// The resultant-decay inversion is exact on noiseless inputs.
    #[test]
    fn resultant_inversion_is_exact(
        m in 3usize..=24,
        beta in 0.1f64..=1.0,
        at in 0.01f64..=2.0,
    ) {
        let ms = size(m);
        let lambda1 = spectrum::<f64>(ms).lambda_star();
        let r = (-at * lambda1.powf(beta)).exp();
        let recovered = fit_alpha_t(r, ms, beta).unwrap();
        prop_assert!((recovered - at).abs() <= 1e-10 * at);
    }

    /// Serializing a pmf and parsing it back is bit for bit lossless.
    #[test]
    fn pmf_json_round_trip_is_bitwise(p in pmf_strategy(24)) {
        let text = format_pmf_json(&p);
        let back = parse_pmf(&text, false).unwrap();
        prop_assert!(back.as_slice() == p.as_slice());
    }
}
