use hotwall_core::laws::{compute_xi, size_bias_inverse, ProbabilityLaw};
use hotwall_core::rare_event::tightness_bound;
use hotwall_core::rate::{rate_i, rate_i_bar, OmegaMeasure};
use hotwall_core::{ratio, EmpiricalMeasure, ExactRational, ExtendedReal, Trajectory};
use proptest::prelude::*;

fn exact_measure(q0: i64, p0: i64, speeds: &[i64], t: i64) -> EmpiricalMeasure<ExactRational> {
    let durations: Vec<ExactRational> = speeds.iter().map(|&k| ratio(8, k)).collect();
    let path = Trajectory::delayed(ratio(q0, 16), ratio(p0, 8), durations).unwrap();
    let t = ratio(t, 4).min(path.horizon());
    EmpiricalMeasure::from_trajectory(&path, &t).unwrap()
}

fn speeds() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(1i64..=24, 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_is_a_metric(
        a in speeds(), b in speeds(), c in speeds(),
        q in 0i64..16, p in 1i64..=24, t in 1i64..=40,
    ) {
        let (ma, mb, mc) = (exact_measure(q, p, &a, t), exact_measure(q, p, &b, t), exact_measure(0, 8, &c, t));
        let zero = ratio(0, 1);
        let one = ratio(1, 1);
        let ab = ma.tv_distance(&mb);
        prop_assert_eq!(ab.clone(), mb.tv_distance(&ma));
        prop_assert!(ab >= zero && ab <= one);
        prop_assert_eq!(ma.tv_distance(&ma), zero);
        prop_assert!(ma.tv_distance(&mc) <= ab + mb.tv_distance(&mc));
    }

    #[test]
    fn window_mass_grows_with_width(eps in 1e-4f64..2.0, d1 in 0.01f64..0.95, d2 in 0.01f64..0.95) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        for law in [
            ProbabilityLaw::dyadic(),
            ProbabilityLaw::exp_interarrival(1.5).unwrap(),
            ProbabilityLaw::polynomial(2.0).unwrap(),
            ProbabilityLaw::atomic(&[(0.25, 0.5), (1.0, 0.5)]).unwrap(),
        ] {
            let narrow = law.mass_in(eps * (1.0 - lo), eps * (1.0 + lo));
            let wide = law.mass_in(eps * (1.0 - hi), eps * (1.0 + hi));
            prop_assert!(narrow <= wide + 1e-15, "{}: {} > {}", law.name(), narrow, wide);
        }
    }

    #[test]
    fn lower_rate_dominates_upper(w in prop::array::uniform3(0u32..10), ell in 0.0f64..1.0, k in 0usize..3) {
        prop_assume!(w.iter().sum::<u32>() > 0);
        let s = w.iter().sum::<u32>() as f64;
        let (a1, a2, a3) = (w[0] as f64 / s, w[1] as f64 / s, w[2] as f64 / s);
        let phi = match k {
            0 => ProbabilityLaw::dyadic(),
            1 => ProbabilityLaw::atomic(&[(0.5, 0.5), (2.0, 0.5)]).unwrap(),
            _ => ProbabilityLaw::exp_interarrival(1.0).unwrap(),
        };
        let xi = compute_xi(&phi, 1e-9).unwrap();
        let xi_bar = if k == 0 { ExtendedReal::Infinite } else { xi.clone() };
        let pi = ProbabilityLaw::atomic(&[(0.5, 0.3), (2.0, 0.7)]).unwrap();
        let pi = if k == 2 { size_bias_inverse(&phi).unwrap() } else { pi };
        let mu = OmegaMeasure::new(a1, a2, a3, (a1 > 0.0).then_some(pi), ell).unwrap();
        let i = rate_i(&mu, &phi, &xi).unwrap().total;
        let ib = rate_i_bar(&mu, &phi, &xi, &xi_bar).unwrap().total;
        prop_assert!(ib >= i, "{} < {}", ib, i);
    }

    #[test]
    fn tightness_bound_decreases_in_level(m in 0.5f64..6.0, dm in 0.0f64..3.0, t in 1.0f64..40.0) {
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
        prop_assert!(tightness_bound(m + dm, t, &phi).unwrap() <= tightness_bound(m, t, &phi).unwrap());
    }
}
