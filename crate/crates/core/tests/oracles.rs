use hotwall_core::process::simulate_undelayed;
use hotwall_core::rare_event::{direct_probability, empirical_at, importance_probability, tightness_bound, Event, TiltedScheme};
use hotwall_core::rng::replica_rng;
use hotwall_core::{EmpiricalMeasure, ProbabilityLaw, Trajectory};

/// Every speed sequence of `{1: w, 2: 1-w}` that reaches past `t`, with its
/// probability and durations.
fn enumerate(t: f64, w: f64) -> Vec<(f64, Vec<f64>)> {
    let mut out = Vec::new();
    let mut stack = vec![(1.0, Vec::<f64>::new(), 0.0)];
    while let Some((p, taus, s)) = stack.pop() {
        for (tau, q) in [(1.0, w), (0.5, 1.0 - w)] {
            let mut next = taus.clone();
            next.push(tau);
            if s + tau > t {
                out.push((p * q, next));
            } else {
                stack.push((p * q, next, s + tau));
            }
        }
    }
    out
}

#[test]
fn enumeration_matches_closed_form_mean_momentum() {
    let t = 5.0;
    let leaves = enumerate(t, 0.3);
    let total: f64 = leaves.iter().map(|l| l.0).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (_, taus) in leaves.iter().step_by(37) {
        let n = taus.len() - 1;
        let s: f64 = taus[..n].iter().sum();
        let closed = n as f64 / t + (t - s) / (t * taus[n]);
        let path = Trajectory::undelayed(taus.clone()).unwrap();
        let m = EmpiricalMeasure::from_trajectory(&path, &t).unwrap();
        assert!((m.mean_momentum() - closed).abs() < 1e-12);
    }
}

#[test]
fn direct_estimate_matches_enumeration() {
    let (t, w, level) = (5.0, 0.3, 1.55);
    let exact: f64 = enumerate(t, w)
        .iter()
        .filter(|(_, taus)| {
            let n = taus.len() - 1;
            let s: f64 = taus[..n].iter().sum();
            n as f64 / t + (t - s) / (t * taus[n]) > level
        })
        .map(|l| l.0)
        .sum();
    let phi = ProbabilityLaw::atomic(&[(1.0, w), (2.0, 1.0 - w)]).unwrap();
    let est = direct_probability(&Event::MeanMomentumExceeds(level), t, 200_000, &phi, 11).unwrap();
    assert!((est.estimate - exact).abs() <= 4.0 * est.stderr, "{} ± {} vs {exact}", est.estimate, est.stderr);
    assert!(exact <= tightness_bound(level, t, &phi).unwrap());
}

#[test]
fn importance_agrees_with_direct_on_the_tilted_support() {
    let phi = ProbabilityLaw::exp_interarrival(1.0).unwrap();
    let (t, ell, delta) = (2.0, 0.5, 0.5);
    let event = Event::a_ball(&phi, 0.0, ell, 0.3).unwrap();
    let scheme = TiltedScheme::slow_reentry(ell, delta, t).unwrap();
    let (lo, hi) = scheme.window().unwrap();
    let is = importance_probability(&event, &scheme, 20_000, &phi, 5).unwrap();
    let n = 200_000;
    let hits = (0..n)
        .filter(|&i| {
            let mut rng = replica_rng(6, i as u64);
            let path = simulate_undelayed(t, &phi, &mut rng);
            let v = 1.0 / path.durations()[0];
            lo <= v && v < hi && event.contains(&empirical_at(&path, t).unwrap())
        })
        .count();
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!(p > 0.0);
    let tol = 4.0 * (se * se + is.stderr * is.stderr).sqrt();
    assert!((is.estimate - p).abs() <= tol, "IS {} ± {} vs direct {p} ± {se}", is.estimate, is.stderr);
}

#[test]
fn common_random_numbers_keep_estimates_monotone() {
    let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
    let mut last = f64::INFINITY;
    for level in [1.0, 1.25, 1.5, 1.75, 2.0, 2.25] {
        let e = direct_probability(&Event::MeanMomentumExceeds(level), 10.0, 5000, &phi, 3).unwrap();
        assert!(e.estimate <= last);
        last = e.estimate;
    }
    let phi = ProbabilityLaw::exp_interarrival(1.0).unwrap();
    let scheme = TiltedScheme::slow_reentry(0.5, 0.2, 8.0).unwrap();
    let mut last = 0.0;
    for radius in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let event = Event::a_ball(&phi, 0.0, 0.5, radius).unwrap();
        let e = importance_probability(&event, &scheme, 2000, &phi, 4).unwrap();
        assert!(e.estimate >= last);
        last = e.estimate;
    }
}
