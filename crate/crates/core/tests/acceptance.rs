use hotwall_core::acceptance::{dyadic_window_masses, run_all, CriterionResult};
use hotwall_core::laws::compute_xi;
use hotwall_core::ProbabilityLaw;

const SEED: u64 = 20240611;

/// The δ = 0.4 windows around `3·2^{-j}` contain the atom `2^{1-j}`, so the
/// exact-zero requirement cannot hold; everything else in the criterion must.
fn dyadic_failure_is_the_known_one(r: &CriterionResult) -> bool {
    let xi = compute_xi(&ProbabilityLaw::dyadic(), 1e-9).unwrap().to_f64();
    let wide = dyadic_window_masses(0.4);
    let contains_atom = wide.iter().all(|&(j, m)| {
        let lo = 3.0 * 2f64.powi(-j) * 0.6;
        let hi = 3.0 * 2f64.powi(-j) * 1.4;
        let atom = 2f64.powi(1 - j);
        lo <= atom && atom < hi && (m > 0.0 || j >= 11)
    });
    !r.passed
        && (xi - 1.0).abs() <= 1e-6
        && contains_atom
        && wide.iter().any(|w| w.1 > 0.0)
        && dyadic_window_masses(0.3).iter().all(|w| w.1 == 0.0)
}

fn main() {
    let results = run_all(SEED);
    for r in &results {
        println!("{}", r.line());
    }
    let mut unexpected = Vec::new();
    for r in &results {
        let ok = match r.id {
            3 => r.passed || dyadic_failure_is_the_known_one(r),
            _ => r.passed,
        };
        if !ok {
            unexpected.push(r.id);
        }
    }
    if results.iter().any(|r| r.id == 3 && !r.passed) {
        println!("criterion  3 is a known failure: the δ=0.4 windows hold the atom 2^(1-j); see README");
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
