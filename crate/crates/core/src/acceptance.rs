//! The acceptance suite: one routine per criterion, each returning a
//! pass/fail verdict with a short numeric summary.

use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::empirical::{bl_distance_to_product, EmpiricalMeasure};
use crate::error::Result;
use crate::laws::{compute_xi, default_epsilons, estimate_xi_bar, size_bias, window_probability, ProbabilityLaw, DEFAULT_DELTAS};
use crate::process::{generator_residual, semigroup_residual, TestFunction};
use crate::process::{simulate_undelayed, Trajectory};
use crate::rare_event::{
    calibrate_delta1, entropy_cost, free_energy_check, importance_with_costs, non_ldp_experiment, tightness_check, Event,
    NonLdpConfig, TiltedScheme,
};
use crate::rate::{
    candidate_value, combine_i, combine_i_bar, constant_tilt, gap, optimizer_candidate, random_candidates, rate_i,
    relative_entropy, test_function_fixture, variational_entropy, OmegaMeasure, RateInputs,
};
use crate::numerics::mean_stderr;
use crate::rng::replica_rng;
use crate::scalar::{ratio, ExtendedReal};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<28} {} ({:.2} s, budget {} s): {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(u32, &str, f64); 10] = [
    (1, "law of large numbers", 10.0),
    (2, "total variation bound", 5.0),
    (3, "dyadic tail exponents", 1.0),
    (4, "exponential tail exponents", 30.0),
    (5, "rate identities", 1.0),
    (6, "variational formula", 10.0),
    (7, "tightness and free energy", 120.0),
    (8, "non-LDP demonstration", 600.0),
    (9, "entropy-cost consistency", 120.0),
    (10, "semigroup and generator", 60.0),
];

/// Runs one criterion. Errors inside a check count as a failure.
pub fn run_criterion(id: u32, seed: u64) -> Option<CriterionResult> {
    let &(_, name, budget) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let outcome = match id {
        1 => lln(seed),
        2 => tv_bound(seed),
        3 => dyadic_exponents(),
        4 => exp_exponents(),
        5 => rate_identities(seed),
        6 => variational(seed),
        7 => tightness_and_free_energy(seed),
        8 => non_ldp(seed),
        9 => entropy_costs(seed),
        10 => semigroup(seed),
        _ => unreachable!(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Some(CriterionResult {
        id,
        name: name.to_string(),
        passed: ok && seconds <= budget,
        detail: if seconds > budget { format!("{detail}; over budget") } else { detail },
        seconds,
        budget_seconds: budget,
    })
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|c| run_criterion(c.0, seed)).collect()
}

type Outcome = Result<(bool, String)>;

fn lln(seed: u64) -> Outcome {
    let pi = ProbabilityLaw::atomic(&[(1.0, 0.4), (3.0, 0.6)])?;
    let phi = size_bias(&pi)?;
    let ts = [1e2, 1e3, 1e4];
    let replicas = 16;
    let rows: Result<Vec<Vec<f64>>> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let path = simulate_undelayed(1e4, &phi, &mut rng);
            ts.iter()
                .map(|t| bl_distance_to_product(&EmpiricalMeasure::from_trajectory(&path, t)?, &pi))
                .collect()
        })
        .collect();
    let rows = rows?;
    let mean: Vec<f64> = (0..ts.len())
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / replicas as f64)
        .collect();
    let worst = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let ok = worst <= 0.02 && mean.windows(2).all(|w| w[1] < w[0]);
    Ok((
        ok,
        format!(
            "mean BL at t=1e2,1e3,1e4: {:.4}, {:.4}, {:.4}; worst at 1e4 {:.4}",
            mean[0], mean[1], mean[2], worst
        ),
    ))
}

fn tv_bound(seed: u64) -> Outcome {
    let mut rng = replica_rng(seed, 0x7b);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..100 {
        let speeds: Vec<BigRational> = (0..rng.gen_range(1..=4)).map(|_| ratio(rng.gen_range(1..=32), 8)).collect();
        let q0 = ratio(rng.gen_range(0..16), 16);
        let p0 = ratio(rng.gen_range(1..=32), 8);
        let mut path = Trajectory::delayed(q0, p0, Vec::new())?;
        let t0 = path.t0();
        let t = t0.clone() + ratio(rng.gen_range(1..=160), 8);
        while path.horizon() <= t {
            let v = &speeds[rng.gen_range(0..speeds.len())];
            path.push(v.recip())?;
        }
        let mu = EmpiricalMeasure::from_trajectory(&path, &t)?;
        let rest = t.clone() - t0.clone();
        let mu_bar = EmpiricalMeasure::from_trajectory(&path.after_first_hit(), &rest)?;
        let lhs = mu.total_variation_norm(&mu_bar);
        let rhs = ratio(2, 1) * t0 / t;
        if lhs > rhs {
            violations += 1;
        }
        let slack = num_traits::ToPrimitive::to_f64(&(rhs - lhs)).unwrap_or(f64::NAN);
        tightest = tightest.min(slack);
    }
    Ok((violations == 0, format!("100 exact configurations, {violations} violations, smallest slack {tightest:.3e}")))
}

/// `(j, φ(window))` for the windows around `3·2^{-j}`, `j = 3..=12`.
pub fn dyadic_window_masses(delta: f64) -> Vec<(i32, f64)> {
    let phi = ProbabilityLaw::dyadic();
    (3..=12).map(|j| (j, window_probability(&phi, 3.0 * 2f64.powi(-j), delta))).collect()
}

fn dyadic_exponents() -> Outcome {
    let xi = compute_xi(&ProbabilityLaw::dyadic(), 1e-9)?.to_f64();
    let hit: Vec<i32> = dyadic_window_masses(0.4).into_iter().filter(|w| w.1 != 0.0).map(|w| w.0).collect();
    let narrow_empty = dyadic_window_masses(0.3).iter().all(|w| w.1 == 0.0);
    let ok = (xi - 1.0).abs() <= 1e-6 && hit.is_empty();
    Ok((
        ok,
        format!(
            "ξ = {xi:.9}; δ=0.4 windows with mass at j = {hit:?} (they contain 2^(1-j)); all δ=0.3 windows empty: {narrow_empty}"
        ),
    ))
}

fn exp_exponents() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for xi0 in [0.5, 1.0, 2.0] {
        let law = ProbabilityLaw::exp_interarrival(xi0)?;
        let xi = compute_xi(&law, 1e-6)?.to_f64();
        let r = estimate_xi_bar(&law, &DEFAULT_DELTAS, &default_epsilons())?;
        let (lo, hi) = (r.xi_bar_lower.to_f64(), r.xi_bar_upper.to_f64());
        ok &= (xi - xi0).abs() <= 1e-3 && lo <= xi0 && xi0 <= hi && hi - lo <= 0.2;
        parts.push(format!("ξ₀={xi0}: ξ={xi:.6}, ξ̄∈[{lo:.4}, {hi:.4}]"));
    }
    Ok((ok, parts.join("; ")))
}

fn rate_identities(seed: u64) -> Outcome {
    type E = ExtendedReal<BigRational>;
    let mut rng = replica_rng(seed, 0x5);
    let mut bad_identity = 0;
    let mut bad_order = 0;
    for _ in 0..1000 {
        let w: Vec<i64> = loop {
            let w: Vec<i64> = (0..3).map(|_| rng.gen_range(0..=6)).collect();
            if w.iter().sum::<i64>() > 0 {
                break w;
            }
        };
        let s: i64 = w.iter().sum();
        let r = RateInputs {
            mean_momentum: ratio(rng.gen_range(0..=20), 5),
            entropy: if rng.gen_bool(0.1) { E::Infinite } else { E::Finite(ratio(rng.gen_range(0..=20), 7)) },
            alpha2: ratio(w[1], s),
            alpha3: ratio(w[2], s),
            ell: ratio(rng.gen_range(0..=8), 8),
        };
        let xi = match rng.gen_range(0..6) {
            0 => E::Infinite,
            1 => E::zero(),
            _ => E::Finite(ratio(rng.gen_range(1..=12), 4)),
        };
        let xi_bar = if xi.is_infinite() || rng.gen_bool(0.3) {
            E::Infinite
        } else {
            xi.clone() + E::Finite(ratio(rng.gen_range(0..=12), 4))
        };
        let i = combine_i(&r, &xi).total;
        let ib = combine_i_bar(&r, &xi, &xi_bar).total;
        match gap(&r, &xi, &xi_bar) {
            Some(j) if ib == i.clone() + j.clone() => {}
            _ => bad_identity += 1,
        }
        if ib < i {
            bad_order += 1;
        }
    }
    let mut nonzero = Vec::new();
    for phi in [
        ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)])?,
        ProbabilityLaw::dyadic(),
        ProbabilityLaw::exp_interarrival(1.0)?,
    ] {
        let xi = compute_xi(&phi, 1e-9)?;
        let v = rate_i(&OmegaMeasure::invariant(&phi)?, &phi, &xi)?.total;
        if v != ExtendedReal::zero() {
            nonzero.push(format!("{}: {v}", phi.name()));
        }
    }
    let ok = bad_identity == 0 && bad_order == 0 && nonzero.is_empty();
    Ok((
        ok,
        format!(
            "1000 exact grid points: {bad_identity} identity failures, {bad_order} with Ī < I; I(invariant) nonzero for {nonzero:?}"
        ),
    ))
}

fn random_atomic_pair<R: Rng>(rng: &mut R) -> Result<(ProbabilityLaw, ProbabilityLaw)> {
    let n = rng.gen_range(2..=5);
    let xs: Vec<f64> = (0..n).map(|k| (0.2 + k as f64) * rng.gen_range(0.5..1.5)).collect();
    let mut pi: Vec<(f64, f64)> = xs.iter().map(|&x| (x, rng.gen_range(0.1..1.0))).collect();
    let mut phi: Vec<(f64, f64)> = xs.iter().map(|&x| (x, rng.gen_range(0.1..1.0))).collect();
    if rng.gen_bool(0.5) {
        phi.push((7.5, rng.gen_range(0.1..1.0)));
    }
    for law in [&mut pi, &mut phi] {
        let z: f64 = law.iter().map(|a| a.1).sum();
        law.iter_mut().for_each(|a| a.1 /= z);
    }
    Ok((ProbabilityLaw::atomic(&pi)?, ProbabilityLaw::atomic(&phi)?))
}

fn variational(seed: u64) -> Outcome {
    let mut rng = replica_rng(seed, 0x6);
    let mut worst_gap: f64 = 0.0;
    let mut exceed = 0usize;
    let mut trials = 0usize;
    for _ in 0..20 {
        let (pi, phi) = random_atomic_pair(&mut rng)?;
        let closed = pi.mean()?.to_f64() * relative_entropy(&size_bias(&pi)?, &phi)?.to_f64();
        let opt = optimizer_candidate(&pi, &phi)?.expect("atomic pair with π̃ ≪ φ");
        let v = variational_entropy(&pi, &phi, &[opt])?.value;
        worst_gap = worst_gap.max((v - closed).abs());
        let cands = random_candidates(500, 0.1, 10.0, 6, 3.0, &mut rng);
        let values: Result<Vec<f64>> = cands.par_iter().map(|c| candidate_value(&pi, &phi, &c.g)).collect();
        for v in values? {
            trials += 1;
            if v > closed {
                exceed += 1;
            }
        }
    }
    let ok = worst_gap <= 1e-9 && exceed == 0;
    Ok((
        ok,
        format!("20 pairs, max |sup − π(p)H| = {worst_gap:.2e}; {exceed} of {trials} random candidates exceed"),
    ))
}

fn tightness_and_free_energy(seed: u64) -> Outcome {
    let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)])?;
    let rows = tightness_check(&phi, &[10.0, 20.0], &[2.0, 5.0], 100_000, seed)?;
    let t_bad = rows.iter().filter(|r| !r.ok).count();
    let dyadic = ProbabilityLaw::dyadic();
    let xi = compute_xi(&dyadic, 1e-9)?;
    let fixtures = [
        (0.0, 0.1, 0.3, 0.5),
        (0.5, 0.05, 0.5, 0.5),
        (0.25, 0.1, 0.4, 0.8),
        (0.8, 0.05, 0.5, 0.2),
        (0.5, 0.2, 0.25, 0.4),
    ];
    let mut f_bad = 0;
    let mut f_rows = 0;
    let mut ratio_max: f64 = 0.0;
    for (k, &(c, d, m, a)) in fixtures.iter().enumerate() {
        let f = test_function_fixture(c, d, m, constant_tilt(a), &dyadic, &xi)?;
        for r in free_energy_check(&f, &dyadic, &[10.0, 50.0, 100.0], 100_000, seed.wrapping_add(k as u64 + 1))? {
            f_rows += 1;
            f_bad += usize::from(!r.ok);
            ratio_max = ratio_max.max(r.estimate / r.bound);
        }
    }
    let worst = rows
        .iter()
        .map(|r| format!("t={} M={}: {:.3e} ≤ {:.3e}", r.t, r.parameter, r.estimate, r.bound))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((
        t_bad == 0 && f_bad == 0,
        format!("tightness {t_bad}/4 violations [{worst}]; free energy {f_bad}/{f_rows} violations, max estimate/bound {ratio_max:.3}"),
    ))
}

fn non_ldp(seed: u64) -> Outcome {
    let cfg = NonLdpConfig { seed, ..NonLdpConfig::default() };
    let dyadic = ProbabilityLaw::dyadic();
    let control = ProbabilityLaw::exp_interarrival(1.0)?;
    let delta1 = calibrate_delta1(&control, &cfg)?;
    let xi = compute_xi(&dyadic, 1e-9)?.to_f64();
    let d = non_ldp_experiment(&dyadic, xi, &cfg, delta1)?;
    let c = non_ldp_experiment(&control, 1.0, &cfg, delta1)?;
    let rel = (d.matched.slope - d.target).abs() / d.target.abs();
    let agree = c.slopes_agree() == Some(true);
    let ok = rel <= 0.2 && d.slope_gap >= 0.5 && agree;
    let ci = |s: &crate::rare_event::SlopeEstimate| format!("{:.4} [{:.4}, {:.4}]", s.slope, s.ci.0, s.ci.1);
    Ok((
        ok,
        format!(
            "δ₁={delta1}; dyadic matched {} vs target {:.4}, bound {:.4}, gap {:.3}; control matched {}, mismatched {}",
            ci(&d.matched),
            d.target,
            d.mismatched_bound.slope,
            d.slope_gap,
            ci(&c.matched),
            c.mismatched_is.as_ref().map_or("n/a".into(), ci),
        ),
    ))
}

/// `(φ, scheme)` pairs for the cost check.
fn cost_schemes() -> Result<Vec<(ProbabilityLaw, TiltedScheme)>> {
    let mut out = Vec::new();
    for (l0, t) in [(1.0, 20.0), (2.0, 40.0), (0.5, 80.0), (1.0, 160.0)] {
        let phi = ProbabilityLaw::exp_interarrival(l0)?;
        out.push((phi.clone(), TiltedScheme::slow_reentry(0.5, 0.05, t)?));
    }
    for j in [5, 7] {
        out.push((ProbabilityLaw::dyadic(), TiltedScheme::slow_reentry(0.5, 0.05, 0.5 * 2f64.powi(j))?));
    }
    let grid = [
        (1.0, 2.0, 0.3, 0.5, 0.01, 20.0),
        (1.0, 2.0, 0.3, 0.5, 0.01, 60.0),
        (1.0, 2.0, 0.3, 0.5, 0.05, 120.0),
        (1.0, 0.5, 0.2, 0.4, 0.05, 30.0),
        (1.0, 0.5, 0.5, 0.3, 0.1, 50.0),
        (2.0, 3.0, 0.4, 0.5, 0.02, 40.0),
        (2.0, 1.0, 0.6, 0.2, 0.1, 40.0),
        (0.5, 1.5, 0.25, 0.6, 0.05, 80.0),
        (0.5, 0.8, 0.7, 0.2, 0.05, 100.0),
        (1.5, 1.5, 0.5, 0.4, 0.05, 60.0),
    ];
    for (l0, l1, a, l, d, t) in grid {
        let phi = ProbabilityLaw::exp_interarrival(l0)?;
        let pt = ProbabilityLaw::exp_interarrival(l1)?;
        out.push((phi, TiltedScheme::ll_plus_slow_reentry(a, Some(pt), l, d, t)?));
    }
    let dyadic = ProbabilityLaw::dyadic();
    let tilt = ProbabilityLaw::atomic(&[(1.0, 0.3), (0.5, 0.5), (0.25, 0.2)])?;
    for (a, d, j) in [(0.2, 0.05, 5), (0.4, 0.1, 6), (0.3, 0.05, 7), (0.5, 0.02, 5)] {
        let cfg = NonLdpConfig { alpha: a, ell: 0.25, delta: d, ..NonLdpConfig::default() };
        let t = cfg.matched_times()[0] * 2f64.powi(j - cfg.j_min);
        out.push((dyadic.clone(), TiltedScheme::ll_plus_slow_reentry(a, Some(tilt.clone()), 0.25, d, t)?));
    }
    Ok(out)
}

/// `(1/t) cost` for `φ = exp(λ₀)`, `π̃ = exp(λ₁)` at growing `t`, with the
/// target `αλ₁H + (1-α)λ₀/ℓ`.
pub fn cost_convergence(ts: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    let (l0, l1, a, l, d): (f64, f64, f64, f64, f64) = (1.0, 2.0, 0.3, 0.5, 0.01);
    let h = (l1 / l0).ln() + l0 / l1 - 1.0;
    let target = a * l1 * h + (1.0 - a) * l0 / l;
    let phi = ProbabilityLaw::exp_interarrival(l0)?;
    let pt = ProbabilityLaw::exp_interarrival(l1)?;
    let rows: Result<Vec<(f64, f64)>> = ts
        .iter()
        .map(|&t| {
            let s = TiltedScheme::ll_plus_slow_reentry(a, Some(pt.clone()), l, d, t)?;
            Ok((t, entropy_cost(&s, &phi)?.to_f64() / t))
        })
        .collect();
    Ok((target, rows?))
}

fn entropy_costs(seed: u64) -> Outcome {
    let mut misses = Vec::new();
    let schemes = cost_schemes()?;
    for (k, (phi, s)) in schemes.iter().enumerate() {
        let cost = entropy_cost(s, phi)?.to_f64();
        let (_, costs) = importance_with_costs(&Event::Always, s, 4000, phi, seed.wrapping_add(k as u64))?;
        let (m, se) = mean_stderr(&costs);
        if (m - cost).abs() > 3.0 * se + 1e-9 * cost.abs().max(1.0) {
            misses.push(format!("#{k}: {m:.4} ± {se:.4} vs {cost:.4}"));
        }
    }
    let (target, rows) = cost_convergence(&[100.0, 400.0, 1600.0, 6400.0])?;
    let last = rows.last().expect("non-empty grid").1;
    let rel = (last - target).abs() / target;
    let ok = misses.is_empty() && rel <= 0.1;
    Ok((
        ok,
        format!(
            "{} schemes, {} outside 3σ {misses:?}; (1/t)cost at t={}: {last:.4} vs Ī {target:.4} ({:.2}%)",
            schemes.len(),
            misses.len(),
            rows.last().expect("non-empty grid").0,
            100.0 * rel
        ),
    ))
}

fn semigroup(seed: u64) -> Outcome {
    let laws = [ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)])?, ProbabilityLaw::exp_interarrival(1.0)?];
    let grid = [0.5, 1.0, 2.0];
    let x0 = (0.3, 1.0);
    let mut checks = 0;
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for (li, phi) in laws.iter().enumerate() {
        let fs = [
            TestFunction::constant(2.0),
            TestFunction::sin_2pi_q(),
            TestFunction::cos_2pi_q(),
            TestFunction::interpolating("p/(1+p)", Arc::new(|p: f64| p / (1.0 + p)), phi)?,
            TestFunction::interpolating("exp(-p)", Arc::new(|p: f64| (-p).exp()), phi)?,
        ];
        for (fi, f) in fs.iter().enumerate() {
            let base = seed ^ ((li as u64) << 40) ^ ((fi as u64) << 32);
            for (ti, &t) in grid.iter().enumerate() {
                let g = generator_residual(f, phi, x0, t, 4000, base + ti as u64)?;
                checks += 1;
                worst = worst.max(g.residual / (5.0 * g.stderr + g.tolerance));
                if !g.within(5.0) {
                    fails.push(format!("generator {} {} t={t}", phi.name(), f.name));
                }
                for (si, &s) in grid.iter().enumerate() {
                    let r = semigroup_residual(f, phi, x0, t, s, 4000, 1, base + 100 + (3 * ti + si) as u64)?;
                    checks += 1;
                    worst = worst.max(r.residual / (5.0 * r.stderr + r.tolerance));
                    if !r.within(5.0) {
                        fails.push(format!("semigroup {} {} t={t} s={s}", phi.name(), f.name));
                    }
                }
            }
        }
    }
    Ok((
        fails.is_empty(),
        format!("{checks} residuals, largest residual/(5·se + tol) = {worst:.3}; failures {fails:?}"),
    ))
}
