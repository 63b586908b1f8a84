//! The five subcommands. Each fills an [`Outputs`] buffer and returns its
//! declared checks.

use anyhow::{bail, Context};
use hotwall_core::acceptance;
use hotwall_core::empirical::{bl_distance_to_product, histogram, write_histogram_csv};
use hotwall_core::laws::{compute_xi, default_epsilons, estimate_xi_bar, size_bias_inverse, DEFAULT_DELTAS};
use hotwall_core::numerics::mean_stderr;
use hotwall_core::process::{simulate, simulate_undelayed};
use hotwall_core::rare_event::{
    calibrate_delta1, direct_probability, entropy_cost, fit_slope, free_energy_check, gamma, importance_probability,
    non_ldp_experiment, tightness_check, NonLdpReport, ProbabilityEstimate, SlopeEstimate,
};
use hotwall_core::rate::{constant_tilt, rate_i, rate_i_bar, rate_gap, test_function_fixture, OmegaMeasure, RateRecord};
use hotwall_core::rng::replica_rng;
use hotwall_core::{EmpiricalMeasure, ExtendedReal, ProbabilityLaw};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{ext, num, opt, Outputs};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Distance from the LLN limit: `dq ⊗ π` with `π̃ = φ`, or `γ` when `ψ` has
/// no mean.
fn lln_distance(m: &EmpiricalMeasure<f64>, phi: &ProbabilityLaw, pi: Option<&ProbabilityLaw>) -> anyhow::Result<f64> {
    Ok(match pi {
        Some(pi) => bl_distance_to_product(m, pi)?,
        None => {
            let g = gamma(phi)?.bl_signature()?;
            hotwall_core::empirical::BlSignature::of_measure(m).distance(&g)
        }
    })
}

pub fn run_simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<Check>> {
    let s = cfg.simulate.as_ref().context("config has no [simulate] section")?;
    let phi = cfg.phi()?;
    let pi = size_bias_inverse(&phi).ok();
    let horizon = s.t_grid.iter().copied().fold(0.0, f64::max);
    let rows: anyhow::Result<Vec<(Vec<f64>, Vec<f64>)>> = (0..s.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(cfg.seed, i as u64);
            let path = match s.initial {
                Some([q0, p0]) => simulate(q0, p0, horizon, &phi, &mut rng)?,
                None => simulate_undelayed(horizon, &phi, &mut rng),
            };
            let mut d = Vec::new();
            let mut p = Vec::new();
            for t in &s.t_grid {
                let m = EmpiricalMeasure::from_trajectory(&path, t)?;
                d.push(lln_distance(&m, &phi, pi.as_ref())?);
                p.push(m.mean_momentum());
            }
            Ok((d, p))
        })
        .collect();
    let rows = rows?;
    let mut lln = Vec::new();
    for (k, t) in s.t_grid.iter().enumerate() {
        let d: Vec<f64> = rows.iter().map(|r| r.0[k]).collect();
        let p: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
        let (dm, ds) = mean_stderr(&d);
        let (pm, ps) = mean_stderr(&p);
        lln.push(vec![num(*t), num(dm), num(ds), num(pm), num(ps)]);
    }
    out.csv("lln.csv", &["t", "bl_mean", "bl_stderr", "mean_momentum", "mean_momentum_stderr"], &lln)?;

    let mut rng = replica_rng(cfg.seed, 0);
    let path = match s.initial {
        Some([q0, p0]) => simulate(q0, p0, horizon, &phi, &mut rng)?,
        None => simulate_undelayed(horizon, &phi, &mut rng),
    };
    let mut buf = Vec::new();
    path.write_csv(&mut buf)?;
    out.raw("trajectory.csv", buf);
    let m = EmpiricalMeasure::from_trajectory(&path, &horizon)?;
    let mut buf = Vec::new();
    write_histogram_csv(&histogram(&m, s.q_bins, &s.p_edges), &mut buf)?;
    out.raw("histogram.csv", buf);

    let mut checks = Vec::new();
    if let Some(tol) = s.lln_tolerance {
        let last: Vec<f64> = rows.iter().map(|r| *r.0.last().expect("non-empty grid")).collect();
        let (m, _) = mean_stderr(&last);
        checks.push(Check::new("lln_distance", m <= tol, format!("mean BL at t={horizon}: {m:.3e} (tolerance {tol})")));
    }
    Ok(checks)
}

/// `ξ̄` for the rate tables: `ξ` when the bracket contains it, the bracket
/// midpoint otherwise.
fn xi_bar_value(phi: &ProbabilityLaw, xi: &ExtendedReal) -> anyhow::Result<(ExtendedReal, hotwall_core::laws::TailExponentReport)> {
    let r = estimate_xi_bar(phi, &DEFAULT_DELTAS, &default_epsilons())?;
    if r.infinite {
        return Ok((ExtendedReal::Infinite, r));
    }
    let (lo, hi) = (r.xi_bar_lower.to_f64(), r.xi_bar_upper.to_f64());
    let x = xi.to_f64();
    let v = if lo <= x && x <= hi { xi.clone() } else { ExtendedReal::Finite(r.point().to_f64().max(x)) };
    Ok((v, r))
}

#[derive(Serialize)]
struct TailSummary {
    law: String,
    xi: ExtendedReal,
    xi_bar_used: ExtendedReal,
    xi_bar_lower: ExtendedReal,
    xi_bar_upper: ExtendedReal,
    xi_bar_infinite: bool,
}

pub fn run_rates(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<Check>> {
    let r = cfg.rates.as_ref().context("config has no [rates] section")?;
    let phi = cfg.phi()?;
    let xi = compute_xi(&phi, r.xi_tol)?;
    let (xi_bar, report) = xi_bar_value(&phi, &xi)?;
    out.json(
        "tail.json",
        &TailSummary {
            law: phi.name().into(),
            xi: xi.clone(),
            xi_bar_used: xi_bar.clone(),
            xi_bar_lower: report.xi_bar_lower.clone(),
            xi_bar_upper: report.xi_bar_upper.clone(),
            xi_bar_infinite: report.infinite,
        },
    )?;
    let xb_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|w| vec![num(w.delta), num(w.epsilon), num(w.log_mass), num(w.value)])
        .collect();
    out.csv("xi_bar_windows.csv", &["delta", "epsilon", "log_mass", "value"], &xb_rows)?;

    let pi = r.pi.as_ref().map(|p| p.build()).transpose()?;
    let n = (1.0 / r.alpha_step).round() as usize;
    let mut rows = Vec::new();
    let mut bad_order = 0;
    let mut bad_identity = 0;
    for i in 0..=n {
        for j in 0..=n - i {
            let (a1, a2, a3) = (i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64);
            let ells: Vec<f64> = if n - i - j == 0 { vec![r.ells[0]] } else { r.ells.clone() };
            for ell in ells {
                let mu = match &pi {
                    Some(pi) => OmegaMeasure::new(a1, a2, a3, (a1 > 0.0).then(|| pi.clone()), ell)?,
                    None => OmegaMeasure::from_size_biased(a1, a2, a3, phi.clone(), ell)?,
                };
                let rec = RateRecord::evaluate(&mu, &phi, &xi, &xi_bar)?;
                let i_v = rate_i(&mu, &phi, &xi)?.total;
                let ib = rate_i_bar(&mu, &phi, &xi, &xi_bar)?.total;
                let j_v = rate_gap(&mu, &xi, &xi_bar)?;
                if ib < i_v {
                    bad_order += 1;
                }
                let sum = (i_v.clone() + j_v).to_f64();
                let same = if sum.is_infinite() || ib.is_infinite() {
                    sum == ib.to_f64()
                } else {
                    (sum - ib.to_f64()).abs() <= 1e-12 * sum.abs().max(1.0)
                };
                if !same {
                    bad_identity += 1;
                }
                rows.push(vec![
                    num(rec.alpha1),
                    num(rec.alpha2),
                    num(rec.alpha3),
                    num(rec.ell),
                    num(rec.mean_momentum),
                    ext(&rec.i),
                    ext(&rec.i_bar),
                    ext(&rec.gap),
                ]);
            }
        }
    }
    out.csv("rates.csv", &["alpha1", "alpha2", "alpha3", "ell", "mean_momentum", "I", "I_bar", "gap"], &rows)?;
    Ok(vec![
        Check::new("i_bar_dominates_i", bad_order == 0, format!("{bad_order} of {} rows with Ī < I", rows.len())),
        Check::new("gap_identity", bad_identity == 0, format!("{bad_identity} rows with Ī ≠ I + J")),
    ])
}

#[derive(Serialize)]
struct RareSummary {
    importance: Option<SlopeEstimate>,
    direct: Option<SlopeEstimate>,
    entropy_cost_per_t: Vec<(f64, f64)>,
}

fn fit_finite(tag: &str, ts: &[f64], est: &[ProbabilityEstimate]) -> Option<SlopeEstimate> {
    let keep: Vec<usize> = (0..ts.len()).filter(|&k| est[k].log_estimate.is_finite()).collect();
    if keep.len() < 3 {
        return None;
    }
    let t: Vec<f64> = keep.iter().map(|&k| ts[k]).collect();
    let y: Vec<f64> = keep.iter().map(|&k| est[k].log_estimate).collect();
    let se: Vec<f64> = keep.iter().map(|&k| est[k].rel_stderr).collect();
    fit_slope(tag, &t, &y, &se).ok()
}

pub fn run_rare(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<Check>> {
    let r = cfg.rare.as_ref().context("config has no [rare] section")?;
    let phi = cfg.phi()?;
    let event = r.event.build(&phi)?;
    let mut is_est = Vec::new();
    let mut direct_est = Vec::new();
    let mut costs = Vec::new();
    let mut rows = Vec::new();
    for (k, &t) in r.t_grid.iter().enumerate() {
        let scheme = r.scheme.build(t)?;
        let seed = cfg.seed.wrapping_add(k as u64 * 1_000_003);
        let e = importance_probability(&event, &scheme, r.replicas, &phi, seed)?;
        let cost = entropy_cost(&scheme, &phi)?.to_f64();
        costs.push((t, cost / t));
        rows.push(vec![
            num(t),
            "importance".into(),
            num(e.log_estimate),
            num(e.rel_stderr),
            e.hits.to_string(),
            num(e.ess),
            num(cost),
        ]);
        is_est.push(e);
        if r.direct {
            let d = direct_probability(&event, t, r.replicas, &phi, seed ^ 0xd1ec7)?;
            rows.push(vec![
                num(t),
                "direct".into(),
                num(d.log_estimate),
                num(d.rel_stderr),
                d.hits.to_string(),
                num(d.ess),
                String::new(),
            ]);
            direct_est.push(d);
        }
    }
    out.csv("estimates.csv", &["t", "estimator", "log_p", "rel_stderr", "hits", "ess", "entropy_cost"], &rows)?;
    let summary = RareSummary {
        importance: fit_finite("importance", &r.t_grid, &is_est),
        direct: if r.direct { fit_finite("direct", &r.t_grid, &direct_est) } else { None },
        entropy_cost_per_t: costs,
    };
    out.json("slopes.json", &summary)?;

    let mut checks = Vec::new();
    if let Some(ts) = &r.tightness {
        let rows = tightness_check(&phi, &ts.t_grid, &ts.levels, ts.replicas, cfg.seed ^ 0x7197)?;
        let bad = rows.iter().filter(|x| !x.ok).count();
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|x| vec![num(x.t), num(x.parameter), num(x.estimate), num(x.stderr), num(x.bound), x.ok.to_string()])
            .collect();
        out.csv("tightness.csv", &["t", "level", "estimate", "stderr", "bound", "ok"], &csv_rows)?;
        checks.push(Check::new("tightness", bad == 0, format!("{bad} of {} rows above the bound", rows.len())));
    }
    if let Some(fe) = &r.free_energy {
        let xi = compute_xi(&phi, 1e-9)?;
        let mut csv_rows = Vec::new();
        let mut bad = 0;
        for (k, f) in fe.fixtures.iter().enumerate() {
            let fx = test_function_fixture(f.c, f.delta, f.m, constant_tilt(f.a), &phi, &xi)
                .with_context(|| format!("free_energy fixture {k}"))?;
            for x in free_energy_check(&fx, &phi, &fe.t_grid, fe.replicas, cfg.seed ^ (0xfe00 + k as u64))? {
                bad += usize::from(!x.ok);
                csv_rows.push(vec![
                    k.to_string(),
                    num(x.t),
                    num(x.estimate),
                    num(x.stderr),
                    num(x.bound),
                    x.ok.to_string(),
                ]);
            }
        }
        out.csv("free_energy.csv", &["fixture", "t", "estimate", "stderr", "bound", "ok"], &csv_rows)?;
        checks.push(Check::new("free_energy", bad == 0, format!("{bad} of {} rows above the bound", csv_rows.len())));
    }
    Ok(checks)
}

fn nonldp_rows(r: &NonLdpReport) -> Vec<Vec<String>> {
    r.points
        .iter()
        .map(|p| {
            vec![
                r.law.clone(),
                num(p.t),
                p.matched.to_string(),
                num(p.window.0),
                num(p.window.1),
                p.window_empty.to_string(),
                opt(p.is_log_prob),
                opt(p.is_rel_stderr),
                opt(p.ess),
                num(p.bound_log),
                p.direct_hits.to_string(),
                p.direct_paths.to_string(),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct NonLdpSummary<'a> {
    delta1: f64,
    law: &'a NonLdpReport,
    control: Option<&'a NonLdpReport>,
}

pub fn run_nonldp(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<Check>> {
    let n = cfg.nonldp.as_ref().context("config has no [nonldp] section")?;
    let mut exp = n.experiment.clone();
    exp.seed = cfg.seed;
    let phi = cfg.phi()?;
    let control = n.control.as_ref().map(|c| c.build()).transpose()?;
    let delta1 = match exp.delta1 {
        Some(d) => d,
        None => calibrate_delta1(control.as_ref().unwrap_or(&phi), &exp)?,
    };
    let xi = compute_xi(&phi, 1e-9)?.to_f64();
    if !xi.is_finite() {
        bail!("the non-LDP experiment needs a finite ξ; {} has ξ = ∞", phi.name());
    }
    let main = non_ldp_experiment(&phi, xi, &exp, delta1)?;
    let ctrl = match &control {
        Some(c) => {
            let cxi = compute_xi(c, 1e-9)?.to_f64();
            Some(non_ldp_experiment(c, cxi, &exp, delta1)?)
        }
        None => None,
    };
    let mut rows = nonldp_rows(&main);
    if let Some(c) = &ctrl {
        rows.extend(nonldp_rows(c));
    }
    out.csv(
        "points.csv",
        &[
            "law",
            "t",
            "matched",
            "window_lo",
            "window_hi",
            "window_empty",
            "is_log_prob",
            "is_rel_stderr",
            "ess",
            "bound_log",
            "direct_hits",
            "direct_paths",
        ],
        &rows,
    )?;
    out.json(
        "summary.json",
        &NonLdpSummary {
            delta1,
            law: &main,
            control: ctrl.as_ref(),
        },
    )?;
    let rel = (main.matched.slope - main.target).abs() / main.target.abs();
    let mut checks = vec![
        Check::new(
            "matched_slope",
            rel <= n.slope_tolerance,
            format!("{:.4} vs target {:.4} ({:.1}%)", main.matched.slope, main.target, 100.0 * rel),
        ),
        Check::new(
            "mismatched_gap",
            main.slope_gap >= n.min_gap,
            format!("bound slope {:.4}, gap {:.4} (need {})", main.mismatched_bound.slope, main.slope_gap, n.min_gap),
        ),
    ];
    if let Some(c) = &ctrl {
        checks.push(Check::new(
            "control_agreement",
            c.slopes_agree() == Some(true),
            format!(
                "matched {:.4}, mismatched {}",
                c.matched.slope,
                c.mismatched_is.as_ref().map_or("n/a".into(), |m| format!("{:.4}", m.slope))
            ),
        ));
    }
    Ok(checks)
}

pub fn run_verify(seed: u64, out: &mut Outputs) -> anyhow::Result<Vec<Check>> {
    let mut results = Vec::new();
    for &(id, _, _) in acceptance::CRITERIA.iter() {
        let r = acceptance::run_criterion(id, seed).expect("known criterion");
        println!("{}", r.line());
        results.push(r);
    }
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.id.to_string(),
                r.name.clone(),
                r.passed.to_string(),
                num(r.budget_seconds),
                r.detail.clone(),
            ]
        })
        .collect();
    out.csv("acceptance.csv", &["id", "name", "passed", "budget_seconds", "detail"], &rows)?;
    Ok(results
        .into_iter()
        .map(|r| Check::new(format!("criterion {}", r.id), r.passed, r.detail))
        .collect())
}
