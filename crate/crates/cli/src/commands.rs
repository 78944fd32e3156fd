//! One function per command. Each reads what it needs from the config and
//! returns metrics, the module report and an optional CSV series.

use serde_json::json;

use polymerlab_core::disorder::{
    build_disorder, exact_second_moment_report, mc_moment, qlarge_lower_bound_log, subcritical_prediction,
    EXACT_HORIZON_LIMIT,
};
use polymerlab_core::hitting::{ratio_formula, simulate_disc_hit, window_formula, BesselConfig, HittingQuery};
use polymerlab_core::intersections::{
    confinement_stats, estimate_pair_probability, histogram_csv, pair_meeting_exact, poisson_experiment,
    WindowGeometry,
};
use polymerlab_core::schedule::{
    build_log_schedule, build_schedule, check_parameters, validate_lemma_2_1, validate_log_schedule, Horizon,
    Schedule,
};
use polymerlab_core::walk::lclt_max_relative_error;
use polymerlab_core::{Error, LatticePoint, RngStream};

use crate::config::{Command, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::record::{Metric, Outcome};

/// Largest `t` accepted by `lclt`; the scan visits about `28 t` sites.
pub const LCLT_MAX_T: u64 = 200_000;
/// Largest number of base steps per path accepted by `hitting`.
pub const HITTING_MAX_STEPS: f64 = 1e7;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::InvalidParameter(msg.into()))
}

pub fn dispatch(c: &ExperimentConfig) -> CliResult<Outcome> {
    let stream = RngStream::new(c.seed, 0);
    match c.command {
        Command::Moments => moments(c, stream),
        Command::SecondMomentScan => second_moment_scan(c),
        Command::Schedule => schedule(c),
        Command::Poisson => poisson(c, stream),
        Command::PairProb => pair_prob(c, stream),
        Command::Hitting => hitting(c, stream),
        Command::Lclt => lclt(c),
        Command::Qlarge => qlarge(c, stream),
        Command::Confinement => confinement(c, stream),
    }
}

fn q32(q: u64) -> CliResult<u32> {
    u32::try_from(q).map_err(|_| invalid(format!("q = {q} is too large")))
}

fn moments(c: &ExperimentConfig, stream: RngStream) -> CliResult<Outcome> {
    let p = &c.parameters;
    let d = build_disorder(p.beta_hat, p.steps()?)?;
    let q = q32(p.q)?;
    let m = mc_moment(&d, q, c.replicates, stream)?;
    let mut o = Outcome::new(format!("E W^{q} = {:.6} +- {:.6}", m.estimate, m.std_error));
    o.metric("estimate", Metric::estimate(m.estimate, m.std_error));
    if q == 2 && d.n <= EXACT_HORIZON_LIMIT {
        o.metric("exact_second_moment", Metric::exact(exact_second_moment_report(&d)?.value));
    }
    if let Ok(pred) = subcritical_prediction(&d, q) {
        o.metric("subcritical_prediction", Metric::exact(pred));
    }
    o.details = json!({ "disorder": d });
    Ok(o)
}

fn second_moment_scan(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = &c.parameters;
    if p.n_values.is_empty() {
        return Err(invalid("N_values is empty"));
    }
    let target = if p.beta_hat < 1.0 {
        1.0 / (1.0 - p.beta_hat * p.beta_hat)
    } else {
        f64::INFINITY
    };
    let mut csv = String::from("N,exact,gap\n");
    let mut rows = Vec::new();
    let mut o = Outcome::new(String::new());
    for &n in &p.n_values {
        let r = exact_second_moment_report(&build_disorder(p.beta_hat, n)?)?;
        let gap = (r.value - target).abs();
        csv.push_str(&format!("{n},{},{gap}\n", r.value));
        o.metric(format!("exact_N={n}"), Metric::exact(r.value));
        o.metric(format!("gap_N={n}"), Metric::exact(gap));
        rows.push(json!({ "N": n, "report": r, "gap": gap }));
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r["gap"].as_f64().unwrap_or(f64::NAN)).collect();
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    o.summary = format!(
        "{} horizons, final gap {:.3e}, gap strictly decreasing: {shrinking}",
        rows.len(),
        gaps[gaps.len() - 1]
    );
    o.details = json!({ "limit": target, "rows": rows, "gap_strictly_decreasing": shrinking });
    o.csv = Some(csv);
    Ok(o)
}

fn desk_schedule(c: &ExperimentConfig) -> CliResult<Schedule> {
    let p = &c.parameters;
    p.steps()?;
    Ok(build_schedule(&p.tuple(), p.schedule_mode)?)
}

fn schedule(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = &c.parameters;
    let t = p.tuple();
    let mut o = Outcome::new(String::new());
    o.constraint_report = Some(check_parameters(&t));
    match p.n {
        Horizon::Steps(_) => {
            let s = build_schedule(&t, p.schedule_mode)?;
            let v = validate_lemma_2_1(&s, &t);
            let mut csv = String::from("k,l,o,L\n");
            for k in 1..s.l.len() {
                csv.push_str(&format!("{k},{},{},{}\n", s.l[k], s.o[k], s.big_l[k]));
            }
            o.csv = Some(csv);
            o.metric("K", Metric::exact(s.k as f64));
            o.metric("alpha_bar", Metric::exact(s.alpha_bar));
            if let Some(&l1) = s.l.get(1) {
                o.metric("l_1", Metric::exact(l1 as f64));
            }
            o.metric("lemma_failures", Metric::exact(v.failures().count() as f64));
            o.summary = format!("K = {}, l_1 = {}, {} lemma checks fail", s.k, s.l[1], v.failures().count());
            o.details = json!({ "schedule": s, "validation": v });
        }
        Horizon::Log { .. } => {
            let s = build_log_schedule(&t, p.schedule_mode)?;
            let v = validate_log_schedule(&s, &t);
            o.metric("K", Metric::exact(s.k as f64));
            o.metric("alpha_bar", Metric::exact(s.alpha_bar));
            o.metric("lemma_failures", Metric::exact(v.failures().count() as f64));
            o.summary = format!("log-domain K = {}, {} lemma checks fail", s.k, v.failures().count());
            o.details = json!({ "log_schedule": s, "validation": v });
        }
    }
    Ok(o)
}

fn geometry(c: &ExperimentConfig) -> CliResult<WindowGeometry> {
    let s = desk_schedule(c)?;
    let k = c.parameters.k;
    if k < 2 {
        // T_1 starts at time 0, where every walk still sits at its start.
        return Err(invalid("k must be at least 2"));
    }
    Ok(WindowGeometry::from_schedule(&s, k, c.parameters.m as f64)?)
}

fn pair_prob(c: &ExperimentConfig, stream: RngStream) -> CliResult<Outcome> {
    let g = geometry(c)?;
    let origin = [LatticePoint::ORIGIN; 2];
    let r = estimate_pair_probability(&g, origin, origin, c.replicates, stream)?;
    let f = window_formula(&HittingQuery::lattice_pair(g.start, g.start + g.len)?)?;
    let mut o = Outcome::new(format!(
        "p = {:.5} +- {:.5} (formula {:.5}) on [{}, {})",
        r.conditioned.estimate,
        r.conditioned.std_error,
        f.value,
        g.start,
        g.start + g.len
    ));
    for (name, e) in [
        ("conditioned", r.conditioned),
        ("unconditioned", r.unconditioned),
        ("unguarded", r.unguarded),
    ] {
        o.metric(name, Metric::estimate(e.estimate, e.std_error));
    }
    o.metric("window_formula", Metric::exact(f.value));
    o.metric("window_formula_budget", Metric::exact(f.error_budget));
    if let Ok(exact) = pair_meeting_exact(g.start, g.len) {
        o.metric("exact_free", Metric::exact(exact));
    }
    o.details = json!({ "report": r });
    Ok(o)
}

fn poisson(c: &ExperimentConfig, stream: RngStream) -> CliResult<Outcome> {
    let g = geometry(c)?;
    let q0 = c.parameters.tuple().q0() as usize;
    if q0 < 2 {
        return Err(invalid(format!("q0 = floor((1 - eps0) q) = {q0}, need at least 2")));
    }
    let origin = vec![LatticePoint::ORIGIN; q0];
    let r = poisson_experiment(&g, &origin, &origin, c.replicates, stream)?;
    let mut o = Outcome::new(format!(
        "q0 = {q0}: mu = {:.4}, TV = {:.4} +- {:.4}, Chen-Stein bound {:.4}",
        r.mu, r.empirical_tv, r.tv_std_error, r.chen_stein_bound
    ));
    o.metric("mu", Metric::estimate(r.mu, r.mu_std_error));
    o.metric("e1", Metric::exact(r.e1));
    o.metric("e2", Metric::exact(r.e2));
    o.metric("chen_stein_bound", Metric::estimate(r.chen_stein_bound, 2.0 * r.e_std_error));
    o.metric("empirical_tv", Metric::estimate(r.empirical_tv, r.tv_std_error));
    o.metric("propagated_error", Metric::exact(r.propagated_error));
    o.csv = Some(histogram_csv(&r.r_tilde_counts));
    o.details = json!({ "report": r });
    Ok(o)
}

fn hitting(c: &ExperimentConfig, stream: RngStream) -> CliResult<Outcome> {
    let p = &c.parameters;
    let q = HittingQuery::new(p.a, p.r, p.t1, p.t2)?;
    let mut o = Outcome::new(String::new());
    let mut parts = Vec::new();
    if let Ok(f) = window_formula(&q) {
        if p.r == 0.0 {
            o.metric("window_formula", Metric::exact(f.value));
            o.metric("window_formula_budget", Metric::exact(f.error_budget));
            parts.push(format!("window formula {:.5}", f.value));
        }
    }
    if p.t1 == 0.0 {
        if let Ok(v) = ratio_formula(p.a, p.r, p.t2) {
            o.metric("ratio_formula", Metric::exact(v));
            parts.push(format!("ratio formula {v:.5}"));
        }
    }
    let mut sim = None;
    if c.replicates > 0 {
        let cfg = BesselConfig::for_query(&q);
        let steps = (q.t2 - q.t1) / cfg.step;
        if steps > HITTING_MAX_STEPS {
            return Err(CliError::Core(Error::Capacity(format!(
                "{steps:.3e} base steps per path exceeds {HITTING_MAX_STEPS:.0e}; raise t1 or lower t2"
            ))));
        }
        let e = simulate_disc_hit(&q, &cfg, c.replicates, stream)?;
        o.metric("simulated", Metric::estimate(e.estimate.estimate, e.estimate.std_error));
        parts.push(format!("simulated {:.5} +- {:.5}", e.estimate.estimate, e.estimate.std_error));
        sim = Some(e);
    }
    if parts.is_empty() {
        return Err(CliError::Core(Error::Domain(
            "no formula applies (window needs r = 0 and a^2 < t1, ratio needs t1 = 0, a <= r and t2 > r^2) and replicates = 0"
                .into(),
        )));
    }
    o.summary = parts.join(", ");
    o.details = json!({ "query": q, "simulation": sim });
    Ok(o)
}

fn lclt(c: &ExperimentConfig) -> CliResult<Outcome> {
    let ts = &c.parameters.t_values;
    if ts.is_empty() {
        return Err(invalid("t_values is empty"));
    }
    if ts.contains(&0) {
        return Err(invalid("t_values must be positive"));
    }
    if let Some(&t) = ts.iter().find(|&&t| t > LCLT_MAX_T) {
        return Err(CliError::Core(Error::Capacity(format!("t = {t} outside 1..={LCLT_MAX_T}"))));
    }
    let mut csv = String::from("t,max_relative_error\n");
    let mut o = Outcome::new(String::new());
    let mut errs = Vec::new();
    for &t in ts {
        let e = lclt_max_relative_error(t);
        csv.push_str(&format!("{t},{e}\n"));
        o.metric(format!("max_relative_error_t={t}"), Metric::exact(e));
        errs.push(json!({ "t": t, "max_relative_error": e }));
    }
    o.summary = format!("max relative LCLT error over |x| <= 3 sqrt(t) at {} times", ts.len());
    o.details = json!({ "rows": errs });
    o.csv = Some(csv);
    Ok(o)
}

fn qlarge(c: &ExperimentConfig, stream: RngStream) -> CliResult<Outcome> {
    let p = &c.parameters;
    let d = build_disorder(p.beta_hat, p.steps()?)?;
    let q = q32(p.q)?;
    let log_bound = qlarge_lower_bound_log(&d, q)?;
    let m = mc_moment(&d, q, c.replicates, stream)?;
    let bound = log_bound.exp();
    let holds = m.estimate >= bound - 3.0 * m.std_error;
    let mut o = Outcome::new(format!(
        "E W^{q} = {:.6} +- {:.6} vs lower bound exp({log_bound:.4}) = {bound:.3e}: {}",
        m.estimate,
        m.std_error,
        if holds { "holds" } else { "violated" }
    ));
    o.metric("estimate", Metric::estimate(m.estimate, m.std_error));
    o.metric("lower_bound_log", Metric::exact(log_bound));
    o.metric("lower_bound", Metric::exact(bound));
    o.details = json!({ "disorder": d, "holds_within_3se": holds });
    Ok(o)
}

fn confinement(c: &ExperimentConfig, stream: RngStream) -> CliResult<Outcome> {
    let p = &c.parameters;
    let s = desk_schedule(c)?;
    let r = confinement_stats(&s, p.q, p.delta, p.epsilon0, c.replicates, stream)?;
    let mut csv = String::from("k,size,count\n");
    for (k, h) in r.per_k_g_size.iter().enumerate() {
        for (size, n) in h.iter().enumerate() {
            csv.push_str(&format!("{},{size},{n}\n", k + 1));
        }
    }
    let mut o = Outcome::new(format!(
        "P(D_N) = {:.5} +- {:.5} over K = {} blocks",
        r.d_n_estimate.estimate, r.d_n_estimate.std_error, r.k
    ));
    o.metric("D_N", Metric::estimate(r.d_n_estimate.estimate, r.d_n_estimate.std_error));
    for (k, a) in r.per_k_a.iter().enumerate() {
        o.metric(format!("A_{}", k + 1), Metric::estimate(a.estimate, a.std_error));
    }
    o.constraint_report = Some(check_parameters(&p.tuple()));
    o.details = json!({ "stats": r });
    o.csv = Some(csv);
    Ok(o)
}
