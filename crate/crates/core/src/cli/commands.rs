use std::fs::File;
use std::path::Path;

use log::{info, warn};

use crate::equilibrium::{solve_equilibrium, EquilibriumKind};
use crate::error::Error;
use crate::loadcontrol::{
    achievable_one_fixed, achievable_two_fixed, eps_optimal_policy, free_parameter_range, h_envelope, lambda_star,
    linspace, optimal_profit_constrained_with, risk_sweep as sweep_risk, trace_pricing_curve, AchievableInterval,
    EpsOptimal, OneFixed, ProfitCell, ProfitConstraint,
};
use crate::model::{k_value, LeadTime};
use crate::sim::verify_equilibrium;

use super::config::{ExperimentConfig, Fixed};
use super::plot::{line_chart, Series};
use super::{exit, CliError};

pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub out: &'a Path,
    pub plot: Option<&'a Path>,
    pub seed: Option<u64>,
}

type CmdResult = Result<u8, CliError>;

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    info!("writing {}", path.display());
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>, missing: &str) -> String {
    x.map(num).unwrap_or_else(|| missing.to_string())
}

fn lead(d: LeadTime) -> String {
    match d {
        LeadTime::Finite(d) => num(d),
        LeadTime::NoCompensation => "inf".into(),
    }
}

fn end(closed: bool) -> &'static str {
    if closed {
        "closed"
    } else {
        "open"
    }
}

fn fixed_label(f: OneFixed) -> String {
    match f {
        OneFixed::Price(p) => format!("p={p}"),
        OneFixed::Compensation(l) => format!("l={l}"),
        OneFixed::LeadTime(d) => format!("d={d}"),
    }
}

fn maybe_plot(ctx: &Context, title: &str, x: &str, y: &str, series: &[Series]) -> Result<(), CliError> {
    if let Some(path) = ctx.plot {
        line_chart(path, title, x, y, series)?;
        println!("plot        {}", path.display());
    }
    Ok(())
}

pub fn equilibrium(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let params = &cfg.params;
    let u = cfg.utility_model()?;
    let policy = cfg.policy()?;
    let outcome = solve_equilibrium(&policy, params, &u)?;

    let (kind, rate, lo, hi) = match outcome.kind {
        EquilibriumKind::Unique(x) => ("unique", num(x), String::new(), String::new()),
        EquilibriumKind::Continuum(iv) => ("continuum", String::new(), num(iv.lo), num(iv.hi)),
        EquilibriumKind::None => ("none", String::new(), String::new(), String::new()),
    };
    let show = |v: Option<crate::model::ExtendedValue>| v.map(|k| k.to_string()).unwrap_or_default();
    println!("policy      {policy}");
    match outcome.kind {
        EquilibriumKind::Unique(x) => println!("outcome     unique, lambda = {x}"),
        EquilibriumKind::Continuum(iv) => println!("outcome     continuum {iv}"),
        EquilibriumKind::None => println!("outcome     none (everyone joins and the queue is unstable)"),
    }
    println!("case        {}", outcome.case);
    println!("K(0)        {}", show(outcome.k_at_zero));
    println!("K(mu-)      {}", outcome.k_limit);
    println!("K(lambda)   {}", show(outcome.k_at_rate));

    let mut w = writer(&ctx.out.join("equilibrium.csv"))?;
    w.write_record([
        "d", "p", "l", "kind", "lambda", "lambda_lo", "lambda_hi", "case", "k_at_zero", "k_limit", "k_at_rate",
    ])?;
    w.write_record([
        lead(policy.lead_time),
        num(policy.price),
        num(policy.compensation()),
        kind.into(),
        rate,
        lo,
        hi,
        outcome.case.label().into(),
        show(outcome.k_at_zero),
        outcome.k_limit.to_string(),
        show(outcome.k_at_rate),
    ])?;
    w.flush()?;

    if ctx.plot.is_some() {
        let top = params.rate_cap();
        let pts = linspace(0.0, top, 200)
            .into_iter()
            .filter_map(|x| k_value(x, &policy, params, &u).ok().and_then(|k| k.finite()).map(|k| (x, k)))
            .collect();
        maybe_plot(ctx, &format!("K(lambda) under {policy}"), "lambda", "K", &[Series::new("K", pts)])?;
    }
    Ok(if outcome.kind == EquilibriumKind::None {
        exit::NO_EQUILIBRIUM
    } else {
        exit::SUCCESS
    })
}

fn interval_record(iv: &AchievableInterval) -> [String; 4] {
    if iv.empty {
        return [String::new(), String::new(), "empty".into(), "empty".into()];
    }
    [num(iv.lo), num(iv.hi), end(iv.lo_closed).into(), end(iv.hi_closed).into()]
}

pub fn range(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let params = &cfg.params;
    let u = cfg.utility_model()?;
    let fixed = cfg.fixed_parameters()?;
    let interval = match fixed {
        Fixed::One(f) => achievable_one_fixed(f, params, &u)?,
        Fixed::Two(f) => achievable_two_fixed(f, params, &u)?,
    };
    println!("achievable  {interval}");
    let mut w = writer(&ctx.out.join("range.csv"))?;
    w.write_record(["lo", "hi", "lo_end", "hi_end"])?;
    w.write_record(interval_record(&interval))?;
    w.flush()?;

    let Fixed::One(one) = fixed else {
        return Ok(exit::SUCCESS);
    };
    let lambdas = match &cfg.lambdas {
        Some(ls) => ls.clone(),
        None => interval.grid(cfg.lambda_points(), params.service_rate),
    };
    let free = match one {
        OneFixed::Price(_) => "l",
        OneFixed::Compensation(_) | OneFixed::LeadTime(_) => "p",
    };
    let mut w = writer(&ctx.out.join("range_by_lambda.csv"))?;
    w.write_record(["lambda", "free", "lo", "hi"])?;
    let mut lows = Vec::new();
    let mut highs = Vec::new();
    for &lambda in &lambdas {
        match free_parameter_range(one, lambda, params, &u) {
            Ok(r) => {
                w.write_record([num(lambda), free.into(), num(r.lo), num(r.hi)])?;
                lows.push((lambda, r.lo));
                highs.push((lambda, r.hi));
            }
            Err(Error::NotAchievable { .. } | Error::SupremumNotAttained { .. }) => {
                w.write_record([num(lambda), free.into(), "NA".into(), "NA".into()])?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    w.flush()?;
    maybe_plot(
        ctx,
        &format!("range of {free} per input rate, {}", fixed_label(one)),
        "lambda",
        free,
        &[Series::new(format!("min {free}"), lows), Series::new(format!("max {free}"), highs)],
    )?;
    Ok(exit::SUCCESS)
}

pub fn curve(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let params = &cfg.params;
    let u = cfg.utility_model()?;
    let Fixed::One(fixed) = cfg.fixed_parameters()? else {
        return Err(CliError::Config("`curve` fixes exactly one parameter".into()));
    };
    let (f1, f2) = fixed.free_names();
    let lambdas = cfg.lambdas.clone().unwrap_or_default();
    let mut series = Vec::new();
    for lambda in lambdas {
        let curve = match trace_pricing_curve(fixed, lambda, cfg.curve_points(), params, &u) {
            Ok(c) => c,
            Err(e @ Error::NotAchievable { .. }) => {
                warn!("skipping lambda={lambda}: {e}");
                println!("lambda={lambda}  skipped: {e}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let name = format!("curve_{}_lambda_{lambda}.csv", fixed.name());
        let mut w = writer(&ctx.out.join(&name))?;
        w.write_record([f1, f2, "profit", "is_maximizer"])?;
        for (i, pt) in curve.points.iter().enumerate() {
            let (a, b) = pt.coordinates(fixed);
            let mark = if i == curve.maximizer { "1" } else { "0" };
            w.write_record([num(a), num(b), num(pt.profit), mark.into()])?;
        }
        w.flush()?;
        let best = curve.grid_best();
        let (a, b) = best.coordinates(fixed);
        println!("lambda={lambda}  max profit {} at {f1}={a}, {f2}={b}  -> {name}", best.profit);
        if let Some(r) = curve.refined {
            let (a, b) = r.coordinates(fixed);
            println!("            refined {} at {f1}={a}, {f2}={b}", r.profit);
        }
        series.push(Series::new(
            format!("lambda={lambda}"),
            curve.points.iter().map(|p| p.coordinates(fixed)).collect(),
        ));
    }
    maybe_plot(ctx, &format!("pricing curves, {}", fixed_label(fixed)), f1, f2, &series)?;
    Ok(exit::SUCCESS)
}

fn peak(cells: &[ProfitCell]) -> Option<(f64, f64)> {
    cells
        .iter()
        .filter_map(|c| c.profit.map(|g| (c.lambda, g)))
        .fold(None, |best, (x, g)| match best {
            Some((_, bg)) if bg >= g => best,
            _ => Some((x, g)),
        })
}

pub fn profit(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let params = &cfg.params;
    let u = cfg.utility_model()?;
    let [fp, fl, fd] = cfg.profit_fixed()?;
    let lambdas = match &cfg.lambdas {
        Some(ls) => ls.clone(),
        None => {
            let top = params.max_feasible_rate();
            let iv = if params.market_binds() {
                AchievableInterval::closed(0.0, top)
            } else {
                AchievableInterval::half_open(0.0, params.service_rate)
            };
            iv.grid(cfg.lambda_points(), params.service_rate)
        }
    };
    let constraints = [
        ("G_CF", ProfitConstraint::CompensationFree),
        ("G_fixed_p", ProfitConstraint::One(fp)),
        ("G_fixed_l", ProfitConstraint::One(fl)),
        ("G_fixed_d", ProfitConstraint::One(fd)),
        ("H", ProfitConstraint::Envelope),
    ];
    let columns = constraints
        .iter()
        .map(|(_, c)| optimal_profit_constrained_with(*c, &lambdas, params, &u, cfg.curve_points()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = writer(&ctx.out.join("profit.csv"))?;
    let mut header = vec!["lambda"];
    header.extend(constraints.iter().map(|(n, _)| *n));
    w.write_record(&header)?;
    for (i, &lambda) in lambdas.iter().enumerate() {
        let mut row = vec![num(lambda)];
        row.extend(columns.iter().map(|col| opt(col[i].profit, "")));
        w.write_record(&row)?;
    }
    w.flush()?;

    for ((name, _), col) in constraints.iter().zip(&columns) {
        match peak(col) {
            Some((x, g)) => println!("{name:<10}  peak {g} at lambda={x}"),
            None => println!("{name:<10}  no achievable rate on the grid"),
        }
    }
    let star = lambda_star(params);
    println!("lambda*     {star}, H(lambda*) = {}", h_envelope(star, params)?);
    if let (Some((_, cf)), Some((_, h))) = (peak(&columns[0]), peak(&columns[4])) {
        println!("CF/H        {} (gap {:.1}%)", cf / h, 100.0 * (1.0 - cf / h));
    }
    let series: Vec<Series> = constraints
        .iter()
        .zip(&columns)
        .map(|((name, _), col)| Series::new(*name, col.iter().filter_map(|c| c.profit.map(|g| (c.lambda, g))).collect()))
        .collect();
    maybe_plot(ctx, "optimal profit per input rate", "lambda", "profit", &series)?;
    Ok(exit::SUCCESS)
}

pub fn risk_sweep(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let params = &cfg.params;
    let Fixed::Two(fixed) = cfg.fixed_parameters()? else {
        return Err(CliError::Config("`risk-sweep` fixes exactly two parameters".into()));
    };
    let lambdas = cfg.lambdas.clone().unwrap_or_default();
    let r_grid = cfg.r_grid();
    let rows = sweep_risk(fixed, &lambdas, &r_grid, params)?;
    let free = fixed.free_name();
    let mut w = writer(&ctx.out.join("risk_sweep.csv"))?;
    w.write_record(["r", "lambda", free])?;
    for row in &rows {
        w.write_record([num(row.r), num(row.lambda), opt(row.value, "NA")])?;
    }
    w.flush()?;
    for &lambda in &lambdas {
        let reach: Vec<&_> = rows.iter().filter(|r| r.lambda == lambda && r.value.is_some()).collect();
        match (reach.first(), reach.last()) {
            (Some(a), Some(b)) => println!(
                "lambda={lambda}  achievable for {} of {} r values; {free} from {} (r={}) to {} (r={})",
                reach.len(),
                r_grid.len(),
                opt(a.value, "NA"),
                a.r,
                opt(b.value, "NA"),
                b.r
            ),
            _ => println!("lambda={lambda}  not achievable for any r"),
        }
    }
    let series: Vec<Series> = lambdas
        .iter()
        .map(|&lambda| {
            let pts = rows
                .iter()
                .filter(|r| r.lambda == lambda)
                .filter_map(|r| r.value.map(|v| (r.r, v)))
                .collect();
            Series::new(format!("lambda={lambda}"), pts)
        })
        .collect();
    maybe_plot(ctx, &format!("{free} against risk aversion"), "r", free, &series)?;
    Ok(exit::SUCCESS)
}

pub fn simulate(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let params = &cfg.params;
    let u = cfg.utility_model()?;
    let policy = cfg.policy()?;
    let settings = cfg.sim.unwrap_or_default().settings(ctx.seed);
    let rep = verify_equilibrium(&policy, params, &u, &settings)?;
    let r = &rep.report;

    println!("policy      {policy}");
    println!("equilibrium {}", rep.equilibrium_rate);
    println!("simulated   lambda={} n={} warmup={} seed={}", rep.simulated_rate, rep.config.n_customers, rep.config.warmup, rep.config.seed);
    println!("sojourn     {} ± {} (analytic {})", r.sojourn.mean, r.sojourn.half_width, rep.analytic_sojourn);
    println!("lateness    {} ± {} (analytic {})", r.lateness.mean, r.lateness.half_width, rep.analytic_lateness);
    println!("K           {} ± {}", r.k.mean, r.k.half_width);
    println!("utilization {} ± {}", r.utilization.mean, r.utilization.half_width);
    println!("KS          D={} p={} (n={}, every {}th)", rep.ks.statistic, rep.ks.p_value, rep.ks.n, rep.ks.thinning);
    println!("verdict     {}", if rep.passed { "pass" } else { "fail" });

    let mut w = writer(&ctx.out.join("simulate.csv"))?;
    w.write_record(["metric", "estimate", "half_width", "std_error", "analytic"])?;
    let rows = [
        ("sojourn", r.sojourn, Some(rep.analytic_sojourn)),
        ("lateness", r.lateness, Some(rep.analytic_lateness)),
        ("k", r.k, (settings.lambda_offset == 0.0).then_some(0.0)),
        ("utilization", r.utilization, Some(rep.simulated_rate / params.service_rate)),
    ];
    for (name, e, analytic) in rows {
        w.write_record([name.into(), num(e.mean), num(e.half_width), num(e.std_error), opt(analytic, "")])?;
    }
    w.flush()?;

    let mut w = writer(&ctx.out.join("simulate_summary.csv"))?;
    w.write_record(["key", "value"])?;
    let summary = [
        ("equilibrium_rate", num(rep.equilibrium_rate)),
        ("simulated_rate", num(rep.simulated_rate)),
        ("n_customers", rep.config.n_customers.to_string()),
        ("warmup", rep.config.warmup.to_string()),
        ("seed", rep.config.seed.to_string()),
        ("batches", rep.config.batches.to_string()),
        ("n_effective", r.n_effective.to_string()),
        ("ks_statistic", num(rep.ks.statistic)),
        ("ks_p_value", num(rep.ks.p_value)),
        ("ks_n", rep.ks.n.to_string()),
        ("k_contains_zero", rep.k_contains_zero.to_string()),
        ("passed", rep.passed.to_string()),
    ];
    for (k, v) in summary {
        w.write_record([k.to_string(), v])?;
    }
    w.flush()?;
    Ok(if rep.passed { exit::SUCCESS } else { exit::SIMULATION_FAILED })
}

fn write_eps(ctx: &Context, e: &EpsOptimal, status: &str) -> Result<(), CliError> {
    let mut w = writer(&ctx.out.join("epsopt.csv"))?;
    w.write_record(["lambda_star", "d", "p", "l", "profit", "envelope", "gap", "delta", "status"])?;
    w.write_record([
        num(e.lambda),
        lead(e.policy.lead_time),
        num(e.policy.price),
        num(e.policy.compensation()),
        num(e.profit),
        num(e.envelope),
        num(e.gap()),
        num(e.delta),
        status.into(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn epsopt(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let u = cfg.utility_model()?;
    let epsilon = cfg.epsilon.unwrap_or_default();
    let (e, status) = match eps_optimal_policy(epsilon, &cfg.params, &u) {
        Ok(e) => (e, "ok"),
        Err(Error::EpsilonUnderflow { best, best_gap, .. }) => {
            warn!("epsilon {epsilon:e} is below the attainable resolution; best gap {best_gap:e}");
            println!("warning     epsilon {epsilon:e} not reached; reporting the best policy found");
            (*best, "underflow")
        }
        Err(e) => return Err(e.into()),
    };
    println!("lambda*     {}", e.lambda);
    println!("policy      {}", e.policy);
    println!("profit      {}", e.profit);
    println!("H(lambda*)  {}", e.envelope);
    println!("gap         {}", e.gap());
    write_eps(ctx, &e, status)?;
    Ok(exit::SUCCESS)
}
