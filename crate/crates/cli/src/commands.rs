//! Subcommand implementations. Each returns an [`Outcome`]; [`emit`] writes
//! the CSV, JSON and SVG artifacts named in the config.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use grid_entropy_core::estimators::{
    estimate_entropy_level, estimate_entropy_orderstats, estimate_from_cost_sums, estimate_from_order_stats,
    log_cost_sum, order_stat, rank_for, DistanceTable, EntropyEstimate, Ladder, OrderStatsPlan,
};
use grid_entropy_core::lattice::{path_weight, Rational};
use grid_entropy_core::polymer::{
    empirical_convergence_diagnostic, gibbs_from_ladders, last_passage, DpMode, DpTable, Ensemble, LevelTable,
};
use grid_entropy_core::variational::{
    bernoulli_exponent_check, histogram_grid_measures, integral, kl_budget_check, kl_budget_check_atomic,
    mixture_measures, tilt_measures, variational_report, Candidate, CandidateFamily, ConjugateSearch, Recipe,
};
use grid_entropy_core::{
    path_count, prokhorov_brute, prokhorov_distance, shannon_entropy, CounterRng, Direction, Environment, Path,
};
use rayon::ThreadPool;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::formats::{self, estimate_to_json, real, CsvRow};
use crate::parallel::{self, par_map};
use crate::runs::{self, ConjugatePlan};
use crate::spec::Target;
use crate::{plot, verify};

pub const COMMANDS: &[&str] = &[
    "metric",
    "count",
    "orderstats",
    "entropy-eps",
    "entropy-level",
    "gibbs",
    "lpp",
    "sample",
    "conjugate",
    "klbudget",
    "bernoulli",
    "variational",
    "verify",
    "plot",
];

/// Result of one subcommand.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// Human-readable report for stdout.
    pub text: String,
    pub rows: Vec<CsvRow>,
    /// JSON summary, written under `result` next to the resolved config.
    pub result: Value,
    /// Set by `verify` when a criterion fails.
    pub verify_failed: bool,
}

struct Rows {
    method: String,
    dim: usize,
    q_or_t: String,
    nu_id: String,
    rows: Vec<CsvRow>,
}

impl Rows {
    fn new(method: &str, dim: usize, q_or_t: impl ToString, nu_id: &str) -> Self {
        Self {
            method: method.to_string(),
            dim,
            q_or_t: q_or_t.to_string(),
            nu_id: nu_id.to_string(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, seed: u64, n: u64, param: f64, raw: f64, extrapolated: f64, band: f64) {
        self.rows.push(CsvRow {
            method: self.method.clone(),
            dim: self.dim,
            seed,
            q_or_t: self.q_or_t.clone(),
            nu_id: self.nu_id.clone(),
            n,
            epsilon_or_alpha: param,
            raw_value: raw,
            extrapolated,
            band,
        });
    }
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let pool = parallel::pool();
    match cfg.command.as_str() {
        "metric" => metric(cfg),
        "count" => count(cfg),
        "orderstats" => orderstats(cfg, &pool),
        "entropy-eps" => entropy_eps(cfg, &pool),
        "entropy-level" => entropy_level(cfg, &pool),
        "gibbs" => gibbs(cfg, &pool),
        "lpp" => lpp(cfg, &pool),
        "sample" => sample(cfg, &pool),
        "conjugate" => conjugate(cfg, &pool),
        "klbudget" => klbudget(cfg, &pool),
        "bernoulli" => bernoulli(cfg),
        "variational" => variational(cfg, &pool),
        "verify" => verify_command(cfg),
        "plot" => plot_command(cfg),
        other => Err(CliError::Config(format!("unknown command `{other}`"))),
    }
}

/// Writes the artifacts requested by `csv`, `json` and `svg`.
pub fn emit(cfg: &ExperimentConfig, outcome: &Outcome) -> CliResult<()> {
    if cfg.command != "plot" {
        if let Some(path) = cfg.path("csv") {
            formats::write_csv(&path, &cfg.pairs(), &outcome.rows)?;
        }
        if let Some(path) = cfg.path("svg") {
            let svg = plot::render(&title(cfg), &outcome.rows);
            std::fs::write(&path, svg).map_err(|e| CliError::io(&path, e))?;
        }
    }
    if let Some(path) = cfg.path("json") {
        formats::write_json(&path, &json!({ "config": cfg.to_json(), "result": outcome.result }))?;
    }
    Ok(())
}

fn title(cfg: &ExperimentConfig) -> String {
    let mut t = cfg.command.clone();
    for key in ["q", "t", "nu"] {
        if let Some(v) = cfg.raw(key) {
            let _ = write!(t, " {key}={v}");
        }
    }
    t
}

fn direction_for(cfg: &ExperimentConfig, dim: usize) -> CliResult<Direction> {
    let q = cfg.direction()?;
    if q.dim() != dim {
        return Err(CliError::field("q", format!("has {} components but D = {dim}", q.dim())));
    }
    Ok(q)
}

fn steps_string(path: &Path) -> String {
    path.steps.iter().map(|&i| char::from(b'0' + i as u8)).collect()
}

fn resolution(cfg: &ExperimentConfig, target: &Target) -> CliResult<f64> {
    match cfg.raw("resolution") {
        Some(_) => cfg.unit("resolution"),
        None => Ok(target.resolution),
    }
}

fn metric(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let mu = cfg.target("mu")?;
    let nu = cfg.target("nu")?;
    let rho = prokhorov_distance(&mu.measure, &nu.measure);
    let brute = prokhorov_brute(&mu.measure, &nu.measure).ok();
    let tv = mu.measure.tv_distance(&nu.measure);
    let mut text = format!("{rho}\n");
    if let Some(b) = brute {
        let _ = writeln!(text, "brute {b}");
    }
    Ok(Outcome {
        text,
        result: json!({ "rho": rho, "brute": brute, "tv": tv }),
        ..Outcome::default()
    })
}

fn count(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let dim = cfg.dim()?;
    if cfg.raw("endpoint").is_some() {
        let end = cfg.endpoint()?;
        if end.dim() != dim {
            return Err(CliError::field("endpoint", format!("has {} coordinates but D = {dim}", end.dim())));
        }
        let c = path_count(&end);
        return Ok(Outcome {
            text: format!("{c}\n"),
            result: json!({ "endpoint": end.to_string(), "count": c.to_string() }),
            ..Outcome::default()
        });
    }
    let q = direction_for(cfg, dim)?;
    let mut text = String::new();
    let mut counts = Vec::new();
    for n in cfg.scales()? {
        let c = path_count(&q.floor_scaled(n));
        let _ = writeln!(text, "{n} {c}");
        counts.push(json!({ "n": n, "count": c.to_string() }));
    }
    Ok(Outcome {
        text,
        result: json!({ "q": q.to_string(), "counts": counts, "entropy": shannon_entropy(&q) }),
        ..Outcome::default()
    })
}

struct DirectionRun {
    dim: usize,
    q: Direction,
    target: Target,
    seeds: Vec<u64>,
    scales: Vec<u64>,
    budget: u64,
}

impl DirectionRun {
    fn from(cfg: &ExperimentConfig) -> CliResult<Self> {
        let dim = cfg.dim()?;
        Ok(Self {
            dim,
            q: direction_for(cfg, dim)?,
            target: cfg.target("nu")?,
            seeds: cfg.seeds()?,
            scales: cfg.scales()?,
            budget: cfg.integer("budget")?,
        })
    }

    fn reachable(&self) -> bool {
        (self.target.measure.total_mass() - self.q.l1()).abs() <= 1e-9
    }

    fn table(&self, pool: &ThreadPool) -> CliResult<DistanceTable> {
        Ok(runs::direction_table(
            pool,
            self.dim,
            &self.seeds,
            &self.scales,
            self.budget,
            &self.q,
            &self.target.measure,
        )?)
    }

    fn ladder(&self) -> Ladder {
        Ladder {
            dim: self.dim,
            seeds: self.seeds.clone(),
            scales: self.scales.clone(),
            budget: self.budget,
        }
    }
}

fn summary_text(e: &EntropyEstimate) -> String {
    format!(
        "value {}\nextrapolated {}\nband {}\n",
        e.value, e.extrapolated, e.band
    )
}

fn orderstats(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let run = DirectionRun::from(cfg)?;
    let h = shannon_entropy(&run.q);
    let plan = OrderStatsPlan {
        alphas: cfg.alphas(h)?,
        resolution: resolution(cfg, &run.target)?,
    };
    let mut rows = Rows::new("orderstats", run.dim, &run.q, &run.target.id);
    let estimate = if run.reachable() {
        let table = run.table(pool)?;
        let est = estimate_from_order_stats(&table, &plan, h);
        for (s, &seed) in run.seeds.iter().enumerate() {
            for (k, &n) in run.scales.iter().enumerate() {
                for &alpha in &plan.alphas {
                    let raw = order_stat(&table.rows[s][k], rank_for(alpha, n));
                    rows.push(seed, n, alpha, raw, est.extrapolated, est.band);
                }
            }
        }
        est
    } else {
        estimate_entropy_orderstats(&run.ladder(), &run.q, &run.target.measure, &plan)?
    };
    Ok(Outcome {
        text: summary_text(&estimate),
        rows: rows.rows,
        result: estimate_to_json(&estimate),
        verify_failed: false,
    })
}

fn push_cost_rows(rows: &mut Rows, table: &DistanceTable, seeds: &[u64], eps: &[f64], est: &EntropyEstimate) {
    for (s, &seed) in seeds.iter().enumerate() {
        for (k, &n) in table.scales.iter().enumerate() {
            for (j, &e) in eps.iter().enumerate() {
                let a = est.diagnostics.eps_limits.get(j).map_or(f64::NAN, |p| p.1);
                rows.push(seed, n, e, log_cost_sum(&table.rows[s][k], n, e), a, est.band);
            }
        }
    }
}

fn entropy_eps(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let run = DirectionRun::from(cfg)?;
    let eps = cfg.eps()?;
    let table = run.table(pool)?;
    let est = estimate_from_cost_sums(&table, &eps, shannon_entropy(&run.q))?;
    let mut rows = Rows::new("eps_sum", run.dim, &run.q, &run.target.id);
    push_cost_rows(&mut rows, &table, &run.seeds, &eps, &est);
    Ok(Outcome {
        text: summary_text(&est),
        rows: rows.rows,
        result: estimate_to_json(&est),
        verify_failed: false,
    })
}

/// Level sums that fall below the sum over paths to the balanced endpoint.
pub fn level_dominance_violations(level: &DistanceTable, directed: &DistanceTable, eps: &[f64]) -> usize {
    let mut violations = 0;
    for (lrow, drow) in level.rows.iter().zip(&directed.rows) {
        for (k, &n) in level.scales.iter().enumerate() {
            for &e in eps {
                if log_cost_sum(&lrow[k], n, e) < log_cost_sum(&drow[k], n, e) - 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    violations
}

fn entropy_level(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let dim = cfg.dim()?;
    let target = cfg.target("nu")?;
    let t = match cfg.raw("t") {
        Some(_) => cfg.level()?,
        None => Rational::integer(1),
    };
    if (t.to_f64() - target.measure.total_mass()).abs() > 1e-9 {
        return Err(CliError::field("t", "must equal the total mass of nu"));
    }
    let seeds = cfg.seeds()?;
    let scales = cfg.scales()?;
    let budget = cfg.integer("budget")?;
    let eps = cfg.eps()?;
    if t.num() == 0 {
        let est = estimate_entropy_level(&Ladder::new(dim, seeds, scales), t, &target.measure, &eps)?;
        return Ok(Outcome {
            text: summary_text(&est),
            result: estimate_to_json(&est),
            ..Outcome::default()
        });
    }
    let step = dim as u64 * t.den();
    if let Some(&bad) = scales.iter().find(|&&n| (n * t.num()) % step != 0) {
        return Err(CliError::field(
            "n",
            format!("n = {bad}: n t / D must be an integer so the balanced endpoint lies on the level"),
        ));
    }
    let level = runs::level_table(pool, dim, &seeds, &scales, budget, t, &target.measure)?;
    let mut est = estimate_from_cost_sums(&level, &eps, t.to_f64() * grid_entropy_core::math::ln(dim as f64))?;
    let ell = Direction::balanced(dim, t)?;
    let directed = runs::direction_table(pool, dim, &seeds, &scales, budget, &ell, &target.measure)?;
    let dir_est = estimate_from_cost_sums(&directed, &eps, shannon_entropy(&ell))?;
    est.diagnostics.cross_check = Some((est.value - dir_est.value).abs());
    let violations = level_dominance_violations(&level, &directed, &eps);

    let mut rows = Rows::new("eps_sum_level", dim, t, &target.id);
    push_cost_rows(&mut rows, &level, &seeds, &eps, &est);
    let mut drows = Rows::new("eps_sum", dim, &ell, &target.id);
    push_cost_rows(&mut drows, &directed, &seeds, &eps, &dir_est);
    rows.rows.extend(drows.rows);
    let mut text = summary_text(&est);
    let _ = writeln!(text, "balanced direction {} value {}", ell, dir_est.value);
    let _ = writeln!(text, "level dominance violations {violations}");
    Ok(Outcome {
        text,
        rows: rows.rows,
        result: json!({
            "level": estimate_to_json(&est),
            "direction": estimate_to_json(&dir_est),
            "dominance_violations": violations,
        }),
        verify_failed: false,
    })
}

fn ensemble(cfg: &ExperimentConfig, dim: usize) -> CliResult<(Ensemble, String)> {
    if cfg.raw("q").is_some() {
        let q = direction_for(cfg, dim)?;
        let label = q.to_string();
        Ok((Ensemble::Direction(q), label))
    } else {
        Ok((Ensemble::Level, "level".to_string()))
    }
}

fn gibbs(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let dim = cfg.dim()?;
    let (ens, label) = ensemble(cfg, dim)?;
    let tau = cfg.tau()?;
    let beta = cfg.real("beta")?;
    let scales = cfg.scales()?;
    let seeds = cfg.seeds()?;
    let ladders = runs::free_energy_ladders(pool, &ens, dim, beta, &tau, &scales, &seeds);
    let g = gibbs_from_ladders(&ladders)?;
    let mut rows = Rows::new("gibbs", dim, &label, cfg.raw("tau").unwrap_or("zero"));
    for (ladder, &seed) in ladders.iter().zip(&seeds) {
        for &(n, v) in ladder {
            rows.push(seed, n, beta, v, g.value, g.band);
        }
    }
    if let (Some(path), Ensemble::Direction(q)) = (cfg.path("dump"), &ens) {
        let end = q.floor_scaled(*scales.last().expect("nonempty ladder"));
        let table = DpTable::point_to_point(&Environment::new(seeds[0], dim), &end, &tau, DpMode::Softmax { beta });
        formats::write_dump(&path, &table)?;
    }
    Ok(Outcome {
        text: format!("value {}\nband {}\n", g.value, g.band),
        rows: rows.rows,
        result: json!({
            "value": real(g.value),
            "band": real(g.band),
            "per_seed": formats::reals(&g.per_seed),
            "n_ladder": g.n_ladder.iter().map(|&(n, v)| json!([n, real(v)])).collect::<Vec<_>>(),
        }),
        verify_failed: false,
    })
}

fn endpoints(cfg: &ExperimentConfig, dim: usize) -> CliResult<Vec<(u64, grid_entropy_core::LatticePoint)>> {
    if cfg.raw("endpoint").is_some() {
        let end = cfg.endpoint()?;
        if end.dim() != dim {
            return Err(CliError::field("endpoint", format!("has {} coordinates but D = {dim}", end.dim())));
        }
        Ok(vec![(end.l1(), end)])
    } else {
        let q = direction_for(cfg, dim)?;
        Ok(cfg.scales()?.into_iter().map(|n| (n, q.floor_scaled(n))).collect())
    }
}

fn lpp(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let dim = cfg.dim()?;
    let tau = cfg.tau()?;
    let seeds = cfg.seeds()?;
    let ends = endpoints(cfg, dim)?;
    let label = cfg.raw("q").or(cfg.raw("endpoint")).unwrap_or_default().to_string();
    let tasks: Vec<(u64, usize)> = seeds.iter().flat_map(|&s| (0..ends.len()).map(move |k| (s, k))).collect();
    let results = par_map(pool, &tasks, |&(seed, k)| last_passage(&Environment::new(seed, dim), &ends[k].1, &tau));
    let mut text = String::new();
    let mut rows = Rows::new("lpp", dim, &label, cfg.raw("tau").unwrap_or("zero"));
    let mut json_rows = Vec::new();
    let last = ends.len() - 1;
    let finals: Vec<f64> = tasks
        .iter()
        .zip(&results)
        .filter(|((_, k), _)| *k == last)
        .map(|(_, (v, _))| v / ends[last].0.max(1) as f64)
        .collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let band = if finals.len() > 1 {
        let var = finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (finals.len() - 1) as f64;
        2.0 * (var / finals.len() as f64).sqrt()
    } else {
        0.0
    };
    for (&(seed, k), (value, path)) in tasks.iter().zip(&results) {
        let (n, end) = &ends[k];
        let steps = steps_string(path);
        let _ = writeln!(text, "seed {seed} endpoint {end} passage {value} path {steps}");
        rows.push(seed, *n, 0.0, value / (*n).max(1) as f64, mean, band);
        json_rows.push(json!({ "seed": seed, "endpoint": end.to_string(), "passage": value, "path": steps }));
    }
    if let Some(path) = cfg.path("dump") {
        let table = DpTable::point_to_point(&Environment::new(seeds[0], dim), &ends[last].1, &tau, DpMode::MaxPlus);
        formats::write_dump(&path, &table)?;
    }
    Ok(Outcome {
        text,
        rows: rows.rows,
        result: json!({ "runs": json_rows, "time_constant": real(mean), "band": real(band) }),
        verify_failed: false,
    })
}

fn sample(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let dim = cfg.dim()?;
    let tau = cfg.tau()?;
    let beta = cfg.real("beta")?;
    let samples = cfg.count("samples")?;
    let key = cfg.integer("seed")?;
    let env_seed = cfg.seeds()?[0];
    let env = Environment::new(env_seed, dim);

    if cfg.raw("endpoint").is_none() && cfg.raw("q").is_some() {
        // convergence diagnostic along the scale ladder
        let q = direction_for(cfg, dim)?;
        let target = cfg.target("nu")?;
        let scales = cfg.scales()?;
        let report =
            empirical_convergence_diagnostic(&env, &q, beta, &tau, &scales, samples, key, 128, std::slice::from_ref(&target.measure))?;
        let mut rows = Rows::new("polymer_mean", dim, &q, &target.id);
        let mut text = String::new();
        for r in &report {
            rows.push(env_seed, r.n, beta, r.to_candidates[0], f64::NAN, 0.0);
            let _ = writeln!(
                text,
                "n {} rho_to_nu {} rho_to_next {}",
                r.n,
                r.to_candidates[0],
                r.to_next.map_or("-".to_string(), |x| x.to_string())
            );
        }
        let result = json!({
            "rows": report.iter().map(|r| json!({
                "n": r.n,
                "rho_to_nu": r.to_candidates[0],
                "rho_to_next": r.to_next,
                "mean_measure": serde_json::from_str::<Value>(&formats::histogram_to_json(&r.mean_measure)).expect("valid json"),
            })).collect::<Vec<_>>()
        });
        return Ok(Outcome {
            text,
            rows: rows.rows,
            result,
            verify_failed: false,
        });
    }

    let indices: Vec<u64> = (0..samples as u64).collect();
    let (paths, log_z): (Vec<String>, f64) = if cfg.raw("endpoint").is_some() {
        let end = cfg.endpoint()?;
        if end.dim() != dim {
            return Err(CliError::field("endpoint", "dimension does not match D"));
        }
        let table = DpTable::point_to_point(&env, &end, &tau, DpMode::Softmax { beta });
        if let Some(path) = cfg.path("dump") {
            formats::write_dump(&path, &table)?;
        }
        let paths = par_map(pool, &indices, |&i| steps_string(&table.sample_path(&mut CounterRng::new(key, i))));
        (paths, table.corner_value())
    } else {
        let n = cfg.scales()?[0] as u32;
        let table = LevelTable::build(&env, n, beta, &tau);
        let paths = par_map(pool, &indices, |&i| steps_string(&table.sample_path(&mut CounterRng::new(key, i))));
        (paths, table.log_partition())
    };
    let mut freq: BTreeMap<String, u64> = BTreeMap::new();
    for p in paths {
        *freq.entry(p).or_default() += 1;
    }
    let mut text = format!("log_partition {log_z}\n");
    for (p, c) in &freq {
        let _ = writeln!(text, "{p} {c}");
    }
    Ok(Outcome {
        text,
        result: json!({ "log_partition": log_z, "samples": samples, "frequencies": freq }),
        ..Outcome::default()
    })
}

fn conjugate_plan(cfg: &ExperimentConfig) -> CliResult<ConjugatePlan> {
    Ok(ConjugatePlan {
        search: ConjugateSearch {
            beta: cfg.real("beta")?,
            restarts: cfg.count("restarts")?,
            seed: cfg.integer("seed")?,
            ..ConjugateSearch::default()
        },
        bins: cfg.count("bins")?,
        random_taus: cfg.count("random_taus")?,
        scales: cfg.scales()?,
        seeds: cfg.seeds()?,
    })
}

fn conjugate(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let run = DirectionRun::from(cfg)?;
    let plan = conjugate_plan(cfg)?;
    let r = runs::conjugate(pool, &run.q, &run.target.measure, &plan)?;
    let shift = plan.search.beta * integral(&r.tau, &run.target.measure);
    let ladders = runs::free_energy_ladders(
        pool,
        &Ensemble::Direction(run.q.clone()),
        run.dim,
        plan.search.beta,
        &r.tau,
        &plan.scales,
        &plan.seeds,
    );
    let mut rows = Rows::new("conjugate", run.dim, &run.q, &run.target.id);
    for (ladder, &seed) in ladders.iter().zip(&plan.seeds) {
        for &(n, v) in ladder {
            rows.push(seed, n, plan.search.beta, v - shift, r.estimate.value, r.estimate.band);
        }
    }
    let mut text = summary_text(&r.estimate);
    let _ = writeln!(text, "tau {}", formats::tau_to_json(&r.tau));
    Ok(Outcome {
        text,
        rows: rows.rows,
        result: json!({
            "estimate": estimate_to_json(&r.estimate),
            "tau": serde_json::from_str::<Value>(&formats::tau_to_json(&r.tau)).expect("valid json"),
            "gibbs_value": real(r.gibbs.value),
            "evaluations": r.evaluations,
        }),
        verify_failed: false,
    })
}

fn klbudget(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let run = DirectionRun::from(cfg)?;
    let method = cfg.method()?;
    let enumeration = DirectionRun {
        scales: cfg.entropy_scales()?,
        ..DirectionRun::from(cfg)?
    };
    let estimate = match method.as_str() {
        "conjugate" => runs::conjugate(pool, &run.q, &run.target.measure, &conjugate_plan(cfg)?)?.estimate,
        "eps_sum" => estimate_from_cost_sums(&enumeration.table(pool)?, &cfg.eps()?, shannon_entropy(&run.q))?,
        _ => {
            let plan = OrderStatsPlan {
                alphas: cfg.alphas(shannon_entropy(&run.q))?,
                resolution: resolution(cfg, &run.target)?,
            };
            if enumeration.reachable() {
                estimate_from_order_stats(&enumeration.table(pool)?, &plan, shannon_entropy(&run.q))
            } else {
                estimate_entropy_orderstats(&enumeration.ladder(), &run.q, &run.target.measure, &plan)?
            }
        }
    };
    let report = match &run.target.histogram {
        Some(h) => kl_budget_check(&run.q, h, &estimate)?,
        None => kl_budget_check_atomic(&run.q, &run.target.measure, &estimate)?,
    };
    Ok(Outcome {
        text: format!(
            "limit_rate {}\nkl {}\nentropy {}\nslack {}\nviolated {}\n",
            report.limit_rate, report.kl, report.entropy, report.slack, report.violated
        ),
        result: json!({
            "limit_rate": real(report.limit_rate),
            "kl": real(report.kl),
            "entropy": real(report.entropy),
            "slack": real(report.slack),
            "band": real(report.band),
            "violated": report.violated,
            "estimate": estimate_to_json(&estimate),
        }),
        ..Outcome::default()
    })
}

fn bernoulli(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let dim = cfg.dim()?;
    let p = cfg.unit("p")?;
    let s = cfg.unit("s")?;
    let scales: Vec<u32> = cfg
        .scales()?
        .into_iter()
        .map(|n| u32::try_from(n).map_err(|_| CliError::field("n", "scale too large")))
        .collect::<CliResult<_>>()?;
    let seeds = cfg.seeds()?;
    let r = bernoulli_exponent_check(dim, p, s, &scales, &seeds)?;
    let mut rows = Rows::new("bernoulli", dim, format!("p={p}"), &format!("s={s}"));
    for row in &r.rows {
        for (&seed, &x) in seeds.iter().zip(&row.exponents) {
            rows.push(seed, u64::from(row.n), s, x, r.measured, 0.0);
        }
    }
    Ok(Outcome {
        text: format!("measured {}\nbudget {}\nwithin_budget {}\n", r.measured, r.budget, r.within_budget),
        rows: rows.rows,
        result: json!({
            "measured": real(r.measured),
            "budget": r.budget,
            "within_budget": r.within_budget,
            "rows": r.rows.iter().map(|row| json!({
                "n": row.n, "min_ones": row.min_ones, "mean": real(row.mean), "exponents": formats::reals(&row.exponents)
            })).collect::<Vec<_>>(),
        }),
        verify_failed: false,
    })
}

fn family_measures(cfg: &ExperimentConfig, mass: f64) -> CliResult<(Recipe, Vec<(String, grid_entropy_core::Measure)>)> {
    let spec = cfg.raw("family").unwrap_or_default();
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let bins = cfg.count("bins")?;
    let bad = |m: String| CliError::field("family", m);
    match kind {
        "tilt" => {
            let thetas = crate::spec::parse_reals(rest).map_err(bad)?;
            Ok((Recipe::ExponentialTilt { bins }, tilt_measures(bins, &thetas, mass)?))
        }
        "grid" => {
            let levels: usize = rest.trim().parse().map_err(|_| bad("expected grid:LEVELS".into()))?;
            Ok((
                Recipe::HistogramGrid { bins, levels },
                histogram_grid_measures(bins, levels, mass)?,
            ))
        }
        "mix" => {
            let steps: usize = rest.trim().parse().map_err(|_| bad("expected mix:STEPS".into()))?;
            let a = cfg.target("mu")?.measure;
            let b = cfg.target("nu")?.measure;
            Ok((Recipe::MixtureSweep { steps }, mixture_measures(&a, &b, steps)?))
        }
        _ => Err(bad("expected tilt:THETAS, grid:LEVELS or mix:STEPS".into())),
    }
}

fn variational(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Outcome> {
    let dim = cfg.dim()?;
    let q = direction_for(cfg, dim)?;
    let tau = cfg.tau()?;
    let beta = cfg.real("beta")?;
    let seeds = cfg.seeds()?;
    let eps = cfg.eps()?;
    let enumeration = cfg.entropy_scales()?;
    let budget = cfg.integer("budget")?;
    let (recipe, measures) = family_measures(cfg, q.l1())?;
    let h = shannon_entropy(&q);
    let mut members = Vec::with_capacity(measures.len());
    for (id, measure) in measures {
        let table = runs::direction_table(pool, dim, &seeds, &enumeration, budget, &q, &measure)?;
        let entropy = estimate_from_cost_sums(&table, &eps, h)?;
        members.push(Candidate { id, measure, entropy });
    }
    let family = CandidateFamily::from_members(recipe, members)?;
    let g = runs::gibbs(pool, &Ensemble::Direction(q.clone()), dim, beta, &tau, &cfg.scales()?, &seeds)?;
    let r = variational_report(beta, &tau, &family, &g);
    let mut text = String::new();
    for c in &family.members {
        let _ = writeln!(
            text,
            "{} entropy {} integral {}",
            c.id,
            c.entropy.value,
            integral(&tau, &c.measure)
        );
    }
    let _ = writeln!(text, "sup {} at {}\ngibbs {}\ngap {}", r.sup_value, r.argmax_nu_id, r.gibbs_value, r.gap);
    Ok(Outcome {
        text,
        result: json!({
            "q": q.to_string(),
            "beta": r.beta,
            "tau_id": format!("{:016x}", r.tau_id),
            "family_id": r.family_id,
            "sup_value": real(r.sup_value),
            "argmax_nu_id": r.argmax_nu_id,
            "gibbs_value": real(r.gibbs_value),
            "gap": real(r.gap),
            "bands": [real(r.bands.0), real(r.bands.1)],
        }),
        ..Outcome::default()
    })
}

fn verify_command(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let opts = verify::VerifyOptions {
        seed: cfg.integer("seed")?,
        tolerance_scale: cfg.positive("tolerance_scale")?,
        ..verify::VerifyOptions::default()
    };
    let report = verify::run(&opts);
    Ok(Outcome {
        text: report.table(),
        result: report.to_json(),
        verify_failed: !report.all_passed(),
        ..Outcome::default()
    })
}

fn plot_command(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let input = cfg.path("csv").ok_or_else(|| CliError::field("csv", "plot needs an input CSV"))?;
    let output = cfg.path("svg").ok_or_else(|| CliError::field("svg", "plot needs an output path"))?;
    let (header, rows) = formats::read_csv(&input)?;
    let title: Vec<String> = header
        .iter()
        .filter(|(k, v)| matches!(k.as_str(), "command" | "q" | "t" | "nu") && !v.is_empty())
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    let svg = plot::render(&title.join(" "), &rows);
    std::fs::write(&output, svg).map_err(|e| CliError::io(&output, e))?;
    Ok(Outcome {
        text: format!("wrote {}\n", output.display()),
        result: json!({ "series": plot::series(&rows).len() }),
        ..Outcome::default()
    })
}

/// Exact weight of a path, exposed for the sampler checks.
pub fn weight_of(env: &Environment, tau: &grid_entropy_core::TauFn, path: &Path) -> f64 {
    path_weight(env, tau, path)
}
