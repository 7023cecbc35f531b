//! Experiment harness: graph generation, scaling sweeps, discovery
//! evaluation, exact/Monte-Carlo cost reports, and gridworld runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use hrc_core::ascm::AscmConfig;
use hrc_core::cost::{expected_cost_exact, log_log_slope, monte_carlo_cost, CostParams};
use hrc_core::graph::{
    assign_kinds, discoverable_parents, gen_semi_er, gen_tree, shd, KindMode, SubgoalGraph,
};
use hrc_core::hrc::{
    graph_search, run_hrc_gridworld, run_hrc_simulated, run_log_csv, DiscoveryMode,
    GraphSearchConfig, GridHrcConfig, HrcConfig,
};
use hrc_core::ssd::FitEngine;
use hrc_core::strategy::StrategyKind;

#[derive(Parser)]
#[command(name = "hrc", about = "Subgoal-structure experiment harness", version)]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base RNG seed (overrides any seed in the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a subgoal graph and write its text form.
    Gen,
    /// Cost-scaling sweep across graph sizes and strategies.
    Sweep,
    /// Structure-discovery accuracy evaluation.
    DiscoverEval,
    /// Exact expected cost with a Monte Carlo cross-check.
    CostExact,
    /// Hierarchical learning runs on the gridworld.
    Gridworld,
}

/// Flat key=value configuration with strict key validation.
struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| anyhow!("config line {}: expected key=value", lineno + 1))?;
                values.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Config { values })
    }

    fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                bail!("unknown config key '{key}' (allowed: {})", allowed.join(", "));
            }
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|e| anyhow!("config key '{key}': cannot parse '{raw}': {e}")),
        }
    }

    fn get_str(&self, key: &str, default: &str) -> String {
        self.values.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    fn list(&self, key: &str, default: &[&str]) -> Vec<String> {
        match self.values.get(key) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(raw) => raw.split(',').map(|s| s.trim().to_string()).collect(),
        }
    }
}

fn parse_kind_mode(s: &str) -> Result<KindMode> {
    match s {
        "all-or" => Ok(KindMode::AllOr),
        "all-and" => Ok(KindMode::AllAnd),
        "random" => Ok(KindMode::Random),
        other => bail!("unknown kinds '{other}' (all-or, all-and, random)"),
    }
}

fn make_graph(family: &str, n: usize, b: usize, c: f64, kinds: KindMode, seed: u64) -> Result<SubgoalGraph> {
    let base = match family {
        "tree" => gen_tree(n, b, seed)?,
        "semi-er" => gen_semi_er(n, c, seed)?,
        other => bail!("unknown family '{other}' (tree, semi-er)"),
    };
    Ok(assign_kinds(&base, kinds, seed + 1))
}

fn out_path(out: &Option<PathBuf>, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_if_changed(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

// ---------------------------------------------------------------------------

fn cmd_gen(cfg: &Config, seed: u64, out: &Option<PathBuf>) -> Result<()> {
    cfg.reject_unknown(&["family", "n", "b", "c", "kinds", "seed"])?;
    let family = cfg.get_str("family", "semi-er");
    let n = cfg.get("n", 16usize)?;
    let b = cfg.get("b", 3usize)?;
    let c = cfg.get("c", 0.6f64)?;
    let kinds = parse_kind_mode(&cfg.get_str("kinds", "random"))?;
    let g = make_graph(&family, n, b, c, kinds, seed)?;
    let path = out_path(out, "graph.txt");
    write_if_changed(&path, &g.to_text())?;
    println!("wrote {} ({} nodes, {} edges)", path.display(), g.n(), g.edge_count());
    Ok(())
}

fn cmd_sweep(cfg: &Config, seed: u64, out: &Option<PathBuf>, workers: usize) -> Result<()> {
    cfg.reject_unknown(&[
        "family", "sizes", "b", "c", "kinds", "strategies", "seeds_per_cell", "reveal_error",
        "t", "t_prime", "w", "seed",
    ])?;
    let family = cfg.get_str("family", "tree");
    let sizes: Vec<usize> = cfg
        .list("sizes", &["13", "40", "121", "364"])
        .iter()
        .map(|s| s.parse().map_err(|e| anyhow!("bad size '{s}': {e}")))
        .collect::<Result<_>>()?;
    if sizes.len() < 3 {
        bail!("sweep needs at least three sizes for the slope fit");
    }
    let b = cfg.get("b", 3usize)?;
    let c = cfg.get("c", 0.6f64)?;
    let kinds = parse_kind_mode(&cfg.get_str("kinds", if family == "tree" { "all-or" } else { "random" }))?;
    let strategies: Vec<StrategyKind> = cfg
        .list("strategies", &["random", "shortest-path"])
        .iter()
        .map(|s| StrategyKind::from_str(s).map_err(|e| anyhow!("{e}")))
        .collect::<Result<_>>()?;
    let seeds_per_cell = cfg.get("seeds_per_cell", 10u64)?;
    let reveal_error = cfg.get("reveal_error", false)?;
    let params = CostParams {
        t: cfg.get("t", 1.0)?,
        t_prime: cfg.get("t_prime", 1.0)?,
        w: cfg.get("w", 1.0)?,
    };
    let dir = out_path(out, "sweep-out");
    std::fs::create_dir_all(&dir)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let mut cells: Vec<(StrategyKind, usize)> = Vec::new();
    for &s in &strategies {
        for &n in &sizes {
            cells.push((s, n));
        }
    }
    // A cell whose output file already exists is not recomputed.
    let results: Vec<Result<(StrategyKind, usize, f64)>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(strategy, n)| {
                let cell_path = dir.join(format!("cell_{}_{n}.csv", strategy.as_str()));
                if cell_path.exists() {
                    let text = std::fs::read_to_string(&cell_path)?;
                    let mean = text
                        .lines()
                        .nth(1)
                        .and_then(|l| l.split(',').nth(3))
                        .and_then(|v| v.parse::<f64>().ok())
                        .ok_or_else(|| anyhow!("corrupt cell file {}", cell_path.display()))?;
                    return Ok((strategy, n, mean));
                }
                let mut costs = Vec::new();
                for k in 0..seeds_per_cell {
                    let gseed = seed.wrapping_add(k);
                    let g = make_graph(&family, n, b, c, kinds, gseed)?;
                    let mut gs = GraphSearchConfig::new(strategy, gseed);
                    gs.reveal_error = reveal_error;
                    gs.cost = Some(params);
                    costs.push(graph_search(&g, &gs)?.cost);
                }
                let mean = costs.iter().sum::<f64>() / costs.len() as f64;
                let mut csv = String::from("strategy,n,seeds,mean_cost\n");
                writeln!(csv, "{},{n},{seeds_per_cell},{mean:.6}", strategy.as_str())?;
                write_if_changed(&cell_path, &csv)?;
                Ok((strategy, n, mean))
            })
            .collect()
    });

    let mut sweep_csv = String::from("strategy,n,mean_cost\n");
    let mut curves: BTreeMap<&'static str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in results {
        let (strategy, n, mean) = r?;
        writeln!(sweep_csv, "{},{n},{mean:.6}", strategy.as_str())?;
        curves.entry(strategy.as_str()).or_default().push((n as f64, mean));
    }
    write_if_changed(&dir.join("sweep.csv"), &sweep_csv)?;

    let mut slopes_csv = String::from("strategy,slope_largest_three\n");
    let mut slope_notes = String::new();
    for (name, curve) in &mut curves {
        curve.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let tail = &curve[curve.len() - 3..];
        let slope = log_log_slope(tail).map_err(|e| anyhow!("{e}"))?;
        writeln!(slopes_csv, "{name},{slope:.4}")?;
        writeln!(slope_notes, "  {name}: exponent {slope:.3} over n = {:?}", tail.iter().map(|p| p.0 as usize).collect::<Vec<_>>())?;
    }
    write_if_changed(&dir.join("slopes.csv"), &slopes_csv)?;

    let mut plot = String::new();
    writeln!(plot, "Total training cost versus graph size ({family} family, kinds as configured).")?;
    writeln!(plot, "X axis: number of subgoals n (log scale): {sizes:?}.")?;
    writeln!(plot, "Y axis: mean total cost over {seeds_per_cell} seeds (log scale), T={}, T'={}, w={}.", params.t, params.t_prime, params.w)?;
    writeln!(plot, "One series per strategy; error-prone revelation: {reveal_error}.")?;
    writeln!(plot, "Log-log slopes over the largest three sizes:")?;
    plot.push_str(&slope_notes);
    write_if_changed(&dir.join("plot_description.txt"), &plot)?;

    let mut manifest = String::from("file,description\n");
    manifest.push_str("sweep.csv,mean cost per strategy and size\n");
    manifest.push_str("slopes.csv,log-log growth exponents (largest three sizes)\n");
    manifest.push_str("plot_description.txt,axes and series for the cost-scaling figure\n");
    for &(s, n) in &cells {
        writeln!(manifest, "cell_{}_{n}.csv,per-cell mean cost", s.as_str())?;
    }
    write_if_changed(&dir.join("manifest.csv"), &manifest)?;
    println!("wrote sweep results to {}", dir.display());
    Ok(())
}

fn cmd_discover_eval(cfg: &Config, seed: u64, out: &Option<PathBuf>, workers: usize) -> Result<()> {
    cfg.reject_unknown(&[
        "n", "c", "kinds", "instances", "engine", "lambda", "trajectories", "noise_rho",
        "strategy", "seed",
    ])?;
    let n = cfg.get("n", 7usize)?;
    let c = cfg.get("c", 0.7f64)?;
    let kinds = parse_kind_mode(&cfg.get_str("kinds", "random"))?;
    let instances = cfg.get("instances", 20u64)?;
    let engine = FitEngine::from_str(&cfg.get_str("engine", "oracle")).map_err(|e| anyhow!("{e}"))?;
    let lambda = cfg.get("lambda", 1e-3f64)?;
    let trajectories = cfg.get("trajectories", 25usize)?;
    let noise_rho = cfg.get("noise_rho", 0.0f64)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let rows: Vec<Result<String>> = pool.install(|| {
        (0..instances)
            .into_par_iter()
            .map(|k| {
                let gseed = seed.wrapping_add(k);
                let g = assign_kinds(&gen_semi_er(n, c, gseed)?, kinds, gseed + 1);
                let dp = discoverable_parents(&g)?;
                let is: Vec<usize> = (0..n).collect();
                let mut env =
                    hrc_core::ascm::AscmEnv::new(g.clone(), AscmConfig::persistent(noise_rho), gseed)?;
                let data =
                    hrc_core::ascm::collect_interventional(&mut env, &is, trajectories)?;
                // Every node refit against all others (full intervention set).
                let mut exact_nodes = 0usize;
                let mut est_edges = std::collections::BTreeSet::new();
                for node in 0..n {
                    let candidates: Vec<usize> = (0..n).filter(|&j| j != node).collect();
                    let design = hrc_core::ssd::build_design(&data, node)?;
                    let fit = match engine {
                        FitEngine::L1 => hrc_core::ssd::fit_l1(&design, &candidates, lambda, 500)?,
                        FitEngine::Oracle => {
                            hrc_core::ssd::fit_oracle(&design, &candidates, lambda, 5)?
                        }
                    };
                    if fit.parents == dp[node] {
                        exact_nodes += 1;
                    }
                    for &p in &fit.parents {
                        est_edges.insert((p, node));
                    }
                }
                let truth_edges: std::collections::BTreeSet<(usize, usize)> = dp
                    .iter()
                    .enumerate()
                    .flat_map(|(child, ps)| ps.iter().map(move |&p| (p, child)))
                    .collect();
                let report = shd(&est_edges, &truth_edges);
                Ok(format!(
                    "{k},{n},{},{lambda},{exact_nodes},{n},{},{},{}",
                    match engine {
                        FitEngine::L1 => "l1",
                        FitEngine::Oracle => "oracle",
                    },
                    report.missing, report.extra, report.shd
                ))
            })
            .collect()
    });
    let mut csv =
        String::from("graph_id,n,engine,lambda,nodes_exact,nodes_total,shd_missing,shd_extra,shd\n");
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    let path = out_path(out, "discover_eval.csv");
    write_if_changed(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_cost_exact(cfg: &Config, seed: u64, out: &Option<PathBuf>, workers: usize) -> Result<()> {
    cfg.reject_unknown(&[
        "graph", "family", "sizes", "b", "c", "kinds", "strategies", "instances", "t",
        "t_prime", "w", "mc_runs", "seed",
    ])?;
    let params = CostParams {
        t: cfg.get("t", 1.0)?,
        t_prime: cfg.get("t_prime", 1.0)?,
        w: cfg.get("w", 1.0)?,
    };
    let mc_runs = cfg.get("mc_runs", 400usize)?;
    let strategies: Vec<StrategyKind> = cfg
        .list("strategies", &["random", "causal-effect", "shortest-path", "hybrid"])
        .iter()
        .map(|s| StrategyKind::from_str(s).map_err(|e| anyhow!("{e}")))
        .collect::<Result<_>>()?;

    // Either a single graph file or generated instances.
    let mut graphs: Vec<(String, f64, SubgoalGraph)> = Vec::new();
    if let Some(path) = cfg.values.get("graph") {
        let text = std::fs::read_to_string(path)?;
        let g = SubgoalGraph::from_text(&text)?;
        graphs.push((path.clone(), f64::NAN, g));
    } else {
        let family = cfg.get_str("family", "semi-er");
        let b = cfg.get("b", 3usize)?;
        let c = cfg.get("c", 0.7f64)?;
        let kinds = parse_kind_mode(&cfg.get_str("kinds", "random"))?;
        let instances = cfg.get("instances", 10u64)?;
        let sizes: Vec<usize> = cfg
            .list("sizes", &["8"])
            .iter()
            .map(|s| s.parse().map_err(|e| anyhow!("bad size '{s}': {e}")))
            .collect::<Result<_>>()?;
        for &n in &sizes {
            for k in 0..instances {
                let gseed = seed.wrapping_add(k);
                let g = make_graph(&family, n, b, c, kinds, gseed)?;
                let c_or_b = if family == "tree" { b as f64 } else { c };
                graphs.push((format!("{family}-{n}-{k}"), c_or_b, g));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let rows: Vec<Result<String>> = pool.install(|| {
        graphs
            .par_iter()
            .flat_map(|(id, c_or_b, g)| {
                strategies
                    .par_iter()
                    .map(move |&strategy| {
                        let exact = expected_cost_exact(g, strategy, &params)?;
                        let mc = monte_carlo_cost(g, strategy, &params, mc_runs, seed)?;
                        Ok(format!(
                            "{id},{},{c_or_b},{},{exact:.6},{:.6},{:.6},{}",
                            g.n(),
                            strategy.as_str(),
                            mc.mean,
                            mc.stderr,
                            mc.runs
                        ))
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    });
    let mut csv = String::from("graph_id,n,c_or_b,strategy,exact_cost,mc_mean,mc_stderr,runs\n");
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    let path = out_path(out, "cost_exact.csv");
    write_if_changed(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_gridworld(cfg: &Config, seed: u64, out: &Option<PathBuf>, workers: usize) -> Result<()> {
    cfg.reject_unknown(&[
        "map", "map_file", "strategies", "seeds", "train_episodes", "step_budget", "seed",
    ])?;
    let map = if let Some(path) = cfg.values.get("map_file") {
        std::fs::read_to_string(path)?
    } else {
        match cfg.get_str("map", "default").as_str() {
            "default" => hrc_core::grid::DEFAULT_MAP.to_string(),
            "mini" => hrc_core::grid::MINI_MAP.to_string(),
            other => bail!("unknown map '{other}' (default, mini, or map_file=...)"),
        }
    };
    let strategies: Vec<StrategyKind> = cfg
        .list("strategies", &["causal-effect", "random"])
        .iter()
        .map(|s| StrategyKind::from_str(s).map_err(|e| anyhow!("{e}")))
        .collect::<Result<_>>()?;
    let seeds = cfg.get("seeds", 5u64)?;
    let train_episodes = cfg.get("train_episodes", 400usize)?;
    let step_budget = cfg.get("step_budget", 200_000u64)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let mut runs: Vec<(StrategyKind, u64)> = Vec::new();
    for &s in &strategies {
        for k in 0..seeds {
            runs.push((s, seed.wrapping_add(k)));
        }
    }
    let rows: Vec<Result<String>> = pool.install(|| {
        runs.par_iter()
            .map(|&(strategy, run_seed)| {
                let mut gc = GridHrcConfig::new(strategy, run_seed);
                gc.train_episodes = train_episodes;
                gc.step_budget = step_budget;
                let res = run_hrc_gridworld(&map, &gc)?;
                Ok(format!(
                    "{run_seed},{},{},{:.4},{},{}",
                    strategy.as_str(),
                    res.reached,
                    res.success_rate,
                    res.primitive_steps,
                    res.expansion_order
                        .iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(";")
                ))
            })
            .collect()
    });
    let mut csv =
        String::from("seed,strategy,reached,success_rate,primitive_steps,expansion_order\n");
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    let path = out_path(out, "gridworld.csv");
    write_if_changed(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Run a full simulated loop and dump its run log and decision log next to
/// the requested output; shared by ad-hoc debugging via `discover-eval
/// strategy=...` configs.
#[allow(dead_code)]
fn dump_run_logs(g: &SubgoalGraph, strategy: StrategyKind, dir: &Path, seed: u64) -> Result<()> {
    let cfg = HrcConfig::new(strategy, DiscoveryMode::SsdOracle, seed);
    let res = run_hrc_simulated(g, &AscmConfig::persistent(0.0), &cfg)?;
    write_if_changed(&dir.join("run_log.csv"), &run_log_csv(&res.run_log))?;
    write_if_changed(&dir.join("decisions.csv"), &res.decisions_csv)?;
    write_if_changed(&dir.join("recovered.txt"), &res.recovered.to_text(g.final_goal()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => match cfg.get("seed", 0u64) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
    };
    let result = match cli.command {
        Command::Gen => cmd_gen(&cfg, seed, &cli.out),
        Command::Sweep => cmd_sweep(&cfg, seed, &cli.out, cli.workers),
        Command::DiscoverEval => cmd_discover_eval(&cfg, seed, &cli.out, cli.workers),
        Command::CostExact => cmd_cost_exact(&cfg, seed, &cli.out, cli.workers),
        Command::Gridworld => cmd_gridworld(&cfg, seed, &cli.out, cli.workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
