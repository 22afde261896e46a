//! Command-line front end: key-value experiment configs in, CSV and aligned
//! text tables out. Every command writes a `manifest.txt` with its fully
//! resolved parameters; `rerun` replays a manifest and reproduces the output
//! files byte for byte.
//!
//! Exit codes: 0 success, 1 a checked property was violated (e.g. the
//! geometric bound), 2 usage or configuration error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};

use crate::aggregate::make_partition_plan;
use crate::dynamics::{
    closed_form_energy, energy_ratio, step_fedavg_idealized, step_raflora_idealized,
    theorem_bound, SpectrumState,
};
use crate::error::{Error, Result};
use crate::harness::{run_experiment, ExperimentConfig, Strategy};
use crate::population::{assign_ranks, forecast, sample_round, RankConfig};
use crate::rng::Prng;

#[derive(Parser, Debug)]
#[command(name = "raflora", version, about = "rank-partitioned federated LoRA laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Collapse forecast: geometric bound vs closed form vs Monte Carlo
    Theory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Idealized fixed-basis spectrum simulation
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Federated matrix-regression training loop
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        carry_over: bool,
    },
    /// Merge per-seed metrics files into mean/stddev tables
    Report {
        #[arg(long)]
        out: PathBuf,
        inputs: Vec<PathBuf>,
    },
    /// Replay a recorded manifest, reproducing its outputs byte-exactly
    Rerun { manifest: PathBuf },
}

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Theory { config, out, trials } => {
            let mut kv = Kv::from_file(&config)?;
            if let Some(t) = trials {
                kv.set("trials", &t.to_string());
            }
            cmd_theory(&kv, &out)
        }
        Command::Simulate {
            config,
            out,
            trials,
            strategy,
        } => {
            let mut kv = Kv::from_file(&config)?;
            if let Some(t) = trials {
                kv.set("trials", &t.to_string());
            }
            if let Some(s) = strategy {
                kv.set("strategy", &s);
            }
            cmd_simulate(&kv, &out)
        }
        Command::Train {
            config,
            out,
            seeds,
            strategy,
            carry_over,
        } => {
            let mut kv = Kv::from_file(&config)?;
            if let Some(s) = seeds {
                kv.set("seeds", &s);
            }
            if let Some(s) = strategy {
                kv.set("strategy", &s);
            }
            if carry_over {
                kv.set("carry_over", "true");
            }
            cmd_train(&kv, &out)
        }
        Command::Report { out, inputs } => cmd_report(&inputs, &out),
        Command::Rerun { manifest } => rerun(&manifest),
    }
}

/// Flat `key = value` file: `#` comments and blank lines ignored, later keys
/// override earlier ones. Serializes in sorted key order, so identical
/// contents always produce identical bytes.
#[derive(Debug, Clone, Default)]
pub struct Kv {
    pairs: BTreeMap<String, String>,
}

impl Kv {
    pub fn parse(text: &str) -> Result<Kv> {
        let mut pairs = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", idx + 1))
            })?;
            pairs.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Kv { pairs })
    }

    pub fn from_file(path: &Path) -> Result<Kv> {
        Kv::parse(&fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(|s| s.as_str())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.pairs.insert(key.to_string(), value.to_string());
    }

    pub fn req(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    pub fn parse_req<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.req(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{raw}'")))
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{raw}'"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn parse_list<T: FromStr>(raw: &str, key: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{tok}'")))
        })
        .collect()
}

fn join_list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn rank_config_from(kv: &Kv) -> Result<RankConfig> {
    let levels: Vec<usize> = parse_list(kv.req("rank_levels")?, "rank_levels")?;
    match kv.get("rank_probs") {
        Some(raw) => RankConfig::new(levels, parse_list(raw, "rank_probs")?),
        None => RankConfig::uniform(levels),
    }
}

/// `ones` or an explicit comma list of length `r_max`.
fn vector_from(kv: &Kv, key: &str, r_max: usize, default_ones: bool) -> Result<Vec<f64>> {
    match kv.get(key) {
        None if default_ones => Ok(vec![1.0; r_max]),
        None => Err(Error::Config(format!("missing required key '{key}'"))),
        Some("ones") => Ok(vec![1.0; r_max]),
        Some(raw) => {
            let v: Vec<f64> = parse_list(raw, key)?;
            if v.len() != r_max {
                return Err(Error::Config(format!(
                    "key '{key}': {} entries, expected {r_max}",
                    v.len()
                )));
            }
            Ok(v)
        }
    }
}

fn write_csv(path: &Path, schema: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut s = String::with_capacity(rows.len() * 32 + 64);
    let _ = writeln!(s, "#schema={schema}");
    let _ = writeln!(s, "{header}");
    for r in rows {
        let _ = writeln!(s, "{r}");
    }
    fs::write(path, s)?;
    Ok(())
}

fn write_manifest(
    out: &Path,
    subcommand: &str,
    resolved: &Kv,
    extras: &[(&str, String)],
) -> Result<()> {
    let mut man = Kv::default();
    man.set("subcommand", subcommand);
    man.set("version", env!("CARGO_PKG_VERSION"));
    man.set("out", &out.display().to_string());
    for (k, v) in resolved.iter() {
        man.set(&format!("cfg.{k}"), v);
    }
    for (k, v) in extras {
        man.set(k, v);
    }
    fs::write(out.join("manifest.txt"), man.to_text())?;
    Ok(())
}

/// Replays a recorded run from its manifest alone.
pub fn rerun(manifest_path: &Path) -> Result<i32> {
    let man = Kv::from_file(manifest_path)?;
    let sub = man.req("subcommand")?.to_string();
    let out = PathBuf::from(man.req("out")?);
    let mut cfg = Kv::default();
    for (k, v) in man.iter() {
        if let Some(rest) = k.strip_prefix("cfg.") {
            cfg.set(rest, v);
        }
    }
    match sub.as_str() {
        "theory" => cmd_theory(&cfg, &out),
        "simulate" => cmd_simulate(&cfg, &out),
        "train" => cmd_train(&cfg, &out),
        "report" => {
            let inputs: Vec<PathBuf> = man
                .req("inputs")?
                .split(',')
                .map(|s| PathBuf::from(s.trim()))
                .collect();
            cmd_report(&inputs, &out)
        }
        other => Err(Error::Config(format!("unknown subcommand '{other}' in manifest"))),
    }
}

/// Writes theory.csv (geometric bound, closed form, Monte Carlo with standard
/// error, per round) and summary.txt (gamma, C, q_i). Exits 1 if the closed
/// form ever exceeds the bound.
pub fn cmd_theory(cfg: &Kv, out: &Path) -> Result<i32> {
    let k: usize = cfg.parse_req("k")?;
    let m: usize = cfg.parse_req("m")?;
    let beta: f64 = cfg.parse_or("beta", 1.0)?;
    let seed: u64 = cfg.parse_or("seed", 0)?;
    let rounds: u64 = cfg.parse_req("rounds")?;
    let trials: u64 = cfg.parse_or("trials", 2000)?;
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let rc = rank_config_from(cfg)?;
    let e0 = vector_from(cfg, "e0", rc.max_rank(), true)?;
    let pop = assign_ranks(&rc, k, seed)?;
    let f = forecast(&pop, m, beta, &e0)?;

    fs::create_dir_all(out)?;
    let mut resolved = Kv::default();
    resolved.set("k", &k.to_string());
    resolved.set("m", &m.to_string());
    resolved.set("beta", &beta.to_string());
    resolved.set("seed", &seed.to_string());
    resolved.set("rounds", &rounds.to_string());
    resolved.set("trials", &trials.to_string());
    resolved.set("rank_levels", &join_list(rc.levels()));
    resolved.set("rank_probs", &join_list(rc.probs()));
    resolved.set("e0", &join_list(&e0));

    // Monte Carlo of 1 - rho_{r1} under uniform averaging with client sampling
    let tlen = rounds as usize + 1;
    let mut sum = vec![0.0f64; tlen];
    let mut sumsq = vec![0.0f64; tlen];
    let mut rng = Prng::derive(seed, 7);
    for _ in 0..trials {
        let mut state = SpectrumState::new(e0.iter().map(|e| e.sqrt()).collect())?;
        for t in 0..tlen {
            if t > 0 {
                let ids = sample_round(&pop, m, &mut rng)?;
                state = step_fedavg_idealized(&state, &ids, &pop, beta)?;
            }
            let e = state.energies();
            let v = if e.iter().sum::<f64>() > 0.0 {
                1.0 - energy_ratio(&e, f.shared_rank)?
            } else {
                0.0
            };
            sum[t] += v;
            sumsq[t] += v * v;
        }
    }

    let mut violated = false;
    let mut rows = Vec::with_capacity(tlen);
    for t in 0..=rounds {
        let bound = theorem_bound(&f, t);
        let e = closed_form_energy(&e0, &f, t);
        let closed = 1.0 - energy_ratio(&e, f.shared_rank)?;
        if closed > bound + 1e-12 {
            violated = true;
        }
        let idx = t as usize;
        let mean = sum[idx] / trials as f64;
        let stderr = if trials > 1 {
            let var = (sumsq[idx] - sum[idx] * sum[idx] / trials as f64) / (trials - 1) as f64;
            (var.max(0.0) / trials as f64).sqrt()
        } else {
            0.0
        };
        rows.push(format!("{t},{bound},{closed},{mean},{stderr}"));
    }
    write_csv(
        &out.join("theory.csv"),
        "theory-v1",
        "t,bound,closed_form_1_minus_rho,monte_carlo_1_minus_rho,mc_stderr",
        &rows,
    )?;

    let mut summary = String::new();
    let _ = writeln!(summary, "gamma = {}", f.gamma);
    let _ = writeln!(summary, "c = {}", f.c0);
    let _ = writeln!(summary, "shared_rank = {}", f.shared_rank);
    let _ = writeln!(summary, "q = {}", join_list(&f.q));
    let _ = writeln!(summary, "bound_violated = {violated}");
    fs::write(out.join("summary.txt"), summary)?;
    write_manifest(out, "theory", &resolved, &[])?;
    Ok(if violated { 1 } else { 0 })
}

/// Writes spectrum.csv with per-trial, per-round, per-direction sigma and
/// energy, and rho.csv with the trial-averaged shared-rank energy ratio.
pub fn cmd_simulate(cfg: &Kv, out: &Path) -> Result<i32> {
    let k: usize = cfg.parse_req("k")?;
    let m: usize = cfg.parse_req("m")?;
    let beta: f64 = cfg.parse_or("beta", 1.0)?;
    let seed: u64 = cfg.parse_or("seed", 0)?;
    let rounds: u64 = cfg.parse_req("rounds")?;
    let trials: u64 = cfg.parse_or("trials", 1)?;
    let strategy = cfg.get("strategy").unwrap_or("fedavg").to_string();
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    if strategy != "fedavg" && strategy != "raflora" {
        return Err(Error::Config(format!(
            "simulate strategy must be fedavg or raflora, got '{strategy}'"
        )));
    }
    let rc = rank_config_from(cfg)?;
    let r_max = rc.max_rank();
    let e0 = vector_from(cfg, "e0", r_max, true)?;
    let pop = assign_ranks(&rc, k, seed)?;
    let plan = make_partition_plan(rc.levels())?;
    let shared_rank = plan.shared_rank();

    fs::create_dir_all(out)?;
    let mut resolved = Kv::default();
    resolved.set("k", &k.to_string());
    resolved.set("m", &m.to_string());
    resolved.set("beta", &beta.to_string());
    resolved.set("seed", &seed.to_string());
    resolved.set("rounds", &rounds.to_string());
    resolved.set("trials", &trials.to_string());
    resolved.set("strategy", &strategy);
    resolved.set("rank_levels", &join_list(rc.levels()));
    resolved.set("rank_probs", &join_list(rc.probs()));
    resolved.set("e0", &join_list(&e0));

    let tlen = rounds as usize + 1;
    let mut rho_sum = vec![0.0f64; tlen];
    let mut rows = Vec::with_capacity(trials as usize * tlen * r_max);
    for trial in 0..trials {
        let mut rng = Prng::derive(seed, 100 + trial);
        let mut state = SpectrumState::new(e0.iter().map(|e| e.sqrt()).collect())?;
        for t in 0..=rounds {
            if t > 0 {
                let ids = sample_round(&pop, m, &mut rng)?;
                state = if strategy == "fedavg" {
                    step_fedavg_idealized(&state, &ids, &pop, beta)?
                } else {
                    step_raflora_idealized(&state, &ids, &pop, &plan, beta)?
                };
            }
            let e = state.energies();
            rho_sum[t as usize] += if e.iter().sum::<f64>() > 0.0 {
                energy_ratio(&e, shared_rank)?
            } else {
                1.0 // fully collapsed: all remaining (zero) energy is shared
            };
            for i in 1..=r_max {
                rows.push(format!(
                    "{trial},{t},{i},{},{}",
                    state.sigma[i - 1],
                    e[i - 1]
                ));
            }
        }
    }
    write_csv(
        &out.join("spectrum.csv"),
        "simulate-spectrum-v1",
        "trial,t,i,sigma_i,e_i",
        &rows,
    )?;
    let rho_rows: Vec<String> = (0..tlen)
        .map(|t| format!("{t},{}", rho_sum[t] / trials as f64))
        .collect();
    write_csv(
        &out.join("rho.csv"),
        "simulate-rho-v1",
        "t,rho_r1_mean",
        &rho_rows,
    )?;
    write_manifest(out, "simulate", &resolved, &[])?;
    Ok(0)
}

const TABLE_ROUNDS: [u64; 6] = [1, 10, 20, 30, 50, 100];

fn train_strategies(raw: &str) -> Result<Vec<Strategy>> {
    if raw == "all" {
        Ok(Strategy::ALL.to_vec())
    } else {
        Ok(vec![Strategy::parse(raw)?])
    }
}

/// Runs the training loop for each (strategy, seed) pair; writes one
/// metrics_seed{seed}.csv per seed plus an aligned table of seed-averaged
/// higher-rank shares at selected rounds.
pub fn cmd_train(cfg: &Kv, out: &Path) -> Result<i32> {
    let rc = rank_config_from(cfg)?;
    let r_max = rc.max_rank();
    let strategy_raw = cfg.get("strategy").unwrap_or("all").to_string();
    let strategies = train_strategies(&strategy_raw)?;
    let base_seed: u64 = cfg.parse_or("seed", 0)?;
    let seeds: Vec<u64> = match cfg.get("seeds") {
        Some(raw) => parse_list(raw, "seeds")?,
        None => vec![base_seed],
    };
    if seeds.is_empty() {
        return Err(Error::Config("seeds list is empty".into()));
    }
    let spectrum = vector_from(cfg, "spectrum", r_max, true)?;
    let sample_counts: Option<Vec<usize>> = match cfg.get("sample_counts") {
        Some(raw) => Some(parse_list(raw, "sample_counts")?),
        None => None,
    };
    let template = ExperimentConfig {
        k_clients: cfg.parse_req("k")?,
        m_per_round: cfg.parse_req("m")?,
        rounds: cfg.parse_req("rounds")?,
        rank_config: rc.clone(),
        d: cfg.parse_req("d")?,
        n: cfg.parse_req("n")?,
        strategy: strategies[0],
        eta: cfg.parse_or("eta", 0.0)?,
        local_steps: cfg.parse_req("local_steps")?,
        learning_rate: cfg.parse_req("learning_rate")?,
        seed: base_seed,
        carry_over: cfg.parse_or("carry_over", false)?,
        sample_counts,
        spectrum: Some(spectrum.clone()),
    };
    template.validate()?;

    fs::create_dir_all(out)?;
    let mut resolved = Kv::default();
    resolved.set("k", &template.k_clients.to_string());
    resolved.set("m", &template.m_per_round.to_string());
    resolved.set("rounds", &template.rounds.to_string());
    resolved.set("rank_levels", &join_list(rc.levels()));
    resolved.set("rank_probs", &join_list(rc.probs()));
    resolved.set("d", &template.d.to_string());
    resolved.set("n", &template.n.to_string());
    resolved.set("strategy", &strategy_raw);
    resolved.set("eta", &template.eta.to_string());
    resolved.set("local_steps", &template.local_steps.to_string());
    resolved.set("learning_rate", &template.learning_rate.to_string());
    resolved.set("seed", &base_seed.to_string());
    resolved.set("seeds", &join_list(&seeds));
    resolved.set("carry_over", &template.carry_over.to_string());
    resolved.set("spectrum", &join_list(&spectrum));
    if let Some(sc) = &template.sample_counts {
        resolved.set("sample_counts", &join_list(sc));
    }

    let plan = make_partition_plan(rc.levels())?;
    let n_buckets = plan.partitions().len();
    let mut header = String::from("round,strategy,loss");
    for b in 1..=n_buckets {
        let _ = write!(header, ",bucket_{b}");
    }
    header.push_str(",rho_r1,higher_rank_share");

    // share_sums[strategy index][selected round index]
    let selected: Vec<u64> = TABLE_ROUNDS
        .iter()
        .copied()
        .filter(|&r| r <= template.rounds)
        .collect();
    let mut share_sums = vec![vec![0.0f64; selected.len()]; strategies.len()];
    for &seed in &seeds {
        let mut rows = Vec::new();
        for (si, &strategy) in strategies.iter().enumerate() {
            let mut cfg_run = template.clone();
            cfg_run.strategy = strategy;
            cfg_run.seed = seed;
            let metrics = run_experiment(&cfg_run)?;
            for m in &metrics {
                let mut row = format!("{},{},{}", m.round, m.strategy.name(), m.loss);
                for b in &m.buckets {
                    let _ = write!(row, ",{b}");
                }
                let _ = write!(row, ",{},{}", m.rho_r1, m.higher_rank_share);
                rows.push(row);
                if let Some(pos) = selected.iter().position(|&r| r == m.round) {
                    share_sums[si][pos] += m.higher_rank_share;
                }
            }
        }
        write_csv(
            &out.join(format!("metrics_seed{seed}.csv")),
            "train-metrics-v1",
            &header,
            &rows,
        )?;
    }

    // Table of seed-averaged higher-rank shares, strategies by selected rounds
    let mut table = format!("{:<10}", "strategy");
    for r in &selected {
        let _ = write!(table, " {:>8}", format!("r={r}"));
    }
    table.push('\n');
    for (si, strategy) in strategies.iter().enumerate() {
        let _ = write!(table, "{:<10}", strategy.name());
        for pos in 0..selected.len() {
            let _ = write!(table, " {:>8.4}", share_sums[si][pos] / seeds.len() as f64);
        }
        table.push('\n');
    }
    fs::write(out.join("table.txt"), table)?;
    write_manifest(out, "train", &resolved, &[])?;
    Ok(0)
}

fn read_csv(path: &Path) -> Result<(String, String, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let schema = lines
        .next()
        .and_then(|l| l.strip_prefix("#schema="))
        .ok_or_else(|| Error::Config(format!("{}: missing #schema= line", path.display())))?
        .to_string();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: missing header", path.display())))?
        .to_string();
    let rows = lines
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(|t| t.to_string()).collect())
        .collect();
    Ok((schema, header, rows))
}

/// Merges metrics files from multiple seeds: per (round, strategy) key, the
/// mean and sample standard deviation of every numeric column.
pub fn cmd_report(inputs: &[PathBuf], out: &Path) -> Result<i32> {
    if inputs.is_empty() {
        return Err(Error::Config("report needs at least one input file".into()));
    }
    let mut schema0: Option<String> = None;
    let mut header0: Option<String> = None;
    // (round, strategy) -> per numeric column -> values across files/rows
    let mut groups: BTreeMap<(u64, String), Vec<Vec<f64>>> = BTreeMap::new();
    let mut n_numeric = 0usize;
    for path in inputs {
        let (schema, header, rows) = read_csv(path)?;
        match (&schema0, &header0) {
            (None, None) => {
                let cols: Vec<&str> = header.split(',').collect();
                if cols.len() < 3 || cols[0] != "round" || cols[1] != "strategy" {
                    return Err(Error::Config(format!(
                        "{}: expected round,strategy,... columns",
                        path.display()
                    )));
                }
                n_numeric = cols.len() - 2;
                schema0 = Some(schema);
                header0 = Some(header);
            }
            _ => {
                if schema0.as_deref() != Some(schema.as_str())
                    || header0.as_deref() != Some(header.as_str())
                {
                    return Err(Error::Config(format!(
                        "{}: schema mismatch with first input",
                        path.display()
                    )));
                }
            }
        }
        for row in rows {
            if row.len() != n_numeric + 2 {
                return Err(Error::Config(format!(
                    "{}: row has {} fields, expected {}",
                    path.display(),
                    row.len(),
                    n_numeric + 2
                )));
            }
            let round: u64 = row[0]
                .parse()
                .map_err(|_| Error::Config(format!("bad round value '{}'", row[0])))?;
            let values: Vec<f64> = row[2..]
                .iter()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Config(format!("bad numeric value '{t}'")))
                })
                .collect::<Result<_>>()?;
            groups
                .entry((round, row[1].clone()))
                .or_insert_with(|| vec![Vec::new(); n_numeric])
                .iter_mut()
                .zip(values)
                .for_each(|(col, v)| col.push(v));
        }
    }

    let in_cols: Vec<&str> = header0.as_ref().unwrap().split(',').skip(2).collect();
    let mut header = String::from("round,strategy,n");
    for c in &in_cols {
        let _ = write!(header, ",{c}_mean,{c}_std");
    }
    let mut rows = Vec::with_capacity(groups.len());
    for ((round, strategy), cols) in &groups {
        let n = cols[0].len();
        let mut row = format!("{round},{strategy},{n}");
        for col in cols {
            let mean = col.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            let _ = write!(row, ",{mean},{std}");
        }
        rows.push(row);
    }
    fs::create_dir_all(out)?;
    write_csv(
        &out.join("report.csv"),
        &format!("{}-report-v1", schema0.unwrap()),
        &header,
        &rows,
    )?;
    let inputs_str = inputs
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(",");
    write_manifest(out, "report", &Kv::default(), &[("inputs", inputs_str)])?;
    Ok(0)
}
