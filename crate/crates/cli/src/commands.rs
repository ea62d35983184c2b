use std::io::Write;
use std::path::{Path, PathBuf};

use ransomgame_core::montecarlo::{
    compare_scenarios, expected_profit_sweep, reputation_sweep, write_profit_sweep_csv, write_reputation_sweep_csv,
    write_rounds_csv, write_victims_csv, SweepConfig, ValueDistribution,
};
use ransomgame_core::reputation::{fmt_money, lp_divergence, write_case_table};
use ransomgame_core::strategy::{attacker_expected_profit, round_costs, subgame_policy, victim_policy};
use ransomgame_core::{optimal_reputation, GameInstance, InstanceSpec, Reputation, ReputationMode, ScenarioConfig};
use ransomgame_protocol::{read_jsonl, replay, run_end_to_end, write_jsonl, E2eConfig};
use serde::Serialize;

use crate::args::{
    Format, Globals, OptimizeArgs, ProtocolAction, ProtocolArgs, ServeArgs, SimulateArgs, SolveArgs, SweepArgs,
};
use crate::error::{parse_json, read_file, CliError, Result};
use crate::output::OutDir;
use crate::preset::{self, Job, SweepKind};

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> ransomgame_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))
}

/// Prints to stdout, or writes `name` under `--out` when given.
fn emit(g: &Globals, name: &str, bytes: &[u8]) -> Result<()> {
    match &g.out {
        Some(dir) => {
            let p = OutDir::claim(dir, g.force, &[name])?.write(name, bytes)?;
            println!("wrote {}", p.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            if !bytes.ends_with(b"\n") {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn out_dir(g: &Globals) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

pub fn load_instance(path: &Path) -> Result<GameInstance> {
    let spec: InstanceSpec = parse_json(&path.display().to_string(), &read_file(path)?)?;
    spec.build()
        .map_err(|v| ransomgame_core::Error::InvalidInstance(v).into())
}

/// `perfect`, `worst`, or comma-separated `beta_r,beta_1,...,beta_n`.
pub fn parse_reputation(text: &str, rounds: usize) -> Result<Reputation> {
    let rep = match text.trim().to_ascii_lowercase().as_str() {
        "perfect" => Reputation::perfect(rounds),
        "worst" => Reputation::worst(rounds),
        list => {
            let values = list
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(format!("--reputation {text:?}: {e}")))?;
            Reputation::from_components(&values)?
        }
    };
    if rep.betas.len() != rounds {
        return Err(ransomgame_core::Error::ReputationLength {
            expected: rounds,
            got: rep.betas.len(),
        }
        .into());
    }
    Ok(rep)
}

#[derive(Serialize)]
struct SolveOutput {
    instance: GameInstance,
    reputation: Reputation,
    from_round: usize,
    abort_round: String,
    policy: ransomgame_core::VictimPolicy,
    /// `(pay, abort)` expected losses at `from_round`.
    round_costs: (f64, f64),
    breakdown: Option<ransomgame_core::ProfitBreakdown>,
}

pub fn solve(g: &Globals, a: &SolveArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let n = inst.rounds();
    let rep = parse_reputation(&a.reputation, n)?;
    rep.check_for(&inst)?;
    if a.from_round == 0 || a.from_round > n {
        return Err(CliError::Usage(format!("--from-round must lie in 1..={n}")));
    }
    let policy = if a.from_round == 1 {
        victim_policy(&inst, &rep)?
    } else {
        subgame_policy(&inst, &rep, a.from_round)?
    };
    let breakdown = if a.from_round == 1 {
        Some(attacker_expected_profit(&inst, &rep, &policy)?)
    } else {
        None
    };
    let costs = round_costs(&inst, &rep, a.from_round)?;
    let bytes = match g.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&SolveOutput {
            abort_round: policy.abort_round.to_string(),
            round_costs: costs,
            instance: inst,
            reputation: rep,
            from_round: a.from_round,
            policy,
            breakdown,
        })?
        .into_bytes(),
        Format::Csv => {
            let mut s = String::from("round,ransom,loss,continuation_value,decision\n");
            let first = a.from_round;
            for (i, b) in policy.continuation_values.iter().enumerate() {
                let t = first + i;
                let decision = match policy.abort_round.index(n) {
                    abort if t < abort => "pay",
                    abort if t == abort => "abort",
                    _ => "",
                };
                s += &format!(
                    "{t},{},{},{},{decision}\n",
                    fmt_money(inst.ransom(t)),
                    fmt_money(inst.loss(t)),
                    fmt_money(*b)
                );
            }
            s.into_bytes()
        }
    };
    emit(g, &format!("solve.{}", g.format.unwrap_or(Format::Json).ext()), &bytes)
}

pub fn optimize(g: &Globals, a: &OptimizeArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let res = optimal_reputation(&inst, g.epsilon_margin)?;
    let format = g.format.unwrap_or(Format::Json);
    let bytes = match format {
        Format::Json => to_json(&res)?.into_bytes(),
        Format::Csv => csv_bytes(|b| write_case_table(&res, inst.rounds(), b))?,
    };
    emit(g, &format!("optimize.{}", format.ext()), &bytes)
}

pub fn divergence(g: &Globals, a: &OptimizeArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let rows = lp_divergence(&inst)?;
    let format = g.format.unwrap_or(Format::Csv);
    let bytes = match format {
        Format::Json => to_json(&rows)?.into_bytes(),
        Format::Csv => divergence_csv(&[(None, rows)]),
    };
    emit(g, &format!("divergence.{}", format.ext()), &bytes)
}

fn divergence_csv(groups: &[(Option<f64>, Vec<ransomgame_core::reputation::CoefficientDivergence>)]) -> Vec<u8> {
    let mut s = String::from("total_ransom,case,round,variable,printed,tree\n");
    for (total, rows) in groups {
        let total = total.map(fmt_money).unwrap_or_default();
        for r in rows {
            let var = r.variable.map(|v| format!("x{v}")).unwrap_or_else(|| "constant".into());
            s += &format!(
                "{total},{},{},{var},{},{}\n",
                r.case_k,
                r.round,
                fmt_money(r.printed),
                fmt_money(r.tree)
            );
        }
    }
    s.into_bytes()
}

fn simulate_job(g: &Globals, a: &SimulateArgs) -> Result<(Vec<ReputationMode>, ScenarioConfig)> {
    let (mut modes, mut cfg) = match (&a.scenario, &a.preset) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give --scenario or --preset, not both".into())),
        (Some(path), None) => {
            let cfg: ScenarioConfig = parse_json(&path.display().to_string(), &read_file(path)?)?;
            (vec![cfg.reputation_mode], cfg)
        }
        (None, Some(name)) => match preset::load(name)?.job {
            Job::Simulate { modes, scenario } => (modes, scenario),
            Job::Sweep { .. } => {
                return Err(CliError::Usage(format!(
                    "preset {name} is a sweep; run `sweep --preset {name}`"
                )))
            }
        },
        (None, None) => return Err(CliError::Usage("simulate needs --scenario or --preset".into())),
    };
    if !a.modes.is_empty() {
        modes = a
            .modes
            .iter()
            .map(|m| m.parse::<ReputationMode>())
            .collect::<ransomgame_core::Result<_>>()?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(v) = a.victims {
        cfg.victim_count = v;
    }
    if let Some(n) = a.rounds {
        cfg.rounds = n;
    }
    if let Some(r) = a.total_ransom {
        cfg.total_ransom = r;
    }
    if let Some(f) = a.first_fraction {
        cfg.first_round_fraction = f;
    }
    if let Some(range) = &a.value_range {
        let parts: Vec<f64> = range
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Usage(format!("--value-range {range:?}: {e}")))?;
        let [lo, hi] = parts[..] else {
            return Err(CliError::Usage(format!("--value-range {range:?} needs lo,hi")));
        };
        cfg.value_distribution = ValueDistribution { lo, hi };
    }
    if g.epsilon_margin.is_some() {
        cfg.epsilon_margin = g.epsilon_margin;
    }
    cfg.validate()?;
    Ok((modes, cfg))
}

pub fn simulate(g: &Globals, a: &SimulateArgs) -> Result<()> {
    let (modes, cfg) = simulate_job(g, a)?;
    let format = g.format.unwrap_or(Format::Csv);
    let names: &[&str] = match format {
        Format::Csv => &["victims.csv", "rounds.csv", "scenario.json"],
        Format::Json => &["simulate.json", "scenario.json"],
    };
    let out = OutDir::claim(&out_dir(g), g.force, names)?;
    tracing::info!(
        victims = cfg.victim_count,
        modes = modes.len(),
        seed = cfg.seed,
        "simulating"
    );
    let results = compare_scenarios(&cfg, &modes)?;
    match format {
        Format::Csv => {
            out.write("victims.csv", &csv_bytes(|b| write_victims_csv(&results, b))?)?;
            out.write("rounds.csv", &csv_bytes(|b| write_rounds_csv(&results, b))?)?;
        }
        Format::Json => {
            out.write_json("simulate.json", &results)?;
        }
    }
    out.write_json("scenario.json", &serde_json::json!({ "modes": modes, "scenario": cfg }))?;
    println!(
        "{:<15} {:>14} {:>12} {:>8}",
        "mode", "total_profit", "mean_profit", "paying"
    );
    for r in &results {
        let paying = r.victims.iter().filter(|v| v.rounds_paid > 0).count();
        println!(
            "{:<15} {:>14.3} {:>12.3} {:>5}/{}",
            r.mode.as_str(),
            r.total_profit,
            r.mean_profit,
            paying,
            cfg.victim_count
        );
    }
    println!("wrote {}", out.path("").display());
    Ok(())
}

fn sweep_job(a: &SweepArgs) -> Result<(SweepKind, SweepConfig)> {
    let (kind, mut cfg) = match (&a.config, &a.preset) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give --config or --preset, not both".into())),
        (Some(path), None) => {
            let kind = a.kind.ok_or_else(|| CliError::Usage("--config needs --kind".into()))?;
            let cfg: SweepConfig = parse_json(&path.display().to_string(), &read_file(path)?)?;
            (kind, cfg)
        }
        (None, Some(name)) => match preset::load(name)?.job {
            Job::Sweep { kind, config } => (a.kind.unwrap_or(kind), config),
            Job::Simulate { .. } => {
                return Err(CliError::Usage(format!(
                    "preset {name} is a simulation; run `simulate --preset {name}`"
                )))
            }
        },
        (None, None) => return Err(CliError::Usage("sweep needs --config or --preset".into())),
    };
    if let Some(grid) = &a.grid {
        cfg.ransom_grid = grid
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Usage(format!("--grid {grid:?}: {e}")))?;
    }
    if cfg.ransom_grid.is_empty() {
        return Err(CliError::Usage("the ransom grid is empty".into()));
    }
    Ok((kind, cfg))
}

pub fn sweep(g: &Globals, a: &SweepArgs) -> Result<()> {
    let (kind, mut cfg) = sweep_job(a)?;
    if g.epsilon_margin.is_some() {
        cfg.epsilon_margin = g.epsilon_margin;
    }
    let format = g.format.unwrap_or(Format::Csv);
    let main = format!("sweep.{}", format.ext());
    let mut names = vec![main.as_str(), "sweep_config.json"];
    if kind == SweepKind::Reputation {
        names.push("divergence.csv");
    }
    let out = OutDir::claim(&out_dir(g), g.force, &names)?;
    match kind {
        SweepKind::Reputation => {
            let rows = reputation_sweep(&cfg)?;
            match format {
                Format::Csv => out.write(&main, &csv_bytes(|b| write_reputation_sweep_csv(&rows, b))?)?,
                Format::Json => out.write_json(&main, &rows)?,
            };
            // printed LP rows vs the outcome tree, one block per grid point
            let groups = cfg
                .ransom_grid
                .iter()
                .map(|&t| Ok((Some(t), lp_divergence(&cfg.instance(t)?)?)))
                .collect::<Result<Vec<_>>>()?;
            out.write("divergence.csv", &divergence_csv(&groups))?;
            println!("{:>12} {:>8} {:>14} {:>6}", "total", "beta_r", "profit", "case");
            for r in &rows {
                let case = r.case_k.map(|k| k.to_string()).unwrap_or_else(|| "sell".into());
                println!(
                    "{:>12.2} {:>8.4} {:>14.3} {case:>6}",
                    r.total_ransom, r.beta_r, r.expected_profit
                );
            }
        }
        SweepKind::Profit => {
            let rows = expected_profit_sweep(&cfg)?;
            match format {
                Format::Csv => out.write(&main, &csv_bytes(|b| write_profit_sweep_csv(&rows, b))?)?,
                Format::Json => out.write_json(&main, &rows)?,
            };
            println!("{:>12} {:>14} {:>14}", "total", "profit", "bound");
            for r in &rows {
                println!("{:>12.2} {:>14.3} {:>14.3}", r.total_ransom, r.expected_profit, r.bound);
            }
        }
    }
    out.write_json("sweep_config.json", &serde_json::json!({ "kind": kind, "config": cfg }))?;
    println!("wrote {}", out.path("").display());
    Ok(())
}

fn protocol_config(g: &Globals, a: &ProtocolArgs) -> Result<E2eConfig> {
    let mut cfg = match &a.config {
        Some(path) => parse_json(&path.display().to_string(), &read_file(path)?)?,
        None => {
            let mut cfg = E2eConfig::single(a.ransom, 0);
            cfg.mode = a.mode.into();
            cfg.rounds = a.rounds.unwrap_or(if cfg.mode == ransomgame_protocol::Mode::Multi {
                6
            } else {
                1
            });
            cfg.cancel_at = a.cancel_at;
            cfg.attacker = a.attacker.into();
            cfg.chunk_bits = a.chunk_bits;
            cfg.data_len = a.data_len;
            cfg
        }
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    cfg.amounts()?;
    Ok(cfg)
}

pub fn protocol(g: &Globals, a: &ProtocolArgs) -> Result<()> {
    if let Some(ProtocolAction::Replay { transcript }) = &a.action {
        let file = std::fs::File::open(transcript).map_err(|source| CliError::Read {
            path: transcript.clone(),
            source,
        })?;
        let entries = read_jsonl(std::io::BufReader::new(file))?;
        let state = replay(&entries)?;
        let genesis = entries.first().map(|e| e.balances.total()).unwrap_or(0);
        println!(
            "replayed {} steps: phase {}, attacker {} victim {} escrow {}, conservation {}",
            entries.len(),
            state.phase.as_str(),
            state.balances().attacker,
            state.balances().victim,
            state.balances().escrow,
            if state.conserves(genesis) { "holds" } else { "VIOLATED" }
        );
        return Ok(());
    }
    let cfg = protocol_config(g, a)?;
    let out = OutDir::claim(&out_dir(g), g.force, &["transcript.jsonl", "summary.json"])?;
    let t = run_end_to_end(&cfg)?;
    let mut jsonl = Vec::new();
    write_jsonl(&t.entries, &mut jsonl)?;
    out.write("transcript.jsonl", &jsonl)?;
    out.write_json(
        "summary.json",
        &serde_json::json!({ "config": cfg, "summary": t.summary }),
    )?;

    let replayed = replay(&t.entries)?;
    let s = &t.summary;
    println!(
        "mode {:?}, schedule {:?}, attacker {:?}",
        cfg.mode, s.scheduled, cfg.attacker
    );
    println!(
        "final phase {}; bundle {}; data {}",
        s.final_phase.as_str(),
        if s.bundle_accepted { "accepted" } else { "rejected" },
        if s.data_recovered { "recovered" } else { "not recovered" }
    );
    println!(
        "attacker gain {}, victim spent {}, refunded {}, refusals {}",
        s.attacker_gain, s.victim_spent, s.victim_refunded, s.refusals
    );
    println!(
        "conservation {}; replay {}",
        if s.conservation_holds { "holds" } else { "VIOLATED" },
        if replayed == t.final_state {
            "reproduces the final state"
        } else {
            "DIVERGES"
        }
    );
    println!("wrote {}", out.path("transcript.jsonl").display());
    if !s.conservation_holds || replayed != t.final_state {
        return Err(CliError::Internal(
            "protocol run failed its own consistency checks".into(),
        ));
    }
    Ok(())
}

pub fn serve(g: &Globals, a: &ServeArgs) -> Result<()> {
    let cfg = ransomgame_server::ServerConfig {
        bind: a.bind,
        seed: g.seed.unwrap_or(0),
        persist: a.persist.clone(),
        cors_origin: a.cors_origin.clone(),
    };
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::Io)?;
    rt.block_on(ransomgame_server::serve(cfg))?;
    Ok(())
}

pub fn presets(show: Option<&str>) -> Result<()> {
    match show {
        Some(name) => {
            let text = preset::source(name).ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?;
            print!("{text}");
        }
        None => {
            for name in preset::names() {
                let p = preset::load(name)?;
                let kind = match p.job {
                    Job::Simulate { .. } => "simulate",
                    Job::Sweep { .. } => "sweep",
                };
                println!("{name:<6} {kind:<9} {}", p.description);
            }
        }
    }
    Ok(())
}
