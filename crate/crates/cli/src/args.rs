use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::preset::SweepKind;

#[derive(Debug, Parser)]
#[command(
    name = "ransomgame",
    version,
    about = "Multi-round ransom payment game: solvers, simulations and a protocol simulator"
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Globals {
    /// Master seed; overrides the seed in any config or preset.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for simulations (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory. Solve and optimize print to stdout without it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Strict-inequality margin of the reputation LPs (default 1e-6 max(V, total ransom)).
    #[arg(long, global = true)]
    pub epsilon_margin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Victim best response for an instance and a reputation.
    Solve(SolveArgs),
    /// Profit-maximizing attacker reputation with the per-case table.
    Optimize(OptimizeArgs),
    /// Monte Carlo scenario over one or more reputation modes.
    Simulate(SimulateArgs),
    /// Optimal reputation or expected profit over a grid of total ransoms.
    Sweep(SweepArgs),
    /// Escrow protocol run with scripted agents, or replay of a transcript.
    #[command(visible_alias = "demo")]
    Protocol(ProtocolArgs),
    /// Start the HTTP API.
    Serve(ServeArgs),
    /// Coefficients where the printed reputation LP rows and the outcome tree disagree.
    Divergence(OptimizeArgs),
    /// List the built-in presets, or print one.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// GameInstance JSON file.
    #[arg(long)]
    pub instance: PathBuf,
    /// `perfect`, `worst`, or `beta_r,beta_1,...,beta_n`.
    #[arg(long, default_value = "perfect")]
    pub reputation: String,
    /// Solve the subgame from this round, the key already returned.
    #[arg(long, default_value_t = 1)]
    pub from_round: usize,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// GameInstance JSON file.
    #[arg(long)]
    pub instance: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// ScenarioConfig JSON file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Modes to compare, e.g. `worst,perfect-single`. Defaults to the preset's list.
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<String>,
    #[arg(long)]
    pub victims: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub total_ransom: Option<f64>,
    #[arg(long)]
    pub first_fraction: Option<f64>,
    /// Uniform data-value range as `lo,hi`.
    #[arg(long)]
    pub value_range: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// SweepConfig JSON file; needs --kind.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub kind: Option<SweepKind>,
    /// Comma-separated total ransoms replacing the configured grid.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Single,
    Multi,
}

impl From<ModeArg> for ransomgame_protocol::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => ransomgame_protocol::Mode::Single,
            ModeArg::Multi => ransomgame_protocol::Mode::Multi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AttackerArg {
    Honest,
    WithholdKey,
    WrongKey,
    TamperBundle,
}

impl From<AttackerArg> for ransomgame_protocol::AttackerBehavior {
    fn from(a: AttackerArg) -> Self {
        use ransomgame_protocol::AttackerBehavior as B;
        match a {
            AttackerArg::Honest => B::Honest,
            AttackerArg::WithholdKey => B::WithholdKey,
            AttackerArg::WrongKey => B::WrongKey,
            AttackerArg::TamperBundle => B::TamperBundle,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[command(subcommand)]
    pub action: Option<ProtocolAction>,
    /// E2eConfig JSON file; replaces the flags below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "single")]
    pub mode: ModeArg,
    /// Payment rounds (default 1 single, 6 multi).
    #[arg(long, global = true)]
    pub rounds: Option<usize>,
    /// Victim cancels after this many withdrawn rounds.
    #[arg(long, global = true)]
    pub cancel_at: Option<usize>,
    /// Total demand in whole tokens.
    #[arg(long, global = true, default_value_t = 1000)]
    pub ransom: u64,
    #[arg(long, global = true, value_enum, default_value = "honest")]
    pub attacker: AttackerArg,
    #[arg(long, global = true, default_value_t = ransomgame_protocol::DEFAULT_CHUNK_BITS)]
    pub chunk_bits: u32,
    /// Bytes of victim data.
    #[arg(long, global = true, default_value_t = 64)]
    pub data_len: usize,
}

#[derive(Debug, Subcommand)]
pub enum ProtocolAction {
    /// Run the scripted exchange (the default).
    Demo,
    /// Re-apply a JSONL transcript and check every recorded state digest.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Session store loaded at start and written on shutdown.
    #[arg(long)]
    pub persist: Option<PathBuf>,
    /// Allowed CORS origin (default: any).
    #[arg(long)]
    pub cors_origin: Option<String>,
}
