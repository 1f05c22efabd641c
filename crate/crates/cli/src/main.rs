use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use softnav_core::commonsense::{GoalScores, Level, LlmEndpointConfig, LlmScorer, ScoreTable, Scorer, UreqTransport};
use softnav_core::harness::{
    compare, export_map, read_jsonl, run_benchmark, write_jsonl, RunConfig, ScoreSource, TraceStep, WorldSource,
};
use softnav_core::perception::Vocabulary;
use softnav_core::policy::{Mode, PolicyConfig, SolverKind};
use softnav_core::world::{generate_world, make_episodes, GridWorld, WorldGenConfig};

#[derive(Parser)]
#[command(
    name = "softnav",
    version,
    about = "Object-goal navigation benchmark with commonsense frontier selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one world and write it as JSON.
    GenWorld {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// World generator config (JSON); the household preset when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample episodes in a world file.
    GenEpisodes {
        #[arg(long)]
        world: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated goal categories; the default goal vocabulary otherwise.
        #[arg(long, value_delimiter = ',')]
        goals: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark.
    Run(RunArgs),
    /// Run two policies on the same suite.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Preset name (esc, gow, object-only, room-only) or a policy JSON file.
        #[arg(long, default_value = "esc")]
        a: String,
        #[arg(long, default_value = "gow")]
        b: String,
    },
    /// Render the agent's map at one traced step.
    ExportMap {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        world: PathBuf,
        #[arg(long, default_value_t = 0)]
        episode: usize,
        #[arg(long)]
        step: usize,
        /// Output prefix; writes `<prefix>.pgm` and `<prefix>.ppm`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Commonsense score utilities.
    Scores {
        #[command(subcommand)]
        command: ScoresCommand,
    },
}

#[derive(Subcommand)]
enum ScoresCommand {
    /// Query a chat endpoint for every goal and write a score table; the
    /// reply cache makes later runs offline.
    Fetch {
        /// Endpoint config (JSON); flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        base_url: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        vocabulary: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Esc,
    Gow,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    OneHot,
    Continuous,
}

#[derive(Args)]
struct RunArgs {
    /// Run config (JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of generated worlds.
    #[arg(long)]
    worlds: Option<usize>,
    /// Seed of the first generated world.
    #[arg(long)]
    world_seed: Option<u64>,
    /// World files instead of generated worlds.
    #[arg(long, num_args = 1..)]
    world_files: Vec<PathBuf>,
    /// Episode JSONL to use with `--world-files`.
    #[arg(long)]
    episodes: Option<PathBuf>,
    #[arg(long)]
    episodes_per_world: Option<usize>,
    #[arg(long)]
    episode_seed: Option<u64>,
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    /// Score table JSON.
    #[arg(long, conflicts_with = "endpoint")]
    scores: Option<PathBuf>,
    /// Chat endpoint config JSON.
    #[arg(long)]
    endpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long)]
    no_object: bool,
    #[arg(long)]
    no_room: bool,
    #[arg(long)]
    no_gps: bool,
    /// Master seed of the detector noise streams.
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trace: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.world_files.is_empty() {
            cfg.world = WorldSource::Files {
                worlds: self.world_files.clone(),
                episodes: self.episodes.clone(),
            };
        } else if self.episodes.is_some() {
            bail!("--episodes needs --world-files");
        }
        if let WorldSource::Generate { worlds, seed, .. } = &mut cfg.world {
            if let Some(n) = self.worlds {
                *worlds = n;
            }
            if let Some(s) = self.world_seed {
                *seed = s;
            }
        } else if self.worlds.is_some() || self.world_seed.is_some() {
            bail!("--worlds and --world-seed apply to generated worlds only");
        }
        if let Some(n) = self.episodes_per_world {
            cfg.episodes_per_world = n;
        }
        if let Some(s) = self.episode_seed {
            cfg.episode_seed = s;
        }
        if let Some(v) = &self.vocabulary {
            cfg.vocabulary = Some(v.clone());
        }
        if let Some(p) = &self.scores {
            cfg.scores = ScoreSource::Table { path: p.clone() };
        }
        if let Some(p) = &self.endpoint {
            cfg.scores = ScoreSource::Endpoint {
                endpoint: read_json(p)?,
            };
        }
        if let Some(m) = self.mode {
            cfg.policy.mode = match m {
                ModeArg::Esc => Mode::Esc,
                ModeArg::Gow => Mode::Gow,
            };
        }
        if let Some(s) = self.solver {
            cfg.policy.solver = match s {
                SolverArg::OneHot => SolverKind::OneHot,
                SolverArg::Continuous => SolverKind::Continuous,
            };
        }
        cfg.policy.use_object &= !self.no_object;
        cfg.policy.use_room &= !self.no_room;
        cfg.policy.use_gps &= !self.no_gps;
        if let Some(s) = self.noise_seed {
            cfg.noise.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        cfg.trace |= self.trace;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn policy_arg(s: &str, base: &PolicyConfig) -> Result<PolicyConfig> {
    let preset = |p: PolicyConfig| PolicyConfig {
        solver: base.solver,
        max_steps: base.max_steps,
        use_gps: base.use_gps,
        ..p
    };
    Ok(match s {
        "esc" => preset(PolicyConfig::default()),
        "gow" => preset(PolicyConfig::gow()),
        "object-only" => preset(PolicyConfig::object_only()),
        "room-only" => preset(PolicyConfig::room_only()),
        path => read_json(Path::new(path))?,
    })
}

fn print_summary(label: &str, s: &softnav_core::MetricsSummary) {
    let fd = s.frontier_dist.map_or("n/a".to_string(), |d| format!("{d:.2} m"));
    println!(
        "{label}episodes {}  SR {:.3}  SPL {:.3}  SoftSPL {:.3}  FrontierDist {fd}  errors: exploration {:.3} detection {:.3} planning {:.3}",
        s.episodes, s.sr, s.spl, s.softspl, s.errors.exploration, s.errors.detection, s.errors.planning
    );
}

fn fetch_scores(
    config: Option<PathBuf>,
    base_url: Option<String>,
    model: Option<String>,
    cache: Option<PathBuf>,
    vocabulary: Option<PathBuf>,
    out: &Path,
) -> Result<()> {
    let mut ep: LlmEndpointConfig = match config {
        Some(p) => read_json(&p)?,
        None => LlmEndpointConfig::default(),
    };
    if let Some(u) = base_url {
        ep.base_url = u;
    }
    if let Some(m) = model {
        ep.model = m;
    }
    if cache.is_some() {
        ep.cache_path = cache;
    }
    let vocab = match vocabulary {
        Some(p) => {
            Vocabulary::from_json(&std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?
        }
        None => Vocabulary::default(),
    };
    let scorer = LlmScorer::new(ep, UreqTransport)?;
    let objects = vocab.objects();
    let mut table = ScoreTable::default();
    for g in &vocab.goal_objects {
        let gs = GoalScores {
            objects: scorer.score_candidates(g, &objects, Level::Object)?,
            rooms: scorer.score_candidates(g, &vocab.rooms, Level::Room)?,
        };
        table.0.insert(g.clone(), gs);
    }
    write(out, table.to_json().as_bytes())?;
    println!(
        "wrote {} goals to {} ({} network calls, {} cached replies)",
        table.0.len(),
        out.display(),
        scorer.calls(),
        scorer.cached_replies()
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenWorld { seed, config, out } => {
            let gen: WorldGenConfig = match config {
                Some(p) => read_json(&p)?,
                None => WorldGenConfig::household(),
            };
            let w = generate_world(&gen, seed)?;
            write(&out, w.to_json().as_bytes())?;
            println!(
                "world {seed}: {} rooms, {} objects -> {}",
                w.rooms.len(),
                w.objects.len(),
                out.display()
            );
        }
        Command::GenEpisodes {
            world,
            n,
            seed,
            goals,
            out,
        } => {
            let text = std::fs::read_to_string(&world).with_context(|| format!("reading {}", world.display()))?;
            let w = GridWorld::from_json(&text).with_context(|| format!("parsing {}", world.display()))?;
            let goals = if goals.is_empty() {
                Vocabulary::default().goal_objects
            } else {
                goals
            };
            let (eps, report) = make_episodes(&w, &goals, n, seed);
            write_jsonl(&out, &eps)?;
            println!("{} episodes -> {}", eps.len(), out.display());
            if !report.skipped_goals.is_empty() {
                eprintln!(
                    "goals without a reachable instance: {}",
                    report.skipped_goals.join(", ")
                );
            }
            if report.unplaced > 0 {
                eprintln!("{} episodes could not be placed", report.unplaced);
            }
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let out = run_benchmark(&cfg)?;
            print_summary("", &out.summary);
        }
        Command::Compare { run, a, b } => {
            let cfg = run.resolve()?;
            let pa = policy_arg(&a, &cfg.policy)?;
            let pb = policy_arg(&b, &cfg.policy)?;
            let c = compare(&cfg, &pa, &pb)?;
            print_summary(&format!("{a:>12}: "), &c.a);
            print_summary(&format!("{b:>12}: "), &c.b);
            println!(
                "delta SR {:+.3}  SPL {:+.3}  exploration error {:+.3}",
                c.delta.sr, c.delta.spl, c.delta.exploration_error
            );
        }
        Command::ExportMap {
            trace,
            world,
            episode,
            step,
            out,
        } => {
            let steps: Vec<TraceStep> = read_jsonl(&trace)?;
            let text = std::fs::read_to_string(&world).with_context(|| format!("reading {}", world.display()))?;
            let w = GridWorld::from_json(&text).with_context(|| format!("parsing {}", world.display()))?;
            let img = export_map(&steps, &w, episode, step)?;
            let pgm = out.with_extension("pgm");
            let ppm = out.with_extension("ppm");
            write(&pgm, &img.pgm)?;
            write(&ppm, &img.ppm)?;
            println!("{} and {}", pgm.display(), ppm.display());
        }
        Command::Scores {
            command:
                ScoresCommand::Fetch {
                    config,
                    base_url,
                    model,
                    cache,
                    vocabulary,
                    out,
                },
        } => fetch_scores(config, base_url, model, cache, vocabulary, &out)?,
    }
    Ok(())
}
