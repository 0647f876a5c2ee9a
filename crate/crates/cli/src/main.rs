use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use egoauth_authsvc::events::{EventLog, JsonlLog, NullLog};
use egoauth_authsvc::{AuthService, Corpus, CorpusManifest, ServiceError, SystemClock, DEFAULT_CORPUS};
use egoauth_cli::attack::{simulate_attacker, AttackConfig, AttackerProfile, LatencyModel};
use egoauth_cli::config::{AppConfig, ConfigError};
use egoauth_cli::pipeline::{self, DayInput, MANIFEST_FILE};
use egoauth_cli::synth::{make_synthetic_corpus, SyntheticScenePlan};
use egoauth_core::challenges::{generate_arrangement_with, generate_selection_with, ChallengeFormat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "egoauth", version, about = "Graphical passwords from egocentric video")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice; overrides the file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select key frames from a frame directory (or its day<N> subdirectories).
    Ingest {
        input: PathBuf,
        #[arg(long)]
        work: PathBuf,
        /// Fixation CSV; only with a single day.
        #[arg(long)]
        fixations: Option<PathBuf>,
    },
    /// Describe the key frames in a work directory and fit the PCA.
    Featurize {
        #[arg(long)]
        work: PathBuf,
    },
    /// Cluster descriptors into timelines and write the corpus manifest.
    Timeline {
        #[arg(long)]
        work: PathBuf,
    },
    /// All of ingest, featurize and timeline.
    Pipeline {
        input: PathBuf,
        #[arg(long)]
        work: PathBuf,
        #[arg(long)]
        fixations: Option<PathBuf>,
    },
    /// Print challenges drawn from a corpus, one JSON object per line.
    Generate {
        #[arg(long)]
        work: PathBuf,
        #[arg(long, default_value = "arrangement")]
        format: Format,
        #[arg(long)]
        force_length: Option<usize>,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Run the login service.
    Serve {
        /// Corpus work directory served as the default corpus.
        #[arg(long)]
        work: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
    },
    /// Render a synthetic frame corpus with known scene boundaries.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// recurring, six or two-days.
        #[arg(long, default_value = "recurring")]
        plan: String,
    },
    /// Simulate an attacker against a corpus.
    Attack {
        #[arg(long)]
        work: PathBuf,
        #[arg(long, default_value = "arrangement")]
        format: Format,
        #[arg(long, default_value = "random")]
        attacker: Attacker,
        /// Probability each judgement of an informed attacker is right.
        #[arg(long)]
        knowledge: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        force_length: Option<usize>,
        #[arg(long)]
        n_images: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Arrangement,
    Selection,
}

impl From<Format> for ChallengeFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Arrangement => ChallengeFormat::Arrangement,
            Format::Selection => ChallengeFormat::Selection,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Attacker {
    Random,
    Fixed,
    Informed,
    Oracle,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for configuration problems, 3 for bad or insufficient data, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(core) = cause.downcast_ref::<egoauth_core::Error>() {
            return if core.is_config() { 2 } else { 3 };
        }
        if let Some(svc) = cause.downcast_ref::<ServiceError>() {
            match svc {
                ServiceError::Config(_) => return 2,
                ServiceError::Core(core) => return if core.is_config() { 2 } else { 3 },
                _ => {}
            }
        }
    }
    1
}

fn load_config(cli: &Cli) -> Result<AppConfig> {
    let config = match &cli.config {
        Some(path) => AppConfig::load(path)?,
        None => AppConfig::default(),
    };
    Ok(config.with_seed(cli.seed))
}

fn days_for(input: &Path, fixations: Option<PathBuf>) -> Result<Vec<DayInput>> {
    let mut days = pipeline::discover_days(input)?;
    if let Some(f) = fixations {
        if days.len() != 1 {
            return Err(ConfigError("--fixations needs a single-day input".into()).into());
        }
        days[0].fixations = Some(f);
    }
    Ok(days)
}

fn load_corpus(work: &Path) -> Result<Corpus> {
    Ok(CorpusManifest::load(&work.join(MANIFEST_FILE))?.into())
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Ingest { input, work, fixations } => {
            let days = days_for(&input, fixations)?;
            std::fs::create_dir_all(&work).with_context(|| format!("creating {}", work.display()))?;
            for day in &days {
                let (k, kept) = pipeline::ingest_day(day, &config.ingest)?;
                pipeline::write_keyframes(&work, day.day_tag, k, &kept)?;
                println!("day {}: k={} k'={}", day.day_tag, k, kept.len());
            }
        }
        Command::Featurize { work } => {
            let (frames, _) = pipeline::read_keyframes(&work)?;
            let (pca, descriptors) = pipeline::featurize(&frames, &config)?;
            pipeline::write_descriptors(&work, &pca, &descriptors)?;
            println!("descriptors: {} -> {} dims", pca.input_len(), pca.n_components());
        }
        Command::Timeline { work } => {
            let descriptors = pipeline::read_descriptors(&work)?;
            let pca = pipeline::read_pca(&work)?;
            let (_, counts) = pipeline::read_keyframes(&work)?;
            let timelines = pipeline::build_timelines(&descriptors, &config)?;
            pipeline::write_timelines(&work, &timelines, &descriptors)?;
            let summary = pipeline::write_summary(&work, &timelines, &counts, &pca)?;
            println!("{summary}");
        }
        Command::Pipeline { input, work, fixations } => {
            let days = days_for(&input, fixations)?;
            let out = pipeline::run_pipeline(&days, &config, &work)?;
            println!("{}", out.summary);
        }
        Command::Generate { work, format, force_length, count } => {
            let corpus = load_corpus(&work)?;
            let mut rng = match config.seed {
                Some(s) => ChaCha8Rng::seed_from_u64(s),
                None => ChaCha8Rng::from_os_rng(),
            };
            let force_length = force_length.or(config.service.force_length);
            for _ in 0..count {
                let challenge = match ChallengeFormat::from(format) {
                    ChallengeFormat::Arrangement => {
                        let timeline = corpus
                            .arrangement
                            .as_ref()
                            .ok_or_else(|| egoauth_core::Error::CorpusEmpty("no arrangement timeline".into()))?;
                        let n = force_length.unwrap_or(config.service.n_images);
                        generate_arrangement_with(timeline, n, &mut rng, 0)?
                    }
                    ChallengeFormat::Selection => {
                        let pools = corpus
                            .selection
                            .as_ref()
                            .ok_or_else(|| egoauth_core::Error::CorpusEmpty("selection needs two days".into()))?;
                        generate_selection_with(pools, force_length, &mut rng, 0)?
                    }
                };
                println!("{}", serde_json::to_string(&challenge)?);
            }
        }
        Command::Serve { work, bind } => {
            let mut service_config = config.service.clone();
            if let Some(work) = &work {
                service_config
                    .corpora
                    .insert(DEFAULT_CORPUS.to_string(), work.join(MANIFEST_FILE));
            }
            if let Some(bind) = bind {
                service_config.bind = bind;
            }
            let events: Arc<dyn EventLog> = match &service_config.event_log {
                Some(path) => Arc::new(JsonlLog::open(path)?),
                None => Arc::new(NullLog),
            };
            let bind = service_config.bind.clone();
            let snapshot = service_config.snapshot.clone();
            let service = Arc::new(AuthService::new(service_config, Arc::new(SystemClock), events)?);
            service.load_configured_corpora()?;
            if let Some(path) = snapshot.as_deref().filter(|p| p.exists()) {
                service.load_snapshot(path)?;
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let server = egoauth_authsvc::http::serve(service.clone(), &bind);
                tokio::select! {
                    r = server => r.context("serving"),
                    _ = tokio::signal::ctrl_c() => Ok(()),
                }
            })?;
            if let Some(path) = snapshot {
                service.save_snapshot(&path)?;
            }
        }
        Command::Synth { out, plan } => {
            let plan = SyntheticScenePlan::by_name(&plan).map_err(|e| ConfigError(e.to_string()))?;
            let truth = make_synthetic_corpus(&plan, config.seed.unwrap_or(0), &out)?;
            for day in &truth.days {
                println!(
                    "day {}: {} frames, boundaries {:?}",
                    day.day_tag,
                    day.frames.len(),
                    day.boundaries
                );
            }
        }
        Command::Attack { work, format, attacker, knowledge, trials, force_length, n_images } => {
            let profile = match attacker {
                Attacker::Random => AttackerProfile::random(),
                Attacker::Fixed => AttackerProfile::fixed_pattern(),
                Attacker::Informed => AttackerProfile::informed(
                    knowledge.ok_or_else(|| ConfigError("--knowledge is required for the informed attacker".into()))?,
                )
                .map_err(|e| ConfigError(e.to_string()))?,
                Attacker::Oracle => AttackerProfile::oracle(),
            };
            let attack = AttackConfig {
                format: format.into(),
                trials,
                force_length: force_length.or(config.service.force_length),
                n_images: n_images.unwrap_or(config.service.n_images),
                seed: config.seed.unwrap_or(0),
                latency: LatencyModel::default(),
                ..AttackConfig::default()
            };
            let report = simulate_attacker(profile, load_corpus(&work)?, &attack)?;
            println!("{report}");
        }
    }
    Ok(())
}
