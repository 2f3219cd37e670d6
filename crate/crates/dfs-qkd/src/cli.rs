//! Command-line front end: config loading, campaign execution, and
//! deterministic CSV/JSON emission.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adversary::{
    intercept_resend_random_mix, intercept_resend_scheme, random_unitary_attack,
    reduction_equivalence_check, AttackScheme, ReductionReport,
};
use crate::channels::NoiseDistribution;
use crate::codecs::Protocol;
use crate::quantum::Basis;
use crate::session::{
    run_baseline_bb84, run_session, AttackConfig, SessionConfig, SessionTranscript,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

pub const SUMMARY_HEADER: &str =
    "seed,protocol,channel,decoder,attack,codes_sent,accepted,sifted,check_bits,error_rate,aborted,key_bits,key_rate";

#[derive(Parser, Debug)]
#[command(
    name = "dfs-qkd",
    version,
    about = "Simulator for DFS-coded quantum key distribution over collective-noise channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Path to the JSON session config.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Number of sessions; session i uses seed base_seed + i.
    #[arg(long, default_value_t = 1)]
    pub sessions: usize,
    /// Worker threads; the output is identical for any count.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Exit with code 3 if any session aborts.
    #[arg(long)]
    pub fail_on_abort: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the coded protocol end to end.
    Run(CommonArgs),
    /// Run uncoded single-qubit BB84 over the same channel for contrast.
    Baseline(CommonArgs),
    /// Run a named eavesdropping preset.
    AttackLab {
        #[command(flatten)]
        args: CommonArgs,
        #[arg(long, value_enum)]
        attack: AttackPreset,
    },
    /// Verify that coded attacks and their single-qubit wrappings give
    /// identical outcome statistics.
    ReductionCheck {
        /// Number of seeded random attack unitaries per protocol.
        #[arg(long, default_value_t = 10)]
        attacks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Re-run the campaign once per value of a numeric config field.
    Sweep {
        #[command(flatten)]
        args: CommonArgs,
        /// One of: loss_prob, threshold, delta_pad, n.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputFormat::Csv => write!(f, "csv"),
            OutputFormat::Json => write!(f, "json"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackPreset {
    InterceptZ,
    InterceptX,
    InterceptRandom,
    Fig2Blocking,
}

impl From<AttackPreset> for AttackConfig {
    fn from(p: AttackPreset) -> Self {
        match p {
            AttackPreset::InterceptZ => AttackConfig::InterceptZ,
            AttackPreset::InterceptX => AttackConfig::InterceptX,
            AttackPreset::InterceptRandom => AttackConfig::InterceptRandom,
            AttackPreset::Fig2Blocking => AttackConfig::Fig2Blocking,
        }
    }
}

/// Loads and validates a session config, reporting JSON errors with their
/// line and column.
pub fn load_config(path: &Path) -> Result<SessionConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config: SessionConfig = serde_json::from_str(&text).map_err(|e| {
        Error::Validation(format!("{}: {e}", path.display()))
    })?;
    config.validate()?;
    Ok(config)
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign { EXIT_OK } else { EXIT_VALIDATION };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) => EXIT_VALIDATION,
                Error::Capacity(_) | Error::Io { .. } => EXIT_RUNTIME,
            }
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run(args) => run_campaign_command(args, None, false, "run"),
        Command::Baseline(args) => run_campaign_command(args, None, true, "baseline"),
        Command::AttackLab { args, attack } => {
            // The photon-blocking preset acts on bare single-qubit
            // transmissions, so it runs under the baseline harness.
            let baseline = attack == AttackPreset::Fig2Blocking;
            run_campaign_command(args, Some(attack.into()), baseline, "attack-lab")
        }
        Command::ReductionCheck { attacks, seed, out, format } => {
            reduction_check_command(attacks, seed, out, format)
        }
        Command::Sweep { args, param, values } => sweep_command(args, &param, &values),
    }
}

// ---------------------------------------------------------------------------
// Campaign execution
// ---------------------------------------------------------------------------

type Runner = fn(&SessionConfig) -> Result<SessionTranscript>;

/// Runs `sessions` seeded sessions, optionally across threads; the result
/// order (by seed) and content are independent of the worker count.
pub fn run_campaign(
    base: &SessionConfig,
    sessions: usize,
    workers: usize,
    baseline: bool,
) -> Result<Vec<SessionTranscript>> {
    if sessions == 0 {
        return Ok(vec![]);
    }
    let runner: Runner = if baseline { run_baseline_bb84 } else { run_session };
    let configs: Vec<SessionConfig> = (0..sessions)
        .map(|i| {
            let mut c = base.clone();
            c.seed = base.seed.wrapping_add(i as u64);
            c
        })
        .collect();
    if workers <= 1 {
        return configs.iter().map(runner).collect();
    }
    let workers = workers.min(sessions);
    let mut slots: Vec<Option<Result<SessionTranscript>>> =
        (0..sessions).map(|_| None).collect();
    std::thread::scope(|scope| {
        let configs = &configs;
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..sessions)
                        .step_by(workers)
                        .map(|i| (i, runner(&configs[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("all slots filled")).collect()
}

fn run_campaign_command(
    args: CommonArgs,
    attack_override: Option<AttackConfig>,
    baseline: bool,
    subcommand: &str,
) -> Result<i32> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(attack) = attack_override {
        config.attack = attack;
    }
    let transcripts = run_campaign(&config, args.sessions, args.workers, baseline)?;
    let meta = campaign_metadata(&config, &args, subcommand);
    let output = match args.format {
        OutputFormat::Csv => summary_csv(&meta, &transcripts),
        OutputFormat::Json => transcripts_json(&meta, &transcripts)?,
    };
    write_output(args.out.as_deref(), &output)?;
    if args.fail_on_abort && transcripts.iter().any(|t| t.stats.aborted) {
        return Ok(EXIT_ABORT);
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

fn fmt_noise(d: &NoiseDistribution) -> String {
    match d {
        NoiseDistribution::Uniform => "uniform".into(),
        NoiseDistribution::Fixed { angle } => format!("fixed({angle:?})"),
    }
}

/// Every resolved config value, so no default stays silent.
fn campaign_metadata(
    config: &SessionConfig,
    args: &CommonArgs,
    subcommand: &str,
) -> Vec<(String, String)> {
    vec![
        ("subcommand".into(), subcommand.into()),
        ("protocol".into(), u8::from(config.protocol).to_string()),
        ("n".into(), config.n.to_string()),
        ("delta_pad".into(), format!("{:?}", config.delta_pad)),
        ("channel".into(), config.channel.kind.to_string()),
        ("loss_prob".into(), format!("{:?}", config.channel.loss_prob)),
        ("noise_distribution".into(), fmt_noise(&config.channel.noise_distribution)),
        ("decoder".into(), config.decoder.to_string()),
        ("attack".into(), config.attack.to_string()),
        ("threshold".into(), format!("{:?}", config.threshold)),
        ("css_n".into(), config.css.n.to_string()),
        ("css_k1".into(), config.css.k1().to_string()),
        ("css_k2".into(), config.css.k2().to_string()),
        ("css_t".into(), config.css.t.to_string()),
        ("seed".into(), config.seed.to_string()),
        ("sessions".into(), args.sessions.to_string()),
        // worker count deliberately omitted: it must not affect the bytes
        ("format".into(), args.format.to_string()),
    ]
}

fn metadata_block(meta: &[(String, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
}

fn summary_row(t: &SessionTranscript) -> String {
    let s = &t.stats;
    let error_rate = s.error_rate.map(|e| format!("{e:?}")).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{:?}",
        t.config.seed,
        u8::from(t.config.protocol),
        t.config.channel.kind,
        t.config.decoder,
        t.config.attack,
        s.codes_sent,
        s.accepted,
        s.sifted,
        s.check_bits,
        error_rate,
        s.aborted,
        s.key_bits,
        s.key_rate,
    )
}

pub fn summary_csv(meta: &[(String, String)], transcripts: &[SessionTranscript]) -> String {
    let mut out = metadata_block(meta);
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for t in transcripts {
        out.push_str(&summary_row(t));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonCampaign<'a> {
    metadata: BTreeMap<&'a str, &'a str>,
    sessions: &'a [SessionTranscript],
}

fn transcripts_json(meta: &[(String, String)], transcripts: &[SessionTranscript]) -> Result<String> {
    let metadata: BTreeMap<&str, &str> =
        meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let doc = JsonCampaign { metadata, sessions: transcripts };
    serde_json::to_string_pretty(&doc)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Validation(format!("serialization failed: {e}")))
}

fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes()).map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// reduction-check
// ---------------------------------------------------------------------------

const REDUCTION_TOL: f64 = 1e-12;

#[derive(Serialize)]
struct ReductionRow {
    attack: String,
    protocol: u8,
    max_deviation: f64,
    equivalent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<ReductionReport>,
}

fn reduction_rows(attacks: usize, seed: u64, with_report: bool) -> Result<Vec<ReductionRow>> {
    let mut rows = Vec::new();
    for protocol in [Protocol::P1, Protocol::P2] {
        let mut named: Vec<(String, Vec<(f64, AttackScheme)>)> = vec![
            ("identity".into(), vec![(1.0, AttackScheme::identity())]),
            ("intercept-z".into(), vec![(1.0, intercept_resend_scheme(protocol, Basis::Z)?)]),
            ("intercept-x".into(), vec![(1.0, intercept_resend_scheme(protocol, Basis::X)?)]),
            ("intercept-random".into(), intercept_resend_random_mix(protocol)?),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..attacks {
            named.push((format!("random-{i}"), vec![(1.0, random_unitary_attack(&mut rng))]));
        }
        for (name, components) in named {
            let report = reduction_equivalence_check(&components, protocol, REDUCTION_TOL)?;
            rows.push(ReductionRow {
                attack: name,
                protocol: u8::from(protocol),
                max_deviation: report.max_deviation,
                equivalent: report.equivalent,
                report: with_report.then_some(report),
            });
        }
    }
    Ok(rows)
}

fn reduction_check_command(
    attacks: usize,
    seed: u64,
    out: Option<PathBuf>,
    format: OutputFormat,
) -> Result<i32> {
    let meta = vec![
        ("subcommand".to_string(), "reduction-check".to_string()),
        ("attacks".to_string(), attacks.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("tolerance".to_string(), format!("{REDUCTION_TOL:?}")),
    ];
    let output = match format {
        OutputFormat::Csv => {
            let rows = reduction_rows(attacks, seed, false)?;
            let mut s = metadata_block(&meta);
            s.push_str("attack,protocol,max_deviation,equivalent\n");
            for r in rows {
                s.push_str(&format!(
                    "{},{},{:e},{}\n",
                    r.attack, r.protocol, r.max_deviation, r.equivalent
                ));
            }
            s
        }
        OutputFormat::Json => {
            let rows = reduction_rows(attacks, seed, true)?;
            let metadata: BTreeMap<&str, &str> =
                meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            #[derive(Serialize)]
            struct Doc<'a> {
                metadata: BTreeMap<&'a str, &'a str>,
                checks: Vec<ReductionRow>,
            }
            let mut s = serde_json::to_string_pretty(&Doc { metadata, checks: rows })
                .map_err(|e| Error::Validation(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    write_output(out.as_deref(), &output)?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn set_param(config: &mut SessionConfig, param: &str, value: f64) -> Result<()> {
    match param {
        "loss_prob" => config.channel.loss_prob = value,
        "threshold" => config.threshold = value,
        "delta_pad" => config.delta_pad = value,
        "n" => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::Validation(format!(
                    "n must be a positive integer, got {value}"
                )));
            }
            config.n = value as usize;
        }
        other => {
            return Err(Error::Validation(format!(
                "unknown sweep parameter '{other}' (expected loss_prob, threshold, delta_pad, or n)"
            )))
        }
    }
    config.validate()
}

fn sweep_command(args: CommonArgs, param: &str, values: &[f64]) -> Result<i32> {
    let mut base = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        base.seed = seed;
    }
    let mut meta = campaign_metadata(&base, &args, "sweep");
    meta.push(("param".into(), param.into()));
    let mut any_abort = false;

    #[derive(Serialize)]
    struct SweepRow {
        param: String,
        value: f64,
        sessions: usize,
        aborts: usize,
        mean_error_rate: Option<f64>,
        mean_key_bits: f64,
        mean_key_rate: f64,
    }

    let mut rows = Vec::new();
    for &value in values {
        let mut config = base.clone();
        set_param(&mut config, param, value)?;
        // Same seed schedule for every value, for comparability.
        let transcripts = run_campaign(&config, args.sessions, args.workers, false)?;
        let agg = crate::session::aggregate(&transcripts)?;
        any_abort |= agg.aborts > 0;
        rows.push(SweepRow {
            param: param.into(),
            value,
            sessions: agg.sessions,
            aborts: agg.aborts,
            mean_error_rate: agg.mean_error_rate,
            mean_key_bits: agg.mean_key_bits,
            mean_key_rate: agg.mean_key_rate,
        });
    }

    let output = match args.format {
        OutputFormat::Csv => {
            let mut s = metadata_block(&meta);
            s.push_str("param,value,sessions,aborts,mean_error_rate,mean_key_bits,mean_key_rate\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{:?},{},{},{},{:?},{:?}\n",
                    r.param,
                    r.value,
                    r.sessions,
                    r.aborts,
                    r.mean_error_rate.map(|e| format!("{e:?}")).unwrap_or_default(),
                    r.mean_key_bits,
                    r.mean_key_rate,
                ));
            }
            s
        }
        OutputFormat::Json => {
            let metadata: BTreeMap<&str, &str> =
                meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            #[derive(Serialize)]
            struct Doc<'a> {
                metadata: BTreeMap<&'a str, &'a str>,
                rows: &'a [SweepRow],
            }
            let mut s = serde_json::to_string_pretty(&Doc { metadata, rows: &rows })
                .map_err(|e| Error::Validation(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    write_output(args.out.as_deref(), &output)?;
    if args.fail_on_abort && any_abort {
        return Ok(EXIT_ABORT);
    }
    Ok(EXIT_OK)
}
