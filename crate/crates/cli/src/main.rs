//! Command line front end: scenario configs in, deterministic CSV/JSON
//! artifacts out. Every run also writes a `manifest.json` naming the
//! command, config, seed, and produced files.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

use lenssim::beamsteer::{build_steering_map, make_codebook};
use lenssim::em::{CutPlane, RadioConstants};
use lenssim::radiation::{pattern_engine, RadiationPattern};
use lenssim::scenario::{
    content_hash, from_toml_str, preset, preset_names, ArrayJobConfig, IndoorMuConfig,
    OutdoorMuConfig, DEFAULT_SEED,
};
use lenssim::syssim::{
    backhaul_throughput, link_level_budget, run_indoor_mu, run_outdoor_mu, BackhaulParams,
    LinkLevelParams,
};
use lenssim::{Error, Result};

/// Feed port whose cut seeds the multi-user codebooks: a center port of the
/// steerable 4 x 4 array behind its largest lens.
const CODEBOOK_SOURCE_PORT: u32 = 11;

#[derive(Parser)]
#[command(name = "lenssim", version, about = "Lens-array antenna and link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (env LENSSIM_OUT overrides the default ".").
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for randomized runs; fixed default keeps runs reproducible.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Worker threads for multi-user runs; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Radiation pattern of one feed port: full-sphere CSV plus metrics JSON.
    Pattern {
        #[command(flatten)]
        source: ConfigSource,
        /// Feed port override (1-based).
        #[arg(long)]
        port: Option<u32>,
    },
    /// Steering table of every port: peak direction, gain, beamwidth.
    Steermap {
        #[command(flatten)]
        source: ConfigSource,
    },
    /// Point-to-point backhaul link budgets.
    Backhaul {
        #[command(flatten)]
        source: ConfigSource,
        /// Run a single case (1 = obstructed 450 m, 2 = clear 636 m).
        #[arg(long)]
        case: Option<u8>,
        /// Only the lens-equipped runs.
        #[arg(long, conflicts_with = "no_lens")]
        lens: bool,
        /// Only the bare-array runs.
        #[arg(long)]
        no_lens: bool,
    },
    /// Multi-user downlink throughput sweeps with empirical CDFs.
    Mumimo {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long, value_enum)]
        scenario: ScenarioKind,
        /// Codebook sizes to sweep (outdoor only), e.g. 8,16,32,64.
        #[arg(long, value_delimiter = ',')]
        beams: Option<Vec<usize>>,
    },
    /// Short-range wideband Shannon bound against the modulation ceiling.
    Linkbudget {
        #[command(flatten)]
        source: ConfigSource,
    },
    /// Re-derive every calibrated default and write the report.
    Calibrate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Pattern { .. } => "pattern",
            Command::Steermap { .. } => "steermap",
            Command::Backhaul { .. } => "backhaul",
            Command::Mumimo { .. } => "mumimo",
            Command::Linkbudget { .. } => "linkbudget",
            Command::Calibrate => "calibrate",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioKind {
    Outdoor,
    Indoor,
}

/// Where a command's config comes from: a TOML file or a shipped preset.
#[derive(Args)]
struct ConfigSource {
    /// TOML config file.
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Shipped preset name.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

impl ConfigSource {
    /// Parse the config, falling back to `default_preset` when neither
    /// source is given. Returns the value plus provenance for the manifest.
    fn load<T: DeserializeOwned>(
        &self,
        default_preset: Option<&str>,
    ) -> Result<(T, Option<String>, Option<String>)> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("read {}: {e}", path.display())))?;
            let value = from_toml_str(&text)?;
            return Ok((value, Some(path.display().to_string()), None));
        }
        let name = match (self.preset.as_deref(), default_preset) {
            (Some(name), _) => name,
            (None, Some(name)) => name,
            (None, None) => {
                return Err(Error::Config(format!(
                    "pass --config FILE or --preset NAME (shipped presets: {})",
                    preset_names().join(", ")
                )))
            }
        };
        let body = preset(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown preset '{name}'; shipped presets: {}",
                preset_names().join(", ")
            ))
        })?;
        let value = from_toml_str(body)?;
        Ok((value, None, Some(name.to_string())))
    }
}

/// Output directory plus the list of files written into it.
struct Workspace {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl Workspace {
    fn create(dir: PathBuf) -> anyhow::Result<Self> {
        fs::create_dir_all(&dir)
            .with_context(|| format!("create output directory {}", dir.display()))?;
        Ok(Self { dir, outputs: Vec::new() })
    }

    fn write(&mut self, name: &str, mut body: String) -> anyhow::Result<()> {
        if !body.ends_with('\n') {
            body.push('\n');
        }
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("write {}", path.display()))?;
        eprintln!("wrote {}", path.display());
        self.outputs.push(name.to_string());
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let rc = RadioConstants::ka_band_28ghz();
    let dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("LENSSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut ws = Workspace::create(dir)?;
    let command_name = cli.command.name();

    let (config_path, preset_name, scenario_hash) = match &cli.command {
        Command::Pattern { source, port } => {
            let (job, path, pre) = source.load::<ArrayJobConfig>(None)?;
            let hash = content_hash(&job);
            cmd_pattern(&mut ws, &job, port.unwrap_or_else(|| job.port_or_first()), &rc, &hash)?;
            (path, pre, Some(hash))
        }
        Command::Steermap { source } => {
            let (job, path, pre) = source.load::<ArrayJobConfig>(None)?;
            let hash = content_hash(&job);
            cmd_steermap(&mut ws, &job, &rc)?;
            (path, pre, Some(hash))
        }
        Command::Backhaul { source, case, lens, no_lens } => {
            let (params, path, pre) = source.load::<BackhaulParams>(Some("backhaul"))?;
            let hash = content_hash(&params);
            let cases: Vec<u8> = case.map_or_else(|| vec![1, 2], |c| vec![c]);
            let sides: Vec<bool> = match (lens, no_lens) {
                (true, _) => vec![true],
                (_, true) => vec![false],
                _ => vec![true, false],
            };
            for c in &cases {
                for with_lens in &sides {
                    let budget = backhaul_throughput(*c, *with_lens, &params, &rc)?;
                    ws.write(&format!("{}.json", budget.label), budget.to_json())?;
                }
            }
            (path, pre, Some(hash))
        }
        Command::Mumimo { source, scenario, beams } => match scenario {
            ScenarioKind::Outdoor => {
                let (mut cfg, path, pre) = source.load::<OutdoorMuConfig>(Some("outdoor_mu"))?;
                if let Some(beams) = beams {
                    cfg.beams = beams.clone();
                }
                let hash = content_hash(&cfg);
                cmd_mumimo_outdoor(&mut ws, &cfg, &rc, cli.seed, cli.workers)?;
                (path, pre, Some(hash))
            }
            ScenarioKind::Indoor => {
                if beams.is_some() {
                    return Err(Error::Config(
                        "indoor streams take their lobe shape from the config's \
                         codebook_size; --beams applies to the outdoor sweep"
                            .into(),
                    )
                    .into());
                }
                let (cfg, path, pre) = source.load::<IndoorMuConfig>(Some("indoor_mu"))?;
                let hash = content_hash(&cfg);
                cmd_mumimo_indoor(&mut ws, &cfg, &rc)?;
                (path, pre, Some(hash))
            }
        },
        Command::Linkbudget { source } => {
            let (params, path, pre) = source.load::<LinkLevelParams>(Some("linklevel"))?;
            let hash = content_hash(&params);
            let report = link_level_budget(&params, &rc)?;
            ws.write("linklevel.json", report.to_json())?;
            (path, pre, Some(hash))
        }
        Command::Calibrate => {
            let report = lenssim::calibrate::run_full_calibration(&rc)?;
            ws.write("calibration.json", serde_json::to_string_pretty(&report)?)?;
            (None, None, None)
        }
    };

    let manifest = json!({
        "command": command_name,
        "config_path": config_path,
        "preset": preset_name,
        "seed": cli.seed,
        "workers": cli.workers,
        "scenario_hash": scenario_hash,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "outputs": ws.outputs,
    });
    ws.write("manifest.json", serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn cmd_pattern(
    ws: &mut Workspace,
    job: &ArrayJobConfig,
    port: u32,
    rc: &RadioConstants,
    config_hash: &str,
) -> anyhow::Result<()> {
    let array = job.array.build()?;
    let engine = pattern_engine(&array, port, rc)?;
    for warning in engine.warnings() {
        eprintln!("warning: {warning}");
    }
    ws.write("pattern.csv", engine.reference().to_csv())?;
    let mut metrics = serde_json::to_value(engine.summary()?)?;
    metrics["config_hash"] = json!(config_hash);
    ws.write("pattern_metrics.json", serde_json::to_string_pretty(&metrics)?)?;
    Ok(())
}

fn cmd_steermap(ws: &mut Workspace, job: &ArrayJobConfig, rc: &RadioConstants) -> anyhow::Result<()> {
    let array = job.array.build()?;
    let map = build_steering_map(&array, rc)?;
    if map.degenerate {
        eprintln!(
            "warning: steering map is degenerate (spread {:.3} deg); \
             this array does not steer",
            map.in_plane_spread_deg()
        );
    }
    ws.write("steermap.json", map.to_json())?;
    Ok(())
}

/// Cut that seeds every codebook: the steered array's published plane.
fn codebook_source(rc: &RadioConstants) -> Result<RadiationPattern> {
    let cfg = lenssim::array::ArrayConfig::steerable_grid(3)?;
    pattern_engine(&cfg, CODEBOOK_SOURCE_PORT, rc)?.cut(CutPlane::Vertical, 90.0, 0.05)
}

fn cmd_mumimo_outdoor(
    ws: &mut Workspace,
    cfg: &OutdoorMuConfig,
    rc: &RadioConstants,
    seed: u64,
    workers: usize,
) -> anyhow::Result<()> {
    let source = codebook_source(rc)?;
    for &n_beams in &cfg.beams {
        let codebook = make_codebook(n_beams, &source)?;
        for (hi, &height) in cfg.heights_m.iter().enumerate() {
            let mut scenario = cfg.scenario.clone();
            scenario.geometry.tx_height_m = height;
            for lens in [true, false] {
                let report = run_outdoor_mu(&scenario, &codebook, lens, seed, workers)?;
                ws.write(&format!("{}.json", report.label), report.to_json())?;
                if hi == 0 {
                    ws.write(&format!("{}.cdf.csv", report.label), report.cdf_csv())?;
                }
            }
        }
    }
    Ok(())
}

fn cmd_mumimo_indoor(
    ws: &mut Workspace,
    cfg: &IndoorMuConfig,
    rc: &RadioConstants,
) -> anyhow::Result<()> {
    let source = codebook_source(rc)?;
    let codebook = make_codebook(cfg.codebook_size, &source)?;
    for lens in [true, false] {
        let report = run_indoor_mu(&cfg.scenario, &codebook, lens)?;
        ws.write(&format!("{}.json", report.label), report.to_json())?;
        ws.write(&format!("{}.cdf.csv", report.label), report.cdf_csv())?;
    }
    Ok(())
}
