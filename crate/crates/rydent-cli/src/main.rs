//! `rydent` command line: sweeps, adiabatic preparation, count analysis.
//!
//! Exit codes: 0 success, 2 validation failure, 3 convergence/integration
//! failure, 4 parse failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rydent::lattice::validate_device;
use rydent::{DeviceLimits, DriveParams, Error, Geometry, Partition, PartitionMode};
use rydent_cli::{
    analyze, check_row, prepare_and_sample, sweep_chain, sweep_ladder, SweepRow, CSV_HEADER,
};

/// Strip a unit suffix (um, us, rad/us, rad) and parse the number.
fn parse_quantity(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let t = ["rad/us", "rad/μs", "μm", "um", "μs", "us", "rad"]
        .iter()
        .find_map(|suf| t.strip_suffix(suf))
        .unwrap_or(t)
        .trim();
    t.parse::<f64>().map_err(|e| format!("'{s}': {e}"))
}

/// Comma list ("0.5,1.0") or range ("0.5:3.0:0.1", end inclusive).
fn parse_value_list(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("'{s}': range must be start:stop:step"));
        }
        let (start, stop, step) = (
            parse_quantity(parts[0])?,
            parse_quantity(parts[1])?,
            parse_quantity(parts[2])?,
        );
        if !(step > 0.0) || stop < start {
            return Err(format!("'{s}': need step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step).round() as usize;
        return Ok((0..=n)
            .map(|i| start + i as f64 * step)
            .filter(|&v| v <= stop + 1e-9)
            .collect());
    }
    s.split(',').map(parse_quantity).collect()
}

fn parse_index_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|f| f.trim().parse::<usize>().map_err(|e| format!("'{f}': {e}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Lsnrd,
    Lsst,
}

impl From<Variant> for rydent::ScheduleVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Lsnrd => rydent::ScheduleVariant::Lsnrd,
            Variant::Lsst => rydent::ScheduleVariant::Lsst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Drive parameters shared by all physics subcommands.
#[derive(Debug, Args)]
struct DriveArgs {
    /// Rabi frequency (rad/us)
    #[arg(long, value_parser = parse_quantity, default_value = "15.707963267948966")]
    omega: f64,
    /// Detuning at the end of the ramp (rad/us)
    #[arg(long, value_parser = parse_quantity, default_value = "54.97787143782138")]
    delta: f64,
    /// Drive phase (rad)
    #[arg(long, value_parser = parse_quantity, default_value = "0")]
    phi: f64,
    /// Blockade radius (um)
    #[arg(long, value_parser = parse_quantity, default_value = "8.375")]
    rb: f64,
}

impl DriveArgs {
    fn params(&self) -> Result<DriveParams, Error> {
        DriveParams::new(self.omega, self.delta, self.phi, self.rb)
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Blockade ratios R_b/a_x: comma list or start:stop:step
    #[arg(long, default_value = "0.5:3.0:0.1")]
    rb_over_ax: String,
    /// Detuning-to-Rabi ratio fixing delta = ratio * omega
    #[arg(long, default_value_t = 3.5)]
    delta_over_omega: f64,
    /// Display constant multiplying the estimator column
    #[arg(long, default_value_t = 1.25)]
    constant: f64,
    /// Verify entropy identities on every row
    #[arg(long)]
    check: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "rydent", version, about = "Rydberg-array entanglement toolkit")]
struct Cli {
    /// Worker threads for sweeps and ensembles
    #[arg(long, global = true, env = "RYDENT_JOBS", default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground-state entropy sweep on an N-atom chain, A = left half
    SweepChain {
        #[arg(long, default_value_t = 10)]
        n_atoms: usize,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        drive: DriveArgs,
    },
    /// Ground-state entropy sweep on a two-leg ladder, A = first leg
    SweepLadder {
        #[arg(long, default_value_t = 5)]
        n_rungs: usize,
        /// Rung-to-leg spacing ratio a_y/a_x
        #[arg(long)]
        ay_over_ax: f64,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        drive: DriveArgs,
    },
    /// Adiabatic preparation: report prepared-state entropies and fidelity
    Prepare {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        drive: DriveArgs,
        #[arg(long, value_enum, default_value_t = Variant::Lsnrd)]
        variant: Variant,
        /// Total schedule duration (us)
        #[arg(long, value_parser = parse_quantity, default_value = "4")]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Skip device-constraint validation
        #[arg(long)]
        force: bool,
    },
    /// Prepare, then sample repeated shot ensembles; emit counts and summary
    Sample {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        drive: DriveArgs,
        #[arg(long, value_enum, default_value_t = Variant::Lsnrd)]
        variant: Variant,
        #[arg(long, value_parser = parse_quantity, default_value = "4")]
        duration: f64,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 10)]
        repeats: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        force: bool,
        /// Directory for per-run counts JSON files
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Entropies of measured count files, raw and truncated
    Analyze {
        /// Count files (canonical JSON, bare JSON map, or python dict text)
        files: Vec<PathBuf>,
        /// Atoms of subsystem A, comma separated
        #[arg(long)]
        a: Option<String>,
        /// Partition JSON file {"a": [...]} (alternative to --a)
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Discard bitstrings observed fewer than this many times
        #[arg(long, default_value_t = 11)]
        min_count: u64,
        #[arg(long, default_value_t = 1.25)]
        constant: f64,
    },
    /// Check a geometry file against device limits
    ValidateGeometry {
        /// Geometry JSON file {"positions": [[x, y], ...]}
        geometry: PathBuf,
        /// Largest allowed extent (um)
        #[arg(long, value_parser = parse_quantity, default_value = "100")]
        max_extent: f64,
        /// Smallest allowed spacing (um)
        #[arg(long, value_parser = parse_quantity, default_value = "4")]
        min_spacing: f64,
    },
}

/// Geometry selection: explicit file, or a built-in chain/ladder.
#[derive(Debug, Args)]
struct TargetArgs {
    /// Geometry JSON file
    #[arg(long, conflicts_with_all = ["n_atoms", "rb_over_ax"])]
    geometry: Option<PathBuf>,
    /// Chain length (with --rb-over-ax)
    #[arg(long, default_value_t = 10)]
    n_atoms: usize,
    /// Blockade ratio fixing the chain spacing a_x = R_b / ratio
    #[arg(long, default_value_t = 1.5)]
    rb_over_ax: f64,
    /// Atoms of subsystem A (default: first half)
    #[arg(long)]
    a: Option<String>,
}

impl TargetArgs {
    fn resolve(&self, r_b: f64) -> Result<(Geometry, Partition), Error> {
        let geometry = match &self.geometry {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::parse_at(e.to_string(), path.display().to_string()))?;
                serde_json::from_str::<Geometry>(&text)
                    .map_err(|e| Error::parse_at(e.to_string(), path.display().to_string()))?
            }
            None => Geometry::chain(self.n_atoms, r_b / self.rb_over_ax)?,
        };
        let partition = match &self.a {
            Some(list) => Partition::from_a_indices(
                geometry.n_atoms(),
                parse_index_list(list).map_err(Error::parse)?,
            )?,
            None => Partition::new(&geometry, PartitionMode::ChainHalves)?,
        };
        Ok((geometry, partition))
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } => 4,
        Error::Convergence { .. } | Error::Integration { .. } => 3,
        _ => 2,
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::invalid(e.to_string()))
        }
    }
}

fn render_sweep(
    results: Vec<(f64, Result<SweepRow, Error>)>,
    args: &SweepArgs,
) -> Result<String, Error> {
    let mut rows = Vec::new();
    for (rba, r) in results {
        match r {
            Ok(row) => {
                if args.check {
                    check_row(&row, args.constant)?;
                }
                rows.push(row);
            }
            Err(e) => eprintln!("rb_over_ax = {rba}: {e}"),
        }
    }
    Ok(match args.format {
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for row in &rows {
                s.push_str(&row.to_csv_line());
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("sweep rows serialize");
            s.push('\n');
            s
        }
    })
}

fn validated(
    geometry: &Geometry,
    force: bool,
) -> Result<(), Error> {
    let violations = validate_device(geometry, &DeviceLimits::aquila());
    if violations.is_empty() {
        return Ok(());
    }
    for v in &violations {
        eprintln!("constraint violation: {v:?}");
    }
    if force {
        eprintln!("--force given, continuing despite {} violation(s)", violations.len());
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{} device-constraint violation(s); pass --force to override",
            violations.len()
        )))
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SweepChain {
            n_atoms,
            sweep,
            drive,
        } => {
            let results = sweep_chain(
                n_atoms,
                sweep.delta_over_omega,
                &parse_value_list(&sweep.rb_over_ax).map_err(Error::parse)?,
                sweep.constant,
                &drive.params()?,
                cli.jobs,
            )?;
            let text = render_sweep(results, &sweep)?;
            emit(&sweep.out, &text)
        }
        Command::SweepLadder {
            n_rungs,
            ay_over_ax,
            sweep,
            drive,
        } => {
            let results = sweep_ladder(
                n_rungs,
                ay_over_ax,
                sweep.delta_over_omega,
                &parse_value_list(&sweep.rb_over_ax).map_err(Error::parse)?,
                sweep.constant,
                &drive.params()?,
                cli.jobs,
            )?;
            let text = render_sweep(results, &sweep)?;
            emit(&sweep.out, &text)
        }
        Command::Prepare {
            target,
            drive,
            variant,
            duration,
            seed,
            force,
        } => {
            let params = drive.params()?;
            let (geometry, partition) = target.resolve(params.r_b)?;
            validated(&geometry, force)?;
            // a tiny sample keeps the output focused on the prepared state
            let outcome = prepare_and_sample(
                &geometry,
                &partition,
                &params,
                variant.into(),
                duration,
                1,
                2,
                seed,
            )?;
            let summary = serde_json::json!({
                "fidelity": outcome.fidelity,
                "prepared": outcome.prepared,
                "exact": outcome.exact,
            });
            emit(&None, &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()))
        }
        Command::Sample {
            target,
            drive,
            variant,
            duration,
            shots,
            repeats,
            seed,
            force,
            out_dir,
        } => {
            let params = drive.params()?;
            let (geometry, partition) = target.resolve(params.r_b)?;
            validated(&geometry, force)?;
            let outcome = prepare_and_sample(
                &geometry,
                &partition,
                &params,
                variant.into(),
                duration,
                shots,
                repeats,
                seed,
            )?;
            if let Some(dir) = &out_dir {
                fs::create_dir_all(dir)
                    .map_err(|e| Error::invalid(format!("{}: {e}", dir.display())))?;
                for (k, run) in outcome.runs.iter().enumerate() {
                    let path = dir.join(format!("run-{k:03}.json"));
                    fs::write(&path, run.to_json())
                        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
                }
            }
            let runs_json: Vec<serde_json::Value> = outcome
                .runs
                .iter()
                .map(|r| serde_json::from_str(&r.to_json()).unwrap())
                .collect();
            let summary = serde_json::json!({
                "fidelity": outcome.fidelity,
                "prepared": outcome.prepared,
                "exact": outcome.exact,
                "sampled": outcome.sampled,
                "runs": runs_json,
            });
            emit(&None, &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()))
        }
        Command::Analyze {
            files,
            a,
            partition,
            min_count,
            constant,
        } => {
            if files.is_empty() {
                return Err(Error::invalid("no count files given"));
            }
            let mut labeled = Vec::new();
            for path in &files {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::parse_at(e.to_string(), path.display().to_string()))?;
                let counts = rydent::parse_counts(&text).map_err(|e| match e {
                    Error::Parse { message, location } => Error::parse_at(
                        message,
                        match location {
                            Some(loc) => format!("{}: {loc}", path.display()),
                            None => path.display().to_string(),
                        },
                    ),
                    other => other,
                })?;
                labeled.push((path.display().to_string(), counts));
            }
            let n_atoms = labeled[0].1.n_atoms();
            let part = match (a, partition) {
                (Some(list), None) => {
                    Partition::from_a_indices(n_atoms, parse_index_list(&list).map_err(Error::parse)?)?
                }
                (None, Some(path)) => {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| Error::parse_at(e.to_string(), path.display().to_string()))?;
                    #[derive(serde::Deserialize)]
                    struct PartitionFile {
                        a: Vec<usize>,
                    }
                    let pf: PartitionFile = serde_json::from_str(&text)
                        .map_err(|e| Error::parse_at(e.to_string(), path.display().to_string()))?;
                    Partition::from_a_indices(n_atoms, pf.a)?
                }
                (None, None) => {
                    Partition::from_a_indices(n_atoms, (0..n_atoms / 2).collect())?
                }
                (Some(_), Some(_)) => {
                    return Err(Error::invalid("give either --a or --partition, not both"))
                }
            };
            let report = analyze(&labeled, &part, min_count, constant)?;
            emit(&None, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()))
        }
        Command::ValidateGeometry {
            geometry,
            max_extent,
            min_spacing,
        } => {
            let text = fs::read_to_string(&geometry)
                .map_err(|e| Error::parse_at(e.to_string(), geometry.display().to_string()))?;
            let geo: Geometry = serde_json::from_str(&text)
                .map_err(|e| Error::parse_at(e.to_string(), geometry.display().to_string()))?;
            let limits = DeviceLimits::new(max_extent, min_spacing)?;
            let violations = validate_device(&geo, &limits);
            let out = serde_json::json!({
                "n_atoms": geo.n_atoms(),
                "extent": geo.extent(),
                "min_spacing": geo.min_spacing(),
                "violations": violations,
            });
            emit(&None, &format!("{}\n", serde_json::to_string_pretty(&out).unwrap()))?;
            if violations.is_empty() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{} violation(s)", violations.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
