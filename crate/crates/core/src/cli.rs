//! Command-line surface.
//!
//! Four subcommands tie the modules together: `validate` (model file
//! checking), `sf-tau` (half-spectral flow of a built-in family),
//! `suspension-check` (flow vs. suspension kernel parity), and `bec`
//! (bulk vs. edge invariant of a lattice model). Exit codes: 0 success,
//! 1 I/O failure, 2 invalid input, 3 numerical refusal.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bulk::{bec_verify, BecOptions, BulkOptions};
use crate::error::{CoreError, Result};
use crate::fixtures;
use crate::flow::{sf_tau_circle, sf_tau_line, EpsPolicy, FlowParams};
use crate::lattice::{edge_spectrum, load_model, EdgeOptions, TightBindingModel};
use crate::path::PathDomain;
use crate::report::Report;
use crate::suspension::{robbin_salamon_z2_check, SuspensionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(
    name = "z2flow",
    about = "Z2-valued spectral flow, suspension indices, and the bulk-edge correspondence"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "human")]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a model file against the format and symmetry invariants.
    Validate {
        /// Path to a model JSON document.
        #[arg(long)]
        model: PathBuf,
    },
    /// Half-spectral flow of a built-in operator family.
    SfTau {
        /// One of the built-in family names.
        #[arg(long)]
        fixture: String,
        /// Kernel window for crossing detection.
        #[arg(long, default_value_t = 1e-8)]
        kernel_tol: f64,
    },
    /// Compare the half-spectral flow against the suspension kernel parity.
    SuspensionCheck {
        /// One of the built-in family names.
        #[arg(long)]
        fixture: String,
        /// Fourier modes for circle families (doubled once for stability).
        #[arg(long, default_value_t = 16)]
        modes: usize,
        /// Grid points for line families (doubled once for stability).
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        kernel_tol: f64,
    },
    /// Bulk and edge Z2 invariants of a lattice model, with equality verdict.
    Bec {
        /// Path to a model JSON document.
        #[arg(long, conflicts_with = "fixture")]
        model: Option<PathBuf>,
        /// Built-in model name (`bhz` or `atomic`).
        #[arg(long)]
        fixture: Option<String>,
        /// Mass parameter for the bhz fixture.
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        /// Override the Fermi level.
        #[arg(long)]
        fermi: Option<f64>,
        /// Retained edge sites.
        #[arg(long, default_value_t = 30)]
        sites: usize,
        /// Edge scan points around the circle.
        #[arg(long, default_value_t = 400)]
        t_points: usize,
        /// Wilson-loop resolution around the s circle.
        #[arg(long, default_value_t = 100)]
        s_points: usize,
        /// Wannier tracking points over the half cycle.
        #[arg(long, default_value_t = 40)]
        track_points: usize,
        #[arg(long, default_value_t = 1e-6)]
        kernel_tol: f64,
        #[arg(long, default_value_t = 0.9)]
        loc_threshold: f64,
        /// Seed for the deterministic re-gauge sub-check.
        #[arg(long, default_value_t = 0xC0FFEE)]
        seed: u64,
        /// Emit the edge band structure as CSV (t,branch,eigenvalue,left_weight).
        #[arg(long)]
        edge_csv: Option<PathBuf>,
        /// Emit the Wannier flow as CSV (t,phase_index,phase).
        #[arg(long)]
        wannier_csv: Option<PathBuf>,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    run_cli(&cli)
}

fn run_cli(cli: &Cli) -> i32 {
    let started = Instant::now();
    match dispatch(&cli.command) {
        Ok((mut report, code)) => {
            report.timing_ms = Some(started.elapsed().as_millis() as u64);
            let text = match cli.format {
                Format::Human => report.to_human(),
                Format::Machine => report.to_machine_json(),
            };
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("error: {e}");
                    return 1;
                }
            } else {
                println!("{text}");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_class()
        }
    }
}

fn dispatch(cmd: &Command) -> Result<(Report, i32)> {
    match cmd {
        Command::Validate { model } => cmd_validate(model),
        Command::SfTau {
            fixture,
            kernel_tol,
        } => cmd_sf_tau(fixture, *kernel_tol),
        Command::SuspensionCheck {
            fixture,
            modes,
            grid,
            kernel_tol,
        } => cmd_suspension_check(fixture, *modes, *grid, *kernel_tol),
        Command::Bec {
            model,
            fixture,
            mass,
            fermi,
            sites,
            t_points,
            s_points,
            track_points,
            kernel_tol,
            loc_threshold,
            seed,
            edge_csv,
            wannier_csv,
        } => cmd_bec(&BecConfig {
            model: model.clone(),
            fixture: fixture.clone(),
            mass: *mass,
            fermi: *fermi,
            sites: *sites,
            t_points: *t_points,
            s_points: *s_points,
            track_points: *track_points,
            kernel_tol: *kernel_tol,
            loc_threshold: *loc_threshold,
            seed: *seed,
            edge_csv: edge_csv.clone(),
            wannier_csv: wannier_csv.clone(),
        }),
    }
}

fn cmd_validate(path: &Path) -> Result<(Report, i32)> {
    let text = std::fs::read_to_string(path)?;
    let digest = format!("validate:{text}");
    match load_model(&text) {
        Ok(model) => {
            let result = serde_json::json!({
                "valid": true,
                "k": model.k(),
                "fermi_level": model.fermi_level(),
                "hoppings": model.hopping_count(),
                "hop_range": { "p": model.hop_range().0, "q": model.hop_range().1 },
            });
            Ok((Report::new("validate", &digest, result), 0))
        }
        Err(e) if e.exit_class() == 1 => Err(e),
        Err(e) => {
            let result = serde_json::json!({
                "valid": false,
                "error": e.to_string(),
            });
            Ok((Report::new("validate", &digest, result), 2))
        }
    }
}

fn lookup_path_fixture(name: &str) -> Result<crate::path::OperatorPath> {
    fixtures::builtin_path(name).ok_or_else(|| {
        CoreError::Parse(format!(
            "unknown family '{name}'; built-ins: {}",
            fixtures::BUILTIN_PATH_NAMES.join(", ")
        ))
    })
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(CoreError::Parse(format!("{name} must be positive, got {value}")))
    }
}

fn require_at_least(name: &str, value: usize, minimum: usize) -> Result<()> {
    if value >= minimum {
        Ok(())
    } else {
        Err(CoreError::Parse(format!(
            "{name} must be at least {minimum}, got {value}"
        )))
    }
}

fn cmd_sf_tau(fixture: &str, kernel_tol: f64) -> Result<(Report, i32)> {
    require_positive("kernel-tol", kernel_tol)?;
    let path = lookup_path_fixture(fixture)?;
    let fp = FlowParams {
        kernel_tol,
        ..FlowParams::default()
    };
    let digest = format!("sf-tau:{fixture}:{kernel_tol}");
    let records = crate::flow::find_crossings(&path, &fp)?;
    let crossings: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            serde_json::json!({
                "t": r.t,
                "kernel_rank": r.kernel_rank,
                "signature": r.crossing_signature,
                "refinement_width": r.refinement_width,
            })
        })
        .collect();
    let (value, domain, shift) = match path.domain() {
        PathDomain::Line { .. } => (sf_tau_line(&path, &fp)?, "line", None),
        PathDomain::Circle => {
            let res = sf_tau_circle(&path, &fp, EpsPolicy::ShiftIfSingular)?;
            (res.value, "circle", res.shift_applied)
        }
    };
    let result = serde_json::json!({
        "fixture": fixture,
        "domain": domain,
        "sf_tau": value,
        "crossings": crossings,
        "shift_applied": shift,
    });
    let mut report = Report::new("sf-tau", &digest, result);
    if let Some(eps) = shift {
        report.warn(format!(
            "seam operator singular; family shifted by {eps:.3e}"
        ));
    }
    Ok((report, 0))
}

fn cmd_suspension_check(
    fixture: &str,
    modes: usize,
    grid: usize,
    kernel_tol: f64,
) -> Result<(Report, i32)> {
    require_positive("kernel-tol", kernel_tol)?;
    require_at_least("modes", modes, 1)?;
    require_at_least("grid", grid, 3)?;
    let path = lookup_path_fixture(fixture)?;
    let fp = FlowParams {
        kernel_tol,
        ..FlowParams::default()
    };
    let sp = SuspensionParams::default();
    let schedule = match path.domain() {
        PathDomain::Line { .. } => vec![grid, 2 * grid],
        PathDomain::Circle => vec![modes, 2 * modes],
    };
    let digest = format!("suspension-check:{fixture}:{modes}:{grid}:{kernel_tol}");
    let rep = robbin_salamon_z2_check(&path, &schedule, &fp, &sp)?;
    let result = serde_json::json!({
        "fixture": fixture,
        "sf_tau": rep.sf_tau,
        "tau_index": rep.tau_index,
        "equal": rep.equal,
        "resolutions": rep.resolutions,
        "kernel_dims": rep.kernel_dims,
        "singular_value_gaps": rep.gaps,
        "shift_applied": rep.shift_applied,
    });
    let mut report = Report::new("suspension-check", &digest, result);
    if let Some(eps) = rep.shift_applied {
        report.warn(format!(
            "seam operator singular; family shifted by {eps:.3e}"
        ));
    }
    Ok((report, 0))
}

struct BecConfig {
    model: Option<PathBuf>,
    fixture: Option<String>,
    mass: f64,
    fermi: Option<f64>,
    sites: usize,
    t_points: usize,
    s_points: usize,
    track_points: usize,
    kernel_tol: f64,
    loc_threshold: f64,
    seed: u64,
    edge_csv: Option<PathBuf>,
    wannier_csv: Option<PathBuf>,
}

fn resolve_model(cfg: &BecConfig) -> Result<(TightBindingModel, String)> {
    let (model, digest) = match (&cfg.model, &cfg.fixture) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            (load_model(&text)?, format!("model:{text}"))
        }
        (None, Some(name)) => {
            let model = fixtures::builtin_model(name, cfg.mass).ok_or_else(|| {
                CoreError::Parse(format!(
                    "unknown model fixture '{name}'; built-ins: {}",
                    fixtures::BUILTIN_MODEL_NAMES.join(", ")
                ))
            })?;
            (model, format!("fixture:{name}:mass={}", cfg.mass))
        }
        (None, None) => {
            return Err(CoreError::Parse(
                "either --model or --fixture is required".into(),
            ))
        }
    };
    let model = match cfg.fermi {
        Some(mu) => model.with_fermi_level(mu),
        None => model,
    };
    Ok((model, digest))
}

fn cmd_bec(cfg: &BecConfig) -> Result<(Report, i32)> {
    require_positive("kernel-tol", cfg.kernel_tol)?;
    require_at_least("sites", cfg.sites, 1)?;
    require_at_least("t-points", cfg.t_points, 8)?;
    require_at_least("s-points", cfg.s_points, 4)?;
    require_at_least("track-points", cfg.track_points, 4)?;
    if !(0.5..1.0).contains(&cfg.loc_threshold) {
        return Err(CoreError::Parse(format!(
            "loc-threshold must lie in (0.5, 1), got {}",
            cfg.loc_threshold
        )));
    }
    let (model, model_digest) = resolve_model(cfg)?;
    let opts = BecOptions {
        n_sites: cfg.sites,
        edge: EdgeOptions {
            t_points: cfg.t_points,
            loc_threshold: cfg.loc_threshold,
            kernel_tol: cfg.kernel_tol,
            ..EdgeOptions::default()
        },
        bulk: BulkOptions {
            t_points: cfg.track_points,
            s_points: cfg.s_points,
            ..BulkOptions::default()
        },
        gauge_check_seed: cfg.seed,
    };
    let digest = format!(
        "bec:{model_digest}:fermi={:?}:sites={}:t={}:s={}:track={}:ktol={}:loc={}:seed={}",
        cfg.fermi,
        cfg.sites,
        cfg.t_points,
        cfg.s_points,
        cfg.track_points,
        cfg.kernel_tol,
        cfg.loc_threshold,
        cfg.seed
    );
    let rep = bec_verify(&model, &opts)?;

    if let Some(path) = &cfg.edge_csv {
        write_edge_csv(path, &model, cfg.sites, cfg.t_points)?;
    }
    if let Some(path) = &cfg.wannier_csv {
        write_wannier_csv(path, &rep.bulk.flow)?;
    }

    let result = serde_json::json!({
        "bulk_index": rep.bulk.value,
        "edge_index": rep.edge.value,
        "equal": rep.equal,
        "gauge_consistent": rep.gauge_consistent,
        "bulk": {
            "n_occ": rep.bulk.n_occ,
            "crossing_count": rep.bulk.crossing_count,
            "reference_phase": rep.bulk.reference_phase,
            "min_gap": rep.bulk.min_gap,
        },
        "edge": {
            "n_sites": rep.edge.n_sites,
            "t_points": rep.edge.t_points,
            "crossings": rep.edge.crossings,
            "min_localization_margin": rep.edge.min_margin,
        },
    });
    let mut report = Report::new("bec", &digest, result);
    report.seed = Some(cfg.seed);
    if !rep.gauge_consistent {
        report.warn("bulk index changed under re-gauging; treat the result as unreliable");
    }
    if rep.edge.min_margin < 0.05 {
        report.warn(format!(
            "localization margin {:.3} is thin; consider more sites",
            rep.edge.min_margin
        ));
    }
    Ok((report, 0))
}

fn write_edge_csv(
    path: &Path,
    model: &TightBindingModel,
    sites: usize,
    t_points: usize,
) -> Result<()> {
    let rows = edge_spectrum(model, sites, t_points)?;
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "t,branch,eigenvalue,left_weight")?;
    for r in rows {
        writeln!(
            f,
            "{:.12},{},{:.12},{:.12}",
            r.t, r.branch, r.eigenvalue, r.left_weight
        )?;
    }
    Ok(())
}

fn write_wannier_csv(path: &Path, flow: &[crate::bulk::WannierSpectrum]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "t,phase_index,phase")?;
    for spec in flow {
        for (i, phase) in spec.phases.iter().enumerate() {
            writeln!(f, "{:.12},{},{:.12}", spec.t, i, phase)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_bec_flags() {
        let cli = Cli::try_parse_from([
            "z2flow",
            "bec",
            "--fixture",
            "bhz",
            "--mass",
            "1.0",
            "--sites",
            "24",
            "--format",
            "machine",
        ])
        .unwrap();
        assert_eq!(cli.format, Format::Machine);
        match cli.command {
            Command::Bec { sites, mass, .. } => {
                assert_eq!(sites, 24);
                assert_eq!(mass, 1.0);
            }
            _ => panic!("expected bec"),
        }
    }

    #[test]
    fn unknown_fixture_is_an_input_error() {
        let err = cmd_sf_tau("no-such-family", 1e-8).unwrap_err();
        assert_eq!(err.exit_class(), 2);
    }

    #[test]
    fn sf_tau_command_reports_the_normalization_value() {
        let (report, code) = cmd_sf_tau("arctan-pair", 1e-8).unwrap();
        assert_eq!(code, 0);
        assert_eq!(report.result["sf_tau"], serde_json::json!(1));
    }
}
