use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use korgforge::export::{self, ExportFormat};
use korgforge::gadgets::{daisy, rdaisy};
use korgforge::modelcheck::{enumerate, CheckOptions, Verdict, DEFAULT_STATE_BUDGET};
use korgforge::synthesis::{
    check_threat_model, projection_targets, recovery_property, solve_exists, solve_exists_recovery, validate,
    SynthesisOptions, ThreatModel,
};
use korgforge::tmfile::{self, TmError};
use korgforge::AbstractProcess;

/// Exit code for a verified "no attacker exists".
const EXIT_NONE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "korgforge", version, about = "Attacker synthesis for distributed protocols")]
struct Cli {
    /// Maximum number of product states explored per model check.
    #[arg(long, global = true, env = "KORGFORGE_STATE_BUDGET", default_value_t = DEFAULT_STATE_BUDGET)]
    state_budget: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a threat model is well formed and its nominal system satisfies the property.
    Check { tm: PathBuf },
    /// Synthesize attackers and write one file per attacker.
    Synth {
        tm: PathBuf,
        #[arg(long)]
        recovery: bool,
        #[arg(long, default_value_t = 10)]
        limit: usize,
        #[arg(long, default_value = "json", value_parser = parse_format)]
        fmt: ExportFormat,
        /// Output directory, created if missing.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Validate an attacker (JSON) against a threat model.
    Validate { tm: PathBuf, attacker: PathBuf },
    /// Render a threat model or an attacker JSON file.
    Export {
        input: PathBuf,
        #[arg(long, default_value = "dot", value_parser = parse_format)]
        fmt: ExportFormat,
    },
    /// Model check the gadget system and print its counterexamples.
    Mc {
        tm: PathBuf,
        #[arg(long)]
        recovery: bool,
        #[arg(long, default_value_t = 1)]
        limit: usize,
    },
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    s.parse().map_err(|e: export::ExportError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let check = CheckOptions { state_budget: cli.state_budget, ..CheckOptions::default() };
    match cli.command {
        Command::Check { tm } => cmd_check(&tm, &check),
        Command::Synth { tm, recovery, limit, fmt, out } => cmd_synth(&tm, recovery, limit, fmt, &out, &check),
        Command::Validate { tm, attacker } => cmd_validate(&tm, &attacker, &check),
        Command::Export { input, fmt } => cmd_export(&input, fmt),
        Command::Mc { tm, recovery, limit } => cmd_mc(&tm, recovery, limit, &check),
    }
}

fn load(path: &Path, check: &CheckOptions) -> Result<ThreatModel> {
    tmfile::load_with(path, check).with_context(|| format!("loading {}", path.display()))
}

fn cmd_check(path: &Path, check: &CheckOptions) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let tm = tmfile::parse_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let result = check_threat_model(&tm, check)?;
    if result.ok() {
        println!("ok");
        return Ok(ExitCode::SUCCESS);
    }
    for f in &result.failures {
        println!("failed: {f}");
    }
    if let Some(cex) = &result.counterexample {
        let system = tm.nominal_system()?;
        print!("{}", cex.to_text(|l| system.direction(l)));
    }
    Ok(ExitCode::FAILURE)
}

fn cmd_synth(
    path: &Path,
    recovery: bool,
    limit: usize,
    fmt: ExportFormat,
    out: &Path,
    check: &CheckOptions,
) -> Result<ExitCode> {
    let tm = load(path, check)?;
    let opts = SynthesisOptions { limit, check: check.clone(), exclude: BTreeSet::new(), classify: true };
    let outcome = if recovery { solve_exists_recovery(&tm, &opts)? } else { solve_exists(&tm, &opts)? };
    if let Some(reason) = &outcome.reason {
        println!("no attacker: {reason:?}");
        return Ok(ExitCode::from(EXIT_NONE));
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut entries = Vec::new();
    for (k, a) in outcome.attackers.iter().enumerate() {
        let name = format!("attacker-{k}.{}", fmt.extension());
        let file = out.join(&name);
        fs::write(&file, export::render_attacker(a, fmt)).with_context(|| format!("writing {}", file.display()))?;
        let report = outcome.reports.get(k);
        let class = report.map_or("unchecked".to_string(), |r| r.classification.to_string());
        let sig = a.signature.as_ref().map(ToString::to_string).unwrap_or_default();
        println!("{name}\t{class}\t{sig}");
        entries.push(json!({
            "file": name,
            "classification": class,
            "valid": report.map(|r| r.valid),
            "signature": sig,
        }));
    }
    let summary = json!({
        "threat_model": path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "recovery": recovery,
        "limit": limit,
        "attackers": entries,
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(path: &Path, attacker: &Path, check: &CheckOptions) -> Result<ExitCode> {
    let tm = load(path, check)?;
    let text = fs::read_to_string(attacker).with_context(|| format!("reading {}", attacker.display()))?;
    let a = export::attacker_from_json(&text).with_context(|| format!("parsing {}", attacker.display()))?;
    let report = validate(&tm, &a, check)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.valid { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_export(path: &Path, fmt: ExportFormat) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let a = export::attacker_from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
        print!("{}", export::render_attacker(&a, fmt));
        return Ok(ExitCode::SUCCESS);
    }
    let tm = tmfile::parse_str(&text).map_err(|e: TmError| anyhow::anyhow!(e))?;
    match fmt {
        ExportFormat::Dot => print!("{}", export::threat_model_dot(&tm)),
        ExportFormat::GuardedText => print!("{}", tmfile::save(&tm)),
        ExportFormat::Json => bail!("threat models export as dot or guarded-text"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_mc(path: &Path, recovery: bool, limit: usize, check: &CheckOptions) -> Result<ExitCode> {
    let tm = load(path, check)?;
    let gadgets: Vec<AbstractProcess> = if recovery {
        tm.vulnerable().iter().enumerate().map(|(i, q)| rdaisy(&q.process, i)).collect::<Result<_, _>>()?
    } else {
        tm.vulnerable().iter().map(|q| daisy(&q.process).map(AbstractProcess::from)).collect::<Result<_, _>>()?
    };
    let system = tm.system_with(gadgets)?;
    let f = if recovery { recovery_property(tm.vulnerable().len(), tm.property()) } else { tm.property().clone() };
    let targets = projection_targets(&tm, recovery)?;
    let result = enumerate(&system, &f, limit, &BTreeSet::new(), &targets, check)?;
    match result.verdict {
        Verdict::Satisfied => {
            println!("satisfied");
            Ok(ExitCode::from(EXIT_NONE))
        }
        Verdict::Violated => {
            println!("violated");
            for cex in &result.counterexamples {
                print!("{}", cex.to_text(|l| system.direction(l)));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
