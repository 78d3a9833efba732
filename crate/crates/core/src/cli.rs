//! Command-line front end. Exit codes: 0 success, 1 rejected transformation
//! or failed scenario expectation, 2 I/O, syntax, usage or lock errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::evaluation::{run_scenario, run_scenario_in, ScenarioSpec};
use crate::extraction::extract_model;
use crate::graph::{parse_kb, serialize_kb, KnowledgeBase};
use crate::injection::{inject_models, write_files, InjectionModel};
use crate::transformation::{apply_transformation, TransformationRequest};
use crate::ui::generate_site;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "parthenos", version, about = "Extract, transform and inject source models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the knowledge base of a repository.
    Extract {
        #[arg(long)]
        repo: PathBuf,
        /// Fact file to write; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply one transformation request and inject it into the repository.
    Transform {
        /// Fact file holding the current model; rewritten on success.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        request: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Apply injection models (one object or an array) directly to a repository.
    Inject {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Generate the static form site.
    GenerateUi {
        /// Fact file to render; the repository is extracted when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, required_unless_present = "model")]
        repo: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a scenario and print its metrics table.
    Evaluate {
        #[arg(long)]
        scenario: PathBuf,
        /// Keep the transformed repository, fact file, site and reports here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl ToString) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn error(e: impl ToString) -> Failure {
    fail(EXIT_ERROR, e)
}

fn load_kb(path: &Path) -> Result<KnowledgeBase, Failure> {
    let text = fs::read_to_string(path).map_err(|e| error(format!("{}: {e}", path.display())))?;
    parse_kb(&text).map_err(|e| error(format!("{}: {e}", path.display())))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Extract { repo, out: file } => {
            let kb = extract_model(&repo).map_err(error)?;
            let text = serialize_kb(&kb);
            match file {
                Some(path) => {
                    write_files(&[(path.clone(), text)]).map_err(error)?;
                    writeln!(out, "wrote {} ({} facts)", path.display(), kb.fact_count()).map_err(error)?;
                }
                None => out.write_all(text.as_bytes()).map_err(error)?,
            }
            Ok(EXIT_OK)
        }
        Command::Transform {
            model,
            repo,
            request,
            json,
        } => {
            let kb = load_kb(&model)?;
            let text = fs::read_to_string(&request).map_err(|e| error(format!("{}: {e}", request.display())))?;
            let req = TransformationRequest::from_json(&text).map_err(error)?;
            let outcome = apply_transformation(&kb, &repo, &req, Some(&model)).map_err(error)?;
            if json {
                let lines = |facts: &std::collections::BTreeSet<crate::graph::Fact>| -> Vec<String> {
                    facts.iter().map(ToString::to_string).collect()
                };
                let report = json!({
                    "op": req.op,
                    "status": outcome.status,
                    "reason": outcome.reason.as_ref().map(ToString::to_string),
                    "delta": {"added": lines(&outcome.delta.added), "removed": lines(&outcome.delta.removed)},
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("json")).map_err(error)?;
            }
            match &outcome.reason {
                Some(reason) => {
                    if !json {
                        writeln!(out, "rejected {}: {reason}", req.op).map_err(error)?;
                    }
                    Err(fail(EXIT_REJECTED, reason))
                }
                None => {
                    if !json {
                        writeln!(
                            out,
                            "applied {}: +{} -{} facts",
                            req.op,
                            outcome.delta.added.len(),
                            outcome.delta.removed.len()
                        )
                        .map_err(error)?;
                    }
                    Ok(EXIT_OK)
                }
            }
        }
        Command::Inject { repo, model } => {
            let text = fs::read_to_string(&model).map_err(|e| error(format!("{}: {e}", model.display())))?;
            let models = InjectionModel::from_json(&text).map_err(error)?;
            for path in inject_models(&repo, &models).map_err(error)? {
                writeln!(out, "injected {path}").map_err(error)?;
            }
            Ok(EXIT_OK)
        }
        Command::GenerateUi { model, repo, out_dir } => {
            let kb = match (model, repo) {
                (Some(m), _) => load_kb(&m)?,
                (None, Some(r)) => extract_model(&r).map_err(error)?,
                (None, None) => return Err(error("either --model or --repo is required")),
            };
            for path in generate_site(&kb, &out_dir).map_err(error)? {
                writeln!(out, "wrote {}", path.display()).map_err(error)?;
            }
            Ok(EXIT_OK)
        }
        Command::Evaluate {
            scenario,
            out_dir,
            json,
        } => {
            let spec = ScenarioSpec::load(&scenario).map_err(error)?;
            let report = match &out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(error)?;
                    let report = run_scenario_in(&spec, dir).map_err(error)?;
                    generate_site(&report.kb_after, &dir.join("site")).map_err(error)?;
                    fs::write(dir.join("report.txt"), report.to_text()).map_err(error)?;
                    fs::write(dir.join("report.json"), report.to_json()).map_err(error)?;
                    report
                }
                None => run_scenario(&spec).map_err(error)?,
            };
            let text = if json { report.to_json() + "\n" } else { report.to_text() };
            out.write_all(text.as_bytes()).map_err(error)?;
            report.check().map_err(|e| fail(EXIT_REJECTED, e))?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `argv` (including the program name).
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "parthenos: {}", f.message);
            f.code
        }
    }
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
