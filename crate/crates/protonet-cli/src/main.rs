use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use protonet::analyzer::{
    analyze, AccessControlList, AnalysisContext, AnalysisReport, RegistryManifest, Verdict,
};
use protonet::model::{parse_protocol, validate_structure};
use protonet::transport::{tcp::TcpBus, Bus};

use protonet_cli::{dot, runner, scenario};

#[derive(Parser)]
#[command(name = "protonet", version, about = "Validate, analyze and run agent interaction protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a protocol document and report structural violations.
    Validate {
        file: PathBuf,
        /// Also write a Graphviz rendering of the net.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run the analysis pipeline on a protocol document.
    Analyze {
        file: PathBuf,
        /// ACL file: {principal: {resource: [permission, ...]}}.
        #[arg(long)]
        acl: Option<PathBuf>,
        /// Template file: a JSON list of action templates.
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Manifest file: {"functions": [...], "variables": [...]}.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// The principal that authored/sent the protocol.
        #[arg(long, default_value = "remote")]
        author: String,
    },
    /// Execute a scenario script and write its trace.
    Run {
        scenario: PathBuf,
        /// Trace output path (JSON lines); stdout when omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Move envelopes over localhost TCP instead of the in-memory bus.
        #[arg(long)]
        tcp: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROTONET_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { file, dot } => cmd_validate(&file, dot.as_deref()),
        Command::Analyze { file, acl, templates, manifest, author } => {
            cmd_analyze(&file, acl.as_deref(), templates.as_deref(), manifest.as_deref(), &author)
        }
        Command::Run { scenario, trace, tcp } => cmd_run(&scenario, trace.as_deref(), tcp),
    };
    ExitCode::from(code)
}

fn cmd_validate(file: &std::path::Path, dot_out: Option<&std::path::Path>) -> u8 {
    let doc = match std::fs::read(file) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return 2;
        }
    };
    let net = match parse_protocol(&doc) {
        Ok(net) => net,
        Err(e) => {
            println!("{e}");
            return 1;
        }
    };
    if let Some(path) = dot_out {
        if let Err(e) = std::fs::write(path, dot::to_dot(&net)) {
            eprintln!("error: {}: {e}", path.display());
            return 2;
        }
    }
    let violations = validate_structure(&net);
    for violation in &violations {
        println!("{violation}");
    }
    if violations.is_empty() {
        0
    } else {
        1
    }
}

fn cmd_analyze(
    file: &std::path::Path,
    acl: Option<&std::path::Path>,
    templates: Option<&std::path::Path>,
    manifest: Option<&std::path::Path>,
    author: &str,
) -> u8 {
    let acl: AccessControlList = match read_json_or_default(acl) {
        Ok(acl) => acl,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let manifest: RegistryManifest = match read_json_or_default(manifest) {
        Ok(manifest) => manifest,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let templates = match templates {
        None => Vec::new(),
        Some(path) => {
            let doc = match std::fs::read(path) {
                Ok(doc) => doc,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            };
            match protonet::analyzer::parse_templates(&doc) {
                Ok(templates) => templates,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            }
        }
    };

    let doc = match std::fs::read(file) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return 2;
        }
    };
    let report = match parse_protocol(&doc) {
        Ok(net) => {
            let ctx = AnalysisContext {
                manifest,
                acl,
                templates,
                author: author.to_string(),
            };
            analyze(&net, &ctx)
        }
        Err(e) => AnalysisReport {
            marks: Default::default(),
            verdict: Verdict::Rejected(format!("malformed: {e}")),
            obligations: Vec::new(),
        },
    };
    println!("{}", report.to_json());
    if report.is_accepted() {
        0
    } else {
        1
    }
}

fn read_json_or_default<T: serde::de::DeserializeOwned + Default>(
    path: Option<&std::path::Path>,
) -> Result<T, String> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let doc = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_slice(&doc).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_run(path: &std::path::Path, trace: Option<&std::path::Path>, tcp: bool) -> u8 {
    let scenario = match scenario::load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 2;
        }
    };
    let outcome = if tcp {
        match TcpBus::new() {
            Ok(bus) => runner::run_scenario(bus, &scenario),
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    } else {
        runner::run_scenario(Bus::new(), &scenario)
    };
    let outcome = match outcome {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 2;
        }
    };
    match trace {
        Some(path) => {
            if let Err(e) = std::fs::write(path, outcome.trace_bytes()) {
                eprintln!("error: {}: {e}", path.display());
                return 2;
            }
        }
        None => {
            print!("{}", String::from_utf8_lossy(&outcome.trace_bytes()));
        }
    }
    outcome.exit_code() as u8
}
