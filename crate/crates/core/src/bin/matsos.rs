use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use matsos::cli::{self, RunConfig, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "matsos", version, about = "Sum-of-squares decompositions of matrix functions")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// Config file, `-` for stdin.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Multiply the sample density of every grid.
    #[arg(long, global = true)]
    grid_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a config.
    Run,
    /// Run the certificates of one gallery item.
    Gallery {
        name: String,
        /// Parameter overrides as a JSON object.
        #[arg(long)]
        params: Option<String>,
    },
    /// Print the gallery catalog.
    List,
    /// Print the config JSON schema.
    Schema,
}

fn read_config(path: &PathBuf) -> Result<String, String> {
    let mut s = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
    } else {
        s = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(s)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| format!("{}: {e}", p.display())),
        None => match writeln!(std::io::stdout(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
            _ => Ok(()),
        },
    }
}

fn config(args: &Args) -> Result<RunConfig, String> {
    let mut c = match &args.cmd {
        Cmd::Run => {
            let path = args.config.as_ref().ok_or("run needs --config")?;
            RunConfig::from_json(&read_config(path)?).map_err(|e| e.to_string())?
        }
        Cmd::Gallery { name, params } => {
            let p = match params {
                Some(s) => serde_json::from_str(s).map_err(|e| format!("--params: {e}"))?,
                None => serde_json::Value::Null,
            };
            cli::gallery_config(name, p)
        }
        _ => unreachable!(),
    };
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if args.grid_scale.is_some() {
        c.grid_scale = args.grid_scale;
    }
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("matsos: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    let result = match &args.cmd {
        Cmd::List => emit(args.out.as_ref(), &cli::list_json()).map(|_| 0),
        Cmd::Schema => emit(args.out.as_ref(), &cli::schema_json()).map(|_| 0),
        Cmd::Run | Cmd::Gallery { .. } => config(&args).and_then(|c| {
            let rep = cli::run(&c);
            let out = args.out.clone().or_else(|| c.output.as_ref().map(PathBuf::from));
            emit(out.as_ref(), &rep.to_json())?;
            if let Some(e) = &rep.error {
                eprintln!("matsos: {e}");
            }
            Ok(rep.exit_code)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("matsos: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
