//! Command-line front end.
//!
//! [`run`] parses arguments, dispatches and returns the process exit code:
//! 0 on success, 1 for usage or input errors, 2 for internal failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use crate::chain::PerturbedChain;
use crate::error::{Error, Result};
use crate::evaluator::{limit_payoff, occupation, position_query, Horizon, PositionQuery, PositionTime};
use crate::game::compile;
use crate::game::GameSetup;
use crate::hierarchy::{analyze, LimitModel};
use crate::oracle::convergence_sweep;
use crate::report::Report;

#[derive(Parser, Debug)]
#[command(
    name = "perturbed-occupation",
    version,
    about = "Limit positions and occupation measures of perturbed Markov chain families"
)]
struct Cli {
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the aggregation and print or save the analysis report.
    Analyze {
        chain: PathBuf,
        /// Write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Limit position μ e^{At} M at a time or at a fraction of the game.
    Position(PositionArgs),
    /// Limit discounted occupation measure up to time t, or over the whole game.
    Occupation(OccupationArgs),
    /// Limit discounted payoff μ (Id − A)^{-1} M g.
    Payoff {
        chain: PathBuf,
        /// JSON file with the stage payoff: an array, or an object state → value.
        #[arg(long)]
        g: PathBuf,
    },
    /// Compare the model against direct powers and discounted sums at given λ.
    Verify {
        chain: PathBuf,
        #[arg(long)]
        t: f64,
        /// Strictly decreasing, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
    },
    /// Compile a game and its strategy families into a chain file.
    GameCompile {
        game: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the limit stage payoff vector.
        #[arg(long)]
        payoff_out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("when").required(true).args(["t", "fraction"])))]
struct PositionArgs {
    chain: PathBuf,
    #[arg(long)]
    t: Option<f64>,
    /// Fraction of total discounted weight already played, in [0, 1).
    #[arg(long)]
    fraction: Option<f64>,
    /// Only the row of this starting state.
    #[arg(long)]
    from: Option<String>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("horizon").required(true).args(["t", "total"])))]
struct OccupationArgs {
    chain: PathBuf,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    total: bool,
}

/// Runs one command; output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("<stdout>")))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Analyze { chain, out: path } => {
            let chain = PerturbedChain::load(chain)?;
            let model = analyze(&chain)?;
            let report = Report::from_model(&model);
            if let Some(path) = path {
                write_file(path, &(report.to_json() + "\n"))?;
            }
            if cli.json {
                emit(out, &(report.to_json() + "\n"))
            } else {
                emit(out, &render_model(&model))
            }
        }
        Command::Position(args) => {
            let chain = PerturbedChain::load(&args.chain)?;
            let model = analyze(&chain)?;
            let time = match (args.t, args.fraction) {
                (Some(t), _) => PositionTime::Time(t),
                (None, Some(f)) => PositionTime::Fraction(f),
                (None, None) => unreachable!("clap enforces the group"),
            };
            let from = args.from.as_deref().map(|s| state_index(&chain, s)).transpose()?;
            let p = position_query(&model, &PositionQuery { time, from })?;
            let rows: Vec<String> = match from {
                Some(s) => vec![chain.states()[s].clone()],
                None => chain.states().to_vec(),
            };
            if cli.json {
                let value = json!({
                    "t": time.to_time()?,
                    "states": chain.states(),
                    "from": rows,
                    "position": matrix_rows(&p),
                });
                emit(out, &(serde_json::to_string_pretty(&value).expect("json") + "\n"))
            } else {
                emit(out, &format!("t = {}\n", fmt_num(time.to_time()?)))?;
                emit(out, &render_matrix(&rows, chain.states(), &p))
            }
        }
        Command::Occupation(args) => {
            let chain = PerturbedChain::load(&args.chain)?;
            let model = analyze(&chain)?;
            let horizon = match args.t {
                Some(t) if !args.total => Horizon::Finite(t),
                _ => Horizon::Total,
            };
            let occ = occupation(&model, horizon)?;
            let label = match horizon {
                Horizon::Finite(t) => json!(t),
                Horizon::Total => json!("total"),
            };
            if cli.json {
                let value = json!({
                    "horizon": label,
                    "states": chain.states(),
                    "occupation": matrix_rows(&occ.matrix),
                });
                emit(out, &(serde_json::to_string_pretty(&value).expect("json") + "\n"))
            } else {
                let head = match horizon {
                    Horizon::Finite(t) => format!("horizon t = {}\n", fmt_num(t)),
                    Horizon::Total => "horizon: total\n".to_string(),
                };
                emit(out, &head)?;
                emit(out, &render_matrix(chain.states(), chain.states(), &occ.matrix))
            }
        }
        Command::Payoff { chain, g } => {
            let chain = PerturbedChain::load(chain)?;
            let g = load_vector(g, &chain)?;
            let model = analyze(&chain)?;
            let payoff = limit_payoff(&model, &g)?;
            if cli.json {
                let map: BTreeMap<&str, f64> = chain.states().iter().map(String::as_str).zip(payoff.iter().copied()).collect();
                let value = json!({ "states": chain.states(), "payoff": payoff, "by_state": map });
                emit(out, &(serde_json::to_string_pretty(&value).expect("json") + "\n"))
            } else {
                let mut text = String::new();
                for (s, v) in chain.states().iter().zip(&payoff) {
                    text.push_str(&format!("{s}\t{}\n", fmt_num(*v)));
                }
                emit(out, &text)
            }
        }
        Command::Verify { chain, t, lambdas } => {
            let chain = PerturbedChain::load(chain)?;
            let model = analyze(&chain)?;
            let sweep = convergence_sweep(&chain, &model, *t, lambdas)?;
            if cli.json {
                emit(out, &(sweep.to_json() + "\n"))
            } else {
                let mut text = String::from("lambda\tposition_err\toccupation_t_err\ttotal_err\n");
                for p in &sweep.points {
                    text.push_str(&format!(
                        "{}\t{}\t{}\t{}\n",
                        fmt_num(p.lambda),
                        fmt_num(p.position_err),
                        fmt_num(p.occupation_t_err),
                        fmt_num(p.total_err)
                    ));
                }
                text.push_str(&format!(
                    "non-increasing (slack 1.5): position {}, occupation {}, total {}\n",
                    sweep.position_monotone, sweep.occupation_t_monotone, sweep.total_monotone
                ));
                emit(out, &text)
            }
        }
        Command::GameCompile { game, out: path, payoff_out } => {
            let setup = GameSetup::load(game)?;
            let (chain, g) = compile(&setup.game, &setup.strategy1, &setup.strategy2)?;
            write_file(path, &(chain.to_json() + "\n"))?;
            let g_map: BTreeMap<&str, f64> = chain.states().iter().map(String::as_str).zip(g.iter().copied()).collect();
            if let Some(p) = payoff_out {
                write_file(p, &(serde_json::to_string_pretty(&g_map).expect("json") + "\n"))?;
            }
            if cli.json {
                let value = json!({
                    "chain": path.display().to_string(),
                    "states": chain.states(),
                    "transitions": chain.entries().entries().count(),
                    "g": g,
                });
                emit(out, &(serde_json::to_string_pretty(&value).expect("json") + "\n"))
            } else {
                let mut text = format!(
                    "wrote {} ({} states, {} transitions)\nlimit stage payoff:\n",
                    path.display(),
                    chain.num_states(),
                    chain.entries().entries().count()
                );
                for (s, v) in chain.states().iter().zip(&g) {
                    text.push_str(&format!("{s}\t{}\n", fmt_num(*v)));
                }
                emit(out, &text)
            }
        }
    }
}

fn state_index(chain: &PerturbedChain, name: &str) -> Result<usize> {
    chain
        .state_index(name)
        .ok_or_else(|| Error::invalid("--from", format!("unknown state {name:?}")))
}

/// Reads a payoff vector: a JSON array in state order, or an object state → value.
fn load_vector(path: &Path, chain: &PerturbedChain) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let loc = |e: &serde_json::Error| format!("{}: line {} column {}", path.display(), e.line(), e.column());
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::parse(loc(&e), e.to_string()))?;
    let invalid = |msg: String| Error::invalid(path.display().to_string(), msg);
    match value {
        serde_json::Value::Array(items) => {
            if items.len() != chain.num_states() {
                return Err(invalid(format!("{} values for {} states", items.len(), chain.num_states())));
            }
            items
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| invalid(format!("not a number: {v}"))))
                .collect()
        }
        serde_json::Value::Object(map) => {
            for key in map.keys() {
                if chain.state_index(key).is_none() {
                    return Err(invalid(format!("unknown state {key:?}")));
                }
            }
            chain
                .states()
                .iter()
                .map(|s| {
                    map.get(s)
                        .and_then(|v| v.as_f64())
                        .ok_or_else(|| invalid(format!("missing or non-numeric value for state {s:?}")))
                })
                .collect()
        }
        _ => Err(invalid("expected an array or an object".into())),
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A number rounded to 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if rounded.abs() >= 1e-4 && rounded.abs() < 1e12 {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn render_matrix(rows: &[String], cols: &[String], m: &DMatrix<f64>) -> String {
    let mut text = String::from("from\\to");
    for c in cols {
        text.push('\t');
        text.push_str(c);
    }
    text.push('\n');
    for (i, r) in rows.iter().enumerate() {
        text.push_str(r);
        for j in 0..m.ncols() {
            text.push('\t');
            text.push_str(&fmt_num(m[(i, j)]));
        }
        text.push('\n');
    }
    text
}

fn render_model(model: &LimitModel) -> String {
    let names = |set: &[usize]| {
        let inner: Vec<&str> = set.iter().map(|&s| model.states[s].as_str()).collect();
        format!("{{{}}}", inner.join(","))
    };
    let class_labels: Vec<String> = model.classes.iter().map(|c| names(c)).collect();
    let alphas: Vec<String> = model.alphas().iter().map(|a| a.to_string()).collect();
    let mut text = format!("alphas: {}\n", alphas.join(", "));
    text.push_str(&format!("levels: {}\n", model.levels.len()));
    text.push_str(&format!("classes: {}\n", class_labels.join(" ")));
    text.push_str(&format!("N: {}\n", model.n));
    text.push_str("\nmu (entrance law)\n");
    text.push_str(&render_matrix(&model.states, &class_labels, &model.mu));
    text.push_str("\nA (generator)\n");
    text.push_str(&render_matrix(&class_labels, &class_labels, &model.a));
    text.push_str("\nM (within-class frequencies)\n");
    text.push_str(&render_matrix(&class_labels, &model.states, &model.m));
    text
}
