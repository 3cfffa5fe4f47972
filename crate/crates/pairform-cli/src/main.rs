use std::fmt;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pairform::bounds::nonpath_lower_bound;
use pairform::closure::{edge_condition, export_graph, max_f, necessary_failure, pair_path_tol, ExportFormat, GraphKind};
use pairform::matcore::MatrixPair;
use pairform::pairnf::{classify_pair, samples::family_samples, ClassifiedPair, OrbitClass, PairError};
use pairform::surface::{is_quadratically_flat, reduce_jet, JetData};
use pairform::tangent::{orbit_dimension, TangentError};
use pairform::witness::{perturb_experiment_tol, verify_witness, witness_catalog, WitnessSummary, DEFAULT_SWEEP};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "pairform", version, about = "Normal forms and orbit closures of matrix pairs (A, B) with B symmetric")]
struct Cli {
    /// Numerical tolerance
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for randomized commands (default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Require an explicit --seed for randomized commands
    #[arg(long, global = true)]
    strict: bool,
    /// Output format; each command has its own default
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Graph {
    Psi1,
    Psi2,
    Pair,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Classify a pair, printing family, parameters and reducer
    Classify {
        /// Pair as inline JSON {"A":..,"B":..} or a file path
        #[arg(long)]
        pair: String,
    },
    /// Dimension of the orbit through a pair
    Dim {
        #[arg(long)]
        pair: String,
    },
    /// Whether the orbit of --from lies in the closure of the orbit of --to
    Path {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Closure graph export
    Graph {
        #[arg(long, value_enum, default_value = "pair")]
        kind: Graph,
    },
    /// Constant M for the Unimodular / Definite edge condition
    Maxf {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        /// Complex, "re+imi" or [re,im]
        #[arg(long, allow_hyphen_values = true)]
        d: String,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
    },
    /// Lower bound on the distance from --from to the orbit of --to
    Bounds {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// List or verify the witness curve catalog
    Witness {
        /// Verify only this entry
        #[arg(long)]
        id: Option<String>,
        /// Run the convergence check instead of listing
        #[arg(long)]
        verify: bool,
    },
    /// Classify random perturbations of a representative
    Perturb {
        /// Family id "<A>|<B>"; the first sample of the family is used
        #[arg(long, conflicts_with = "pair")]
        family: Option<String>,
        /// Pair to classify and perturb
        #[arg(long)]
        pair: Option<String>,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Reduce a quadratic jet to a pair and report quadratic flatness
    Jet {
        /// Jet JSON {"w0","lin_z","lin_zbar","A","B","C"} or a file path
        #[arg(long)]
        jet: String,
    },
}

enum Failure {
    Input(String),
    Undecided(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Undecided(m) => write!(f, "undecided: {m}"),
        }
    }
}

impl From<PairError> for Failure {
    fn from(e: PairError) -> Self {
        if e.is_ambiguous() {
            Failure::Undecided(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<TangentError> for Failure {
    fn from(e: TangentError) -> Self {
        match e {
            TangentError::RankUnstable { .. } => Failure::Undecided(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Out = Result<String, Failure>;

fn read_source(arg: &str, what: &str) -> Result<String, Failure> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(arg.to_string());
    }
    std::fs::read_to_string(arg).map_err(|e| Failure::Input(format!("{what}: cannot read {arg}: {e}")))
}

fn parse_json<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T, Failure> {
    let text = read_source(arg, what)?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{what}: {e}")))
}

fn parse_pair(arg: &str, what: &str) -> Result<MatrixPair, Failure> {
    parse_json(arg, what)
}

/// Accepts "1.5", "2i", "1-0.5i", "-i" or "[re, im]".
fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    if t.starts_with('[') {
        let v: [f64; 2] = serde_json::from_str(&t).map_err(|e| format!("complex {s:?}: {e}"))?;
        return Ok(Complex64::new(v[0], v[1]));
    }
    let bad = || format!("complex {s:?}: expected \"re+imi\" or [re,im]");
    let num = |x: &str| -> Result<f64, String> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(body[..k].parse::<f64>().map_err(|_| bad())?, num(&body[k..])?)),
        None => Ok(Complex64::new(0.0, num(body)?)),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output")
}

fn classify(p: &MatrixPair, tol: f64) -> Result<ClassifiedPair, Failure> {
    Ok(classify_pair(p, tol)?)
}

fn class_text(cls: &OrbitClass) -> String {
    let params: Vec<String> = cls.params().iter().map(|x| format!("{x:.9}")).collect();
    format!("{} dim {} params [{}]", cls.family_id(), cls.dim, params.join(", "))
}

fn seed(cli: &Cli) -> Result<u64, Failure> {
    match (cli.seed, cli.strict) {
        (Some(s), _) => Ok(s),
        (None, false) => Ok(0),
        (None, true) => Err(Failure::Input("--strict requires an explicit --seed".into())),
    }
}

fn run(cli: &Cli) -> Out {
    if !(cli.tol > 0.0) {
        return Err(Failure::Input("--tol must be positive".into()));
    }
    let tol = cli.tol;
    match &cli.cmd {
        Cmd::Classify { pair } => {
            let r = classify(&parse_pair(pair, "--pair")?, tol)?;
            Ok(match cli.format {
                Some(Format::Text) => class_text(&r.cls),
                _ => to_json(&r),
            })
        }
        Cmd::Dim { pair } => Ok(orbit_dimension(&parse_pair(pair, "--pair")?, tol)?.to_string()),
        Cmd::Path { from, to } => {
            let s = classify(&parse_pair(from, "--from")?, tol)?.cls;
            let d = classify(&parse_pair(to, "--to")?, tol)?.cls;
            let condition = match necessary_failure(&s, &d, tol) {
                Some(why) => why.to_string(),
                None => edge_condition(&s.family_id(), &d.family_id()).to_string(),
            };
            let answer = match pair_path_tol(&s, &d, tol) {
                Ok(b) => b.to_string(),
                Err(_) => "unknown".to_string(),
            };
            let text = match cli.format {
                Some(Format::Json) => to_json(&json!({
                    "path": answer, "from": s.family_id(), "to": d.family_id(), "condition": condition,
                })),
                _ => format!("{answer}\ncondition: {condition}"),
            };
            if answer == "unknown" {
                let _ = writeln!(std::io::stdout().lock(), "{text}");
                return Err(Failure::Undecided("no rule decides this pair of families".into()));
            }
            Ok(text)
        }
        Cmd::Graph { kind } => {
            let kind = match kind {
                Graph::Psi1 => GraphKind::Psi1,
                Graph::Psi2 => GraphKind::Psi2,
                Graph::Pair => GraphKind::Pair,
            };
            let fmt = match cli.format {
                Some(Format::Json) => ExportFormat::Json,
                Some(Format::Text) => return Err(Failure::Input("graph supports --format dot or json".into())),
                _ => ExportFormat::Dot,
            };
            Ok(export_graph(kind, fmt).trim_end().to_string())
        }
        Cmd::Maxf { a, b, d, theta } => {
            let d = parse_complex(d).map_err(Failure::Input)?;
            if !(a.is_finite() && b.is_finite() && theta.is_finite()) || *a < 0.0 || *b < 0.0 {
                return Err(Failure::Input("--a and --b must be finite and nonnegative".into()));
            }
            Ok(format!("{:.6}", max_f(*a, *b, d, *theta, tol)))
        }
        Cmd::Bounds { from, to } => {
            let s = parse_pair(from, "--from")?;
            let d = parse_pair(to, "--to")?;
            Ok(to_json(&nonpath_lower_bound(&s, &d)))
        }
        Cmd::Witness { id, verify } => {
            let mut cat = witness_catalog();
            if let Some(id) = id {
                cat.retain(|w| w.id == id);
                if cat.is_empty() {
                    return Err(Failure::Input(format!("no witness with id {id:?}")));
                }
            }
            if !verify {
                let list: Vec<WitnessSummary> = cat.iter().map(WitnessSummary::from).collect();
                return Ok(to_json(&list));
            }
            let mut reports = Vec::new();
            for w in &cat {
                match verify_witness(w, &DEFAULT_SWEEP, 1e-6) {
                    Ok(r) => reports.push(serde_json::to_value(&r).expect("report")),
                    Err(e) => reports.push(json!({ "id": w.id, "error": e.to_string() })),
                }
            }
            Ok(to_json(&reports))
        }
        Cmd::Perturb { family, pair, eps, samples } => {
            if !(*eps > 0.0) {
                return Err(Failure::Input("--eps must be positive".into()));
            }
            let seed = seed(cli)?;
            let cls = match (family, pair) {
                (Some(id), _) => *family_samples(id)
                    .first()
                    .ok_or_else(|| Failure::Input(format!("unknown family {id:?}")))?,
                (None, Some(p)) => classify(&parse_pair(p, "--pair")?, tol)?.cls,
                (None, None) => return Err(Failure::Input("perturb needs --family or --pair".into())),
            };
            Ok(to_json(&perturb_experiment_tol(&cls, *eps, *samples, seed, tol)))
        }
        Cmd::Jet { jet } => {
            let j: JetData = parse_json(jet, "--jet")?;
            let (p, t) = reduce_jet(&j, tol).map_err(|e| Failure::Input(e.to_string()))?;
            Ok(to_json(&json!({
                "pair": p,
                "quadratically_flat": is_quadratically_flat(&p, tol),
                "transform": t,
            })))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            // a closed pipe is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                Failure::Input(_) => ExitCode::from(2),
                Failure::Undecided(_) => ExitCode::from(3),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_complex;
    use num_complex::Complex64;

    #[test]
    fn complex_forms() {
        let cases = [
            ("2", Complex64::new(2.0, 0.0)),
            ("1+2i", Complex64::new(1.0, 2.0)),
            ("-1.5-0.5i", Complex64::new(-1.5, -0.5)),
            ("3i", Complex64::new(0.0, 3.0)),
            ("-i", Complex64::new(0.0, -1.0)),
            ("1e-3+2e+1i", Complex64::new(1e-3, 20.0)),
            ("[0.5, -1]", Complex64::new(0.5, -1.0)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        assert!(parse_complex("1+2j").is_err());
        assert!(parse_complex("[1]").is_err());
    }
}
