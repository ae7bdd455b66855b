use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use padic_gl::format::{CertificateRecord, MatrixRecord, TrainRecord};
use padic_gl::orbits::StateKind;
use padic_gl::selftest::{self, SelftestConfig};
use padic_gl::{
    associativity_check, coset_dist, coset_eq, generator_factorization, normalize_to_window, orbit_stabilization,
    stabilization_limit, train_product_with, Decision, DistanceMethod, DoubleCoset, GroupElement, Interleave, Modulus,
    Norm, Stabilization,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

mod input;

use input::InputError;

#[derive(Parser, Debug)]
#[command(
    name = "padic-gl",
    version,
    about = "Double cosets, trains and orbits for GL over Z/p^k"
)]
struct Cli {
    /// Prime p.
    #[arg(long, global = true, default_value_t = 2)]
    p: u64,
    /// Precision exponent k.
    #[arg(long, global = true, default_value_t = 1)]
    k: u32,
    /// Depth m of the stabilizer subgroup.
    #[arg(long, global = true, default_value_t = 1)]
    m: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest enumeration or search the command may attempt.
    #[arg(long, global = true, default_value_t = 1 << 22)]
    budget: u64,
    /// Command-specific window: inf window for coset-dist, j_max for stabilize.
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Inf,
    Hausdorff,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Vectors,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Order {
    Stack,
    Riffle,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce a matrix into GL(3m) and emit the certificate.
    Canon {
        /// Inline rows like "1,0;0,1" or @record.json.
        matrix: Option<String>,
        /// Size of a seeded random input when no matrix is given.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Decide whether two matrices lie in the same double coset.
    CosetEq { a: String, b: String },
    /// Distance between two double cosets.
    CosetDist {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value_t = Method::Inf)]
        method: Method,
    },
    /// Product of two train cosets, given as alpha/gamma/rows|rows or @record.json.
    TrainProd {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value_t = Order::Stack)]
        order: Order,
    },
    /// Follow K g1 theta_j g2 K until it stops changing.
    Stabilize { a: String, b: String },
    /// Compare (ab)c with a(bc).
    AssocCheck { a: String, b: String, c: String },
    /// Write a matrix as a product of permutations and stabilizer elements.
    Factor {
        matrix: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Orbit counts for windows from..=to, as CSV in text mode.
    Orbits {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        from: usize,
        #[arg(long, default_value_t = 4)]
        to: usize,
        #[arg(long, value_enum, default_value_t = Kind::Vectors)]
        kind: Kind,
    },
    /// Seeded sweep of the library's properties over one ring.
    Selftest {
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Re-check a certificate (bare, or inside a canon report) using only products and membership.
    Verify {
        #[arg(default_value = "-")]
        certificate: String,
    },
}

/// Exit status: yes/ok, no/failed, bad input, gave up within budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Yes = 0,
    No = 1,
    Usage = 2,
    Undecided = 3,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),

    #[error(transparent)]
    Library(#[from] padic_gl::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn status(&self) -> Status {
        match self {
            CliError::Library(padic_gl::Error::Budget { .. }) => Status::Undecided,
            CliError::Library(padic_gl::Error::Internal(_)) => Status::No,
            _ => Status::Usage,
        }
    }
}

struct Report {
    status: Status,
    body: Value,
    /// Replaces the rendered body in text mode.
    text: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli);
    let status = match result {
        Ok(report) => {
            let out = match (cli.format, report.text) {
                (Format::Text, Some(text)) => text,
                (Format::Text, None) => render_text(&report.body),
                (Format::Json, _) => serde_json::to_string_pretty(&report.body).expect("serializable") + "\n",
            };
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::from(Status::No as u8);
            }
            report.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    };
    ExitCode::from(status as u8)
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let modulus = Modulus::new(cli.p, cli.k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let header = json!({"p": cli.p, "k": cli.k, "m": cli.m, "seed": cli.seed, "budget": cli.budget});
    let matrix = |arg: &Option<String>, n: Option<usize>, rng: &mut ChaCha8Rng| -> Result<GroupElement, CliError> {
        match (arg, n) {
            (Some(a), None) => Ok(input::matrix_arg(a, modulus)?),
            (None, Some(n)) => Ok(GroupElement::random(rng, n, modulus)),
            (None, None) => Err(CliError::Usage("give a matrix or --n for a random one".into())),
            (Some(_), Some(_)) => Err(CliError::Usage("give either a matrix or --n, not both".into())),
        }
    };
    let (status, body, text) = match &cli.command {
        Command::Canon { matrix: arg, n } => {
            let g = matrix(arg, *n, &mut rng)?;
            let cert = normalize_to_window(&g, cli.m)?;
            let verified = cert.verify();
            let body = json!({
                "command": "canon",
                "config": header,
                "verified": verified,
                "certificate": CertificateRecord::from_certificate(&cert),
            });
            (if verified { Status::Yes } else { Status::No }, body, None)
        }
        Command::CosetEq { a, b } => {
            let (a, b) = (input::matrix_arg(a, modulus)?, input::matrix_arg(b, modulus)?);
            let decision = coset_eq(&DoubleCoset::new(cli.m, a), &DoubleCoset::new(cli.m, b), cli.budget)?;
            let (status, outcome) = decision_fields(&decision);
            (
                status,
                json!({"command": "coset-eq", "config": header, "decision": outcome}),
                None,
            )
        }
        Command::CosetDist { a, b, method } => {
            let (a, b) = (input::matrix_arg(a, modulus)?, input::matrix_arg(b, modulus)?);
            let method = match method {
                Method::Inf => DistanceMethod::Inf,
                Method::Hausdorff => DistanceMethod::Hausdorff,
            };
            let d = coset_dist(
                &DoubleCoset::new(cli.m, a),
                &DoubleCoset::new(cli.m, b),
                method,
                cli.window,
                cli.budget,
            )?;
            let body = json!({
                "command": "coset-dist",
                "config": header,
                "method": format!("{method:?}").to_lowercase(),
                "window": cli.window.unwrap_or(3 * cli.m + 1),
                "distance": d.rational(cli.p),
                "valuation": norm_valuation(d),
            });
            (Status::Yes, body, None)
        }
        Command::TrainProd { a, b, order } => {
            let (a, b) = (input::train_arg(a, modulus)?, input::train_arg(b, modulus)?);
            let mode = match order {
                Order::Stack => Interleave::Stack,
                Order::Riffle => Interleave::Riffle,
            };
            let product = train_product_with(&a, &b, mode)?;
            let body = json!({
                "command": "train-prod",
                "config": header,
                "product": TrainRecord::from_train(&product),
                "compacted": TrainRecord::from_train(&product.compacted()),
            });
            (Status::Yes, body, None)
        }
        Command::Stabilize { a, b } => {
            let (a, b) = (input::train_arg(a, modulus)?, input::train_arg(b, modulus)?);
            match stabilization_limit(&a, &b, cli.window, cli.budget)? {
                Stabilization::Stable { index, coset, computed } => {
                    let body = json!({
                        "command": "stabilize",
                        "config": header,
                        "stable": true,
                        "index": index,
                        "computed": computed,
                        "coset": TrainRecord::from_train(&coset),
                    });
                    (Status::Yes, body, None)
                }
                Stabilization::Inconclusive { computed } => {
                    let body = json!({"command": "stabilize", "config": header, "stable": false, "computed": computed});
                    (Status::Undecided, body, None)
                }
            }
        }
        Command::AssocCheck { a, b, c } => {
            let a = input::train_arg(a, modulus)?;
            let b = input::train_arg(b, modulus)?;
            let c = input::train_arg(c, modulus)?;
            let decision = associativity_check(&a, &b, &c, cli.budget)?;
            let (status, outcome) = decision_fields(&decision);
            (
                status,
                json!({"command": "assoc-check", "config": header, "decision": outcome}),
                None,
            )
        }
        Command::Factor { matrix: arg, n } => {
            let g = matrix(arg, *n, &mut rng)?;
            let factors = generator_factorization(&g, cli.m)?;
            let reproduces = GroupElement::product(modulus, factors.iter().map(|f| &f.element))? == g;
            let tagged = factors.iter().all(|f| f.check(cli.m));
            let list: Vec<Value> = factors
                .iter()
                .map(|f| json!({"kind": f.kind, "matrix": MatrixRecord::from_element(&f.element)}))
                .collect();
            let body = json!({
                "command": "factor",
                "config": header,
                "input": MatrixRecord::from_element(&g),
                "factors": list,
                "product_matches": reproduces,
                "tags_hold": tagged,
            });
            (if reproduces && tagged { Status::Yes } else { Status::No }, body, None)
        }
        Command::Orbits { n, from, to, kind } => {
            if from > to {
                return Err(CliError::Usage(format!("empty window range {from}..={to}")));
            }
            let kind = match kind {
                Kind::Vectors => StateKind::Vectors,
                Kind::Full => StateKind::Full,
            };
            let table = orbit_stabilization(*n, *from..=*to, kind, modulus, cli.budget)?;
            let mut csv = csv::Writer::from_writer(Vec::new());
            for row in &table.rows {
                csv.serialize(row).map_err(|e| CliError::Usage(e.to_string()))?;
            }
            let bytes = csv.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
            let text = String::from_utf8(bytes).expect("csv output is utf-8");
            let body = json!({
                "command": "orbits",
                "config": header,
                "rows": table.rows,
                "stable_from": table.stable_from,
                "complete": table.complete,
            });
            let status = if table.complete { Status::Yes } else { Status::Undecided };
            (status, body, Some(text))
        }
        Command::Selftest { samples } => {
            let cfg = SelftestConfig {
                modulus,
                seed: cli.seed,
                samples: *samples,
                budget: cli.budget,
            };
            let checks = selftest::run(&cfg)?;
            let passed = checks.iter().all(|c| c.passed);
            let mut text = String::new();
            for c in &checks {
                let mark = if c.passed { "ok  " } else { "FAIL" };
                text.push_str(&format!("{mark} {} ({} cases){}\n", c.name, c.cases, suffix(&c.detail)));
            }
            text.push_str(if passed {
                "all checks passed\n"
            } else {
                "some checks failed\n"
            });
            let body = json!({"command": "selftest", "config": header, "samples": samples, "passed": passed, "checks": checks});
            (if passed { Status::Yes } else { Status::No }, body, Some(text))
        }
        Command::Verify { certificate } => {
            let rec = input::certificate_arg(certificate)?;
            let cert = rec.to_certificate()?;
            let ok = cert.verify();
            let body = json!({
                "command": "verify",
                "m": cert.m,
                "p": rec.p,
                "k": rec.k,
                "valid": ok,
            });
            (if ok { Status::Yes } else { Status::No }, body, None)
        }
    };
    Ok(Report { status, body, text })
}

fn suffix(detail: &str) -> String {
    if detail.is_empty() {
        String::new()
    } else {
        format!(": {detail}")
    }
}

fn norm_valuation(n: Norm) -> Value {
    match n {
        Norm::Zero => Value::Null,
        Norm::Power(v) => json!(v),
    }
}

fn decision_fields(d: &Decision) -> (Status, Value) {
    match d {
        Decision::Equivalent(w) => (
            Status::Yes,
            json!({
                "outcome": "equivalent",
                "left": MatrixRecord::from_element(&w.left),
                "right": MatrixRecord::from_element(&w.right),
            }),
        ),
        Decision::Distinct => (Status::No, json!({"outcome": "distinct"})),
        Decision::Undecided { needed, budget } => (
            Status::Undecided,
            json!({"outcome": "undecided", "needed": needed.to_string(), "budget": budget}),
        ),
    }
}

/// `key: value` lines; nested objects are flattened with dotted keys.
fn render_text(v: &Value) -> String {
    let mut out = String::new();
    flatten("", v, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) if !is_matrix(v) => {
            for (key, value) in map {
                let name = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten(&name, value, out);
            }
        }
        Value::String(s) => out.push_str(&format!("{prefix}: {s}\n")),
        _ => out.push_str(&format!("{prefix}: {v}\n")),
    }
}

fn is_matrix(v: &Value) -> bool {
    v.get("rows").is_some() && v.get("n").is_some()
}
