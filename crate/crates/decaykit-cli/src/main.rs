//! Command-line surface over the library: cable construction, certificate
//! generation and verification, registry queries, orderability windows,
//! the satellite quotient, and the positive-cone search.
//!
//! Every command prints one JSON report to stdout with sorted keys and no
//! timing, so identical runs produce identical bytes; `--verbose` adds a
//! human summary with wall time on stderr. Exit codes: 0 for success or a
//! positive verdict, 1 for a semantic negative (reject, contradiction, no
//! applicable rule), 2 for input errors, 3 for a search that proves
//! nothing either way.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use decaykit::backend::backend_for;
use decaykit::cable::{
    cable_decay_applicable, cable_peripherals, lo_window, satellite_quotient, CableParams,
    LoVerdict,
};
use decaykit::cert::{
    builtin_cable_certificate, conclude_decay, verify_certificate, Certificate, Verdict,
    VerifyOptions,
};
use decaykit::presentation::Presentation;
use decaykit::registry::Registry;
use decaykit::search::{
    classify, cone_search, enumerate_ball, replay_refutation, Classification, SearchOutcome,
};
use decaykit::{Rational, Word};

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NO_OBSTRUCTION: u8 = 3;

#[derive(Parser)]
#[command(name = "decaykit", version, about = "Exact surgery-slope toolkit")]
struct Cli {
    /// Registry JSON file; overrides DECAYKIT_REGISTRY and the embedded table.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    /// Print a human summary with timing to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cable a registry companion and report the decay verdict and window.
    Cable {
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        /// Companion id, e.g. torus:2,3
        #[arg(long)]
        of: String,
    },
    /// Check a derivation certificate file (use - for stdin).
    VerifyCert {
        #[arg(long)]
        cert: PathBuf,
        /// Parameter grid bound for the finite check.
        #[arg(long, default_value_t = 5)]
        grid: i64,
    },
    /// Generate the builtin cable certificate for (p, q) over threshold r.
    GenCert {
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        /// Companion decay threshold, e.g. 5 or 9/2.
        #[arg(long)]
        r: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the knot table.
    Registry {
        #[command(subcommand)]
        cmd: RegistryCmd,
    },
    /// Surgery-slope orderability window for a (p, q) cable.
    LoWindow {
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        /// Companion id whose decay bound gates the obstruction.
        #[arg(long)]
        of: Option<String>,
        /// Explicit companion decay bound instead of --of.
        #[arg(long)]
        decay: Option<String>,
        /// Optional slope to classify against the window.
        #[arg(long)]
        r: Option<String>,
    },
    /// Positive-cone sign search over a ball in a presented group.
    Search {
        /// Presentation JSON file.
        #[arg(long)]
        presentation: PathBuf,
        #[arg(long, default_value_t = 3)]
        radius: usize,
    },
    /// Satellite quotient of the cable-space group onto <m, t | t^p = m^q>.
    Quotient {
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        /// Optional word over m, l, t to push through the quotient.
        #[arg(long)]
        word: Option<String>,
    },
}

#[derive(Subcommand)]
enum RegistryCmd {
    /// Print every record.
    List,
    /// Resolve one id through the decay rules.
    Lookup {
        #[arg(long)]
        id: String,
    },
}

struct Outcome {
    report: Value,
    code: u8,
}

fn report(command: &str, inputs: Value, verdict: &str, details: Value) -> Value {
    json!({
        "command": command,
        "inputs": inputs,
        "verdict": verdict,
        "details": details,
        "tool": {"name": "decaykit", "version": env!("CARGO_PKG_VERSION")},
    })
}

fn input_error(command: &str, inputs: Value, message: String) -> Outcome {
    Outcome {
        report: report(command, inputs, "error", json!({"message": message})),
        code: EXIT_INPUT,
    }
}

fn load_registry(cli: &Cli) -> Result<Registry, String> {
    let path = cli
        .registry
        .clone()
        .or_else(|| std::env::var_os("DECAYKIT_REGISTRY").map(PathBuf::from));
    match path {
        None => Ok(Registry::embedded()),
        Some(p) => {
            let text = fs::read_to_string(&p)
                .map_err(|e| format!("cannot read registry {}: {e}", p.display()))?;
            Registry::from_json(&text).map_err(|e| e.to_string())
        }
    }
}

fn cmd_cable(cli: &Cli, p: i64, q: i64, of: &str) -> Outcome {
    let inputs = json!({"p": p, "q": q, "of": of});
    let reg = match load_registry(cli) {
        Ok(r) => r,
        Err(e) => return input_error("cable", inputs, e),
    };
    let companion = match reg.lookup(of) {
        Err(e) => return input_error("cable", inputs, e.to_string()),
        Ok(None) => {
            return input_error("cable", inputs, format!("no decay rule applies to {of}"))
        }
        Ok(Some(d)) => d,
    };
    let params = match CableParams::new(p, q) {
        Ok(params) => params,
        Err(e) => return input_error("cable", inputs, e.to_string()),
    };
    if !cable_decay_applicable(params, &companion) {
        let details = json!({
            "reason": "q/p <= companion decay bound",
            "ratio": format!("{q}/{p}"),
            "companion_decay": companion.to_string(),
        });
        return Outcome {
            report: report("cable", inputs, "inapplicable", details),
            code: EXIT_OK,
        };
    }
    let periph = cable_peripherals(params);
    let win = lo_window(params, Some(&companion)).expect("params validated");
    let details = json!({
        "u": params.u,
        "v": params.v,
        "cable_meridian": periph.meridian.to_string(),
        "cable_longitude": periph.longitude.to_string(),
        "decay_bound": Rational::integer(p * q).to_string(),
        "companion_decay": companion.to_string(),
        "window": {
            "orderable_below": win.lo_below.to_string(),
            "obstructed_from": win.nlo_from.as_ref().map(|r| r.to_string()),
        },
    });
    Outcome {
        report: report("cable", inputs, "decayed", details),
        code: EXIT_OK,
    }
}

fn cmd_verify_cert(cert_path: &PathBuf, grid: i64) -> Outcome {
    let inputs = json!({"cert": cert_path.display().to_string(), "grid": grid});
    let text = if cert_path.as_os_str() == "-" {
        use std::io::Read;
        let mut buf = String::new();
        match std::io::stdin().read_to_string(&mut buf) {
            Ok(_) => buf,
            Err(e) => return input_error("verify-cert", inputs, format!("cannot read stdin: {e}")),
        }
    } else {
        match fs::read_to_string(cert_path) {
            Ok(t) => t,
            Err(e) => {
                return input_error(
                    "verify-cert",
                    inputs,
                    format!("cannot read {}: {e}", cert_path.display()),
                )
            }
        }
    };
    let cert = match Certificate::from_json_str(&text) {
        Ok(c) => c,
        Err(e) => return input_error("verify-cert", inputs, format!("parse error: {e}")),
    };
    let opts = VerifyOptions {
        grid_bound: grid,
        ..VerifyOptions::default()
    };
    let vr = verify_certificate(&cert, &opts);
    let accepted = vr.verdict == Verdict::Accept;
    let conclusion = conclude_decay(&vr).ok();
    let mut details = serde_json::to_value(&vr).expect("report serializes");
    details["conclusion"] = json!(conclusion);
    Outcome {
        report: report(
            "verify-cert",
            inputs,
            if accepted { "accept" } else { "reject" },
            details,
        ),
        code: if accepted { EXIT_OK } else { EXIT_NEGATIVE },
    }
}

fn cmd_gen_cert(p: i64, q: i64, r: &str, out: Option<&PathBuf>) -> Outcome {
    let inputs = json!({"p": p, "q": q, "r": r, "out": out.map(|p| p.display().to_string())});
    let threshold: Rational = match r.parse() {
        Ok(t) => t,
        Err(e) => return input_error("gen-cert", inputs, format!("bad threshold: {e}")),
    };
    let cert = match builtin_cable_certificate(p, q, threshold) {
        Ok(c) => c,
        Err(e) => return input_error("gen-cert", inputs, e.to_string()),
    };
    let text = cert.to_json_string().expect("certificate serializes");
    match out {
        Some(path) => match fs::write(path, text + "\n") {
            Ok(()) => Outcome {
                report: report(
                    "gen-cert",
                    inputs,
                    "written",
                    json!({"path": path.display().to_string()}),
                ),
                code: EXIT_OK,
            },
            Err(e) => input_error(
                "gen-cert",
                inputs,
                format!("cannot write {}: {e}", path.display()),
            ),
        },
        None => Outcome {
            report: serde_json::from_str(&text).expect("round trip"),
            code: EXIT_OK,
        },
    }
}

fn cmd_registry(cli: &Cli, cmd: &RegistryCmd) -> Outcome {
    let reg = match load_registry(cli) {
        Ok(r) => r,
        Err(e) => return input_error("registry", json!({}), e),
    };
    match cmd {
        RegistryCmd::List => {
            let records = serde_json::to_value(reg.records()).expect("records serialize");
            let details = json!({"count": reg.records().len(), "records": records});
            Outcome {
                report: report("registry", json!({"cmd": "list"}), "ok", details),
                code: EXIT_OK,
            }
        }
        RegistryCmd::Lookup { id } => {
            let inputs = json!({"cmd": "lookup", "id": id});
            match reg.lookup(id) {
                Err(e) => input_error("registry", inputs, e.to_string()),
                Ok(None) => Outcome {
                    report: report(
                        "registry",
                        inputs,
                        "no-rule",
                        json!({"message": "no decay rule applies"}),
                    ),
                    code: EXIT_NEGATIVE,
                },
                Ok(Some(d)) => Outcome {
                    report: report(
                        "registry",
                        inputs,
                        "ok",
                        json!({"decay": d.to_string(), "listed": reg.contains(id)}),
                    ),
                    code: EXIT_OK,
                },
            }
        }
    }
}

fn cmd_lo_window(
    cli: &Cli,
    p: i64,
    q: i64,
    of: Option<&str>,
    decay: Option<&str>,
    slope: Option<&str>,
) -> Outcome {
    let inputs = json!({"p": p, "q": q, "of": of, "decay": decay, "r": slope});
    if of.is_some() && decay.is_some() {
        return input_error("lo-window", inputs, "use either --of or --decay".into());
    }
    let companion = match (of, decay) {
        (Some(id), _) => {
            let reg = match load_registry(cli) {
                Ok(r) => r,
                Err(e) => return input_error("lo-window", inputs, e),
            };
            match reg.lookup(id) {
                Err(e) => return input_error("lo-window", inputs, e.to_string()),
                Ok(None) => {
                    return input_error(
                        "lo-window",
                        inputs,
                        format!("no decay rule applies to {id}"),
                    )
                }
                Ok(Some(d)) => Some(d),
            }
        }
        (None, Some(text)) => match text.parse::<Rational>() {
            Ok(d) => Some(d),
            Err(e) => return input_error("lo-window", inputs, format!("bad decay bound: {e}")),
        },
        (None, None) => None,
    };
    let params = match CableParams::new(p, q) {
        Ok(params) => params,
        Err(e) => return input_error("lo-window", inputs, e.to_string()),
    };
    let win = match lo_window(params, companion.as_ref()) {
        Ok(w) => w,
        Err(e) => return input_error("lo-window", inputs, e.to_string()),
    };
    let mut details = json!({
        "orderable_below": win.lo_below.to_string(),
        "obstructed_from": win.nlo_from.as_ref().map(|r| r.to_string()),
        "companion_decay": companion.as_ref().map(|r| r.to_string()),
    });
    if let Some(text) = slope {
        let r: Rational = match text.parse() {
            Ok(r) => r,
            Err(e) => return input_error("lo-window", inputs, format!("bad slope: {e}")),
        };
        let class = match win.classify(&r) {
            LoVerdict::LeftOrderable => "left-orderable",
            LoVerdict::Unknown => "unknown",
            LoVerdict::NotLeftOrderable => "not-left-orderable",
        };
        details["classification"] = json!(class);
    }
    Outcome {
        report: report("lo-window", inputs, "ok", details),
        code: EXIT_OK,
    }
}

fn cmd_search(path: &PathBuf, radius: usize) -> Outcome {
    let inputs = json!({"presentation": path.display().to_string(), "radius": radius});
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            return input_error("search", inputs, format!("cannot read {}: {e}", path.display()))
        }
    };
    let pres: Presentation = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(e) => return input_error("search", inputs, format!("parse error: {e}")),
    };
    if let Err(e) = pres.validate() {
        return input_error("search", inputs, e.to_string());
    }
    let backend = match backend_for(&pres) {
        Ok(b) => b,
        Err(e) => return input_error("search", inputs, e.to_string()),
    };
    let inst = match enumerate_ball(&pres, radius, &backend) {
        Ok(i) => i,
        Err(e) => return input_error("search", inputs, e.to_string()),
    };
    let outcome = cone_search(&inst);
    let class = classify(&outcome, &inst);
    let mut details = json!({
        "elements": inst.elements.len(),
        "heuristic": inst.heuristic,
    });
    let (verdict, code) = match (&outcome, class) {
        (SearchOutcome::Contradiction { trace }, Classification::Contradiction) => {
            details["trace_events"] = json!(trace.len());
            details["replay_verified"] = json!(replay_refutation(&inst, trace).is_ok());
            ("contradiction", EXIT_NEGATIVE)
        }
        (SearchOutcome::Assignment { signs }, Classification::Assignment) => {
            details["signs"] = serde_json::to_value(signs).expect("signs serialize");
            ("assignment", EXIT_OK)
        }
        _ => ("no-obstruction", EXIT_NO_OBSTRUCTION),
    };
    Outcome {
        report: report("search", inputs, verdict, details),
        code,
    }
}

fn cmd_quotient(p: i64, q: i64, word: Option<&str>) -> Outcome {
    let inputs = json!({"p": p, "q": q, "word": word});
    let params = match CableParams::new(p, q) {
        Ok(params) => params,
        Err(e) => return input_error("quotient", inputs, e.to_string()),
    };
    let sq = satellite_quotient(params);
    let periph = cable_peripherals(params);
    let meridian_image = sq.apply(&periph.meridian).expect("peripheral word maps");
    let longitude_image = sq.apply(&periph.longitude).expect("peripheral word maps");
    let mut details = json!({
        "target": serde_json::to_value(&sq.target).expect("presentation serializes"),
        "generator_images": {
            "m": sq.map["m"].to_string(),
            "l": sq.map["l"].to_string(),
            "t": sq.map["t"].to_string(),
        },
        "cable_meridian_image": meridian_image.to_string(),
        "cable_meridian_abelianized": sq.abelian_image(&periph.meridian).expect("maps"),
        "cable_longitude_image": longitude_image.to_string(),
        "cable_longitude_abelianized": sq.abelian_image(&periph.longitude).expect("maps"),
    });
    if let Some(text) = word {
        let w: Word = match text.parse() {
            Ok(w) => w,
            Err(e) => return input_error("quotient", inputs, format!("bad word: {e}")),
        };
        let image = match sq.apply(&w) {
            Ok(i) => i,
            Err(e) => return input_error("quotient", inputs, e.to_string()),
        };
        let ab = match sq.abelian_image(&w) {
            Ok(a) => a,
            Err(e) => return input_error("quotient", inputs, e.to_string()),
        };
        details["word_image"] = json!(image.to_string());
        details["word_abelianized"] = json!(ab);
    }
    Outcome {
        report: report("quotient", inputs, "ok", details),
        code: EXIT_OK,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let t0 = Instant::now();
    let outcome = match &cli.command {
        Command::Cable { p, q, of } => cmd_cable(&cli, *p, *q, of),
        Command::VerifyCert { cert, grid } => cmd_verify_cert(cert, *grid),
        Command::GenCert { p, q, r, out } => cmd_gen_cert(*p, *q, r, out.as_ref()),
        Command::Registry { cmd } => cmd_registry(&cli, cmd),
        Command::LoWindow { p, q, of, decay, r } => {
            cmd_lo_window(&cli, *p, *q, of.as_deref(), decay.as_deref(), r.as_deref())
        }
        Command::Search { presentation, radius } => cmd_search(presentation, *radius),
        Command::Quotient { p, q, word } => cmd_quotient(*p, *q, word.as_deref()),
    };
    let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    {
        use std::io::Write;
        let mut out = std::io::stdout().lock();
        if let Err(e) = writeln!(out, "{text}") {
            // a closed pipe downstream is not our error
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return ExitCode::from(outcome.code);
            }
            eprintln!("decaykit: cannot write stdout: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    if cli.verbose {
        let verdict = outcome.report["verdict"].as_str().unwrap_or("done");
        eprintln!("{verdict} (exit {}) in {:?}", outcome.code, t0.elapsed());
    }
    ExitCode::from(outcome.code)
}
