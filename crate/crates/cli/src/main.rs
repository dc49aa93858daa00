use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use cmp_core::characterizations::{
    closure_test, conditional_given_sum, convolve, fit_cmp_from_ratios, limit_cmb_to_cmp,
    limit_cmnb_to_cmp, rao_rubin_gap, stein_residual,
};
use cmp_core::dpcp::{dcp_sample, dpcp_reconstruct, dpcp_recover, pgf_min_modulus, DpcpParams};
use cmp_core::information::{
    com_fisher_info, renyi_entropy, score_and_fisher, stam_gap, tsallis_entropy,
};
use cmp_core::kernels::sampling::empirical_pmf;
use cmp_core::kernels::{ln_normalizer_asymptotic, normalizer_series, CmpParams, DEFAULT_TOL};
use cmp_core::queue::{queue_exact_steady_state, queue_simulate, QueueConfig};
use cmp_core::transform::com_type;
use cmp_core::{CheckRegistry, Error, FamilyArgs, FamilyRegistry, Result, TruncatedPmf};

#[derive(Parser)]
#[command(
    name = "cmpkit",
    version,
    about = "Conway-Maxwell-Poisson distributions and their characterizations"
)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Truncation tolerance for series-defined pmfs.
    #[arg(long, default_value_t = DEFAULT_TOL, global = true)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Build a pmf: cmp, cmb, cmnb, ecomp, series, poisson, geometric.
    Pmf {
        family: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    Normalizer {
        #[arg(value_enum)]
        method: NormalizerMethod,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        nu: f64,
    },
    Transform {
        #[arg(value_parser = ["com-type"])]
        transform: String,
        #[command(flatten)]
        source: Source,
        /// Power ν of the transform.
        #[arg(long)]
        order: f64,
    },
    Entropy {
        #[arg(value_enum)]
        measure: EntropyKind,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        order: f64,
    },
    /// Kagan score and information; with --order, also the COM-type information.
    Fisher {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        order: Option<f64>,
    },
    Stam {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1.0)]
        order: f64,
    },
    Convolve {
        #[command(flatten)]
        source: Source,
    },
    Conditional {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        sum: u64,
    },
    Closure {
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        lambda2: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 20)]
        n_max: u64,
        /// Relative ratio deviation counted as a violation.
        #[arg(long, default_value_t = 1e-9)]
        threshold: f64,
    },
    /// Stein residual against CMP(λ, ν); fitted from the first two ratios when omitted.
    Stein {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        test_lambda: Option<f64>,
        #[arg(long)]
        test_nu: Option<f64>,
    },
    RaoRubin {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        damage_p: f64,
        #[arg(long)]
        damage_nu: f64,
    },
    Limit {
        #[arg(value_enum)]
        kind: LimitKind,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        nu: f64,
        /// Comma-separated m (cmb) or r (cmnb) values.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    Dpcp {
        #[command(subcommand)]
        op: DpcpOp,
    },
    Queue {
        #[command(subcommand)]
        op: QueueOp,
    },
    /// Run one check, or `all`.
    Verify {
        check: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizerMethod {
    Series,
    Asymptotic,
}

#[derive(Clone, Copy, ValueEnum)]
enum EntropyKind {
    Renyi,
    Tsallis,
}

#[derive(Clone, Copy, ValueEnum)]
enum LimitKind {
    Cmb,
    Cmnb,
}

#[derive(Subcommand)]
enum DpcpOp {
    Recover {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 30)]
        n_terms: usize,
    },
    Reconstruct {
        #[command(flatten)]
        dpcp: DpcpInput,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
    },
    Sample {
        #[command(flatten)]
        dpcp: DpcpInput,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Minimum pgf modulus over a polar grid of the closed unit disk.
    Zeros {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 256)]
        radial: usize,
        #[arg(long, default_value_t = 256)]
        angular: usize,
    },
}

#[derive(Subcommand)]
enum QueueOp {
    Exact {
        #[arg(long)]
        arrival: f64,
        #[arg(long)]
        service: f64,
        #[arg(long)]
        nu: f64,
    },
    Simulate {
        #[arg(long)]
        arrival: f64,
        #[arg(long)]
        service: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long)]
        state_cap: Option<u64>,
    },
}

#[derive(Args, Default)]
struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Series kind for `pmf series`: zeta, lerch, hyper-poisson.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    kmax: Option<u64>,
}

impl ParamArgs {
    fn family_args(&self, tol: f64) -> FamilyArgs {
        let mut args = FamilyArgs {
            k_max: self.kmax,
            tol,
            ..FamilyArgs::default()
        };
        let named = [
            ("lambda", self.lambda),
            ("nu", self.nu),
            ("m", self.m),
            ("p", self.p),
            ("r", self.r),
            ("theta", self.theta),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("c", self.c),
            ("a", self.a),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                args.values.insert(k.into(), v);
            }
        }
        args
    }

    fn build(&self, family: &str, tol: f64) -> Result<TruncatedPmf> {
        let family = match family {
            "series" => self.kind.as_deref().ok_or_else(|| {
                Error::Parse("pmf series needs --kind zeta|lerch|hyper-poisson".into())
            })?,
            f => f,
        };
        FamilyRegistry::builtin().build(family, &self.family_args(tol))
    }
}

/// Input laws: pmf files, or a family built from flags. For two-input commands a family
/// is built twice with `--lambda1` and `--lambda2` standing in for `--lambda`.
#[derive(Args)]
struct Source {
    /// pmf JSON document; give twice for two-input commands.
    #[arg(long)]
    pmf_file: Vec<PathBuf>,
    #[arg(long, default_value = "cmp")]
    family: String,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[command(flatten)]
    params: ParamArgs,
}

fn read_pmf(path: &PathBuf) -> Result<TruncatedPmf> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    TruncatedPmf::from_json(&doc)
}

impl Source {
    fn one(&self, tol: f64) -> Result<TruncatedPmf> {
        match self.pmf_file.first() {
            Some(p) => read_pmf(p),
            None => self.params.build(&self.family, tol),
        }
    }

    fn two(&self, tol: f64) -> Result<(TruncatedPmf, TruncatedPmf)> {
        if self.pmf_file.len() >= 2 {
            return Ok((read_pmf(&self.pmf_file[0])?, read_pmf(&self.pmf_file[1])?));
        }
        let (l1, l2) = match (self.lambda1, self.lambda2) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse(
                    "two inputs needed: --pmf-file twice, or --lambda1 and --lambda2".into(),
                ))
            }
        };
        let mut args = self.params.family_args(tol);
        args.values.insert("lambda".into(), l1);
        let reg = FamilyRegistry::builtin();
        let x = reg.build(&self.family, &args)?;
        args.values.insert("lambda".into(), l2);
        Ok((x, reg.build(&self.family, &args)?))
    }
}

#[derive(Args)]
struct DpcpInput {
    /// DpcpParams JSON document (as written by `dpcp recover`).
    #[arg(long)]
    params_file: Option<PathBuf>,
    #[arg(long)]
    lambda_tilde: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    alphas: Vec<f64>,
}

impl DpcpInput {
    fn params(&self) -> Result<DpcpParams> {
        if let Some(path) = &self.params_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
            let doc: Value =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            return DpcpParams::from_json(&doc);
        }
        let lt = self.lambda_tilde.ok_or_else(|| {
            Error::Parse("--params-file or --lambda-tilde with --alphas required".into())
        })?;
        DpcpParams::new(lt, self.alphas.clone(), "command line")
    }
}

enum Output {
    Pmf(TruncatedPmf),
    Doc(Value),
    Verify(Value, bool),
}

fn run(cli: &Cli) -> Result<Output> {
    let tol = cli.tol;
    Ok(match &cli.command {
        Command::Pmf { family, params } => Output::Pmf(params.build(family, tol)?),
        Command::Normalizer { method, lambda, nu } => {
            let params = CmpParams::new(*lambda, *nu)?;
            match method {
                NormalizerMethod::Series => {
                    let z = normalizer_series(&params, tol)?;
                    Output::Doc(json!({
                        "method": "series", "lambda": lambda, "nu": nu,
                        "ln_value": z.ln_value, "value": z.value(),
                        "rel_tail_bound": z.rel_tail_bound, "terms_used": z.terms_used,
                    }))
                }
                NormalizerMethod::Asymptotic => {
                    let ln = ln_normalizer_asymptotic(&params);
                    let v = ln.exp();
                    Output::Doc(json!({
                        "method": "asymptotic", "lambda": lambda, "nu": nu,
                        "ln_value": ln, "value": if v.is_finite() { json!(v) } else { Value::Null },
                    }))
                }
            }
        }
        Command::Transform { source, order, .. } => {
            Output::Pmf(com_type(&source.one(tol)?, *order, tol)?.pmf)
        }
        Command::Entropy {
            measure,
            source,
            order,
        } => {
            let p = source.one(tol)?;
            let (name, v) = match measure {
                EntropyKind::Renyi => ("renyi", renyi_entropy(&p, *order)?),
                EntropyKind::Tsallis => ("tsallis", tsallis_entropy(&p, *order)?),
            };
            Output::Doc(json!({ "entropy": name, "order": order, "value": v }))
        }
        Command::Fisher { source, order } => {
            let p = source.one(tol)?;
            let r = match order {
                Some(nu) => com_fisher_info(&p, *nu)?,
                None => score_and_fisher(&p),
            };
            Output::Doc(r.to_json())
        }
        Command::Stam { source, order } => {
            let (x, y) = source.two(tol)?;
            let g = stam_gap(&x, &y, *order)?;
            Output::Doc(json!({
                "gap": g.gap, "lhs": g.lhs, "rhs": g.rhs,
                "lhs_transform_of_sum": g.lhs_transform_of_sum, "nu": order,
                "rsp_checked_on": "window",
            }))
        }
        Command::Convolve { source } => {
            let (x, y) = source.two(tol)?;
            Output::Pmf(convolve(&x, &y))
        }
        Command::Conditional { source, sum } => {
            let (x, y) = source.two(tol)?;
            Output::Doc(json!({ "sum": sum, "probs": conditional_given_sum(&x, &y, *sum)? }))
        }
        Command::Closure {
            lambda1,
            lambda2,
            nu,
            n_max,
            threshold,
        } => {
            let r = closure_test(*lambda1, *lambda2, *nu, *n_max, *threshold)?;
            Output::Doc(serde_json::to_value(r).map_err(|e| Error::Parse(e.to_string()))?)
        }
        Command::Stein {
            source,
            test_lambda,
            test_nu,
        } => {
            let p = source.one(tol)?;
            let (lambda, nu) = match (test_lambda, test_nu) {
                (Some(l), Some(n)) => (*l, *n),
                _ => {
                    let (fl, fn_) = fit_cmp_from_ratios(&p).ok_or_else(|| {
                        Error::Precondition("cannot fit (lambda, nu): P0, P1 or P2 is zero".into())
                    })?;
                    (test_lambda.unwrap_or(fl), test_nu.unwrap_or(fn_))
                }
            };
            let (max, at) = stein_residual(&p, lambda, nu);
            Output::Doc(json!({ "max_residual": max, "argmax_j": at, "lambda": lambda, "nu": nu }))
        }
        Command::RaoRubin {
            source,
            damage_p,
            damage_nu,
        } => {
            let g = rao_rubin_gap(&source.one(tol)?, *damage_p, *damage_nu)?;
            Output::Doc(
                json!({ "max_gap": g.max_gap, "argmax_r": g.argmax_r, "p": damage_p, "nu": damage_nu }),
            )
        }
        Command::Limit {
            kind,
            lambda,
            nu,
            grid,
        } => {
            let c = match kind {
                LimitKind::Cmb => {
                    let ms = grid
                        .iter()
                        .map(|&g| {
                            if g >= 1.0 && g.fract() == 0.0 {
                                Ok(g as u64)
                            } else {
                                Err(Error::Domain(format!(
                                    "m must be a positive integer (got {g})"
                                )))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    limit_cmb_to_cmp(*lambda, *nu, &ms)?
                }
                LimitKind::Cmnb => limit_cmnb_to_cmp(*lambda, *nu, grid)?,
            };
            Output::Doc(serde_json::to_value(c).map_err(|e| Error::Parse(e.to_string()))?)
        }
        Command::Dpcp { op } => match op {
            DpcpOp::Recover { source, n_terms } => {
                Output::Doc(dpcp_recover(&source.one(tol)?, *n_terms)?.to_json())
            }
            DpcpOp::Reconstruct { dpcp, n_max } => {
                Output::Pmf(dpcp_reconstruct(&dpcp.params()?, *n_max))
            }
            DpcpOp::Sample { dpcp, n, seed } => {
                let draws = dcp_sample(&dpcp.params()?, *n, *seed)?;
                Output::Doc(
                    json!({ "seed": seed, "n": n, "empirical": empirical_pmf(&draws), "draws": draws }),
                )
            }
            DpcpOp::Zeros {
                source,
                radial,
                angular,
            } => {
                let (m, z) = pgf_min_modulus(&source.one(tol)?, *radial, *angular)?;
                Output::Doc(json!({
                    "min_modulus": m, "argmin": [z.re, z.im],
                    "radial_steps": radial, "angular_steps": angular,
                    "note": "grid screening statistic, not a proof of zero-freeness",
                }))
            }
        },
        Command::Queue { op } => match op {
            QueueOp::Exact {
                arrival,
                service,
                nu,
            } => Output::Pmf(queue_exact_steady_state(*arrival, *service, *nu, tol)?),
            QueueOp::Simulate {
                arrival,
                service,
                nu,
                horizon,
                seed,
                burn_in,
                state_cap,
            } => {
                let mut cfg = QueueConfig::new(*arrival, *service, *nu, *horizon, *seed)?;
                if let Some(b) = burn_in {
                    cfg = cfg.with_burn_in(*b)?;
                }
                if let Some(c) = state_cap {
                    cfg = cfg.with_state_cap(*c)?;
                }
                let est = queue_simulate(&cfg)?;
                if est.saturated {
                    eprintln!(
                        "warning: state cap {} reached on {} of {} transitions",
                        cfg.state_cap, est.cap_hits, est.transitions
                    );
                }
                Output::Doc(est.to_json())
            }
        },
        Command::Verify { check, seed } => {
            let registry = CheckRegistry::builtin();
            let names: Vec<&str> = if check == "all" {
                Vec::new()
            } else if registry.contains(check) {
                vec![check.as_str()]
            } else {
                return Err(Error::Parse(format!(
                    "unknown check '{check}' (known: all, {})",
                    registry.names().join(", ")
                )));
            };
            let report = registry.run(&names, *seed);
            Output::Verify(report.to_json(), report.overall)
        }
    })
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(scalar).collect::<Vec<_>>().join(";"),
        Value::Object(_) => v.to_string(),
        other => other.to_string(),
    }
}

fn csv_of(doc: &Value) -> String {
    match doc {
        Value::Object(m) if m.contains_key("checks") => {
            let mut out = String::from("check,pass,statistic,tolerance\n");
            for c in m["checks"].as_array().into_iter().flatten() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    scalar(&c["check"]),
                    c["pass"],
                    c["statistic"],
                    c["tolerance"]
                ));
            }
            out
        }
        Value::Object(m) => {
            let mut out = String::from("key,value\n");
            for (k, v) in m {
                out.push_str(&format!("{k},{}\n", scalar(v)));
            }
            out
        }
        other => format!("{other}\n"),
    }
}

// A closed pipe (e.g. `| head`) is not an error worth a panic.
fn write_out(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(doc: &Value, format: Format) {
    match format {
        Format::Json => write_out(&format!(
            "{}\n",
            serde_json::to_string_pretty(doc).unwrap_or_default()
        )),
        Format::Csv => write_out(&csv_of(doc)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Output::Pmf(p)) => {
            match cli.format {
                Format::Json => emit(&p.to_json(), Format::Json),
                Format::Csv => write_out(&p.to_csv()),
            }
            ExitCode::SUCCESS
        }
        Ok(Output::Doc(doc)) => {
            emit(&doc, cli.format);
            ExitCode::SUCCESS
        }
        Ok(Output::Verify(doc, overall)) => {
            emit(&doc, cli.format);
            if overall {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut m = Map::new();
            m.insert("error".into(), json!(e.name()));
            m.insert("message".into(), json!(e.to_string()));
            write_out(&format!("{}\n", Value::Object(m)));
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
