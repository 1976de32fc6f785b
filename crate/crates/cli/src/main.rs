//! `painworth` command line.
//!
//! Exit codes: 0 success or Proceed, 1 usage or IO error, 2 validation
//! failure, 3 RedesignForValue, 4 RedesignForCost, 5 Drop.

use std::io::{self, Read, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rust_decimal::Decimal;

use painworth_core::demo;
use painworth_core::domain::{PainKind, Portfolio};
use painworth_core::funnel::{FunnelAction, FunnelTargets};
use painworth_core::io::archive::ScenarioArchive;
use painworth_core::io::{parse_portfolio, render_report, InputFormat, ReportFormat};
use painworth_core::money::Money;
use painworth_core::number::{canonical_text, parse_decimal, AmountText};
use painworth_core::scenario::{Adjustments, ScenarioError};
use painworth_core::sensitivity::{breakeven_scale, sweep, tornado, BreakevenOutcome, ParamPath};
use painworth_core::validate::RawCostModel;
use painworth_core::valuation::CeilingBasis;

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "painworth", version, about = "Value of solving customer pains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a portfolio.
    Validate(Input),
    /// Value report with price ceiling and fee quote.
    Evaluate {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "table", value_parser = parse_arg::<ReportFormat>)]
        format: ReportFormat,
        /// Revenue share in [0, 1]; overrides the portfolio's pricing.
        #[arg(long, value_parser = parse_number)]
        share: Option<Decimal>,
        #[arg(long, default_value = "all", value_parser = parse_arg::<CeilingBasis>)]
        ceiling_basis: CeilingBasis,
        #[command(flatten)]
        kind: KindFilter,
    },
    /// Funnel gate verdict; the exit code carries the action.
    Gate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_number)]
        value_target: Decimal,
        #[arg(long, value_parser = parse_number)]
        cost_budget: Decimal,
        #[arg(long, default_value = "0", value_parser = parse_number)]
        min_margin: Decimal,
        #[arg(long, value_parser = parse_number)]
        dev_cost: Option<Decimal>,
        #[arg(long, value_parser = parse_number)]
        annual_cost: Option<Decimal>,
        #[arg(long)]
        amortization: Option<i64>,
        #[command(flatten)]
        kind: KindFilter,
    },
    /// CSV of economic value over a parameter range.
    Sweep {
        #[command(flatten)]
        input: Input,
        /// e.g. pain(2).line(customer).alleviation
        #[arg(long, value_parser = parse_arg::<ParamPath>)]
        path: ParamPath,
        #[arg(long, value_parser = parse_number)]
        from: Decimal,
        #[arg(long, value_parser = parse_number)]
        to: Decimal,
        #[arg(long, default_value = "11")]
        steps: usize,
        #[command(flatten)]
        kind: KindFilter,
    },
    /// Scale factor on all effective values at which value meets cost.
    Breakeven {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_number)]
        cost: Decimal,
        #[command(flatten)]
        kind: KindFilter,
    },
    /// CSV of value swings for a relative change of each parameter.
    Tornado {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "0.1", value_parser = parse_number)]
        rel: Decimal,
        #[command(flatten)]
        kind: KindFilter,
    },
    /// Run the HTTP API on 127.0.0.1.
    Serve {
        #[arg(long, env = "PAINWORTH_PORT", default_value = "8080")]
        port: u16,
        #[arg(long, env = "PAINWORTH_DATA_DIR")]
        data_dir: PathBuf,
    },
    /// Print the demo portfolio as JSON.
    Demo,
}

#[derive(Args)]
struct Input {
    /// Portfolio file; `-` reads standard input.
    file: String,
    /// Defaults to csv for `.csv` files and json otherwise.
    #[arg(long, value_parser = parse_arg::<InputFormat>)]
    input_format: Option<InputFormat>,
}

#[derive(Args)]
struct KindFilter {
    /// Only pains of this kind.
    #[arg(long, value_parser = parse_arg::<PainKind>)]
    kind: Option<PainKind>,
}

fn parse_arg<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn parse_number(s: &str) -> Result<Decimal, String> {
    parse_decimal(s, None).map_err(|e| e.to_string())
}

/// Failure with its exit code; messages go to standard error.
struct Failure {
    code: u8,
    lines: Vec<String>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            lines: vec![message.into()],
        }
    }
}

fn load(input: &Input) -> Result<Portfolio, Failure> {
    let bytes = if input.file == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::usage(format!("cannot read standard input: {e}")))?;
        buf
    } else {
        std::fs::read(&input.file)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", input.file)))?
    };
    let format = input
        .input_format
        .unwrap_or_else(|| InputFormat::from_path(&input.file));
    parse_portfolio(&bytes, format).map_err(|e| Failure {
        code: EXIT_INVALID,
        lines: e.lines(),
    })
}

fn scenario_failure(e: ScenarioError) -> Failure {
    match e {
        ScenarioError::Invalid(errors) => Failure {
            code: EXIT_INVALID,
            lines: errors.iter().map(ToString::to_string).collect(),
        },
        other => Failure::usage(format!("{}: {other}", other.code())),
    }
}

fn money(p: &Portfolio, value: Decimal, flag: &str) -> Result<Money, Failure> {
    Money::parse(&value.to_string(), p.currency())
        .map_err(|e| Failure::usage(format!("--{flag}: {e}")))
}

fn only_kind(p: Portfolio, kind: &KindFilter) -> Portfolio {
    match kind.kind {
        Some(k) => p.only_kind(k),
        None => p,
    }
}

fn exit_for(action: FunnelAction) -> u8 {
    match action {
        FunnelAction::AdvanceStage => 0,
        FunnelAction::RedesignForValue => 3,
        FunnelAction::RedesignForCost => 4,
        FunnelAction::Drop => 5,
    }
}

fn run(command: Command, out: &mut impl Write) -> Result<u8, Failure> {
    let write_err = |e: io::Error| match e.kind() {
        io::ErrorKind::BrokenPipe => Failure {
            code: 0,
            lines: Vec::new(),
        },
        _ => Failure::usage(format!("cannot write output: {e}")),
    };
    match command {
        Command::Validate(input) => {
            let p = load(&input)?;
            writeln!(
                out,
                "{}: ok ({} pains, {} agents)",
                p.id(),
                p.pains().len(),
                p.agents().len()
            )
            .map_err(write_err)?;
        }
        Command::Evaluate {
            input,
            format,
            share,
            ceiling_basis,
            kind,
        } => {
            let p = load(&input)?;
            let adj = Adjustments {
                kind: kind.kind,
                share,
                ceiling_basis,
                ..Adjustments::default()
            };
            let e = adj.evaluate(&p).map_err(scenario_failure)?;
            out.write_all(render_report(&e, format).as_bytes())
                .map_err(write_err)?;
        }
        Command::Gate {
            input,
            value_target,
            cost_budget,
            min_margin,
            dev_cost,
            annual_cost,
            amortization,
            kind,
        } => {
            let p = load(&input)?;
            let targets = FunnelTargets::new(
                money(&p, value_target, "value-target")?,
                money(&p, cost_budget, "cost-budget")?,
                money(&p, min_margin, "min-margin")?,
            )
            .map_err(|e| Failure::usage(e.to_string()))?;
            let cost_model = if dev_cost.is_some() || annual_cost.is_some() || amortization.is_some() {
                let base = p.cost_model().copied();
                Some(RawCostModel {
                    development: AmountText(
                        dev_cost.unwrap_or_else(|| base.map_or(Decimal::ZERO, |c| c.development.amount())),
                    ),
                    annual_operation: AmountText(
                        annual_cost
                            .unwrap_or_else(|| base.map_or(Decimal::ZERO, |c| c.annual_operation.amount())),
                    ),
                    amortization_years: amortization
                        .unwrap_or_else(|| base.map_or(1, |c| i64::from(c.amortization_years))),
                    currency: None,
                })
            } else {
                None
            };
            let adj = Adjustments {
                kind: kind.kind,
                cost_model,
                ..Adjustments::default()
            };
            let outcome = adj.gate(&p, &targets).map_err(scenario_failure)?;
            let v = &outcome.verdict;
            writeln!(out, "{} -> {}", v.class, v.action).map_err(write_err)?;
            writeln!(out, "{}", v.rationale).map_err(write_err)?;
            return Ok(exit_for(v.action));
        }
        Command::Sweep {
            input,
            path,
            from,
            to,
            steps,
            kind,
        } => {
            let p = only_kind(load(&input)?, &kind);
            let curve = sweep(&p, &path, from, to, steps)
                .map_err(|e| Failure::usage(format!("{}: {e}", e.code())))?;
            writeln!(out, "value,v_economic").map_err(write_err)?;
            for point in &curve.points {
                writeln!(out, "{},{}", canonical_text(point.value), point.v_economic)
                    .map_err(write_err)?;
            }
        }
        Command::Breakeven { input, cost, kind } => {
            let p = only_kind(load(&input)?, &kind);
            let cost = money(&p, cost, "cost")?;
            let outcome = breakeven_scale(&p, cost)
                .map_err(|e| Failure::usage(format!("{}: {e}", e.code())))?;
            match outcome {
                BreakevenOutcome::Reached { lambda, .. } => {
                    writeln!(out, "{}", canonical_text(lambda)).map_err(write_err)?;
                }
                BreakevenOutcome::Unreachable { max_value, .. } => {
                    writeln!(out, "unreachable (maximum value {max_value})").map_err(write_err)?;
                }
            }
        }
        Command::Tornado { input, rel, kind } => {
            let p = only_kind(load(&input)?, &kind);
            let entries =
                tornado(&p, rel).map_err(|e| Failure::usage(format!("{}: {e}", e.code())))?;
            writeln!(out, "path,base,low,high,delta_low,delta_high").map_err(write_err)?;
            for t in &entries {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    t.path,
                    canonical_text(t.base),
                    canonical_text(t.low),
                    canonical_text(t.high),
                    t.delta_low,
                    t.delta_high
                )
                .map_err(write_err)?;
            }
        }
        Command::Serve { port, data_dir } => return serve(port, data_dir, out),
        Command::Demo => out.write_all(demo::DEMO_JSON.as_bytes()).map_err(write_err)?,
    }
    Ok(0)
}

fn serve(port: u16, data_dir: PathBuf, out: &mut impl Write) -> Result<u8, Failure> {
    let archive = ScenarioArchive::open(&data_dir)
        .map_err(|e| Failure::usage(format!("data dir {}: {e}", data_dir.display())))?;
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| Failure::usage(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async {
        let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
        let listener = painworth_api::bind(addr)
            .await
            .map_err(|e| Failure::usage(format!("cannot bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| Failure::usage(e.to_string()))?;
        writeln!(out, "listening on http://{local}").map_err(|e| Failure::usage(e.to_string()))?;
        out.flush().map_err(|e| Failure::usage(e.to_string()))?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        painworth_api::serve(listener, archive, shutdown)
            .await
            .map_err(|e| Failure::usage(format!("server error: {e}")))?;
        Ok(0)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            drop(out);
            for line in &failure.lines {
                eprintln!("painworth: {line}");
            }
            ExitCode::from(failure.code)
        }
    }
}
