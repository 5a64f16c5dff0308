//! `sekit`: batch front end for the shift equivalence toolkit.
//!
//! Exit codes: 0 accepted/consistent/found, 1 rejected/obstructed/not found,
//! 2 usage or I/O error, 3 search budget or bounds exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sekit_core::{
    chain_to_se, compare_reports, compose_esse_via_invertible, compose_se, dilation_invariants,
    parse_certificate, parse_matrix, render_report, report_differences, search_esse, search_se,
    search_sme, sme_to_esse, write_certificate, Certificate, CorrMatrix, EquivError, Kind,
    SeWitness, SearchBounds, Verdict, WitnessPayload, DEFAULT_BUDGET,
};

#[derive(Debug, Parser)]
#[command(
    name = "sekit",
    version,
    about = "Verify, search and compose shift equivalence witnesses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Re-verify a certificate from scratch.
    Check {
        #[arg(long, value_enum)]
        kind: CertKind,
        #[arg(long)]
        cert: PathBuf,
        /// Matrix file the certificate's left side must equal.
        #[arg(long)]
        left: Option<PathBuf>,
        /// Matrix file the certificate's right side must equal.
        #[arg(long)]
        right: Option<PathBuf>,
    },
    /// Exhaustively search for a witness within bounds.
    Search {
        #[arg(long, value_enum)]
        kind: SearchKind,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_inner_dim: usize,
        #[arg(long, default_value_t = 3)]
        max_entry: u64,
        #[arg(long, default_value_t = 6)]
        max_lag: u32,
        /// Number of candidate entries tried before giving up.
        #[arg(long, env = "SEKIT_BUDGET", default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Certificate destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a conjugacy or chain certificate into an elementary or shift equivalence one.
    Convert {
        #[arg(long, value_enum)]
        from: ConvertFrom,
        #[arg(long, value_enum)]
        to: ConvertTo,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compose two certificates `E ~ F` and `F ~ G` into one for `E ~ G`.
    Compose {
        #[arg(long, value_enum)]
        kind: ComposeKind,
        #[arg(long)]
        cert1: PathBuf,
        #[arg(long)]
        cert2: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the invariant report of each matrix file.
    Invariants {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Compare the invariants of two matrices.
    CompareDilations {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CertKind {
    Esse,
    SseChain,
    Se,
    Sme,
}

impl From<CertKind> for Kind {
    fn from(k: CertKind) -> Kind {
        match k {
            CertKind::Esse => Kind::Esse,
            CertKind::SseChain => Kind::SseChain,
            CertKind::Se => Kind::Se,
            CertKind::Sme => Kind::Sme,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SearchKind {
    Esse,
    Se,
    Sme,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConvertFrom {
    Sme,
    Chain,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConvertTo {
    Esse,
    Se,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ComposeKind {
    Esse,
    Se,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Positive,
    Negative,
}

/// Budget and bounds failures get their own code; everything else is usage or I/O.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<EquivError>() {
        Some(EquivError::BoundsTooLarge(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Status::Positive) => ExitCode::SUCCESS,
        Ok(Status::Negative) => ExitCode::from(1),
        Err(err) => {
            eprintln!("sekit: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(command: Command) -> Result<Status> {
    match command {
        Command::Check {
            kind,
            cert,
            left,
            right,
        } => check(kind.into(), &cert, left.as_deref(), right.as_deref()),
        Command::Search {
            kind,
            left,
            right,
            max_inner_dim,
            max_entry,
            max_lag,
            budget,
            out,
        } => {
            let bounds = SearchBounds {
                max_inner_dim,
                max_entry,
                max_lag,
                budget,
            };
            search(
                kind,
                &read_matrix(&left)?,
                &read_matrix(&right)?,
                &bounds,
                out.as_deref(),
            )
        }
        Command::Convert {
            from,
            to,
            cert,
            out,
        } => convert(from, to, &read_certificate(&cert)?, &out),
        Command::Compose {
            kind,
            cert1,
            cert2,
            out,
        } => compose(
            kind,
            &read_certificate(&cert1)?,
            &read_certificate(&cert2)?,
            &out,
        ),
        Command::Invariants { files } => invariants(&files),
        Command::CompareDilations { left, right } => {
            compare(&read_matrix(&left)?, &read_matrix(&right)?)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_matrix(path: &Path) -> Result<CorrMatrix> {
    let text = read_text(path)?;
    parse_matrix(&text).with_context(|| format!("{}", path.display()))
}

fn read_certificate(path: &Path) -> Result<Certificate> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_certificate(&bytes).with_context(|| format!("{}", path.display()))
}

/// Stamps, re-verifies and writes a freshly built certificate.
fn emit(cert: Certificate, out: Option<&Path>) -> Result<()> {
    let (cert, verdict) = cert.stamped()?;
    if let Verdict::Reject(r) = verdict {
        bail!("internal error: constructed certificate does not verify: {r}");
    }
    let text = write_certificate(&cert);
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn describe(payload: &WitnessPayload) -> String {
    match payload {
        WitnessPayload::Se(w) => format!("se witness with lag {}", w.lag),
        WitnessPayload::SseChain(c) => format!("sse-chain witness with {} links", c.len()),
        other => format!("{} witness", other.kind()),
    }
}

fn check(kind: Kind, path: &Path, left: Option<&Path>, right: Option<&Path>) -> Result<Status> {
    let cert = read_certificate(path)?;
    if cert.kind() != kind {
        return Err(anyhow!(
            "{}: certificate kind is {}, expected {kind}",
            path.display(),
            cert.kind()
        ));
    }
    for (side, file, expected) in [("left", left, cert.left()), ("right", right, cert.right())] {
        if let Some(file) = file {
            if &read_matrix(file)? != expected {
                return Err(anyhow!(
                    "{} does not match the certificate's {side} matrix",
                    file.display()
                ));
            }
        }
    }
    if let Some(cached) = cert.cached_verdict() {
        eprintln!(
            "note: ignoring cached verdict (accepted = {}, toolkit {})",
            cached.accepted, cached.toolkit_version
        );
    }
    match cert.verify() {
        Ok(Verdict::Accept) => {
            println!("accepted: {}", describe(cert.witness()));
            Ok(Status::Positive)
        }
        Ok(Verdict::Reject(r)) => {
            println!("rejected: {r}");
            Ok(Status::Negative)
        }
        // Witness matrices of the wrong shape or labels cannot prove anything.
        Err(err) => {
            println!("rejected: {err}");
            Ok(Status::Negative)
        }
    }
}

fn search(
    kind: SearchKind,
    e: &CorrMatrix,
    f: &CorrMatrix,
    bounds: &SearchBounds,
    out: Option<&Path>,
) -> Result<Status> {
    let payload = match kind {
        SearchKind::Esse => search_esse(e, f, bounds)?.map(WitnessPayload::Esse),
        SearchKind::Se => search_se(e, f, bounds)?.map(WitnessPayload::Se),
        SearchKind::Sme => search_sme(e, f)?.map(WitnessPayload::Sme),
    };
    let Some(payload) = payload else {
        println!("not found within bounds");
        return Ok(Status::Negative);
    };
    let what = describe(&payload);
    emit(Certificate::new(e.clone(), f.clone(), payload)?, out)?;
    match out {
        Some(path) => println!("found: {what} written to {}", path.display()),
        None => eprintln!("found: {what}"),
    }
    Ok(Status::Positive)
}

/// Input witnesses that fail verification are a negative result, not a usage error.
fn negative_on_invalid<T>(result: Result<T, EquivError>) -> Result<Result<T, Status>> {
    match result {
        Ok(v) => Ok(Ok(v)),
        Err(err @ (EquivError::InvalidWitness(_) | EquivError::NotApplicable)) => {
            println!("rejected: {err}");
            Ok(Err(Status::Negative))
        }
        Err(err) => Err(err.into()),
    }
}

fn convert(from: ConvertFrom, to: ConvertTo, cert: &Certificate, out: &Path) -> Result<Status> {
    let (e, f) = (cert.left(), cert.right());
    let payload = match (from, cert.witness()) {
        (ConvertFrom::Sme, WitnessPayload::Sme(w)) => {
            let esse = match negative_on_invalid(sme_to_esse(e, f, w))? {
                Ok(esse) => esse,
                Err(status) => return Ok(status),
            };
            match to {
                ConvertTo::Esse => WitnessPayload::Esse(esse),
                ConvertTo::Se => WitnessPayload::Se(esse.into()),
            }
        }
        (ConvertFrom::Chain, WitnessPayload::SseChain(chain)) => match to {
            ConvertTo::Se => match negative_on_invalid(chain_to_se(chain))? {
                Ok(se) => WitnessPayload::Se(se),
                Err(status) => return Ok(status),
            },
            ConvertTo::Esse if chain.len() == 1 => WitnessPayload::Esse(chain.links()[0].clone()),
            ConvertTo::Esse => {
                return Err(anyhow!(
                    "a chain of {} links converts only to se",
                    chain.len()
                ))
            }
        },
        (_, other) => {
            let expected = match from {
                ConvertFrom::Sme => Kind::Sme,
                ConvertFrom::Chain => Kind::SseChain,
            };
            return Err(anyhow!(
                "expected a {expected} certificate, got {}",
                other.kind()
            ));
        }
    };
    let what = describe(&payload);
    emit(Certificate::new(e.clone(), f.clone(), payload)?, Some(out))?;
    println!("converted: {what} written to {}", out.display());
    Ok(Status::Positive)
}

fn as_se(cert: &Certificate) -> Result<SeWitness> {
    match cert.witness() {
        WitnessPayload::Se(w) => Ok(w.clone()),
        WitnessPayload::Esse(w) => Ok(w.clone().into()),
        other => Err(anyhow!(
            "se composition needs se or esse certificates, got {}",
            other.kind()
        )),
    }
}

fn compose(
    kind: ComposeKind,
    first: &Certificate,
    second: &Certificate,
    out: &Path,
) -> Result<Status> {
    if first.right() != second.left() {
        return Err(anyhow!(
            "the first certificate's right matrix differs from the second's left matrix",
        ));
    }
    let (e, f, g) = (first.left(), first.right(), second.right());
    let payload = match kind {
        ComposeKind::Esse => {
            let (WitnessPayload::Esse(w1), WitnessPayload::Esse(w2)) =
                (first.witness(), second.witness())
            else {
                return Err(anyhow!(
                    "esse composition needs two esse certificates, got {} and {}",
                    first.kind(),
                    second.kind()
                ));
            };
            match negative_on_invalid(compose_esse_via_invertible(e, f, g, w1, w2))? {
                Ok(w) => WitnessPayload::Esse(w),
                Err(status) => return Ok(status),
            }
        }
        ComposeKind::Se => {
            let (w1, w2) = (as_se(first)?, as_se(second)?);
            match negative_on_invalid(compose_se(e, f, g, &w1, &w2))? {
                Ok(w) => WitnessPayload::Se(w),
                Err(status) => return Ok(status),
            }
        }
    };
    let what = describe(&payload);
    emit(Certificate::new(e.clone(), g.clone(), payload)?, Some(out))?;
    println!("composed: {what} written to {}", out.display());
    Ok(Status::Positive)
}

fn invariants(files: &[PathBuf]) -> Result<Status> {
    for (i, path) in files.iter().enumerate() {
        let report = dilation_invariants(&read_matrix(path)?)
            .with_context(|| format!("{}", path.display()))?;
        if files.len() > 1 {
            if i > 0 {
                println!();
            }
            println!("# {}", path.display());
        }
        print!("{}", render_report(&report));
    }
    Ok(Status::Positive)
}

fn compare(e: &CorrMatrix, f: &CorrMatrix) -> Result<Status> {
    let left = dilation_invariants(e).context("left matrix")?;
    let right = dilation_invariants(f).context("right matrix")?;
    if compare_reports(&left, &right).is_consistent() {
        println!("consistent");
        return Ok(Status::Positive);
    }
    let differences = report_differences(&left, &right);
    let names: Vec<&str> = differences.iter().map(|o| o.invariant.name()).collect();
    println!("obstructed: {}", names.join("/"));
    for o in &differences {
        println!("  {o}");
    }
    Ok(Status::Negative)
}
