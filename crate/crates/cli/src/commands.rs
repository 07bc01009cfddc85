use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use extremal_core::certifier::{rank_bound, validate_membership};
use extremal_core::numcore::{DimensionPair, HermitianMatrix, C64};
use extremal_core::qubit::is_max_entangled;
use extremal_core::sampler::{extremize, InteriorSampler, SamplerError};
use extremal_core::{check_extremal, CoupledState, ExtremalityVerdict, MarginalPair, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{verify_certificate, CertificateFile};
use crate::files::{read_json, to_json, write_json, MarginalsFile, StateFile, SCHEMA};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "extremal",
    version,
    about = "Certify extreme points of bipartite states with fixed marginals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide extremality of each input state and emit certificates.
    Check(CheckArgs),
    /// Write random interior members of C(ρ₁, ρ₂).
    Sample(SampleArgs),
    /// Walk a member down to an extreme point.
    Extremize(ExtremizeArgs),
    /// Print the two-qubit story end to end.
    Demo,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Rank tolerance; membership checks use ten times this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Target marginals, overriding any embedded in the inputs.
    #[arg(long)]
    pub marginals: Option<PathBuf>,
    /// Exit 1 unless every verdict is "extremal".
    #[arg(long)]
    pub assert_extremal: bool,
    /// Certificate file for one input, or a directory for several.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Re-verify this certificate against the (single) input instead.
    #[arg(long)]
    pub verify_certificate: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub d1: Option<usize>,
    #[arg(long)]
    pub d2: Option<usize>,
    /// A marginals file, or "maximally-mixed".
    #[arg(long, default_value = "maximally-mixed")]
    pub marginals: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtremizeArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub marginals: Option<PathBuf>,
}

/// Output of `extremize`: the walk, the extreme point reached and its
/// certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremizeReport {
    pub schema: String,
    pub start_rank: usize,
    pub steps: Vec<StepJson>,
    pub final_state: StateFile,
    pub certificate: CertificateFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepJson {
    pub rank_before: usize,
    pub t_star: f64,
    pub rank_after: usize,
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances, CliError> {
    match tol {
        None => Ok(Tolerances::default()),
        Some(t) if t > 0.0 && t < 1.0 => Ok(Tolerances::from_rank(t)),
        Some(t) => Err(CliError::Input(format!("--tol must lie in (0, 1), got {t}"))),
    }
}

/// `--marginals` first, then marginals embedded in the file, then the
/// partial traces of the state itself.
fn resolve_marginals(
    file: &StateFile,
    state: &CoupledState,
    override_path: Option<&Path>,
    tol: &Tolerances,
) -> Result<MarginalPair, CliError> {
    let m = match override_path {
        Some(p) => read_json::<MarginalsFile>(p)?.marginals(tol.membership)?,
        None => match file.marginals(tol.membership)? {
            Some(m) => m,
            None => MarginalPair::of_state(state),
        },
    };
    if m.dims() != state.dims() {
        return Err(CliError::Input(format!(
            "marginals have dimensions ({}, {}), state has ({}, {})",
            m.dims().d1(),
            m.dims().d2(),
            state.dims().d1(),
            state.dims().d2()
        )));
    }
    Ok(m)
}

pub fn certify_file(path: &Path, marginals: Option<&Path>, tol: &Tolerances) -> Result<CertificateFile, CliError> {
    let file: StateFile = read_json(path)?;
    let state = file.state()?;
    let m = resolve_marginals(&file, &state, marginals, tol)?;
    let verdict = check_extremal(&state, &m, tol).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(CertificateFile::new(&verdict, state.dims(), &m, tol))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Check(args) => cmd_check(args, out),
        Command::Sample(args) => cmd_sample(args, out),
        Command::Extremize(args) => cmd_extremize(args, out),
        Command::Demo => cmd_demo(out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Output(e.to_string()))
}

fn summary(cert: &CertificateFile) -> String {
    match (cert.rank, cert.dim_d, cert.k_squared) {
        (Some(k), Some(d), Some(k2)) => format!("{} (rank {k}, dim D {d} of {k2})", cert.verdict),
        _ => match &cert.violation {
            Some(v) => format!("{} ({})", cert.verdict, v.description),
            None => cert.verdict.clone(),
        },
    }
}

fn cmd_check(args: CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let tol = tolerances(args.tol)?;

    if let Some(cert_path) = &args.verify_certificate {
        let [input] = args.inputs.as_slice() else {
            return Err(CliError::Input("--verify-certificate takes exactly one input".into()));
        };
        let cert: CertificateFile = read_json(cert_path)?;
        let state = read_json::<StateFile>(input)?.state()?;
        verify_certificate(&cert, &state)?;
        return emit(
            out,
            &format!("{}: certificate verified ({})\n", input.display(), summary(&cert)),
        );
    }

    let certify_all = || -> Vec<Result<CertificateFile, CliError>> {
        args.inputs
            .par_iter()
            .map(|p| certify_file(p, args.marginals.as_deref(), &tol))
            .collect()
    };
    let results = match args.jobs {
        Some(0) => return Err(CliError::Input("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Input(e.to_string()))?
            .install(certify_all),
        None => certify_all(),
    };
    let certs: Vec<CertificateFile> = results.into_iter().collect::<Result<_, _>>()?;

    match &args.output {
        None if certs.len() == 1 => emit(out, &to_json(&certs[0]))?,
        None => emit(out, &to_json(&certs))?,
        Some(path) if certs.len() == 1 => {
            write_json(path, &certs[0])?;
            emit(out, &format!("{}: {}\n", args.inputs[0].display(), summary(&certs[0])))?;
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
            for (input, cert) in args.inputs.iter().zip(&certs) {
                let stem = input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                write_json(&dir.join(format!("{stem}.cert.json")), cert)?;
                emit(out, &format!("{}: {}\n", input.display(), summary(cert)))?;
            }
        }
    }

    if args.assert_extremal {
        let failed: Vec<String> = args
            .inputs
            .iter()
            .zip(&certs)
            .filter(|(_, c)| c.verdict != "extremal")
            .map(|(p, c)| format!("{} is {}", p.display(), c.verdict))
            .collect();
        if !failed.is_empty() {
            return Err(CliError::Assertion(failed.join("; ")));
        }
    }
    Ok(())
}

fn cmd_sample(args: SampleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let tol = tolerances(args.tol)?;
    let marginals = if args.marginals == "maximally-mixed" {
        let (Some(d1), Some(d2)) = (args.d1, args.d2) else {
            return Err(CliError::Input("maximally mixed marginals need --d1 and --d2".into()));
        };
        let dims = DimensionPair::new(d1, d2).map_err(|e| CliError::Input(e.to_string()))?;
        MarginalPair::maximally_mixed(dims)
    } else {
        let m = read_json::<MarginalsFile>(Path::new(&args.marginals))?.marginals(tol.membership)?;
        for (flag, given, actual) in [("--d1", args.d1, m.dims().d1()), ("--d2", args.d2, m.dims().d2())] {
            if given.is_some_and(|g| g != actual) {
                return Err(CliError::Input(format!(
                    "{flag} disagrees with the marginals file ({actual})"
                )));
            }
        }
        m
    };
    if !(0.0..1.0).contains(&args.spread) {
        return Err(CliError::Input(format!(
            "--spread must lie in [0, 1), got {}",
            args.spread
        )));
    }
    let sampler = InteriorSampler::new(marginals.clone()).map_err(|e| CliError::Input(e.to_string()))?;
    if args.count == 0 {
        return Ok(());
    }
    fs::create_dir_all(&args.output).map_err(|e| CliError::Output(format!("{}: {e}", args.output.display())))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for i in 0..args.count {
        let state = sampler
            .sample(&mut rng, args.spread)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let path = args.output.join(format!("sample_{i:04}.json"));
        write_json(&path, &StateFile::new(&state, Some(&marginals)))?;
        emit(out, &format!("{}\n", path.display()))?;
    }
    Ok(())
}

pub fn extremize_file(
    path: &Path,
    marginals: Option<&Path>,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExtremizeReport, CliError> {
    let file: StateFile = read_json(path)?;
    let state = file.state()?;
    let m = resolve_marginals(&file, &state, marginals, tol)?;
    if let Err(v) = validate_membership(&state, &m, tol.membership) {
        return Err(CliError::Membership(format!("{}: {v}", path.display())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = extremize(&state, &m, &mut rng, tol).map_err(|e| match e {
        SamplerError::NotInC(v) => CliError::Membership(v.to_string()),
        other => CliError::Assertion(format!("walk did not reach an extreme point: {other}")),
    })?;
    let verdict = check_extremal(&trace.final_state, &m, tol).map_err(|e| CliError::Assertion(e.to_string()))?;
    if !verdict.is_extremal() {
        return Err(CliError::Assertion(format!("final state is {}", verdict.tag())));
    }
    Ok(ExtremizeReport {
        schema: SCHEMA.to_string(),
        start_rank: trace.start_rank,
        steps: trace
            .steps
            .iter()
            .map(|s| StepJson {
                rank_before: s.rank_before,
                t_star: s.t_star,
                rank_after: s.rank_after,
            })
            .collect(),
        final_state: StateFile::new(&trace.final_state, Some(&m)),
        certificate: CertificateFile::new(&verdict, trace.final_state.dims(), &m, tol),
    })
}

fn cmd_extremize(args: ExtremizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let tol = tolerances(args.tol)?;
    let report = extremize_file(&args.input, args.marginals.as_deref(), args.seed, &tol)?;
    match &args.output {
        Some(path) => {
            write_json(path, &report)?;
            let ranks: Vec<String> = std::iter::once(report.start_rank)
                .chain(report.steps.iter().map(|s| s.rank_after))
                .map(|r| r.to_string())
                .collect();
            emit(
                out,
                &format!("{}: ranks {}\n", args.input.display(), ranks.join(" -> ")),
            )
        }
        None => emit(out, &to_json(&report)),
    }
}

fn bell_pair(plus: bool) -> CoupledState {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    let amps = if plus { [h, z, z, h] } else { [z, h, h, z] };
    CoupledState::from_hermitian(
        DimensionPair::new(2, 2).expect("2x2"),
        HermitianMatrix::projector(&amps),
    )
    .expect("4x4")
}

fn cmd_demo(out: &mut dyn Write) -> Result<(), CliError> {
    let tol = Tolerances::default();
    let qubits = DimensionPair::new(2, 2).expect("2x2");
    let half = MarginalPair::maximally_mixed(qubits);
    let mut text = String::new();
    let expect = |ok: bool, what: &str| -> Result<(), CliError> {
        if ok {
            Ok(())
        } else {
            Err(CliError::Assertion(format!("demo: {what}")))
        }
    };
    let err = |e: extremal_core::certifier::CertifyError| CliError::Assertion(e.to_string());

    text.push_str("Two qubits with both marginals I/2.\n\n");
    let bell = bell_pair(true);
    let v = check_extremal(&bell, &half, &tol).map_err(err)?;
    let r = v.report().expect("member");
    text.push_str(&format!(
        "|Φ+⟩⟨Φ+|: {} (rank {}, dim D {} of {})\n",
        v.tag(),
        r.k,
        r.dim_d,
        r.k_squared
    ));
    expect(v.is_extremal(), "Bell state should be extremal")?;

    let mixture = CoupledState::new(qubits, (bell.matrix() + bell_pair(false).matrix()).scale(0.5)).expect("4x4");
    let v = check_extremal(&mixture, &half, &tol).map_err(err)?;
    text.push_str(&format!("½(|Φ+⟩⟨Φ+| + |Ψ+⟩⟨Ψ+|): {}", v.tag()));
    match &v {
        ExtremalityVerdict::NotExtremal { witness, report } => {
            let ok = witness.verify(&mixture, &half, tol.membership).is_ok();
            text.push_str(&format!(
                " (rank {}, dim D {} of {}), witness ε = {:.3e}, {}\n",
                report.k,
                report.dim_d,
                report.k_squared,
                witness.epsilon,
                if ok { "verified" } else { "INVALID" }
            ));
            expect(ok, "witness should verify")?;
        }
        _ => expect(false, "rank-2 mixture should not be extremal")?,
    }

    let start = CoupledState::from_hermitian(qubits, HermitianMatrix::identity(4).scale(0.25)).expect("4x4");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trace = extremize(&start, &half, &mut rng, &tol).map_err(|e| CliError::Assertion(e.to_string()))?;
    let ranks: Vec<String> = std::iter::once(trace.start_rank)
        .chain(trace.steps.iter().map(|s| s.rank_after))
        .map(|r| r.to_string())
        .collect();
    let last = &trace.final_state;
    text.push_str(&format!(
        "walk from I/4: ranks {}, purity {:.12}, maximally entangled: {}\n",
        ranks.join(" -> "),
        last.purity(),
        is_max_entangled(last, tol.membership)
    ));
    expect(
        is_max_entangled(last, tol.membership),
        "walk should end maximally entangled",
    )?;

    text.push_str("\nLargest rank of an extreme point:\n");
    for (d1, d2) in [(2, 2), (2, 3), (3, 3), (3, 4), (4, 4)] {
        let dims = DimensionPair::new(d1, d2).expect("nonzero");
        text.push_str(&format!("  ({d1}, {d2}): {}\n", rank_bound(dims)));
    }
    emit(out, &text)
}
