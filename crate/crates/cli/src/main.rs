mod seqfile;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eipack::bounds::{
    classify_spark_vs_welch, counting_bounds, figure1_data, figure_csv, nonexistence_table, published_table,
    radon_hurwitz, table_csv, with_naimark_complements, ParamTriple, TableRow,
};
use eipack::corner::{certify_dim_kn_eq_n, corner_space, k_prefix, KPrefix};
use eipack::fusion::{certify, direct_sum, hoggar_c_to_r, naimark_complement, trivial_eitff, FrameCertificate};
use eipack::rho::{
    build_rho_complex, build_rho_real, counterexample_not_power_of_two, eitff_from_simplex, random_simplex,
    simplex_from_basis, RhoSequence,
};
use eipack::subspaces::{construct_ei3, AnySequence, SubspaceSequence};
use eipack::{Error, Field, Scalar, Tolerances};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use seqfile::SequenceFile;

/// Last row of the printed nonexistence table; beyond it the enumeration is complete.
const PUBLISHED_D_MAX: usize = 29;

#[derive(Parser)]
#[command(name = "eipack", version, about = "Equi-isoclinic subspace packings and tight fusion frames")]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TolArgs {
    /// Relative singular-value threshold for numerical rank.
    #[arg(long = "tol-rank", global = true, default_value_t = Tolerances::default().rank_rel)]
    rank: f64,
    /// Absolute residual tolerance for isometry, tightness and isoclinism checks.
    #[arg(long = "tol-res", global = true, default_value_t = Tolerances::default().residual_abs)]
    res: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    #[value(name = "R")]
    R,
    #[value(name = "C")]
    C,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Field {
        match f {
            FieldArg::R => Field::Real,
            FieldArg::C => Field::Complex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ei3,
    Trivial,
    Eitff2r,
    Hoggar,
    Naimark,
    Dsum,
    Counterexample,
}

#[derive(Subcommand)]
enum Command {
    /// Welch and spark bounds, their exact comparison, counting bounds and Radon-Hurwitz numbers.
    Bounds {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, ignore_case = true, default_value = "R")]
        field: FieldArg,
    },
    /// Parameters excluded by the spark bound in cases IV and V.
    ///
    /// Triples are enumerated for r <= d/2 and n <= floor(d/r) + 6, which covers
    /// every case. Up to d = 29 the output is the published table; the complete
    /// enumeration adds three more rows at d = 29 (use --complete).
    Table {
        #[arg(long, default_value_t = 29)]
        dmax: usize,
        /// Also list the Naimark complement (rn-d, r, n) of each row.
        #[arg(long)]
        naimark: bool,
        /// Emit every excluded triple, including those the published table omits.
        #[arg(long)]
        complete: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a sequence, write it with --out and print its certificate.
    Construct {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, ignore_case = true, default_value = "R")]
        field: FieldArg,
        #[arg(long)]
        alpha: Option<f64>,
        /// Simplex orientation for eitff2r; 0 selects the canonical simplex.
        #[arg(long, env = "EIPACK_SEED", default_value_t = 0)]
        seed: u64,
        /// Input sequence files (hoggar and naimark take one, dsum two).
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a sequence file; exits 1 when an --expect predicate fails.
    Verify {
        file: PathBuf,
        /// Compute dim K_1 .. dim K_j (defaults to n).
        #[arg(long = "corner-max")]
        corner_max: Option<usize>,
        /// Compute dim K_J for a comma-separated list of 1-based indices.
        #[arg(long = "J", value_delimiter = ',')]
        j: Option<Vec<usize>>,
        #[arg(long = "expect-eitff")]
        expect_eitff: bool,
        #[arg(long = "expect-dim-kn-eq-n")]
        expect_dim_kn_eq_n: bool,
    },
    /// Basis of a corner matrix space K_J in Hermitian coordinates.
    Corner {
        file: PathBuf,
        /// Comma-separated 1-based indices (defaults to all).
        #[arg(long = "J", value_delimiter = ',')]
        j: Option<Vec<usize>>,
        #[arg(long = "corner-max")]
        corner_max: Option<usize>,
    },
    /// Curves and markers for the spark-versus-Welch plot, as CSV.
    Plotdata {
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// How a command failed, mapped to the exit code.
enum Failure {
    Input(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(describe(&e))
    }
}

type Outcome = Result<(), Failure>;

fn describe(e: &Error) -> String {
    let debug = format!("{e:?}");
    let name = debug.split(['(', ' ', '{']).next().unwrap_or_default().to_string();
    format!("{name}: {e}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = Tolerances {
        rank_rel: cli.tol.rank,
        residual_abs: cli.tol.res,
    };
    match run(cli.command, &tol) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, tol: &Tolerances) -> Outcome {
    match command {
        Command::Bounds { d, r, n, field } => cmd_bounds(d, r, n, field.into(), tol),
        Command::Table {
            dmax,
            naimark,
            complete,
            out,
        } => cmd_table(dmax, naimark, complete, out.as_deref()),
        Command::Construct {
            kind,
            d,
            r,
            n,
            field,
            alpha,
            seed,
            inputs,
            out,
        } => {
            let params = ConstructParams {
                d,
                r,
                n,
                field: field.into(),
                alpha,
                seed,
                inputs,
            };
            cmd_construct(kind, &params, out.as_deref(), tol)
        }
        Command::Verify {
            file,
            corner_max,
            j,
            expect_eitff,
            expect_dim_kn_eq_n,
        } => {
            let expect = Expectations {
                eitff: expect_eitff,
                dim_kn_eq_n: expect_dim_kn_eq_n,
            };
            cmd_verify(&file, corner_max, j.as_deref(), expect, tol)
        }
        Command::Corner { file, j, corner_max } => cmd_corner(&file, j.as_deref(), corner_max, tol),
        Command::Plotdata { nmax, grid, out } => {
            let data = figure1_data(nmax, grid)?;
            emit(&figure_csv(&data), out.as_deref())
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            // a closed pipe (e.g. `| head`) is not an error
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn print_json(v: &Value) {
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("reports serialize"));
}

fn to_value<S: serde::Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("reports serialize")
}

fn cmd_bounds(d: usize, r: usize, n: usize, field: Field, tol: &Tolerances) -> Outcome {
    let report = classify_spark_vs_welch(ParamTriple::new(d, r, n)?)?;
    let counting = counting_bounds(d, r, field)?;
    print_json(&json!({
        "command": "bounds",
        "tolerances": tol,
        "field": field,
        "bounds": report,
        "counting": counting,
        "radon_hurwitz": {
            "R": radon_hurwitz(r, Field::Real)?,
            "C": radon_hurwitz(r, Field::Complex)?,
        },
    }));
    Ok(())
}

fn table_rows(dmax: usize, complete: bool) -> Result<Vec<TableRow>, Error> {
    let all = nonexistence_table(dmax)?;
    if complete {
        return Ok(all);
    }
    let printed = published_table();
    Ok(all
        .into_iter()
        .filter(|row| row.triple.d > PUBLISHED_D_MAX || printed.contains(row))
        .collect())
}

fn cmd_table(dmax: usize, naimark: bool, complete: bool, out: Option<&Path>) -> Outcome {
    let mut rows = table_rows(dmax, complete)?;
    if naimark {
        rows = with_naimark_complements(&rows);
    }
    emit(&table_csv(&rows), out)
}

struct ConstructParams {
    d: Option<usize>,
    r: Option<usize>,
    n: Option<usize>,
    field: Field,
    alpha: Option<f64>,
    seed: u64,
    inputs: Vec<PathBuf>,
}

fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Input(format!("construct {kind} needs --{flag}")))
}

fn read_sequence(path: &Path, tol: &Tolerances) -> Result<AnySequence, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let file: SequenceFile =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("cannot parse {}: {e}", path.display())))?;
    Ok(file.to_sequence(tol)?)
}

fn simplex_eitff<T: Scalar>(basis: &RhoSequence<T>, seed: u64) -> Result<SubspaceSequence<T>, Error> {
    let m = basis.len() + 1;
    let b = if seed == 0 {
        simplex_from_basis(basis, m)?
    } else {
        random_simplex(basis, m, &mut ChaCha8Rng::seed_from_u64(seed))?
    };
    eitff_from_simplex(&b)
}

fn eitff2r(r: usize, field: Field, seed: u64) -> Result<AnySequence, Error> {
    Ok(match field {
        Field::Real => simplex_eitff(&build_rho_real(r)?, seed)?.into(),
        Field::Complex => simplex_eitff(&build_rho_complex(r)?, seed)?.into(),
    })
}

fn counterexample<T: Scalar>(r: usize) -> Result<SubspaceSequence<T>, Error> {
    let c = counterexample_not_power_of_two::<T>(r)?;
    eitff_from_simplex(&simplex_from_basis(&c.family, c.family.len() + 1)?)
}

/// Library errors during construction are verification-class failures (exit 1).
fn built<T>(r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Verification(describe(&e)))
}

fn build(kind: Kind, p: &ConstructParams, tol: &Tolerances) -> Result<(AnySequence, Value), Failure> {
    let mut params = serde_json::Map::new();
    let seq: AnySequence = match kind {
        Kind::Ei3 => {
            let (d, r, alpha) = (need(p.d, "d", "ei3")?, need(p.r, "r", "ei3")?, need(p.alpha, "alpha", "ei3")?);
            params.extend([("d".into(), json!(d)), ("r".into(), json!(r)), ("alpha".into(), json!(alpha))]);
            built(construct_ei3(d, r, alpha))?.into()
        }
        Kind::Trivial => {
            let (r, n) = (need(p.r, "r", "trivial")?, need(p.n, "n", "trivial")?);
            params.extend([("r".into(), json!(r)), ("n".into(), json!(n)), ("field".into(), json!(p.field))]);
            match p.field {
                Field::Real => built(trivial_eitff::<f64>(r, n))?.into(),
                Field::Complex => built(trivial_eitff::<Complex64>(r, n))?.into(),
            }
        }
        Kind::Eitff2r => {
            if p.n.is_some() || p.d.is_some() {
                return Err(Failure::Input(
                    "construct eitff2r takes only --r and --field; d = 2r and n = rho(r) + 2 are derived".into(),
                ));
            }
            let r = need(p.r, "r", "eitff2r")?;
            params.extend([("r".into(), json!(r)), ("field".into(), json!(p.field)), ("seed".into(), json!(p.seed))]);
            built(eitff2r(r, p.field, p.seed))?
        }
        Kind::Hoggar => {
            let source = match p.inputs.as_slice() {
                [path] => {
                    params.insert("input".into(), json!(path.display().to_string()));
                    read_sequence(path, tol)?
                }
                [] => {
                    let r = need(p.r, "r", "hoggar")?;
                    params.extend([("r".into(), json!(r)), ("seed".into(), json!(p.seed))]);
                    built(eitff2r(r, Field::Complex, p.seed))?
                }
                _ => return Err(Failure::Input("construct hoggar takes at most one --input".into())),
            };
            match source {
                AnySequence::Complex(s) => built(hoggar_c_to_r(&s, tol))?.into(),
                AnySequence::Real(_) => return Err(Failure::Input("hoggar needs a complex sequence".into())),
            }
        }
        Kind::Naimark => {
            let source = match p.inputs.as_slice() {
                [path] => {
                    params.insert("input".into(), json!(path.display().to_string()));
                    read_sequence(path, tol)?
                }
                [] => {
                    let r = need(p.r, "r", "naimark")?;
                    params.extend([("r".into(), json!(r)), ("field".into(), json!(p.field)), ("seed".into(), json!(p.seed))]);
                    built(eitff2r(r, p.field, p.seed))?
                }
                _ => return Err(Failure::Input("construct naimark takes at most one --input".into())),
            };
            match source {
                AnySequence::Real(s) => built(naimark_complement(&s, tol))?.into(),
                AnySequence::Complex(s) => built(naimark_complement(&s, tol))?.into(),
            }
        }
        Kind::Dsum => {
            let [a, b] = p.inputs.as_slice() else {
                return Err(Failure::Input("construct dsum needs exactly two --input files".into()));
            };
            params.insert("inputs".into(), json!([a.display().to_string(), b.display().to_string()]));
            match (read_sequence(a, tol)?, read_sequence(b, tol)?) {
                (AnySequence::Real(x), AnySequence::Real(y)) => built(direct_sum(&x, &y, tol))?.into(),
                (AnySequence::Complex(x), AnySequence::Complex(y)) => built(direct_sum(&x, &y, tol))?.into(),
                _ => return Err(Failure::Input("dsum inputs must share a field".into())),
            }
        }
        Kind::Counterexample => {
            let r = need(p.r, "r", "counterexample")?;
            params.extend([("r".into(), json!(r)), ("field".into(), json!(p.field))]);
            match p.field {
                Field::Real => built(counterexample::<f64>(r))?.into(),
                Field::Complex => built(counterexample::<Complex64>(r))?.into(),
            }
        }
    };
    let name = kind.to_possible_value().expect("no skipped variants").get_name().to_string();
    Ok((seq, json!({ "operation": name, "parameters": params })))
}

fn cmd_construct(kind: Kind, p: &ConstructParams, out: Option<&Path>, tol: &Tolerances) -> Outcome {
    let (seq, provenance) = build(kind, p, tol)?;
    if let Some(path) = out {
        let text = serde_json::to_string(&SequenceFile::from_any(&seq)).expect("sequence files serialize");
        emit(&text, Some(path))?;
    }
    let mut report = certificate_report(&seq, tol)?;
    report["command"] = json!("construct");
    report["provenance"] = provenance;
    if matches!(kind, Kind::Eitff2r | Kind::Counterexample) {
        report["dim_kn"] = match &seq {
            AnySequence::Real(s) => to_value(&certify_dim_kn_eq_n(s, tol)?),
            AnySequence::Complex(s) => to_value(&certify_dim_kn_eq_n(s, tol)?),
        };
    }
    print_json(&report);
    Ok(())
}

fn shape(seq: &AnySequence) -> Value {
    let (d, r, n) = seq.dims();
    json!({ "field": seq.field(), "d": d, "r": r, "n": n })
}

fn certificate_report(seq: &AnySequence, tol: &Tolerances) -> Result<Value, Failure> {
    let cert: FrameCertificate = match seq {
        AnySequence::Real(s) => certify(s, tol)?,
        AnySequence::Complex(s) => certify(s, tol)?,
    };
    Ok(json!({
        "tolerances": tol,
        "sequence": shape(seq),
        "certificate": cert,
    }))
}

fn zero_based(j: &[usize], n: usize) -> Result<Vec<usize>, Failure> {
    j.iter()
        .map(|&i| {
            if i == 0 || i > n {
                Err(Failure::Input(format!("index {i} outside 1..={n}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Expectations {
    eitff: bool,
    dim_kn_eq_n: bool,
}

fn prefix(seq: &AnySequence, m: usize, tol: &Tolerances) -> Result<KPrefix, Error> {
    match seq {
        AnySequence::Real(s) => k_prefix(s, m, tol),
        AnySequence::Complex(s) => k_prefix(s, m, tol),
    }
}

fn corner_dim(seq: &AnySequence, j: &[usize], tol: &Tolerances) -> Result<Value, Error> {
    Ok(match seq {
        AnySequence::Real(s) => to_value(&corner_space(s, j, tol)?),
        AnySequence::Complex(s) => to_value(&corner_space(s, j, tol)?),
    })
}

fn cmd_verify(
    file: &Path,
    corner_max: Option<usize>,
    j: Option<&[usize]>,
    expect: Expectations,
    tol: &Tolerances,
) -> Outcome {
    let seq = read_sequence(file, tol)?;
    let (_, _, n) = seq.dims();
    let mut report = certificate_report(&seq, tol)?;
    report["command"] = json!("verify");
    report["provenance"] = json!({ "operation": "verify", "parameters": { "file": file.display().to_string() } });
    let mut warnings: Vec<String> = Vec::new();
    let mut failures: Vec<String> = Vec::new();

    let is_eitff = report["certificate"]["is_eitff"].as_bool() == Some(true);
    if expect.eitff && !is_eitff {
        failures.push("is_eitff".into());
    }

    let alpha_below_one = report["certificate"]["alpha"].as_f64().is_some_and(|a| a < 1.0 - tol.residual_abs.sqrt());
    let m = corner_max.unwrap_or(n);
    if m > n || m == 0 {
        return Err(Failure::Input(format!("--corner-max must lie in 1..={n}")));
    }
    let mut dim_kn = None;
    match prefix(&seq, m, tol) {
        Ok(p) => {
            warnings.extend(p.violations.iter().cloned());
            if m == n {
                dim_kn = p.dims.last().copied();
            }
            report["corner"] = to_value(&p);
        }
        Err(e) => warnings.push(format!("corner dimensions unavailable: {}", describe(&e))),
    }
    if !alpha_below_one {
        warnings.push("sequence is not equi-isoclinic with alpha < 1; corner formulas do not apply".into());
    }
    if expect.dim_kn_eq_n {
        if corner_max.is_some_and(|m| m < n) {
            return Err(Failure::Input("--expect-dim-kn-eq-n needs the full prefix".into()));
        }
        if dim_kn != Some(n) || !is_eitff {
            failures.push(format!("dim_kn_eq_n (dim K_n = {dim_kn:?}, n = {n})"));
        }
    }
    if let Some(j) = j {
        let idx = zero_based(j, n)?;
        match corner_dim(&seq, &idx, tol) {
            Ok(mut v) => {
                v.as_object_mut().map(|o| o.remove("basis"));
                report["corner_j"] = v;
            }
            Err(e) => warnings.push(format!("dim K_J unavailable: {}", describe(&e))),
        }
    }
    report["warnings"] = json!(warnings);
    report["failed"] = json!(failures);
    print_json(&report);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failures.join(", ")))
    }
}

fn cmd_corner(file: &Path, j: Option<&[usize]>, corner_max: Option<usize>, tol: &Tolerances) -> Outcome {
    let seq = read_sequence(file, tol)?;
    let (_, _, n) = seq.dims();
    let idx = match j {
        Some(j) => zero_based(j, n)?,
        None => (0..corner_max.unwrap_or(n).min(n)).collect(),
    };
    if idx.is_empty() {
        return Err(Failure::Input("empty index set".into()));
    }
    print_json(&json!({
        "command": "corner",
        "tolerances": tol,
        "sequence": shape(&seq),
        "corner": corner_dim(&seq, &idx, tol)?,
    }));
    Ok(())
}
