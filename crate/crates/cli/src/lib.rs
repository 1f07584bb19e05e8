//! `stripmoment` command-line front end. [`run`] is the whole program minus
//! process plumbing, so it can be driven in-process by tests.
//!
//! Exit codes: 0 success, 1 mathematical negative (not PSD, verification
//! failed), 2 input error, 3 solvable but needs different parameters.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use stripmoment_core::extension::{commutant_unitary_from_seed, explicit_parameter};
use stripmoment_core::gns::{build_gram, check_positivity, DEFAULT_RANK_TOL};
use stripmoment_core::io::{
    read_json, read_matrix, read_measure, read_solution, read_table, to_stable_json, write_json,
    write_table, MatrixFile, MeasureFile, OperatorsDump, SolutionDiagnostics, SolutionFile,
    WindowRecord,
};
use stripmoment_core::linalg::op_norm;
use stripmoment_core::resolvent::{
    generalized_resolvent, resolvent_moment_residual, resolvent_report, stieltjes_profile,
};
use stripmoment_core::spectral::{
    verify_solution_within, DEFAULT_CLUSTER_TOL, DEFAULT_VERIFY_TOL, DEFAULT_WEIGHT_FLOOR,
};
use stripmoment_core::{
    compute_moments, CommutantParameter, ContractionParameter, Error, IndexSplit, Pipeline,
    Solution, SolveOptions, C64,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RETRY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "stripmoment",
    version,
    about = "Solve and verify two-index moment problems on the strip R x [-pi, pi)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the moment table of an atomic measure.
    Gen {
        /// Measure file: {"atoms": [{"x", "phi", "weight"}]}.
        #[arg(long)]
        measure: PathBuf,
        /// M: powers 0..=2M are stored.
        #[arg(long)]
        max_power: usize,
        /// N: frequencies -2N..=2N are stored.
        #[arg(long)]
        max_freq: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Decide solvability (positive semidefiniteness of the Gram matrix).
    Check {
        moments: PathBuf,
        /// Relative eigenvalue tolerance for PSD and rank decisions.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        /// Include the full Gram spectrum in the report.
        #[arg(long)]
        spectrum: bool,
    },
    /// Synthesize canonical solutions.
    Solve {
        moments: PathBuf,
        /// Number of family members; more than one writes a directory.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Seed for the commutant enumeration.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extension parameter for a single solve: identity | seed:<u64> | file:<path>.
        #[arg(long)]
        param: Option<String>,
        /// Also write the operator model as JSON.
        #[arg(long)]
        dump_operators: bool,
        /// Verification tolerance (max relative moment residual).
        #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
        tol: f64,
        /// Relative eigenvalue tolerance for the Gram rank.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        /// Angular tolerance for grouping eigenvalues of B.
        #[arg(long, default_value_t = DEFAULT_CLUSTER_TOL)]
        cluster_tol: f64,
        /// Drop atoms whose weight times max(1,|x|)^(2M) is below this fraction of s_00.
        #[arg(long, default_value_t = DEFAULT_WEIGHT_FLOOR)]
        weight_floor: f64,
        /// Solution file (count = 1) or output directory (count > 1).
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a solution measure against a moment table.
    Verify {
        moments: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
        tol: f64,
    },
    /// Evaluate a generalized resolvent and its identities.
    Probe {
        moments: PathBuf,
        /// Spectral parameter as <re>,<im>.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// canonical[:seed] | zero | scale:<t> | file:<path>.
        #[arg(long, default_value = "canonical")]
        contraction: String,
        /// Split m1,m2,n1,n2 for the moment identity; all splits when omitted.
        #[arg(long, allow_hyphen_values = true)]
        indices: Option<String>,
        /// Solution measure for the moment identity.
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
        tol: f64,
        /// Print Im(R_{t+i eps} x00, x00) over the spectrum range.
        #[arg(long)]
        profile_eps: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
    },
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidInput(_)
            | Error::IndexOutOfWindow { .. }
            | Error::Io(_)
            | Error::Json(_) => EXIT_INPUT,
            Error::NotSaturated { .. }
            | Error::DomainNotInvariant { .. }
            | Error::OnePointSpectrum { .. }
            | Error::ClusterAmbiguity { .. }
            | Error::RankAmbiguity { .. } => EXIT_RETRY,
            _ => EXIT_NEGATIVE,
        };
        let message = match &e {
            Error::RankAmbiguity { .. } => format!("{e}; adjust --rank-tol"),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Gen {
            measure,
            max_power,
            max_freq,
            output,
        } => run_gen(&measure, max_power, max_freq, &output, out),
        Command::Check {
            moments,
            tol,
            spectrum,
        } => run_check(&moments, tol, spectrum, out),
        Command::Solve {
            moments,
            count,
            seed,
            param,
            dump_operators,
            tol,
            rank_tol,
            cluster_tol,
            weight_floor,
            output,
        } => {
            let options = SolveOptions {
                rank_tol: positive("rank-tol", rank_tol)?,
                cluster_tol: positive("cluster-tol", cluster_tol)?,
                weight_floor: positive("weight-floor", weight_floor)?,
                verify_tol: positive("tol", tol)?,
            };
            let request = SolveRequest {
                count,
                seed,
                param,
                dump_operators,
                options,
            };
            run_solve(&moments, &request, &output, out, err)
        }
        Command::Verify {
            moments,
            solution,
            tol,
        } => run_verify(&moments, &solution, positive("tol", tol)?, out, err),
        Command::Probe {
            moments,
            z,
            contraction,
            indices,
            measure,
            tol,
            profile_eps,
            rank_tol,
        } => {
            let request = ProbeRequest {
                z: parse_z(&z)?,
                contraction,
                indices: indices.as_deref().map(parse_split).transpose()?,
                measure,
                tol: positive("tol", tol)?,
                profile_eps: profile_eps
                    .map(|e| positive("profile-eps", e))
                    .transpose()?,
                rank_tol: positive("rank-tol", rank_tol)?,
            };
            run_probe(&moments, &request, out)
        }
    }
}

fn positive(name: &str, v: f64) -> std::result::Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::input(format!("--{name} must be positive")))
    }
}

fn existing(path: &Path) -> std::result::Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::input(format!(
            "{} is not a readable file",
            path.display()
        )))
    }
}

fn emit(out: &mut dyn Write, value: &Value) -> std::result::Result<(), Failure> {
    let text = to_stable_json(value)?;
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::from(Error::Io(e)))
}

fn window(max_power: usize, max_freq: usize) -> Value {
    json!({ "max_power": max_power, "max_freq": max_freq })
}

fn run_gen(
    measure: &Path,
    max_power: usize,
    max_freq: usize,
    output: &Path,
    out: &mut dyn Write,
) -> CmdResult {
    existing(measure)?;
    let mu = read_measure(measure)?;
    let table = compute_moments(&mu, max_power, max_freq)?;
    write_table(output, &table)?;
    emit(
        out,
        &json!({
            "atoms": mu.len(),
            "output": output.display().to_string(),
            "window": window(max_power, max_freq),
        }),
    )?;
    Ok(EXIT_OK)
}

fn run_check(moments: &Path, tol: f64, spectrum: bool, out: &mut dyn Write) -> CmdResult {
    let tol = positive("tol", tol)?;
    existing(moments)?;
    let table = read_table(moments)?;
    let gram = build_gram(&table)?;
    let report = check_positivity(&gram, tol)?;
    let mut value = json!({
        "is_psd": report.is_psd,
        "min_eigenvalue": report.min_eigenvalue,
        "max_eigenvalue": report.max_eigenvalue,
        "rank": report.numeric_rank,
        "threshold": report.threshold,
        "window": window(table.max_power(), table.max_freq()),
    });
    if spectrum {
        value["spectrum"] = json!(report.spectrum);
    }
    emit(out, &value)?;
    Ok(if report.is_psd {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

struct SolveRequest {
    count: usize,
    seed: u64,
    param: Option<String>,
    dump_operators: bool,
    options: SolveOptions,
}

fn resolve_parameter(
    pipeline: &Pipeline,
    spec: &str,
) -> std::result::Result<CommutantParameter, Failure> {
    let d = pipeline.defect();
    let b2 = &pipeline.extensions.deficiency.b_on_h2;
    if spec == "identity" {
        return Ok(CommutantParameter::identity(d));
    }
    if let Some(seed) = spec.strip_prefix("seed:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| Failure::input(format!("invalid seed in --param {spec}")))?;
        if d == 0 {
            return Ok(CommutantParameter::identity(0));
        }
        return Ok(commutant_unitary_from_seed(b2, seed)?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let path = Path::new(path);
        existing(path)?;
        let matrix = read_matrix(path)?;
        return Ok(explicit_parameter(
            b2,
            matrix,
            format!("file:{}", path.display()),
        )?);
    }
    Err(Failure::input(format!(
        "--param must be identity, seed:<u64> or file:<path>, got {spec}"
    )))
}

fn solution_file(pipeline: &Pipeline, s: &Solution) -> SolutionFile {
    let sol = &s.solution;
    let e = &s.extension;
    let j = &s.spectrum;
    let mut residuals: BTreeMap<String, f64> = pipeline
        .system
        .residuals
        .named()
        .iter()
        .map(|(k, v)| (format!("system_{k}"), *v))
        .collect();
    for (k, v) in [
        ("extension_unitarity", e.unitarity),
        ("extension_one_distance", e.one_distance),
        ("extension_b_commutation", e.b_commutation),
        ("extension_hermitian_defect", e.hermitian_defect),
        ("extension_extends_a", e.extends_a),
        ("extension_cayley_round_trip", e.cayley_round_trip),
        ("spectrum_hermitian", j.hermitian),
        ("spectrum_unitary", j.unitary),
        ("spectrum_orthonormality", j.orthonormality),
    ] {
        residuals.insert(k.to_string(), v);
    }
    SolutionFile {
        atoms: MeasureFile::from(&sol.measure).atoms,
        diagnostics: Some(SolutionDiagnostics {
            fit: sol.fit,
            dropped_mass: sol.dropped_mass,
            parameter: sol.provenance.clone(),
            residuals,
            window: Some(WindowRecord {
                max_power: pipeline.table.max_power(),
                max_freq: pipeline.table.max_freq(),
            }),
        }),
    }
}

fn member_summary(index: usize, s: &Solution) -> Value {
    json!({
        "index": index,
        "parameter": s.solution.provenance,
        "atoms": s.solution.measure.len(),
        "fit": s.solution.fit,
        "pass": s.solution.verification.pass,
    })
}

fn run_solve(
    moments: &Path,
    req: &SolveRequest,
    output: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    if req.count == 0 {
        return Err(Failure::input("--count must be at least 1"));
    }
    if req.count > 1 && req.param.is_some() {
        return Err(Failure::input(
            "--param selects a single solution; drop it or use --count 1",
        ));
    }
    existing(moments)?;
    let table = read_table(moments)?;
    let pipeline = Pipeline::new(table, req.options)?;
    let d = pipeline.defect();

    if req.count == 1 {
        let spec = req.param.as_deref().unwrap_or("identity");
        if d == 0 && spec != "identity" {
            let _ = writeln!(
                err,
                "warning: defect is 0, the solution is unique; ignoring --param {spec}"
            );
        }
        let parameter = resolve_parameter(&pipeline, spec)?;
        let solution = pipeline.solve(&parameter)?;
        write_json(output, &solution_file(&pipeline, &solution))?;
        if req.dump_operators {
            write_json(
                &operators_path(output),
                &OperatorsDump::new(&pipeline.system, &pipeline.extensions),
            )?;
        }
        let pass = solution.solution.verification.pass;
        emit(
            out,
            &json!({
                "defect": d,
                "rank": pipeline.system.dim(),
                "output": output.display().to_string(),
                "solution": member_summary(0, &solution),
            }),
        )?;
        return Ok(if pass { EXIT_OK } else { EXIT_NEGATIVE });
    }

    let family = pipeline.family(req.count, req.seed)?;
    if d == 0 {
        let _ = writeln!(
            err,
            "warning: defect is 0, the solution is unique; writing one member"
        );
    }
    fs::create_dir_all(output).map_err(|e| Failure::from(Error::Io(e)))?;
    let mut members = Vec::new();
    for (i, s) in family.members.iter().enumerate() {
        write_json(&output.join(member_name(i)), &solution_file(&pipeline, s))?;
        members.push(member_summary(i, s));
    }
    let distinct = distinct_members(&family.distances, family.members.len(), 1e-6);
    let summary = json!({
        "defect": d,
        "rank": pipeline.system.dim(),
        "seed": req.seed,
        "requested": req.count,
        "members": members,
        "distances": family.distances.iter().map(|p| json!({
            "first": p.first, "second": p.second, "distance": p.distance,
        })).collect::<Vec<_>>(),
        "min_distance": family.min_distance(),
        "distinct_members": distinct,
        "all_pass": family.all_verified(),
    });
    write_json(&output.join("family.json"), &summary)?;
    if req.dump_operators {
        write_json(
            &output.join("operators.json"),
            &OperatorsDump::new(&pipeline.system, &pipeline.extensions),
        )?;
    }
    emit(out, &summary)?;
    Ok(if family.all_verified() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

pub fn member_name(index: usize) -> String {
    format!("solution_{index:03}.json")
}

fn operators_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "solution".into());
    output.with_file_name(format!("{stem}.operators.json"))
}

/// Size of a largest set of members pairwise farther apart than `tol`,
/// found greedily in index order.
fn distinct_members(
    distances: &[stripmoment_core::pipeline::PairDistance],
    n: usize,
    tol: f64,
) -> usize {
    let far = |i: usize, j: usize| {
        distances
            .iter()
            .find(|p| (p.first, p.second) == (i.min(j), i.max(j)))
            .is_some_and(|p| p.distance > tol)
    };
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..n {
        if chosen.iter().all(|&j| far(i, j)) {
            chosen.push(i);
        }
    }
    chosen.len()
}

fn run_verify(
    moments: &Path,
    solution: &Path,
    tol: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    existing(moments)?;
    existing(solution)?;
    let table = read_table(moments)?;
    let (measure, diagnostics) = read_solution(solution)?;
    let (mut mp, mut mf) = (table.max_power(), table.max_freq());
    if let Some(w) = diagnostics.and_then(|d| d.window) {
        if (w.max_power, w.max_freq) != (mp, mf) {
            mp = mp.min(w.max_power);
            mf = mf.min(w.max_freq);
            let _ = writeln!(
                err,
                "warning: solution window (M={}, N={}) differs from table window (M={}, N={}); verifying on the intersection (M={mp}, N={mf})",
                w.max_power,
                w.max_freq,
                table.max_power(),
                table.max_freq()
            );
        }
    }
    let report = verify_solution_within(&table, &measure, tol, mp, mf);
    let worst = report
        .worst()
        .map(|(idx, r)| json!({ "m": idx.m, "n": idx.n, "residual": r }));
    emit(
        out,
        &json!({
            "pass": report.pass,
            "max_residual": report.max_residual,
            "tol": tol,
            "checked": report.per_index.len(),
            "worst": worst,
            "window": window(mp, mf),
        }),
    )?;
    Ok(if report.pass { EXIT_OK } else { EXIT_NEGATIVE })
}

struct ProbeRequest {
    z: C64,
    contraction: String,
    indices: Option<IndexSplit>,
    measure: Option<PathBuf>,
    tol: f64,
    profile_eps: Option<f64>,
    rank_tol: f64,
}

fn parse_z(text: &str) -> std::result::Result<C64, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let parsed: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::input(format!("--z expects <re>,<im>, got {text}")))?;
    if parsed.len() != 2 || parsed.iter().any(|v| !v.is_finite()) {
        return Err(Failure::input(format!("--z expects <re>,<im>, got {text}")));
    }
    if parsed[1] == 0.0 {
        return Err(Failure::input("z must be non-real"));
    }
    Ok(C64::new(parsed[0], parsed[1]))
}

fn parse_split(text: &str) -> std::result::Result<IndexSplit, Failure> {
    let v: Vec<i64> = text
        .split(',')
        .map(|p| p.trim().parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::input(format!("--indices expects m1,m2,n1,n2, got {text}")))?;
    match v[..] {
        [m1, m2, n1, n2] => Ok(IndexSplit::new(m1, m2, n1, n2)),
        _ => Err(Failure::input(format!(
            "--indices expects m1,m2,n1,n2, got {text}"
        ))),
    }
}

fn resolve_contraction(
    pipeline: &Pipeline,
    spec: &str,
) -> std::result::Result<ContractionParameter, Failure> {
    let sys = &pipeline.system;
    let ctx = &pipeline.extensions;
    let dd = &ctx.deficiency;
    if spec == "canonical" || spec.starts_with("canonical:") {
        let u2 = match spec.strip_prefix("canonical:") {
            None => CommutantParameter::identity(dd.defect),
            Some(seed) => {
                let seed: u64 = seed
                    .parse()
                    .map_err(|_| Failure::input(format!("invalid seed in --contraction {spec}")))?;
                if dd.defect == 0 {
                    CommutantParameter::identity(0)
                } else {
                    commutant_unitary_from_seed(&dd.b_on_h2, seed)?
                }
            }
        };
        return Ok(ContractionParameter::canonical(sys, dd, &ctx.u24, &u2)?);
    }
    if spec == "zero" {
        return Ok(ContractionParameter::zero(sys, dd)?);
    }
    if let Some(t) = spec.strip_prefix("scale:") {
        let t: f64 = t
            .parse()
            .map_err(|_| Failure::input(format!("invalid scale in --contraction {spec}")))?;
        return Ok(ContractionParameter::scaled(sys, dd, &ctx.u24, t)?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let path = Path::new(path);
        existing(path)?;
        let matrix = read_json::<MatrixFile>(path)?.to_matrix()?;
        return Ok(ContractionParameter::new(sys, dd, matrix, spec)?);
    }
    Err(Failure::input(format!(
        "--contraction must be canonical[:seed], zero, scale:<t> or file:<path>, got {spec}"
    )))
}

fn run_probe(moments: &Path, req: &ProbeRequest, out: &mut dyn Write) -> CmdResult {
    existing(moments)?;
    if let Some(m) = &req.measure {
        existing(m)?;
    }
    let table = read_table(moments)?;
    let options = SolveOptions {
        rank_tol: req.rank_tol,
        ..SolveOptions::default()
    };
    let pipeline = Pipeline::new(table, options)?;
    let sys = &pipeline.system;
    let dd = &pipeline.extensions.deficiency;
    let param = resolve_contraction(&pipeline, &req.contraction)?;
    let report = resolvent_report(sys, dd, &param, req.z)?;
    let mut pass = report.norm_bound_excess <= req.tol
        && report.adjoint_symmetry <= req.tol
        && report.b_commutation <= req.tol;
    let mut value = json!({
        "z": report.z,
        "contraction": report.parameter,
        "contraction_norm": report.parameter_norm,
        "contraction_commutation": report.parameter_commutation,
        "defect": dd.defect,
        "resolvent_norm": report.norm,
        "norm_bound_excess": report.norm_bound_excess,
        "adjoint_symmetry": report.adjoint_symmetry,
        "b_commutation": report.b_commutation,
        "tol": req.tol,
    });
    if let Some(path) = &req.measure {
        let (measure, _) = read_solution(path)?;
        let r = generalized_resolvent(sys, dd, &param, req.z)?;
        let splits = match req.indices {
            Some(s) => vec![s],
            None => IndexSplit::all_in_window(sys),
        };
        let mut worst: Option<(IndexSplit, f64)> = None;
        for s in &splits {
            let res = resolvent_moment_residual(sys, &r, req.z, *s, &measure)?;
            if worst.is_none_or(|(_, w)| res > w) {
                worst = Some((*s, res));
            }
        }
        let (split, residual) = worst.expect("at least one split");
        pass &= residual <= req.tol;
        value["moment_identity"] = json!({
            "splits": splits.len(),
            "max_residual": residual,
            "worst_split": [split.m1, split.m2, split.n1, split.n2],
        });
    } else if req.indices.is_some() {
        return Err(Failure::input("--indices needs --measure"));
    }
    if let Some(eps) = req.profile_eps {
        let reach = op_norm(&sys.a.action) + 1.0;
        let ts: Vec<f64> = (0..=64)
            .map(|k| -reach + 2.0 * reach * k as f64 / 64.0)
            .collect();
        let profile = stieltjes_profile(sys, dd, &param, &ts, eps)?;
        value["stieltjes_profile"] = json!({
            "eps": eps,
            "points": profile.iter().map(|(t, v)| [*t, *v]).collect::<Vec<_>>(),
        });
    }
    value["pass"] = json!(pass);
    emit(out, &value)?;
    Ok(if pass { EXIT_OK } else { EXIT_NEGATIVE })
}
