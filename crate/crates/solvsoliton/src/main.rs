//! Command-line interface over the library: validation, curvature, soliton
//! classification, structure reports, modifications, Ricci flow and the
//! metric search, with JSON output for scripting.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use solvsoliton::error::Error;
use solvsoliton::fixtures::{fixture, Fixture, FIXTURE_NAMES};
use solvsoliton::flow::{ricci_flow_sampled, soliton_selfsimilarity_check};
use solvsoliton::io::{trace_to_csv, AlgebraDocument, PhiBlock, VerdictDocument};
use solvsoliton::modification::{
    build_modification, condition_report, modification_structure_tests, solvsoliton_criterion,
    ModificationMap,
};
use solvsoliton::soliton::{classify, soliton_residual_search, solvsoliton_structure_check};
use solvsoliton::tolerances::Tolerances;

#[derive(Parser)]
#[command(
    name = "solvsoliton",
    version,
    about = "Curvature and Ricci soliton detection for left-invariant metrics"
)]
struct Cli {
    /// Emit a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Tolerance profile for identity-style checks.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Default)]
    tolerance_profile: Profile,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Default,
    Strict,
}

#[derive(Subcommand)]
enum Command {
    /// Check antisymmetry, the Jacobi identity and structural flags.
    Validate { file: PathBuf },
    /// Compute the Ricci operator and its decomposition.
    Curvature {
        file: PathBuf,
        /// Also run the Koszul-formula oracle and report the deviation.
        #[arg(long)]
        oracle: bool,
    },
    /// Classify the metric as flat / Einstein / algebraic / semi-algebraic.
    Soliton {
        file: PathBuf,
        /// Override the soliton residual tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Run the solvsoliton structure checks.
    Structure { file: PathBuf },
    /// Build the modified algebra (id + phi)s and report on it.
    Modify {
        file: PathBuf,
        /// Inline JSON phi block or a path to a JSON file carrying one.
        #[arg(long)]
        phi: Option<String>,
        /// Also evaluate the solvsoliton criterion on the result.
        #[arg(long)]
        criterion: bool,
    },
    /// Integrate the Ricci flow and export the trace as CSV.
    Flow {
        file: PathBuf,
        #[arg(long = "t-end")]
        t_end: f64,
        /// Integrator tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Number of sample times.
        #[arg(long, default_value_t = 25)]
        samples: usize,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize the soliton residual over metrics from random restarts.
    Search {
        file: PathBuf,
        #[arg(long)]
        restarts: usize,
        #[arg(long)]
        seed: u64,
    },
    /// List the fixture catalog or dump one fixture as a document.
    Fixtures {
        #[arg(long)]
        list: bool,
        #[arg(long)]
        dump: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match cli.tolerance_profile {
        Profile::Default => Tolerances::default(),
        Profile::Strict => Tolerances::strict(),
    };
    match run(&cli, tol) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::ContractViolation { .. } | Error::JacobiFailure { .. } => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

/// Load a document either from the fixture catalog (path `fixtures/<name>`)
/// or from a JSON file on disk.
fn load_document(path: &PathBuf, tol: &Tolerances) -> Result<AlgebraDocument, Error> {
    if let Ok(rest) = path.strip_prefix("fixtures") {
        let name = rest.to_string_lossy();
        if !name.contains('.') && !name.is_empty() {
            return match fixture(&name)? {
                Fixture::Metric(m) => Ok(AlgebraDocument::from_metric_algebra(&m)),
                Fixture::Modification(phi) => AlgebraDocument::from_modification(&phi, tol),
            };
        }
    }
    let text = fs::read_to_string(path).map_err(|e| Error::ParseError {
        detail: format!("{}: {e}", path.display()),
    })?;
    AlgebraDocument::from_json(&text)
}

fn run(cli: &Cli, tol: Tolerances) -> Result<(), Error> {
    match &cli.command {
        Command::Validate { file } => {
            let doc = load_document(file, &tol)?;
            let m = doc.to_metric_algebra(&tol)?;
            let diag = m.algebra().validate(&tol);
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "input_digest": doc.digest(),
                        "antisymmetry_ok": diag.antisymmetry_ok,
                        "jacobi_residual": diag.jacobi_residual,
                        "jacobi_ok": diag.jacobi_ok,
                        "solvable": diag.solvable,
                        "nilpotent": diag.nilpotent,
                        "unimodular": diag.unimodular,
                    }))
                    .unwrap()
                );
            } else {
                println!("dimension      {}", m.dim());
                println!(
                    "jacobi         residual {:.3e} ({})",
                    diag.jacobi_residual,
                    if diag.jacobi_ok { "ok" } else { "VIOLATED" }
                );
                println!("solvable       {}", diag.solvable);
                println!("nilpotent      {}", diag.nilpotent);
                println!("unimodular     {}", diag.unimodular);
            }
            if !diag.jacobi_ok {
                return Err(Error::JacobiViolation {
                    residual: diag.jacobi_residual,
                    tol: tol.jacobi,
                });
            }
            Ok(())
        }
        Command::Curvature { file, oracle } => {
            let doc = load_document(file, &tol)?;
            let m = doc.to_metric_algebra(&tol)?;
            let rep = m.ricci_operator();
            let deviation = if *oracle {
                let koszul = m.ricci_via_koszul();
                Some(
                    (&rep.ricci - koszul)
                        .iter()
                        .fold(0.0_f64, |a, x| a.max(x.abs())),
                )
            } else {
                None
            };
            if cli.json {
                let n = m.dim();
                let flat = |mat: &nalgebra::DMatrix<f64>| -> Vec<f64> {
                    (0..n * n).map(|i| mat[(i / n, i % n)]).collect()
                };
                let mut out = json!({
                    "input_digest": doc.digest(),
                    "ricci": flat(&rep.ricci),
                    "moment": flat(&rep.moment),
                    "killing_op": flat(&rep.killing_op),
                    "mean_curvature": rep.mean_curvature.iter().cloned().collect::<Vec<f64>>(),
                    "scalar_curvature": rep.scalar,
                });
                if let Some(dev) = deviation {
                    out["koszul_deviation"] = json!(dev);
                }
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!("Ricci operator:\n{:.6}", rep.ricci);
                println!("scalar curvature: {:.12}", rep.scalar);
                println!("mean curvature:   {:.6}", rep.mean_curvature.transpose());
                if let Some(dev) = deviation {
                    println!("koszul oracle deviation: {dev:.3e}");
                }
            }
            Ok(())
        }
        Command::Soliton { file, tolerance } => {
            let mut tol = tol;
            if let Some(t) = tolerance {
                tol.soliton = *t;
            }
            let doc = load_document(file, &tol)?;
            let m = doc.to_metric_algebra(&tol)?;
            let verdict = classify(&m, &tol);
            let vd = VerdictDocument::new(&doc, &m, &verdict, &tol);
            if cli.json {
                println!("{}", vd.to_json());
            } else {
                println!("class     {}", verdict.class);
                println!("c         {:.12}", verdict.c);
                println!("residual  {:.3e}", verdict.residual);
                println!("derivation:\n{:.6}", verdict.derivation);
                println!(
                    "stage residuals: flat {:.3e} | einstein {:.3e} | algebraic {:.3e} | semi {:.3e}",
                    verdict.stages.flat,
                    verdict.stages.einstein,
                    verdict.stages.algebraic,
                    verdict.stages.semi_algebraic
                );
            }
            Ok(())
        }
        Command::Structure { file } => {
            let doc = load_document(file, &tol)?;
            let m = doc.to_metric_algebra(&tol)?;
            let verdict = classify(&m, &tol);
            let rep = solvsoliton_structure_check(&m, &verdict, &tol)?;
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "input_digest": doc.digest(),
                        "class": verdict.class.to_string(),
                        "structure": rep,
                    }))
                    .unwrap()
                );
            } else {
                println!("class                   {}", verdict.class);
                println!("nilradical dimension    {}", rep.nilradical_dim);
                println!("complement abelian      {}", rep.complement_abelian);
                println!("ad complement symmetric {}", rep.ad_complement_symmetric);
                println!("derivation identity     {}", rep.derivation_matches);
                println!("kernel containment      {}", rep.kernel_contained);
                println!("all pass                {}", rep.all_pass);
            }
            Ok(())
        }
        Command::Modify {
            file,
            phi,
            criterion,
        } => {
            let doc = load_document(file, &tol)?;
            let phi_map = resolve_phi(&doc, phi.as_deref(), &tol)?;
            let conditions = condition_report(&phi_map, &tol);
            let built = build_modification(&phi_map, &tol)?;
            let verdict = classify(&built.modified, &tol);
            let built_doc = AlgebraDocument::from_metric_algebra(&built.modified);
            let (ric_src, _) = phi_map.source.ricci_frame();
            let (ric_mod, _) = built.modified.ricci_frame();
            let spec = |m: nalgebra::DMatrix<f64>| -> Vec<f64> {
                let mut s: Vec<f64> = nalgebra::SymmetricEigen::new(m)
                    .eigenvalues
                    .iter()
                    .cloned()
                    .collect();
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                s
            };
            let spec_src = spec(ric_src);
            let spec_mod = spec(ric_mod);
            let spec_dev = spec_src
                .iter()
                .zip(spec_mod.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            let crit = if *criterion {
                Some(solvsoliton_criterion(&built, &tol)?)
            } else {
                None
            };
            let structure = modification_structure_tests(&built, &tol)?;
            if cli.json {
                let mut out = json!({
                    "input_digest": doc.digest(),
                    "conditions": conditions,
                    "modified": serde_json::to_value(&built_doc).unwrap(),
                    "class": verdict.class.to_string(),
                    "residuals": {
                        "flat": verdict.stages.flat,
                        "einstein": verdict.stages.einstein,
                        "algebraic": verdict.stages.algebraic,
                        "semi_algebraic": verdict.stages.semi_algebraic,
                    },
                    "ricci_spectrum_source": spec_src,
                    "ricci_spectrum_modified": spec_mod,
                    "spectrum_deviation": spec_dev,
                    "structure_tests": structure,
                });
                if let Some(c) = crit {
                    out["criterion"] = serde_json::to_value(&c).unwrap();
                }
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!("conditions pass        {}", conditions.all_pass);
                println!("modified class         {}", verdict.class);
                println!("spectrum deviation     {spec_dev:.3e}");
                println!("structure tests pass   {}", structure.all_pass);
                if let Some(c) = crit {
                    println!(
                        "criterion (ii)  n(source) in Ker phi: {}",
                        c.nilradical_in_kernel
                    );
                    println!(
                        "criterion (iii) complement reductive: {}",
                        c.complement_ad_reductive
                    );
                    println!(
                        "criterion (iv)  complement abelian:   {}",
                        c.complement_abelian_reductive
                    );
                    println!("solvsoliton            {}", c.is_solvsoliton);
                    println!("verdicts consistent    {}", c.verdicts_consistent);
                }
            }
            Ok(())
        }
        Command::Flow {
            file,
            t_end,
            tol: flow_tol,
            samples,
            out,
        } => {
            let doc = load_document(file, &tol)?;
            let m = doc.to_metric_algebra(&tol)?;
            let trace = ricci_flow_sampled(&m, *t_end, *flow_tol, *samples, &tol)?;
            fs::write(out, trace_to_csv(&trace)).map_err(|e| Error::ParseError {
                detail: format!("{}: {e}", out.display()),
            })?;
            let verdict = classify(&m, &tol);
            let selfsim = soliton_selfsimilarity_check(&trace, verdict.c, &tol).ok();
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "input_digest": doc.digest(),
                        "termination": trace.termination,
                        "samples": trace.times.len(),
                        "accepted_steps": trace.step_stats.accepted,
                        "rejected_steps": trace.step_stats.rejected,
                        "max_error_estimate": trace.step_stats.max_error_estimate,
                        "sc_first": trace.sc_values.first(),
                        "sc_last": trace.sc_values.last(),
                        "class": verdict.class.to_string(),
                        "c": verdict.c,
                        "self_similarity": selfsim,
                        "csv": out.display().to_string(),
                    }))
                    .unwrap()
                );
            } else {
                println!("termination    {:?}", trace.termination);
                println!(
                    "steps          {} accepted, {} rejected",
                    trace.step_stats.accepted, trace.step_stats.rejected
                );
                println!(
                    "sc             {:.9} -> {:.9}",
                    trace.sc_values.first().unwrap(),
                    trace.sc_values.last().unwrap()
                );
                if let Some(s) = selfsim {
                    println!(
                        "self-similarity defects: scalar {:.3e}, spectral {:.3e}",
                        s.scalar_defect, s.spectral_defect
                    );
                }
                println!("trace written to {}", out.display());
            }
            Ok(())
        }
        Command::Search {
            file,
            restarts,
            seed,
        } => {
            let doc = load_document(file, &tol)?;
            let m = doc.to_metric_algebra(&tol)?;
            let outcome = soliton_residual_search(m.algebra(), *restarts, *seed, &tol);
            if cli.json {
                let n = m.dim();
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "input_digest": doc.digest(),
                        "restarts": restarts,
                        "seed": seed,
                        "best_residual": outcome.best_residual,
                        "best_restart": outcome.best_restart,
                        "best_gram": (0..n * n)
                            .map(|i| outcome.best_gram[(i / n, i % n)])
                            .collect::<Vec<f64>>(),
                        "note": "a large residual is evidence, not proof, of nonexistence",
                    }))
                    .unwrap()
                );
            } else {
                println!(
                    "best residual  {:.6e} (restart {})",
                    outcome.best_residual, outcome.best_restart
                );
                println!(
                    "best metric (det normalized to 1):\n{:.6}",
                    outcome.best_gram
                );
                println!("note: a large residual is evidence, not proof, of nonexistence");
            }
            Ok(())
        }
        Command::Fixtures { list, dump } => {
            if *list || dump.is_none() {
                for name in FIXTURE_NAMES {
                    println!("{name}");
                }
                return Ok(());
            }
            let name = dump.as_deref().unwrap();
            let doc = match fixture(name)? {
                Fixture::Metric(m) => AlgebraDocument::from_metric_algebra(&m),
                Fixture::Modification(phi) => AlgebraDocument::from_modification(&phi, &tol)?,
            };
            println!("{}", doc.to_json());
            Ok(())
        }
    }
}

/// Resolve the phi block: inline JSON, a file carrying a phi block, or the
/// main document's own block.
fn resolve_phi(
    doc: &AlgebraDocument,
    phi_arg: Option<&str>,
    tol: &Tolerances,
) -> Result<ModificationMap, Error> {
    let attach = |block: PhiBlock| -> Result<ModificationMap, Error> {
        let mut with_phi = doc.clone();
        with_phi.phi = Some(block);
        with_phi
            .to_modification(tol)?
            .ok_or_else(|| Error::SchemaError {
                detail: "phi block missing after attachment".into(),
            })
    };
    match phi_arg {
        None => doc.to_modification(tol)?.ok_or_else(|| Error::SchemaError {
            detail: "no --phi given and the document carries no phi block".into(),
        }),
        Some(text) if text.trim_start().starts_with('{') => {
            let block: PhiBlock = serde_json::from_str(text).map_err(|e| Error::ParseError {
                detail: format!("inline phi: {e}"),
            })?;
            attach(block)
        }
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::ParseError {
                detail: format!("{path}: {e}"),
            })?;
            // Either a bare phi block or a full document carrying one.
            if let Ok(block) = serde_json::from_str::<PhiBlock>(&text) {
                return attach(block);
            }
            let other = AlgebraDocument::from_json(&text)?;
            match other.phi {
                Some(block) => attach(block),
                None => Err(Error::SchemaError {
                    detail: format!("{path} carries no phi block"),
                }),
            }
        }
    }
}
