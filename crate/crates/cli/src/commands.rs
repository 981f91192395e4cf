use catalysis_core::cascade::{
    closed_form_qudit, cross_check, evaluate_qudit, qudit_to_fock, CascadeConfig, CrossCheck, QuditState,
};
use catalysis_core::fock::{policy_cutoff, C64};
use catalysis_core::metrics::{pnd_fidelity, pure_fidelity, wigner_cross_validate};
use catalysis_core::optimizer::{grid_scan, optimize, qudit_rotation_fidelity, RestartTrace};
use catalysis_core::realistic::eta_s_sweep;
use catalysis_core::reference::{all_checks, fock_row_result, RowCheck, FOCK_ROWS};
use catalysis_core::targets::{displaced_fock_target, TargetSpec};
use catalysis_core::Error as CoreError;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig, TargetBlock};
use crate::output::{num, Header, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] CoreError),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} table checks failed")]
    Tables { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Tables { .. } => 4,
            CliError::Io(_) => 1,
        }
    }
}

pub type CliResult = Result<(), CliError>;

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn target_cutoff(block: &TargetBlock, cutoff: Option<usize>) -> usize {
    cutoff.unwrap_or_else(|| match block {
        TargetBlock::Lscs { gamma_sq, .. } => policy_cutoff(gamma_sq.sqrt()),
        TargetBlock::Fsns { coefficients, .. } => coefficients.len().max(32),
        TargetBlock::Fock { n, .. } | TargetBlock::On { n, .. } => (*n + 1).max(32),
        TargetBlock::Cps { .. } => 32,
    })
}

#[derive(Serialize)]
struct TargetReport {
    kind: &'static str,
    /// Full-state fidelity against `D(β)|n⟩` using the output's own `β`.
    fidelity: Option<f64>,
    /// `(Σ_p √(|A_p|² |⟨p|φ⟩|²))²` over the qudit support.
    pnd_fidelity: f64,
    /// `max_φ |⟨φ_l|e^{iφn}|A⟩|²` with the target truncated to the qudit support.
    rotation_fidelity: f64,
    rotation: f64,
    truncation_loss: f64,
}

fn target_report(block: &TargetBlock, spec: &TargetSpec, q: &QuditState, cutoff: usize) -> Result<TargetReport, CliError> {
    let l = q.l();
    let full: Vec<f64> = match block {
        TargetBlock::Fock { n, .. } => (0..=l).map(|p| if p == *n { 1.0 } else { 0.0 }).collect(),
        _ => spec.state()?.pnd().into_iter().chain(std::iter::repeat(0.0)).take(l + 1).collect(),
    };
    let fidelity = match block {
        TargetBlock::Fock { n, .. } => {
            let state = qudit_to_fock(q, cutoff)?;
            Some(pure_fidelity(&displaced_fock_target(*n, q.displacement, cutoff)?, &state)?)
        }
        _ => None,
    };
    let (rotation_fidelity, rotation) = qudit_rotation_fidelity(q, &spec.qudit_amplitudes(l)?)?;
    Ok(TargetReport {
        kind: match block {
            TargetBlock::Fock { .. } => "fock",
            TargetBlock::Lscs { .. } => "lscs",
            TargetBlock::Fsns { .. } => "fsns",
            TargetBlock::On { .. } => "on",
            TargetBlock::Cps { .. } => "cps",
        },
        fidelity,
        pnd_fidelity: pnd_fidelity(&q.pnd(), &full),
        rotation_fidelity,
        rotation,
        truncation_loss: spec.qudit_truncation_loss(l)?,
    })
}

#[derive(Serialize)]
struct SimulateReport {
    l: usize,
    alpha: [f64; 2],
    reflectivities: Vec<f64>,
    displacement: [f64; 2],
    amplitudes: Vec<[f64; 2]>,
    pnd: Vec<f64>,
    success_probability: f64,
    cutoff: usize,
    /// Closed form against the beam-splitter oracle; absent when the closed
    /// form is undefined (`α = 0` or a zero reflectivity).
    cross_check: Option<CrossCheck>,
    target: Option<TargetReport>,
}

fn work_cutoff(cfg: &RunConfig, config: &CascadeConfig, q: &QuditState) -> usize {
    cfg.cutoff.unwrap_or_else(|| config.policy_cutoff().max(q.policy_cutoff()))
}

pub fn simulate(cfg: &RunConfig, out: &mut OutputDir, header: &Header) -> CliResult {
    let config = cfg.cascade()?;
    let q = evaluate_qudit(&config)?;
    let cutoff = work_cutoff(cfg, &config, &q);
    let cross = match closed_form_qudit(&config) {
        Ok(_) => Some(cross_check(&config, cutoff)?),
        Err(CoreError::DegenerateConfiguration(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let target = match &cfg.target {
        Some(block) => {
            let spec = block.to_spec(target_cutoff(block, cfg.cutoff))?;
            Some(target_report(block, &spec, &q, cutoff)?)
        }
        None => None,
    };
    let report = SimulateReport {
        l: q.l(),
        alpha: pair(config.alpha),
        reflectivities: config.reflectivities.clone(),
        displacement: pair(q.displacement),
        amplitudes: q.amplitudes.iter().map(|a| pair(*a)).collect(),
        pnd: q.pnd(),
        success_probability: q.success_probability,
        cutoff,
        cross_check: cross,
        target,
    };
    println!("success probability {:.6e}", report.success_probability);
    println!("pnd {:?}", report.pnd);
    if let Some(t) = &report.target {
        if let Some(f) = t.fidelity {
            println!("fidelity {f:.6}");
        }
        println!("pnd fidelity {:.6}, rotation fidelity {:.6}", t.pnd_fidelity, t.rotation_fidelity);
    }
    out.json("simulate.json", header, &report)?;
    let columns = ["p", "re", "im", "probability"].map(String::from);
    out.csv(
        "pnd.csv",
        header,
        &columns,
        q.amplitudes
            .iter()
            .enumerate()
            .map(|(p, a)| vec![p.to_string(), num(a.re), num(a.im), num(a.norm_sqr())]),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct WignerReport {
    cutoff: usize,
    max_abs_difference: f64,
    min: f64,
    max: f64,
    integral: f64,
}

pub fn wigner(cfg: &RunConfig, out: &mut OutputDir, header: &Header) -> CliResult {
    let config = cfg.cascade()?;
    let (xs, ps) = cfg
        .wigner
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("missing [wigner] block".into()))?
        .axes()?;
    let q = evaluate_qudit(&config)?;
    let cutoff = work_cutoff(cfg, &config, &q);
    let cmp = wigner_cross_validate(&q, &xs, &ps, cutoff)?;
    let report = WignerReport {
        cutoff,
        max_abs_difference: cmp.max_abs_difference,
        min: cmp.closed_form.min(),
        max: cmp.closed_form.max(),
        integral: cmp.closed_form.integral(),
    };
    println!("max |closed - numeric| = {:.3e}", report.max_abs_difference);
    out.json("wigner.json", header, &report)?;
    let columns = ["x", "p", "closed_form", "numeric"].map(String::from);
    out.csv(
        "wigner.csv",
        header,
        &columns,
        cmp.closed_form
            .rows()
            .zip(cmp.numeric.rows())
            .map(|((x, p, a), (_, _, b))| vec![num(x), num(p), num(a), num(b)]),
    )?;
    Ok(())
}

pub fn optimize_cmd(cfg: &RunConfig, out: &mut OutputDir, header: &Header) -> CliResult {
    let block = cfg.target_block()?;
    let spec = block.to_spec(target_cutoff(block, cfg.cutoff))?;
    let opt = cfg
        .optimizer
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("missing [optimizer] block".into()))?;
    let problem = opt.problem(&spec, cfg.seed())?;
    let result = optimize(&problem)?;
    println!("objective {:.3e}", result.objective);
    println!("alpha {:.6} reflectivities {:?}", result.alpha, result.reflectivities);
    println!("pnd fidelity {:.6}, success probability {:.6e}", result.fidelity_vs_target, result.success_probability);
    if let Some(f) = result.quantum_fidelity {
        println!("rotation fidelity {f:.6}");
    }
    out.json("optimize.json", header, &result)?;
    let l = problem.l;
    let mut columns: Vec<String> = ["restart", "origin", "objective", "success_probability", "rotation_fidelity", "evals"]
        .map(String::from)
        .to_vec();
    for prefix in ["start", "best"] {
        columns.push(format!("{prefix}_alpha"));
        columns.extend((1..=l).map(|i| format!("{prefix}_R_{i}")));
    }
    let row = |t: &RestartTrace| {
        let mut r = vec![
            t.index.to_string(),
            serde_json::to_value(t.origin).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            num(t.objective),
            num(t.success_probability),
            t.quantum_fidelity.map(num).unwrap_or_default(),
            t.evals.to_string(),
        ];
        r.extend(t.start.iter().chain(&t.params).map(|v| num(*v)));
        r
    };
    out.csv("trace.csv", header, &columns, result.trace.iter().map(row))?;
    Ok(())
}

pub fn scan(cfg: &RunConfig, out: &mut OutputDir, header: &Header) -> CliResult {
    let block = cfg
        .scan
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("missing [scan] block".into()))?;
    let (alphas, rs, budget) = block.grids()?;
    let records = grid_scan(block.l, &alphas, &rs, budget)?;
    let l = block.l;
    let mut columns = vec!["alpha".to_string()];
    columns.extend((1..=l).map(|i| format!("R_{i}")));
    columns.extend((0..=l).map(|p| format!("A_{p}_sq")));
    columns.push("success_probability".into());
    let degenerate = records.iter().filter(|r| r.pnd.is_empty()).count();
    out.csv(
        "scan.csv",
        header,
        &columns,
        records.iter().map(|r| {
            let mut row = vec![num(r.alpha)];
            row.extend(r.reflectivities.iter().map(|v| num(*v)));
            if r.pnd.is_empty() {
                row.extend((0..=l).map(|_| "nan".to_string()));
            } else {
                row.extend(r.pnd.iter().map(|v| num(*v)));
            }
            row.push(num(r.success_probability));
            row
        }),
    )?;
    println!("{} grid points ({degenerate} without heralding)", records.len());
    Ok(())
}

pub fn realistic(cfg: &RunConfig, out: &mut OutputDir, header: &Header) -> CliResult {
    let config = cfg.cascade()?;
    let block = cfg
        .realistic
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("missing [realistic] block".into()))?;
    let eta_s = block.eta_s_values()?;
    let cutoff = cfg.cutoff.unwrap_or_else(|| config.policy_cutoff());
    let sweep = eta_s_sweep(&config, block.eta_d, &eta_s, block.povm_terms, cutoff)?;
    let columns = ["eta_s", "fidelity", "success_probability"].map(String::from);
    out.csv(
        "realistic.csv",
        header,
        &columns,
        sweep.iter().map(|p| vec![num(p.eta_s), num(p.fidelity), num(p.success_probability)]),
    )?;
    for p in &sweep {
        println!("eta_s {:.4}  F_R {:.6}  SP {:.6e}", p.eta_s, p.fidelity, p.success_probability);
    }
    Ok(())
}

#[derive(Serialize)]
struct TablesReport {
    checks: Vec<RowCheck>,
    /// Fock rows snapped onto exact `|n⟩` configurations.
    fock_rows: Vec<catalysis_core::reference::FockRowResult>,
    failed: usize,
}

pub fn reproduce_tables(_cfg: &RunConfig, out: &mut OutputDir, header: &Header) -> CliResult {
    let checks = all_checks()?;
    let fock_rows = FOCK_ROWS.iter().map(fock_row_result).collect::<Result<Vec<_>, _>>()?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!(
            "{:<10} {:<9} {:<20} expected {:>12.6e} got {:>12.6e}  {}",
            c.table,
            c.row,
            c.quantity,
            c.expected,
            c.achieved,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    let columns = ["table", "row", "quantity", "expected", "achieved", "tolerance", "relative", "pass"].map(String::from);
    out.csv(
        "tables.csv",
        header,
        &columns,
        checks.iter().map(|c| {
            vec![
                c.table.to_string(),
                c.row.clone(),
                c.quantity.to_string(),
                num(c.expected),
                num(c.achieved),
                num(c.tolerance),
                c.relative.to_string(),
                c.pass.to_string(),
            ]
        }),
    )?;
    let total = checks.len();
    out.json("tables.json", header, &TablesReport { checks, fock_rows, failed })?;
    if failed > 0 {
        return Err(CliError::Tables { failed, total });
    }
    Ok(())
}

#[derive(Serialize)]
struct TargetSummary {
    cutoff: usize,
    mean_photon_number: f64,
    l: Option<usize>,
    qudit_pnd: Option<Vec<f64>>,
    truncation_loss: Option<f64>,
}

pub fn targets(cfg: &RunConfig, out: &mut OutputDir, header: &Header) -> CliResult {
    let block = cfg.target_block()?;
    let cutoff = target_cutoff(block, cfg.cutoff);
    let spec = block.to_spec(cutoff)?;
    let state = spec.state()?;
    let l = block.l();
    let summary = TargetSummary {
        cutoff,
        mean_photon_number: state.mean_photon_number(),
        l,
        qudit_pnd: l.map(|l| spec.qudit_pnd(l)).transpose()?,
        truncation_loss: l.map(|l| spec.qudit_truncation_loss(l)).transpose()?,
    };
    let last = state.pnd().iter().rposition(|p| *p > 1e-12).unwrap_or(0);
    for (n, p) in state.pnd().iter().enumerate().take(last + 1) {
        println!("{n:>4}  {p:.10}");
    }
    out.json("target.json", header, &summary)?;
    let columns = ["n", "re", "im", "probability"].map(String::from);
    out.csv(
        "target.csv",
        header,
        &columns,
        state
            .amps()
            .iter()
            .enumerate()
            .map(|(n, a)| vec![n.to_string(), num(a.re), num(a.im), num(a.norm_sqr())]),
    )?;
    Ok(())
}
