use std::path::Path;

use bubblekit_core::bubbles::DEFAULT_TAU;
use bubblekit_core::constants::{compute_constants, DEFAULT_TOL};
use bubblekit_core::predictor::{
    mu_partition, predict, sweep, BlowupScenario, BubbleKind, ScenarioConfig, DEFAULT_MU_THRESHOLD,
};
use bubblekit_core::verify::run_suite;
use bubblekit_core::vortex::{find_critical_points, KirchhoffRouth};
use bubblekit_core::{constants, Error};
use nalgebra::DMatrix;

use crate::args::{load_json, require, Cli, Command, RunConfig};
use crate::table::{num, Table};
use crate::Failure;

const DEFAULT_STARTS: usize = 200;

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e.to_string())
}

pub fn dispatch(cli: &Cli, run: &RunConfig) -> Result<Table, Failure> {
    match run.command {
        Command::Constants => constants_cmd(cli, run),
        Command::Vortex => vortex_cmd(cli, run),
        Command::Predict => predict_cmd(cli),
        Command::Sweep => sweep_cmd(cli),
        Command::Verify => verify_cmd(run),
    }
}

fn check_dimension(n: usize) -> Result<usize, Failure> {
    if n < 5 {
        return Err(Failure::Config(format!("--n {n}: dimension must be at least 5")));
    }
    Ok(n)
}

fn constants_cmd(cli: &Cli, run: &RunConfig) -> Result<Table, Failure> {
    let n = check_dimension(require(cli.n, "n", "constants")?)?;
    let tol = run.tolerances.get("quadrature");
    let table = if tol == DEFAULT_TOL {
        (*constants::constants(n).map_err(runtime)?).clone()
    } else {
        compute_constants(n, tol).map_err(runtime)?
    };
    let mut out = Table::new(["name", "value", "error_estimate"]);
    for (name, value, err) in table.rows() {
        out.push(vec![name.to_string(), num(value), num(err)]);
    }
    Ok(out)
}

fn load_q(path: &Path, n: usize) -> Result<DMatrix<f64>, Failure> {
    let rows: Vec<Vec<f64>> = load_json(path)?;
    let d = n - 1;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Failure::Config(format!("{}: Q must be a {d}x{d} matrix for n = {n}", path.display())));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn vortex_cmd(cli: &Cli, run: &RunConfig) -> Result<Table, Failure> {
    let n = check_dimension(require(cli.n, "n", "vortex")?)?;
    let m = require(cli.m, "m", "vortex")?;
    if m == 0 {
        return Err(Failure::Config("--m must be at least 1".into()));
    }
    let path = cli.q.as_deref().ok_or_else(|| Failure::Config("`vortex` needs --Q".into()))?;
    let q = load_q(path, n)?;
    let kr = KirchhoffRouth::new(n, q).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let eig = kr.q().clone().symmetric_eigenvalues();
    if eig.iter().any(|l| l.abs() <= 1e-12 * kr.q_norm().max(1.0)) {
        return Err(Failure::Config(format!("{}: Q is degenerate", path.display())));
    }
    let starts = cli.starts.unwrap_or(DEFAULT_STARTS);
    let search = find_critical_points(&kr, m, starts, run.seed).map_err(runtime)?;
    let dg = search.diagnostics;
    eprintln!(
        "starts {} converged {} diverged {} stalled {} collapsed {} virial-rejected {} duplicates {}",
        dg.starts, dg.converged, dg.diverged, dg.stalled, dg.collapsed, dg.virial_rejected, dg.duplicates
    );
    let mut header = vec!["energy".to_string(), "virial_residual".into(), "morse_index".into()];
    for i in 1..=m {
        for k in 1..n {
            header.push(format!("xi_{i}_{k}"));
        }
    }
    let mut out = Table::new(header);
    for p in &search.points {
        let mut row = vec![num(p.energy), num(p.virial_residual), p.morse_index.to_string()];
        for x in &p.xi {
            row.extend(x.iter().map(|v| num(*v)));
        }
        out.push(row);
    }
    Ok(out)
}

fn load_scenario(cli: &Cli, command: &str) -> Result<BlowupScenario, Failure> {
    let path = cli.config.as_deref().ok_or_else(|| Failure::Config(format!("`{command}` needs --config")))?;
    let cfg: ScenarioConfig = load_json(path)?;
    BlowupScenario::from_config(cfg).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn check_eps(eps: f64) -> Result<f64, Failure> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Failure::Config(format!("eps = {eps} must be positive")));
    }
    Ok(eps)
}

fn kind_label(kind: BubbleKind) -> String {
    match kind {
        BubbleKind::Interior { .. } => "interior".into(),
        BubbleKind::BoundarySimple { .. } => "boundary".into(),
        BubbleKind::Cluster { cluster, .. } => format!("cluster{cluster}"),
    }
}

fn predict_cmd(cli: &Cli) -> Result<Table, Failure> {
    let scenario = load_scenario(cli, "predict")?;
    let eps = check_eps(require(cli.eps, "eps", "predict")?)?;
    let n = scenario.dim();
    let consts = constants::constants(n).map_err(runtime)?;
    let p = predict(&scenario, eps, &consts, DEFAULT_TAU).map_err(runtime)?;
    let part = mu_partition(&p.bubbles, DEFAULT_MU_THRESHOLD).map_err(runtime)?;
    let mut class = vec![0; p.bubbles.len()];
    for (c, members) in part.classes.iter().enumerate() {
        for &i in members {
            class[i] = c;
        }
    }
    let mut header = vec!["index".to_string(), "type".into()];
    header.extend((1..=n + 1).map(|k| format!("a_{k}")));
    header.extend(["lambda", "alpha", "mu", "mu_class", "mu_threshold"].map(String::from));
    let mut out = Table::new(header);
    for (i, b) in p.bubbles.iter().enumerate() {
        let mut row = vec![i.to_string(), kind_label(p.kinds[i])];
        row.extend(b.a.coords().iter().map(|v| num(*v)));
        row.extend([num(b.lambda), num(b.alpha), num(p.mu[i]), class[i].to_string(), num(part.threshold)]);
        out.push(row);
    }
    Ok(out)
}

fn sweep_cmd(cli: &Cli) -> Result<Table, Failure> {
    let scenario = load_scenario(cli, "sweep")?;
    let list = match (&cli.eps_list, cli.eps) {
        (Some(l), _) => l.clone(),
        (None, Some(e)) => vec![e],
        (None, None) => return Err(Failure::Config("`sweep` needs --eps-list".into())),
    };
    if list.is_empty() {
        return Err(Failure::Config("--eps-list is empty".into()));
    }
    for &e in &list {
        check_eps(e)?;
    }
    let consts = constants::constants(scenario.dim()).map_err(runtime)?;
    let results = sweep(&scenario, &list, &consts).map_err(runtime)?;
    let mut out = Table::new([
        "eps",
        "index",
        "type",
        "lambda",
        "leading_term",
        "residual_e",
        "residual_f",
        "ratio_e",
        "ratio_f",
        "theoretical_remainder",
        "remainder_f",
        "chart_correction",
        "roundtrip_error",
        "pairing_value",
        "pairing_bound",
    ]);
    for (p, r) in &results {
        for row in &r.rows {
            let i = row.index;
            let mut cells = vec![
                num(r.eps),
                i.to_string(),
                kind_label(row.kind),
                num(p.bubbles[i].lambda),
                num(row.leading_term),
                num(row.residual_e),
                num(row.residual_f),
                num(row.ratio_e),
                num(row.ratio_f),
                num(row.theoretical_remainder),
                num(row.remainder_f),
            ];
            if let BubbleKind::Cluster { cluster, member } = row.kind {
                let pl = &p.cluster_offsets[cluster];
                let pc = &r.pairings[cluster];
                cells.extend([
                    num(pl.chart_correction[member]),
                    num(pl.roundtrip_error[member]),
                    num(pc.value),
                    num(pc.bound),
                ]);
            } else {
                cells.extend(std::iter::repeat_n(String::new(), 4));
            }
            out.push(cells);
        }
    }
    Ok(out)
}

fn verify_cmd(run: &RunConfig) -> Result<Table, Failure> {
    let checks = run_suite(&run.tolerances);
    let mut out = Table::new(["criterion", "check", "passed", "detail"]);
    for c in &checks {
        out.push(vec![c.criterion.to_string(), c.name.to_string(), c.passed.to_string(), c.detail.clone()]);
    }
    if checks.iter().all(|c| c.passed) {
        Ok(out)
    } else {
        Err(Failure::Verify(out))
    }
}
