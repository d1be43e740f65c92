use std::path::{Path, PathBuf};

use qgame::models::GameModel;
use qgame::sa_engine::{run_with_observer, Trajectory};
use qgame::verify::{epsilon_gap, estimate_values, mm1_oracles, Mm1Oracle};
use qgame::{BehavioralStrategy, SimplexPoint};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{
    fmt_f64, output_path, strategy_columns, trajectory_csv, write_atomic, Summary, Verification,
};

/// Verifies `strategy` with the `[verify]` settings. The verification seed
/// falls back to `seed` when the config leaves it unset.
pub fn verify_strategy(
    cfg: &ExperimentConfig,
    model: &dyn GameModel,
    strategy: &BehavioralStrategy,
    seed: u64,
    target: f64,
) -> Result<Verification, CliError> {
    let vcfg = cfg.verify_config(seed)?;
    let estimate = estimate_values(model, strategy, &vcfg)?;
    let certificate = epsilon_gap(&estimate, strategy)?.with_target(target);
    Ok(Verification { estimate, certificate })
}

fn target(cfg: &ExperimentConfig, override_: Option<f64>) -> Result<f64, CliError> {
    let t = override_.unwrap_or(cfg.verify.target_eps);
    if t.is_finite() && t >= 0.0 {
        Ok(t)
    } else {
        Err(CliError::config_field("target_eps", format!("must be finite and >= 0, got {t}")))
    }
}

/// Turns a finished verification into the not-certified error when it
/// misses its target.
pub fn require_certified(v: &Verification) -> Result<(), CliError> {
    match (v.certificate.certified, v.certificate.target) {
        (Some(false), Some(t)) => Err(CliError::NotCertified { epsilon_hi: v.certificate.epsilon_hi, target: t }),
        _ => Ok(()),
    }
}

pub struct SolveOutcome {
    pub trajectory: Trajectory,
    pub verification: Option<Verification>,
    pub csv: PathBuf,
    pub summary: PathBuf,
}

/// Runs the SA iteration and writes `<prefix>_trajectory.csv` and
/// `<prefix>_summary.json`. Nothing is written when the run fails.
pub fn solve(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    certify: bool,
    target_eps: Option<f64>,
) -> Result<SolveOutcome, CliError> {
    let model = cfg.build_model()?;
    let run = cfg.run_config_for(model.as_ref())?;
    let trajectory = run_with_observer(model.as_ref(), &run, |_, _| {})?;
    let verification = if certify {
        let t = target(cfg, target_eps)?;
        Some(verify_strategy(cfg, model.as_ref(), &trajectory.final_strategy, cfg.run.seed, t)?)
    } else {
        None
    };

    let csv = output_path(out_dir, cfg.prefix(), "trajectory.csv");
    let summary_path = output_path(out_dir, cfg.prefix(), "summary.json");
    let bytes = trajectory_csv(&trajectory.points, model.signal_count(), model.action_count())?;
    let summary = Summary {
        command: "solve".into(),
        final_strategy: trajectory.final_strategy.clone(),
        totals: Some(trajectory.totals.clone()),
        verification: verification.clone(),
        config: Some(cfg.clone()),
    };
    write_atomic(&csv, &bytes)?;
    write_atomic(&summary_path, &summary.to_json()?)?;
    Ok(SolveOutcome { trajectory, verification, csv, summary: summary_path })
}

/// Accepts `0.4,0.6` (one mixed action for every signal), `[0.4, 0.6]`, or
/// `[[1, 0], [0.3, 0.7], ...]` (one per signal).
pub fn parse_strategy(text: &str, model: &dyn GameModel) -> Result<BehavioralStrategy, CliError> {
    let bad = |m: String| CliError::config_field("strategy", m);
    let t = text.trim();
    let strategy = if t.starts_with("[[") {
        let rows: Vec<Vec<f64>> = serde_json::from_str(t).map_err(|e| bad(e.to_string()))?;
        BehavioralStrategy::new(
            rows.into_iter().map(SimplexPoint::new).collect::<Result<_, _>>().map_err(|e| bad(e.to_string()))?,
        )
    } else {
        let row: Vec<f64> = if t.starts_with('[') {
            serde_json::from_str(t).map_err(|e| bad(e.to_string()))?
        } else {
            t.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("{v:?}: {e}"))))
                .collect::<Result<_, _>>()?
        };
        let p = SimplexPoint::new(row).map_err(|e| bad(e.to_string()))?;
        BehavioralStrategy::constant(p, model.signal_count())
    }
    .map_err(|e| bad(e.to_string()))?;
    strategy.check_shape(model.action_count(), model.signal_count()).map_err(|e| bad(e.to_string()))?;
    Ok(strategy)
}

pub fn verify(
    cfg: &ExperimentConfig,
    strategy: &BehavioralStrategy,
    out_dir: &Path,
    target_eps: Option<f64>,
) -> Result<(Verification, PathBuf), CliError> {
    let model = cfg.build_model()?;
    strategy.check_shape(model.action_count(), model.signal_count())?;
    let t = target(cfg, target_eps)?;
    let v = verify_strategy(cfg, model.as_ref(), strategy, cfg.run.seed, t)?;
    let path = output_path(out_dir, cfg.prefix(), "verify.json");
    let summary = Summary {
        command: "verify".into(),
        final_strategy: strategy.clone(),
        totals: None,
        verification: Some(v.clone()),
        config: Some(cfg.clone()),
    };
    write_atomic(&path, &summary.to_json()?)?;
    Ok((v, path))
}

pub fn oracle(lambda: Option<f64>, mu: f64, reward: f64, cost: f64) -> Result<Mm1Oracle, CliError> {
    for (name, v) in [("mu", Some(mu)), ("reward", Some(reward)), ("cost", Some(cost)), ("lambda", lambda)] {
        if let Some(v) = v {
            if !v.is_finite() {
                return Err(CliError::Domain(format!("outside oracle domain: {name} must be finite, got {v}")));
            }
        }
    }
    Ok(mm1_oracles(lambda, mu, reward, cost)?)
}

pub struct SweepRow {
    pub seed: u64,
    pub gamma0: f64,
    pub result: Result<(Trajectory, Option<Verification>), CliError>,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub csv: PathBuf,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_err()).count()
    }
}

/// Runs the seed × `gamma0` grid in parallel and writes one row per run, in
/// grid order, to `<prefix>_sweep.csv`. Failed runs are reported in the
/// `error` column instead of aborting the sweep.
pub fn sweep(cfg: &ExperimentConfig, out_dir: &Path, target_eps: Option<f64>) -> Result<SweepOutcome, CliError> {
    let model = cfg.build_model()?;
    let base = cfg.run_config_for(model.as_ref())?;
    let certify = cfg.sweep.as_ref().is_some_and(|s| s.certify);
    let t = target(cfg, target_eps)?;
    let grid = cfg.sweep_grid();

    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&(seed, gamma0)| {
            let mut run = base.clone();
            run.seed = seed;
            run.step.gamma0 = gamma0;
            let result = run
                .validate()
                .map_err(CliError::from)
                .and_then(|_| Ok(run_with_observer(model.as_ref(), &run, |_, _| {})?))
                .and_then(|traj| {
                    let v = if certify {
                        Some(verify_strategy(cfg, model.as_ref(), &traj.final_strategy, seed, t)?)
                    } else {
                        None
                    };
                    Ok((traj, v))
                });
            SweepRow { seed, gamma0, result }
        })
        .collect();

    let (signals, actions) = (model.signal_count(), model.action_count());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["seed", "gamma0", "status", "arrivals", "cap_hits", "last_cap_hit"].map(String::from).to_vec();
    header.extend(strategy_columns(signals, actions));
    header.extend(["epsilon_hat", "epsilon_hi", "certified", "error"].map(String::from));
    w.write_record(&header)?;
    for row in &rows {
        let mut rec = vec![row.seed.to_string(), fmt_f64(row.gamma0)];
        match &row.result {
            Ok((traj, v)) => {
                rec.push("ok".into());
                rec.push(traj.totals.arrivals.to_string());
                rec.push(traj.totals.cap_hits.to_string());
                rec.push(traj.totals.last_cap_hit.map(|n| n.to_string()).unwrap_or_default());
                rec.extend(traj.final_strategy.flatten().into_iter().map(fmt_f64));
                match v {
                    Some(v) => {
                        rec.push(fmt_f64(v.certificate.epsilon_hat));
                        rec.push(fmt_f64(v.certificate.epsilon_hi));
                        rec.push(v.certificate.certified.map(|c| c.to_string()).unwrap_or_default());
                    }
                    None => rec.extend([String::new(), String::new(), String::new()]),
                }
                rec.push(String::new());
            }
            Err(e) => {
                rec.push(format!("exit_{}", e.exit_code()));
                rec.extend(std::iter::repeat_n(String::new(), 3 + signals * actions + 3));
                rec.push(e.to_string());
            }
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    let csv = output_path(out_dir, cfg.prefix(), "sweep.csv");
    write_atomic(&csv, &bytes)?;
    Ok(SweepOutcome { rows, csv })
}
