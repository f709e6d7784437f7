//! Executes an [`ExperimentConfig`] and writes its CSV tables and JSON summary.

use super::config::{ExperimentConfig, Task};
use super::fixtures::{list_fixtures, load_fixture, Fixture, FixtureInfo};
use crate::complexity::{
    cocycle_spectral_potential, forward_entropy, inverse_rami_rate, topological_entropy,
    topological_pressure, NetEstimate, NetSchedule, PreimageParams,
};
use crate::error::{Error, Result};
use crate::measures::{essential_set, EssentialSetParams};
use crate::observable::Observable;
use crate::tentropy::{
    cross_check_identities, t_entropy_closed_form, t_entropy_partition, t_entropy_radon,
    verify_variational_principle, IdentityBundle, RadonParams,
};
use crate::trace::{fmt_value, EstimateTrace};
use crate::transfer::{
    check_compatibility, perron_frobenius, sft_spectral_oracle, spectral_potential, with_potential,
    CompatibilityParams, SpectralParams,
};
use serde_json::{json, Value};
use std::path::PathBuf;

/// Files written and the summary of one run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary_path: PathBuf,
    pub files: Vec<PathBuf>,
    /// Number of FAIL rows (identity and variational-principle tasks).
    pub failures: usize,
    pub summary: Value,
}

/// Largest `n` used for t-entropy partitions; the atom count grows like `(sheets)^n`.
const TAU_N_MAX: usize = 6;

struct Output {
    files: Vec<(String, Vec<u8>)>,
    failures: usize,
}

impl Output {
    fn csv(&mut self, name: String, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name, buf));
        Ok(())
    }
}

fn inline_fixture(cfg: &ExperimentConfig) -> Result<Fixture> {
    let host = cfg.system.clone().expect("validated");
    host.validate()?;
    let operator = perron_frobenius(
        &host,
        cfg.cocycle
            .clone()
            .unwrap_or_else(|| Observable::constant(1.0)),
    )?;
    Ok(Fixture {
        info: FixtureInfo {
            name: "inline",
            description: "inline system descriptor",
            hypotheses: cfg.hypotheses.clone().unwrap_or_default(),
            factors: Vec::new(),
        },
        host,
        operator,
        measures: Vec::new(),
        potentials: vec![("zero".into(), Observable::zero())],
        compat_subset: None,
    })
}

fn targets(cfg: &ExperimentConfig) -> Result<Vec<Fixture>> {
    let mut out = match &cfg.fixture {
        None => vec![inline_fixture(cfg)?],
        Some(name) => match list_fixtures("").into_iter().find(|f| f.name == name) {
            Some(info) if !info.factors.is_empty() => info
                .factors
                .iter()
                .map(|f| load_fixture(f))
                .collect::<Result<_>>()?,
            _ => vec![load_fixture(name)?],
        },
    };
    for f in &mut out {
        if let Some(c) = &cfg.cocycle {
            f.operator = perron_frobenius(&f.host, c.clone())?;
        }
        if !cfg.potentials.is_empty() {
            f.potentials = cfg
                .potentials
                .iter()
                .map(|p| (p.name.clone(), p.observable.clone()))
                .collect();
        }
    }
    Ok(out)
}

fn schedule(cfg: &ExperimentConfig, f: &Fixture) -> Result<NetSchedule> {
    let s = NetSchedule::for_host(&f.host).with_n_max(cfg.n_max)?;
    match &cfg.eps_ladder {
        Some(l) => s.with_eps(l.clone()),
        None => Ok(s),
    }
}

fn net_summary(e: &NetEstimate) -> Value {
    json!({
        "headline": fmt_value(e.headline()),
        "headline_bound": e.spanning.headline_bound,
        "lower_companion": fmt_value(e.lower_companion()),
        "headline_epsilon": e.headline_epsilon,
        "exact_counts": e.exact_counts,
        "method": e.spanning.method,
    })
}

fn trace_summary(t: &EstimateTrace) -> Value {
    json!({
        "headline": fmt_value(t.headline),
        "headline_bound": t.headline_bound,
        "secondary": t.secondary.map(fmt_value),
        "method": t.method,
        "extrapolation": t.extrapolation,
    })
}

fn err_value(e: &Error) -> Value {
    json!({ "error": e.to_string() })
}

fn run_target(
    cfg: &ExperimentConfig,
    f: &Fixture,
    prefix: &str,
    out: &mut Output,
) -> Result<Value> {
    let host = &f.host;
    let hyp = &f.info.hypotheses;
    Ok(match cfg.task {
        Task::Entropy => {
            let e = topological_entropy(host, &schedule(cfg, f)?)?;
            out.csv(format!("{prefix}.csv"), |w| e.write_csv(w))?;
            net_summary(&e)
        }
        Task::Gamma => {
            let e = forward_entropy(host, &schedule(cfg, f)?)?;
            out.csv(format!("{prefix}.csv"), |w| e.write_csv(w))?;
            net_summary(&e)
        }
        Task::Omega => {
            let t = inverse_rami_rate(host, &PreimageParams::new(cfg.n_max))?;
            out.csv(format!("{prefix}.csv"), |w| t.write_csv(w))?;
            trace_summary(&t)
        }
        Task::Pressure | Task::Lambda | Task::Ell => {
            let mut rows = Vec::new();
            for (k, (label, psi)) in f.potentials.iter().enumerate() {
                let tp = with_potential(&f.operator, psi)?;
                let weight = tp.branch_weight();
                let name = format!("{prefix}_{k}.csv");
                let mut v = match cfg.task {
                    Task::Pressure => {
                        let e = topological_pressure(host, Some(&weight), &schedule(cfg, f)?)?;
                        out.csv(name, |w| e.write_csv(w))?;
                        net_summary(&e)
                    }
                    Task::Lambda => {
                        let t = spectral_potential(&tp, &SpectralParams::new(cfg.n_max))?;
                        out.csv(name, |w| t.write_csv(w))?;
                        let mut v = trace_summary(&t);
                        if host.is_symbolic() && weight.is_locally_constant() {
                            v["matrix_oracle"] =
                                json!(fmt_value(sft_spectral_oracle(host, &weight)?));
                        }
                        v
                    }
                    _ => {
                        let t = cocycle_spectral_potential(
                            &f.operator,
                            psi,
                            &PreimageParams::new(cfg.n_max),
                        )?;
                        out.csv(name, |w| t.write_csv(w))?;
                        trace_summary(&t)
                    }
                };
                v["potential"] = json!(label);
                rows.push(v);
            }
            Value::Array(rows)
        }
        Task::Tau => {
            let mut rows = Vec::new();
            let n_max = cfg.n_max.min(TAU_N_MAX);
            for (k, mu) in f.measures.iter().enumerate() {
                let mut v = json!({ "measure": mu.variant_name() });
                match t_entropy_partition(&f.operator, mu, cfg.depth, n_max) {
                    Ok(e) => {
                        out.csv(format!("{prefix}_{k}_partition.csv"), |w| e.write_csv(w))?;
                        v["partition"] = json!({ "headline": fmt_value(e.headline), "bound": e.bound, "detail": e.detail });
                    }
                    Err(e) => v["partition"] = err_value(&e),
                }
                match t_entropy_radon(&f.operator, mu, &RadonParams::new(n_max)) {
                    Ok(e) => {
                        out.csv(format!("{prefix}_{k}_radon.csv"), |w| e.write_csv(w))?;
                        v["radon"] =
                            json!({ "headline": fmt_value(e.headline), "detail": e.detail });
                    }
                    Err(e) => v["radon"] = err_value(&e),
                }
                v["closed_form"] = match t_entropy_closed_form(&f.operator, mu, hyp) {
                    Ok(c) => json!({ "value": fmt_value(c.value), "class": c.class }),
                    Err(e) => err_value(&e),
                };
                rows.push(v);
            }
            Value::Array(rows)
        }
        Task::Essential => {
            let params = EssentialSetParams {
                depth: cfg.depth.max(1),
                ..Default::default()
            };
            let e = essential_set(&host.unrestricted(), &params)?;
            out.csv(format!("{prefix}.csv"), |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(["point"])?;
                for p in &e.points {
                    c.write_record([p.to_string()])?;
                }
                c.flush()?;
                Ok(())
            })?;
            serde_json::to_value(&e)?
        }
        Task::Compat => {
            let y = f
                .compat_subset
                .clone()
                .or_else(|| host.restriction.clone())
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "fixture '{}' declares no subset to check",
                        f.info.name
                    ))
                })?;
            let op = crate::transfer::TransferOperator {
                host: host.unrestricted(),
                ..f.operator.clone()
            };
            serde_json::to_value(check_compatibility(
                &op,
                &y,
                &CompatibilityParams::default(),
            )?)?
        }
        Task::Vp => {
            let r = verify_variational_principle(
                &f.operator,
                &f.potentials,
                &f.measures,
                hyp,
                1e-3,
                cfg.n_max,
            )?;
            out.failures += r.rows.iter().filter(|row| !row.pass).count();
            out.csv(format!("{prefix}.csv"), |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record([
                    "potential",
                    "lambda",
                    "family_max",
                    "optimized",
                    "gap",
                    "tolerance",
                    "status",
                ])?;
                for row in &r.rows {
                    c.write_record([
                        row.psi.clone(),
                        fmt_value(row.lambda),
                        fmt_value(row.family_max),
                        row.optimized.map(fmt_value).unwrap_or_default(),
                        fmt_value(row.gap),
                        fmt_value(r.tolerance),
                        if row.pass { "PASS" } else { "FAIL" }.into(),
                    ])?;
                }
                c.flush()?;
                Ok(())
            })?;
            serde_json::to_value(&r)?
        }
        Task::Identities => {
            let mut bundle = IdentityBundle::new(f.info.name, f.operator.clone(), hyp.clone());
            bundle.potentials = f.potentials.clone();
            bundle.measures = f.measures.clone();
            bundle.compatible_subset = f.compat_subset.clone();
            bundle.n_max = cfg.n_max;
            bundle.schedule = schedule(cfg, f)?;
            let r = cross_check_identities(&bundle)?;
            out.failures += r.failures();
            out.csv(format!("{prefix}.csv"), |w| r.write_csv(w))?;
            serde_json::to_value(&r)?
        }
    })
}

fn headline_of(v: &Value) -> Option<f64> {
    v.get("headline")
        .and_then(Value::as_str)
        .and_then(|s| s.parse().ok())
}

/// Runs the configured task and writes `<out_dir>/<stem>*.csv` and `<out_dir>/<stem>.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let work = || -> Result<(Value, Output)> {
        let targets = targets(cfg)?;
        let stem = cfg.stem();
        let mut out = Output {
            files: Vec::new(),
            failures: 0,
        };
        let mut results = serde_json::Map::new();
        let composite = targets.len() > 1;
        for f in &targets {
            let prefix = if composite {
                format!("{stem}_{}", f.info.name)
            } else {
                stem.clone()
            };
            let v = run_target(cfg, f, &prefix, &mut out)?;
            results.insert(f.info.name.to_string(), v);
        }
        let mut summary = json!({
            "fingerprint": cfg.fingerprint(),
            "config": cfg,
            "task": cfg.task.as_str(),
            "hypotheses": targets.iter().map(|f| (f.info.name, &f.info.hypotheses)).collect::<std::collections::BTreeMap<_, _>>(),
            "results": Value::Object(results.clone()),
            "failures": out.failures,
        });
        if composite {
            let combined = results
                .values()
                .filter_map(headline_of)
                .fold(f64::NEG_INFINITY, f64::max);
            summary["combined_max"] = json!(fmt_value(combined));
        }
        Ok((summary, out))
    };
    let (mut summary, out) = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Precondition(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut files = Vec::new();
    for (name, bytes) in &out.files {
        let path = cfg.out_dir.join(name);
        std::fs::write(&path, bytes)?;
        files.push(path);
    }
    summary["files"] = json!(out.files.iter().map(|f| f.0.clone()).collect::<Vec<_>>());
    let summary_path = cfg.out_dir.join(format!("{}.json", cfg.stem()));
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(RunOutcome {
        summary_path,
        files,
        failures: out.failures,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(fixture: &str, task: Task, dir: &std::path::Path) -> ExperimentConfig {
        ExperimentConfig {
            out_dir: dir.to_path_buf(),
            ..ExperimentConfig::for_fixture(fixture, task)
        }
    }

    #[test]
    fn golden_vp_passes_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("golden", Task::Vp, dir.path());
        let a = run(&c).unwrap();
        assert_eq!(a.failures, 0, "{}", a.summary);
        let first: Vec<Vec<u8>> = a
            .files
            .iter()
            .chain([&a.summary_path])
            .map(|p| std::fs::read(p).unwrap())
            .collect();
        let b = run(&c).unwrap();
        let second: Vec<Vec<u8>> = b
            .files
            .iter()
            .chain([&b.summary_path])
            .map(|p| std::fs::read(p).unwrap())
            .collect();
        assert_eq!(first, second);
    }

    #[test]
    fn product_reports_each_factor() {
        let dir = tempfile::tempdir().unwrap();
        let c = ExperimentConfig {
            n_max: 10,
            ..cfg("product", Task::Omega, dir.path())
        };
        let r = run(&c).unwrap();
        let res = &r.summary["results"];
        assert!(res.get("doubling").is_some() && res.get("rotation").is_some());
        let combined: f64 = r.summary["combined_max"].as_str().unwrap().parse().unwrap();
        assert!((combined - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn inline_system_runs() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            r#"{{"system": {{"variant": "finite_map", "image": [1, 2, 0]}}, "task": "omega", "out_dir": {:?}}}"#,
            dir.path()
        );
        let c = ExperimentConfig::from_json(&text).unwrap();
        let r = run(&c).unwrap();
        assert_eq!(r.summary["results"]["inline"]["headline"], "0");
    }
}
