//! Cross-checks of the identities between λ, ℓ, P, τ and ergodic integrals.

use super::duality::optimize_markov;
use super::{t_entropy_radon, Hypotheses, RadonParams};
use crate::complexity::{
    cocycle_spectral_potential, topological_pressure, NetSchedule, PreimageParams,
};
use crate::error::Result;
use crate::measures::{integrate, lebesgue, max_ergodic_average, InvariantMeasure};
use crate::observable::Observable;
use crate::systems::{Subset, SystemKind};
use crate::trace::{ext_f64, fmt_value, EstimateTrace};
use crate::transfer::{
    sft_spectral_oracle, spectral_potential, with_potential, SpectralParams, TransferOperator,
};
use serde::Serialize;
use std::io::Write;

/// Everything needed to check one fixture.
#[derive(Clone, Debug)]
pub struct IdentityBundle {
    pub fixture: String,
    pub operator: TransferOperator,
    pub hypotheses: Hypotheses,
    pub potentials: Vec<(String, Observable)>,
    /// Measures for the `τ = τ_Y` rows.
    pub measures: Vec<InvariantMeasure>,
    /// The subset `Y` the compatibility flag refers to.
    pub compatible_subset: Option<Subset>,
    pub n_max: usize,
    pub schedule: NetSchedule,
    pub tolerance: f64,
}

impl IdentityBundle {
    pub fn new(fixture: &str, operator: TransferOperator, hypotheses: Hypotheses) -> Self {
        let schedule = NetSchedule::for_host(&operator.host);
        IdentityBundle {
            fixture: fixture.into(),
            operator,
            hypotheses,
            potentials: vec![("zero".into(), Observable::zero())],
            measures: Vec::new(),
            compatible_subset: None,
            n_max: 20,
            schedule,
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IdentityStatus {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "NOT-APPLICABLE")]
    NotApplicable,
}

impl IdentityStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            IdentityStatus::Pass => "PASS",
            IdentityStatus::Fail => "FAIL",
            IdentityStatus::NotApplicable => "NOT-APPLICABLE",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    pub fixture: String,
    pub identity: String,
    pub sample: String,
    #[serde(with = "ext_f64")]
    pub lhs: f64,
    #[serde(with = "ext_f64")]
    pub rhs: f64,
    #[serde(with = "ext_f64")]
    pub gap: f64,
    pub tolerance: f64,
    pub status: IdentityStatus,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub rows: Vec<IdentityRow>,
    pub traces: Vec<EstimateTrace>,
}

impl IdentityReport {
    pub fn failures(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status == IdentityStatus::Fail)
            .count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "fixture",
            "identity",
            "sample",
            "lhs",
            "rhs",
            "gap",
            "tolerance",
            "status",
            "reason",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.fixture.clone(),
                r.identity.clone(),
                r.sample.clone(),
                fmt_value(r.lhs),
                fmt_value(r.rhs),
                fmt_value(r.gap),
                fmt_value(r.tolerance),
                r.status.as_str().to_string(),
                r.reason.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Missing hypothesis names, empty when all hold.
fn missing(flags: &[(bool, &str)]) -> Vec<String> {
    flags
        .iter()
        .filter(|f| !f.0)
        .map(|f| f.1.to_string())
        .collect()
}

/// One side of an identity, or the error that prevented computing it.
type Side = std::result::Result<f64, String>;

struct RowBuilder<'a> {
    bundle: &'a IdentityBundle,
    rows: Vec<IdentityRow>,
}

impl RowBuilder<'_> {
    fn push(
        &mut self,
        identity: &str,
        sample: &str,
        lhs: Side,
        rhs: Side,
        needs: &[(bool, &str)],
        tol: f64,
    ) {
        let absent = missing(needs);
        let (l, r, err) = match (lhs, rhs) {
            (Ok(l), Ok(r)) => (l, r, None),
            (Err(e), Ok(r)) => (f64::NAN, r, Some(e)),
            (Ok(l), Err(e)) => (l, f64::NAN, Some(e)),
            (Err(e), Err(_)) => (f64::NAN, f64::NAN, Some(e)),
        };
        let gap = if l == r { 0.0 } else { (l - r).abs() };
        let (status, reason) = if !absent.is_empty() {
            (
                IdentityStatus::NotApplicable,
                format!("not certified: {}", absent.join(", ")),
            )
        } else if let Some(e) = err {
            (IdentityStatus::Fail, e)
        } else if gap <= tol {
            (IdentityStatus::Pass, String::new())
        } else {
            (
                IdentityStatus::Fail,
                format!("gap {} exceeds {tol}", fmt_value(gap)),
            )
        };
        self.rows.push(IdentityRow {
            fixture: self.bundle.fixture.clone(),
            identity: identity.into(),
            sample: sample.into(),
            lhs: l,
            rhs: r,
            gap,
            tolerance: tol,
            status,
            reason,
        });
    }
}

/// Runs every identity on every declared potential and reports one row each.
///
/// Both sides are computed even when a hypothesis is missing, so separations
/// outside the hypotheses show up in the numbers; such rows are NOT-APPLICABLE.
pub fn cross_check_identities(bundle: &IdentityBundle) -> Result<IdentityReport> {
    let t = &bundle.operator;
    let host = &t.host;
    let hyp = &bundle.hypotheses;
    let tol = bundle.tolerance;
    let mut traces = Vec::new();
    let mut b = RowBuilder {
        bundle,
        rows: Vec::new(),
    };
    for (label, psi) in &bundle.potentials {
        let tp = with_potential(t, psi)?;
        let weight = tp.branch_weight();
        let lambda = if host.is_symbolic() && weight.is_locally_constant() {
            sft_spectral_oracle(host, &weight)
        } else {
            spectral_potential(&tp, &SpectralParams::new(bundle.n_max)).map(|tr| {
                let v = tr.headline;
                traces.push(tr.with_meta("sample", label));
                v
            })
        };
        let ell =
            cocycle_spectral_potential(t, psi, &PreimageParams::new(bundle.n_max)).map(|tr| {
                let v = tr.headline;
                traces.push(tr.with_meta("sample", label));
                v
            });
        let pressure = topological_pressure(host, Some(&weight), &bundle.schedule).map(|e| {
            let v = e.headline();
            traces.push(e.spanning.with_meta("sample", label));
            v
        });
        let (lambda, ell, pressure): (Side, Side, Side) = (
            lambda.map_err(|e| e.to_string()),
            ell.map_err(|e| e.to_string()),
            pressure.map_err(|e| e.to_string()),
        );
        b.push(
            "lambda(psi) = ell(rho e^psi)",
            label,
            lambda.clone(),
            ell.clone(),
            &[(
                hyp.cocycle_continuous || hyp.local_homeo_on_x_alpha,
                "cocycle_continuous",
            )],
            tol,
        );
        let press_needs = [
            (hyp.local_homeo_on_x_alpha, "local_homeo_on_x_alpha"),
            (hyp.non_contracting, "non_contracting"),
        ];
        b.push(
            "lambda(psi) = P(psi + ln rho)",
            label,
            lambda.clone(),
            pressure.clone(),
            &press_needs,
            tol,
        );
        b.push(
            "ell(g) = P(ln g rho)",
            label,
            ell.clone(),
            pressure.clone(),
            &press_needs,
            tol,
        );
        let log_weight = weight.clone().ln();
        let integral_max = match max_ergodic_average(host, &log_weight) {
            Ok(m) => Ok(m.value),
            Err(e) => match &host.kind {
                // An irrational rotation is uniquely ergodic.
                SystemKind::CircleRotation { .. } => {
                    lebesgue(host).and_then(|mu| integrate(&mu, &log_weight))
                }
                _ => Err(e),
            },
        };
        b.push(
            "ell(g) = max int ln(g rho)",
            label,
            ell.clone(),
            integral_max.map_err(|e| e.to_string()),
            &[
                (hyp.omega_zero, "omega_zero"),
                (hyp.cocycle_continuous, "cocycle_continuous"),
            ],
            tol,
        );
        let free_energy = if host.is_symbolic() {
            optimize_markov(t, psi, hyp)
                .map(|o| o.value)
                .map_err(|e| e.to_string())
        } else {
            Err("the Markov family lives on shift hosts".to_string())
        };
        b.push(
            "ell(g) = max (int ln(g rho) + h)",
            label,
            ell.clone(),
            free_energy,
            &[
                (hyp.local_homeo_on_x_alpha, "local_homeo_on_x_alpha"),
                (hyp.non_contracting, "non_contracting"),
                (hyp.entropy_usc, "entropy_usc"),
                (host.is_symbolic(), "shift host"),
            ],
            tol,
        );
    }
    if let Some(y) = &bundle.compatible_subset {
        let ty = TransferOperator {
            host: host.restricted(y.clone()),
            ..t.clone()
        };
        for (i, mu) in bundle.measures.iter().enumerate() {
            let params = RadonParams::new(bundle.n_max.min(6));
            let supported = mu.supported_in(y).unwrap_or(false);
            b.push(
                "tau = tau_Y",
                &format!("measure {i}"),
                t_entropy_radon(t, mu, &params)
                    .map(|e| e.headline)
                    .map_err(|e| e.to_string()),
                t_entropy_radon(&ty, mu, &params)
                    .map(|e| e.headline)
                    .map_err(|e| e.to_string()),
                &[
                    (hyp.x_alpha_compatible, "X_alpha_compatible"),
                    (supported, "measure supported in Y"),
                ],
                1e-3,
            );
        }
    }
    Ok(IdentityReport {
        rows: b.rows,
        traces,
    })
}
