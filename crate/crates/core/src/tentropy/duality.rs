//! Variational principle and Legendre duality checks.

use super::{best_t_entropy, t_entropy_closed_form, Hypotheses, TMethod};
use crate::error::{Error, Result};
use crate::measures::{integrate, markov_measure, InvariantMeasure};
use crate::observable::Observable;
use crate::trace::ext_f64;
use crate::transfer::spectral::{effective_transitions, live_symbols};
use crate::transfer::{
    sft_spectral_oracle, spectral_potential, with_potential, SpectralParams, TransferOperator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// `λ(ψ)`: the matrix oracle when the host is symbolic and the weight locally
/// constant, otherwise the subadditive trace headline.
pub fn lambda_of(t: &TransferOperator, psi: &Observable, n_max: usize) -> Result<f64> {
    let tp = with_potential(t, psi)?;
    let weight = tp.branch_weight();
    if t.host.is_symbolic() && weight.is_locally_constant() {
        return sft_spectral_oracle(&t.host, &weight);
    }
    Ok(spectral_potential(&tp, &SpectralParams::new(n_max))?.headline)
}

/// Best 1-step Markov measure for `μ[ψ] + τ(μ)`, with τ in closed form.
#[derive(Clone, Debug, Serialize)]
pub struct MarkovOptimum {
    #[serde(with = "ext_f64")]
    pub value: f64,
    pub transition: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Maximizes `μ[ψ] + τ(μ)` over 1-step Markov measures on the admissible transitions.
///
/// Rows are parametrized by softmax logits and improved by coordinate ascent with
/// an adaptive step. Needs the closed form for τ to apply.
pub fn optimize_markov(
    t: &TransferOperator,
    psi: &Observable,
    hyp: &Hypotheses,
) -> Result<MarkovOptimum> {
    if !t.host.is_symbolic() {
        return Err(Error::Precondition(
            "the Markov family lives on shift hosts".into(),
        ));
    }
    let trans = effective_transitions(&t.host)?;
    let live = live_symbols(&trans);
    let k = trans.len();
    let edges: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|&(i, j)| live[i] && live[j] && trans[i][j] == 1)
        .collect();
    let objective = |logits: &[f64]| -> Result<(f64, Vec<Vec<f64>>)> {
        let p = softmax_rows(k, &edges, logits, &live);
        let mu = markov_measure(&t.host, p.clone())?;
        let tau = t_entropy_closed_form(t, &mu, hyp)?.value;
        Ok((integrate(&mu, psi)? + tau, p))
    };
    let mut logits = vec![0.0; edges.len()];
    let (mut best, mut transition) = objective(&logits)?;
    let mut step = 1.0;
    let mut sweeps = 0;
    while step > 1e-8 && sweeps < 2000 {
        sweeps += 1;
        let mut improved = false;
        for c in 0..logits.len() {
            for dir in [1.0, -1.0] {
                let mut trial = logits.clone();
                trial[c] += dir * step;
                if let Ok((v, p)) = objective(&trial) {
                    if v > best + 1e-15 {
                        best = v;
                        transition = p;
                        logits = trial;
                        improved = true;
                        break;
                    }
                }
            }
        }
        step = if improved { step * 1.5 } else { step * 0.5 };
    }
    Ok(MarkovOptimum {
        value: best,
        transition,
        sweeps,
    })
}

fn softmax_rows(
    k: usize,
    edges: &[(usize, usize)],
    logits: &[f64],
    live: &[bool],
) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; k]; k];
    for i in 0..k {
        let row: Vec<(usize, f64)> = edges
            .iter()
            .zip(logits)
            .filter(|(e, _)| e.0 == i)
            .map(|(e, &l)| (e.1, l))
            .collect();
        if row.is_empty() || !live[i] {
            // Dead symbols keep a self-loop so the matrix stays stochastic; they carry no mass.
            p[i][i] = 1.0;
            continue;
        }
        let top = row.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|r| (r.1 - top).exp()).sum();
        for &(j, l) in &row {
            p[i][j] = (l - top).exp() / z;
        }
    }
    p
}

#[derive(Clone, Debug, Serialize)]
pub struct VpRow {
    pub psi: String,
    #[serde(with = "ext_f64")]
    pub lambda: f64,
    /// `max` over the declared family of `μ[ψ] + τ(μ)`.
    #[serde(with = "ext_f64")]
    pub family_max: f64,
    pub family_argmax: Option<usize>,
    #[serde(with = "ext_f64::option")]
    pub optimized: Option<f64>,
    #[serde(with = "ext_f64")]
    pub gap: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VpReport {
    pub tolerance: f64,
    pub rows: Vec<VpRow>,
    /// `(measure index, τ, method)` for the family.
    pub family_tau: Vec<(usize, f64, TMethod)>,
}

impl VpReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Compares `λ(ψ)` with `max_μ μ[ψ] + τ(μ)` over a declared family and an optimized Markov member.
///
/// A row passes when no family member exceeds `λ(ψ) + tol` and the best of the family
/// and the optimized member comes within `tol` of `λ(ψ)`.
pub fn verify_variational_principle(
    t: &TransferOperator,
    psis: &[(String, Observable)],
    family: &[InvariantMeasure],
    hyp: &Hypotheses,
    tol: f64,
    n_max: usize,
) -> Result<VpReport> {
    let mut family_tau = Vec::new();
    for (i, mu) in family.iter().enumerate() {
        let (tau, method) = best_t_entropy(t, mu, hyp, n_max.min(8))?;
        family_tau.push((i, tau, method));
    }
    let mut rows = Vec::new();
    for (label, psi) in psis {
        let lambda = lambda_of(t, psi, n_max)?;
        let mut family_max = f64::NEG_INFINITY;
        let mut argmax = None;
        for (i, mu) in family.iter().enumerate() {
            let tau = family_tau[i].1;
            let v = if tau == f64::NEG_INFINITY {
                tau
            } else {
                integrate(mu, psi)? + tau
            };
            if v > family_max {
                family_max = v;
                argmax = Some(i);
            }
        }
        let (optimized, note) = if t.host.is_symbolic() {
            match optimize_markov(t, psi, hyp) {
                Ok(o) => (
                    Some(o.value),
                    format!("Markov optimum after {} sweeps", o.sweeps),
                ),
                Err(e) => (None, format!("no Markov optimization: {e}")),
            }
        } else {
            (None, "declared family only".into())
        };
        let best = optimized.map_or(family_max, |o| o.max(family_max));
        let gap = lambda - best;
        let pass = family_max <= lambda + tol
            && optimized.map_or(true, |o| o <= lambda + tol)
            && gap.abs() <= tol;
        rows.push(VpRow {
            psi: label.clone(),
            lambda,
            family_max,
            family_argmax: argmax,
            optimized,
            gap,
            pass,
            note,
        });
    }
    Ok(VpReport {
        tolerance: tol,
        rows,
        family_tau,
    })
}

/// Parameters of [`legendre_dual`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualParams {
    /// Cylinder depth of the potentials, at most 3.
    pub depth: usize,
    pub iterations: usize,
    /// Extra random potentials checked against the one-sided bound.
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for DualParams {
    fn default() -> Self {
        DualParams {
            depth: 1,
            iterations: 200,
            samples: 20,
            seed: 0,
            tolerance: 1e-3,
        }
    }
}

/// One evaluated potential.
#[derive(Clone, Debug, Serialize)]
pub struct DualEvaluation {
    pub coefficients: Vec<f64>,
    #[serde(with = "ext_f64")]
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualReport {
    /// `sup` over the evaluated potentials of `μ[ψ] − λ(ψ)`.
    #[serde(with = "ext_f64")]
    pub best: f64,
    pub best_coefficients: Vec<f64>,
    #[serde(with = "ext_f64")]
    pub tau: f64,
    pub tau_method: TMethod,
    /// `−τ(μ) − best`.
    #[serde(with = "ext_f64")]
    pub gap: f64,
    /// Largest `μ[ψ] − λ(ψ) + τ(μ)` over every potential evaluated, optimizer steps and samples alike.
    #[serde(with = "ext_f64")]
    pub max_violation: f64,
    pub evaluations: usize,
    pub samples: Vec<DualEvaluation>,
    pub bound_holds: bool,
}

/// Coefficient range of the dual search.
const CLAMP: f64 = 40.0;

/// `sup_ψ μ[ψ] − λ(ψ)` over depth-`k` cylinder potentials by coordinate ascent.
///
/// Every evaluated potential is also checked against `μ[ψ] − λ(ψ) ≤ −τ(μ) + tol`.
pub fn legendre_dual(
    t: &TransferOperator,
    mu: &InvariantMeasure,
    hyp: &Hypotheses,
    params: &DualParams,
) -> Result<DualReport> {
    if !(1..=3).contains(&params.depth) {
        return Err(Error::Precondition(
            "dual potentials have cylinder depth 1 to 3".into(),
        ));
    }
    let alphabet = t
        .host
        .alphabet()
        .ok_or_else(|| Error::Precondition("the dual search runs on shift hosts".into()))?;
    if !t.branch_weight().is_locally_constant() {
        return Err(Error::Observable(
            "the dual search needs a locally constant cocycle".into(),
        ));
    }
    let (tau, tau_method) = best_t_entropy(t, mu, hyp, 6)?;
    let size = alphabet.pow(params.depth as u32);
    let mut evaluations = 0usize;
    let mut max_violation = f64::NEG_INFINITY;
    let mut eval = |c: &[f64]| -> Result<f64> {
        let psi = Observable::cylinder(params.depth, alphabet, c.to_vec());
        let v = integrate(mu, &psi)? - lambda_of(t, &psi, 20)?;
        evaluations += 1;
        if tau > f64::NEG_INFINITY {
            max_violation = max_violation.max(v + tau);
        } else if v > f64::NEG_INFINITY {
            max_violation = f64::INFINITY;
        }
        Ok(v)
    };
    let mut coeffs = vec![0.0; size];
    let mut best = eval(&coeffs)?;
    let mut step = 1.0;
    for _ in 0..params.iterations {
        let mut improved = false;
        for c in 0..size {
            for dir in [1.0, -1.0] {
                let mut trial = coeffs.clone();
                trial[c] = (trial[c] + dir * step).clamp(-CLAMP, CLAMP);
                if trial[c] == coeffs[c] {
                    continue;
                }
                let v = eval(&trial)?;
                if v > best + 1e-14 {
                    best = v;
                    coeffs = trial;
                    improved = true;
                    break;
                }
            }
        }
        step = if improved {
            (step * 2.0).min(CLAMP)
        } else {
            step * 0.5
        };
        if step < 1e-10 {
            break;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut samples = Vec::with_capacity(params.samples);
    for _ in 0..params.samples {
        let c: Vec<f64> = (0..size).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let value = eval(&c)?;
        samples.push(DualEvaluation {
            coefficients: c,
            value,
        });
    }
    let bound_holds = max_violation <= params.tolerance;
    Ok(DualReport {
        best,
        best_coefficients: coeffs,
        tau,
        tau_method,
        gap: -tau - best,
        max_violation,
        evaluations,
        samples,
        bound_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{bernoulli, dirac};
    use crate::systems::{Point, SystemModel, Word};
    use crate::transfer::perron_frobenius;

    fn shift_hyp() -> Hypotheses {
        Hypotheses {
            local_homeo_on_x_alpha: true,
            open_on_x_alpha: true,
            non_contracting: true,
            entropy_usc: true,
            cocycle_continuous: true,
            ..Default::default()
        }
    }

    #[test]
    fn full_shift_vp_at_zero_potential() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let fam = vec![
            bernoulli(&s, &[0.5, 0.5]).unwrap(),
            bernoulli(&s, &[0.3, 0.7]).unwrap(),
        ];
        let r = verify_variational_principle(
            &t,
            &[("zero".into(), Observable::zero())],
            &fam,
            &shift_hyp(),
            1e-3,
            12,
        )
        .unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert!((r.rows[0].family_max - 2f64.ln()).abs() < 1e-9);
        assert_eq!(r.rows[0].family_argmax, Some(0));
    }

    #[test]
    fn golden_vp_with_first_symbol_potential() {
        let s = SystemModel::golden_mean();
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let psi = Observable::first_symbol(vec![0.3, -0.4]);
        let o = optimize_markov(&t, &psi, &shift_hyp()).unwrap();
        let lambda = lambda_of(&t, &psi, 20).unwrap();
        assert!((o.value - lambda).abs() < 1e-6, "{} vs {lambda}", o.value);
    }

    #[test]
    fn dual_of_uniform_bernoulli_is_minus_ln2() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let mu = bernoulli(&s, &[0.5, 0.5]).unwrap();
        let r = legendre_dual(&t, &mu, &shift_hyp(), &DualParams::default()).unwrap();
        assert!((r.best + 2f64.ln()).abs() < 1e-9, "{r:?}");
        assert!(r.bound_holds);
    }

    #[test]
    fn dual_of_fixed_point_tends_to_zero() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let mu = dirac(&s, Point::Word(Word::constant(0))).unwrap();
        let r = legendre_dual(&t, &mu, &shift_hyp(), &DualParams::default()).unwrap();
        assert!(r.best > -1e-6 && r.best <= 1e-12, "{r:?}");
        assert!(r.bound_holds);
    }

    #[test]
    fn constant_potentials_cancel() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let mu = bernoulli(&s, &[0.2, 0.8]).unwrap();
        for c in [-2.0, 0.0, 3.5] {
            let psi = Observable::constant(c);
            let v = integrate(&mu, &psi).unwrap() - lambda_of(&t, &psi, 10).unwrap();
            assert!((v + 2f64.ln()).abs() < 1e-9);
        }
    }
}
