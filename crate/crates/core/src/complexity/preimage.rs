//! Growth of restricted preimage trees: inverse rami-rate and essential spectral potential.

use super::nets::{log_sum_exp, sample_strands};
use crate::error::{Error, Result};
use crate::observable::{ln0, Observable};
use crate::systems::{Point, SystemKind, SystemModel};
use crate::trace::EstimateTrace;
use crate::transfer::{
    perron_frobenius, spectral_potential, with_potential, SpectralParams, TransferOperator,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreimageParams {
    pub n_max: usize,
    /// Reference points sampled from the restriction on metric models.
    pub samples: usize,
    /// Largest preimage tree level kept per reference point; deeper levels are dropped.
    pub budget: usize,
}

impl PreimageParams {
    pub fn new(n_max: usize) -> Self {
        PreimageParams {
            n_max,
            samples: 64,
            budget: 1 << 16,
        }
    }
}

/// Reference points for `sup_x`: about `count` evenly spread samples of the restriction.
pub fn tree_sample(host: &SystemModel, count: usize) -> Result<Vec<Point>> {
    let all: Vec<Point> = sample_strands(host, 1.0 / 4096.0)?
        .into_iter()
        .flat_map(|s| s.points)
        .collect();
    if all.len() <= count.max(1) {
        return Ok(all);
    }
    let step = all.len() as f64 / count as f64;
    Ok((0..count)
        .map(|k| all[(k as f64 * step) as usize].clone())
        .collect())
}

/// `ω(α)`: trace of `(1/n) ln sup_x |α̃⁻ⁿ(x)|` with preimages taken inside the restriction.
pub fn inverse_rami_rate(host: &SystemModel, params: &PreimageParams) -> Result<EstimateTrace> {
    growth("omega", host, Weight::Count, params)
}

/// `ℓ(α, a)`: trace of `(1/n) ln Φ_n`, `Φ_n = sup_x Σ_{y ∈ α̃⁻ⁿx} Π_{i<n} a(αⁱy)`.
pub fn essential_spectral_potential(
    host: &SystemModel,
    a: &Observable,
    params: &PreimageParams,
) -> Result<EstimateTrace> {
    a.check_host(host)?;
    growth("ell", host, Weight::Function(a), params)
}

/// `ℓ(α, ρe^ψ)` with `ρ` the cocycle of `t`: discrete preimages carry the operator's
/// mass, preimages that only lie on a continuum carry `ρ = 0`.
pub fn cocycle_spectral_potential(
    t: &TransferOperator,
    psi: &Observable,
    params: &PreimageParams,
) -> Result<EstimateTrace> {
    psi.check_host(&t.host)?;
    growth("ell", &t.host, Weight::Cocycle(t, psi), params)
}

#[derive(Clone, Copy)]
enum Weight<'a> {
    Count,
    Function(&'a Observable),
    Cocycle(&'a TransferOperator, &'a Observable),
}

fn growth(
    quantity: &str,
    host: &SystemModel,
    weight: Weight,
    params: &PreimageParams,
) -> Result<EstimateTrace> {
    host.validate()?;
    if params.n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    if host.is_symbolic() || matches!(host.kind, SystemKind::FiniteMap { .. }) {
        let t = match weight {
            Weight::Count => perron_frobenius(host, Observable::constant(1.0))?,
            Weight::Function(a) => perron_frobenius(host, a.clone())?,
            Weight::Cocycle(t, psi) => with_potential(t, psi)?,
        };
        let mut trace = spectral_potential(&t, &SpectralParams::new(params.n_max))?;
        trace.quantity = quantity.into();
        return Ok(trace);
    }
    let sample = tree_sample(host, params.samples)?;
    if sample.is_empty() {
        return Err(Error::Precondition(
            "the restriction contains no sample point".into(),
        ));
    }
    let per_point: Vec<Vec<f64>> = sample
        .par_iter()
        .map(|x| level_sums(host, x, weight, params))
        .collect::<Result<_>>()?;
    let depth = per_point.iter().map(Vec::len).min().unwrap_or(0);
    if depth == 0 {
        return Err(Error::Precondition(
            "preimage budget exhausted before the first level".into(),
        ));
    }
    let norms: Vec<(usize, f64)> = (0..depth)
        .map(|i| {
            (
                i + 1,
                per_point
                    .iter()
                    .map(|v| v[i])
                    .fold(f64::NEG_INFINITY, f64::max),
            )
        })
        .collect();
    Ok(EstimateTrace::subadditive(
        quantity,
        "restricted preimage tree sums, sup over sampled points",
        &norms,
    )
    .with_meta("n_max", params.n_max)
    .with_meta("levels_within_budget", depth)
    .with_meta("reference_points", sample.len()))
}

/// `ln Σ` over each tree level below `x`, stopping when a level exceeds the budget.
fn level_sums(
    host: &SystemModel,
    x: &Point,
    weight: Weight,
    params: &PreimageParams,
) -> Result<Vec<f64>> {
    let mut frontier = vec![(x.clone(), 0.0f64)];
    let mut out = Vec::new();
    for _ in 0..params.n_max {
        let mut next = Vec::new();
        for (y, w) in &frontier {
            let children = match weight {
                Weight::Cocycle(..) => {
                    let mut set = host.preimage_set(y)?;
                    set.points.retain(|p| host.in_restriction(p));
                    set.points
                }
                _ => host.restricted_preimage_set(y)?.into_discrete()?,
            };
            for z in children {
                let lw = match weight {
                    Weight::Count => *w,
                    Weight::Function(a) => w + ln0(a.eval(&z)),
                    Weight::Cocycle(t, psi) => w + ln0(t.mass(&z)) + psi.eval(&z),
                };
                if lw > f64::NEG_INFINITY {
                    next.push((z, lw));
                }
            }
        }
        if next.len() > params.budget {
            break;
        }
        out.push(log_sum_exp(next.iter().map(|p| p.1)));
        frontier = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_rami_rate() {
        let t = inverse_rami_rate(&SystemModel::doubling(), &PreimageParams::new(10)).unwrap();
        assert!((t.headline - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rotation_has_no_ramification() {
        let t = inverse_rami_rate(&SystemModel::rotation(0.3), &PreimageParams::new(50)).unwrap();
        assert_eq!(t.headline, 0.0);
    }

    #[test]
    fn full_shift_ell() {
        let s = SystemModel::full_shift(2);
        let t =
            essential_spectral_potential(&s, &Observable::constant(1.0), &PreimageParams::new(10))
                .unwrap();
        assert!((t.headline - 2f64.ln()).abs() < 1e-12);
        let w = Observable::first_symbol(vec![2.0, 3.0]);
        let t = essential_spectral_potential(&s, &w, &PreimageParams::new(10)).unwrap();
        assert!((t.headline - 5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn square_cocycle_drops_the_upper_edge() {
        use crate::systems::{BoxSet, Subset};
        let edges = Subset::Boxes {
            boxes: vec![
                BoxSet::rect([0.0, 0.0], [1.0, 0.0]),
                BoxSet::rect([0.0, 1.0], [1.0, 1.0]),
            ],
        };
        let host = SystemModel::square_fixture().restricted(edges);
        let psi = Observable::affine(0.0, vec![1.0, 1.0]);
        let t = crate::transfer::composition(&host).unwrap();
        let with_cocycle = cocycle_spectral_potential(&t, &psi, &PreimageParams::new(12)).unwrap();
        assert!(
            (with_cocycle.headline - 1.0).abs() < 0.05,
            "{}",
            with_cocycle.headline
        );
        let plain =
            essential_spectral_potential(&host, &psi.exp(), &PreimageParams::new(12)).unwrap();
        assert!(plain.headline > 1.9, "{}", plain.headline);
    }

    #[test]
    fn golden_rami_rate() {
        let t = inverse_rami_rate(&SystemModel::golden_mean(), &PreimageParams::new(20)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((t.headline - phi.ln()).abs() < 0.05, "{}", t.headline);
    }
}
