//! Local injectivity, openness and homeomorphism points, probed at shrinking radii.

use super::TransferOperator;
use crate::error::{Error, Result};
use crate::systems::{Point, Subset, SystemKind, SystemModel};
use serde::Serialize;

/// Flags of a point: local injectivity (LIP), local openness (LOP), local homeomorphism (LHP).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointClass {
    pub lip: bool,
    pub lop: bool,
    pub lhp: bool,
    pub radii: Vec<String>,
}

const RADII: [i32; 3] = [6, 8, 10];

/// Classifies `x` for `α` on `within` (the host's own restriction when `None`).
pub fn classify_point(
    host: &SystemModel,
    x: &Point,
    within: Option<&Subset>,
) -> Result<PointClass> {
    let host = match within {
        Some(y) => host.unrestricted().restricted(y.clone()),
        None => host.clone(),
    };
    host.apply(x)?;
    if !host.in_restriction(x) {
        return Err(Error::Precondition(format!(
            "{x} is not in the restriction"
        )));
    }
    let radii: Vec<String> = RADII.iter().map(|k| format!("2^-{k}")).collect();
    match host.kind {
        SystemKind::FiniteMap { .. } | SystemKind::Subshift { .. } => {
            return Ok(PointClass {
                lip: true,
                lop: true,
                lhp: true,
                radii,
            })
        }
        SystemKind::CantorFixture => {
            return Err(Error::Precondition(
                "point classification is not available on the Cantor fixture".into(),
            ))
        }
        _ => {}
    }
    let mut injective_small = true;
    let mut open_all = true;
    for &k in &RADII {
        let r = 0.5f64.powi(k);
        injective_small = injective_at(&host, x, r)?;
        open_all &= open_at(&host, x, r)?;
    }
    Ok(PointClass {
        lip: injective_small,
        lop: open_all,
        lhp: injective_small && open_all,
        radii,
    })
}

/// Sample points of the open ball `B(c, r)` inside the (restricted) state space.
fn ball(host: &SystemModel, c: &Point, r: f64) -> Vec<Point> {
    let steps: Vec<f64> = (-15..=15).map(|k| r * k as f64 / 16.0).collect();
    let circle = matches!(&host.kind, SystemKind::PiecewiseCover(p) if p.circle)
        || matches!(host.kind, SystemKind::CircleRotation { .. });
    let raw: Vec<Point> = match (c, &host.kind) {
        (Point::Real(x), _) => steps
            .iter()
            .map(|d| {
                Point::Real(if circle {
                    (x + d).rem_euclid(1.0)
                } else {
                    x + d
                })
            })
            .collect(),
        (Point::Pair([a, b]), SystemKind::LadderFixture { levels }) => {
            let mut rungs = vec![0.0];
            rungs.extend((0..=*levels).map(|j| 0.5f64.powi(j as i32)));
            rungs
                .into_iter()
                .filter(|s| (s - b).abs() < r)
                .flat_map(|s| steps.iter().map(move |d| Point::Pair([a + d, s])))
                .collect()
        }
        (Point::Pair([a, b]), _) => {
            let coarse: Vec<f64> = (-7..=7).map(|k| r * k as f64 / 8.0).collect();
            coarse
                .iter()
                .flat_map(|&d1| coarse.iter().map(move |&d2| Point::Pair([a + d1, b + d2])))
                .collect()
        }
        _ => Vec::new(),
    };
    raw.into_iter()
        .filter(|p| host.contains(p) && host.in_restriction(p) && host.distance_unchecked(p, c) < r)
        .collect()
}

/// Restricted preimages of `v`, continua replaced by samples.
fn preimage_samples(host: &SystemModel, v: &Point) -> Result<Vec<Point>> {
    let set = host.restricted_preimage_set(v)?;
    let mut out = set.points;
    for c in set.continua {
        let mut coords = c.anchor.coords();
        for k in 0..=32 {
            coords[c.coord] = c.lo + (c.hi - c.lo) * k as f64 / 32.0;
            out.push(match coords.len() {
                1 => Point::Real(coords[0]),
                _ => Point::Pair([coords[0], coords[1]]),
            });
        }
    }
    Ok(out)
}

fn injective_at(host: &SystemModel, x: &Point, r: f64) -> Result<bool> {
    for y in ball(host, x, r) {
        let v = host.apply_unchecked(&y);
        let twins = preimage_samples(host, &v)?
            .into_iter()
            .filter(|z| host.distance_unchecked(z, x) < r && host.distance_unchecked(z, &y) > 1e-9)
            .count();
        if twins > 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn open_at(host: &SystemModel, x: &Point, r: f64) -> Result<bool> {
    let v0 = host.apply_unchecked(x);
    for s in [r, r / 4.0, r / 16.0, r / 64.0] {
        let mut covered = true;
        for v in ball(host, &v0, s) {
            let hit = preimage_samples(host, &v)?
                .iter()
                .any(|z| host.distance_unchecked(z, x) < r);
            if !hit {
                covered = false;
                break;
            }
        }
        if covered {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether the atom mass `ρ(y)` of `y` in `φ_{αy}` stays within `tol` of `ρ(x₀)` near `x₀`.
pub fn cocycle_continuous_at(t: &TransferOperator, x0: &Point, tol: f64) -> Result<bool> {
    let rho = |y: &Point| -> Result<f64> {
        let phi = t.functional(&t.host.apply_unchecked(y))?;
        Ok(phi
            .atoms
            .iter()
            .filter(|(z, _)| z.approx_eq(y))
            .map(|a| a.1)
            .sum())
    };
    let base = rho(x0)?;
    let r = 0.5f64.powi(RADII[RADII.len() - 1]);
    for y in ball(&t.host, x0, r) {
        if (rho(&y)? - base).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
