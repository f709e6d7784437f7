//! `*`-weak continuity of `x ↦ φ_{Y,x}` probed on a finite test family.

use super::{FunctionalAtPoint, TransferOperator};
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::systems::{Point, Subset, SystemKind, SystemModel};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatibilityParams {
    /// Spacing of the samples taken along `Y`.
    pub resolution: f64,
    /// Bisection steps spent on the largest jump.
    pub bisections: usize,
    /// A jump surviving all bisections above this size is reported.
    pub jump_tol: f64,
}

impl Default for CompatibilityParams {
    fn default() -> Self {
        CompatibilityParams {
            resolution: 1.0 / 1024.0,
            bisections: 40,
            jump_tol: 1e-6,
        }
    }
}

/// Outcome of [`check_compatibility`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Compatibility {
    /// No persistent jump at the given resolution.
    Compatible {
        family: String,
        resolution: f64,
        max_jump: f64,
    },
    /// `φ_{Y,x}[f]` jumps by `jump` as `x` runs through `sequence` towards `limit`.
    Incompatible {
        limit: Point,
        sequence: Vec<Point>,
        test_function: String,
        jump: f64,
        /// A branch point of `φ_{Y,·}` present on one side of the jump only.
        atom: Option<Point>,
    },
}

impl Compatibility {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Compatibility::Compatible { .. })
    }
}

struct TestFamily {
    names: Vec<String>,
    functions: Vec<Observable>,
    hats: Vec<(Vec<f64>, f64)>,
}

impl TestFamily {
    fn for_host(host: &SystemModel) -> Self {
        let (centers, width): (Vec<Vec<f64>>, f64) = match &host.kind {
            SystemKind::PiecewiseCover(c) => {
                let w = (c.hi() - c.lo()) / 8.0;
                ((0..=8).map(|k| vec![c.lo() + w * k as f64]).collect(), w)
            }
            SystemKind::CircleRotation { .. } => {
                ((0..8).map(|k| vec![k as f64 / 8.0]).collect(), 0.125)
            }
            _ => {
                let axis: Vec<f64> = (0..=4).map(|k| k as f64 / 4.0).collect();
                (
                    axis.iter()
                        .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
                        .collect(),
                    0.25,
                )
            }
        };
        let mut names = vec!["constant 1".to_string()];
        names.extend(
            centers
                .iter()
                .map(|c| format!("hat at {c:?} of width {width}")),
        );
        TestFamily {
            names,
            functions: vec![Observable::constant(1.0)],
            hats: centers.into_iter().map(|c| (c, width)).collect(),
        }
    }

    fn len(&self) -> usize {
        self.functions.len() + self.hats.len()
    }

    fn values(&self, host: &SystemModel, phi: &FunctionalAtPoint) -> Vec<f64> {
        let mut out: Vec<f64> = self.functions.iter().map(|f| phi.apply(f)).collect();
        for (c, w) in &self.hats {
            out.push(
                phi.atoms
                    .iter()
                    .map(|(y, m)| {
                        let d = hat_distance(host, &y.coords(), c);
                        m * (1.0 - d / w).max(0.0)
                    })
                    .sum(),
            );
        }
        out
    }

    fn describe(&self) -> String {
        format!("constant and {} hat functions", self.hats.len())
    }
}

fn hat_distance(host: &SystemModel, a: &[f64], b: &[f64]) -> f64 {
    let circle = matches!(&host.kind, SystemKind::PiecewiseCover(c) if c.circle)
        || matches!(host.kind, SystemKind::CircleRotation { .. });
    if circle {
        crate::systems::circle_dist(a[0], b[0])
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Segments `s ↦ start + s·(end − start)` covering the boxes of `Y`.
fn segments(y: &Subset, resolution: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let Subset::Boxes { boxes } = y else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for b in boxes {
        let free: Vec<usize> = (0..b.lo.len()).filter(|&i| b.hi[i] > b.lo[i]).collect();
        match free.len() {
            0 => {}
            1 => out.push((b.lo.clone(), b.hi.clone())),
            _ => {
                let lines = (((b.hi[1] - b.lo[1]) / resolution).ceil() as usize).clamp(1, 64);
                for k in 0..=lines {
                    let y = b.lo[1] + (b.hi[1] - b.lo[1]) * k as f64 / lines as f64;
                    out.push((vec![b.lo[0], y], vec![b.hi[0], y]));
                }
            }
        }
    }
    out
}

fn point_at(start: &[f64], end: &[f64], s: f64) -> Point {
    let c: Vec<f64> = start
        .iter()
        .zip(end)
        .map(|(a, b)| a + s * (b - a))
        .collect();
    if c.len() == 1 {
        Point::Real(c[0])
    } else {
        Point::Pair([c[0], c[1]])
    }
}

/// Checks `α(Y) ⊆ Y` on the samples of `Y`.
pub fn forward_invariance(host: &SystemModel, y: &Subset, resolution: f64) -> Result<()> {
    let samples: Vec<Point> = match y {
        Subset::Nodes { nodes } => nodes.iter().map(|&v| Point::Node(v)).collect(),
        Subset::Points { points } => points.clone(),
        Subset::Sft { .. } => return Ok(()),
        Subset::Boxes { .. } => {
            let mut out = Vec::new();
            for (a, b) in segments(y, resolution) {
                let len = a
                    .iter()
                    .zip(&b)
                    .map(|(p, q)| (q - p).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let n = ((len / resolution).ceil() as usize).max(1);
                out.extend(
                    (0..=n)
                        .map(|k| point_at(&a, &b, k as f64 / n as f64))
                        .filter(|p| host.contains(p)),
                );
            }
            out
        }
    };
    for p in samples {
        let q = host.apply(&p)?;
        if !y.contains(&q) {
            return Err(Error::NotForwardInvariant {
                point: p.to_string(),
            });
        }
    }
    Ok(())
}

/// Probes the continuity of `x ↦ φ_{Y,x}` along `Y`.
///
/// Samples `Y` at the given resolution, bisects the largest jump of the
/// test-function values between neighbouring samples, and reports it when it
/// survives every bisection.
pub fn check_compatibility(
    t: &TransferOperator,
    y: &Subset,
    params: &CompatibilityParams,
) -> Result<Compatibility> {
    let host = t.host.unrestricted();
    forward_invariance(&host, y, params.resolution)?;
    let traced = TransferOperator {
        host: host.restricted(y.clone()),
        ..t.clone()
    };
    match (&host.kind, y) {
        (
            SystemKind::FiniteMap { .. } | SystemKind::Subshift { .. } | SystemKind::CantorFixture,
            _,
        )
        | (_, Subset::Points { .. }) => {
            return Ok(Compatibility::Compatible {
                family: "locally constant preimage structure".into(),
                resolution: params.resolution,
                max_jump: 0.0,
            })
        }
        _ => {}
    }
    let family = TestFamily::for_host(&host);
    let mut worst: Option<(f64, Compatibility)> = None;
    let mut max_jump = 0.0f64;
    for (a, b) in segments(y, params.resolution) {
        let len = a
            .iter()
            .zip(&b)
            .map(|(p, q)| (q - p).powi(2))
            .sum::<f64>()
            .sqrt();
        let n = ((len / params.resolution).ceil() as usize).max(1);
        let grid: Vec<f64> = (0..=n)
            .map(|k| k as f64 / n as f64)
            .filter(|&s| host.contains(&point_at(&a, &b, s)))
            .collect();
        let values: Vec<Vec<f64>> = grid
            .iter()
            .map(|&s| Ok(family.values(&host, &traced.functional(&point_at(&a, &b, s))?)))
            .collect::<Result<_>>()?;
        let Some(i) = (0..values.len().saturating_sub(1)).max_by(|&i, &j| {
            gap(&values[i], &values[i + 1])
                .0
                .total_cmp(&gap(&values[j], &values[j + 1]).0)
        }) else {
            continue;
        };
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let (mut v_lo, mut v_hi) = (values[i].clone(), values[i + 1].clone());
        let mut left_side = Vec::new();
        let mut right_side = Vec::new();
        for _ in 0..params.bisections {
            let mid = 0.5 * (lo + hi);
            let v_mid = family.values(&host, &traced.functional(&point_at(&a, &b, mid))?);
            if gap(&v_lo, &v_mid).0 >= gap(&v_mid, &v_hi).0 {
                right_side.push(mid);
                hi = mid;
                v_hi = v_mid;
            } else {
                left_side.push(mid);
                lo = mid;
                v_lo = v_mid;
            }
        }
        let (jump, which) = gap(&v_lo, &v_hi);
        max_jump = max_jump.max(jump);
        if jump <= params.jump_tol {
            continue;
        }
        // The limit is the end whose value differs from the approaching side.
        let phi_lo = traced.functional(&point_at(&a, &b, lo))?;
        let phi_hi = traced.functional(&point_at(&a, &b, hi))?;
        let (limit, approach, atom) = if right_side.len() >= left_side.len() {
            (lo, &right_side, lost_atom(&phi_hi, &phi_lo))
        } else {
            (hi, &left_side, lost_atom(&phi_lo, &phi_hi))
        };
        let sequence: Vec<Point> = approach
            .iter()
            .take(8)
            .map(|&s| point_at(&a, &b, s))
            .collect();
        let verdict = Compatibility::Incompatible {
            limit: point_at(&a, &b, limit),
            sequence,
            test_function: family.names[which].clone(),
            jump,
            atom,
        };
        if worst.as_ref().map_or(true, |(j, _)| jump > *j) {
            worst = Some((jump, verdict));
        }
    }
    debug_assert!(family.len() == family.names.len());
    Ok(match worst {
        Some((_, v)) => v,
        None => Compatibility::Compatible {
            family: family.describe(),
            resolution: params.resolution,
            max_jump,
        },
    })
}

fn gap(a: &[f64], b: &[f64]) -> (f64, usize) {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .enumerate()
        .fold((0.0, 0), |acc, (i, d)| if d > acc.0 { (d, i) } else { acc })
}

/// The heaviest atom of `from` with no atom of `to` nearby.
fn lost_atom(from: &FunctionalAtPoint, to: &FunctionalAtPoint) -> Option<Point> {
    let near = |p: &Point| to.atoms.iter().any(|(q, m)| *m != 0.0 && dist(p, q) < 1e-3);
    from.atoms
        .iter()
        .chain(to.atoms.iter())
        .filter(|(p, m)| {
            *m != 0.0 && !(near(p) && from.atoms.iter().any(|(q, _)| dist(p, q) < 1e-3))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|a| a.0.clone())
}

fn dist(p: &Point, q: &Point) -> f64 {
    p.coords()
        .iter()
        .zip(q.coords())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// The trace `A_Y`, refused with the witness when `A` is not `Y`-compatible.
pub fn trace_operator(
    t: &TransferOperator,
    y: &Subset,
    params: &CompatibilityParams,
) -> Result<TransferOperator> {
    match check_compatibility(t, y, params)? {
        Compatibility::Compatible { .. } => Ok(TransferOperator {
            host: t.host.unrestricted().restricted(y.clone()),
            ..t.clone()
        }),
        Compatibility::Incompatible {
            limit,
            jump,
            test_function,
            ..
        } => Err(Error::Incompatible(format!(
            "φ_Y jumps by {jump} at {limit} on the test function {test_function}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::{composition, perron_frobenius};

    fn parabola_weight(x0: f64, r0: f64) -> Observable {
        let lin = Observable::affine(-x0, vec![1.0]);
        lin.clone().times(lin).plus(Observable::constant(r0))
    }

    #[test]
    fn squaring_on_a_left_interval() {
        let host = SystemModel::squaring();
        let y = Subset::intervals(&[(0.0, 0.8)]);
        let t = perron_frobenius(&host, parabola_weight(0.8, 0.5)).unwrap();
        match check_compatibility(&t, &y, &CompatibilityParams::default()).unwrap() {
            Compatibility::Incompatible {
                limit, jump, atom, ..
            } => {
                assert!((limit.real().unwrap() - 0.64).abs() < 1e-9);
                assert!((jump - 0.5).abs() < 1e-6);
                assert!((atom.unwrap().real().unwrap() - 0.8).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        let t = perron_frobenius(&host, parabola_weight(0.8, 0.0)).unwrap();
        assert!(check_compatibility(&t, &y, &CompatibilityParams::default())
            .unwrap()
            .is_compatible());
    }

    #[test]
    fn square_edges_are_incompatible_at_the_corner() {
        let t = composition(&SystemModel::square_fixture()).unwrap();
        let y = Subset::Boxes {
            boxes: vec![
                crate::systems::BoxSet::rect([0.0, 0.0], [1.0, 0.0]),
                crate::systems::BoxSet::rect([0.0, 1.0], [1.0, 1.0]),
            ],
        };
        let params = CompatibilityParams {
            resolution: 1.0 / 64.0,
            ..Default::default()
        };
        match check_compatibility(&t, &y, &params).unwrap() {
            Compatibility::Incompatible { limit, jump, .. } => {
                assert!(
                    limit.coords()[0] < 1e-9 && limit.coords()[1] == 1.0,
                    "{limit}"
                );
                assert!(jump > 0.5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn escaping_subset_is_rejected() {
        let t = perron_frobenius(&SystemModel::doubling(), Observable::constant(1.0)).unwrap();
        let y = Subset::intervals(&[(0.0, 0.25)]);
        assert!(matches!(
            check_compatibility(&t, &y, &CompatibilityParams::default()),
            Err(Error::NotForwardInvariant { .. })
        ));
    }

    #[test]
    fn whole_circle_is_compatible() {
        let t = perron_frobenius(
            &SystemModel::doubling(),
            Observable::cosine(1.0, 0.5, 1.0, 0.0),
        )
        .unwrap();
        let y = Subset::intervals(&[(0.0, 1.0)]);
        let v = check_compatibility(
            &t,
            &y,
            &CompatibilityParams {
                resolution: 1.0 / 256.0,
                ..Default::default()
            },
        );
        assert!(v.unwrap().is_compatible());
    }
}
