//! Piecewise monotone maps of an interval or of the circle `[0,1)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Comparison tolerance for floating models.
pub const TOL: f64 = 1e-12;

/// Closed-form description of one branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum BranchMap {
    /// `x ↦ slope·x + offset`.
    Affine { slope: f64, offset: f64 },
    /// `x ↦ value`; its preimage sets are intervals, not points.
    Constant { value: f64 },
    /// `x ↦ x^exponent` on a nonnegative interval.
    Power { exponent: f64 },
}

impl BranchMap {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BranchMap::Affine { slope, offset } => slope * x + offset,
            BranchMap::Constant { value } => value,
            BranchMap::Power { exponent } => x.powf(exponent),
        }
    }

    fn invert(&self, y: f64) -> Option<f64> {
        match *self {
            BranchMap::Affine { slope, offset } if slope != 0.0 => Some((y - offset) / slope),
            BranchMap::Power { exponent } if y >= 0.0 => Some(y.powf(1.0 / exponent)),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(
            self,
            BranchMap::Constant { .. } | BranchMap::Affine { slope: 0.0, .. }
        )
    }
}

/// One monotone piece on `[lo, hi)`; the last branch of a cover is closed on the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub lo: f64,
    pub hi: f64,
    #[serde(flatten)]
    pub map: BranchMap,
}

/// A map assembled from monotone branches.
///
/// On the circle (`circle = true`) the domain is `[0,1)`, images are reduced
/// mod 1 and the metric is arc length; otherwise the domain is `[lo, hi]` of
/// the branch table with the absolute-value metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCover {
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub circle: bool,
}

/// Result of inverting a single branch at a point.
#[derive(Clone, Debug, PartialEq)]
pub enum BranchPreimage {
    Point(f64),
    Interval(f64, f64),
}

impl PiecewiseCover {
    /// Validates and normalizes a branch table.
    ///
    /// Branches must tile the domain; overlapping pieces are accepted only if
    /// they agree on the overlap, in which case the later piece is trimmed.
    pub fn new(mut branches: Vec<Branch>, circle: bool) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidModel(
                "piecewise cover without branches".into(),
            ));
        }
        branches.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for b in &branches {
            if !(b.lo < b.hi) || !b.lo.is_finite() || !b.hi.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "empty branch [{}, {}]",
                    b.lo, b.hi
                )));
            }
        }
        for i in 1..branches.len() {
            let (prev_hi, lo) = (branches[i - 1].hi, branches[i].lo);
            if lo > prev_hi + TOL {
                return Err(Error::InvalidModel(format!(
                    "gap ({prev_hi}, {lo}) between branches"
                )));
            }
            if lo < prev_hi - TOL {
                let (a, b) = (lo, prev_hi.min(branches[i].hi));
                let consistent = (0..=16).all(|k| {
                    let x = a + (b - a) * k as f64 / 16.0;
                    let (u, v) = (branches[i - 1].map.eval(x), branches[i].map.eval(x));
                    if circle {
                        circle_dist(u.rem_euclid(1.0), v.rem_euclid(1.0)) <= 1e-9
                    } else {
                        (u - v).abs() <= 1e-9
                    }
                });
                if !consistent {
                    return Err(Error::InconsistentOverlap { lo: a, hi: b });
                }
                branches[i].lo = prev_hi;
                if branches[i].lo >= branches[i].hi {
                    return Err(Error::InvalidModel(
                        "branch swallowed by its predecessor".into(),
                    ));
                }
            }
        }
        if circle {
            let (lo, hi) = (branches[0].lo, branches.last().unwrap().hi);
            if lo.abs() > TOL || (hi - 1.0).abs() > TOL {
                return Err(Error::InvalidModel("circle covers must tile [0,1)".into()));
            }
        }
        Ok(PiecewiseCover { branches, circle })
    }

    /// `x ↦ k·x mod 1` on the circle.
    pub fn linear_mod_one(k: u32) -> Self {
        let branches = (0..k)
            .map(|j| Branch {
                lo: j as f64 / k as f64,
                hi: (j + 1) as f64 / k as f64,
                map: BranchMap::Affine {
                    slope: k as f64,
                    offset: -(j as f64),
                },
            })
            .collect();
        PiecewiseCover::new(branches, true).expect("valid linear cover")
    }

    pub fn lo(&self) -> f64 {
        self.branches[0].lo
    }

    pub fn hi(&self) -> f64 {
        self.branches.last().unwrap().hi
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.circle {
            (0.0..1.0).contains(&x)
        } else {
            x >= self.lo() - TOL && x <= self.hi() + TOL
        }
    }

    /// Index of the branch owning `x` under the left-closed tie rule.
    pub fn branch_index(&self, x: f64) -> usize {
        let last = self.branches.len() - 1;
        self.branches
            .iter()
            .position(|b| x >= b.lo && x < b.hi)
            .unwrap_or(if x < self.lo() { 0 } else { last })
    }

    fn owns(&self, i: usize, x: f64) -> bool {
        let b = &self.branches[i];
        let last = i + 1 == self.branches.len();
        (x >= b.lo - TOL && x < b.hi - TOL) || (last && !self.circle && (x - b.hi).abs() <= TOL)
    }

    pub fn apply(&self, x: f64) -> f64 {
        let y = self.branches[self.branch_index(x)].map.eval(x);
        self.normalize(y)
    }

    fn normalize(&self, y: f64) -> f64 {
        if self.circle {
            let r = y.rem_euclid(1.0);
            if r >= 1.0 - TOL * 0.5 {
                0.0
            } else {
                r
            }
        } else {
            y.clamp(self.lo(), self.hi())
        }
    }

    pub fn distance(&self, x: f64, y: f64) -> f64 {
        if self.circle {
            circle_dist(x, y)
        } else {
            (x - y).abs()
        }
    }

    /// All one-step preimages, branch by branch.
    pub fn preimages(&self, y: f64) -> Vec<BranchPreimage> {
        let mut out = Vec::new();
        for (i, b) in self.branches.iter().enumerate() {
            if b.map.is_constant() {
                let v = self.normalize(b.map.eval(b.lo));
                if self.distance(v, y) <= TOL {
                    out.push(BranchPreimage::Interval(b.lo, b.hi));
                }
                continue;
            }
            let lifts: Vec<f64> = if self.circle {
                let (u, v) = (b.map.eval(b.lo), b.map.eval(b.hi));
                let (lo, hi) = (u.min(v), u.max(v));
                let first = (lo - y).floor() as i64 - 1;
                let last = (hi - y).ceil() as i64 + 1;
                (first..=last).map(|k| y + k as f64).collect()
            } else {
                vec![y]
            };
            for t in lifts {
                if let Some(x) = b.map.invert(t) {
                    let x = if (x - b.lo).abs() <= TOL { b.lo } else { x };
                    if self.owns(i, x) && self.distance(self.normalize(b.map.eval(x)), y) <= 1e-9 {
                        out.push(BranchPreimage::Point(x));
                    }
                }
            }
        }
        out
    }

    /// Upper bound on the number of discrete preimages.
    pub fn sheet_bound(&self) -> Option<usize> {
        let mut total = 0usize;
        for b in &self.branches {
            if b.map.is_constant() {
                return None;
            }
            total += if self.circle {
                let span = (b.map.eval(b.hi) - b.map.eval(b.lo)).abs();
                span.ceil().max(1.0) as usize
            } else {
                1
            };
        }
        Some(total)
    }
}

pub fn circle_dist(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(v: Vec<BranchPreimage>) -> Vec<f64> {
        let mut p: Vec<f64> = v
            .into_iter()
            .map(|b| match b {
                BranchPreimage::Point(x) => x,
                BranchPreimage::Interval(..) => panic!("interval"),
            })
            .collect();
        p.sort_by(f64::total_cmp);
        p
    }

    #[test]
    fn doubling_has_two_preimages() {
        let d = PiecewiseCover::linear_mod_one(2);
        assert_eq!(points(d.preimages(0.0)), vec![0.0, 0.5]);
        assert_eq!(points(d.preimages(0.3)), vec![0.15, 0.65]);
        assert_eq!(d.apply(0.75), 0.5);
        assert_eq!(d.sheet_bound(), Some(2));
    }

    #[test]
    fn tripling_has_three_preimages() {
        let t = PiecewiseCover::linear_mod_one(3);
        assert_eq!(points(t.preimages(0.5)).len(), 3);
    }

    #[test]
    fn overlap_must_agree() {
        let bad = vec![
            Branch {
                lo: 0.0,
                hi: 0.6,
                map: BranchMap::Affine {
                    slope: 1.0,
                    offset: 0.0,
                },
            },
            Branch {
                lo: 0.5,
                hi: 1.0,
                map: BranchMap::Affine {
                    slope: -1.0,
                    offset: 1.0,
                },
            },
        ];
        assert!(matches!(
            PiecewiseCover::new(bad, false),
            Err(Error::InconsistentOverlap { .. })
        ));
        let good = vec![
            Branch {
                lo: 0.0,
                hi: 0.6,
                map: BranchMap::Affine {
                    slope: 1.0,
                    offset: 0.0,
                },
            },
            Branch {
                lo: 0.5,
                hi: 1.0,
                map: BranchMap::Affine {
                    slope: 1.0,
                    offset: 0.0,
                },
            },
        ];
        let cover = PiecewiseCover::new(good, false).unwrap();
        assert_eq!(cover.branches[1].lo, 0.6);
    }

    #[test]
    fn boundary_point_belongs_to_left_closed_branch() {
        let d = PiecewiseCover::linear_mod_one(2);
        assert_eq!(d.branch_index(0.5), 1);
    }
}
