//! Non-contraction radius and the pull-back net property: `α̃⁻ⁿ(F(ε))` is
//! `(n, ε)`-spanning for an `ε`-net `F(ε)` of the restriction.

use super::nets::{sample_strands, shared_symbols, word_net, NetKind, OrbitTable};
use crate::error::Result;
use crate::systems::{Point, SystemModel};
use serde::Serialize;
use std::collections::HashMap;

/// Outcome of [`check_property_star`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyStar {
    pub certified: bool,
    pub epsilon: f64,
    /// Verified non-contraction radius.
    pub radius: Option<f64>,
    /// The net `F(ε)`.
    pub net: Vec<Point>,
    /// Largest `n` for which the pulled-back net was checked.
    pub verified_up_to: usize,
    /// Number of sample points each check covered.
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// What the certificate covers.
    pub level: String,
}

const RADII: [i32; 6] = [1, 2, 3, 4, 5, 6];

fn flat_sample(
    host: &SystemModel,
    spacing: f64,
    depth: usize,
    cap: usize,
) -> Result<(Vec<Point>, bool)> {
    let (all, continuum) = if host.is_symbolic() {
        (word_net(host, depth)?, true)
    } else {
        let strands = sample_strands(host, spacing)?;
        let continuum = strands.iter().any(|s| s.continuous);
        (
            strands
                .into_iter()
                .flat_map(|s| s.points)
                .collect::<Vec<_>>(),
            continuum,
        )
    };
    if all.len() <= cap {
        return Ok((all, continuum));
    }
    let step = all.len() as f64 / cap as f64;
    Ok((
        (0..cap)
            .map(|k| all[(k as f64 * step) as usize].clone())
            .collect(),
        continuum,
    ))
}

/// Largest `r ∈ {2⁻¹, …, 2⁻⁶}` with `d(αx, αy) ≥ d(x, y)` for all sampled pairs closer than `r`.
///
/// On a continuum every candidate must be tested by at least one pair; on finite
/// samples the condition may hold vacuously.
pub fn non_contracting_radius(host: &SystemModel) -> Result<Option<f64>> {
    host.validate()?;
    let (pts, continuum) = flat_sample(host, 1.0 / 512.0, 8, 600)?;
    let images: Vec<Point> = pts.iter().map(|p| host.apply_unchecked(p)).collect();
    let mut pairs = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = host.distance_unchecked(&pts[i], &pts[j]);
            if d > 0.0 && d < 0.5 {
                pairs.push((d, host.distance_unchecked(&images[i], &images[j])));
            }
        }
    }
    for k in RADII {
        let r = 0.5f64.powi(k);
        let tested: Vec<&(f64, f64)> = pairs.iter().filter(|p| p.0 < r).collect();
        if continuum && tested.is_empty() {
            continue;
        }
        if tested.iter().all(|&&(d, e)| e >= d * (1.0 - 1e-9) - 1e-15) {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// Builds `F(ε)` and checks by sampling that `α̃⁻ⁿ(F(ε))` is `(n, ε)`-spanning for `n ≤ n_max`.
pub fn check_property_star(host: &SystemModel, eps: f64, n_max: usize) -> Result<PropertyStar> {
    let mut out = PropertyStar {
        certified: false,
        epsilon: eps,
        radius: None,
        net: Vec::new(),
        verified_up_to: 0,
        samples: 0,
        reason: None,
        level: "certified over the sample".into(),
    };
    out.radius = non_contracting_radius(host)?;
    if out.radius.is_none() {
        out.reason = Some("no non-contraction radius holds on the sampled pairs".into());
        return Ok(out);
    }
    let m = shared_symbols(eps);
    out.net = if host.is_symbolic() {
        word_net(host, m)?
    } else {
        let strands = sample_strands(host, eps / 16.0)?;
        let table = OrbitTable::build(host, &strands, 1, None)?;
        table
            .greedy(1, eps, NetKind::Spanning)
            .into_iter()
            .map(|i| table.point(i).clone())
            .collect()
    };
    let (samples, _) = flat_sample(host, eps / 4.0, m + n_max + 1, 2048)?;
    out.samples = samples.len();
    for n in 1..=n_max {
        let mut pulled = Vec::new();
        for f in &out.net {
            match host.preimages(f, n, true) {
                Ok(p) => pulled.extend(p),
                Err(e) => {
                    out.reason = Some(format!("preimages of {f} at level {n}: {e}"));
                    return Ok(out);
                }
            }
            if pulled.len() > 1 << 17 {
                out.reason = Some(format!(
                    "pulled-back net exceeds the size budget at level {n}"
                ));
                out.certified = n > 1;
                return Ok(out);
            }
        }
        let index = NearIndex::new(host, &pulled, eps);
        if let Some(x) = samples.iter().find(|x| !index.covers(host, x, n, eps)) {
            out.reason = Some(format!("{x} is not shadowed at level {n}"));
            return Ok(out);
        }
        out.verified_up_to = n;
    }
    out.certified = true;
    Ok(out)
}

/// Number of net points that have an `n`-step chain of restricted preimages.
pub(crate) fn images_of_pullback(host: &SystemModel, net: &[Point], n: usize) -> Result<usize> {
    fn chain(host: &SystemModel, x: &Point, n: usize) -> Result<bool> {
        if n == 0 {
            return Ok(true);
        }
        for z in host.restricted_preimage_set(x)?.into_discrete()? {
            if chain(host, &z, n - 1)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
    let mut count = 0;
    for f in net {
        if chain(host, f, n)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Buckets points by the cell of their position so that `d < ε` only needs neighbouring cells.
struct NearIndex<'a> {
    points: &'a [Point],
    cells: HashMap<Vec<i64>, Vec<usize>>,
    wrap: Option<i64>,
    symbols: usize,
}

impl<'a> NearIndex<'a> {
    fn new(host: &SystemModel, points: &'a [Point], eps: f64) -> Self {
        let circle = host.linear_circle_degree().is_some()
            || matches!(&host.kind, crate::systems::SystemKind::PiecewiseCover(c) if c.circle)
            || matches!(host.kind, crate::systems::SystemKind::CircleRotation { .. });
        let wrap = circle.then(|| (1.0 / eps).floor().max(1.0) as i64);
        let mut idx = NearIndex {
            points,
            cells: HashMap::new(),
            wrap,
            symbols: shared_symbols(eps),
        };
        for (i, p) in points.iter().enumerate() {
            let k = idx.key(p, eps);
            idx.cells.entry(k).or_default().push(i);
        }
        idx
    }

    fn key(&self, p: &Point, eps: f64) -> Vec<i64> {
        match p {
            Point::Word(w) => w.head(self.symbols).into_iter().map(i64::from).collect(),
            Point::Node(v) => vec![*v as i64],
            other => other
                .coords()
                .iter()
                .map(|c| match self.wrap {
                    Some(m) => ((c * m as f64).floor() as i64).rem_euclid(m),
                    None => (c / eps).floor() as i64,
                })
                .collect(),
        }
    }

    fn covers(&self, host: &SystemModel, x: &Point, n: usize, eps: f64) -> bool {
        let key = self.key(x, eps);
        let mut keys = vec![key.clone()];
        if matches!(x, Point::Real(_) | Point::Pair(_)) {
            for j in 0..key.len() {
                let mut next = Vec::new();
                for k in &keys {
                    for off in [-1, 0, 1] {
                        let mut m = k.clone();
                        m[j] += off;
                        if let Some(w) = self.wrap {
                            m[j] = m[j].rem_euclid(w);
                        }
                        next.push(m);
                    }
                }
                next.sort();
                next.dedup();
                keys = next;
            }
        }
        keys.iter().any(|k| {
            self.cells.get(k).is_some_and(|list| {
                list.iter().any(|&i| {
                    host.dn_distance(x, &self.points[i], n)
                        .is_ok_and(|d| d < eps)
                })
            })
        })
    }
}
