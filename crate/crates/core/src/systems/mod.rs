//! The model zoo: dynamical systems with exact forward maps, metrics and
//! inverse-branch enumeration.

mod piecewise;
mod subset;
mod word;

pub use piecewise::{circle_dist, Branch, BranchMap, BranchPreimage, PiecewiseCover, TOL};
pub use subset::{BoxSet, Subset};
pub use word::Word;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// A point of one of the supported state spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Node(usize),
    Word(Word),
    Real(f64),
    Pair([f64; 2]),
}

impl Point {
    pub fn real(&self) -> Option<f64> {
        match self {
            Point::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn pair(&self) -> Option<[f64; 2]> {
        match self {
            Point::Pair(p) => Some(*p),
            _ => None,
        }
    }

    pub fn word(&self) -> Option<&Word> {
        match self {
            Point::Word(w) => Some(w),
            _ => None,
        }
    }

    pub fn node(&self) -> Option<usize> {
        match self {
            Point::Node(v) => Some(*v),
            _ => None,
        }
    }

    /// Coordinates of a metric point (empty for symbolic points).
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Point::Real(x) => vec![*x],
            Point::Pair(p) => p.to_vec(),
            _ => Vec::new(),
        }
    }

    /// Total order used for deterministic deduplication.
    pub fn total_cmp(&self, other: &Point) -> Ordering {
        fn rank(p: &Point) -> u8 {
            match p {
                Point::Node(_) => 0,
                Point::Word(_) => 1,
                Point::Real(_) => 2,
                Point::Pair(_) => 3,
            }
        }
        match (self, other) {
            (Point::Node(a), Point::Node(b)) => a.cmp(b),
            (Point::Word(a), Point::Word(b)) => a.cmp(b),
            (Point::Real(a), Point::Real(b)) => a.total_cmp(b),
            (Point::Pair(a), Point::Pair(b)) => a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])),
            _ => rank(self).cmp(&rank(other)),
        }
    }

    /// Equality up to the floating tolerance.
    pub fn approx_eq(&self, other: &Point) -> bool {
        match (self, other) {
            (Point::Real(a), Point::Real(b)) => (a - b).abs() <= TOL,
            (Point::Pair(a), Point::Pair(b)) => {
                (a[0] - b[0]).abs() <= TOL && (a[1] - b[1]).abs() <= TOL
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Node(v) => write!(f, "node {v}"),
            Point::Word(w) => write!(f, "{w}"),
            Point::Real(x) => write!(f, "{x}"),
            Point::Pair([a, b]) => write!(f, "({a}, {b})"),
        }
    }
}

/// Sorts and removes duplicates (floating points within [`TOL`]).
pub fn dedup_points(points: &mut Vec<Point>) {
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup_by(|a, b| a.approx_eq(b));
}

/// A set of preimages that is not a finite point list.
#[derive(Clone, Debug, PartialEq)]
pub struct Continuum {
    /// A point of the continuum; `coord` varies over `[lo, hi]`, other coordinates are fixed.
    pub anchor: Point,
    pub coord: usize,
    pub lo: f64,
    pub hi: f64,
}

/// One-step preimage structure at a point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PreimageSet {
    pub points: Vec<Point>,
    pub continua: Vec<Continuum>,
}

impl PreimageSet {
    pub fn into_discrete(self) -> Result<Vec<Point>> {
        match self.continua.first() {
            Some(c) => Err(Error::NonDiscrete {
                lo: c.lo,
                hi: c.hi,
                coord: c.coord,
            }),
            None => Ok(self.points),
        }
    }
}

/// The supported model families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SystemKind {
    /// Functional graph on `0..image.len()` with the discrete metric.
    FiniteMap {
        image: Vec<usize>,
    },
    /// One-sided shift of finite type with 0/1 transition matrix.
    Subshift {
        alphabet: usize,
        transitions: Vec<Vec<u8>>,
    },
    /// Shift on `{0,2}`-sequences (symbols 0 and 1 here, 1 standing for the digit two)
    /// in which every window of length `2^j` holds at most `j` twos.
    CantorFixture,
    PiecewiseCover(PiecewiseCover),
    /// Unit square with the two-piece map whose essential set is `[0,1]×{0,1}`.
    SquareFixture,
    /// `[0,1]×Δ`, `Δ = {0} ∪ {2^-j}`, truncated to `levels` nonzero rungs below 1.
    LadderFixture {
        levels: usize,
    },
    CircleRotation {
        angle: f64,
    },
}

/// A dynamical system together with an optional closed restriction `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    #[serde(flatten)]
    pub kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<Subset>,
}

/// Largest window exponent checked by the Cantor constraint (windows up to `2^30`).
const CANTOR_MAX_EXP: u32 = 30;

impl SystemModel {
    fn from_kind(kind: SystemKind) -> Self {
        SystemModel {
            kind,
            restriction: None,
        }
    }

    /// Shift of finite type on `alphabet` symbols.
    pub fn subshift(alphabet: usize, transitions: Vec<Vec<u8>>) -> Result<Self> {
        let m = SystemModel::from_kind(SystemKind::Subshift {
            alphabet,
            transitions,
        });
        m.validate()?;
        Ok(m)
    }

    pub fn full_shift(alphabet: usize) -> Self {
        SystemModel::subshift(alphabet, vec![vec![1; alphabet]; alphabet]).expect("full shift")
    }

    pub fn golden_mean() -> Self {
        SystemModel::subshift(2, vec![vec![1, 1], vec![1, 0]]).expect("golden mean shift")
    }

    pub fn piecewise(cover: PiecewiseCover) -> Self {
        SystemModel::from_kind(SystemKind::PiecewiseCover(cover))
    }

    pub fn build_piecewise_cover(branches: Vec<Branch>, circle: bool) -> Result<Self> {
        Ok(SystemModel::piecewise(PiecewiseCover::new(
            branches, circle,
        )?))
    }

    pub fn doubling() -> Self {
        SystemModel::piecewise(PiecewiseCover::linear_mod_one(2))
    }

    pub fn linear_mod_one(k: u32) -> Self {
        SystemModel::piecewise(PiecewiseCover::linear_mod_one(k))
    }

    /// `x ↦ 2x` on `[0,1/2]`, `x ↦ 1` on `[1/2,1]`.
    pub fn flat_top() -> Self {
        let branches = vec![
            Branch {
                lo: 0.0,
                hi: 0.5,
                map: BranchMap::Affine {
                    slope: 2.0,
                    offset: 0.0,
                },
            },
            Branch {
                lo: 0.5,
                hi: 1.0,
                map: BranchMap::Constant { value: 1.0 },
            },
        ];
        SystemModel::build_piecewise_cover(branches, false).expect("flat-top map")
    }

    /// `x ↦ x²` on `[0,1]`.
    pub fn squaring() -> Self {
        let branches = vec![Branch {
            lo: 0.0,
            hi: 1.0,
            map: BranchMap::Power { exponent: 2.0 },
        }];
        SystemModel::build_piecewise_cover(branches, false).expect("squaring map")
    }

    /// `x ↦ x/2` on `[0,1]`.
    pub fn halving() -> Self {
        let branches = vec![Branch {
            lo: 0.0,
            hi: 1.0,
            map: BranchMap::Affine {
                slope: 0.5,
                offset: 0.0,
            },
        }];
        SystemModel::build_piecewise_cover(branches, false).expect("halving map")
    }

    pub fn square_fixture() -> Self {
        SystemModel::from_kind(SystemKind::SquareFixture)
    }

    pub fn ladder_fixture(levels: usize) -> Self {
        SystemModel::from_kind(SystemKind::LadderFixture {
            levels: levels.max(1),
        })
    }

    pub fn cantor_fixture() -> Self {
        SystemModel::from_kind(SystemKind::CantorFixture)
    }

    pub fn finite_map(image: Vec<usize>) -> Result<Self> {
        let m = SystemModel::from_kind(SystemKind::FiniteMap { image });
        m.validate()?;
        Ok(m)
    }

    pub fn rotation(angle: f64) -> Self {
        SystemModel::from_kind(SystemKind::CircleRotation {
            angle: angle.rem_euclid(1.0),
        })
    }

    /// Same system with restriction `Y`.
    pub fn restricted(&self, subset: Subset) -> Self {
        SystemModel {
            kind: self.kind.clone(),
            restriction: Some(subset),
        }
    }

    pub fn unrestricted(&self) -> Self {
        SystemModel {
            kind: self.kind.clone(),
            restriction: None,
        }
    }

    /// Parses and validates a JSON descriptor.
    pub fn from_json(text: &str) -> Result<Self> {
        let m: SystemModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SystemKind::Subshift {
                alphabet,
                transitions,
            } => {
                if *alphabet == 0 || transitions.len() != *alphabet {
                    return Err(Error::InvalidModel(format!(
                        "alphabet {alphabet} does not match {} matrix rows",
                        transitions.len()
                    )));
                }
                for (row, r) in transitions.iter().enumerate() {
                    if r.len() != *alphabet {
                        return Err(Error::NotSquare {
                            rows: *alphabet,
                            row,
                            len: r.len(),
                        });
                    }
                    if r.iter().any(|&v| v > 1) {
                        return Err(Error::InvalidModel(format!(
                            "row {row} has entries other than 0/1"
                        )));
                    }
                    if r.iter().all(|&v| v == 0) {
                        return Err(Error::DeadRow { row });
                    }
                }
            }
            SystemKind::FiniteMap { image } => {
                if image.is_empty() {
                    return Err(Error::InvalidModel("finite map without nodes".into()));
                }
                if let Some((v, t)) = image.iter().enumerate().find(|(_, &t)| t >= image.len()) {
                    return Err(Error::InvalidModel(format!(
                        "node {v} maps to missing node {t}"
                    )));
                }
            }
            SystemKind::PiecewiseCover(c) => {
                PiecewiseCover::new(c.branches.clone(), c.circle)?;
            }
            SystemKind::CircleRotation { angle } if !angle.is_finite() => {
                return Err(Error::InvalidModel("rotation angle must be finite".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn variant_name(&self) -> &'static str {
        match self.kind {
            SystemKind::FiniteMap { .. } => "finite_map",
            SystemKind::Subshift { .. } => "subshift",
            SystemKind::CantorFixture => "cantor_fixture",
            SystemKind::PiecewiseCover(_) => "piecewise_cover",
            SystemKind::SquareFixture => "square_fixture",
            SystemKind::LadderFixture { .. } => "ladder_fixture",
            SystemKind::CircleRotation { .. } => "circle_rotation",
        }
    }

    /// Alphabet size for symbolic models.
    pub fn alphabet(&self) -> Option<usize> {
        match &self.kind {
            SystemKind::Subshift { alphabet, .. } => Some(*alphabet),
            SystemKind::CantorFixture => Some(2),
            _ => None,
        }
    }

    /// Transition matrix of a shift of finite type.
    pub fn transitions(&self) -> Option<&Vec<Vec<u8>>> {
        match &self.kind {
            SystemKind::Subshift { transitions, .. } => Some(transitions),
            _ => None,
        }
    }

    /// `k` when the model is the circle map `x ↦ kx mod 1`.
    pub fn linear_circle_degree(&self) -> Option<u32> {
        let SystemKind::PiecewiseCover(c) = &self.kind else {
            return None;
        };
        let k = c.branches.len() as f64;
        let linear = c.circle
            && c.branches.iter().all(|b| {
                matches!(b.map, BranchMap::Affine { slope, .. } if (slope - k).abs() < 1e-12)
                    && ((b.hi - b.lo) * k - 1.0).abs() < 1e-12
            });
        linear.then_some(c.branches.len() as u32)
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(
            self.kind,
            SystemKind::Subshift { .. } | SystemKind::CantorFixture
        )
    }

    /// Whether `x` is a point of the state space.
    pub fn contains(&self, x: &Point) -> bool {
        match (&self.kind, x) {
            (SystemKind::FiniteMap { image }, Point::Node(v)) => *v < image.len(),
            (SystemKind::Subshift { .. }, Point::Word(w)) => self.word_admissible(w),
            (SystemKind::CantorFixture, Point::Word(w)) => cantor_admissible(w),
            (SystemKind::PiecewiseCover(c), Point::Real(t)) => c.contains(*t),
            (SystemKind::CircleRotation { .. }, Point::Real(t)) => (0.0..1.0).contains(t),
            (SystemKind::SquareFixture, Point::Pair([a, b])) => {
                (-TOL..=1.0 + TOL).contains(a) && (-TOL..=1.0 + TOL).contains(b)
            }
            (SystemKind::LadderFixture { levels }, Point::Pair([t, s])) => {
                (-TOL..=1.0 + TOL).contains(t) && ladder_level(*s, *levels).is_some()
            }
            _ => false,
        }
    }

    fn check(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::PointMismatch {
                point: x.to_string(),
                variant: self.variant_name(),
            })
        }
    }

    fn word_admissible(&self, w: &Word) -> bool {
        let Some(t) = self.transitions() else {
            return false;
        };
        let a = t.len();
        let span = w.preperiod() + w.period() + 1;
        (0..span).all(|i| {
            let (s, u) = (w.symbol(i) as usize, w.symbol(i + 1) as usize);
            s < a && u < a && t[s][u] == 1
        })
    }

    /// Whether `x` lies in the restriction (always true without one).
    pub fn in_restriction(&self, x: &Point) -> bool {
        self.restriction.as_ref().map_or(true, |r| r.contains(x))
    }

    /// The forward map.
    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.check(x)?;
        Ok(self.apply_unchecked(x))
    }

    /// The forward map without membership validation (callers guarantee the variant).
    pub fn apply_unchecked(&self, x: &Point) -> Point {
        match (&self.kind, x) {
            (SystemKind::FiniteMap { image }, Point::Node(v)) => Point::Node(image[*v]),
            (SystemKind::Subshift { .. } | SystemKind::CantorFixture, Point::Word(w)) => {
                Point::Word(w.shift())
            }
            (SystemKind::PiecewiseCover(c), Point::Real(t)) => Point::Real(c.apply(*t)),
            (SystemKind::CircleRotation { angle }, Point::Real(t)) => Point::Real(wrap(t + angle)),
            (SystemKind::SquareFixture, Point::Pair(p)) => Point::Pair(square_alpha(*p)),
            (SystemKind::LadderFixture { levels }, Point::Pair([t, s])) => {
                Point::Pair(ladder_alpha(*t, *s, *levels))
            }
            _ => x.clone(),
        }
    }

    /// The inner map `β(x₁,x₂) = (x₁, x₂²(2−x₁)/2)` of the square fixture's composition operator.
    pub fn square_beta(p: [f64; 2]) -> [f64; 2] {
        [p[0], p[1] * p[1] * (2.0 - p[0]) / 2.0]
    }

    /// Distance between two points of the state space.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub fn distance_unchecked(&self, x: &Point, y: &Point) -> f64 {
        match (&self.kind, x, y) {
            (SystemKind::FiniteMap { .. }, Point::Node(a), Point::Node(b)) => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            (_, Point::Word(a), Point::Word(b)) => match a.first_difference(b) {
                None => 0.0,
                Some(i) => 0.5f64.powi(i as i32 + 1),
            },
            (SystemKind::PiecewiseCover(c), Point::Real(a), Point::Real(b)) => c.distance(*a, *b),
            (SystemKind::CircleRotation { .. }, Point::Real(a), Point::Real(b)) => {
                circle_dist(*a, *b)
            }
            (_, Point::Pair(a), Point::Pair(b)) => {
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            }
            _ => f64::NAN,
        }
    }

    /// Diameter of the state space under its metric.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            SystemKind::FiniteMap { image } => {
                if image.len() > 1 {
                    1.0
                } else {
                    0.0
                }
            }
            SystemKind::Subshift { .. } | SystemKind::CantorFixture => 0.5,
            SystemKind::PiecewiseCover(c) => {
                if c.circle {
                    0.5
                } else {
                    c.hi() - c.lo()
                }
            }
            SystemKind::CircleRotation { .. } => 0.5,
            SystemKind::SquareFixture | SystemKind::LadderFixture { .. } => 2f64.sqrt(),
        }
    }

    /// One-step preimages of `x` in the whole state space.
    pub fn preimage_set(&self, x: &Point) -> Result<PreimageSet> {
        self.check(x)?;
        let mut set = PreimageSet::default();
        match (&self.kind, x) {
            (SystemKind::FiniteMap { image }, Point::Node(v)) => {
                set.points = (0..image.len())
                    .filter(|&u| image[u] == *v)
                    .map(Point::Node)
                    .collect();
            }
            (SystemKind::Subshift { transitions, .. }, Point::Word(w)) => {
                let first = w.symbol(0) as usize;
                set.points = (0..transitions.len())
                    .filter(|&s| transitions[s][first] == 1)
                    .map(|s| Point::Word(w.prepend(s as u8)))
                    .collect();
            }
            (SystemKind::CantorFixture, Point::Word(w)) => {
                set.points = (0..2u8)
                    .map(|s| w.prepend(s))
                    .filter(cantor_admissible)
                    .map(Point::Word)
                    .collect();
            }
            (SystemKind::PiecewiseCover(c), Point::Real(t)) => {
                for b in c.preimages(*t) {
                    match b {
                        BranchPreimage::Point(p) => set.points.push(Point::Real(p)),
                        BranchPreimage::Interval(lo, hi) => set.continua.push(Continuum {
                            anchor: Point::Real(lo),
                            coord: 0,
                            lo,
                            hi,
                        }),
                    }
                }
            }
            (SystemKind::CircleRotation { angle }, Point::Real(t)) => {
                set.points.push(Point::Real(wrap(t - angle)));
            }
            (SystemKind::SquareFixture, Point::Pair(p)) => {
                set.points.push(Point::Pair(SystemModel::square_beta(*p)));
                if (p[1] - 1.0).abs() <= TOL && p[0] > TOL {
                    let lo = (2.0 - p[0]) / 2.0;
                    set.continua.push(Continuum {
                        anchor: Point::Pair([p[0], 1.0]),
                        coord: 1,
                        lo,
                        hi: 1.0,
                    });
                }
            }
            (SystemKind::LadderFixture { levels }, Point::Pair([t, s])) => {
                match ladder_level(*s, *levels) {
                    Some(None) => set.points.push(Point::Pair([*t, 0.0])),
                    Some(Some(j)) => {
                        if j < *levels {
                            set.points
                                .push(Point::Pair([*t, 0.5f64.powi(j as i32 + 1)]));
                        }
                        if j == 0 {
                            set.points.push(Point::Pair([t * t, 1.0]));
                        }
                    }
                    None => {}
                }
            }
            _ => {}
        }
        dedup_points(&mut set.points);
        Ok(set)
    }

    /// One-step preimages intersected with the restriction.
    pub fn restricted_preimage_set(&self, x: &Point) -> Result<PreimageSet> {
        let mut set = self.preimage_set(x)?;
        if let Some(r) = &self.restriction {
            set.points.retain(|p| r.contains(p));
            let mut continua = Vec::new();
            for c in set.continua {
                let (points, rest) = r.intersect_continuum(&c);
                set.points.extend(points);
                continua.extend(rest);
            }
            set.continua = continua;
            dedup_points(&mut set.points);
        }
        Ok(set)
    }

    /// The exact `n`-th preimage set, optionally intersected with the restriction at every level.
    pub fn preimages(&self, x: &Point, n: usize, within_restriction: bool) -> Result<Vec<Point>> {
        if n == 0 {
            return Err(Error::Precondition(
                "preimage depth must be at least 1".into(),
            ));
        }
        self.check(x)?;
        let mut frontier = vec![x.clone()];
        for _ in 0..n {
            let mut next = Vec::new();
            for p in &frontier {
                let set = if within_restriction {
                    self.restricted_preimage_set(p)?
                } else {
                    self.preimage_set(p)?
                };
                next.extend(set.into_discrete()?);
            }
            dedup_points(&mut next);
            frontier = next;
        }
        Ok(frontier)
    }

    /// Upper bound on `|α⁻¹(x)|`; `None` when some preimage set is a continuum.
    pub fn sheet_bound(&self) -> Option<usize> {
        match &self.kind {
            SystemKind::FiniteMap { image } => {
                let mut counts = vec![0usize; image.len()];
                for &t in image {
                    counts[t] += 1;
                }
                counts.into_iter().max()
            }
            SystemKind::Subshift { transitions, .. } => (0..transitions.len())
                .map(|c| transitions.iter().filter(|r| r[c] == 1).count())
                .max(),
            SystemKind::CantorFixture => Some(2),
            SystemKind::PiecewiseCover(c) => c.sheet_bound(),
            SystemKind::CircleRotation { .. } => Some(1),
            SystemKind::SquareFixture => None,
            SystemKind::LadderFixture { .. } => Some(2),
        }
    }

    /// `d_n(x,y) = max_{i<n} d(αⁱx, αⁱy)`.
    pub fn dn_distance(&self, x: &Point, y: &Point, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Precondition("d_n needs n ≥ 1".into()));
        }
        self.check(x)?;
        self.check(y)?;
        let (mut a, mut b) = (x.clone(), y.clone());
        let mut best = 0.0f64;
        for i in 0..n {
            best = best.max(self.distance_unchecked(&a, &b));
            if i + 1 < n {
                a = self.apply_unchecked(&a);
                b = self.apply_unchecked(&b);
            }
        }
        Ok(best)
    }

    /// `(x, αx, …, αⁿ⁻¹x)`.
    pub fn orbit(&self, x: &Point, n: usize) -> Result<Vec<Point>> {
        self.check(x)?;
        let mut out = Vec::with_capacity(n);
        let mut p = x.clone();
        for i in 0..n {
            out.push(p.clone());
            if i + 1 < n {
                p = self.apply_unchecked(&p);
            }
        }
        Ok(out)
    }
}

/// Symbolic helpers shared by the shift estimators.
impl SystemModel {
    /// Whether `a → b` is an allowed transition (Cantor: always locally allowed).
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        match &self.kind {
            SystemKind::Subshift { transitions, .. } => transitions[a as usize][b as usize] == 1,
            SystemKind::CantorFixture => true,
            _ => false,
        }
    }

    /// Whether a finite word is a factor of some point of the symbolic model.
    pub fn finite_word_admissible(&self, w: &[u8]) -> bool {
        match &self.kind {
            SystemKind::Subshift { transitions, .. } => {
                let a = transitions.len();
                w.iter().all(|&s| (s as usize) < a)
                    && w.windows(2)
                        .all(|p| transitions[p[0] as usize][p[1] as usize] == 1)
            }
            SystemKind::CantorFixture => cantor_prefix_admissible(w),
            _ => false,
        }
    }

    /// All admissible words of length `len` in lexicographic order.
    pub fn words(&self, len: usize) -> Result<Vec<Vec<u8>>> {
        let a = self
            .alphabet()
            .ok_or_else(|| Error::Precondition("word enumeration needs a symbolic model".into()))?;
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(len);
        fn rec(m: &SystemModel, a: usize, len: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if cur.len() == len {
                out.push(cur.clone());
                return;
            }
            for s in 0..a as u8 {
                if let Some(&last) = cur.last() {
                    if !m.allowed(last, s) {
                        continue;
                    }
                }
                cur.push(s);
                if !matches!(m.kind, SystemKind::CantorFixture) || cantor_prefix_admissible(cur) {
                    rec(m, a, len, cur, out);
                }
                cur.pop();
            }
        }
        rec(self, a, len, &mut cur, &mut out);
        Ok(out)
    }

    /// Number of admissible words of length `len` of a shift of finite type.
    pub fn word_count(&self, len: usize) -> Result<u128> {
        let t = self.transitions().ok_or_else(|| {
            Error::Precondition("word counting needs a shift of finite type".into())
        })?;
        if len == 0 {
            return Ok(1);
        }
        let mut v = vec![1u128; t.len()];
        for _ in 1..len {
            v = (0..t.len())
                .map(|i| (0..t.len()).filter(|&j| t[i][j] == 1).map(|j| v[j]).sum())
                .collect();
        }
        Ok(v.iter().sum())
    }

    /// The canonical infinite continuation of a finite admissible word:
    /// repeatedly append the smallest allowed successor until a symbol repeats.
    pub fn extend_word(&self, w: &[u8]) -> Word {
        match &self.kind {
            SystemKind::Subshift { transitions, .. } => {
                let Some(&last) = w.last() else {
                    return self.extend_word(&[0]);
                };
                let mut seq = vec![last];
                loop {
                    let cur = *seq.last().unwrap() as usize;
                    let next = (0..transitions.len())
                        .find(|&j| transitions[cur][j] == 1)
                        .expect("validated: no dead rows") as u8;
                    if let Some(p) = seq.iter().position(|&s| s == next) {
                        let mut prefix = w[..w.len() - 1].to_vec();
                        prefix.extend_from_slice(&seq[..p]);
                        return Word::new(prefix, seq[p..].to_vec());
                    }
                    seq.push(next);
                }
            }
            _ => Word::new(w.to_vec(), vec![0]),
        }
    }

    /// Transition matrix keeping only edges inside components that carry a cycle:
    /// the shift on the union of the irreducible components.
    pub fn recurrent_transitions(&self) -> Option<Vec<Vec<u8>>> {
        let t = self.transitions()?;
        let adj = crate::graph::adjacency(t);
        let mut out = vec![vec![0u8; t.len()]; t.len()];
        for comp in crate::graph::sccs(&adj) {
            if !crate::graph::is_cyclic(&adj, &comp) {
                continue;
            }
            for &i in &comp {
                for &j in &comp {
                    out[i][j] = t[i][j];
                }
            }
        }
        Some(out)
    }
}

fn wrap(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    if r >= 1.0 - TOL * 0.5 {
        0.0
    } else {
        r
    }
}

/// Whether `(x₁,x₂)` lies in the lower piece `x₂ ≤ (2−x₁)/2` of the square fixture.
pub fn square_lower_piece(p: [f64; 2]) -> bool {
    p[1] <= (2.0 - p[0]) / 2.0
}

fn square_alpha(p: [f64; 2]) -> [f64; 2] {
    if square_lower_piece(p) {
        [p[0], (2.0 * p[1] / (2.0 - p[0])).max(0.0).sqrt().min(1.0)]
    } else {
        [p[0], 1.0]
    }
}

/// `Some(None)` for the bottom line, `Some(Some(j))` for the rung `2^-j`.
pub fn ladder_level(s: f64, levels: usize) -> Option<Option<usize>> {
    if s.abs() <= TOL {
        return Some(None);
    }
    if s <= 0.0 || s > 1.0 + TOL {
        return None;
    }
    let j = (-s.log2()).round();
    if j < 0.0 || j as usize > levels {
        return None;
    }
    ((s - 0.5f64.powi(j as i32)).abs() <= TOL).then_some(Some(j as usize))
}

fn ladder_alpha(t: f64, s: f64, levels: usize) -> [f64; 2] {
    match ladder_level(s, levels) {
        Some(Some(0)) => [t.max(0.0).sqrt(), 1.0],
        Some(Some(j)) => [t, 0.5f64.powi(j as i32 - 1)],
        _ => [t, s],
    }
}

/// Every window of length `2^j` (`j ≥ 1`) of the sequence holds at most `j` ones.
pub fn cantor_admissible(w: &Word) -> bool {
    if w.cycle().iter().any(|&s| s != 0) {
        return false;
    }
    cantor_prefix_admissible(w.prefix())
}

/// The finite word followed by zeros satisfies the window constraint.
pub fn cantor_prefix_admissible(prefix: &[u8]) -> bool {
    if prefix.iter().any(|&s| s > 1) {
        return false;
    }
    let mut ones = vec![0usize; prefix.len() + 1];
    for (i, &s) in prefix.iter().enumerate() {
        ones[i + 1] = ones[i] + s as usize;
    }
    for end in 1..=prefix.len() {
        for j in 1..=CANTOR_MAX_EXP {
            let len = 1usize << j;
            let start = end.saturating_sub(len);
            if ones[end] - ones[start] > j as usize {
                return false;
            }
            if start == 0 {
                break;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_preimages_of_one() {
        let g = SystemModel::golden_mean();
        let x = Point::Word(Word::new(vec![1], vec![0]));
        let pre = g.preimages(&x, 1, false).unwrap();
        assert_eq!(pre, vec![Point::Word(Word::new(vec![0, 1], vec![0]))]);
    }

    #[test]
    fn dead_row_rejected() {
        assert!(matches!(
            SystemModel::subshift(2, vec![vec![1, 1], vec![0, 0]]),
            Err(Error::DeadRow { row: 1 })
        ));
    }

    #[test]
    fn square_fixture_examples() {
        let s = SystemModel::square_fixture();
        assert_eq!(
            s.apply(&Point::Pair([0.5, 1.0])).unwrap(),
            Point::Pair([0.5, 1.0])
        );
        let y = s.apply(&Point::Pair([0.0, 0.25])).unwrap().pair().unwrap();
        assert!((y[1] - 0.5).abs() < 1e-15);
        assert_eq!(SystemModel::square_beta([0.0, 0.5]), [0.0, 0.25]);
        assert_eq!(SystemModel::square_beta([0.0, 0.25]), [0.0, 0.0625]);
    }

    #[test]
    fn ladder_rungs_move_up() {
        let l = SystemModel::ladder_fixture(12);
        assert_eq!(
            l.apply(&Point::Pair([0.3, 0.125])).unwrap(),
            Point::Pair([0.3, 0.25])
        );
        assert_eq!(
            l.apply(&Point::Pair([0.25, 1.0])).unwrap(),
            Point::Pair([0.5, 1.0])
        );
        let pre = l.preimages(&Point::Pair([0.5, 1.0]), 1, false).unwrap();
        assert_eq!(pre, vec![Point::Pair([0.25, 1.0]), Point::Pair([0.5, 0.5])]);
    }

    #[test]
    fn flat_top_reports_interval() {
        let e = SystemModel::flat_top();
        let err = e.preimages(&Point::Real(1.0), 1, false).unwrap_err();
        assert!(matches!(err, Error::NonDiscrete { lo, hi, .. } if lo == 0.5 && hi == 1.0));
        assert_eq!(
            e.preimages(&Point::Real(0.5), 1, false).unwrap(),
            vec![Point::Real(0.25)]
        );
    }

    #[test]
    fn cantor_window_rule() {
        assert!(cantor_prefix_admissible(&[1, 0, 0, 1]));
        assert!(!cantor_prefix_admissible(&[1, 1]));
        assert!(cantor_prefix_admissible(&[1, 0, 1, 0, 1]));
        assert!(!cantor_prefix_admissible(&[1, 0, 1, 0, 1, 0, 1]));
        assert!(!cantor_admissible(&Word::periodic(vec![0, 0, 0, 1])));
    }
}
