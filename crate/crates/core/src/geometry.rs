//! Uniform grids, the mixed-radix order on joint arms, doubling
//! discretizations and ball-coverage queries.
//!
//! Joint arms on a grid with `K` segments per axis are digit strings of
//! length `M·d` over `{0,…,K}`. The most significant digit is player 1's
//! first axis; within a player block, axis 1 is more significant than axis 2.
//! Comparing ranks is therefore the same as comparing digit strings
//! lexicographically, which is what the coverage search exploits.

use crate::env::{JointArm, Norm};
use crate::error::{Error, Result};

/// Deepest doubling level any search may reach; keeps per-axis indices in `u32`.
pub const MAX_SUPPORTED_LEVEL: u32 = 30;

/// Uniform grid with markers `{0, 1/K, …, 1}` on each of the `M·d` axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    k: u32,
    players: usize,
    dim: usize,
}

/// Per-axis marker indices of a grid arm, `M·d` values each in `{0,…,K}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex(pub Vec<u32>);

impl GridIndex {
    pub fn digits(&self) -> &[u32] {
        &self.0
    }
}

impl GridSpec {
    pub fn new(k: u32, players: usize, dim: usize) -> Result<Self> {
        if k == 0 || players == 0 || dim == 0 {
            return Err(Error::domain("grid needs K, M and d all positive"));
        }
        Ok(GridSpec { k, players, dim })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of axes, `M·d`.
    pub fn axes(&self) -> usize {
        self.players * self.dim
    }

    /// Markers per axis and per player block.
    pub fn markers(&self) -> u64 {
        self.k as u64 + 1
    }

    /// Number of joint grid arms, `(K+1)^{M·d}`.
    pub fn size(&self) -> Result<u64> {
        (0..self.axes()).try_fold(1u64, |acc, _| {
            acc.checked_mul(self.markers())
                .ok_or_else(|| Error::domain("joint grid too large to enumerate"))
        })
    }

    /// Number of distinct blocks one player can choose, `(K+1)^d`.
    pub fn block_size(&self) -> u64 {
        self.markers().pow(self.dim as u32)
    }

    fn check(&self, idx: &GridIndex) -> Result<()> {
        if idx.0.len() != self.axes() {
            return Err(Error::domain(format!(
                "grid index has {} digits, expected {}",
                idx.0.len(),
                self.axes()
            )));
        }
        if let Some(d) = idx.0.iter().find(|&&d| d > self.k) {
            return Err(Error::domain(format!("grid digit {d} exceeds K = {}", self.k)));
        }
        Ok(())
    }

    /// Mixed-radix (base `K+1`) value of the digit string.
    pub fn rank(&self, idx: &GridIndex) -> Result<u64> {
        self.check(idx)?;
        idx.0.iter().try_fold(0u64, |acc, &d| {
            acc.checked_mul(self.markers())
                .and_then(|v| v.checked_add(d as u64))
                .ok_or_else(|| Error::domain("rank overflows u64"))
        })
    }

    pub fn unrank(&self, r: u64) -> Result<GridIndex> {
        let size = self.size()?;
        if r >= size {
            return Err(Error::domain(format!("rank {r} outside 0..{size}")));
        }
        let mut digits = vec![0u32; self.axes()];
        let mut rest = r;
        for d in digits.iter_mut().rev() {
            *d = (rest % self.markers()) as u32;
            rest /= self.markers();
        }
        Ok(GridIndex(digits))
    }

    /// Coordinate of marker `i`.
    #[inline]
    pub fn coordinate(&self, i: u32) -> f64 {
        i as f64 / self.k as f64
    }

    pub fn coords(&self, idx: &GridIndex) -> Vec<f64> {
        idx.0.iter().map(|&i| self.coordinate(i)).collect()
    }

    pub fn arm(&self, idx: &GridIndex) -> Result<JointArm> {
        self.check(idx)?;
        JointArm::new(self.coords(idx), self.players, self.dim)
    }

    /// Marker index of a coordinate that sits exactly on a marker.
    pub fn marker_of(&self, x: f64) -> Option<u32> {
        let i = (x * self.k as f64).round();
        if (0.0..=self.k as f64).contains(&i) && self.coordinate(i as u32) == x {
            Some(i as u32)
        } else {
            None
        }
    }

    /// Grid index of coordinates that lie exactly on grid markers.
    pub fn index_of(&self, coords: &[f64]) -> Option<GridIndex> {
        if coords.len() != self.axes() {
            return None;
        }
        coords.iter().map(|&x| self.marker_of(x)).collect::<Option<Vec<_>>>().map(GridIndex)
    }

    /// Closest grid arm, rounding each axis to its nearest marker with ties
    /// going to the smaller index.
    pub fn nearest_grid_arm(&self, a: &JointArm) -> Result<GridIndex> {
        if a.coords().len() != self.axes() {
            return Err(Error::domain("arm dimension does not match grid"));
        }
        let k = self.k as f64;
        Ok(GridIndex(
            a.coords()
                .iter()
                .map(|&x| (x * k - 0.5).ceil().clamp(0.0, k) as u32)
                .collect(),
        ))
    }
}

/// Level `n` of the doubling discretization: markers `{i/2^n : 0 ≤ i ≤ 2^n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DoublingLevel(pub u32);

impl DoublingLevel {
    pub fn segments(self) -> u32 {
        1 << self.0
    }

    #[inline]
    pub fn coordinate(self, i: u32) -> f64 {
        i as f64 * scale(self.0)
    }

    pub fn coords(self, idx: &GridIndex) -> Vec<f64> {
        idx.0.iter().map(|&i| self.coordinate(i)).collect()
    }

    /// The uniform grid this level corresponds to.
    pub fn grid(self, players: usize, dim: usize) -> Result<GridSpec> {
        GridSpec::new(self.segments(), players, dim)
    }

    pub fn refine(self) -> DoublingLevel {
        DoublingLevel(self.0 + 1)
    }
}

#[inline]
fn scale(level: u32) -> f64 {
    1.0 / (1u64 << level) as f64
}

/// Closed ball `B(center, radius)`; an infinite radius covers everything.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, point: &[f64], norm: Norm) -> bool {
        self.radius == f64::INFINITY || norm.distance(point, &self.center) <= self.radius
    }
}

pub fn is_covered(point: &[f64], balls: &[Ball], norm: Norm) -> bool {
    balls.iter().any(|b| b.contains(point, norm))
}

/// What changed in a ball set since it was last known to cover every
/// grid point up to the search cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageChange<'a> {
    /// No prior knowledge; search everything.
    Unknown,
    /// Nothing shrank, so coverage still holds.
    Unchanged,
    /// Exactly one ball shrank from `old_radius`; any uncovered point now
    /// lies inside the shell it vacated.
    Shrunk { center: &'a [f64], old_radius: f64 },
}

/// Smallest-rank uncovered point on the first doubling level `≥ start_level`
/// that has one, or `None` if every level up to `max_level` is covered.
pub fn find_uncovered_point(
    balls: &[Ball],
    start_level: DoublingLevel,
    max_level: u32,
    norm: Norm,
    players: usize,
    dim: usize,
) -> Option<(GridIndex, DoublingLevel)> {
    find_uncovered_point_after(
        balls,
        CoverageChange::Unknown,
        start_level,
        max_level,
        norm,
        players * dim,
    )
}

/// [`find_uncovered_point`] using knowledge of what changed since the ball
/// set last covered the space. Returns the same answer as the full search
/// whenever that knowledge is accurate.
pub fn find_uncovered_point_after(
    balls: &[Ball],
    change: CoverageChange<'_>,
    start_level: DoublingLevel,
    max_level: u32,
    norm: Norm,
    dims: usize,
) -> Option<(GridIndex, DoublingLevel)> {
    let max_level = max_level.min(MAX_SUPPORTED_LEVEL);
    if start_level.0 > max_level || dims == 0 {
        return None;
    }
    let shell = match change {
        CoverageChange::Unchanged => return None,
        CoverageChange::Unknown => None,
        CoverageChange::Shrunk { center, old_radius } => {
            let inner = balls
                .iter()
                .filter(|b| b.center.as_slice() == center)
                .map(|b| b.radius)
                .fold(0.0, f64::max);
            Some(Shell { center, inner, outer: old_radius })
        }
    };

    let everything: Vec<usize> = (0..balls.len()).collect();
    let top = Cover::new(balls, norm, dims, max_level, shell);
    let full = top.full_box();
    if top.box_covered(&full.0, &full.1, &everything) {
        return None;
    }
    for level in start_level.0..=max_level {
        let cover = Cover::new(balls, norm, dims, level, shell);
        let (lo, hi) = cover.full_box();
        if !cover.box_covered(&lo, &hi, &everything) {
            let point = cover
                .lex_min(lo, hi, 0, &everything)
                .expect("uncovered box has an uncovered point");
            return Some((GridIndex(point), DoublingLevel(level)));
        }
    }
    None
}

#[derive(Debug, Clone, Copy)]
struct Shell<'a> {
    center: &'a [f64],
    inner: f64,
    outer: f64,
}

/// Coverage queries over boxes of level-`n` grid points, given as inclusive
/// per-axis index ranges.
struct Cover<'a> {
    balls: &'a [Ball],
    norm: Norm,
    dims: usize,
    level: u32,
    scale: f64,
    shell: Option<Shell<'a>>,
}

impl<'a> Cover<'a> {
    fn new(balls: &'a [Ball], norm: Norm, dims: usize, level: u32, shell: Option<Shell<'a>>) -> Self {
        Cover { balls, norm, dims, level, scale: scale(level), shell }
    }

    fn full_box(&self) -> (Vec<u32>, Vec<u32>) {
        (vec![0; self.dims], vec![1u32 << self.level; self.dims])
    }

    /// Largest distance from `c` to a point of the box.
    #[inline]
    fn far(&self, c: &[f64], lo: &[u32], hi: &[u32]) -> f64 {
        self.norm.length((0..self.dims).map(|k| {
            let a = lo[k] as f64 * self.scale;
            let b = hi[k] as f64 * self.scale;
            (a - c[k]).abs().max((b - c[k]).abs())
        }))
    }

    /// Smallest distance from `c` to a point of the box.
    #[inline]
    fn near(&self, c: &[f64], lo: &[u32], hi: &[u32]) -> f64 {
        self.norm.length((0..self.dims).map(|k| {
            let a = lo[k] as f64 * self.scale;
            let b = hi[k] as f64 * self.scale;
            if c[k] < a {
                a - c[k]
            } else if c[k] > b {
                c[k] - b
            } else {
                0.0
            }
        }))
    }

    /// Balls from `candidates` that reach into the box, or `None` when a
    /// single ball (or the shell hint) already covers all of it.
    fn relevant(&self, lo: &[u32], hi: &[u32], candidates: &[usize]) -> Option<Vec<usize>> {
        if let Some(s) = self.shell {
            if self.far(s.center, lo, hi) <= s.inner || self.near(s.center, lo, hi) > s.outer {
                return None;
            }
        }
        let mut next = Vec::with_capacity(candidates.len());
        for &i in candidates {
            let b = &self.balls[i];
            if b.radius == f64::INFINITY || self.far(&b.center, lo, hi) <= b.radius {
                return None;
            }
            if self.near(&b.center, lo, hi) <= b.radius {
                next.push(i);
            }
        }
        Some(next)
    }

    /// True iff every grid point of the box is covered.
    fn box_covered(&self, lo: &[u32], hi: &[u32], candidates: &[usize]) -> bool {
        let next = match self.relevant(lo, hi, candidates) {
            None => return true,
            Some(next) => next,
        };
        if next.is_empty() {
            return false;
        }
        let (axis, width) = (0..self.dims)
            .map(|k| (k, hi[k] - lo[k]))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if width == 0 {
            // a single point that some ball reaches is inside that ball
            return true;
        }
        let mid = lo[axis] + width / 2;
        let mut left_hi = hi.to_vec();
        left_hi[axis] = mid;
        if !self.box_covered(lo, &left_hi, &next) {
            return false;
        }
        let mut right_lo = lo.to_vec();
        right_lo[axis] = mid + 1;
        self.box_covered(&right_lo, hi, &next)
    }

    /// Lexicographically smallest uncovered point in the box, where axes
    /// before `axis` are already pinned.
    fn lex_min(&self, lo: Vec<u32>, hi: Vec<u32>, mut axis: usize, candidates: &[usize]) -> Option<Vec<u32>> {
        let next = self.relevant(&lo, &hi, candidates)?;
        if !next.is_empty() && self.box_covered(&lo, &hi, &next) {
            return None;
        }
        while axis < self.dims && lo[axis] == hi[axis] {
            axis += 1;
        }
        if axis == self.dims {
            return Some(lo);
        }
        let mid = lo[axis] + (hi[axis] - lo[axis]) / 2;
        let mut left_hi = hi.clone();
        left_hi[axis] = mid;
        let mut right_lo = lo.clone();
        right_lo[axis] = mid + 1;
        self.lex_min(lo, left_hi, axis, &next)
            .or_else(|| self.lex_min(right_lo, hi, axis, &next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        let g = GridSpec::new(1, 2, 1).unwrap();
        let r = |d: &[u32]| g.rank(&GridIndex(d.to_vec())).unwrap();
        assert_eq!([r(&[0, 0]), r(&[0, 1]), r(&[1, 0]), r(&[1, 1])], [0, 1, 2, 3]);
        let g = GridSpec::new(2, 2, 1).unwrap();
        assert_eq!(g.rank(&GridIndex(vec![2, 1])).unwrap(), 7);
        assert_eq!(g.unrank(7).unwrap(), GridIndex(vec![2, 1]));
        assert_eq!(g.unrank(0).unwrap(), GridIndex(vec![0, 0]));
    }

    #[test]
    fn rank_is_bijection_on_small_grid() {
        let g = GridSpec::new(2, 2, 1).unwrap();
        let mut seen = [false; 9];
        for a in 0..=2 {
            for b in 0..=2 {
                let r = g.rank(&GridIndex(vec![a, b])).unwrap() as usize;
                assert!(!seen[r]);
                seen[r] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn rank_errors() {
        let g = GridSpec::new(2, 2, 1).unwrap();
        assert!(g.rank(&GridIndex(vec![3, 0])).is_err());
        assert!(g.rank(&GridIndex(vec![0])).is_err());
        assert!(g.unrank(9).is_err());
    }

    #[test]
    fn rank_round_trip_exhaustive() {
        for (k, m, d) in [(1, 1, 1), (2, 2, 1), (3, 2, 2), (4, 3, 1), (9, 2, 2)] {
            let g = GridSpec::new(k, m, d).unwrap();
            let size = g.size().unwrap();
            assert_eq!(size, (k as u64 + 1).pow((m * d) as u32));
            let mut prev: Option<GridIndex> = None;
            for r in 0..size {
                let idx = g.unrank(r).unwrap();
                assert_eq!(g.rank(&idx).unwrap(), r);
                // rank order is lexicographic digit order
                if let Some(p) = prev {
                    assert!(p < idx);
                }
                prev = Some(idx);
            }
        }
    }

    #[test]
    fn nearest_marker() {
        let g = GridSpec::new(10, 1, 1).unwrap();
        let arm = |x: f64| JointArm::new(vec![x], 1, 1).unwrap();
        assert_eq!(g.nearest_grid_arm(&arm(0.37)).unwrap(), GridIndex(vec![4]));
        assert_eq!(g.nearest_grid_arm(&arm(0.3)).unwrap(), GridIndex(vec![3]));
        assert_eq!(g.nearest_grid_arm(&arm(1.0)).unwrap(), GridIndex(vec![10]));
        let g = GridSpec::new(2, 1, 1).unwrap();
        // 0.25 is halfway between markers 0 and 0.5
        assert_eq!(g.nearest_grid_arm(&arm(0.25)).unwrap(), GridIndex(vec![0]));
    }

    #[test]
    fn nearest_marker_distance_bound() {
        use crate::rng::{stream, Purpose};
        use rand::Rng;
        let mut rng = stream(3, Purpose::Auxiliary(0));
        for k in [1u32, 3, 7, 10, 64] {
            let g = GridSpec::new(k, 2, 2).unwrap();
            for _ in 0..2500 {
                let coords: Vec<f64> = (0..4).map(|_| rng.random()).collect();
                let a = JointArm::new(coords, 2, 2).unwrap();
                let idx = g.nearest_grid_arm(&a).unwrap();
                let dist = Norm::LInf.distance(&g.coords(&idx), a.coords());
                assert!(dist <= 0.5 / k as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn index_of_exact_markers() {
        let g = GridSpec::new(3, 2, 1).unwrap();
        for r in 0..g.size().unwrap() {
            let idx = g.unrank(r).unwrap();
            assert_eq!(g.index_of(&g.coords(&idx)), Some(idx));
        }
        assert_eq!(g.index_of(&[0.5, 0.0]), None);
    }

    #[test]
    fn doubling_levels_nest() {
        for n in 0..8 {
            let coarse = DoublingLevel(n);
            let fine = coarse.refine();
            for i in 0..=coarse.segments() {
                assert_eq!(coarse.coordinate(i), fine.coordinate(2 * i));
            }
        }
        assert_eq!(DoublingLevel(1).coordinate(1), 0.5);
    }

    #[test]
    fn coverage_basics() {
        assert!(!is_covered(&[0.2, 0.2], &[], Norm::L2));
        let inf = Ball::new(vec![0.5, 0.5], f64::INFINITY);
        assert!(is_covered(&[0.0, 1.0], std::slice::from_ref(&inf), Norm::L2));
        let b = Ball::new(vec![0.5, 0.5], 0.3);
        assert!(!is_covered(&[0.0, 0.0], std::slice::from_ref(&b), Norm::L2));
        assert!(is_covered(&[0.5, 0.7], std::slice::from_ref(&b), Norm::L2));
        assert_eq!(find_uncovered_point(&[inf], DoublingLevel(0), 12, Norm::L2, 2, 1), None);
    }

    #[test]
    fn finds_corner_at_level_one() {
        let b = Ball::new(vec![0.5, 0.5], 0.3);
        let (idx, level) = find_uncovered_point(&[b], DoublingLevel(1), 20, Norm::L2, 2, 1).unwrap();
        assert_eq!((idx, level), (GridIndex(vec![0, 0]), DoublingLevel(1)));
    }

    #[test]
    fn descends_when_level_is_covered() {
        // corners are 0.7071 from the centre
        let b = Ball::new(vec![0.5, 0.5], 0.71);
        assert!(find_uncovered_point(std::slice::from_ref(&b), DoublingLevel(1), 20, Norm::L2, 2, 1).is_none());

        let balls = vec![
            Ball::new(vec![0.5, 0.5], 0.51),
            Ball::new(vec![0.0, 0.0], 0.01),
            Ball::new(vec![0.0, 1.0], 0.01),
            Ball::new(vec![1.0, 0.0], 0.01),
            Ball::new(vec![1.0, 1.0], 0.01),
        ];
        // every level-1 point is covered
        for i in 0..=2 {
            for j in 0..=2 {
                let p = [i as f64 / 2.0, j as f64 / 2.0];
                assert!(is_covered(&p, &balls, Norm::L2));
            }
        }
        // level 2: brute force the smallest-rank uncovered point
        let mut expect = None;
        'scan: for i in 0..=4u32 {
            for j in 0..=4u32 {
                let p = [i as f64 / 4.0, j as f64 / 4.0];
                if !is_covered(&p, &balls, Norm::L2) {
                    expect = Some(GridIndex(vec![i, j]));
                    break 'scan;
                }
            }
        }
        let got = find_uncovered_point(&balls, DoublingLevel(1), 20, Norm::L2, 2, 1).unwrap();
        assert_eq!(got, (expect.unwrap(), DoublingLevel(2)));
        assert_eq!(got.0, GridIndex(vec![0, 1]));
    }

    /// Brute-force smallest uncovered point at the first level that has one.
    fn brute(balls: &[Ball], start: u32, max: u32, norm: Norm, dims: usize) -> Option<(GridIndex, DoublingLevel)> {
        for level in start..=max {
            let lv = DoublingLevel(level);
            let g = lv.grid(1, dims).unwrap();
            for r in 0..g.size().unwrap() {
                let idx = g.unrank(r).unwrap();
                if !is_covered(&lv.coords(&idx), balls, norm) {
                    return Some((idx, lv));
                }
            }
        }
        None
    }

    fn ball_strategy(dims: usize) -> impl Strategy<Value = Ball> {
        (prop::collection::vec(0.0f64..=1.0, dims), 0.05f64..0.6).prop_map(|(c, r)| Ball::new(c, r))
    }

    fn norm_strategy() -> impl Strategy<Value = Norm> {
        prop_oneof![Just(Norm::L1), Just(Norm::L2), Just(Norm::LInf)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn search_matches_brute_force_2d(
            balls in prop::collection::vec(ball_strategy(2), 0..7),
            norm in norm_strategy(),
            start in 0u32..3,
        ) {
            let got = find_uncovered_point(&balls, DoublingLevel(start), 6, norm, 2, 1);
            prop_assert_eq!(got.clone(), brute(&balls, start, 6, norm, 2));
            if let Some((idx, lv)) = got {
                prop_assert!(!is_covered(&lv.coords(&idx), &balls, norm));
            }
        }

        #[test]
        fn search_matches_brute_force_3d(
            balls in prop::collection::vec(ball_strategy(3), 0..6),
            norm in norm_strategy(),
        ) {
            prop_assert_eq!(
                find_uncovered_point(&balls, DoublingLevel(0), 4, norm, 3, 1),
                brute(&balls, 0, 4, norm, 3)
            );
        }

        #[test]
        fn shrink_hint_agrees_with_full_search(
            mut balls in prop::collection::vec(ball_strategy(2), 1..7),
            norm in norm_strategy(),
            which in 0usize..7,
            factor in 0.3f64..1.0,
        ) {
            // make the set covering first, then shrink one ball
            balls.push(Ball::new(vec![0.5, 0.5], 0.75));
            let which = which % balls.len();
            if find_uncovered_point(&balls, DoublingLevel(0), 7, norm, 2, 1).is_some() {
                return Ok(());
            }
            let old = balls[which].radius;
            balls[which].radius = old * factor;
            let center = balls[which].center.clone();
            let hinted = find_uncovered_point_after(
                &balls,
                CoverageChange::Shrunk { center: &center, old_radius: old },
                DoublingLevel(1),
                7,
                norm,
                2,
            );
            prop_assert_eq!(hinted, find_uncovered_point(&balls, DoublingLevel(1), 7, norm, 2, 1));
        }

        #[test]
        fn rank_order_is_lexicographic(k in 1u32..6, a in prop::collection::vec(0u32..6, 3), b in prop::collection::vec(0u32..6, 3)) {
            let g = GridSpec::new(k, 3, 1).unwrap();
            let a = GridIndex(a.into_iter().map(|x| x.min(k)).collect());
            let b = GridIndex(b.into_iter().map(|x| x.min(k)).collect());
            prop_assert_eq!(g.rank(&a).unwrap().cmp(&g.rank(&b).unwrap()), a.cmp(&b));
        }
    }
}
