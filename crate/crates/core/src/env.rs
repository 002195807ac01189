//! Synthetic Lipschitz reward landscapes over the joint action space
//! `[0,1]^{M·d}` and their stochastic reward models.
//!
//! Every landscape here is built from pieces whose Lipschitz constant is
//! exactly `L` under the configured norm, so the ground truth used for regret
//! accounting is known in closed form (except the capped-affine family, whose
//! maximizer is located by an exhaustive grid scan).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Norm on the joint action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    L1,
    #[default]
    L2,
    LInf,
}

impl Norm {
    /// Combine per-axis absolute differences into a length.
    #[inline]
    pub fn length<I: IntoIterator<Item = f64>>(self, abs_diffs: I) -> f64 {
        match self {
            Norm::L1 => abs_diffs.into_iter().sum(),
            Norm::L2 => abs_diffs.into_iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::LInf => abs_diffs.into_iter().fold(0.0, f64::max),
        }
    }

    #[inline]
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.length(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
    }

    /// Per-axis weight `g` of the all-ones direction with unit dual norm, so
    /// that `|<g, x>| <= ||x||` for every `x` in `dims` dimensions.
    fn unit_dual_weight(self, dims: usize) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 1.0 / (dims as f64).sqrt(),
            Norm::LInf => 1.0 / dims as f64,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
            Norm::LInf => "LINF",
        })
    }
}

impl FromStr for Norm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(Norm::L1),
            "L2" => Ok(Norm::L2),
            "LINF" => Ok(Norm::LInf),
            other => Err(format!("unknown norm `{other}` (expected L1, L2 or LINF)")),
        }
    }
}

/// A point of `[0,1]^{M·d}` grouped as `M` blocks of `d` coordinates; block
/// `i` is player `i`'s component of the joint action.
#[derive(Debug, Clone, PartialEq)]
pub struct JointArm {
    coords: Vec<f64>,
    dim: usize,
}

impl JointArm {
    pub fn new(coords: Vec<f64>, players: usize, dim: usize) -> Result<Self> {
        if players == 0 || dim == 0 {
            return Err(Error::domain("joint arm needs at least one player and one axis"));
        }
        if coords.len() != players * dim {
            return Err(Error::domain(format!(
                "joint arm has {} coordinates, expected {}·{}",
                coords.len(),
                players,
                dim
            )));
        }
        if let Some(x) = coords.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::domain(format!("coordinate {x} outside [0,1]")));
        }
        Ok(JointArm { coords, dim })
    }

    /// Concatenate per-player blocks.
    pub fn from_blocks<B: AsRef<[f64]>>(blocks: &[B]) -> Result<Self> {
        let dim = blocks.first().map(|b| b.as_ref().len()).unwrap_or(0);
        if blocks.iter().any(|b| b.as_ref().len() != dim) {
            return Err(Error::domain("player blocks have different lengths"));
        }
        let coords = blocks.iter().flat_map(|b| b.as_ref().iter().copied()).collect();
        JointArm::new(coords, blocks.len(), dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn players(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Player `i`'s block `a[i]`.
    pub fn block(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// A peak of a cone-shaped landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub location: Vec<f64>,
    pub height: f64,
}

/// Which closed-form landscape an environment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// `max(0, h − L‖a − p‖)` around a single peak.
    Cone,
    /// Pointwise maximum of several cones.
    MultiPeak,
    /// `clamp(h − L<g, p − a>, 0, h)`: an affine ramp rising toward the
    /// all-ones corner, capped at `h` from `p` onward.
    AffineCap,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Cone => "CONE",
            FamilyKind::MultiPeak => "MULTI_PEAK",
            FamilyKind::AffineCap => "AFFINE_CAP",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "CONE" => Ok(FamilyKind::Cone),
            "MULTI_PEAK" => Ok(FamilyKind::MultiPeak),
            "AFFINE_CAP" => Ok(FamilyKind::AffineCap),
            other => Err(format!(
                "unknown mean family `{other}` (expected CONE, MULTI_PEAK or AFFINE_CAP)"
            )),
        }
    }
}

/// Reward noise around the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Gaussian { sigma: f64 },
    Bernoulli,
}

impl Noise {
    /// Subgaussian parameter of the centred reward.
    pub fn subgaussian_sigma(self) -> f64 {
        match self {
            Noise::Gaussian { sigma } => sigma,
            Noise::Bernoulli => 0.5,
        }
    }
}

/// Environment description: a Lipschitz mean function over `[0,1]^{M·d}` and
/// a noise model.
///
/// Immutable after construction, so one model can be shared by any number of
/// concurrent trials.
#[derive(Debug, Clone)]
pub struct EnvModel {
    players: usize,
    dim: usize,
    lipschitz: f64,
    norm: Norm,
    family: FamilyKind,
    peaks: Vec<Peak>,
    noise: Noise,
    optimum: (JointArm, f64),
}

/// Point budget of the exhaustive scan that locates capped-affine optima.
const AFFINE_SCAN_BUDGET: usize = 2_000_000;

impl EnvModel {
    pub fn new(
        players: usize,
        dim: usize,
        lipschitz: f64,
        norm: Norm,
        family: FamilyKind,
        peaks: Vec<Peak>,
        noise: Noise,
    ) -> Result<Self> {
        if players == 0 || dim == 0 {
            return Err(Error::domain("M and d must be positive"));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::domain(format!("Lipschitz constant {lipschitz} must be positive")));
        }
        if let Noise::Gaussian { sigma } = noise {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::domain(format!("noise sigma {sigma} must be non-negative")));
            }
        }
        match (family, peaks.len()) {
            (_, 0) => return Err(Error::domain("at least one peak is required")),
            (FamilyKind::Cone | FamilyKind::AffineCap, n) if n != 1 => {
                return Err(Error::domain(format!("{family} takes exactly one peak, got {n}")))
            }
            _ => {}
        }
        let dims = players * dim;
        for p in &peaks {
            if p.location.len() != dims {
                return Err(Error::domain(format!(
                    "peak has {} coordinates, expected {dims}",
                    p.location.len()
                )));
            }
            if p.location.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::domain("peak location outside [0,1]"));
            }
            if !(0.0..=1.0).contains(&p.height) {
                return Err(Error::domain(format!("peak height {} outside [0,1]", p.height)));
            }
        }
        let mut env = EnvModel {
            players,
            dim,
            lipschitz,
            norm,
            family,
            peaks,
            noise,
            optimum: (JointArm::new(vec![0.0; dims], players, dim)?, 0.0),
        };
        env.optimum = env.locate_optimum();
        Ok(env)
    }

    /// Single cone with the given peak; the most common test landscape.
    pub fn cone(
        players: usize,
        dim: usize,
        lipschitz: f64,
        norm: Norm,
        location: Vec<f64>,
        height: f64,
        noise: Noise,
    ) -> Result<Self> {
        EnvModel::new(
            players,
            dim,
            lipschitz,
            norm,
            FamilyKind::Cone,
            vec![Peak { location, height }],
            noise,
        )
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of joint coordinates, `M·d`.
    pub fn dims(&self) -> usize {
        self.players * self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn family(&self) -> FamilyKind {
        self.family
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    /// True mean `μ_a` of a joint arm.
    pub fn mean(&self, arm: &JointArm) -> Result<f64> {
        self.mean_at(arm.coords())
    }

    /// [`EnvModel::mean`] on raw coordinates.
    pub fn mean_at(&self, coords: &[f64]) -> Result<f64> {
        if coords.len() != self.dims() {
            return Err(Error::domain(format!(
                "arm has {} coordinates, expected {}",
                coords.len(),
                self.dims()
            )));
        }
        if let Some(x) = coords.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::domain(format!("coordinate {x} outside [0,1]")));
        }
        Ok(self.mean_unchecked(coords))
    }

    fn mean_unchecked(&self, coords: &[f64]) -> f64 {
        match self.family {
            FamilyKind::Cone | FamilyKind::MultiPeak => self
                .peaks
                .iter()
                .map(|p| self.cone_value(p, coords))
                .fold(0.0, f64::max),
            FamilyKind::AffineCap => {
                let p = &self.peaks[0];
                let g = self.norm.unit_dual_weight(coords.len());
                let lag: f64 = p.location.iter().zip(coords).map(|(pi, ai)| pi - ai).sum();
                (p.height - self.lipschitz * g * lag).clamp(0.0, p.height)
            }
        }
    }

    fn cone_value(&self, peak: &Peak, coords: &[f64]) -> f64 {
        (peak.height - self.lipschitz * self.norm.distance(&peak.location, coords)).max(0.0)
    }

    /// Maximizer `a*` and optimal mean `μ*`.
    pub fn optimal_mean(&self) -> (&JointArm, f64) {
        (&self.optimum.0, self.optimum.1)
    }

    /// Gap `Δ_a = μ* − μ_a`.
    pub fn gap(&self, arm: &JointArm) -> Result<f64> {
        Ok(self.optimum.1 - self.mean(arm)?)
    }

    fn locate_optimum(&self) -> (JointArm, f64) {
        match self.family {
            FamilyKind::Cone | FamilyKind::MultiPeak => {
                let mut best = &self.peaks[0];
                for p in &self.peaks[1..] {
                    let better = p.height > best.height
                        || (p.height == best.height && lex_less(&p.location, &best.location));
                    if better {
                        best = p;
                    }
                }
                let arm = JointArm::new(best.location.clone(), self.players, self.dim)
                    .expect("peak validated at construction");
                let value = self.mean_unchecked(arm.coords());
                (arm, value)
            }
            FamilyKind::AffineCap => {
                let dims = self.dims();
                let per_axis = scan_resolution(dims);
                let (coords, value) = grid_argmax(dims, per_axis, |x| self.mean_unchecked(x));
                (
                    JointArm::new(coords, self.players, self.dim).expect("grid point in domain"),
                    value,
                )
            }
        }
    }

    /// One reward draw for `arm`.
    pub fn sample_reward(&self, arm: &JointArm, rng: &mut Stream) -> Result<f64> {
        let mu = self.mean(arm)?;
        Ok(self.draw(mu, rng))
    }

    /// One reward draw with expectation `mu`.
    pub fn draw(&self, mu: f64, rng: &mut Stream) -> f64 {
        match self.noise {
            Noise::Bernoulli => {
                if rng.random::<f64>() < mu {
                    1.0
                } else {
                    0.0
                }
            }
            Noise::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
        }
    }

    /// Sample `num_pairs` random pairs and report the largest observed
    /// slope `|μ_a − μ_a'| / ‖a − a'‖`.
    pub fn verify_lipschitz(&self, num_pairs: usize, rng: &mut Stream) -> Result<LipschitzReport> {
        if num_pairs == 0 {
            return Err(Error::domain("num_pairs must be at least 1"));
        }
        let dims = self.dims();
        let mut a = vec![0.0; dims];
        let mut b = vec![0.0; dims];
        let mut max_ratio: f64 = 0.0;
        for _ in 0..num_pairs {
            a.iter_mut().for_each(|x| *x = rng.random());
            b.iter_mut().for_each(|x| *x = rng.random());
            let dist = self.norm.distance(&a, &b);
            if dist == 0.0 {
                continue;
            }
            let ratio = (self.mean_unchecked(&a) - self.mean_unchecked(&b)).abs() / dist;
            max_ratio = max_ratio.max(ratio);
        }
        Ok(LipschitzReport {
            max_ratio,
            pass: max_ratio <= self.lipschitz + 1e-9,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub max_ratio: f64,
    pub pass: bool,
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}

fn scan_resolution(dims: usize) -> usize {
    let by_budget = (AFFINE_SCAN_BUDGET as f64).powf(1.0 / dims as f64).floor() as usize;
    by_budget.clamp(2, 1001)
}

/// Lexicographically first maximizer of `f` over the uniform grid with
/// `per_axis` markers on every axis.
fn grid_argmax(dims: usize, per_axis: usize, f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let step = 1.0 / (per_axis - 1) as f64;
    let mut idx = vec![0usize; dims];
    let mut point = vec![0.0; dims];
    let mut best = (point.clone(), f64::NEG_INFINITY);
    loop {
        for (p, &i) in point.iter_mut().zip(&idx) {
            *p = (i as f64 * step).min(1.0);
        }
        let v = f(&point);
        if v > best.1 {
            best = (point.clone(), v);
        }
        // odometer, last axis fastest so visiting order is lexicographic
        let mut axis = dims;
        loop {
            if axis == 0 {
                return best;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
        }
    }
}
