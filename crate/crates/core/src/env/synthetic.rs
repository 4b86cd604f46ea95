use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::phi::{random_unit, PhiFamily};
use super::{EnvBounds, Environment, Round};
use crate::error::{check_dim, Error, Result};
use crate::features::FeatureMap;
use crate::rng::SimRng;
use crate::util::argmax_first;

const NORM_SLACK: f64 = 1e-9;

/// Distribution of the pre-serving context.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextLaw {
    /// Independent uniform coordinates on `[−h, h]`.
    UniformBox { dim: usize, half_width: f64 },
    /// Uniform over a finite support.
    Discrete(Vec<Vec<f64>>),
}

impl ContextLaw {
    pub fn dim(&self) -> usize {
        match self {
            ContextLaw::UniformBox { dim, .. } => *dim,
            ContextLaw::Discrete(points) => points.first().map_or(0, Vec::len),
        }
    }

    /// Largest Euclidean norm attainable on the support.
    pub fn norm_bound(&self) -> f64 {
        match self {
            ContextLaw::UniformBox { dim, half_width } => half_width * (*dim as f64).sqrt(),
            ContextLaw::Discrete(points) => points
                .iter()
                .map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            ContextLaw::UniformBox { dim, half_width } => {
                (0..*dim).map(|_| rng.random_range(-*half_width..=*half_width)).collect()
            }
            ContextLaw::Discrete(points) => points[rng.random_range(0..points.len())].clone(),
        }
    }
}

/// Truncated Gaussian post-serving noise: per-coordinate `N(0, σ²)` resampled
/// until `‖ε‖₂ ≤ bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostNoise {
    pub sigma: f64,
    pub bound: f64,
}

impl PostNoise {
    pub fn none() -> Self {
        PostNoise { sigma: 0.0, bound: 0.0 }
    }

    /// The default truncation radius `4σ√d_z`.
    pub fn truncated(sigma: f64, dim_z: usize) -> Self {
        PostNoise {
            sigma,
            bound: 4.0 * sigma * (dim_z as f64).sqrt(),
        }
    }

    pub fn sample(&self, dim: usize, rng: &mut impl Rng) -> Vec<f64> {
        if self.sigma == 0.0 || dim == 0 {
            return vec![0.0; dim];
        }
        loop {
            let eps: Vec<f64> = (0..dim)
                .map(|_| self.sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            if eps.iter().map(|e| e * e).sum::<f64>().sqrt() <= self.bound {
                return eps;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Polynomial,
    Periodic,
}

/// Recipe for a random synthetic environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub family: Family,
    pub d_x: usize,
    pub d_z: usize,
    pub k: usize,
    #[serde(default = "default_l_z")]
    pub l_z: f64,
    /// Defaults to `0.02 · l_z`.
    #[serde(default)]
    pub sigma_eps: Option<f64>,
    #[serde(default = "default_r_eta")]
    pub r_eta: f64,
    #[serde(default)]
    pub noiseless_reward: bool,
    #[serde(default = "default_half_width")]
    pub context_half_width: f64,
}

fn default_l_z() -> f64 {
    10.0
}

fn default_r_eta() -> f64 {
    0.1
}

fn default_half_width() -> f64 {
    10.0
}

impl SyntheticSpec {
    pub fn new(family: Family, d_x: usize, d_z: usize, k: usize) -> Self {
        SyntheticSpec {
            family,
            d_x,
            d_z,
            k,
            l_z: default_l_z(),
            sigma_eps: None,
            r_eta: default_r_eta(),
            noiseless_reward: false,
            context_half_width: default_half_width(),
        }
    }

    pub fn build(&self, rng: &mut impl Rng) -> Result<SyntheticEnv> {
        if self.d_x == 0 || self.k == 0 {
            return Err(Error::Config("synthetic environment needs d_x ≥ 1 and k ≥ 1".into()));
        }
        let context = ContextLaw::UniformBox {
            dim: self.d_x,
            half_width: self.context_half_width,
        };
        let phi = match self.family {
            Family::Linear => {
                PhiFamily::random_linear(self.d_x, self.d_z, context.norm_bound(), self.l_z, rng)
            }
            Family::Polynomial => PhiFamily::random_polynomial(
                self.d_x,
                self.d_z,
                self.context_half_width,
                self.l_z,
                rng,
            ),
            Family::Periodic => PhiFamily::random_periodic(self.d_x, self.d_z, self.l_z, rng),
        };
        let theta = (0..self.k).map(|_| random_unit(self.d_x, rng)).collect();
        let beta = (0..self.k)
            .map(|_| {
                if self.d_z == 0 {
                    DVector::zeros(0)
                } else {
                    random_unit(self.d_z, rng)
                }
            })
            .collect();
        let sigma = self.sigma_eps.unwrap_or(0.02 * self.l_z);
        SyntheticEnv::new(
            theta,
            beta,
            phi,
            context,
            if self.d_z == 0 {
                PostNoise::none()
            } else {
                PostNoise::truncated(sigma, self.d_z)
            },
            self.r_eta,
            self.noiseless_reward,
        )
    }
}

/// Ground truth `r_a(x, z) = ⟨x, θ*_a⟩ + ⟨z, β*_a⟩ + η` with `z = φ*(x) + ε`.
#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    theta: Vec<DVector<f64>>,
    beta: Vec<DVector<f64>>,
    phi: PhiFamily,
    context: ContextLaw,
    post_noise: PostNoise,
    r_eta: f64,
    noiseless_reward: bool,
}

impl SyntheticEnv {
    pub fn new(
        theta: Vec<DVector<f64>>,
        beta: Vec<DVector<f64>>,
        phi: PhiFamily,
        context: ContextLaw,
        post_noise: PostNoise,
        r_eta: f64,
        noiseless_reward: bool,
    ) -> Result<Self> {
        if theta.is_empty() || theta.len() != beta.len() {
            return Err(Error::InvalidParameter(format!(
                "need one θ* and one β* per arm, got {} and {}",
                theta.len(),
                beta.len()
            )));
        }
        let dim_x = context.dim();
        phi.validate(dim_x)?;
        for (a, (t, b)) in theta.iter().zip(&beta).enumerate() {
            check_dim("θ*", dim_x, t.len())?;
            check_dim("β*", phi.dim_z(), b.len())?;
            if t.norm() > 1.0 + NORM_SLACK || b.norm() > 1.0 + NORM_SLACK {
                return Err(Error::InvalidParameter(format!(
                    "arm {a}: parameter norms must be at most 1 (‖θ*‖={}, ‖β*‖={})",
                    t.norm(),
                    b.norm()
                )));
            }
        }
        if !(post_noise.sigma >= 0.0 && post_noise.bound >= 0.0 && r_eta >= 0.0) {
            return Err(Error::InvalidParameter("noise scales must be nonnegative".into()));
        }
        if post_noise.sigma > 0.0 && post_noise.bound <= 0.0 {
            return Err(Error::InvalidParameter("post-serving noise needs a positive bound".into()));
        }
        Ok(SyntheticEnv {
            theta,
            beta,
            phi,
            context,
            post_noise,
            r_eta,
            noiseless_reward,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.theta.len()
    }

    pub fn dim_x(&self) -> usize {
        self.context.dim()
    }

    pub fn dim_z(&self) -> usize {
        self.phi.dim_z()
    }

    pub fn phi(&self) -> &PhiFamily {
        &self.phi
    }

    pub fn theta(&self, arm: usize) -> &DVector<f64> {
        &self.theta[arm]
    }

    pub fn beta(&self, arm: usize) -> &DVector<f64> {
        &self.beta[arm]
    }

    pub fn post_noise(&self) -> PostNoise {
        self.post_noise
    }

    pub fn noiseless_reward(&self) -> bool {
        self.noiseless_reward
    }

    pub fn context_law(&self) -> &ContextLaw {
        &self.context
    }

    /// Stacked true parameter `w*_a = (θ*_a, β*_a)`.
    pub fn stacked_parameter(&self, arm: usize) -> DVector<f64> {
        let mut w = Vec::with_capacity(self.dim_x() + self.dim_z());
        w.extend_from_slice(self.theta[arm].as_slice());
        w.extend_from_slice(self.beta[arm].as_slice());
        DVector::from_vec(w)
    }

    /// `φ*(x)`.
    pub fn phi_star(&self, x: &[f64]) -> Vec<f64> {
        self.phi
            .eval(x)
            .expect("context law and phi* dimensions are validated at construction")
    }

    /// Draws `x` from the context law and `z = φ*(x) + ε`.
    pub fn sample_round(&self, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
        let x = self.context.sample(rng);
        let z = self.sample_post_context(&x, rng);
        (x, z)
    }

    pub fn sample_post_context(&self, x: &[f64], rng: &mut impl Rng) -> Vec<f64> {
        let mut z = self.phi_star(x);
        let eps = self.post_noise.sample(z.len(), rng);
        for (zi, e) in z.iter_mut().zip(eps) {
            *zi += e;
        }
        z
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm < self.num_arms() {
            Ok(())
        } else {
            Err(Error::ArmOutOfRange {
                arm,
                arms: self.num_arms(),
            })
        }
    }

    fn linear_part(&self, arm: usize, x: &[f64], z: &[f64]) -> f64 {
        let tx: f64 = self.theta[arm].iter().zip(x).map(|(a, b)| a * b).sum();
        let bz: f64 = self.beta[arm].iter().zip(z).map(|(a, b)| a * b).sum();
        tx + bz
    }

    /// `⟨x, θ*_a⟩ + ⟨z, β*_a⟩ + η`, or the noiseless `⟨x, θ*_a⟩ + ⟨φ*(x), β*_a⟩`.
    pub fn realized_reward(&self, arm: usize, x: &[f64], z: &[f64], rng: &mut impl Rng) -> Result<f64> {
        self.check_arm(arm)?;
        check_dim("reward context x", self.dim_x(), x.len())?;
        check_dim("reward context z", self.dim_z(), z.len())?;
        if self.noiseless_reward {
            return self.mean_reward(arm, x);
        }
        let eta = if self.r_eta > 0.0 {
            Normal::new(0.0, self.r_eta)
                .expect("r_eta validated nonnegative")
                .sample(rng)
        } else {
            0.0
        };
        Ok(self.linear_part(arm, x, z) + eta)
    }

    /// `⟨θ*_a, x⟩ + ⟨β*_a, φ*(x)⟩`.
    pub fn mean_reward(&self, arm: usize, x: &[f64]) -> Result<f64> {
        self.check_arm(arm)?;
        check_dim("reward context x", self.dim_x(), x.len())?;
        Ok(self.linear_part(arm, x, &self.phi_star(x)))
    }

    /// Arm maximizing the mean reward; ties go to the lowest index.
    pub fn best_arm(&self, x: &[f64]) -> usize {
        let phi = self.phi_star(x);
        argmax_first((0..self.num_arms()).map(|a| self.linear_part(a, x, &phi)))
    }

    /// Feature expansion under which the linear estimator can represent `φ*`.
    pub fn natural_features(&self) -> FeatureMap {
        match &self.phi {
            PhiFamily::Linear { .. } => FeatureMap::Identity,
            PhiFamily::Polynomial { .. } | PhiFamily::Custom(_) => FeatureMap::Quadratic,
            PhiFamily::Periodic { projections, .. } => FeatureMap::fourier(projections),
        }
    }

    pub fn bounds(&self) -> EnvBounds {
        EnvBounds {
            l_x: self.context.norm_bound(),
            l_z: if self.dim_z() == 0 { 0.0 } else { self.phi.bound() },
            l_eps: self.post_noise.bound,
            sigma_eps: self.post_noise.sigma,
            r_eta: if self.noiseless_reward { 0.0 } else { self.r_eta },
        }
    }
}

/// Two arms, `x` uniform on `{−3, −1, 1}`, `φ*(x) = x²`, noiseless rewards
/// `r₁ = x + x²/2` and `r₂ = −x − x²/2`. No index linear in `x` alone ranks
/// the arms correctly on the whole support.
pub fn counterexample_env() -> SyntheticEnv {
    let phi = PhiFamily::Polynomial {
        projections: vec![DVector::from_element(1, 1.0)],
        center: 0.0,
        scales: vec![1.0],
        bound: 9.0,
    };
    SyntheticEnv::new(
        vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        vec![DVector::from_element(1, 0.5), DVector::from_element(1, -0.5)],
        phi,
        ContextLaw::Discrete(vec![vec![-3.0], vec![-1.0], vec![1.0]]),
        PostNoise::none(),
        0.0,
        true,
    )
    .expect("counterexample parameters are valid")
}

impl Environment for SyntheticEnv {
    fn num_arms(&self) -> usize {
        SyntheticEnv::num_arms(self)
    }

    fn dim_x(&self) -> usize {
        SyntheticEnv::dim_x(self)
    }

    fn dim_z(&self) -> usize {
        SyntheticEnv::dim_z(self)
    }

    fn bounds(&self) -> EnvBounds {
        SyntheticEnv::bounds(self)
    }

    fn draw(&self, rng: &mut SimRng) -> Round {
        let (x, z) = self.sample_round(rng);
        Round { x, z }
    }

    fn reward(&self, arm: usize, round: &Round, rng: &mut SimRng) -> Result<f64> {
        self.realized_reward(arm, &round.x, &round.z, rng)
    }

    fn expected_reward(&self, arm: usize, round: &Round) -> Result<f64> {
        self.mean_reward(arm, &round.x)
    }

    fn natural_features(&self) -> FeatureMap {
        SyntheticEnv::natural_features(self)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::rng::seeded;

    #[test]
    fn counterexample_rewards() {
        let env = counterexample_env();
        let mut rng = seeded(0);
        assert_relative_eq!(env.realized_reward(0, &[-3.0], &[9.0], &mut rng).unwrap(), 1.5);
        assert_relative_eq!(env.realized_reward(1, &[-1.0], &[1.0], &mut rng).unwrap(), 0.5);
        assert_relative_eq!(env.mean_reward(0, &[1.0]).unwrap(), 1.5);
        assert_relative_eq!(env.mean_reward(1, &[-3.0]).unwrap(), -1.5);
        assert_eq!(env.best_arm(&[-1.0]), 1);
        assert_eq!(env.best_arm(&[-3.0]), 0);
        assert_eq!(env.best_arm(&[1.0]), 0);
    }

    #[test]
    fn counterexample_gaps_and_random_regret() {
        let env = counterexample_env();
        let support = [-3.0, -1.0, 1.0];
        let gaps: Vec<f64> = support
            .iter()
            .map(|&x| (env.mean_reward(0, &[x]).unwrap() - env.mean_reward(1, &[x]).unwrap()).abs())
            .collect();
        assert_eq!(gaps, vec![3.0, 1.0, 3.0]);
        let random_regret = gaps.iter().sum::<f64>() / 3.0 / 2.0;
        assert_relative_eq!(random_regret, 7.0 / 6.0, epsilon = 1e-12);
        let best: Vec<usize> = support.iter().map(|&x| env.best_arm(&[x])).collect();
        assert_eq!(best, vec![0, 1, 0]);
    }

    #[test]
    fn no_x_only_linear_index_separates_counterexample() {
        // Any x-only linear index ranks the arms by sign(c·x) for some c,
        // so it must pick the same arm at −3 and −1. Scan a grid of c.
        let env = counterexample_env();
        for i in -100..=100 {
            let c = i as f64 / 10.0;
            let pick = |x: f64| if c * x > 0.0 { 0 } else { 1 };
            let correct = [-3.0, -1.0, 1.0]
                .iter()
                .all(|&x| pick(x) == env.best_arm(&[x]));
            assert!(!correct, "c = {c} separates the counterexample");
        }
    }

    #[test]
    fn zero_parameters_give_zero_reward() {
        let env = SyntheticEnv::new(
            vec![DVector::zeros(2); 2],
            vec![DVector::zeros(2); 2],
            PhiFamily::Linear {
                matrix: nalgebra::DMatrix::identity(2, 2),
                bound: 20.0,
            },
            ContextLaw::UniformBox { dim: 2, half_width: 10.0 },
            PostNoise::truncated(1.0, 2),
            0.0,
            false,
        )
        .unwrap();
        let mut rng = seeded(3);
        for _ in 0..10 {
            let (x, z) = env.sample_round(&mut rng);
            assert_eq!(env.realized_reward(1, &x, &z, &mut rng).unwrap(), 0.0);
            assert_eq!(env.mean_reward(0, &x).unwrap(), 0.0);
            assert_eq!(env.best_arm(&x), 0);
        }
    }

    #[test]
    fn zero_noise_identity_phi() {
        let env = SyntheticEnv::new(
            vec![DVector::zeros(2)],
            vec![DVector::zeros(2)],
            PhiFamily::Linear {
                matrix: nalgebra::DMatrix::identity(2, 2),
                bound: 20.0,
            },
            ContextLaw::Discrete(vec![vec![1.0, 2.0]]),
            PostNoise::none(),
            0.1,
            false,
        )
        .unwrap();
        let (x, z) = env.sample_round(&mut seeded(1));
        assert_eq!(x, vec![1.0, 2.0]);
        assert_eq!(z, vec![1.0, 2.0]);
    }

    #[test]
    fn arm_out_of_range_and_norm_violations() {
        let env = counterexample_env();
        assert!(matches!(
            env.mean_reward(2, &[1.0]),
            Err(Error::ArmOutOfRange { arm: 2, arms: 2 })
        ));
        let bad = SyntheticEnv::new(
            vec![DVector::from_element(1, 2.0)],
            vec![DVector::from_element(1, 0.0)],
            counterexample_env().phi().clone(),
            ContextLaw::Discrete(vec![vec![1.0]]),
            PostNoise::none(),
            0.0,
            false,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn truncated_noise_respects_bound() {
        let noise = PostNoise::truncated(0.7, 3);
        let mut rng = seeded(11);
        for _ in 0..5000 {
            let e = noise.sample(3, &mut rng);
            assert!(e.iter().map(|v| v * v).sum::<f64>().sqrt() <= noise.bound);
        }
    }

    #[test]
    fn seed_determinism() {
        let spec = SyntheticSpec::new(Family::Periodic, 4, 2, 3);
        let a = spec.build(&mut seeded(5)).unwrap();
        let b = spec.build(&mut seeded(5)).unwrap();
        let (mut ra, mut rb) = (seeded(9), seeded(9));
        for _ in 0..50 {
            let (xa, za) = a.sample_round(&mut ra);
            let (xb, zb) = b.sample_round(&mut rb);
            let ea = a.realized_reward(1, &xa, &za, &mut ra).unwrap();
            let eb = b.realized_reward(1, &xb, &zb, &mut rb).unwrap();
            assert_eq!((xa, za, ea.to_bits()), (xb, zb, eb.to_bits()));
        }
    }

    #[test]
    fn families_stay_within_bound() {
        let mut rng = seeded(21);
        for family in [Family::Linear, Family::Polynomial, Family::Periodic] {
            let env = SyntheticSpec::new(family, 6, 3, 2).build(&mut rng).unwrap();
            let l_z = env.bounds().l_z;
            for _ in 0..10_000 {
                let x = env.context_law().sample(&mut rng);
                let z = env.phi_star(&x);
                assert!(z.iter().map(|v| v * v).sum::<f64>().sqrt() <= l_z + 1e-9, "{family:?}");
            }
        }
    }

    #[test]
    fn reward_noise_is_centered() {
        let env = SyntheticSpec::new(Family::Linear, 3, 2, 2).build(&mut seeded(2)).unwrap();
        let x = vec![1.0, -2.0, 3.0];
        let mean = env.mean_reward(1, &x).unwrap();
        let mut rng = seeded(8);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let z = env.sample_post_context(&x, &mut rng);
            let d = env.realized_reward(1, &x, &z, &mut rng).unwrap() - mean;
            sum += d;
            sq += d * d;
        }
        let avg = sum / n as f64;
        let sd = (sq / n as f64 - avg * avg).sqrt();
        assert!(avg.abs() <= 3.0 * sd / (n as f64).sqrt(), "avg {avg}, sd {sd}");
    }

    #[test]
    fn noiseless_reward_uses_phi_star() {
        let mut spec = SyntheticSpec::new(Family::Linear, 3, 2, 2);
        spec.noiseless_reward = true;
        let env = spec.build(&mut seeded(4)).unwrap();
        let mut rng = seeded(1);
        let (x, z) = env.sample_round(&mut rng);
        assert_eq!(
            env.realized_reward(0, &x, &z, &mut rng).unwrap(),
            env.mean_reward(0, &x).unwrap()
        );
    }
}
