//! Counter-based Gaussian increments.
//!
//! Every draw is a pure function of `(seed, trajectory, step)`, so ensemble
//! output does not depend on how trajectories are scheduled across threads,
//! and fine-level increments can be regenerated and summed exactly for
//! coupled refinement.

use crate::scheme::NoiseDraw;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform on `(0, 1]` from the top 53 bits of `word`.
#[inline]
fn open_closed_unit(word: u64) -> f64 {
    ((word >> 11) + 1) as f64 * TWO_POW_M53
}

/// Source of per-(trajectory, step) standard normal pairs.
pub trait NoiseSource: Sync {
    /// Two independent `N(0, 1)` values for `(trajectory, step)`.
    fn standard_pair(&self, trajectory: u64, step: u64) -> (f64, f64);

    /// Increments of variance `h` for one step.
    #[inline]
    fn draw(&self, trajectory: u64, step: u64, h: f64) -> NoiseDraw {
        let (z0, z1) = self.standard_pair(trajectory, step);
        let s = h.sqrt();
        NoiseDraw::new(s * z0, s * z1)
    }

    /// The sequence of draws for one trajectory.
    fn stream(&self, trajectory: u64, h: f64) -> TrajectoryStream<'_, Self>
    where
        Self: Sized,
    {
        TrajectoryStream {
            source: self,
            trajectory,
            step: 0,
            h,
        }
    }
}

impl<S: NoiseSource + ?Sized> NoiseSource for &S {
    fn standard_pair(&self, trajectory: u64, step: u64) -> (f64, f64) {
        (**self).standard_pair(trajectory, step)
    }
}

/// Iterator over one trajectory's draws; see [`NoiseSource::stream`].
#[derive(Debug, Clone)]
pub struct TrajectoryStream<'a, S> {
    source: &'a S,
    trajectory: u64,
    step: u64,
    h: f64,
}

impl<S: NoiseSource> Iterator for TrajectoryStream<'_, S> {
    type Item = NoiseDraw;

    fn next(&mut self) -> Option<NoiseDraw> {
        let d = self.source.draw(self.trajectory, self.step, self.h);
        self.step += 1;
        Some(d)
    }
}

/// Philox-keyed Box–Muller normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiloxNoise {
    seed: u64,
}

impl PhiloxNoise {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl NoiseSource for PhiloxNoise {
    #[inline]
    fn standard_pair(&self, trajectory: u64, step: u64) -> (f64, f64) {
        let out = philox4x32_10(
            [step as u32, (step >> 32) as u32, trajectory as u32, (trajectory >> 32) as u32],
            [self.seed as u32, (self.seed >> 32) as u32],
        );
        let u1 = open_closed_unit(u64::from(out[0]) << 32 | u64::from(out[1]));
        let u2 = open_closed_unit(u64::from(out[2]) << 32 | u64::from(out[3]));
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }
}

/// All draws zero; turns every scheme into its deterministic skeleton.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_pair(&self, _trajectory: u64, _step: u64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Negates every draw of the wrapped source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Negated<S>(pub S);

impl<S: NoiseSource> NoiseSource for Negated<S> {
    fn standard_pair(&self, trajectory: u64, step: u64) -> (f64, f64) {
        let (a, b) = self.0.standard_pair(trajectory, step);
        (-a, -b)
    }
}
