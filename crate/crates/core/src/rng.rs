//! Seedable random number generation with a pinned, documented stream.
//!
//! Media and right-hand sides must be reproducible bit-for-bit across runs
//! and across reimplementations, so the generator is written out here rather
//! than taken from a library: SplitMix64 (Steele, Lea, Flood 2014), the
//! sequence `z_{n+1} = mix(state += 0x9E3779B97F4A7C15)`.
//!
//! Derived streams:
//! - `uniform()` maps the top 53 bits to `[0, 1)`.
//! - `symmetric()` is `2*uniform() - 1`, i.e. `[-1, 1)`.
//! - `normal_pair()` is one Box-Muller transform consuming two uniforms.

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// One Box-Muller pair of independent standard normals.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        // Avoid ln(0): shift the first uniform away from zero.
        let u1 = (self.uniform() + f64::MIN_POSITIVE).min(1.0 - f64::EPSILON);
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        (r * t.cos(), r * t.sin())
    }
}
