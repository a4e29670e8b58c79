//! The smooth cutoff function used by every window in the transform.
//!
//! `h(x) = sin( (pi/2) * e^{-c/x} / (e^{-c/x} + e^{-c/(1-x)}) )` on (0, 1),
//! clamped to 0 below and 1 above. The exponent ratio `r(x)` satisfies
//! `r(1-x) = 1 - r(x)`, which makes `h(x)^2 + h(1-x)^2 = 1` hold exactly;
//! that identity is what turns overlapping windows into tight partitions.

/// Smooth step with a configurable steepness constant `c`. Larger values
/// sharpen the transition; the partition identity holds for any `c > 0`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothStep {
    pub steepness: f64,
}

impl Default for SmoothStep {
    fn default() -> Self {
        SmoothStep { steepness: 1.0 }
    }
}

impl SmoothStep {
    pub fn new(steepness: f64) -> Self {
        assert!(steepness > 0.0);
        SmoothStep { steepness }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let c = self.steepness;
        let a = (-c / x).exp();
        let b = (-c / (1.0 - x)).exp();
        ((std::f64::consts::PI / 2.0) * a / (a + b)).sin()
    }

    /// Window rising over `[lo, hi]`: 0 below `lo`, 1 above `hi`.
    pub fn rise(&self, x: f64, lo: f64, hi: f64) -> f64 {
        self.eval((x - lo) / (hi - lo))
    }

    /// Window falling over `[lo, hi]`: 1 below `lo`, 0 above `hi`.
    pub fn fall(&self, x: f64, lo: f64, hi: f64) -> f64 {
        self.eval((hi - x) / (hi - lo))
    }
}

/// The default-steepness step.
pub fn smooth_step(x: f64) -> f64 {
    SmoothStep::default().eval(x)
}
