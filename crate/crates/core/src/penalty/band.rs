use crate::error::{Error, Result};

/// Band `[alpha, beta]` of phase-field values whose connectedness is
/// penalised, together with the normalisation of the weight `F` and the bump
/// `W̃`, and the penalty amplitude `a · eps^(-p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandConfig {
    pub alpha: f64,
    pub beta: f64,
    /// `F(s) = c1 (s - alpha)^2` below the band.
    pub c1: f64,
    /// `F(s) = c2 (beta - s)^2` above the band; 0 when `beta >= 1`.
    pub c2: f64,
    /// `W̃(s) = c3 (s - alpha)^2 (beta - s)^2` inside the band.
    pub c3: f64,
    pub eps: f64,
    pub amplitude: f64,
    /// Exponent `p` of the `a · eps^(-p)` prefactor.
    pub exponent: i32,
}

/// `F`, `F'`, `W̃`, `W̃'` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandProfile {
    pub f: f64,
    pub df: f64,
    pub w: f64,
    pub dw: f64,
}

impl BandConfig {
    /// Band with `F(-1) = F(1) = 1` (where the endpoint lies outside the band)
    /// and `∫ W̃ = 1`. Amplitude 1, exponent 1.
    pub fn new(alpha: f64, beta: f64, eps: f64) -> Result<Self> {
        Self::normalized(alpha, beta, eps, 1.0)
    }

    /// Like [`BandConfig::new`] with `F(±1) = f_target`.
    pub fn normalized(alpha: f64, beta: f64, eps: f64, f_target: f64) -> Result<Self> {
        if !(alpha < beta) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "band requires alpha < beta, got alpha = {alpha}, beta = {beta}"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
        }
        if !(f_target > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "normalisation target must be positive, got {f_target}"
            )));
        }
        let c1 = if alpha > -1.0 {
            f_target / (1.0 + alpha).powi(2)
        } else {
            0.0
        };
        let c2 = if beta < 1.0 {
            f_target / (1.0 - beta).powi(2)
        } else {
            0.0
        };
        // ∫_α^β (s-α)²(β-s)² ds = (β-α)⁵/30
        let c3 = 30.0 / (beta - alpha).powi(5);
        Ok(Self {
            alpha,
            beta,
            c1,
            c2,
            c3,
            eps,
            amplitude: 1.0,
            exponent: 1,
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_exponent(mut self, exponent: i32) -> Self {
        self.exponent = exponent;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Factor `a · eps^(-p)` multiplying the discrete penalty in the flow.
    pub fn prefactor(&self) -> f64 {
        self.amplitude * self.eps.powi(-self.exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha < self.beta) {
            return Err(Error::InvalidConfig(format!(
                "band requires alpha < beta, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "penalty amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 || !(self.c3 > 0.0) {
            return Err(Error::InvalidConfig("band constants must be non-negative".into()));
        }
        Ok(())
    }

    pub fn contains(&self, s: f64) -> bool {
        self.alpha <= s && s <= self.beta
    }

    pub fn weight(&self, s: f64) -> f64 {
        if s < self.alpha {
            self.c1 * (s - self.alpha).powi(2)
        } else if s > self.beta {
            self.c2 * (self.beta - s).powi(2)
        } else {
            0.0
        }
    }

    pub fn weight_derivative(&self, s: f64) -> f64 {
        if s < self.alpha {
            2.0 * self.c1 * (s - self.alpha)
        } else if s > self.beta {
            -2.0 * self.c2 * (self.beta - s)
        } else {
            0.0
        }
    }

    pub fn bump(&self, s: f64) -> f64 {
        if self.alpha < s && s < self.beta {
            self.c3 * (s - self.alpha).powi(2) * (self.beta - s).powi(2)
        } else {
            0.0
        }
    }

    pub fn bump_derivative(&self, s: f64) -> f64 {
        if self.alpha < s && s < self.beta {
            2.0 * self.c3 * (s - self.alpha) * (self.beta - s) * (self.alpha + self.beta - 2.0 * s)
        } else {
            0.0
        }
    }

    pub fn profile(&self, s: f64) -> BandProfile {
        BandProfile {
            f: self.weight(s),
            df: self.weight_derivative(s),
            w: self.bump(s),
            dw: self.bump_derivative(s),
        }
    }
}

/// `(F, F', W̃, W̃')` at `s`.
pub fn band_profile(s: f64, cfg: &BandConfig) -> BandProfile {
    cfg.profile(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> BandConfig {
        BandConfig::new(0.85, 0.95, 0.01).unwrap()
    }

    /// Composite Simpson rule, independent of the closed-form constant.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let x = a + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn midpoint_values() {
        let p = band_profile(0.9, &band());
        assert_eq!(p.f, 0.0);
        assert_eq!(p.df, 0.0);
        assert!((p.w - 18.75).abs() < 1e-9);
        assert!(p.dw.abs() < 1e-9);
    }

    #[test]
    fn normalisation() {
        let b = band();
        assert!((b.weight(-1.0) - 1.0).abs() < 1e-12);
        assert!((b.weight(1.0) - 1.0).abs() < 1e-12);
        let integral = simpson(|s| b.bump(s), b.alpha, b.beta, 2000);
        assert!((integral - 1.0).abs() < 1e-12);

        let minus = BandConfig::new(-0.95, -0.85, 0.03).unwrap();
        assert!((minus.weight(-1.0) - 1.0).abs() < 1e-12);
        assert!((minus.weight(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn upper_constant_dropped_above_one() {
        let b = BandConfig::new(0.9, 1.2, 0.01).unwrap();
        assert_eq!(b.c2, 0.0);
        assert!((b.weight(-1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_zeros_at_endpoints() {
        let b = band();
        for s in [b.alpha, b.beta] {
            let p = b.profile(s);
            assert_eq!((p.f, p.df, p.w, p.dw), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = band();
        let h = 1e-7;
        for &s in &[-1.0, 0.3, 0.84, 0.87, 0.9, 0.93, 0.97, 1.2] {
            let fd_f = (b.weight(s + h) - b.weight(s - h)) / (2.0 * h);
            let fd_w = (b.bump(s + h) - b.bump(s - h)) / (2.0 * h);
            assert!((fd_f - b.weight_derivative(s)).abs() < 1e-4 * (1.0 + fd_f.abs()), "F' at {s}");
            assert!((fd_w - b.bump_derivative(s)).abs() < 1e-4 * (1.0 + fd_w.abs()), "W' at {s}");
        }
    }

    #[test]
    fn invalid_band_rejected() {
        assert!(BandConfig::new(0.95, 0.85, 0.01).is_err());
        assert!(BandConfig::new(0.5, 0.5, 0.01).is_err());
        assert!(BandConfig::new(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn prefactor_scaling() {
        let b = band().with_amplitude(60.0);
        assert!((b.prefactor() - 6000.0).abs() < 1e-9);
        assert_eq!(b.with_exponent(0).prefactor(), 60.0);
    }
}
