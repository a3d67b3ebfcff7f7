use super::{LensingError, Result};

/// Geometric variance-exploding schedule `σ_t = σ_min (σ_max/σ_min)^t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VeSchedule {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub steps: usize,
}

impl Default for VeSchedule {
    fn default() -> Self {
        Self {
            sigma_min: 0.01,
            sigma_max: 100.0,
            steps: 300,
        }
    }
}

impl VeSchedule {
    pub fn new(sigma_min: f64, sigma_max: f64, steps: usize) -> Result<Self> {
        let s = Self {
            sigma_min,
            sigma_max,
            steps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max && self.sigma_max.is_finite())
        {
            return Err(LensingError::Schedule(format!(
                "need 0 < sigma_min < sigma_max, got {} and {}",
                self.sigma_min, self.sigma_max
            )));
        }
        if self.steps == 0 {
            return Err(LensingError::Schedule("steps must be >= 1".into()));
        }
        Ok(())
    }

    fn check_t(t: f64) -> Result<()> {
        if (0.0..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(LensingError::Schedule(format!("t = {t} outside [0, 1]")))
        }
    }

    pub fn sigma_t(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        Ok(self.sigma_at(t))
    }

    pub(crate) fn sigma_at(&self, t: f64) -> f64 {
        match t {
            0.0 => self.sigma_min,
            1.0 => self.sigma_max,
            _ => self.sigma_min * (self.sigma_max / self.sigma_min).powf(t),
        }
    }

    /// `g²(t) = dσ_t²/dt = 2 σ_t² ln(σ_max/σ_min)`.
    pub fn g2(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        let s = self.sigma_at(t);
        Ok(2.0 * s * s * (self.sigma_max / self.sigma_min).ln())
    }

    pub fn step_size(&self) -> f64 {
        1.0 / self.steps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = VeSchedule::default();
        assert_eq!(s.sigma_t(0.0).unwrap(), 0.01);
        assert_eq!(s.sigma_t(1.0).unwrap(), 100.0);
        assert!((s.sigma_t(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(s.sigma_t(1.5).is_err());
        assert!(s.sigma_t(-0.1).is_err());
    }

    #[test]
    fn g2_is_derivative_of_variance() {
        let s = VeSchedule::default();
        let h = 1e-6;
        for t in [0.1, 0.5, 0.9] {
            let fd = (s.sigma_t(t + h).unwrap().powi(2) - s.sigma_t(t - h).unwrap().powi(2))
                / (2.0 * h);
            let g2 = s.g2(t).unwrap();
            assert!((fd - g2).abs() < 1e-6 * g2, "{fd} vs {g2}");
        }
    }

    #[test]
    fn validation() {
        assert!(VeSchedule::new(1.0, 0.5, 10).is_err());
        assert!(VeSchedule::new(0.0, 0.5, 10).is_err());
        assert!(VeSchedule::new(0.1, 0.5, 0).is_err());
    }
}
