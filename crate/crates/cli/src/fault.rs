use conehj::{ExtendedHamiltonian64, Hamiltonian, Result};

/// Decreasing in the first coordinate and still Lipschitz, so only the
/// monotonicity checks can notice it.
pub struct NonMonotone {
    inner: ExtendedHamiltonian64,
    slope: f64,
}

impl NonMonotone {
    pub fn new(inner: ExtendedHamiltonian64) -> Self {
        Self { inner, slope: 0.5 }
    }
}

impl Hamiltonian<f64> for NonMonotone {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, y: &[f64]) -> Result<f64> {
        Ok(self.inner.eval(y)? - self.slope * y[0].abs())
    }

    fn lip_bound(&self) -> f64 {
        // |y_0| is 1/d-Lipschitz for the dual norm d·max|y|
        self.inner.lip_bound() + self.slope / self.dim() as f64
    }

    fn radius(&self) -> f64 {
        self.inner.radius()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use conehj::{lipschitz_audit, DyadicGrid, Kernel64, KernelMatrix64};

    #[test]
    fn audit_catches_it() {
        let g = Kernel64::quadratic(2.0);
        let h = ExtendedHamiltonian64::new(
            &KernelMatrix64::new(&g, DyadicGrid::new(0).unwrap()),
            &g,
            4.0,
        )
        .unwrap();
        let bad = NonMonotone::new(h);
        let audit = lipschitz_audit(&bad, 500, 1).unwrap();
        assert!(audit.monotone_violations > 0);
        assert!(audit.max_ratio <= audit.bound);
    }
}
