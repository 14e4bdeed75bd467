use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Polynomial in `tau` with complex coefficients, ascending degree, trailing
/// zeros trimmed. The zero polynomial is the empty vector.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct DensePolynomial {
    coeffs: Vec<Complex64>,
}

impl DensePolynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs
            .last()
            .is_some_and(|c| *c == Complex64::new(0.0, 0.0))
        {
            coeffs.pop();
        }
        DensePolynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, tau: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * tau + c)
    }

    /// Antiderivative vanishing at 0: raises the degree by one and divides
    /// each coefficient by its new power.
    pub fn integral(&self) -> DensePolynomial {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(Complex64::new(0.0, 0.0));
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(d, c)| c / (d as f64 + 1.0)),
        );
        DensePolynomial::new(out)
    }
}
