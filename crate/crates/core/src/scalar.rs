use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the library is generic over (`f64` or `f32`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative eigenvalue cutoff defining the support of a PSD operator.
    fn support_cutoff() -> Self {
        Self::lit(1e-12).max(Self::default_epsilon() * Self::lit(100.0))
    }

    /// Absolute max-entry tolerance for |M - M^dag|.
    fn hermiticity_tol() -> Self {
        Self::lit(1e-10).max(Self::default_epsilon() * Self::lit(1e3))
    }

    /// Tolerance for unit trace and similar normalisations.
    fn normalization_tol() -> Self {
        Self::lit(1e-9).max(Self::default_epsilon() * Self::lit(1e4))
    }
}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {}

#[inline]
pub(crate) fn cplx<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `|z|` for a complex scalar.
#[inline]
pub(crate) fn modulus<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}
