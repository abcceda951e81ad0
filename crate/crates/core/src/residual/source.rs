use crate::autodiff::{Dual, Scalar};

/// Space-time source `s(x, t)` added to the right-hand side, with its time
/// derivative for two-derivative integrators.
pub trait SourceTerm<const N: usize>: Send + Sync {
    fn value(&self, x: [f64; 2], t: f64) -> [f64; N];
    fn time_derivative(&self, x: [f64; 2], t: f64) -> [f64; N];
}

/// Source for the Burgers solution `u = sin(kt) sin(πx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersManufactured {
    pub k: f64,
}

impl BurgersManufactured {
    pub fn exact(&self, x: f64, t: f64) -> f64 {
        (self.k * t).sin() * (std::f64::consts::PI * x).sin()
    }
}

impl SourceTerm<1> for BurgersManufactured {
    fn value(&self, x: [f64; 2], t: f64) -> [f64; 1] {
        let pi = std::f64::consts::PI;
        let (st, ct) = ((self.k * t).sin(), (self.k * t).cos());
        let (sx, cx) = ((pi * x[0]).sin(), (pi * x[0]).cos());
        [self.k * ct * sx + st * st * pi * sx * cx]
    }

    fn time_derivative(&self, x: [f64; 2], t: f64) -> [f64; 1] {
        let pi = std::f64::consts::PI;
        let k = self.k;
        let (st, ct) = ((k * t).sin(), (k * t).cos());
        let (sx, cx) = ((pi * x[0]).sin(), (pi * x[0]).cos());
        [-k * k * st * sx + 2.0 * k * st * ct * pi * sx * cx]
    }
}

/// Source for the 1D shallow water solution `h = 2 + φ`, `hu = φ` with
/// `φ = sin(kt) sin(πx)`. The time derivative is taken with a dual number
/// in `t`, which is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShallowWaterManufactured {
    pub k: f64,
    pub gravity: f64,
}

impl ShallowWaterManufactured {
    pub fn exact(&self, x: f64, t: f64) -> [f64; 2] {
        let phi = (self.k * t).sin() * (std::f64::consts::PI * x).sin();
        [2.0 + phi, phi]
    }

    fn eval<T: SinCos>(&self, x: f64, t: T) -> [T; 2] {
        let pi = std::f64::consts::PI;
        let (sin_kt, cos_kt) = (t * self.k).sin_cos_scalar();
        let (sx, cx) = ((pi * x).sin(), (pi * x).cos());
        let phi = sin_kt * sx;
        let phi_t = cos_kt * (self.k * sx);
        let phi_x = sin_kt * (pi * cx);
        let h = phi + 2.0;
        // mass: h_t + (hu)_x
        let s1 = phi_t + phi_x;
        // momentum: (hu)_t + (φ²/h + g h²/2)_x
        let s2 = phi_t + phi * phi_x * 2.0 / h - phi * phi * phi_x / (h * h) + h * phi_x * self.gravity;
        [s1, s2]
    }
}

/// `sin` and `cos` through [`Scalar`] primitives.
trait SinCos: Scalar {
    fn sin_cos_scalar(self) -> (Self, Self);
}

impl SinCos for f64 {
    fn sin_cos_scalar(self) -> (f64, f64) {
        self.sin_cos()
    }
}

impl<const M: usize> SinCos for Dual<M> {
    fn sin_cos_scalar(self) -> (Self, Self) {
        let (s, c) = self.value.sin_cos();
        let mut ds = self;
        let mut dc = self;
        ds.value = s;
        dc.value = c;
        for k in 0..M {
            ds.tangents[k] = c * self.tangents[k];
            dc.tangents[k] = -s * self.tangents[k];
        }
        (ds, dc)
    }
}

impl SourceTerm<2> for ShallowWaterManufactured {
    fn value(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        self.eval(x[0], t)
    }

    fn time_derivative(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let s = self.eval(x[0], Dual::<1>::variable(t, 0));
        [s[0].tangents[0], s[1].tangents[0]]
    }
}
