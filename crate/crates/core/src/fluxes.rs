//! Conservation laws: entropy conservative two-point fluxes, Lax-Friedrichs
//! dissipation, entropy variables and their Jacobians.
//!
//! Every function is generic over [`Scalar`] so the same code is evaluated
//! in `f64` and differentiated with dual numbers.

use std::fmt::Debug;
use std::str::FromStr;

use crate::autodiff::{jacobian, Dual, Scalar};
use crate::error::{Error, Result};

/// States with density, pressure or height below this are rejected.
pub const ADMISSIBILITY_TOLERANCE: f64 = 1e-12;

/// Series branch of the logarithmic mean is used when `f² < LOGMEAN_SERIES_THRESHOLD`.
pub const LOGMEAN_SERIES_THRESHOLD: f64 = 1e-4;

pub const GAMMA: f64 = 1.4;

#[inline]
fn avg<T: Scalar>(a: T, b: T) -> T {
    (a + b) * 0.5
}

/// Logarithmic mean `(a - b)/(ln a - ln b)`, with the even-power series in
/// `f = (a - b)/(a + b)` near `a = b`. Arguments are ordered by value first so
/// the result is exactly symmetric.
pub fn logmean<T: Scalar>(a: T, b: T) -> T {
    let (a, b) = if a.value() < b.value() { (b, a) } else { (a, b) };
    let zeta = a / b;
    let f = (zeta - 1.0) / (zeta + 1.0);
    let u = f * f;
    if u.value() < LOGMEAN_SERIES_THRESHOLD {
        let series = ((u * (1.0 / 7.0) + 1.0 / 5.0) * u + 1.0 / 3.0) * u + 1.0;
        (a + b) / (series * 2.0)
    } else {
        (a - b) / (a.ln() - b.ln())
    }
}

/// [`logmean`] with argument validation.
pub fn logmean_checked(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::LogMeanDomain(a, b));
    }
    Ok(logmean(a, b))
}

/// Burgers two-point flux `(uL² + uL uR + uR²)/6`.
pub fn burgers_flux_ec<T: Scalar>(ul: T, ur: T) -> T {
    (ul * ul + ul * ur + ur * ur) * (1.0 / 6.0)
}

/// Wavespeed estimate used by the Lax-Friedrichs flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavespeedPolicy {
    /// `max(λ(uL), λ(uR))`.
    #[default]
    MaxOfEndpoints,
    /// `sqrt((λ(uL)² + λ(uR)²)/2)`.
    RmsOfEndpoints,
}

impl FromStr for WavespeedPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::MaxOfEndpoints),
            "rms" => Ok(Self::RmsOfEndpoints),
            _ => Err(Error::Unsupported(format!("wavespeed policy {s:?}"))),
        }
    }
}

impl WavespeedPolicy {
    pub fn name(self) -> &'static str {
        match self {
            Self::MaxOfEndpoints => "max",
            Self::RmsOfEndpoints => "rms",
        }
    }
}

/// A hyperbolic system with `N` conserved fields.
///
/// `dir` is a zero-based coordinate direction. Laws defined in fewer
/// dimensions than requested return zero fluxes in the extra directions.
pub trait ConservationLaw<const N: usize>: Debug + Clone + Send + Sync + 'static {
    fn name(&self) -> &'static str;

    /// Number of spatial directions the law is defined in.
    fn dim(&self) -> usize;

    fn flux_ec<T: Scalar>(&self, dir: usize, ul: &[T; N], ur: &[T; N]) -> [T; N];

    fn flux<T: Scalar>(&self, dir: usize, u: &[T; N]) -> [T; N];

    fn entropy<T: Scalar>(&self, u: &[T; N]) -> T;

    fn entropy_vars<T: Scalar>(&self, u: &[T; N]) -> [T; N];

    fn cons_vars<T: Scalar>(&self, v: &[T; N]) -> [T; N];

    /// Entropy potential `ψ = vᵀf - F` in direction `dir`.
    fn potential<T: Scalar>(&self, dir: usize, u: &[T; N]) -> T;

    /// Upper bound on the wavespeed along the unit vector `normal`.
    fn wavespeed<T: Scalar>(&self, u: &[T; N], normal: &[f64]) -> T;

    fn admissible(&self, u: &[f64; N]) -> bool;

    /// Mirror state with the normal velocity reversed.
    fn reflect<T: Scalar>(&self, u: &[T; N], normal: &[f64]) -> [T; N];

    /// `∂u/∂v` at the state `u`.
    fn dudv(&self, u: &[f64; N]) -> [[f64; N]; N] {
        let v = self.entropy_vars(u);
        jacobian(|w: &[Dual<N>; N]| self.cons_vars(w), &v)
    }

    /// `∂v/∂u` at the state `u`.
    fn dvdu(&self, u: &[f64; N]) -> [[f64; N]; N] {
        jacobian(|w: &[Dual<N>; N]| self.entropy_vars(w), u)
    }

    /// `Σ_d n_d f_{d,S}(uL, uR)`.
    fn flux_ec_normal<T: Scalar>(&self, ul: &[T; N], ur: &[T; N], normal: &[f64]) -> [T; N] {
        let mut out = [T::zero(); N];
        for (d, &n) in normal.iter().enumerate() {
            if n != 0.0 {
                let f = self.flux_ec(d, ul, ur);
                for k in 0..N {
                    out[k] += f[k] * n;
                }
            }
        }
        out
    }

    fn check_admissible(&self, node: usize, u: &[f64; N]) -> Result<()> {
        if self.admissible(u) {
            Ok(())
        } else {
            Err(Error::Inadmissible {
                node,
                state: u.to_vec(),
            })
        }
    }
}

/// Scalar Burgers equation with flux `u²/2` in the first direction only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Burgers;

impl ConservationLaw<1> for Burgers {
    fn name(&self) -> &'static str {
        "burgers"
    }

    fn dim(&self) -> usize {
        1
    }

    fn flux_ec<T: Scalar>(&self, dir: usize, ul: &[T; 1], ur: &[T; 1]) -> [T; 1] {
        if dir == 0 {
            [burgers_flux_ec(ul[0], ur[0])]
        } else {
            [T::zero()]
        }
    }

    fn flux<T: Scalar>(&self, dir: usize, u: &[T; 1]) -> [T; 1] {
        if dir == 0 {
            [u[0] * u[0] * 0.5]
        } else {
            [T::zero()]
        }
    }

    fn entropy<T: Scalar>(&self, u: &[T; 1]) -> T {
        u[0] * u[0] * 0.5
    }

    fn entropy_vars<T: Scalar>(&self, u: &[T; 1]) -> [T; 1] {
        *u
    }

    fn cons_vars<T: Scalar>(&self, v: &[T; 1]) -> [T; 1] {
        *v
    }

    fn potential<T: Scalar>(&self, dir: usize, u: &[T; 1]) -> T {
        if dir == 0 {
            u[0] * u[0] * u[0] * (1.0 / 6.0)
        } else {
            T::zero()
        }
    }

    /// `|u|`; the normal does not enter.
    fn wavespeed<T: Scalar>(&self, u: &[T; 1], _normal: &[f64]) -> T {
        u[0].abs()
    }

    fn admissible(&self, u: &[f64; 1]) -> bool {
        u[0].is_finite()
    }

    fn reflect<T: Scalar>(&self, u: &[T; 1], _normal: &[f64]) -> [T; 1] {
        [-u[0]]
    }

    fn dudv(&self, _u: &[f64; 1]) -> [[f64; 1]; 1] {
        [[1.0]]
    }

    fn dvdu(&self, _u: &[f64; 1]) -> [[f64; 1]; 1] {
        [[1.0]]
    }
}

/// Shallow water equations with fields `(h, hu[, hv])`; `N = 2` is the 1D
/// restriction, `N = 3` the 2D system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShallowWater<const N: usize> {
    pub gravity: f64,
}

pub type ShallowWater1D = ShallowWater<2>;
pub type ShallowWater2D = ShallowWater<3>;

impl<const N: usize> Default for ShallowWater<N> {
    fn default() -> Self {
        Self { gravity: 1.0 }
    }
}

impl<const N: usize> ShallowWater<N> {
    pub fn new(gravity: f64) -> Self {
        Self { gravity }
    }

    fn velocity<T: Scalar>(u: &[T; N]) -> [T; N] {
        let mut vel = [T::zero(); N];
        for k in 1..N {
            vel[k] = u[k] / u[0];
        }
        vel
    }
}

impl<const N: usize> ConservationLaw<N> for ShallowWater<N> {
    fn name(&self) -> &'static str {
        if N == 2 {
            "swe1d"
        } else {
            "swe2d"
        }
    }

    fn dim(&self) -> usize {
        N - 1
    }

    fn flux_ec<T: Scalar>(&self, dir: usize, ul: &[T; N], ur: &[T; N]) -> [T; N] {
        let mut out = [T::zero(); N];
        if dir + 1 >= N {
            return out;
        }
        let (vl, vr) = (Self::velocity(ul), Self::velocity(ur));
        let mass = avg(ul[dir + 1], ur[dir + 1]);
        out[0] = mass;
        for k in 1..N {
            out[k] = mass * avg(vl[k], vr[k]);
        }
        out[dir + 1] += ul[0] * ur[0] * (0.5 * self.gravity);
        out
    }

    fn flux<T: Scalar>(&self, dir: usize, u: &[T; N]) -> [T; N] {
        let mut out = [T::zero(); N];
        if dir + 1 >= N {
            return out;
        }
        let vel = Self::velocity(u);
        out[0] = u[dir + 1];
        for k in 1..N {
            out[k] = u[dir + 1] * vel[k];
        }
        out[dir + 1] += u[0] * u[0] * (0.5 * self.gravity);
        out
    }

    fn entropy<T: Scalar>(&self, u: &[T; N]) -> T {
        let vel = Self::velocity(u);
        let mut s = u[0] * u[0] * (0.5 * self.gravity);
        for k in 1..N {
            s += u[k] * vel[k] * 0.5;
        }
        s
    }

    fn entropy_vars<T: Scalar>(&self, u: &[T; N]) -> [T; N] {
        let vel = Self::velocity(u);
        let mut v = vel;
        let mut ke = T::zero();
        for k in 1..N {
            ke += vel[k] * vel[k];
        }
        v[0] = u[0] * self.gravity - ke * 0.5;
        v
    }

    fn cons_vars<T: Scalar>(&self, v: &[T; N]) -> [T; N] {
        let mut ke = T::zero();
        for k in 1..N {
            ke += v[k] * v[k];
        }
        let h = (v[0] + ke * 0.5) / self.gravity;
        let mut u = [h; N];
        for k in 1..N {
            u[k] = h * v[k];
        }
        u
    }

    fn potential<T: Scalar>(&self, dir: usize, u: &[T; N]) -> T {
        if dir + 1 >= N {
            return T::zero();
        }
        u[0] * u[dir + 1] * (0.5 * self.gravity)
    }

    fn wavespeed<T: Scalar>(&self, u: &[T; N], normal: &[f64]) -> T {
        let vel = Self::velocity(u);
        let mut un = T::zero();
        for (d, &n) in normal.iter().enumerate().take(N - 1) {
            un += vel[d + 1] * n;
        }
        un.abs() + (u[0] * self.gravity).sqrt()
    }

    fn admissible(&self, u: &[f64; N]) -> bool {
        u.iter().all(|x| x.is_finite()) && u[0] >= ADMISSIBILITY_TOLERANCE
    }

    fn reflect<T: Scalar>(&self, u: &[T; N], normal: &[f64]) -> [T; N] {
        reflect_momentum(u, normal, 1, N)
    }
}

/// Subtracts twice the normal component of `u[first..last]`.
fn reflect_momentum<T: Scalar, const N: usize>(
    u: &[T; N],
    normal: &[f64],
    first: usize,
    last: usize,
) -> [T; N] {
    let mut mn = T::zero();
    for (d, &n) in normal.iter().enumerate().take(last - first) {
        mn += u[first + d] * n;
    }
    let mut out = *u;
    for (d, &n) in normal.iter().enumerate().take(last - first) {
        out[first + d] -= mn * (2.0 * n);
    }
    out
}

/// Compressible Euler equations with fields `(ρ, ρu…, E)`; `N = 4` is 2D,
/// `N = 5` is 3D. Entropy `S = -ρs/(γ-1)` with `s = ln p - γ ln ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Euler<const N: usize> {
    pub gamma: f64,
}

pub type Euler2D = Euler<4>;
pub type Euler3D = Euler<5>;

impl<const N: usize> Default for Euler<N> {
    fn default() -> Self {
        Self { gamma: GAMMA }
    }
}

impl<const N: usize> Euler<N> {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    /// Velocity components in slots `1..N-1`; slot 0 and `N-1` are unused.
    fn velocity<T: Scalar>(u: &[T; N]) -> [T; N] {
        let mut vel = [T::zero(); N];
        for k in 1..N - 1 {
            vel[k] = u[k] / u[0];
        }
        vel
    }

    fn kinetic<T: Scalar>(u: &[T; N], vel: &[T; N]) -> T {
        let mut ke = T::zero();
        for k in 1..N - 1 {
            ke += u[k] * vel[k];
        }
        ke * 0.5
    }

    pub fn pressure<T: Scalar>(&self, u: &[T; N]) -> T {
        let vel = Self::velocity(u);
        (u[N - 1] - Self::kinetic(u, &vel)) * (self.gamma - 1.0)
    }

    pub fn sound_speed<T: Scalar>(&self, u: &[T; N]) -> T {
        (self.pressure(u) * self.gamma / u[0]).sqrt()
    }

    /// Conservative state from density, velocity and pressure.
    pub fn from_primitive(&self, rho: f64, vel: &[f64], p: f64) -> [f64; N] {
        let mut u = [0.0; N];
        u[0] = rho;
        let mut ke = 0.0;
        for (k, &w) in vel.iter().enumerate().take(N - 2) {
            u[k + 1] = rho * w;
            ke += 0.5 * rho * w * w;
        }
        u[N - 1] = p / (self.gamma - 1.0) + ke;
        u
    }

    /// Closed-form `∂v/∂u`, written in terms of the entropy variables of the
    /// `-ρs` scaling and rescaled by `1/(γ-1)`.
    pub fn dvdu_explicit(&self, u: &[f64; N]) -> [[f64; N]; N] {
        let g1 = self.gamma - 1.0;
        let vp: [f64; N] = {
            let v = self.entropy_vars(u);
            std::array::from_fn(|k| g1 * v[k])
        };
        let last = N - 1;
        let rho_e = self.pressure(u) / g1;
        let k: f64 = 0.5 * (1..last).map(|j| vp[j] * vp[j]).sum::<f64>() / vp[last];
        let scale = -1.0 / (rho_e * vp[last] * g1);
        let mut a = [[0.0; N]; N];
        a[0][0] = self.gamma + k * k;
        for j in 1..last {
            a[0][j] = k * vp[j];
            a[j][0] = k * vp[j];
            for l in 1..last {
                a[j][l] = vp[j] * vp[l] - if j == l { vp[last] } else { 0.0 };
            }
            a[j][last] = vp[j] * vp[last];
            a[last][j] = vp[j] * vp[last];
        }
        a[0][last] = (k + 1.0) * vp[last];
        a[last][0] = (k + 1.0) * vp[last];
        a[last][last] = vp[last] * vp[last];
        for row in &mut a {
            for x in row.iter_mut() {
                *x *= scale;
            }
        }
        a
    }
}

impl<const N: usize> ConservationLaw<N> for Euler<N> {
    fn name(&self) -> &'static str {
        match N {
            3 => "euler1d",
            4 => "euler2d",
            _ => "euler3d",
        }
    }

    fn dim(&self) -> usize {
        N - 2
    }

    fn flux_ec<T: Scalar>(&self, dir: usize, ul: &[T; N], ur: &[T; N]) -> [T; N] {
        let mut out = [T::zero(); N];
        if dir + 2 >= N {
            return out;
        }
        let (vl, vr) = (Self::velocity(ul), Self::velocity(ur));
        let (pl, pr) = (self.pressure(ul), self.pressure(ur));
        let (bl, br) = (ul[0] / (pl * 2.0), ur[0] / (pr * 2.0));
        let rho_log = logmean(ul[0], ur[0]);
        let beta_log = logmean(bl, br);
        let p_avg = avg(ul[0], ur[0]) / (avg(bl, br) * 2.0);
        let mut u2 = T::zero();
        let mut vel = [T::zero(); N];
        for k in 1..N - 1 {
            u2 += vl[k] * vr[k];
            vel[k] = avg(vl[k], vr[k]);
        }
        let e_avg = rho_log / (beta_log * (2.0 * (self.gamma - 1.0))) + rho_log * u2 * 0.5;
        let un = vel[dir + 1];
        let mass = rho_log * un;
        out[0] = mass;
        for k in 1..N - 1 {
            out[k] = mass * vel[k];
        }
        out[dir + 1] += p_avg;
        out[N - 1] = (e_avg + p_avg) * un;
        out
    }

    fn flux<T: Scalar>(&self, dir: usize, u: &[T; N]) -> [T; N] {
        let mut out = [T::zero(); N];
        if dir + 2 >= N {
            return out;
        }
        let vel = Self::velocity(u);
        let p = self.pressure(u);
        let un = vel[dir + 1];
        out[0] = u[dir + 1];
        for k in 1..N - 1 {
            out[k] = u[k] * un;
        }
        out[dir + 1] += p;
        out[N - 1] = (u[N - 1] + p) * un;
        out
    }

    fn entropy<T: Scalar>(&self, u: &[T; N]) -> T {
        let s = self.pressure(u).ln() - u[0].ln() * self.gamma;
        -(u[0] * s) / (self.gamma - 1.0)
    }

    fn entropy_vars<T: Scalar>(&self, u: &[T; N]) -> [T; N] {
        let vel = Self::velocity(u);
        let p = self.pressure(u);
        let s = p.ln() - u[0].ln() * self.gamma;
        let beta = u[0] / p;
        let mut v = [T::zero(); N];
        let mut ke = T::zero();
        for k in 1..N - 1 {
            v[k] = vel[k] * beta;
            ke += vel[k] * vel[k];
        }
        v[0] = (-s + self.gamma) / (self.gamma - 1.0) - beta * ke * 0.5;
        v[N - 1] = -beta;
        v
    }

    fn cons_vars<T: Scalar>(&self, v: &[T; N]) -> [T; N] {
        let g1 = self.gamma - 1.0;
        let vl = v[N - 1];
        let mut q = T::zero();
        for k in 1..N - 1 {
            q += v[k] * v[k];
        }
        let s = -(v[0] - q / (vl * 2.0)) * g1 + self.gamma;
        let rho = (-(s + (-vl).ln()) / g1).exp();
        let p = -rho / vl;
        let mut u = [T::zero(); N];
        u[0] = rho;
        let mut ke = T::zero();
        for k in 1..N - 1 {
            let w = -v[k] / vl;
            u[k] = rho * w;
            ke += w * w;
        }
        u[N - 1] = p / g1 + rho * ke * 0.5;
        u
    }

    fn potential<T: Scalar>(&self, dir: usize, u: &[T; N]) -> T {
        if dir + 2 >= N {
            return T::zero();
        }
        u[dir + 1]
    }

    fn wavespeed<T: Scalar>(&self, u: &[T; N], normal: &[f64]) -> T {
        let vel = Self::velocity(u);
        let mut un = T::zero();
        for (d, &n) in normal.iter().enumerate().take(N - 2) {
            un += vel[d + 1] * n;
        }
        un.abs() + self.sound_speed(u)
    }

    fn admissible(&self, u: &[f64; N]) -> bool {
        u.iter().all(|x| x.is_finite())
            && u[0] >= ADMISSIBILITY_TOLERANCE
            && self.pressure(u) >= ADMISSIBILITY_TOLERANCE
    }

    fn reflect<T: Scalar>(&self, u: &[T; N], normal: &[f64]) -> [T; N] {
        reflect_momentum(u, normal, 1, N - 1)
    }

    /// Closed-form `∂u/∂v` (symmetric positive definite).
    fn dudv(&self, u: &[f64; N]) -> [[f64; N]; N] {
        let last = N - 1;
        let rho = u[0];
        let vel = Self::velocity(u);
        let p = self.pressure(u);
        let c2 = self.gamma * p / rho;
        let ke: f64 = (1..last).map(|k| vel[k] * vel[k]).sum::<f64>() * 0.5;
        let h = c2 / (self.gamma - 1.0) + ke;
        let mut a = [[0.0; N]; N];
        a[0][0] = rho;
        for k in 1..last {
            a[0][k] = u[k];
            a[k][0] = u[k];
            for l in 1..last {
                a[k][l] = u[k] * vel[l] + if k == l { p } else { 0.0 };
            }
            a[k][last] = u[k] * h;
            a[last][k] = u[k] * h;
        }
        a[0][last] = u[last];
        a[last][0] = u[last];
        a[last][last] = rho * h * h - c2 * p / (self.gamma - 1.0);
        a
    }

    fn dvdu(&self, u: &[f64; N]) -> [[f64; N]; N] {
        self.dvdu_explicit(u)
    }
}

/// Local Lax-Friedrichs dissipation `d_S = λ/2 (uL - uR)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaxFriedrichs {
    pub policy: WavespeedPolicy,
}

impl LaxFriedrichs {
    pub fn new(policy: WavespeedPolicy) -> Self {
        Self { policy }
    }

    pub fn lambda<T: Scalar, L: ConservationLaw<N>, const N: usize>(
        &self,
        law: &L,
        ul: &[T; N],
        ur: &[T; N],
        normal: &[f64],
    ) -> T {
        let (a, b) = (law.wavespeed(ul, normal), law.wavespeed(ur, normal));
        match self.policy {
            WavespeedPolicy::MaxOfEndpoints => a.max_by_value(b),
            WavespeedPolicy::RmsOfEndpoints => ((a * a + b * b) * 0.5).sqrt(),
        }
    }

    pub fn flux<T: Scalar, L: ConservationLaw<N>, const N: usize>(
        &self,
        law: &L,
        ul: &[T; N],
        ur: &[T; N],
        normal: &[f64],
    ) -> [T; N] {
        let half = self.lambda(law, ul, ur, normal) * 0.5;
        std::array::from_fn(|k| half * (ul[k] - ur[k]))
    }
}

/// Runtime identifier of a conservation law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LawId {
    Burgers,
    Swe1d,
    Swe2d,
    Euler2d,
    Euler3d,
}

impl LawId {
    pub const ALL: [LawId; 5] = [
        LawId::Burgers,
        LawId::Swe1d,
        LawId::Swe2d,
        LawId::Euler2d,
        LawId::Euler3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LawId::Burgers => "burgers",
            LawId::Swe1d => "swe1d",
            LawId::Swe2d => "swe2d",
            LawId::Euler2d => "euler2d",
            LawId::Euler3d => "euler3d",
        }
    }

    pub fn n_fields(self) -> usize {
        match self {
            LawId::Burgers => 1,
            LawId::Swe1d => 2,
            LawId::Swe2d => 3,
            LawId::Euler2d => 4,
            LawId::Euler3d => 5,
        }
    }
}

impl FromStr for LawId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LawId::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("conservation law {s:?}")))
    }
}

impl std::fmt::Display for LawId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs `$body` with `$law` bound to the default-parameter instance of the
/// law named by `$id`.
#[macro_export]
macro_rules! with_law {
    ($id:expr, |$law:ident| $body:expr) => {
        match $id {
            $crate::fluxes::LawId::Burgers => {
                let $law = $crate::fluxes::Burgers;
                $body
            }
            $crate::fluxes::LawId::Swe1d => {
                let $law = $crate::fluxes::ShallowWater1D::default();
                $body
            }
            $crate::fluxes::LawId::Swe2d => {
                let $law = $crate::fluxes::ShallowWater2D::default();
                $body
            }
            $crate::fluxes::LawId::Euler2d => {
                let $law = $crate::fluxes::Euler2D::default();
                $body
            }
            $crate::fluxes::LawId::Euler3d => {
                let $law = $crate::fluxes::Euler3D::default();
                $body
            }
        }
    };
}

/// `∂f_S/∂uR` of a law's two-point flux in direction `dir`.
pub fn flux_jacobian_right<L: ConservationLaw<N>, const N: usize>(
    law: &L,
    dir: usize,
    ul: &[f64; N],
    ur: &[f64; N],
) -> [[f64; N]; N] {
    crate::autodiff::flux_jacobian_right(|a, b| law.flux_ec(dir, a, b), ul, ur)
}

/// `∂f_S/∂uL` of a law's two-point flux in direction `dir`.
pub fn flux_jacobian_left<L: ConservationLaw<N>, const N: usize>(
    law: &L,
    dir: usize,
    ul: &[f64; N],
    ur: &[f64; N],
) -> [[f64; N]; N] {
    crate::autodiff::flux_jacobian_left(|a, b| law.flux_ec(dir, a, b), ul, ur)
}

/// Checked variant of [`flux_jacobian_right`] returned as a dense matrix.
pub fn flux_jacobian_right_checked<L: ConservationLaw<N>, const N: usize>(
    law: &L,
    dir: usize,
    ul: &[f64; N],
    ur: &[f64; N],
) -> Result<crate::linalg::DenseMatrix> {
    law.check_admissible(0, ul)?;
    law.check_admissible(1, ur)?;
    let j = flux_jacobian_right(law, dir, ul, ur);
    Ok(crate::linalg::DenseMatrix::from_fn(N, N, |a, b| j[a][b]))
}

/// `∂f/∂u` of the physical flux.
pub fn physical_flux_jacobian<L: ConservationLaw<N>, const N: usize>(
    law: &L,
    dir: usize,
    u: &[f64; N],
) -> [[f64; N]; N] {
    jacobian(|w: &[Dual<N>; N]| law.flux(dir, w), u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_values() {
        assert_eq!(burgers_flux_ec(2.0, 2.0), 2.0);
        assert!((burgers_flux_ec(1.0, 2.0) - 7.0 / 6.0).abs() < 1e-15);
        let lf = LaxFriedrichs::default().flux(&Burgers, &[2.0], &[0.0], &[1.0]);
        assert_eq!(lf, [2.0]);
    }

    #[test]
    fn logmean_values() {
        assert!((logmean(3.7, 3.7) - 3.7).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((logmean(1.0, e) - (e - 1.0)).abs() < 1e-15);
        assert!(logmean_checked(0.0, 1.0).is_err());
        assert_eq!(logmean(1.3, 2.9), logmean(2.9, 1.3));
    }

    #[test]
    fn swe_values() {
        let law = ShallowWater2D::new(1.0);
        let f = law.flux_ec(0, &[2.0, 2.0, 0.0], &[2.0, 2.0, 0.0]);
        assert_eq!(f, [2.0, 4.0, 0.0]);
        let f = law.flux_ec(0, &[1.0, 1.0, 0.0], &[4.0, 4.0, 0.0]);
        assert!((f[1] - 4.5).abs() < 1e-15);
        let j = flux_jacobian_right(&law, 0, &[1.0, 0.3, 0.2], &[2.0, -0.1, 0.4]);
        assert!((j[0][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn euler_density_flux() {
        let law = Euler2D::default();
        let e = std::f64::consts::E;
        let ul = law.from_primitive(1.0, &[1.0, 0.0], 1.0);
        let ur = law.from_primitive(e, &[1.0, 0.0], 1.0);
        assert!((law.flux_ec(0, &ul, &ur)[0] - (e - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn euler_entropy_variable_at_rest() {
        let law = Euler2D::default();
        let v = law.entropy_vars(&[1.0, 0.0, 0.0, 2.0]);
        // p = 0.8, v_4 = -ρ/p
        assert!((v[3] + 1.25).abs() < 1e-15);
        assert_eq!(law.dudv(&[1.0, 0.3, 0.2, 2.0])[0][0], 1.0);
    }

    #[test]
    fn law_ids_parse() {
        for id in LawId::ALL {
            assert_eq!(id.name().parse::<LawId>().unwrap(), id);
            let n = with_law!(id, |law| law.name().len());
            assert_eq!(n, id.name().len());
        }
        assert!("navier".parse::<LawId>().is_err());
    }
}
