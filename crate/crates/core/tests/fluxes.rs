use fluxjac::autodiff::{derivative_wrt_right, gradient, jacobian, Dual, Scalar};
use fluxjac::fluxes::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn norm<const N: usize>(x: &[f64; N]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn diff_norm<const N: usize>(x: &[f64; N], y: &[f64; N]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn euler_state<const N: usize>(rho: f64, vel: &[f64], p: f64) -> [f64; N] {
    Euler::<N>::default().from_primitive(rho, vel, p)
}

fn swe_state<const N: usize>(h: f64, vel: &[f64]) -> [f64; N] {
    let mut u = [h; N];
    for k in 1..N {
        u[k] = h * vel[k - 1];
    }
    u
}

fn prim() -> impl Strategy<Value = (f64, [f64; 3], f64)> {
    (0.1f64..3.0, prop::array::uniform3(-1.5f64..1.5), 0.1f64..3.0)
}

/// Central FD of the flux in the right argument.
fn fd_right<L: ConservationLaw<N>, const N: usize>(
    law: &L,
    dir: usize,
    ul: &[f64; N],
    ur: &[f64; N],
) -> [[f64; N]; N] {
    let mut out = [[0.0; N]; N];
    for b in 0..N {
        let h = 1e-6 * ur[b].abs().max(1.0);
        let (mut p, mut m) = (*ur, *ur);
        p[b] += h;
        m[b] -= h;
        let (fp, fm) = (law.flux_ec(dir, ul, &p), law.flux_ec(dir, ul, &m));
        for a in 0..N {
            out[a][b] = (fp[a] - fm[a]) / (2.0 * h);
        }
    }
    out
}

fn mat_rel_diff<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> f64 {
    let mut d = 0.0;
    let mut n = 0.0;
    for i in 0..N {
        for j in 0..N {
            d += (a[i][j] - b[i][j]).powi(2);
            n += b[i][j].powi(2);
        }
    }
    (d / n.max(1e-300)).sqrt()
}

fn check_pair<L: ConservationLaw<N>, const N: usize>(law: &L, ul: &[f64; N], ur: &[f64; N]) {
    for dir in 0..law.dim() {
        // consistency
        let f = law.flux(dir, ul);
        let fs = law.flux_ec(dir, ul, ul);
        assert!(diff_norm(&fs, &f) <= 1e-13 * norm(&f).max(1e-300) + 1e-15, "{}: consistency", law.name());

        // symmetry
        let a = law.flux_ec(dir, ul, ur);
        let b = law.flux_ec(dir, ur, ul);
        assert!(diff_norm(&a, &b) <= 1e-14 * norm(&a) + 1e-300, "{}: symmetry", law.name());

        // Tadmor condition
        let (vl, vr) = (law.entropy_vars(ul), law.entropy_vars(ur));
        let lhs: f64 = (0..N).map(|k| (vl[k] - vr[k]) * a[k]).sum();
        let rhs = law.potential(dir, ul) - law.potential(dir, ur);
        let scale: f64 = (0..N).map(|k| ((vl[k] - vr[k]) * a[k]).abs()).sum::<f64>()
            + law.potential(dir, ul).abs()
            + law.potential(dir, ur).abs();
        assert!((lhs - rhs).abs() <= 1e-11 * scale, "{}: Tadmor {lhs} vs {rhs}", law.name());

        // dual vs central FD
        let j = flux_jacobian_right(law, dir, ul, ur);
        let fd = fd_right(law, dir, ul, ur);
        assert!(mat_rel_diff(&fd, &j) <= 1e-5, "{}: FD mismatch", law.name());

        // symmetry transfer between left and right partials
        let jl = flux_jacobian_left(law, dir, ur, ul);
        assert!(mat_rel_diff(&jl, &j) <= 1e-13, "{}: transfer", law.name());

        // left + right partials at equal states give the physical flux Jacobian
        let sum: [[f64; N]; N] = {
            let r = flux_jacobian_right(law, dir, ul, ul);
            let l = flux_jacobian_left(law, dir, ul, ul);
            std::array::from_fn(|p| std::array::from_fn(|q| r[p][q] + l[p][q]))
        };
        let a_phys = physical_flux_jacobian(law, dir, ul);
        assert!(mat_rel_diff(&sum, &a_phys) <= 1e-12, "{}: A(U)", law.name());
    }
}

fn check_entropy_maps<L: ConservationLaw<N>, const N: usize>(law: &L, u: &[f64; N]) {
    let v = law.entropy_vars(u);
    let back = law.cons_vars(&v);
    assert!(diff_norm(&back, u) <= 1e-12 * norm(u), "{}: roundtrip", law.name());

    let grad = gradient(|w: &[Dual<N>; N]| law.entropy(w), u);
    assert!(diff_norm(&grad, &v) <= 1e-12 * norm(&v).max(1.0), "{}: v = dS/du", law.name());

    let a = law.dudv(u);
    let b = law.dvdu(u);
    for i in 0..N {
        for j in 0..N {
            let p: f64 = (0..N).map(|k| a[i][k] * b[k][j]).sum();
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((p - e).abs() <= 1e-11 * (1.0 + norm(u)), "{}: dudv dvdu", law.name());
            assert!((a[i][j] - a[j][i]).abs() <= 1e-13 * a[i][i].abs().max(1.0));
        }
    }
    let ad = jacobian(|w: &[Dual<N>; N]| law.cons_vars(w), &v);
    assert!(mat_rel_diff(&a, &ad) <= 1e-11, "{}: dudv vs AD", law.name());
    let ad = jacobian(|w: &[Dual<N>; N]| law.entropy_vars(w), u);
    assert!(mat_rel_diff(&b, &ad) <= 1e-11, "{}: dvdu vs AD", law.name());
}

fn check_lf<L: ConservationLaw<N>, const N: usize>(law: &L, ul: &[f64; N], ur: &[f64; N], n: &[f64]) {
    for policy in [WavespeedPolicy::MaxOfEndpoints, WavespeedPolicy::RmsOfEndpoints] {
        let lf = LaxFriedrichs::new(policy);
        let d = lf.flux(law, ul, ur, n);
        let e = lf.flux(law, ur, ul, n);
        for k in 0..N {
            assert!((d[k] + e[k]).abs() <= 1e-14 * d[k].abs().max(1e-300));
        }
        assert!(lf.flux(law, ul, ul, n).iter().all(|&x| x == 0.0));
        let (vl, vr) = (law.entropy_vars(ul), law.entropy_vars(ur));
        let rate: f64 = (0..N).map(|k| (vl[k] - vr[k]) * d[k]).sum();
        assert!(rate >= -1e-14, "{}: LF entropy rate {rate}", law.name());
    }
}

fn unit(theta: f64) -> [f64; 3] {
    [theta.cos(), theta.sin(), 0.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn burgers_properties(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        check_pair(&Burgers, &[a], &[b]);
        check_entropy_maps(&Burgers, &[a]);
        check_lf(&Burgers, &[a], &[b], &[1.0]);
    }

    #[test]
    fn swe_properties(l in prim(), r in prim(), g in 0.5f64..10.0, theta in 0.0f64..6.3) {
        let law2 = ShallowWater2D::new(g);
        let (ul, ur) = (swe_state::<3>(l.0, &l.1), swe_state::<3>(r.0, &r.1));
        check_pair(&law2, &ul, &ur);
        check_entropy_maps(&law2, &ul);
        check_lf(&law2, &ul, &ur, &unit(theta)[..2]);

        let law1 = ShallowWater1D::new(g);
        let (ul, ur) = (swe_state::<2>(l.0, &l.1), swe_state::<2>(r.0, &r.1));
        check_pair(&law1, &ul, &ur);
        check_entropy_maps(&law1, &ul);
        check_lf(&law1, &ul, &ur, &[1.0]);
    }

    #[test]
    fn euler_properties(l in prim(), r in prim(), theta in 0.0f64..6.3, phi in 0.0f64..3.1) {
        let law = Euler2D::default();
        let (ul, ur) = (euler_state::<4>(l.0, &l.1, l.2), euler_state::<4>(r.0, &r.1, r.2));
        check_pair(&law, &ul, &ur);
        check_entropy_maps(&law, &ul);
        check_lf(&law, &ul, &ur, &unit(theta)[..2]);

        let law = Euler3D::default();
        let (ul, ur) = (euler_state::<5>(l.0, &l.1, l.2), euler_state::<5>(r.0, &r.1, r.2));
        check_pair(&law, &ul, &ur);
        check_entropy_maps(&law, &ul);
        let n = [theta.cos() * phi.sin(), theta.sin() * phi.sin(), phi.cos()];
        check_lf(&law, &ul, &ur, &n);
    }

    #[test]
    fn euler_nearly_equal_states(l in prim(), eps in -1e-6f64..1e-6) {
        // exercises the series branch of the logarithmic mean
        let law = Euler3D::default();
        let ul = euler_state::<5>(l.0, &l.1, l.2);
        let ur = euler_state::<5>(l.0 * (1.0 + eps), &l.1, l.2 * (1.0 - eps));
        check_pair(&law, &ul, &ur);
    }

    #[test]
    fn logmean_bounds_and_symmetry(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
        let m = logmean(a, b);
        prop_assert!(m >= a.min(b) * (1.0 - 1e-15) && m <= a.max(b) * (1.0 + 1e-15));
        prop_assert_eq!(m, logmean(b, a));
    }

    #[test]
    fn logmean_branch_continuity(a in 1e-2f64..1e2) {
        // f² = 1e-4 at ζ = (1 + 1e-2)/(1 - 1e-2)
        let zeta = 1.01 / 0.99;
        for s in [1.0 - 1e-12, 1.0, 1.0 + 1e-12] {
            let b = a / (zeta * s);
            let m = logmean(a, b);
            let direct = (a - b) / (a.ln() - b.ln());
            prop_assert!(rel(m, direct) <= 1e-13);
        }
    }
}

#[test]
fn logmean_near_equal_against_series_oracle() {
    // δ/ln(1+δ) = 1 + δ/2 - δ²/12 + δ³/24 - 19δ⁴/720 + …
    let d = 1e-9;
    let exact = 1.0 + d / 2.0 - d * d / 12.0 + d * d * d / 24.0;
    assert!(rel(logmean(1.0, 1.0 + d), exact) <= 1e-14);
    let d: f64 = 1e-3;
    let exact = 1.0 + d / 2.0 - d.powi(2) / 12.0 + d.powi(3) / 24.0 - 19.0 * d.powi(4) / 720.0
        + 3.0 * d.powi(5) / 160.0;
    assert!(rel(logmean(1.0, 1.0 + d), exact) <= 1e-14);
}

#[test]
fn logmean_derivative_at_equal_arguments() {
    let d = derivative_wrt_right(logmean, 1.0, 1.0);
    assert!((d - 0.5).abs() < 1e-15);
    let fd = (logmean(1.0, 1.0 + 1e-6) - logmean(1.0, 1.0 - 1e-6)) / 2e-6;
    assert!((d - fd).abs() < 1e-8);
}

#[test]
fn euler_flux_matches_independent_formulas() {
    // Chandrashekar flux recoded from primitive variables.
    let g = GAMMA;
    let (rl, ul, vl, wl, pl) = (1.2, 0.3, -0.4, 0.1, 0.9);
    let (rr, ur, vr, wr, pr) = (0.7, -0.2, 0.5, 0.3, 1.6);
    let law = Euler3D::default();
    let a = euler_state::<5>(rl, &[ul, vl, wl], pl);
    let b = euler_state::<5>(rr, &[ur, vr, wr], pr);
    let lm = |x: f64, y: f64| (x - y) / (x.ln() - y.ln());
    let (bl, br) = (rl / (2.0 * pl), rr / (2.0 * pr));
    let rho_log = lm(rl, rr);
    let beta_log = lm(bl, br);
    let pavg = 0.5 * (rl + rr) / (bl + br);
    let (um, vm, wm) = ((ul + ur) / 2.0, (vl + vr) / 2.0, (wl + wr) / 2.0);
    let u2 = ul * ur + vl * vr + wl * wr;
    let eavg = rho_log / (2.0 * (g - 1.0) * beta_log) + 0.5 * rho_log * u2;
    let expect = [
        rho_log * um,
        rho_log * um * um + pavg,
        rho_log * um * vm,
        rho_log * um * wm,
        (eavg + pavg) * um,
    ];
    let f = law.flux_ec(0, &a, &b);
    for k in 0..5 {
        assert!(rel(f[k], expect[k]) < 1e-13, "component {k}");
    }
}

#[test]
fn euler_entropy_gradient_by_fd() {
    let law = Euler2D::default();
    let u = euler_state::<4>(0.8, &[0.3, -0.6], 1.3);
    let v = law.entropy_vars(&u);
    for k in 0..4 {
        let h = 1e-6;
        let (mut p, mut m) = (u, u);
        p[k] += h;
        m[k] -= h;
        let fd = (law.entropy(&p) - law.entropy(&m)) / (2.0 * h);
        assert!((fd - v[k]).abs() < 1e-6 * v[k].abs().max(1.0));
    }
}

#[test]
fn inadmissible_states_are_rejected() {
    let law = Euler2D::default();
    assert!(!law.admissible(&[1.0, 0.0, 0.0, -1.0]));
    assert!(!law.admissible(&[0.0, 0.0, 0.0, 1.0]));
    assert!(ShallowWater2D::default().check_admissible(3, &[-1.0, 0.0, 0.0]).is_err());
    assert!(flux_jacobian_right_checked(&law, 0, &[1.0, 0.0, 0.0, 2.0], &[1.0, 0.0, 0.0, 0.0]).is_err());
}

#[test]
fn reflection_negates_normal_velocity() {
    let law = Euler2D::default();
    let u = euler_state::<4>(1.0, &[0.3, 0.4], 1.0);
    let r = law.reflect(&u, &[1.0, 0.0]);
    assert_eq!(r, [u[0], -u[1], u[2], u[3]]);
    let s = ShallowWater1D::default().reflect(&[2.0, 1.0], &[-1.0]);
    assert_eq!(s, [2.0, -1.0]);
    assert_eq!(Burgers.reflect(&[Dual::<1>::variable(0.5, 0)], &[1.0])[0].value(), -0.5);
}
