//! Oracles shared by the integration tests. None of them goes through the
//! Riccati/Prüfer machinery under test.

#![allow(dead_code)]

use ccbound::cp::MeshCache;
use ccbound::eigfun::Eigenfunction;
use ccbound::linalg::Mat;

/// Naive propagation of `(Y, Y')` from `Y(a) = 0, Y'(a) = I` by products of
/// transfer matrices; returns the pair at every meshpoint.
pub fn naive_y(cache: &MeshCache, e: f64) -> Vec<(Mat, Mat)> {
    let n = cache.intervals[0].v0.n();
    let mut z = Mat::zeros(2 * n, n);
    z.view_mut((n, 0), (n, n)).copy_from(&Mat::identity(n, n));
    let mut out = vec![(z.rows(0, n).into_owned(), z.rows(n, n).into_owned())];
    for iv in &cache.intervals {
        z = iv.step(e).unwrap().transfer() * &z;
        out.push((z.rows(0, n).into_owned(), z.rows(n, n).into_owned()));
    }
    out
}

pub fn cond2(m: &Mat) -> f64 {
    let s = m.clone().singular_values();
    s.max() / s.min()
}

/// Number of Dirichlet eigenvalues below `e` of `-y'' + v(x)y = Ey` on
/// `[a, b]`, from the scalar Prüfer angle `θ' = cos²θ + (E − v) sin²θ`
/// integrated by classical RK4. Also returns the distance of `θ(b)` to the
/// nearest multiple of π, which is small when `e` is close to an eigenvalue.
pub fn scalar_count(v: &dyn Fn(f64) -> f64, a: f64, b: f64, e: f64, steps: usize) -> (usize, f64) {
    let f = |x: f64, th: f64| {
        let (s, c) = th.sin_cos();
        c * c + (e - v(x)) * s * s
    };
    let h = (b - a) / steps as f64;
    let mut th = 0.0;
    for i in 0..steps {
        let x = a + i as f64 * h;
        let k1 = f(x, th);
        let k2 = f(x + 0.5 * h, th + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h, th + 0.5 * h * k2);
        let k4 = f(x + h, th + h * k3);
        th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let r = th / std::f64::consts::PI;
    let count = (r.ceil() as i64 - 1).max(0) as usize;
    (count, (r - r.round()).abs() * std::f64::consts::PI)
}

/// Simpson over samples taken with one extra point per interval
/// (`dense = 1`): `∫ f_iᵀ g_i dx`.
pub fn simpson_inner(f: &Eigenfunction, g: &Eigenfunction) -> f64 {
    assert_eq!(f.samples.len() % 2, 1);
    let mut total = 0.0;
    for j in (0..f.samples.len() - 1).step_by(2) {
        let h = f.samples[j + 2].x - f.samples[j].x;
        let p = |i: usize| f.samples[i].y.dot(&g.samples[i].y);
        total += h / 6.0 * (p(j) + 4.0 * p(j + 1) + p(j + 2));
    }
    total
}
