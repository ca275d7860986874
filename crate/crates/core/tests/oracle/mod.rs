//! Reference values computed without the library: Bessel `J_0` by Miller's backward
//! recurrence and the 2D radial Fourier inversion by composite Simpson.

/// `J_0(z)` from the normalized backward recurrence `J_{k-1} = (2k/z) J_k - J_{k+1}`
/// with `J_0 + 2 sum_{k>=1} J_{2k} = 1`.
pub fn bessel_j0(z: f64) -> f64 {
    let z = z.abs();
    if z < 1e-8 {
        return 1.0 - 0.25 * z * z;
    }
    let mut m = (z + 15.0 * z.cbrt() + 30.0) as usize;
    m += m % 2;
    let (mut next, mut cur) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        let prev = 2.0 * k as f64 / z * cur - next;
        next = cur;
        cur = prev;
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e200 {
            cur *= 1e-200;
            next *= 1e-200;
            norm *= 1e-200;
        }
    }
    cur / (norm + cur)
}

/// `(2 pi)^{-1} int_0^1 (1 - s)^delta J_0(s r) s ds`, the kernel of `(1 - |xi|)_+^delta`
/// in the plane. The substitution `s = 1 - u^2` removes the endpoint singularity.
pub fn bochner_riesz_kernel_2d(delta: f64, r: f64) -> f64 {
    let f = |u: f64| {
        let s = 1.0 - u * u;
        u.powf(2.0 * delta) * bessel_j0(s * r) * s * 2.0 * u
    };
    let intervals = 2 * (2048 + (64.0 * r) as usize);
    let h = 1.0 / intervals as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..intervals {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0 / (2.0 * std::f64::consts::PI)
}
