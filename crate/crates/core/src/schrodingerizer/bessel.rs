/// `J_0(x), ..., J_kmax(x)` by Miller's backward recurrence, normalised with
/// `J_0 + 2 sum_k J_2k = 1`. Accurate to a few ulps for `x >= 0`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j_sequence: x must be finite and >= 0");
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = (kmax as f64).max(x);
    let mut m = (top + 40.0 + 12.0 * top.cbrt()).ceil() as usize;
    m += m % 2;
    const BIG: f64 = 1e250;
    let mut jp1 = 0.0_f64; // J_{k+1}
    let mut j = 1e-300_f64; // J_k, k = m
    let mut norm = 0.0_f64;
    let mut k = m;
    loop {
        if k <= kmax {
            out[k] = j;
        }
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * j;
        }
        if k == 0 {
            norm += j;
            break;
        }
        let jm1 = (2.0 * k as f64 / x) * j - jp1;
        jp1 = j;
        j = jm1;
        k -= 1;
        if j.abs() > BIG {
            j /= BIG;
            jp1 /= BIG;
            norm /= BIG;
            for v in out.iter_mut().skip(k) {
                *v /= BIG;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}
