use crate::error::{numerical, Result};
use crate::scalar::{CMat, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let c = (a + b) * T::of(0.5);
    let h = (b - a) * T::of(0.5);
    let fc = f(c);
    let mut k = fc * T::of(WGK[7]);
    let mut g = fc * T::of(WG[3]);
    for i in 0..7 {
        let x = h * T::of(XGK[i]);
        let s = f(c - x) + f(c + x);
        k += s * T::of(WGK[i]);
        if i % 2 == 1 {
            g += s * T::of(WG[i / 2]);
        }
    }
    (k * h, ((k - g) * h).mag())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of a scalar function.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> Result<T> {
    let mut stack = vec![(a, b, tol)];
    let mut total = T::zero();
    let mut evals = 0usize;
    while let Some((lo, hi, tl)) = stack.pop() {
        let (v, err) = gk15(&mut f, lo, hi);
        evals += 15;
        if err <= tl || (hi - lo).mag() < T::of(1e-12) * (b - a).mag() {
            total += v;
        } else {
            if evals > 2_000_000 {
                return numerical("integrate: adaptive quadrature did not converge");
            }
            let mid = (lo + hi) * T::of(0.5);
            let half = tl * T::of(0.5);
            stack.push((lo, mid, half));
            stack.push((mid, hi, half));
        }
    }
    Ok(total)
}

/// Chebyshev points of the second kind on `[-1, 1]` (descending) and the
/// spectral integration matrix `S` with `(S f)_j = int_{-1}^{x_j} f`.
pub(crate) fn cheb_integration(m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let nm = m - 1;
    let x: Vec<f64> = (0..m).map(|j| (std::f64::consts::PI * j as f64 / nm as f64).cos()).collect();
    // values -> Chebyshev coefficients (DCT-I)
    let mut to_coef = vec![vec![0.0; m]; m];
    for k in 0..m {
        for j in 0..m {
            let wj = if j == 0 || j == nm { 0.5 } else { 1.0 };
            let ck = if k == 0 || k == nm { 1.0 } else { 2.0 };
            to_coef[k][j] = ck / nm as f64 * wj * (std::f64::consts::PI * (k * j) as f64 / nm as f64).cos();
        }
    }
    // indefinite integral of sum a_k T_k, pinned to zero at x = -1
    let tk = |k: usize, xv: f64| -> f64 { (k as f64 * xv.clamp(-1.0, 1.0).acos()).cos() };
    let int_tk = |k: usize, xv: f64| -> f64 {
        match k {
            0 => xv + 1.0,
            1 => 0.5 * (xv * xv - 1.0),
            _ => {
                let kf = k as f64;
                let prim = |y: f64| tk(k + 1, y) / (2.0 * (kf + 1.0)) - tk(k - 1, y) / (2.0 * (kf - 1.0));
                prim(xv) - prim(-1.0)
            }
        }
    };
    let mut s = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for k in 0..m {
                acc += int_tk(k, x[i]) * to_coef[k][j];
            }
            s[i][j] = acc;
        }
    }
    (x, s)
}

/// Cumulative integrals `Y(s_j) = int_0^{s_j} g(r) dr` of a matrix-valued
/// function sampled on a composite Chebyshev grid.
pub(crate) struct PanelGrid<T: Real> {
    pub nodes: Vec<T>,
    panels: usize,
    m: usize,
    s: Vec<Vec<f64>>,
    h: T,
}

impl<T: Real> PanelGrid<T> {
    pub fn new(t: T, panels: usize, m: usize) -> Self {
        let (x, s) = cheb_integration(m);
        let h = t / T::of_usize(panels);
        let mut nodes = Vec::with_capacity(panels * m);
        for p in 0..panels {
            let a = h * T::of_usize(p);
            // ascending within each panel
            for j in (0..m).rev() {
                nodes.push(a + h * T::of(0.5 * (x[j] + 1.0)));
            }
        }
        Self { nodes, panels, m, s, h }
    }

    /// Values at every node of the running integral of `vals` (same layout as `nodes`).
    pub fn cumulative(&self, vals: &[CMat<T>]) -> Vec<CMat<T>> {
        let m = self.m;
        let (r, c) = vals[0].shape();
        let mut out = Vec::with_capacity(vals.len());
        let mut carry = CMat::<T>::zeros(r, c);
        let scale = self.h * T::of(0.5);
        for p in 0..self.panels {
            let base = p * m;
            let mut panel_vals = vec![CMat::<T>::zeros(r, c); m];
            for (ia, i) in (0..m).rev().enumerate() {
                let mut acc = CMat::<T>::zeros(r, c);
                for (ja, j) in (0..m).rev().enumerate() {
                    let w = self.s[i][j];
                    if w != 0.0 {
                        acc += &vals[base + ja] * crate::scalar::re(T::of(w) * scale);
                    }
                }
                panel_vals[ia] = &carry + acc;
            }
            carry = panel_vals[m - 1].clone();
            out.extend(panel_vals);
        }
        out
    }
}
