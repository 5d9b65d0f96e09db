use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};
use super::state::Reconstruction;
use crate::scalar::{cexp, Real};

/// Periodic grid `p_j = lp + j dp`, `j = 0..np`, with `dp = (rp - lp)/np`.
#[derive(Clone, Debug, PartialEq)]
pub struct PGrid<T: Real> {
    pub lp: T,
    pub rp: T,
    pub np: usize,
    pub dp: T,
}

impl<T: Real> PGrid<T> {
    pub fn new(lp: T, rp: T, np: usize) -> Result<Self> {
        if !(rp > lp) {
            return invalid("PGrid: need rp > lp");
        }
        if np < 4 || !np.is_power_of_two() {
            return invalid(format!("PGrid: np must be a power of two >= 4, got {np}"));
        }
        Ok(Self { lp, rp, np, dp: (rp - lp) / T::of_usize(np) })
    }

    pub fn len(&self) -> T {
        self.rp - self.lp
    }

    pub fn point(&self, j: usize) -> T {
        self.lp + self.dp * T::of_usize(j)
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.np).map(|j| self.point(j)).collect()
    }

    /// Signed frequency index of FFT slot `k`: `0..np/2-1` then `-np/2..-1`.
    pub fn ell(&self, k: usize) -> i64 {
        let n = self.np as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// `mu_l = 2 pi l / (rp - lp)` for FFT slot `k`.
    pub fn mu(&self, k: usize) -> T {
        T::two_pi() * T::of(self.ell(k) as f64) / self.len()
    }

    /// Index of the smallest grid point strictly above `p`.
    pub fn index_above(&self, p: T) -> Option<usize> {
        let j = ((p - self.lp) / self.dp).floor().to_f64() as i64 + 1;
        let j = j.max(0) as usize;
        if j < self.np {
            Some(j)
        } else {
            None
        }
    }
}

/// Default level below which `e^{-|p|}` counts as negligible at the ends.
pub const BOUNDARY_THRESHOLD: f64 = 1e-6;

impl<T: Real> PGrid<T> {
    /// `max(e^{-|lp|}, e^{-|rp|})`.
    pub fn boundary_mass(&self) -> T {
        (-self.lp.mag()).exp().max((-self.rp.mag()).exp())
    }

    pub fn is_negligible_at_ends(&self, threshold: T) -> bool {
        self.boundary_mass() < threshold
    }

    /// Grid of `np` points covering `[-left, right]` with `p = 0` on a node.
    /// When `left` is not a whole number of cells the left end is rounded
    /// outward to a node and the spacing grows so the right end still fits.
    pub fn covering(left: T, right: T, np: usize) -> Result<Self> {
        if !(left > T::zero() && right > T::zero()) {
            return invalid("PGrid: both extents must be positive");
        }
        if np < 4 {
            return invalid(format!("PGrid: np must be a power of two >= 4, got {np}"));
        }
        let cells = |x: T| {
            let r = x.round();
            if (x - r).mag() < T::of(1e-9) * T::of_usize(np) {
                r
            } else {
                x.ceil()
            }
        };
        let mut dp = (left + right) / T::of_usize(np);
        let mut m = cells(left / dp);
        if (T::of_usize(np) - m) * dp < right * (T::one() - T::of(1e-12)) {
            dp = (left + right) / T::of_usize(np - 1);
            m = cells(left / dp);
        }
        let lp = -m * dp;
        Self::new(lp, lp + dp * T::of_usize(np), np)
    }
}

/// Diagnostics from the grid refinement loop.
#[derive(Clone, Debug)]
pub struct GridReport<T: Real> {
    /// `(np, max probe change when np doubles)` for each level tried.
    pub refinement: Vec<(usize, T)>,
    /// Largest absolute error of the scalar probes on the chosen grid, read
    /// with the single-point formula.
    pub truncation_single: T,
    /// Same, read with the integral formula.
    pub truncation_integral: T,
    /// Distance the fastest-decaying component travels in `p`.
    pub reach: T,
}

impl<T: Real> GridReport<T> {
    pub fn truncation(&self, method: Reconstruction) -> T {
        match method {
            Reconstruction::SinglePoint => self.truncation_single,
            Reconstruction::Integral => self.truncation_integral,
        }
    }
}

/// Number of scalar decay rates probed during refinement.
pub const PROBE_RATES: usize = 9;

/// Grid with `rp = max(2, ln(3/delta) + p_diamond + 1)`, `lp = -max(2,
/// ln(3/delta) + 1)` and `np = 2^9` (the t = 0 probe is exact on grid points,
/// so no refinement happens without a flow).
pub fn build_grid<T: Real>(delta: T, p_diamond: T) -> Result<PGrid<T>> {
    let (g, _) = build_grid_for_flow(delta, p_diamond, (T::zero(), T::zero()), T::zero(), 1 << 9, 1 << 14, Reconstruction::SinglePoint)?;
    Ok(g)
}

/// Grid sized for a flow whose Hermitian-part spectrum lies in `rates` and
/// runs for time `t`.
///
/// The kink of `e^{-|p|}` moves left by up to `reach = |min rate| t`, so the
/// left end sits at `-(reach + ln(3/delta) + 1)`; without that the content
/// wraps around the periodic domain into the reconstruction window. The
/// right end is `p_diamond + ln(3/delta) + 1`. `np` doubles from
/// `start_np` until the scalar probes `dx/dt = a x` (`a` spanning `rates`),
/// read with `method`, change by less than `delta / 4`; the last grid that
/// met the test is returned.
pub fn build_grid_for_flow<T: Real>(
    delta: T,
    p_diamond: T,
    rates: (T, T),
    t: T,
    start_np: usize,
    max_np: usize,
    method: Reconstruction,
) -> Result<(PGrid<T>, GridReport<T>)> {
    if !(delta > T::zero() && delta < T::one()) {
        return invalid(format!("build_grid: delta must lie in (0,1), got {delta}"));
    }
    if p_diamond < T::zero() || t < T::zero() {
        return invalid("build_grid: p_diamond and t must be non-negative");
    }
    if !start_np.is_power_of_two() || start_np < 4 || max_np < start_np {
        return invalid("build_grid: bad np range");
    }
    let ln3 = (T::of(3.0) / delta).ln();
    let lo = rates.0.min(T::zero());
    // rates above p_diamond / t cannot be read back; the caller has chosen to ignore them
    let hi = if t > T::zero() { rates.1.min(p_diamond / t) } else { rates.1 }.max(T::zero());
    let reach = -lo * t;
    let two = T::of(2.0);
    let left = two.max(reach + ln3 + T::one());
    let right = two.max(p_diamond + ln3 + T::one());
    let probe_rates: Vec<T> =
        (0..PROBE_RATES).map(|i| lo + (hi - lo) * T::of_usize(i) / T::of_usize(PROBE_RATES - 1)).collect();
    let pick = |v: &(Vec<T>, Vec<T>)| -> Vec<T> {
        match method {
            Reconstruction::SinglePoint => v.0.clone(),
            Reconstruction::Integral => v.1.clone(),
        }
    };
    let mut refinement = vec![];
    let mut np = start_np;
    let mut prev = probe_values(&PGrid::covering(left, right, np)?, &probe_rates, t, p_diamond)?;
    loop {
        if np * 2 > max_np {
            break;
        }
        let finer = probe_values(&PGrid::covering(left, right, np * 2)?, &probe_rates, t, p_diamond)?;
        let change = pick(&prev).iter().zip(&pick(&finer)).fold(T::zero(), |m, (a, b)| m.max((*a - *b).mag()));
        refinement.push((np, change));
        if change < delta * T::of(0.25) {
            break;
        }
        np *= 2;
        prev = finer;
    }
    let grid = PGrid::covering(left, right, np)?;
    let err = |vals: &[T]| probe_rates.iter().zip(vals).fold(T::zero(), |m, (a, v)| m.max((*v - (*a * t).exp()).mag()));
    Ok((
        grid,
        GridReport { refinement, truncation_single: err(&prev.0), truncation_integral: err(&prev.1), reach },
    ))
}

/// Scalar flows `dx/dt = a x`, `x(0) = 1`, read off at time `t` with both
/// reconstruction formulas.
fn probe_values<T: Real>(grid: &PGrid<T>, rates: &[T], t: T, p_diamond: T) -> Result<(Vec<T>, Vec<T>)> {
    let ghat = warp_profile(grid);
    let n = grid.np;
    let pdm = rates.iter().fold(p_diamond, |m, a| m.max(*a * t));
    let j = grid
        .index_above(pdm + grid.dp)
        .ok_or_else(|| crate::error::Error::Invalid("build_grid: p_diamond too close to rp".into()))?;
    let pstar = grid.point(j);
    let scale = pstar.exp() / T::of_usize(n).sqrt();
    let wi: Vec<Complex<T>> = (0..n).map(|k| integral_weight(grid, k, pstar)).collect();
    let (mut single, mut integral) = (Vec::with_capacity(rates.len()), Vec::with_capacity(rates.len()));
    for &a in rates {
        // scalar mode: H_l = mu a, so mode k picks up exp(-i mu a t)
        let (mut s, mut q) = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()));
        for (k, g) in ghat.iter().enumerate() {
            let m = g * cexp(Complex::new(T::zero(), -grid.mu(k) * a * t));
            s += m * point_weight(grid, k, j);
            q += m * wi[k];
        }
        single.push((s * scale).re);
        integral.push((q * scale).re);
    }
    Ok((single, integral))
}

/// `e^{i mu_k (p_j - lp)}`.
pub(crate) fn point_weight<T: Real>(grid: &PGrid<T>, k: usize, j: usize) -> Complex<T> {
    let n = grid.np;
    cexp(Complex::new(T::zero(), T::two_pi() * T::of(((k * j) % n) as f64) / T::of_usize(n)))
}

/// `int_{pstar}^{rp} e^{i mu_k (p - lp)} dp / (1 - e^{-(rp - pstar)})`.
///
/// The divisor makes the window exact for a pure `e^{-p}` profile cut at `rp`.
pub(crate) fn integral_weight<T: Real>(grid: &PGrid<T>, k: usize, pstar: T) -> Complex<T> {
    let norm = T::one() / (T::one() - (pstar - grid.rp).exp());
    if grid.ell(k) == 0 {
        return Complex::new((grid.rp - pstar) * norm, T::zero());
    }
    let mu = grid.mu(k);
    let e = cexp(Complex::new(T::zero(), mu * (pstar - grid.lp)));
    // (e^{i mu D} - e) / (i mu) with mu D a multiple of 2 pi
    let num = Complex::new(T::one(), T::zero()) - e;
    Complex::new(num.im / mu, -num.re / mu) * norm
}

/// Unitary DFT of `e^{-|p_j|}` in FFT slot order.
pub(crate) fn warp_profile<T: Real>(grid: &PGrid<T>) -> Vec<Complex<T>> {
    let n = grid.np;
    let mut buf: Vec<Complex<T>> = (0..n).map(|j| Complex::new((-grid.point(j).mag()).exp(), T::zero())).collect();
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let s = T::one() / T::of_usize(n).sqrt();
    for z in buf.iter_mut() {
        *z = *z * s;
    }
    buf
}
