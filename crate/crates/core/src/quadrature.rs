//! Numerical integration: globally adaptive Gauss–Kronrod (7/15) on finite
//! intervals, a truncated rule for exponentially decaying tails, and fixed
//! Gauss–Legendre rules for polynomial integrands.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 4000;

/// Integral value with its (conservative) absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    Segment { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Adaptive integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    integrate_pieces(f, &[a, b], tol)
}

/// Adaptive integration over consecutive pieces `[x0, x1], [x1, x2], …`.
///
/// Splitting at known kinks keeps every piece smooth so the Kronrod error
/// estimate is meaningful.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: f64) -> Result<Estimate> {
    let mut segments: Vec<Segment> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    if segments.is_empty() {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }

    loop {
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= tol {
            break;
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if segments.len() >= MAX_SEGMENTS || mid <= seg.a || mid >= seg.b {
            return Err(Error::Quadrature { tolerance: tol, estimate: error });
        }
        segments[worst] = gk15(&f, seg.a, mid);
        segments.push(gk15(&f, mid, seg.b));
    }

    Ok(Estimate {
        value: segments.iter().map(|s| s.value).sum(),
        error: segments.iter().map(|s| s.error).sum(),
    })
}

/// Integral over `[breakpoints[0], ∞)` of an integrand bounded by `e^{-x}`.
///
/// The domain is truncated at the first `X` with `e^{-X} < tol / 2`; the
/// dropped tail is added to the error estimate.
pub fn integrate_exp_tail<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: f64) -> Result<Estimate> {
    let start = breakpoints[0];
    let cutoff = (-(0.5 * tol).ln()).max(start);
    let mut pieces: Vec<f64> = breakpoints.iter().copied().filter(|&x| x < cutoff).collect();
    pieces.push(cutoff);
    let tail = (-cutoff).exp();
    let body = integrate_pieces(f, &pieces, 0.5 * tol)?;
    Ok(Estimate { value: body.value, error: body.error + tail })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let step = pn / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
