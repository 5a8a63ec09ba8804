//! Adaptive Gauss–Kronrod (7/15) quadrature and composite Simpson sums.

// published nodes and weights, kept at their full printed precision
#![allow(clippy::excessive_precision)]

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
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

/// Kronrod estimate and |Kronrod − Gauss| on `[a, b]`.
pub fn gauss_kronrod_15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (val, err) = gauss_kronrod_15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH || (b - a).abs() <= 1e-15 * a.abs().max(b.abs()) {
        return (val, err);
    }
    let mid = 0.5 * (a + b);
    let (l, el) = adapt(f, a, mid, 0.5 * tol, depth + 1);
    let (r, er) = adapt(f, mid, b, 0.5 * tol, depth + 1);
    (l + r, el + er)
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns `(value, error_estimate)`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    adapt(&mut f, a, b, tol, 0)
}

/// Same as [`integrate`] but splits at the given ascending `breakpoints`
/// (points outside `(a, b)` are ignored); the tolerance is shared in
/// proportion to segment length.
pub fn integrate_with_breaks(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> (f64, f64) {
    let length = b - a;
    let mut total = 0.0;
    let mut err = 0.0;
    let mut left = a;
    for &p in breakpoints.iter().filter(|&&p| p > a && p < b) {
        if p <= left {
            continue;
        }
        let (v, e) = adapt(&mut f, left, p, tol * (p - left) / length, 0);
        total += v;
        err += e;
        left = p;
    }
    let (v, e) = adapt(&mut f, left, b, tol * (b - left) / length, 0);
    (total + v, err + e)
}

/// Composite Simpson weights times `h` applied to uniformly spaced samples;
/// `values.len()` must be odd and at least 3.
pub fn simpson<T>(values: &[T], h: f64) -> T
where
    T: Copy + core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T>,
{
    debug_assert!(values.len() >= 3 && values.len() % 2 == 1);
    let n = values.len() - 1;
    let mut acc = values[0] + values[n];
    for (i, &v) in values.iter().enumerate().take(n).skip(1) {
        acc = acc + v * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}
