//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

// Abscissae and weights from QUADPACK's qk15, kept at their published precision.
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<E>(f: &mut impl FnMut(f64) -> Result<f64, E>, a: f64, b: f64) -> Result<(f64, f64), E> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut values = [0.0; 15];
    values[7] = f(center)?;
    for j in 0..7 {
        let dx = half * XGK[j];
        values[j] = f(center - dx)?;
        values[14 - j] = f(center + dx)?;
    }
    let weight = |i: usize| WGK[if i < 8 { i } else { 14 - i }];
    let kronrod: f64 = (0..15).map(|i| weight(i) * values[i]).sum();
    let gauss: f64 =
        values[7] * WG[3] + (1..7).step_by(2).map(|j| WG[j / 2] * (values[j] + values[14 - j])).sum::<f64>();
    let abs_sum: f64 = (0..15).map(|i| weight(i) * values[i].abs()).sum();
    let mean = 0.5 * kronrod;
    let asc: f64 = (0..15).map(|i| weight(i) * (values[i] - mean).abs()).sum::<f64>() * half.abs();

    // QUADPACK's error scaling and round-off floor.
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let abs_total = abs_sum * half.abs();
    if abs_total > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_total);
    }
    Ok((kronrod * half, err))
}

/// Subintervals examined before giving up on refinement.
const MAX_PIECES: usize = 4096;

/// Integrate `f` over `[a, b]`, bisecting until each piece's error estimate is
/// below `max(abs_tol, rel_tol·|piece|)`, allowing for round-off, or the depth
/// or piece budget runs out.
pub(crate) fn integrate<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> Result<f64, E> {
    let mut total = 0.0;
    let mut pieces = 0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        pieces += 1;
        let (value, err) = kronrod15(&mut f, lo, hi)?;
        let floor = 50.0 * f64::EPSILON * value.abs();
        if err <= abs_tol.max(rel_tol * value.abs()).max(floor)
            || depth >= max_depth
            || pieces + stack.len() >= MAX_PIECES
        {
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}
