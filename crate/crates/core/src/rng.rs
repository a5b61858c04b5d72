//! Deterministic pseudorandom generation.
//!
//! Every random quantity in this crate is drawn from [`SplitMix64`]
//! (Steele, Lea and Flood's 64-bit mixing generator) so that identical
//! seeds reproduce identical streams on every platform. Normal deviates
//! use the inverse CDF computed with Wichura's PPND16 rational
//! approximation (algorithm AS 241), never the platform RNG, so cubes and
//! samples are bit-reproducible across machines.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a list of
/// context words (tags, indices). Used so that parallel cells and noise
/// streams never share generator state.
pub fn derive_seed(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed);
    for &w in words {
        h = mix64(h ^ w);
    }
    h
}

/// SplitMix64 generator state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in [0, 1) built from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in the open interval (0, 1); safe as a quantile.
    fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate via the inverse CDF.
    pub fn next_normal(&mut self) -> f64 {
        normal_inv_cdf(self.next_open_f64())
    }

    /// Uniform integer in [0, n) by the 128-bit multiply-shift reduction.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

const PPND16_A: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const PPND16_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const PPND16_C: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const PPND16_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const PPND16_E: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const PPND16_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn rational(num: &[f64; 8], den: &[f64; 8], r: f64) -> f64 {
    let mut p = num[7];
    let mut q = den[7];
    for k in (0..7).rev() {
        p = p * r + num[k];
        q = q * r + den[k];
    }
    p / q
}

/// Inverse of the standard normal CDF (quantile function), accurate to
/// about 1e-16 relative over (0, 1). Returns -inf/inf at the endpoints.
pub fn normal_inv_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * rational(&PPND16_A, &PPND16_B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let z = if r <= 5.0 {
        rational(&PPND16_C, &PPND16_D, r - 1.6)
    } else {
        rational(&PPND16_E, &PPND16_F, r - 5.0)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn splitmix_reference_stream() {
        // First three outputs for seed 0, cross-checked against the
        // published reference implementation.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn splitmix_streams_are_deterministic() {
        let mut a = SplitMix64::new(913);
        let mut b = SplitMix64::new(913);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn uniform_draws_stay_in_unit_interval() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn quantile_matches_reference_values() {
        // Reference quantiles from an independent high-precision evaluation.
        assert_relative_eq!(normal_inv_cdf(0.5), 0.0);
        assert_relative_eq!(normal_inv_cdf(0.975), 1.959963984540054, max_relative = 1e-14);
        assert_relative_eq!(normal_inv_cdf(0.025), -1.959963984540054, max_relative = 1e-14);
        assert_relative_eq!(normal_inv_cdf(0.9), 1.2815515655446004, max_relative = 1e-14);
        assert_relative_eq!(normal_inv_cdf(1e-10), -6.361340902404056, max_relative = 1e-14);
        assert_relative_eq!(normal_inv_cdf(0.001), -3.090232306167813, max_relative = 1e-14);
    }

    #[test]
    fn quantile_is_antisymmetric() {
        for &p in &[0.01, 0.1, 0.3, 0.45, 0.49999] {
            assert_relative_eq!(normal_inv_cdf(p), -normal_inv_cdf(1.0 - p), max_relative = 1e-12);
        }
    }

    #[test]
    fn normal_draws_have_sane_moments() {
        let mut rng = SplitMix64::new(1234);
        let n = 50_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = rng.next_normal();
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // 4-sigma bounds for the sample mean and a loose band for variance
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn below_respects_bound() {
        let mut rng = SplitMix64::new(99);
        let mut seen_high = false;
        for _ in 0..10_000 {
            let v = rng.below(37);
            assert!(v < 37);
            seen_high |= v >= 30;
        }
        assert!(seen_high, "upper range never hit");
    }

    #[test]
    fn derived_seeds_differ_by_context() {
        let base = 42;
        let a = derive_seed(base, &[1]);
        let b = derive_seed(base, &[2]);
        let c = derive_seed(base, &[1, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(base, &[1]));
    }
}
