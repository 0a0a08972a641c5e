//! Periodic discrete wavelet transform for orthonormal filter banks.
//!
//! Analysis at one level correlates the signal with the lowpass filter `h`
//! and its quadrature mirror `g`, keeping every second output:
//!
//! ```text
//! a[n] = sum_k h[k] x[(2n + k) mod N]
//! d[n] = sum_k g[k] x[(2n + k) mod N],   g[k] = (-1)^k h[L-1-k]
//! ```
//!
//! Synthesis is the adjoint, which for an orthonormal bank is also the inverse.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WaveletError {
    #[error("unknown wavelet `{0}` (expected haar, db1, db2 or db4)")]
    UnknownName(String),
    #[error("signal length {0} is odd")]
    OddLength(usize),
    #[error("signal length {len} is shorter than the {filter}-tap filter")]
    TooShort { len: usize, filter: usize },
    #[error(
        "length {len} is not divisible by 2^{levels} = {block}; pad with {padding} samples to reach {padded}"
    )]
    Divisibility {
        len: usize,
        levels: usize,
        block: usize,
        padding: usize,
        padded: usize,
    },
    #[error("level count must be at least 1")]
    ZeroLevels,
    #[error("coarsest band has {coarse} samples, fewer than the {filter}-tap filter")]
    TooDeep { coarse: usize, filter: usize },
    #[error("inconsistent subband lengths: {0}")]
    Inconsistent(String),
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

// Daubechies scaling filters (minimum phase), 4 and 8 taps.
const DB2: [f64; 4] = [
    0.482_962_913_144_534_1,
    0.836_516_303_737_807_9,
    0.224_143_868_042_013_4,
    -0.129_409_522_551_260_37,
];

const DB4: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

/// An orthonormal two-channel filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    name: String,
    h: Vec<f64>,
    g: Vec<f64>,
}

impl WaveletSpec {
    /// Build from a lowpass filter; the highpass is its quadrature mirror.
    pub fn from_lowpass(name: impl Into<String>, h: Vec<f64>) -> Self {
        let len = h.len();
        let g = (0..len)
            .map(|k| {
                let v = h[len - 1 - k];
                if k % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        Self {
            name: name.into(),
            h,
            g,
        }
    }

    pub fn haar() -> Self {
        Self::from_lowpass("haar", HAAR.to_vec())
    }

    pub fn db2() -> Self {
        Self::from_lowpass("db2", DB2.to_vec())
    }

    pub fn db4() -> Self {
        Self::from_lowpass("db4", DB4.to_vec())
    }

    pub fn by_name(name: &str) -> Result<Self, WaveletError> {
        match name.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Self::haar()),
            "db2" => Ok(Self::db2()),
            "db4" => Ok(Self::db4()),
            _ => Err(WaveletError::UnknownName(name.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.h
    }

    pub fn highpass(&self) -> &[f64] {
        &self.g
    }

    pub fn filter_len(&self) -> usize {
        self.h.len()
    }
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self::db4()
    }
}

impl fmt::Display for WaveletSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for WaveletSpec {
    type Err = WaveletError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::by_name(s)
    }
}

/// Detail bands `D1..DL` (finest first) and the final approximation `AL`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
    pub original_len: usize,
}

impl SubbandSet {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// `D1, .., DL, AL` in feature order.
    pub fn bands(&self) -> impl Iterator<Item = &[f64]> {
        self.details
            .iter()
            .map(Vec::as_slice)
            .chain(std::iter::once(self.approx.as_slice()))
    }

    pub fn energy(&self) -> f64 {
        self.bands().flatten().map(|v| v * v).sum()
    }
}

/// One analysis step: returns `(approx, detail)`, each half the input length.
pub fn dwt_level(signal: &[f64], spec: &WaveletSpec) -> Result<(Vec<f64>, Vec<f64>), WaveletError> {
    let n = signal.len();
    if n % 2 != 0 {
        return Err(WaveletError::OddLength(n));
    }
    if n < spec.filter_len() {
        return Err(WaveletError::TooShort {
            len: n,
            filter: spec.filter_len(),
        });
    }
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (k, (&hk, &gk)) in spec.h.iter().zip(&spec.g).enumerate() {
            let x = signal[(2 * i + k) % n];
            a += hk * x;
            d += gk * x;
        }
        approx[i] = a;
        detail[i] = d;
    }
    Ok((approx, detail))
}

/// Multi-level pyramid. The length must divide by `2^levels` exactly; no
/// padding is inserted.
pub fn dwt_decompose(signal: &[f64], spec: &WaveletSpec, levels: usize) -> Result<SubbandSet, WaveletError> {
    check_decomposable(signal.len(), spec, levels)?;
    let mut details = Vec::with_capacity(levels);
    let mut approx = signal.to_vec();
    for _ in 0..levels {
        let (a, d) = dwt_level(&approx, spec)?;
        details.push(d);
        approx = a;
    }
    Ok(SubbandSet {
        details,
        approx,
        original_len: signal.len(),
    })
}

/// Check that a length-`len` signal can be decomposed `levels` times.
pub fn check_decomposable(len: usize, spec: &WaveletSpec, levels: usize) -> Result<(), WaveletError> {
    if levels == 0 {
        return Err(WaveletError::ZeroLevels);
    }
    let block = 1usize << levels;
    if len % block != 0 {
        let padded = len.div_ceil(block) * block;
        return Err(WaveletError::Divisibility {
            len,
            levels,
            block,
            padding: padded - len,
            padded,
        });
    }
    let coarse = len / block;
    if coarse < spec.filter_len() {
        return Err(WaveletError::TooDeep {
            coarse,
            filter: spec.filter_len(),
        });
    }
    Ok(())
}

/// Inverse of one analysis step.
pub fn idwt_level(approx: &[f64], detail: &[f64], spec: &WaveletSpec) -> Result<Vec<f64>, WaveletError> {
    if approx.len() != detail.len() {
        return Err(WaveletError::Inconsistent(format!(
            "approx has {} coefficients, detail {}",
            approx.len(),
            detail.len()
        )));
    }
    let n = 2 * approx.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return Ok(out);
    }
    for (i, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        for (k, (&hk, &gk)) in spec.h.iter().zip(&spec.g).enumerate() {
            out[(2 * i + k) % n] += hk * a + gk * d;
        }
    }
    Ok(out)
}

/// Rebuild the signal from its subbands.
pub fn idwt_reconstruct(sb: &SubbandSet, spec: &WaveletSpec) -> Result<Vec<f64>, WaveletError> {
    let levels = sb.levels();
    if levels == 0 {
        return Err(WaveletError::ZeroLevels);
    }
    for (j, d) in sb.details.iter().enumerate() {
        let want = sb.original_len >> (j + 1);
        if d.len() != want || sb.original_len % (1 << (j + 1)) != 0 {
            return Err(WaveletError::Inconsistent(format!(
                "D{} has {} coefficients, expected {} for length {}",
                j + 1,
                d.len(),
                want,
                sb.original_len
            )));
        }
    }
    if sb.approx.len() != sb.details[levels - 1].len() {
        return Err(WaveletError::Inconsistent(format!(
            "A{levels} has {} coefficients, D{levels} has {}",
            sb.approx.len(),
            sb.details[levels - 1].len()
        )));
    }
    sb.details
        .iter()
        .rev()
        .try_fold(sb.approx.clone(), |approx, detail| idwt_level(&approx, detail, spec))
}
