//! Fully digital precoders, the hybrid precoder container, and the exact
//! 2K-chain constant-modulus decomposition.

use serde::{Deserialize, Serialize};

use crate::channel::{check_bits, grid_phase, nearest_grid_index};
use crate::error::{Error, Result};
use crate::numerics::{self, frobenius_sq, phase, CMatrix, C64};

/// Linear precoding rule applied to a (possibly effective) channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DigitalMethod {
    /// Matched filter, `H^H`.
    Mf,
    /// Zero forcing, `H^+`.
    Zf,
    /// Regularized ZF, `H^H (H H^H + beta I)^-1`. `beta = None` uses
    /// `K sigma^2 / P`.
    Rzf { beta: Option<f64> },
}

impl DigitalMethod {
    pub fn rzf() -> Self {
        DigitalMethod::Rzf { beta: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DigitalMethod::Mf => "mf",
            DigitalMethod::Zf => "zf",
            DigitalMethod::Rzf { .. } => "rzf",
        }
    }

    /// Whether the unnormalized precoder depends on `P / sigma^2`.
    pub fn depends_on_snr(&self) -> bool {
        matches!(self, DigitalMethod::Rzf { beta: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Every RF chain drives every antenna.
    Full,
    /// Switch network: each antenna attaches to exactly one chain.
    Adaptive,
    /// Fixed contiguous antenna blocks per chain.
    Sub,
    /// One RF chain per antenna, no analog stage.
    Digital,
}

impl Structure {
    pub fn name(&self) -> &'static str {
        match self {
            Structure::Full => "full",
            Structure::Adaptive => "adaptive",
            Structure::Sub => "sub",
            Structure::Digital => "digital",
        }
    }
}

/// Link-level quantities shared by every design: the equivalent channel,
/// transmit power and noise power, plus the optional analog phase resolution.
#[derive(Debug, Clone, Copy)]
pub struct LinkContext<'a> {
    pub h_eq: &'a CMatrix,
    pub power: f64,
    pub noise: f64,
    pub rf_phase_bits: Option<u32>,
}

impl<'a> LinkContext<'a> {
    pub fn new(h_eq: &'a CMatrix, power: f64, noise: f64) -> Self {
        Self {
            h_eq,
            power,
            noise,
            rf_phase_bits: None,
        }
    }

    pub fn with_rf_phase_bits(mut self, bits: Option<u32>) -> Self {
        self.rf_phase_bits = bits;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    /// `N_t x N_RF` analog stage.
    pub rf: CMatrix,
    /// `N_RF x K` digital stage.
    pub bb: CMatrix,
    pub structure: Structure,
}

impl HybridPrecoder {
    /// Fully digital precoder wrapped with an identity analog stage.
    pub fn digital(f: CMatrix) -> Self {
        Self {
            rf: CMatrix::identity(f.nrows(), f.nrows()),
            bb: f,
            structure: Structure::Digital,
        }
    }

    pub fn cascade(&self) -> CMatrix {
        &self.rf * &self.bb
    }

    pub fn rf_chains(&self) -> usize {
        self.rf.ncols()
    }

    /// Checks the structure's hardware constraints and `||F_RF F_BB||^2 = K`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInput(msg));
        let (nt, n_rf) = self.rf.shape();
        let k = self.bb.ncols();
        if self.bb.nrows() != n_rf {
            return fail(format!(
                "F_BB has {} rows for {n_rf} RF chains",
                self.bb.nrows()
            ));
        }
        let power = frobenius_sq(&self.cascade());
        if (power - k as f64).abs() > tol {
            return fail(format!("transmit power {power} differs from {k}"));
        }
        match self.structure {
            Structure::Digital => Ok(()),
            Structure::Full => {
                for ((i, n), z) in indexed(&self.rf) {
                    if (z.norm() - 1.0).abs() > tol {
                        return fail(format!("|F_RF({i},{n})| = {}", z.norm()));
                    }
                }
                Ok(())
            }
            Structure::Adaptive | Structure::Sub => {
                if n_rf == 0 || nt % n_rf != 0 {
                    return fail(format!("{nt} antennas do not split over {n_rf} chains"));
                }
                let m = nt / n_rf;
                let mut per_column = vec![0usize; n_rf];
                for i in 0..nt {
                    let mut nonzero = 0;
                    for (n, count) in per_column.iter_mut().enumerate() {
                        let z = self.rf[(i, n)];
                        if z == C64::new(0.0, 0.0) {
                            continue;
                        }
                        if (z.norm() - 1.0).abs() > tol {
                            return fail(format!("|F_RF({i},{n})| = {}", z.norm()));
                        }
                        if self.structure == Structure::Sub && n != i / m {
                            return fail(format!("F_RF({i},{n}) outside its block"));
                        }
                        nonzero += 1;
                        *count += 1;
                    }
                    if nonzero != 1 {
                        return fail(format!("row {i} has {nonzero} nonzero entries"));
                    }
                }
                if let Some(n) = per_column.iter().position(|&c| c != m) {
                    return fail(format!(
                        "column {n} has {} nonzero entries, expected {m}",
                        per_column[n]
                    ));
                }
                let gram = self.rf.adjoint() * &self.rf;
                let dev = numerics::identity_deviation(&gram, m as f64);
                if dev > tol {
                    return fail(format!("F_RF^H F_RF deviates from {m} I by {dev}"));
                }
                Ok(())
            }
        }
    }
}

fn indexed(a: &CMatrix) -> impl Iterator<Item = ((usize, usize), C64)> + '_ {
    let rows = a.nrows();
    a.iter()
        .enumerate()
        .map(move |(idx, z)| ((idx % rows, idx / rows), *z))
}

/// Unnormalized precoding direction for `h` (`K x N`), an `N x K` matrix.
pub fn precoding_direction(
    h: &CMatrix,
    method: DigitalMethod,
    power: f64,
    noise: f64,
) -> Result<CMatrix> {
    numerics::ensure_finite(h)?;
    if h.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::DegenerateChannel);
    }
    let k = h.nrows();
    match method {
        DigitalMethod::Mf => Ok(h.adjoint()),
        DigitalMethod::Zf => numerics::pseudo_inverse(h),
        DigitalMethod::Rzf { beta } => {
            let beta = match beta {
                Some(b) => b,
                None => {
                    if !(power > 0.0 && noise >= 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "RZF needs positive power and nonnegative noise, got P={power}, sigma2={noise}"
                        )));
                    }
                    k as f64 * noise / power
                }
            };
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "RZF regularizer must be positive, got {beta}"
                )));
            }
            let mut gram = h * h.adjoint();
            for i in 0..k {
                gram[(i, i)] += C64::new(beta, 0.0);
            }
            let inv = match gram.clone().try_inverse() {
                Some(inv) => inv,
                None => numerics::pseudo_inverse(&gram)?,
            };
            Ok(h.adjoint() * inv)
        }
    }
}

/// `sqrt(gamma) * direction` with `gamma` chosen so that `||F_opt||^2 = K`.
pub fn full_digital_precoder(
    h_eq: &CMatrix,
    method: DigitalMethod,
    power: f64,
    noise: f64,
) -> Result<CMatrix> {
    let f = precoding_direction(h_eq, method, power, noise)?;
    scale_to_power(f, h_eq.nrows())
}

pub(crate) fn scale_to_power(mut f: CMatrix, k: usize) -> Result<CMatrix> {
    let energy = frobenius_sq(&f);
    if energy == 0.0 || !energy.is_finite() {
        return Err(Error::DegeneratePrecoder);
    }
    f *= C64::new((k as f64 / energy).sqrt(), 0.0);
    Ok(f)
}

/// Exact factorization `F_opt = F_RF* F_BB*` with `2K` constant-modulus RF
/// columns. Column `j` of `F_opt` is written entrywise as
/// `x = alpha_j (e^{j phi1} + e^{j phi2})` with `alpha_j = max|x| / 2`;
/// RF columns `2j` and `2j+1` carry the two phasors.
pub fn optimal_hybrid_decomposition(f_opt: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    numerics::ensure_finite(f_opt)?;
    let (nt, k) = f_opt.shape();
    let mut rf = CMatrix::zeros(nt, 2 * k);
    let mut bb = CMatrix::zeros(2 * k, k);
    for j in 0..k {
        let col = f_opt.column(j);
        let peak = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::DegenerateColumn(j));
        }
        let alpha = peak / 2.0;
        for i in 0..nt {
            let x = col[i];
            let center = phase(x);
            let offset = (x.norm() / (2.0 * alpha)).clamp(0.0, 1.0).acos();
            rf[(i, 2 * j)] = C64::from_polar(1.0, center + offset);
            rf[(i, 2 * j + 1)] = C64::from_polar(1.0, center - offset);
        }
        bb[(2 * j, j)] = C64::new(alpha, 0.0);
        bb[(2 * j + 1, j)] = C64::new(alpha, 0.0);
    }
    Ok((rf, bb))
}

/// Snaps every nonzero entry of an analog precoder to the nearest point of the
/// `bits`-bit phase grid, keeping its modulus.
pub fn quantize_analog(rf: &CMatrix, bits: u32) -> Result<CMatrix> {
    check_bits(bits)?;
    Ok(rf.map(|z| {
        if z == C64::new(0.0, 0.0) {
            z
        } else {
            C64::from_polar(
                z.norm(),
                grid_phase(nearest_grid_index(phase(z), bits), bits),
            )
        }
    }))
}
