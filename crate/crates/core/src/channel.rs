//! Clustered mmWave channels, planar-array responses and per-user combiners.

use std::f64::consts::{PI, TAU};
use std::hash::Hasher;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, complex_gaussian, phase, CMatrix, CVector, C64};

/// Uniform planar array of `horizontal x vertical` elements with spacing
/// `spacing_ratio = d / lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub horizontal: usize,
    pub vertical: usize,
    #[serde(default = "half_wavelength_spacing")]
    pub spacing_ratio: f64,
}

fn half_wavelength_spacing() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn new(horizontal: usize, vertical: usize, spacing_ratio: f64) -> Result<Self> {
        let geom = Self {
            horizontal,
            vertical,
            spacing_ratio,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Half-wavelength array.
    pub fn half_wavelength(horizontal: usize, vertical: usize) -> Self {
        Self {
            horizontal,
            vertical,
            spacing_ratio: 0.5,
        }
    }

    pub fn elements(&self) -> usize {
        self.horizontal * self.vertical
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizontal == 0 || self.vertical == 0 {
            return Err(Error::InvalidInput(format!(
                "array needs at least one element per axis, got {}x{}",
                self.horizontal, self.vertical
            )));
        }
        if !(self.spacing_ratio > 0.0 && self.spacing_ratio.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "element spacing must be positive, got {}",
                self.spacing_ratio
            )));
        }
        Ok(())
    }
}

/// Distribution of a path's angular offset around its cluster center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetShape {
    /// Uniform on `[-spread/2, spread/2]`.
    Uniform,
    /// Zero-mean Laplacian whose standard deviation equals the spread.
    Laplacian,
}

/// Which angles receive the intra-cluster spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadAxes {
    Both,
    Azimuth,
    Elevation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularModel {
    /// Angular spread in radians.
    pub spread: f64,
    pub shape: OffsetShape,
    pub axes: SpreadAxes,
}

impl Default for AngularModel {
    fn default() -> Self {
        Self {
            spread: 10f64.to_radians(),
            shape: OffsetShape::Uniform,
            axes: SpreadAxes::Both,
        }
    }
}

impl AngularModel {
    fn offset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.spread == 0.0 {
            return 0.0;
        }
        match self.shape {
            OffsetShape::Uniform => {
                let half = self.spread / 2.0;
                Uniform::new_inclusive(-half, half)
                    .expect("finite spread")
                    .sample(rng)
            }
            OffsetShape::Laplacian => {
                // inverse CDF with scale b = spread / sqrt(2)
                let b = self.spread / std::f64::consts::SQRT_2;
                let u: f64 = rng.random::<f64>() - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            }
        }
    }

    fn spread_azimuth(&self) -> bool {
        matches!(self.axes, SpreadAxes::Both | SpreadAxes::Azimuth)
    }

    fn spread_elevation(&self) -> bool {
        matches!(self.axes, SpreadAxes::Both | SpreadAxes::Elevation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub bs_array: ArrayGeometry,
    pub user_arrays: Vec<ArrayGeometry>,
    pub clusters_per_user: usize,
    pub paths_per_cluster: usize,
    pub angular: AngularModel,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        self.bs_array.validate()?;
        if self.user_arrays.is_empty() {
            return Err(Error::InvalidInput("at least one user is required".into()));
        }
        for geom in &self.user_arrays {
            geom.validate()?;
        }
        if self.clusters_per_user == 0 || self.paths_per_cluster == 0 {
            return Err(Error::InvalidInput(
                "clusters per user and paths per cluster must be at least 1".into(),
            ));
        }
        if !(self.angular.spread >= 0.0 && self.angular.spread.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "angular spread must be finite and non-negative, got {}",
                self.angular.spread
            )));
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.user_arrays.len()
    }

    pub fn tx_antennas(&self) -> usize {
        self.bs_array.elements()
    }
}

/// One propagation path: complex gain plus azimuth/elevation of arrival and
/// departure (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub gain: C64,
    pub azimuth_rx: f64,
    pub elevation_rx: f64,
    pub azimuth_tx: f64,
    pub elevation_tx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    /// `N_r x N_t` channel matrix.
    pub matrix: CMatrix,
    pub paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub users: Vec<UserChannel>,
}

impl ChannelRealization {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn tx_antennas(&self) -> usize {
        self.users[0].matrix.ncols()
    }

    pub fn matrices(&self) -> impl Iterator<Item = &CMatrix> {
        self.users.iter().map(|u| &u.matrix)
    }

    /// FNV-1a hash over the bit patterns of every channel entry. Two
    /// realizations hash equal iff they are bit-identical (up to collisions).
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::default();
        for user in &self.users {
            h.write_usize(user.matrix.nrows());
            h.write_usize(user.matrix.ncols());
            for z in user.matrix.iter() {
                h.write_u64(z.re.to_bits());
                h.write_u64(z.im.to_bits());
            }
        }
        h.finish()
    }

    /// Shapes of the per-user matrices, for debug dumps.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.users.iter().map(|u| u.matrix.shape()).collect()
    }
}

struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for Fnv1a {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

/// Normalized UPA response. Element `(w, v)` sits at index `w * V + v`.
pub fn upa_response(geom: &ArrayGeometry, azimuth: f64, elevation: f64) -> CVector {
    let (w_count, v_count) = (geom.horizontal, geom.vertical);
    let norm = 1.0 / ((w_count * v_count) as f64).sqrt();
    let kd = TAU * geom.spacing_ratio;
    let h_step = azimuth.sin() * elevation.sin();
    let v_step = elevation.cos();
    CVector::from_iterator(
        w_count * v_count,
        (0..w_count).flat_map(move |w| {
            (0..v_count)
                .map(move |v| C64::from_polar(norm, kd * (w as f64 * h_step + v as f64 * v_step)))
        }),
    )
}

/// Draws one channel realization per user:
/// `H_k = sqrt(N_t N_r / (N_c N_p)) * sum_{c,p} beta * a_r a_t^H`.
///
/// Each cluster has azimuth/elevation centers for arrival and departure drawn
/// uniformly on `[0, 2pi)`; each path perturbs the centers according to the
/// [`AngularModel`].
pub fn generate_channels<R: Rng + ?Sized>(
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    let nt = params.tx_antennas();
    let center = Uniform::new(0.0, TAU).expect("valid range");
    let model = &params.angular;
    let n_paths = params.clusters_per_user * params.paths_per_cluster;

    let mut users = Vec::with_capacity(params.num_users());
    for geom in &params.user_arrays {
        let nr = geom.elements();
        let scale = ((nt * nr) as f64 / n_paths as f64).sqrt();
        let mut matrix = CMatrix::zeros(nr, nt);
        let mut paths = Vec::with_capacity(n_paths);
        for _ in 0..params.clusters_per_user {
            let az_rx0 = center.sample(rng);
            let el_rx0 = center.sample(rng);
            let az_tx0 = center.sample(rng);
            let el_tx0 = center.sample(rng);
            for _ in 0..params.paths_per_cluster {
                let mut jitter = |on: bool| if on { model.offset(rng) } else { 0.0 };
                let az_rx = az_rx0 + jitter(model.spread_azimuth());
                let el_rx = el_rx0 + jitter(model.spread_elevation());
                let az_tx = az_tx0 + jitter(model.spread_azimuth());
                let el_tx = el_tx0 + jitter(model.spread_elevation());
                let gain = complex_gaussian(rng);

                let a_r = upa_response(geom, az_rx, el_rx);
                let a_t = upa_response(&params.bs_array, az_tx, el_tx);
                matrix += (a_r * a_t.adjoint()) * (gain * scale);
                paths.push(PathRecord {
                    gain,
                    azimuth_rx: az_rx,
                    elevation_rx: el_rx,
                    azimuth_tx: az_tx,
                    elevation_tx: el_tx,
                });
            }
        }
        users.push(UserChannel { matrix, paths });
    }
    Ok(ChannelRealization { users })
}

/// Selfish constant-modulus combiner: `w(i) = e^{j arg U(i,1)} / sqrt(N_r)`,
/// with `U(:,1)` the principal left-singular vector of `H_k`.
pub fn design_combiner(h: &CMatrix) -> Result<CVector> {
    numerics::ensure_finite(h)?;
    if h.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::DegenerateChannel);
    }
    let u = numerics::principal_left_vector(h)?;
    let mag = 1.0 / (h.nrows() as f64).sqrt();
    Ok(u.map(|z| C64::from_polar(mag, phase(z))))
}

/// Index `q` in `0..2^bits` of the grid phase `2 pi q / 2^bits` nearest to
/// `theta`. Exact ties go to the smaller index.
pub fn nearest_grid_index(theta: f64, bits: u32) -> u64 {
    let levels = 1u64 << bits;
    let mut t = theta.rem_euclid(TAU) / TAU * levels as f64;
    if t >= levels as f64 {
        t -= levels as f64;
    }
    let lo = t.floor();
    let frac = t - lo;
    let lo = lo as u64 % levels;
    let hi = (lo + 1) % levels;
    if frac < 0.5 {
        lo
    } else if frac > 0.5 {
        hi
    } else {
        lo.min(hi)
    }
}

pub fn grid_phase(q: u64, bits: u32) -> f64 {
    TAU * q as f64 / (1u64 << bits) as f64
}

/// Projects every entry onto `magnitude * e^{j 2 pi q / 2^bits}` with the
/// nearest `q`.
pub fn quantize_phases(v: &CVector, bits: u32, magnitude: f64) -> Result<CVector> {
    check_bits(bits)?;
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "quantization magnitude must be positive, got {magnitude}"
        )));
    }
    Ok(v.map(|z| {
        C64::from_polar(
            magnitude,
            grid_phase(nearest_grid_index(phase(z), bits), bits),
        )
    }))
}

pub(crate) fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > 32 {
        return Err(Error::InvalidInput(format!(
            "quantization bits must be in 1..=32, got {bits}"
        )));
    }
    Ok(())
}

/// `K x N_t` matrix whose row `k` is `w_k^H H_k`.
pub fn equivalent_channel(
    realization: &ChannelRealization,
    combiners: &[CVector],
) -> Result<CMatrix> {
    if combiners.len() != realization.num_users() {
        return Err(Error::InvalidInput(format!(
            "{} combiners for {} users",
            combiners.len(),
            realization.num_users()
        )));
    }
    let nt = realization.tx_antennas();
    let mut h_eq = CMatrix::zeros(combiners.len(), nt);
    for (k, (user, w)) in realization.users.iter().zip(combiners).enumerate() {
        if user.matrix.nrows() != w.len() || user.matrix.ncols() != nt {
            return Err(Error::InvalidInput(format!(
                "user {k}: combiner length {} does not match channel {}x{}",
                w.len(),
                user.matrix.nrows(),
                user.matrix.ncols()
            )));
        }
        h_eq.set_row(k, &(w.adjoint() * &user.matrix));
    }
    Ok(h_eq)
}

/// Per-user combiners plus the stacked equivalent channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSet {
    pub combiners: Vec<CVector>,
    pub h_eq: CMatrix,
    pub quantization_bits: Option<u32>,
}

impl CombinerSet {
    pub fn design(
        realization: &ChannelRealization,
        quantization_bits: Option<u32>,
    ) -> Result<Self> {
        if let Some(bits) = quantization_bits {
            check_bits(bits)?;
        }
        let combiners = realization
            .users
            .iter()
            .map(|user| {
                let w = design_combiner(&user.matrix)?;
                match quantization_bits {
                    Some(bits) => quantize_phases(&w, bits, 1.0 / (w.len() as f64).sqrt()),
                    None => Ok(w),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let h_eq = equivalent_channel(realization, &combiners)?;
        Ok(Self {
            combiners,
            h_eq,
            quantization_bits,
        })
    }

    pub fn num_users(&self) -> usize {
        self.combiners.len()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(TAU) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}
