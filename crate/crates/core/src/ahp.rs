//! Adaptively- and sub-connected hybrid precoding: size-balanced K-means over
//! antenna rows with alternating optimization of the cluster centers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::digital::{quantize_analog, DigitalMethod, HybridPrecoder, LinkContext, Structure};
use crate::error::{Error, Result};
use crate::fhp::refine_baseband_effective;
use crate::numerics::{self, phase_only, CMatrix, CVector, C64};
use crate::partition::ClusterPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Phases of each block's principal left-singular vector.
    Specific,
    /// Independent uniform phases.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoConfig {
    /// Stop once the objective decreases by less than this.
    pub epsilon: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub init_mode: InitMode,
    /// Start each center update from the previous outer iteration's phases
    /// instead of re-initializing.
    pub warm_start: bool,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_inner_iters: 200,
            max_outer_iters: 50,
            init_mode: InitMode::Specific,
            warm_start: false,
        }
    }
}

impl AoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_inner_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::InvalidConfig(
                "iteration caps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `|s - e^{j arg(s c^H)} c|^2 = |s|^2 + |c|^2 - 2 |s c^H|`.
pub fn assignment_distance(s: &[C64], c: &[C64]) -> Result<f64> {
    if s.len() != c.len() {
        return Err(Error::InvalidInput(format!(
            "row lengths differ: {} vs {}",
            s.len(),
            c.len()
        )));
    }
    let (mut ss, mut cc, mut sc) = (0.0, 0.0, C64::new(0.0, 0.0));
    for (a, b) in s.iter().zip(c) {
        ss += a.norm_sqr();
        cc += b.norm_sqr();
        sc += a * b.conj();
    }
    Ok((ss + cc - 2.0 * sc.norm()).max(0.0))
}

fn row_distance(samples: &CMatrix, i: usize, centers: &CMatrix, q: usize) -> f64 {
    let (mut ss, mut cc, mut sc) = (0.0, 0.0, C64::new(0.0, 0.0));
    for j in 0..samples.ncols() {
        let a = samples[(i, j)];
        let b = centers[(q, j)];
        ss += a.norm_sqr();
        cc += b.norm_sqr();
        sc += a * b.conj();
    }
    (ss + cc - 2.0 * sc.norm()).max(0.0)
}

fn block_size(nt: usize, n_rf: usize) -> Result<usize> {
    if n_rf == 0 || !nt.is_multiple_of(n_rf) {
        return Err(Error::InvalidConfig(format!(
            "{nt} antennas cannot be split evenly over {n_rf} RF chains"
        )));
    }
    Ok(nt / n_rf)
}

/// Size-balanced assignment of the rows of `sqrt(M) U_opt` to the rows of
/// `centers`: `M` passes, in each of which the clusters take turns claiming
/// their nearest unassigned row (smallest row index on ties).
pub fn round_robin_assign(
    u_opt_k: &CMatrix,
    centers: &CMatrix,
    m: usize,
) -> Result<ClusterPartition> {
    let nt = u_opt_k.nrows();
    let n_rf = centers.nrows();
    if u_opt_k.ncols() != centers.ncols() {
        return Err(Error::InvalidInput(format!(
            "samples have {} columns but centers have {}",
            u_opt_k.ncols(),
            centers.ncols()
        )));
    }
    if block_size(nt, n_rf)? != m {
        return Err(Error::InvalidConfig(format!(
            "{nt} antennas over {n_rf} chains gives blocks of {}, not {m}",
            nt / n_rf
        )));
    }
    let samples = u_opt_k * C64::new((m as f64).sqrt(), 0.0);
    let distances: Vec<Vec<f64>> = (0..nt)
        .map(|i| {
            (0..n_rf)
                .map(|q| row_distance(&samples, i, centers, q))
                .collect()
        })
        .collect();
    let mut taken = vec![false; nt];
    let mut sets = vec![Vec::with_capacity(m); n_rf];
    for _ in 0..m {
        for (q, set) in sets.iter_mut().enumerate() {
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in distances.iter().enumerate() {
                if !taken[i] && best.is_none_or(|(_, d)| row[q] < d) {
                    best = Some((i, row[q]));
                }
            }
            let (i, _) = best.expect("rows remain while clusters are short");
            taken[i] = true;
            set.push(i);
        }
    }
    ClusterPartition::new(sets, nt)
}

/// Per-block starting phases: entrywise phases of the principal left singular
/// vector of each `M x K` block.
pub fn ao_init(blocks: &[CMatrix]) -> Result<Vec<CVector>> {
    blocks
        .iter()
        .enumerate()
        .map(|(n, block)| {
            if block.iter().all(|z| z.norm_sqr() == 0.0) {
                return Err(Error::DegenerateBlock(n));
            }
            Ok(numerics::principal_left_vector(block)?.map(phase_only))
        })
        .collect()
}

/// Starting point of one center update.
#[derive(Debug, Clone)]
pub enum AoStart {
    Specific,
    Random,
    /// Unit-modulus phase per antenna, indexed by antenna.
    Phases(Vec<C64>),
}

impl From<InitMode> for AoStart {
    fn from(mode: InitMode) -> Self {
        match mode {
            InitMode::Specific => AoStart::Specific,
            InitMode::Random => AoStart::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoOutcome {
    /// `N_t x N_RF`, one unit-modulus entry per row.
    pub rf: CMatrix,
    /// `N_RF x K` semi-unitary centers.
    pub centers: CMatrix,
    pub iterations: usize,
    /// Objective after every iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl AoOutcome {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("at least one iteration")
    }
}

/// Alternates a semi-orthogonal Procrustes update of the centers with a
/// per-antenna phase update, minimizing `||sqrt(M) U_opt - F_RF U_BB||^2`
/// for the antenna grouping in `partition`.
pub fn ao_center_update<R: Rng + ?Sized>(
    u_opt_k: &CMatrix,
    partition: &ClusterPartition,
    config: &AoConfig,
    start: AoStart,
    rng: &mut R,
) -> Result<AoOutcome> {
    config.validate()?;
    let nt = u_opt_k.nrows();
    let k = u_opt_k.ncols();
    let n_rf = partition.len();
    if partition.universe_size() != nt {
        return Err(Error::InvalidInput(format!(
            "partition covers {} antennas, expected {nt}",
            partition.universe_size()
        )));
    }
    let m = block_size(nt, n_rf)?;
    if partition.sizes().iter().any(|&s| s != m) {
        return Err(Error::InvalidInput(format!(
            "every cluster must hold {m} antennas"
        )));
    }
    if n_rf < k {
        return Err(Error::InvalidInput(format!(
            "{n_rf} RF chains cannot carry {k} streams"
        )));
    }

    // The block-diagonal (row-permuted) form of F_RF is never built; `owner`
    // maps each antenna to its chain instead.
    let owner = partition.owners();
    let scaled = u_opt_k * C64::new((m as f64).sqrt(), 0.0);

    let mut phases: Vec<C64> = match start {
        AoStart::Specific => {
            let blocks: Vec<CMatrix> = partition
                .sets()
                .iter()
                .map(|set| numerics::select_rows(u_opt_k, set))
                .collect();
            let mut phases = vec![C64::new(1.0, 0.0); nt];
            for (set, init) in partition.sets().iter().zip(ao_init(&blocks)?) {
                for (&t, z) in set.iter().zip(init.iter()) {
                    phases[t] = *z;
                }
            }
            phases
        }
        AoStart::Random => (0..nt)
            .map(|_| C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU))
            .collect(),
        AoStart::Phases(p) => {
            if p.len() != nt {
                return Err(Error::InvalidInput(format!(
                    "{} starting phases for {nt} antennas",
                    p.len()
                )));
            }
            p
        }
    };

    let mut centers = CMatrix::zeros(n_rf, k);
    let mut trace = Vec::new();
    let mut previous = f64::INFINITY;
    let mut converged = false;
    for _ in 0..config.max_inner_iters {
        // Procrustes: B = F^H U, centers = U_B V_B^H.
        let mut b = CMatrix::zeros(n_rf, k);
        for t in 0..nt {
            let f = phases[t].conj();
            let n = owner[t];
            for j in 0..k {
                b[(n, j)] += f * scaled[(t, j)];
            }
        }
        let svd = numerics::svd(&b)?;
        centers = &svd.u * svd.v.adjoint();

        // Phase step and objective.
        let mut objective = 0.0;
        for t in 0..nt {
            let n = owner[t];
            let mut corr = C64::new(0.0, 0.0);
            for j in 0..k {
                corr += scaled[(t, j)] * centers[(n, j)].conj();
            }
            phases[t] = phase_only(corr);
            for j in 0..k {
                objective += (scaled[(t, j)] - phases[t] * centers[(n, j)]).norm_sqr();
            }
        }
        trace.push(objective);
        if previous - objective < config.epsilon {
            converged = true;
            break;
        }
        previous = objective;
    }

    let mut rf = CMatrix::zeros(nt, n_rf);
    for t in 0..nt {
        rf[(t, owner[t])] = phases[t];
    }
    Ok(AoOutcome {
        rf,
        centers,
        iterations: trace.len(),
        trace,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AhpDesign {
    pub precoder: HybridPrecoder,
    pub partition: ClusterPartition,
    /// Centers matching `precoder.rf` before baseband refinement.
    pub centers: CMatrix,
    pub outer_iterations: usize,
    /// Iterations of each center update, in order.
    pub inner_iterations: Vec<usize>,
    /// Objective of every accepted outer iterate.
    pub outer_trace: Vec<f64>,
    /// Objective traces of every center update.
    pub inner_traces: Vec<Vec<f64>>,
}

impl AhpDesign {
    pub fn mean_inner_iterations(&self) -> f64 {
        if self.inner_iterations.is_empty() {
            return 0.0;
        }
        self.inner_iterations.iter().sum::<usize>() as f64 / self.inner_iterations.len() as f64
    }
}

fn check_dimensions(f_opt: &CMatrix, n_rf: usize) -> Result<usize> {
    let (nt, k) = f_opt.shape();
    let m = block_size(nt, n_rf)?;
    if n_rf < k {
        return Err(Error::InvalidConfig(format!(
            "{n_rf} RF chains cannot carry {k} streams"
        )));
    }
    Ok(m)
}

fn target_subspace(f_opt: &CMatrix) -> Result<CMatrix> {
    if f_opt.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::DegenerateChannel);
    }
    Ok(numerics::svd(f_opt)?.u)
}

fn finish(
    rf: CMatrix,
    structure: Structure,
    method: DigitalMethod,
    ctx: &LinkContext<'_>,
) -> Result<HybridPrecoder> {
    let rf = match ctx.rf_phase_bits {
        Some(bits) => quantize_analog(&rf, bits)?,
        None => rf,
    };
    let bb = refine_baseband_effective(&rf, ctx.h_eq, method, ctx.power, ctx.noise)?;
    Ok(HybridPrecoder { rf, bb, structure })
}

/// Modified K-means over antenna rows: assignment by rotation-invariant
/// distance with balanced round-robin claiming, center refinement by
/// [`ao_center_update`], repeated until the objective stops improving. If an
/// outer step makes the objective worse it is discarded and the previous
/// iterate is kept.
pub fn mkm_ahp<R: Rng + ?Sized>(
    f_opt: &CMatrix,
    n_rf: usize,
    config: &AoConfig,
    method: DigitalMethod,
    ctx: &LinkContext<'_>,
    rng: &mut R,
) -> Result<AhpDesign> {
    config.validate()?;
    let m = check_dimensions(f_opt, n_rf)?;
    let u_opt_k = target_subspace(f_opt)?;
    let mut centers = numerics::random_semi_unitary(n_rf, f_opt.ncols(), rng)?;

    let mut best: Option<(AoOutcome, ClusterPartition)> = None;
    let mut outer_trace = Vec::new();
    let mut inner_iterations = Vec::new();
    let mut inner_traces = Vec::new();
    let mut outer_iterations = 0;
    let mut previous = f64::INFINITY;
    while outer_iterations < config.max_outer_iters {
        outer_iterations += 1;
        let partition = round_robin_assign(&u_opt_k, &centers, m)?;
        let start = match &best {
            Some((prev, _)) if config.warm_start => AoStart::Phases(
                prev.rf
                    .row_iter()
                    .map(|r| {
                        r.iter()
                            .copied()
                            .find(|z| z.norm_sqr() > 0.0)
                            .unwrap_or(C64::new(1.0, 0.0))
                    })
                    .collect(),
            ),
            _ => config.init_mode.into(),
        };
        let outcome = ao_center_update(&u_opt_k, &partition, config, start, rng)?;
        inner_iterations.push(outcome.iterations);
        inner_traces.push(outcome.trace.clone());
        let objective = outcome.objective();
        if objective > previous {
            break;
        }
        centers = outcome.centers.clone();
        outer_trace.push(objective);
        best = Some((outcome, partition));
        if previous - objective < config.epsilon {
            break;
        }
        previous = objective;
    }

    let (outcome, partition) = best.expect("first outer iteration is always accepted");
    let precoder = finish(outcome.rf, Structure::Adaptive, method, ctx)?;
    Ok(AhpDesign {
        precoder,
        partition,
        centers: outcome.centers,
        outer_iterations,
        inner_iterations,
        outer_trace,
        inner_traces,
    })
}

/// Sub-connected design: contiguous antenna blocks and a single center update.
pub fn ao_shp<R: Rng + ?Sized>(
    f_opt: &CMatrix,
    n_rf: usize,
    config: &AoConfig,
    method: DigitalMethod,
    ctx: &LinkContext<'_>,
    rng: &mut R,
) -> Result<AhpDesign> {
    config.validate()?;
    let m = check_dimensions(f_opt, n_rf)?;
    let u_opt_k = target_subspace(f_opt)?;
    let partition = ClusterPartition::contiguous(n_rf, m);
    let outcome = ao_center_update(&u_opt_k, &partition, config, config.init_mode.into(), rng)?;
    let objective = outcome.objective();
    let precoder = finish(outcome.rf, Structure::Sub, method, ctx)?;
    Ok(AhpDesign {
        precoder,
        partition,
        centers: outcome.centers,
        outer_iterations: 1,
        inner_iterations: vec![outcome.iterations],
        outer_trace: vec![objective],
        inner_traces: vec![outcome.trace],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digital::full_digital_precoder;
    use crate::numerics::{complex_gaussian, phase};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng))
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn distance_examples() {
        let s = [c(1.0, 0.5), c(-0.3, 2.0)];
        assert!(assignment_distance(&s, &s).unwrap().abs() < 1e-15);
        let rot = C64::from_polar(1.0, 2.1);
        let r = [s[0] * rot, s[1] * rot];
        assert!(assignment_distance(&s, &r).unwrap().abs() < 1e-12);
        let d =
            assignment_distance(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(d, 2.0);
        assert!(assignment_distance(&s, &s[..1]).is_err());
    }

    #[test]
    fn distance_matches_explicit_rotation() {
        let s = [c(0.3, -1.0), c(0.8, 0.1), c(-0.2, 0.4)];
        let q = [c(1.1, 0.2), c(-0.5, 0.5), c(0.0, -0.9)];
        let inner: C64 = s.iter().zip(&q).map(|(a, b)| a * b.conj()).sum();
        let rot = phase_only(inner);
        let direct: f64 = s
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - rot * b).norm_sqr())
            .sum();
        assert!((assignment_distance(&s, &q).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn single_chain_takes_every_row() {
        let u = random(4, 1, 1);
        let centers = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let p = round_robin_assign(&u, &centers, 4).unwrap();
        assert_eq!(p.sets(), &[vec![0, 1, 2, 3]]);
    }

    #[test]
    fn round_robin_hand_trace() {
        // Scaled samples (M = 2) are sqrt(2) times these rows, centers e1, e2.
        let h = 1.0 / 2f64.sqrt();
        let u = CMatrix::from_row_slice(
            4,
            2,
            &[
                c(h, 0.0),
                c(0.0, 0.0), // row 0: aligned with center 0
                c(0.6 * h, 0.0),
                c(0.8 * h, 0.0),
                c(0.0, 0.0),
                c(h, 0.0), // row 2: aligned with center 1
                c(0.8 * h, 0.0),
                c(0.6 * h, 0.0),
            ],
        );
        let centers = CMatrix::identity(2, 2);
        // pass 1: center 0 -> row 0 (distance 0); center 1 -> row 2 (distance 0)
        // pass 2: center 0 prefers row 3 (|s c^H| = 0.8) over row 1 (0.6),
        //         center 1 gets row 1
        let p = round_robin_assign(&u, &centers, 2).unwrap();
        assert_eq!(p.sets(), &[vec![0, 3], vec![1, 2]]);
        assert!(round_robin_assign(&u, &CMatrix::identity(3, 2), 1).is_err());
    }

    #[test]
    fn round_robin_ties_pick_smallest_row() {
        let u = CMatrix::from_element(4, 1, c(0.5, 0.0));
        let centers = CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(1.0, 0.0)]);
        let p = round_robin_assign(&u, &centers, 2).unwrap();
        assert_eq!(p.sets(), &[vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn init_of_rank_one_block() {
        let u = CVector::from_vec(vec![
            c(0.5, 0.0),
            C64::from_polar(0.5, 1.0),
            C64::from_polar(0.5, -2.0),
        ]);
        let v = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let block = &u * v.adjoint() * c(2.0, 0.0);
        let init = ao_init(&[block]).unwrap();
        for i in 0..3 {
            assert!((init[0][i].norm() - 1.0).abs() < 1e-15);
            assert!((phase(init[0][i]) - phase(u[i])).abs() < 1e-12);
        }
        assert!(matches!(
            ao_init(&[CMatrix::zeros(2, 2)]),
            Err(Error::DegenerateBlock(0))
        ));
    }

    #[test]
    fn init_matches_principal_vector_up_to_rotation() {
        let block = random(5, 3, 2);
        let init = &ao_init(std::slice::from_ref(&block)).unwrap()[0];
        let gram = &block * block.adjoint();
        let mut v = CVector::from_element(5, c(1.0, 0.0));
        for _ in 0..5000 {
            v = &gram * &v;
            v /= c(v.norm(), 0.0);
        }
        let rot = phase_only(init.dotc(&v));
        for i in 0..5 {
            assert!(phase(init[i] * rot * v[i].conj()).abs() < 1e-8);
        }
    }

    fn setup(seed: u64, nt: usize, k: usize) -> (CMatrix, CMatrix) {
        let h = random(k, nt, seed);
        let f_opt = full_digital_precoder(&h, DigitalMethod::Zf, 1.0, 0.1).unwrap();
        (h, f_opt)
    }

    #[test]
    fn center_update_is_monotone_and_feasible() {
        let (_, f_opt) = setup(3, 16, 3);
        let u = numerics::svd(&f_opt).unwrap().u;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let partition = ClusterPartition::contiguous(4, 4);
        for start in [AoStart::Specific, AoStart::Random] {
            let out =
                ao_center_update(&u, &partition, &AoConfig::default(), start, &mut rng).unwrap();
            assert!(out.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let gram = out.centers.adjoint() * &out.centers;
            assert!(numerics::identity_deviation(&gram, 1.0) < 1e-8);
            let rf_gram = out.rf.adjoint() * &out.rf;
            assert!(numerics::identity_deviation(&rf_gram, 4.0) < 1e-12);
            // the reported objective is the residual of the returned pair
            let residual = (&u * c(2.0, 0.0) - &out.rf * &out.centers).norm_squared();
            assert!((residual - out.objective()).abs() < 1e-9);
        }
    }

    #[test]
    fn ahp_and_shp_satisfy_constraints() {
        let (h, f_opt) = setup(4, 16, 3);
        let ctx = LinkContext::new(&h, 1.0, 0.1);
        let config = AoConfig::default();
        for n_rf in [4, 8, 16] {
            let mut rng = ChaCha8Rng::seed_from_u64(n_rf as u64);
            let a = mkm_ahp(&f_opt, n_rf, &config, DigitalMethod::Zf, &ctx, &mut rng).unwrap();
            a.precoder.check(1e-8).unwrap();
            assert!(a.outer_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let s = ao_shp(&f_opt, n_rf, &config, DigitalMethod::Zf, &ctx, &mut rng).unwrap();
            s.precoder.check(1e-8).unwrap();
            assert_eq!(s.precoder.structure, Structure::Sub);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            mkm_ahp(&f_opt, 5, &config, DigitalMethod::Zf, &ctx, &mut rng),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            ao_shp(&f_opt, 2, &config, DigitalMethod::Zf, &ctx, &mut rng),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn cascade_singular_values_equal_sqrt_m() {
        let (h, f_opt) = setup(5, 16, 3);
        let ctx = LinkContext::new(&h, 1.0, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = mkm_ahp(
            &f_opt,
            4,
            &AoConfig::default(),
            DigitalMethod::Zf,
            &ctx,
            &mut rng,
        )
        .unwrap();
        let s = numerics::singular_values(&(&a.precoder.rf * &a.centers)).unwrap();
        for v in s.iter().take(3) {
            assert!((v - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn designs_are_deterministic() {
        let (h, f_opt) = setup(6, 16, 2);
        let ctx = LinkContext::new(&h, 1.0, 0.1);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            mkm_ahp(
                &f_opt,
                4,
                &AoConfig::default(),
                DigitalMethod::Zf,
                &ctx,
                &mut rng,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn one_antenna_per_chain_matches_across_structures() {
        let (h, f_opt) = setup(7, 8, 2);
        let ctx = LinkContext::new(&h, 1.0, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = mkm_ahp(
            &f_opt,
            8,
            &AoConfig::default(),
            DigitalMethod::Zf,
            &ctx,
            &mut rng,
        )
        .unwrap();
        let s = ao_shp(
            &f_opt,
            8,
            &AoConfig::default(),
            DigitalMethod::Zf,
            &ctx,
            &mut rng,
        )
        .unwrap();
        // each column has a single nonzero; the two patterns differ by a column permutation
        let pattern = |rf: &CMatrix| -> Vec<usize> {
            (0..rf.ncols())
                .map(|n| (0..rf.nrows()).find(|&i| rf[(i, n)].norm() > 0.0).unwrap())
                .collect()
        };
        let mut pa = pattern(&a.precoder.rf);
        let ps = pattern(&s.precoder.rf);
        assert_eq!(ps, (0..8).collect::<Vec<_>>());
        pa.sort_unstable();
        assert_eq!(pa, ps);
    }

    #[test]
    fn invalid_ao_config_is_rejected() {
        let bad = AoConfig {
            epsilon: 0.0,
            ..AoConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AoConfig {
            max_inner_iters: 0,
            ..AoConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
