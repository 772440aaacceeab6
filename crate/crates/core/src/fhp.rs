//! Fully-connected hybrid precoding by agglomerative clustering of the
//! rank-one components of the exact 2K-chain decomposition.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::digital::{
    optimal_hybrid_decomposition, precoding_direction, quantize_analog, DigitalMethod,
    HybridPrecoder, LinkContext, Structure,
};
use crate::error::{Error, Result};
use crate::numerics::{self, frobenius_sq, phase_only, CMatrix, CVector, C64};
use crate::partition::ClusterPartition;

/// The `2K` rank-one components `F_RF*(:,m) F_BB*(m,:)` and their frozen
/// pairwise distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct RfSampleSet {
    pub rf: CMatrix,
    pub bb: CMatrix,
    pub pairwise: DMatrix<f64>,
}

impl RfSampleSet {
    pub fn new(rf: CMatrix, bb: CMatrix) -> Result<Self> {
        if rf.ncols() != bb.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} RF columns but {} baseband rows",
                rf.ncols(),
                bb.nrows()
            )));
        }
        let pairwise = pairwise_distances(&rf);
        Ok(Self { rf, bb, pairwise })
    }

    pub fn from_target(f_opt: &CMatrix) -> Result<Self> {
        let (rf, bb) = optimal_hybrid_decomposition(f_opt)?;
        Self::new(rf, bb)
    }

    pub fn len(&self) -> usize {
        self.rf.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.rf.ncols() == 0
    }
}

fn inverse_inner_product(rf: &CMatrix, m: usize, n: usize) -> f64 {
    let ip = rf.column(m).dotc(&rf.column(n)).norm();
    if ip == 0.0 {
        f64::INFINITY
    } else {
        1.0 / ip
    }
}

/// `1 / |F(:,m)^H F(:,n)|`, infinite for orthogonal columns.
pub fn sample_distance(rf: &CMatrix, m: usize, n: usize) -> Result<f64> {
    if m == n {
        return Err(Error::InvalidInput(format!(
            "distance of sample {m} to itself"
        )));
    }
    if m >= rf.ncols() || n >= rf.ncols() {
        return Err(Error::InvalidInput(format!(
            "sample index out of range for {} columns",
            rf.ncols()
        )));
    }
    Ok(inverse_inner_product(rf, m, n))
}

/// Symmetric table of [`sample_distance`]; the diagonal is left at zero and
/// never read.
pub fn pairwise_distances(rf: &CMatrix) -> DMatrix<f64> {
    let n = rf.ncols();
    let mut table = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in m + 1..n {
            let d = inverse_inner_product(rf, m, k);
            table[(m, k)] = d;
            table[(k, m)] = d;
        }
    }
    table
}

/// Mean-linkage distance between sets `c` and `d` of `partition`.
pub fn cluster_distance(
    partition: &ClusterPartition,
    c: usize,
    d: usize,
    pairwise: &DMatrix<f64>,
) -> Result<f64> {
    if c == d {
        return Err(Error::InvalidInput(format!(
            "cluster {c} compared with itself"
        )));
    }
    if c >= partition.len() || d >= partition.len() {
        return Err(Error::InvalidInput(format!(
            "cluster index out of range for {} clusters",
            partition.len()
        )));
    }
    let (a, b) = (partition.set(c), partition.set(d));
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("empty cluster".into()));
    }
    Ok(mean_linkage(a, b, pairwise))
}

fn mean_linkage(a: &[usize], b: &[usize], pairwise: &DMatrix<f64>) -> f64 {
    let total: f64 = a
        .iter()
        .flat_map(|&m| b.iter().map(move |&n| pairwise[(m, n)]))
        .sum();
    total / (a.len() * b.len()) as f64
}

/// One agglomeration step: clusters at positions `first < second` of the
/// partition current at that step were merged; the union stays at `first`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub first: usize,
    pub second: usize,
    pub distance: f64,
}

/// Greedy mean-linkage agglomeration down to `target` clusters. At each step
/// the globally nearest pair is merged; ties go to the lexicographically
/// smallest `(first, second)`.
pub fn hac_cluster(samples: &RfSampleSet, target: usize) -> Result<ClusterPartition> {
    Ok(hac_cluster_traced(&samples.pairwise, target)?.0)
}

/// [`hac_cluster`] over an explicit distance table, also returning the merges.
pub fn hac_cluster_traced(
    pairwise: &DMatrix<f64>,
    target: usize,
) -> Result<(ClusterPartition, Vec<MergeStep>)> {
    let n = pairwise.nrows();
    if pairwise.ncols() != n {
        return Err(Error::InvalidInput("distance table must be square".into()));
    }
    if target == 0 || target > n {
        return Err(Error::InvalidInput(format!(
            "cannot form {target} clusters from {n} samples"
        )));
    }
    let mut partition = ClusterPartition::singletons(n);
    let mut merges = Vec::with_capacity(n - target);
    while partition.len() > target {
        let mut best: Option<MergeStep> = None;
        for c in 0..partition.len() {
            for d in c + 1..partition.len() {
                let distance = mean_linkage(partition.set(c), partition.set(d), pairwise);
                if best.is_none_or(|b| distance < b.distance) {
                    best = Some(MergeStep {
                        first: c,
                        second: d,
                        distance,
                    });
                }
            }
        }
        let step = best.expect("at least two clusters remain");
        partition.merge(step.first, step.second);
        merges.push(step);
    }
    Ok((partition, merges))
}

/// Constant-modulus RF column for a cluster: phases of the principal left
/// singular vector of the summed member components. The vector's global phase
/// is fixed so that it correlates real-positively with the sum of member RF
/// columns, which makes a singleton reproduce its own column.
pub fn design_rf_column(samples: &RfSampleSet, members: &[usize]) -> Result<CVector> {
    if members.is_empty() {
        return Err(Error::InvalidInput("empty cluster".into()));
    }
    let nt = samples.rf.nrows();
    let k = samples.bb.ncols();
    let mut sum = CMatrix::zeros(nt, k);
    let mut rf_sum = CVector::zeros(nt);
    for &m in members {
        sum += samples.rf.column(m) * samples.bb.row(m);
        rf_sum += samples.rf.column(m);
    }
    if sum.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::DegenerateCluster(members[0]));
    }
    let mut u = numerics::principal_left_vector(&sum)?;
    let align = u.dotc(&rf_sum);
    if align.norm() > 0.0 {
        u *= align / align.norm();
    }
    Ok(u.map(phase_only))
}

/// `F_BB = sqrt(gamma) F_RF^+ F_opt`, scaled so that `||F_RF F_BB||^2 = K`.
pub fn refine_baseband_ls(rf: &CMatrix, f_opt: &CMatrix) -> Result<CMatrix> {
    if rf.nrows() != f_opt.nrows() {
        return Err(Error::InvalidInput(format!(
            "F_RF has {} rows but F_opt has {}",
            rf.nrows(),
            f_opt.nrows()
        )));
    }
    let bb = numerics::pseudo_inverse(rf)? * f_opt;
    normalize_cascade(rf, bb)
}

/// Applies `method` to the effective channel `H_eq F_RF` and scales the
/// result so that `||F_RF F_BB||^2 = K`.
pub fn refine_baseband_effective(
    rf: &CMatrix,
    h_eq: &CMatrix,
    method: DigitalMethod,
    power: f64,
    noise: f64,
) -> Result<CMatrix> {
    if h_eq.ncols() != rf.nrows() {
        return Err(Error::InvalidInput(format!(
            "H_eq has {} columns but F_RF has {} rows",
            h_eq.ncols(),
            rf.nrows()
        )));
    }
    let h_bb = h_eq * rf;
    let bb = precoding_direction(&h_bb, method, power, noise)?;
    normalize_cascade(rf, bb)
}

fn normalize_cascade(rf: &CMatrix, mut bb: CMatrix) -> Result<CMatrix> {
    let k = bb.ncols();
    let energy = frobenius_sq(&(rf * &bb));
    if !(energy > 1e-300 && energy.is_finite()) {
        return Err(Error::DegeneratePrecoder);
    }
    bb *= C64::new((k as f64 / energy).sqrt(), 0.0);
    Ok(bb)
}

fn require_full_row_rank(a: &CMatrix, what: &str) -> Result<()> {
    let svd = numerics::svd(a)?;
    if svd.rank() < a.nrows() {
        return Err(Error::BoundUndefined(format!(
            "{what} has rank {} < {}",
            svd.rank(),
            a.nrows()
        )));
    }
    Ok(())
}

/// Sum rate reached by interference-free transmission through the
/// minimum-norm right inverse of `H_eq`:
/// `K log2(1 + P / (sigma^2 ||H_eq^+||^2))`.
pub fn ls_rate_bound(h_eq: &CMatrix, power: f64, noise: f64) -> Result<f64> {
    require_full_row_rank(h_eq, "H_eq")?;
    let k = h_eq.nrows() as f64;
    let norm = frobenius_sq(&numerics::pseudo_inverse(h_eq)?);
    Ok(k * (1.0 + power / (noise * norm)).log2())
}

/// Same bound for ZF on the effective channel `H_eq F_RF`:
/// `K log2(1 + P / (sigma^2 ||F_RF (H_eq F_RF)^+||^2))`.
pub fn zf_rate_bound(h_eq: &CMatrix, rf: &CMatrix, power: f64, noise: f64) -> Result<f64> {
    require_full_row_rank(h_eq, "H_eq")?;
    let h_bb = h_eq * rf;
    require_full_row_rank(&h_bb, "H_eq F_RF")?;
    let k = h_eq.nrows() as f64;
    let norm = frobenius_sq(&(rf * numerics::pseudo_inverse(&h_bb)?));
    Ok(k * (1.0 + power / (noise * norm)).log2())
}

/// Both rate bounds; each is reported independently since rank deficiency of
/// `H_eq F_RF` leaves the LS bound defined.
pub fn rate_upper_bounds(
    h_eq: &CMatrix,
    rf: &CMatrix,
    power: f64,
    noise: f64,
) -> (Result<f64>, Result<f64>) {
    (
        ls_rate_bound(h_eq, power, noise),
        zf_rate_bound(h_eq, rf, power, noise),
    )
}

/// Baseband refinement applied after the analog stage is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Refinement {
    /// Least-squares fit of the full-digital target.
    LeastSquares,
    /// Digital precoding on the effective channel `H_eq F_RF`.
    Effective(DigitalMethod),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FhpDesign {
    pub precoder: HybridPrecoder,
    /// Which decomposition components feed each RF chain.
    pub partition: ClusterPartition,
    pub merges: Vec<MergeStep>,
}

/// Decompose `F_opt` into `2K` constant-modulus chains, agglomerate them into
/// `n_rf` clusters, synthesize one RF column per cluster, then refine the
/// baseband.
///
/// With more than `2K` chains the exact decomposition already fits; the extra
/// chains repeat its columns cyclically so the precoder keeps the requested
/// width.
pub fn hac_fhp(
    f_opt: &CMatrix,
    n_rf: usize,
    refinement: Refinement,
    ctx: &LinkContext<'_>,
) -> Result<FhpDesign> {
    let k = f_opt.ncols();
    if n_rf < k {
        return Err(Error::InvalidInput(format!(
            "{n_rf} RF chains cannot carry {k} streams"
        )));
    }
    let samples = RfSampleSet::from_target(f_opt)?;
    let two_k = samples.len();
    let (mut rf, partition, merges) = if n_rf <= two_k {
        let (partition, merges) = hac_cluster_traced(&samples.pairwise, n_rf)?;
        let mut rf = CMatrix::zeros(f_opt.nrows(), n_rf);
        for (c, members) in partition.sets().iter().enumerate() {
            rf.set_column(c, &design_rf_column(&samples, members)?);
        }
        (rf, partition, merges)
    } else {
        let rf = CMatrix::from_fn(f_opt.nrows(), n_rf, |i, n| samples.rf[(i, n % two_k)]);
        (rf, ClusterPartition::singletons(two_k), Vec::new())
    };
    if let Some(bits) = ctx.rf_phase_bits {
        rf = quantize_analog(&rf, bits)?;
    }
    let bb = match refinement {
        Refinement::LeastSquares => refine_baseband_ls(&rf, f_opt)?,
        Refinement::Effective(method) => {
            refine_baseband_effective(&rf, ctx.h_eq, method, ctx.power, ctx.noise)?
        }
    };
    Ok(FhpDesign {
        precoder: HybridPrecoder {
            rf,
            bb,
            structure: Structure::Full,
        },
        partition,
        merges,
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

    fn table(entries: &[((usize, usize), f64)], n: usize) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(n, n);
        for &((a, b), d) in entries {
            t[(a, b)] = d;
            t[(b, a)] = d;
        }
        t
    }

    #[test]
    fn identical_columns_have_distance_one_over_length() {
        let col = CVector::from_fn(5, |i, _| C64::from_polar(1.0, i as f64));
        let rf = CMatrix::from_columns(&[col.clone(), col]);
        assert!((sample_distance(&rf, 0, 1).unwrap() - 0.2).abs() < 1e-15);
        assert!(sample_distance(&rf, 1, 1).is_err());
    }

    #[test]
    fn orthogonal_columns_are_infinitely_far() {
        let rf = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
            ],
        );
        assert_eq!(sample_distance(&rf, 0, 1).unwrap(), f64::INFINITY);
    }

    #[test]
    fn two_element_distance() {
        // <[1,1], [1,-j]> = 1 - j
        let rf = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, -1.0),
            ],
        );
        let d = sample_distance(&rf, 0, 1).unwrap();
        assert!((d - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d, sample_distance(&rf, 1, 0).unwrap());
    }

    #[test]
    fn mean_linkage_distance() {
        let t = table(&[((0, 2), 2.0), ((1, 2), 4.0), ((0, 1), 1.0)], 3);
        let p = ClusterPartition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        assert_eq!(cluster_distance(&p, 0, 1, &t).unwrap(), 3.0);
        assert_eq!(cluster_distance(&p, 1, 0, &t).unwrap(), 3.0);
        let s = ClusterPartition::singletons(3);
        assert_eq!(cluster_distance(&s, 0, 2, &t).unwrap(), 2.0);
        assert!(cluster_distance(&s, 1, 1, &t).is_err());
        let with_inf = table(&[((0, 2), f64::INFINITY), ((1, 2), 4.0)], 3);
        assert_eq!(
            cluster_distance(&p, 0, 1, &with_inf).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn three_sample_trace() {
        let t = table(&[((0, 1), 0.1), ((0, 2), 0.2), ((1, 2), 0.3)], 3);
        let (p, merges) = hac_cluster_traced(&t, 2).unwrap();
        assert_eq!(p.sets(), &[vec![0, 1], vec![2]]);
        assert_eq!(merges.len(), 1);
        assert_eq!((merges[0].first, merges[0].second), (0, 1));
    }

    #[test]
    fn clustering_extremes() {
        let t = table(
            &[((0, 1), 0.5), ((0, 2), 0.7), ((1, 2), 0.9), ((2, 3), 0.1)],
            4,
        );
        let (p, merges) = hac_cluster_traced(&t, 4).unwrap();
        assert_eq!(p, ClusterPartition::singletons(4));
        assert!(merges.is_empty());
        let (p, _) = hac_cluster_traced(&t, 1).unwrap();
        assert_eq!(p.sets(), &[vec![0, 1, 2, 3]]);
        assert!(hac_cluster_traced(&t, 0).is_err());
        assert!(hac_cluster_traced(&t, 5).is_err());
    }

    #[test]
    fn ties_and_infinities_follow_lexicographic_order() {
        let t = table(
            &[
                ((0, 1), 1.0),
                ((2, 3), 1.0),
                ((0, 2), 5.0),
                ((0, 3), 5.0),
                ((1, 2), 5.0),
                ((1, 3), 5.0),
            ],
            4,
        );
        let (_, merges) = hac_cluster_traced(&t, 3).unwrap();
        assert_eq!((merges[0].first, merges[0].second), (0, 1));

        let all_inf = DMatrix::from_element(3, 3, f64::INFINITY);
        let (p, merges) = hac_cluster_traced(&all_inf, 2).unwrap();
        assert_eq!(p.sets(), &[vec![0, 1], vec![2]]);
        assert_eq!(merges[0].distance, f64::INFINITY);
    }

    #[test]
    fn singleton_cluster_reproduces_its_column() {
        let samples = RfSampleSet::from_target(&random(8, 3, 1)).unwrap();
        for m in 0..samples.len() {
            let col = design_rf_column(&samples, &[m]).unwrap();
            assert!((col - samples.rf.column(m)).norm() < 1e-10);
        }
    }

    #[test]
    fn two_member_column_follows_principal_vector() {
        let samples = RfSampleSet::from_target(&random(8, 3, 2)).unwrap();
        let col = design_rf_column(&samples, &[0, 3]).unwrap();
        assert!(col.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));

        // independent oracle: dominant eigenvector of S S^H via power iteration
        let s = samples.rf.column(0) * samples.bb.row(0) + samples.rf.column(3) * samples.bb.row(3);
        let gram = &s * s.adjoint();
        let mut v = CVector::from_element(8, C64::new(1.0, 0.0));
        for _ in 0..5000 {
            v = &gram * &v;
            v /= C64::new(v.norm(), 0.0);
        }
        // compare phases up to one global rotation
        let rot = phase_only(col.dotc(&v));
        for i in 0..8 {
            let diff = phase(col[i] * rot * v[i].conj());
            assert!(diff.abs() < 1e-8, "entry {i}: {diff}");
        }
    }

    #[test]
    fn ls_refinement_with_exact_decomposition() {
        let h = random(4, 16, 3);
        let f_opt = full_digital_precoder(&h, DigitalMethod::Zf, 1.0, 1.0).unwrap();
        let (rf, _) = optimal_hybrid_decomposition(&f_opt).unwrap();
        let bb = refine_baseband_ls(&rf, &f_opt).unwrap();
        assert!((&rf * &bb - &f_opt).norm() < 1e-9);
        // unscaled LS solution already had the target power
        let raw = numerics::pseudo_inverse(&rf).unwrap() * &f_opt;
        assert!((raw - &bb).norm() < 1e-9);
    }

    #[test]
    fn ls_refinement_is_least_squares() {
        let rf = CMatrix::from_fn(10, 4, |i, j| {
            C64::from_polar(1.0, (i * j) as f64 * 0.7 + 0.3 * i as f64)
        });
        let f_opt = random(10, 3, 4);
        let raw = numerics::pseudo_inverse(&rf).unwrap() * &f_opt;
        let base = (&f_opt - &rf * &raw).norm();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let delta = CMatrix::from_fn(4, 3, |_, _| complex_gaussian(&mut rng) * 1e-3);
            assert!((&f_opt - &rf * (&raw + delta)).norm() >= base - 1e-12);
        }
        let bb = refine_baseband_ls(&rf, &f_opt).unwrap();
        assert!((frobenius_sq(&(&rf * bb)) - 3.0).abs() < 1e-10);
        assert!(matches!(
            refine_baseband_ls(&rf, &CMatrix::zeros(10, 3)),
            Err(Error::DegeneratePrecoder)
        ));
    }

    #[test]
    fn effective_zf_refinement_diagonalizes() {
        let h = random(4, 16, 5);
        let rf = CMatrix::from_fn(16, 6, |i, j| {
            C64::from_polar(1.0, (i * (j + 1)) as f64 * 0.41)
        });
        let bb = refine_baseband_effective(&rf, &h, DigitalMethod::Zf, 1.0, 0.1).unwrap();
        assert!((frobenius_sq(&(&rf * &bb)) - 4.0).abs() < 1e-8);
        let g = &h * &rf * &bb;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(g[(i, j)].norm() < 1e-8);
                }
            }
        }
        let oracle = numerics::pseudo_inverse(&(&h * &rf)).unwrap();
        let ratio = bb[(0, 0)] / oracle[(0, 0)];
        assert!((bb - oracle * ratio).norm() < 1e-9);
    }

    #[test]
    fn bounds_for_identity_channel() {
        let h = CMatrix::identity(3, 3);
        let snr = 4.0;
        let ls = ls_rate_bound(&h, snr, 1.0).unwrap();
        assert!((ls - 3.0 * (1.0 + snr / 3.0f64).log2()).abs() < 1e-12);
        let h2 = &h * C64::new(2.0, 0.0);
        assert!(ls_rate_bound(&h2, snr, 1.0).unwrap() > ls);
    }

    #[test]
    fn bounds_report_rank_deficiency() {
        let h = random(3, 8, 6);
        let rf = CMatrix::from_fn(8, 2, |i, j| C64::from_polar(1.0, (i + j) as f64));
        let (ls, zf) = rate_upper_bounds(&h, &rf, 1.0, 1.0);
        assert!(ls.is_ok());
        assert!(matches!(zf, Err(Error::BoundUndefined(_))));
        let mut flat = random(3, 8, 7);
        let row = flat.row(0).clone_owned();
        flat.set_row(2, &row);
        assert!(matches!(
            ls_rate_bound(&flat, 1.0, 1.0),
            Err(Error::BoundUndefined(_))
        ));
    }

    #[test]
    fn fhp_respects_constraints_for_every_width() {
        let h = random(3, 16, 8);
        let f_opt = full_digital_precoder(&h, DigitalMethod::Zf, 1.0, 0.5).unwrap();
        let ctx = LinkContext::new(&h, 1.0, 0.5);
        for n_rf in 3..=9 {
            for refinement in [
                Refinement::LeastSquares,
                Refinement::Effective(DigitalMethod::Zf),
            ] {
                let design = hac_fhp(&f_opt, n_rf, refinement, &ctx).unwrap();
                assert_eq!(design.precoder.rf.shape(), (16, n_rf));
                design.precoder.check(1e-8).unwrap();
                design.partition.validate().unwrap();
            }
        }
        assert!(hac_fhp(&f_opt, 2, Refinement::LeastSquares, &ctx).is_err());
        let quantized = hac_fhp(
            &f_opt,
            4,
            Refinement::LeastSquares,
            &ctx.with_rf_phase_bits(Some(2)),
        )
        .unwrap();
        quantized.precoder.check(1e-8).unwrap();
    }

    #[test]
    fn fhp_with_all_chains_is_exact() {
        let h = random(3, 16, 10);
        let f_opt = full_digital_precoder(&h, DigitalMethod::Zf, 1.0, 0.5).unwrap();
        let ctx = LinkContext::new(&h, 1.0, 0.5);
        let design = hac_fhp(&f_opt, 6, Refinement::LeastSquares, &ctx).unwrap();
        assert!(design.merges.is_empty());
        assert!((design.precoder.cascade() - &f_opt).norm() < 1e-9);
    }
}
