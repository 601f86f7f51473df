//! Monte-Carlo simulator of the physical link, used as an independent
//! check on every closed form.
//!
//! Sample `i` of a run draws from its own ChaCha8 stream (`seed`, stream
//! `i`), so estimates do not depend on how the work is batched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::channels::{derive_fso, FsoHop, RfHop};
use crate::error::{invalid, Result};
use crate::relay::{BinaryModulation, RelayConfig};
use crate::sum::CompensatedSum;

/// Smallest sample count accepted by [`SimPlan`].
pub const MIN_SAMPLES: u64 = 1_000;

/// A Monte-Carlo run: link, sample budget, master seed and accumulation
/// block size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimPlan {
    pub cfg: RelayConfig,
    n_samples: u64,
    seed: u64,
    batch: u64,
}

impl SimPlan {
    pub fn new(cfg: RelayConfig, n_samples: u64, seed: u64) -> Result<Self> {
        Self::with_batch(cfg, n_samples, seed, 65_536)
    }

    pub fn with_batch(cfg: RelayConfig, n_samples: u64, seed: u64, batch: u64) -> Result<Self> {
        if n_samples < MIN_SAMPLES {
            return invalid(format!(
                "at least {MIN_SAMPLES} Monte-Carlo samples are required, got {n_samples}"
            ));
        }
        if batch == 0 {
            return invalid("batch size must be positive");
        }
        Ok(Self {
            cfg,
            n_samples,
            seed,
            batch,
        })
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn batch(&self) -> u64 {
        self.batch
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

impl Estimate {
    /// `(value - mean) / std_error`; infinite when the estimate has zero
    /// spread but differs from `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = value - self.mean;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Per-sample statistics whose means estimate the link metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    /// `1{γ < γ_th}`.
    Outage(f64),
    /// `Γ(p, qγ) / (2Γ(p))`.
    Ber(BinaryModulation),
    /// `log2(1 + γ)`.
    Capacity,
    /// `γ^n`.
    Moment(u32),
    /// `e^{-sγ}`.
    Mgf(f64),
    /// `1{lo < γ <= hi}`.
    Interval(f64, f64),
    /// `E[γ^n]/E[γ]^n - 1`; not a plain mean, estimated by the delta
    /// method from the sample moments.
    AmountOfFading(u32),
}

impl Metric {
    fn statistic(&self, g: f64) -> f64 {
        match *self {
            Metric::Outage(th) => f64::from(u8::from(g < th)),
            Metric::Ber(m) => {
                if m.p() == 1.0 {
                    0.5 * (-m.q() * g).exp()
                } else {
                    0.5 * statrs::function::gamma::gamma_ur(m.p(), m.q() * g)
                }
            }
            Metric::Capacity => g.ln_1p() / std::f64::consts::LN_2,
            Metric::Moment(n) => g.powi(n as i32),
            Metric::Mgf(s) => (-s * g).exp(),
            Metric::Interval(lo, hi) => f64::from(u8::from(g > lo && g <= hi)),
            Metric::AmountOfFading(n) => g.powi(n as i32),
        }
    }
}

/// Random number generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Pre-built distributions for repeated end-to-end draws.
#[derive(Debug, Clone)]
pub struct LinkSampler {
    g1: Gamma<f64>,
    x: Gamma<f64>,
    y: Gamma<f64>,
    inv_xi2: f64,
    // μ_r / h^r.
    scale: f64,
    imdd: bool,
    c: f64,
}

impl LinkSampler {
    pub fn new(cfg: &RelayConfig) -> Self {
        let fso = &cfg.fso;
        let d = derive_fso(fso);
        let m = cfg.rf.m() as f64;
        // Shapes and scales are validated positive by the hop constructors.
        let gamma =
            |shape: f64, scale: f64| Gamma::new(shape, scale).expect("valid gamma parameters");
        let imdd = fso.r() == 2;
        Self {
            g1: gamma(m, cfg.rf.omega() / m),
            x: gamma(fso.alpha(), 1.0 / fso.alpha()),
            y: gamma(fso.beta(), 1.0 / fso.beta()),
            inv_xi2: 1.0 / (fso.xi() * fso.xi()),
            scale: if imdd {
                d.mu_r / (d.h * d.h)
            } else {
                d.mu_r / d.h
            },
            imdd,
            c: cfg.c_gain(),
        }
    }

    pub fn gamma1<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.g1.sample(rng)
    }

    pub fn gamma2<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = self.x.sample(rng);
        let y = self.y.sample(rng);
        // 1 - U lies in (0, 1], keeping the pointing factor positive.
        let u = 1.0 - rng.random::<f64>();
        let w = x * y * u.powf(self.inv_xi2);
        if self.imdd {
            self.scale * w * w
        } else {
            self.scale * w
        }
    }

    /// `(γ1, γ2, γ)` with `γ = γ1 γ2 / (γ2 + C)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64, f64) {
        let g1 = self.gamma1(rng);
        let g2 = self.gamma2(rng);
        (g1, g2, g1 * g2 / (g2 + self.c))
    }
}

/// One draw of the RF-hop SNR: Gamma with shape m and scale Ω/m.
pub fn sample_gamma1<R: Rng + ?Sized>(rf: &RfHop, rng: &mut R) -> f64 {
    let m = rf.m() as f64;
    Gamma::new(m, rf.omega() / m)
        .expect("valid gamma parameters")
        .sample(rng)
}

/// One draw of the FSO-hop SNR `μ_r (X Y I_p / h)^r` with
/// `X ~ Gamma(α, 1/α)`, `Y ~ Gamma(β, 1/β)` and pointing loss
/// `I_p = U^{1/ξ²}`.
pub fn sample_gamma2<R: Rng + ?Sized>(fso: &FsoHop, rng: &mut R) -> f64 {
    let cfg =
        RelayConfig::new(RfHop::new(1, 1.0).expect("unit RF hop"), *fso, 1.0).expect("unit gain");
    LinkSampler::new(&cfg).gamma2(rng)
}

/// One draw of the end-to-end SNR.
pub fn sample_e2e<R: Rng + ?Sized>(plan: &SimPlan, rng: &mut R) -> f64 {
    LinkSampler::new(&plan.cfg).sample(rng).2
}

/// Streaming mean/variance about a fixed pivot with compensated sums.
#[derive(Debug, Clone, Default)]
struct MomentAcc {
    n: u64,
    s1: CompensatedSum,
    s2: CompensatedSum,
}

impl MomentAcc {
    fn add(&mut self, d: f64) {
        self.n += 1;
        self.s1.add(d);
        self.s2.add(d * d);
    }

    fn merge(&mut self, other: &MomentAcc) {
        self.n += other.n;
        self.s1.merge(&other.s1);
        self.s2.merge(&other.s2);
    }

    fn estimate(&self, pivot: f64) -> Estimate {
        let n = self.n as f64;
        let s1 = self.s1.value();
        let mean_d = s1 / n;
        let var = ((self.s2.value() - s1 * mean_d) / (n - 1.0)).max(0.0);
        Estimate {
            mean: pivot + mean_d,
            std_error: (var / n).sqrt(),
            n: self.n,
        }
    }
}

/// Runs `visit` over every end-to-end sample of the plan, batch by batch.
fn for_each_batch<F>(plan: &SimPlan, mut visit: F)
where
    F: FnMut(&mut dyn Iterator<Item = (f64, f64, f64)>),
{
    let sampler = LinkSampler::new(&plan.cfg);
    let mut start = 0;
    while start < plan.n_samples {
        let end = (start + plan.batch).min(plan.n_samples);
        let mut it = (start..end).map(|i| sampler.sample(&mut sample_rng(plan.seed, i)));
        visit(&mut it);
        start = end;
    }
}

/// Accumulator for one requested metric.
#[derive(Debug, Clone)]
enum MetricAcc {
    Mean {
        pivot: f64,
        acc: MomentAcc,
    },
    /// Moments of `γ` and `γ^n` about pivots, plus their cross product.
    Fading {
        n: u32,
        pivots: (f64, f64),
        a: MomentAcc,
        b: MomentAcc,
        ab: CompensatedSum,
    },
}

impl MetricAcc {
    fn new(metric: &Metric, first: f64) -> Self {
        match *metric {
            Metric::AmountOfFading(n) => MetricAcc::Fading {
                n,
                pivots: (first, first.powi(n as i32)),
                a: MomentAcc::default(),
                b: MomentAcc::default(),
                ab: CompensatedSum::new(),
            },
            _ => MetricAcc::Mean {
                pivot: metric.statistic(first),
                acc: MomentAcc::default(),
            },
        }
    }

    fn empty_like(&self) -> Self {
        match self {
            MetricAcc::Mean { pivot, .. } => MetricAcc::Mean {
                pivot: *pivot,
                acc: MomentAcc::default(),
            },
            MetricAcc::Fading { n, pivots, .. } => MetricAcc::Fading {
                n: *n,
                pivots: *pivots,
                a: MomentAcc::default(),
                b: MomentAcc::default(),
                ab: CompensatedSum::new(),
            },
        }
    }

    fn add(&mut self, metric: &Metric, g: f64) {
        match self {
            MetricAcc::Mean { pivot, acc } => acc.add(metric.statistic(g) - *pivot),
            MetricAcc::Fading {
                n,
                pivots,
                a,
                b,
                ab,
            } => {
                let da = g - pivots.0;
                let db = g.powi(*n as i32) - pivots.1;
                a.add(da);
                b.add(db);
                ab.add(da * db);
            }
        }
    }

    fn merge(&mut self, other: &MetricAcc) {
        match (self, other) {
            (MetricAcc::Mean { acc, .. }, MetricAcc::Mean { acc: o, .. }) => acc.merge(o),
            (
                MetricAcc::Fading { a, b, ab, .. },
                MetricAcc::Fading {
                    a: oa,
                    b: ob,
                    ab: oab,
                    ..
                },
            ) => {
                a.merge(oa);
                b.merge(ob);
                ab.merge(oab);
            }
            _ => unreachable!("accumulators are merged in matching order"),
        }
    }

    fn estimate(&self) -> Estimate {
        match self {
            MetricAcc::Mean { pivot, acc } => acc.estimate(*pivot),
            MetricAcc::Fading {
                n,
                pivots,
                a,
                b,
                ab,
            } => {
                let nf = a.n as f64;
                let (sa, sb) = (a.s1.value(), b.s1.value());
                let (ma, mb) = (sa / nf, sb / nf);
                let var_a = (a.s2.value() - sa * ma) / (nf - 1.0);
                let var_b = (b.s2.value() - sb * mb) / (nf - 1.0);
                let cov = (ab.value() - sa * mb) / (nf - 1.0);
                let (m1, mn) = (pivots.0 + ma, pivots.1 + mb);
                let ratio = mn / m1.powi(*n as i32);
                // Gradient of M_n / M_1^n with respect to (M_1, M_n).
                let d1 = -(*n as f64) * ratio / m1;
                let dn = ratio / mn;
                let var = (d1 * d1 * var_a + dn * dn * var_b + 2.0 * d1 * dn * cov).max(0.0);
                Estimate {
                    mean: ratio - 1.0,
                    std_error: (var / nf).sqrt(),
                    n: a.n,
                }
            }
        }
    }
}

/// Estimates several metrics from one pass over the samples.
pub fn estimate_metrics(plan: &SimPlan, metrics: &[Metric]) -> Vec<Estimate> {
    let sampler = LinkSampler::new(&plan.cfg);
    let first = sampler.sample(&mut sample_rng(plan.seed, 0)).2;
    let mut total: Vec<MetricAcc> = metrics.iter().map(|m| MetricAcc::new(m, first)).collect();
    for_each_batch(plan, |batch| {
        let mut accs: Vec<MetricAcc> = total.iter().map(MetricAcc::empty_like).collect();
        for (_, _, g) in batch {
            for (acc, m) in accs.iter_mut().zip(metrics) {
                acc.add(m, g);
            }
        }
        for (t, a) in total.iter_mut().zip(&accs) {
            t.merge(a);
        }
    });
    total.iter().map(MetricAcc::estimate).collect()
}

pub fn estimate_metric(plan: &SimPlan, metric: Metric) -> Estimate {
    estimate_metrics(plan, &[metric])[0]
}

/// Draws `n` FSO-hop SNR samples with streams `0..n` of `seed`.
pub fn draw_gamma2(fso: &FsoHop, n: u64, seed: u64) -> Vec<f64> {
    let cfg =
        RelayConfig::new(RfHop::new(1, 1.0).expect("unit RF hop"), *fso, 1.0).expect("unit gain");
    let sampler = LinkSampler::new(&cfg);
    (0..n)
        .map(|i| sampler.gamma2(&mut sample_rng(seed, i)))
        .collect()
}

/// Draws `n` RF-hop SNR samples with streams `0..n` of `seed`.
pub fn draw_gamma1(rf: &RfHop, n: u64, seed: u64) -> Vec<f64> {
    let m = rf.m() as f64;
    let dist = Gamma::new(m, rf.omega() / m).expect("valid gamma parameters");
    (0..n)
        .map(|i| dist.sample(&mut sample_rng(seed, i)))
        .collect()
}

/// Outcome of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// Upper bound on the KS distance (interpolation error included).
    pub statistic: f64,
    /// Critical value at the requested level (asymptotic formula).
    pub critical: f64,
    /// Asymptotic Kolmogorov p-value of `statistic`.
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    pub fn rejected(&self) -> bool {
        self.statistic > self.critical
    }
}

/// Kolmogorov survival function `P[K > λ]`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.3 {
        // Series converges slowly here; the value is 1 to double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of `samples` against `cdf` at significance `level`.
///
/// The reference CDF is evaluated exactly on a log-spaced grid of
/// `grid` points spanning the samples and interpolated linearly in
/// `ln x` in between. The interpolation error, measured at the cell
/// midpoints, is added to the statistic so the reported distance is an
/// upper bound.
pub fn ks_test<F>(samples: &mut [f64], mut cdf: F, level: f64, grid: usize) -> Result<KsResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = samples.len();
    if n == 0 {
        return invalid("KS test needs at least one sample");
    }
    if samples.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return invalid("KS test expects positive finite samples");
    }
    if grid < 2 {
        return invalid("KS interpolation grid needs at least two points");
    }
    samples.sort_by(f64::total_cmp);
    let lo = samples[0].ln();
    let hi = samples[n - 1].ln();
    let width = (hi - lo).max(1e-12);
    let step = width / (grid - 1) as f64;
    let nodes: Vec<f64> = (0..grid).map(|i| lo + step * i as f64).collect();
    let values = nodes
        .iter()
        .map(|&t| cdf(t.exp()))
        .collect::<Result<Vec<f64>>>()?;
    let mut interp_err: f64 = 0.0;
    for i in 0..grid - 1 {
        let mid = 0.5 * (nodes[i] + nodes[i + 1]);
        let exact = cdf(mid.exp())?;
        interp_err = interp_err.max((exact - 0.5 * (values[i] + values[i + 1])).abs());
    }
    let mut d: f64 = 0.0;
    let nf = n as f64;
    for (i, &x) in samples.iter().enumerate() {
        let t = ((x.ln() - lo) / step).clamp(0.0, (grid - 1) as f64);
        let cell = (t.floor() as usize).min(grid - 2);
        let frac = t - cell as f64;
        let f = values[cell] + frac * (values[cell + 1] - values[cell]);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let statistic = d + interp_err;
    Ok(KsResult {
        statistic,
        critical: (-0.5 * (level / 2.0).ln()).sqrt() / nf.sqrt(),
        p_value: kolmogorov_sf(nf.sqrt() * statistic),
        n,
    })
}
