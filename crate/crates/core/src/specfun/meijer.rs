//! Meijer G-function for real parameters and positive real argument.
//!
//! With the convention
//!
//! ```text
//! G^{m,n}_{p,q}(z | a; b) = 1/(2πi) ∫ Φ(s) z^{-s} ds,
//! Φ(s) = Π_{j<m} Γ(b_j + s) Π_{j<n} Γ(1 - a_j - s)
//!        / (Π_{j>=m} Γ(1 - b_j - s) Π_{j>=n} Γ(a_j + s)),
//! ```
//!
//! the primary evaluation path sums the residues at the left poles
//! `s = -b_h - k`. Integer-spaced bottom parameters (coalescing poles) are
//! handled by a symmetric parameter perturbation. A vertical-line
//! quadrature of the integral is used when the series would lose too much
//! precision to cancellation, and for `p == q` near `|z| = 1`.

use num_complex::Complex64;

use super::gamma::{ln_gamma_complex, ln_gamma_signed};
use crate::error::{invalid, Error, Result};
use crate::sum::CompensatedSum;

/// Integer-difference tolerance used to declare two poles coincident.
pub const POLE_TOL: f64 = 1e-9;
/// Fractional gap below which the perturbation scheme is applied.
pub const NEAR_POLE_TOL: f64 = 1e-4;
/// Base perturbation applied to coalescing bottom parameters.
pub const PERTURBATION: f64 = 1e-6;
/// Hard cap on the number of residues summed per pole family.
pub const MAX_TERMS: usize = 10_000;

const SERIES_REL_TOL: f64 = 1e-15;
const SERIES_SMALL_RUN: usize = 3;
// Series results with a larger estimated relative error are re-evaluated
// on the contour when one exists.
const SERIES_ACCEPT_REL_ERR: f64 = 1e-11;
const EPS: f64 = f64::EPSILON;

/// Order indices and parameter lists of one G-function instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MeijerGSpec {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[inline]
fn near_integer(x: f64, tol: f64) -> bool {
    (x - x.round()).abs() < tol
}

/// Pole of Γ up to the coincidence tolerance.
#[inline]
fn near_pole(x: f64) -> bool {
    x < 0.5 && near_integer(x, POLE_TOL)
}

#[inline]
fn same_param(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-13 * x.abs().max(y.abs()).max(1.0)
}

impl MeijerGSpec {
    /// Builds `G^{m,n}_{p,q}` with `p = a.len()`, `q = b.len()`.
    ///
    /// Rejects out-of-range indices, non-finite parameters, and parameter
    /// sets where some `a_i - b_j` (`i < n`, `j < m`) is a positive integer.
    pub fn new(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if m > b.len() || n > a.len() {
            return invalid(format!(
                "order indices (m={m}, n={n}) exceed parameter counts (q={}, p={})",
                b.len(),
                a.len()
            ));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return invalid("Meijer-G parameters must be finite");
        }
        for ai in &a[..n] {
            for bj in &b[..m] {
                let d = ai - bj;
                if d > 0.5 && near_integer(d, POLE_TOL) {
                    return invalid(format!(
                        "a = {ai} and b = {bj} differ by a positive integer; G is undefined"
                    ));
                }
            }
        }
        Ok(Self { m, n, a, b })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.a.len()
    }
    pub fn q(&self) -> usize {
        self.b.len()
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Removes gamma pairs that cancel in the integrand: an `a_i` with
    /// `i >= n` equal to some `b_j` with `j < m`, and an `a_i` with `i < n`
    /// equal to some `b_j` with `j >= m`.
    pub fn cancelled(&self) -> MeijerGSpec {
        let (mut a_num, mut a_den) = (self.a[..self.n].to_vec(), self.a[self.n..].to_vec());
        let (mut b_num, mut b_den) = (self.b[..self.m].to_vec(), self.b[self.m..].to_vec());
        let mut i = 0;
        while i < a_den.len() {
            if let Some(j) = b_num.iter().position(|&bj| same_param(bj, a_den[i])) {
                b_num.remove(j);
                a_den.remove(i);
            } else {
                i += 1;
            }
        }
        let mut i = 0;
        while i < a_num.len() {
            if let Some(j) = b_den.iter().position(|&bj| same_param(bj, a_num[i])) {
                b_den.remove(j);
                a_num.remove(i);
            } else {
                i += 1;
            }
        }
        let (m, n) = (b_num.len(), a_num.len());
        a_num.extend(a_den);
        b_num.extend(b_den);
        MeijerGSpec {
            m,
            n,
            a: a_num,
            b: b_num,
        }
    }

    /// Parameters of the same function viewed at `1/z`:
    /// `G^{m,n}_{p,q}(z | a; b) = G^{n,m}_{q,p}(1/z | 1-b; 1-a)`.
    pub fn reflected(&self) -> MeijerGSpec {
        MeijerGSpec {
            m: self.n,
            n: self.m,
            a: self.b.iter().map(|x| 1.0 - x).collect(),
            b: self.a.iter().map(|x| 1.0 - x).collect(),
        }
    }
}

/// Clusters of the left-pole parameters `b_1..b_m` whose pairwise
/// differences are integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoleStructure {
    groups: Vec<Vec<usize>>,
}

impl PoleStructure {
    /// Index groups into `b`, each sorted, ordered by first index.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn has_coincidences(&self) -> bool {
        self.groups.iter().any(|g| g.len() > 1)
    }
}

/// Integer-difference clusters of `b_1..b_m` at [`POLE_TOL`].
pub fn pole_structure(spec: &MeijerGSpec) -> PoleStructure {
    pole_structure_with_tol(spec, POLE_TOL)
}

pub fn pole_structure_with_tol(spec: &MeijerGSpec, tol: f64) -> PoleStructure {
    let m = spec.m;
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if near_integer(spec.b[i] - spec.b[j], tol) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    PoleStructure { groups }
}

/// Evaluation route that produced a [`GValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GMethod {
    ResidueSeries,
    PerturbedSeries,
    ContourIntegral,
}

/// A G-function value with its magnitude also kept in log form, so results
/// below the f64 range (e.g. `G^{1,0}_{0,1}(1000) = e^{-1000}`) stay usable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValue {
    pub value: f64,
    pub ln_abs: f64,
    pub sign: f64,
    /// Estimated relative error of `value`.
    pub rel_error: f64,
    pub terms: usize,
    pub method: GMethod,
}

impl GValue {
    /// Estimated absolute error of `value`.
    pub fn abs_error(&self) -> f64 {
        self.rel_error * self.value.abs()
    }

    fn zero(method: GMethod) -> Self {
        GValue {
            value: 0.0,
            ln_abs: f64::NEG_INFINITY,
            sign: 0.0,
            rel_error: 0.0,
            terms: 0,
            method,
        }
    }
}

/// Sum represented as `sum * exp(ln_scale)` with an absolute error on the
/// same scale.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    ln_scale: f64,
    sum: f64,
    abs_err: f64,
    terms: usize,
}

impl Scaled {
    fn rel_err(&self) -> f64 {
        if self.sum == 0.0 {
            if self.abs_err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs_err / self.sum.abs()
        }
    }

    fn into_gvalue(self, method: GMethod) -> GValue {
        if self.sum == 0.0 {
            let mut g = GValue::zero(method);
            g.terms = self.terms;
            return g;
        }
        let ln_abs = self.ln_scale + self.sum.abs().ln();
        let sign = self.sum.signum();
        GValue {
            value: sign * ln_abs.exp(),
            ln_abs,
            sign,
            rel_error: self.rel_err(),
            terms: self.terms,
            method,
        }
    }
}

/// Evaluates `G^{m,n}_{p,q}(z)` for `z > 0`.
pub fn meijer_g(spec: &MeijerGSpec, z: f64) -> Result<GValue> {
    if !(z > 0.0 && z.is_finite()) {
        return invalid(format!(
            "Meijer-G argument must be positive and finite, got {z}"
        ));
    }
    let spec = spec.cancelled();
    let (p, q) = (spec.p(), spec.q());

    let series = if p > q {
        Some(series_route(&spec.reflected(), 1.0 / z))
    } else if p == q {
        if z < 0.5 {
            Some(series_route(&spec, z))
        } else if z > 2.0 {
            Some(series_route(&spec.reflected(), 1.0 / z))
        } else {
            None
        }
    } else {
        Some(series_route(&spec, z))
    };

    match series {
        Some(Ok((s, method))) if s.rel_err() <= SERIES_ACCEPT_REL_ERR => Ok(s.into_gvalue(method)),
        Some(series) => match (series, contour_integral(&spec, z, None)) {
            (Ok((s, method)), Ok(c)) => {
                if c.rel_err() < s.rel_err() {
                    Ok(c.into_gvalue(GMethod::ContourIntegral))
                } else {
                    Ok(s.into_gvalue(method))
                }
            }
            (Ok((s, method)), Err(_)) => Ok(s.into_gvalue(method)),
            (Err(_), Ok(c)) => Ok(c.into_gvalue(GMethod::ContourIntegral)),
            (Err(e), Err(_)) => Err(e),
        },
        None => match contour_integral(&spec, z, None) {
            Ok(c) => Ok(c.into_gvalue(GMethod::ContourIntegral)),
            Err(_) if z < 1.0 => series_route(&spec, z).map(|(s, m)| s.into_gvalue(m)),
            Err(_) => series_route(&spec.reflected(), 1.0 / z).map(|(s, m)| s.into_gvalue(m)),
        },
    }
}

/// Evaluates `G` by the vertical-line integral only, optionally on a
/// caller-chosen abscissa `Re s = c`. Used for cross-checks.
pub fn meijer_g_contour(spec: &MeijerGSpec, z: f64, abscissa: Option<f64>) -> Result<GValue> {
    if !(z > 0.0 && z.is_finite()) {
        return invalid(format!(
            "Meijer-G argument must be positive and finite, got {z}"
        ));
    }
    contour_integral(&spec.cancelled(), z, abscissa)
        .map(|s| s.into_gvalue(GMethod::ContourIntegral))
}

/// Evaluates `G` by the residue series only (with the perturbation scheme
/// when poles coalesce), never falling back to the contour integral.
pub fn meijer_g_series(spec: &MeijerGSpec, z: f64) -> Result<GValue> {
    if !(z > 0.0 && z.is_finite()) {
        return invalid(format!(
            "Meijer-G argument must be positive and finite, got {z}"
        ));
    }
    let spec = spec.cancelled();
    let (s, method) = if spec.p() > spec.q() || (spec.p() == spec.q() && z > 1.0) {
        series_route(&spec.reflected(), 1.0 / z)?
    } else {
        series_route(&spec, z)?
    };
    Ok(s.into_gvalue(method))
}

/// The `k = 0` residue of every left-pole family, i.e. the leading term of
/// the small-argument expansion `G(z) ~ Σ_h c_h z^{b_h}`.
///
/// No cancellation is applied; a family whose coefficient contains the
/// reciprocal of a gamma pole contributes exactly zero. Coalescing poles
/// (where the expansion picks up logarithms) are rejected.
pub fn leading_residues(spec: &MeijerGSpec, z: f64) -> Result<Vec<f64>> {
    if !(z > 0.0 && z.is_finite()) {
        return invalid(format!(
            "Meijer-G argument must be positive and finite, got {z}"
        ));
    }
    let lnz = z.ln();
    (0..spec.m)
        .map(|h| match ln_term(spec, h, 0, lnz)? {
            TermLog::Value { ln_abs, sign, .. } => Ok(sign * ln_abs.exp()),
            TermLog::ZeroTransient | TermLog::ZeroForever => Ok(0.0),
        })
        .collect()
}

fn series_route(spec: &MeijerGSpec, z: f64) -> Result<(Scaled, GMethod)> {
    let near = pole_structure_with_tol(spec, NEAR_POLE_TOL);
    if !near.has_coincidences() {
        return residue_series(spec, z).map(|s| (s, GMethod::ResidueSeries));
    }
    let (plus, minus, shift) = perturbed_pair(spec, &near);
    let sp = residue_series(&plus, z)?;
    let sm = residue_series(&minus, z)?;
    let ln_scale = sp.ln_scale.max(sm.ln_scale);
    let fp = (sp.ln_scale - ln_scale).exp();
    let fm = (sm.ln_scale - ln_scale).exp();
    let (vp, vm) = (sp.sum * fp, sm.sum * fm);
    let sum = 0.5 * (vp + vm);
    // The average is second order in the shift; |vp - vm| is first order.
    let abs_err = 0.5 * (sp.abs_err * fp + sm.abs_err * fm) + 0.5 * (vp - vm).abs() * shift;
    Ok((
        Scaled {
            ln_scale,
            sum,
            abs_err,
            terms: sp.terms + sm.terms,
        },
        GMethod::PerturbedSeries,
    ))
}

/// Shifts the members of every integer-spaced cluster apart by multiples of
/// a shift `d`, returning the `+d` and `-d` variants and `d`.
fn perturbed_pair(spec: &MeijerGSpec, clusters: &PoleStructure) -> (MeijerGSpec, MeijerGSpec, f64) {
    let mut plus = spec.clone();
    let mut minus = spec.clone();
    let mut max_shift: f64 = 0.0;
    for group in clusters.groups().iter().filter(|g| g.len() > 1) {
        let mut gap: f64 = 0.0;
        for (i, &gi) in group.iter().enumerate() {
            for &gj in &group[i + 1..] {
                let d = spec.b[gi] - spec.b[gj];
                gap = gap.max((d - d.round()).abs());
            }
        }
        // Offsets i*d keep every perturbed pair at least PERTURBATION apart.
        let d = PERTURBATION + gap;
        max_shift = max_shift.max(d * (group.len() - 1) as f64);
        for (i, &idx) in group.iter().enumerate() {
            plus.b[idx] += i as f64 * d;
            minus.b[idx] -= i as f64 * d;
        }
    }
    (plus, minus, max_shift)
}

enum TermLog {
    Value {
        ln_abs: f64,
        sign: f64,
        // Sum of |ln Γ| contributions, for the rounding estimate.
        magnitude: f64,
    },
    /// Zero because of a reciprocal-gamma pole that later terms leave.
    ZeroTransient,
    /// Zero for this and every later term of the family.
    ZeroForever,
}

/// Log of the `k`-th residue of family `h` (pole at `s = -b_h - k`).
fn ln_term(spec: &MeijerGSpec, h: usize, k: usize, lnz: f64) -> Result<TermLog> {
    let (m, n) = (spec.m, spec.n);
    let (a, b) = (&spec.a, &spec.b);
    let bh = b[h];
    let kf = k as f64;
    for aj in &a[n..] {
        let x = aj - bh - kf;
        if near_pole(x) {
            return Ok(TermLog::ZeroForever);
        }
    }
    for bj in &b[m..] {
        if near_pole(1.0 - bj + bh + kf) {
            return Ok(TermLog::ZeroTransient);
        }
    }
    let (lk, _) = ln_gamma_signed(kf + 1.0);
    let mut ln_abs = (bh + kf) * lnz - lk;
    let mut magnitude = ln_abs.abs();
    let mut sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    for (j, bj) in b[..m].iter().enumerate() {
        if j == h {
            continue;
        }
        let x = bj - bh - kf;
        if near_pole(x) {
            return invalid(
                "coalescing poles reached the residue series unperturbed (logarithmic case)",
            );
        }
        let (lg, s) = ln_gamma_signed(x);
        ln_abs += lg;
        magnitude += lg.abs();
        sign *= s;
    }
    for aj in &a[..n] {
        let (lg, s) = ln_gamma_signed(1.0 - aj + bh + kf);
        ln_abs += lg;
        magnitude += lg.abs();
        sign *= s;
    }
    for bj in &b[m..] {
        let (lg, s) = ln_gamma_signed(1.0 - bj + bh + kf);
        ln_abs -= lg;
        magnitude += lg.abs();
        sign *= s;
    }
    for aj in &a[n..] {
        let (lg, s) = ln_gamma_signed(aj - bh - kf);
        ln_abs -= lg;
        magnitude += lg.abs();
        sign *= s;
    }
    Ok(TermLog::Value {
        ln_abs,
        sign,
        magnitude,
    })
}

/// Ratio `T_{k+1} / T_k` of consecutive residues of family `h`, or `None`
/// when a divisor sits on a gamma pole and the next term must be
/// recomputed from scratch.
fn term_ratio(spec: &MeijerGSpec, h: usize, k: usize, z: f64) -> Option<f64> {
    let (m, n) = (spec.m, spec.n);
    let (a, b) = (&spec.a, &spec.b);
    let bh = b[h];
    let kf = k as f64;
    let mut num = -z / (kf + 1.0);
    let mut den = 1.0;
    for aj in &a[..n] {
        num *= 1.0 - aj + bh + kf;
    }
    for aj in &a[n..] {
        let f = aj - bh - kf - 1.0;
        num *= if near_integer(f, POLE_TOL) && f.round() == 0.0 {
            0.0
        } else {
            f
        };
    }
    for (j, bj) in b[..m].iter().enumerate() {
        if j != h {
            den *= bj - bh - kf - 1.0;
        }
    }
    for bj in &b[m..] {
        let f = 1.0 - bj + bh + kf;
        if near_integer(f, POLE_TOL) && f.round() == 0.0 {
            return None;
        }
        den *= f;
    }
    Some(num / den)
}

/// Slater residue sum over the left poles, assuming no coalescing poles.
fn residue_series(spec: &MeijerGSpec, z: f64) -> Result<Scaled> {
    let lnz = z.ln();
    let pq = (spec.p() + spec.q() + 2) as f64;

    // Locate the first non-zero residue of each family to fix a common scale.
    let mut starts = Vec::with_capacity(spec.m);
    for h in 0..spec.m {
        let mut k = 0;
        loop {
            match ln_term(spec, h, k, lnz)? {
                TermLog::Value {
                    ln_abs,
                    sign,
                    magnitude,
                } => {
                    starts.push(Some((k, ln_abs, sign, magnitude)));
                    break;
                }
                TermLog::ZeroForever => {
                    starts.push(None);
                    break;
                }
                TermLog::ZeroTransient => {
                    k += 1;
                    if k > MAX_TERMS {
                        starts.push(None);
                        break;
                    }
                }
            }
        }
    }
    let ln_scale = starts
        .iter()
        .flatten()
        .map(|s| s.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if ln_scale == f64::NEG_INFINITY {
        return Ok(Scaled {
            ln_scale: 0.0,
            sum: 0.0,
            abs_err: 0.0,
            terms: 0,
        });
    }

    let mut total = CompensatedSum::new();
    let mut abs_err = 0.0;
    let mut terms = 0;
    for (h, start) in starts.iter().enumerate() {
        let Some((k0, ln0, sign0, magnitude)) = *start else {
            continue;
        };
        let coef_rel_err = 2.0 * EPS * magnitude;
        let mut k = k0;
        let mut term = sign0 * (ln0 - ln_scale).exp();
        let mut fam = CompensatedSum::new();
        let mut fam_err = 0.0;
        let mut small_run = 0;
        loop {
            if !term.is_finite() {
                return Err(Error::Convergence {
                    what: "Meijer-G residue series (overflow)",
                    partial: fam.value(),
                    terms: k - k0,
                });
            }
            fam.add(term);
            fam_err +=
                term.abs() * (coef_rel_err + EPS * (4.0 + (((k - k0 + 1) as f64) * pq).sqrt()));
            terms += 1;

            let next = match (term != 0.0).then(|| term_ratio(spec, h, k, z)).flatten() {
                Some(r) => term * r,
                None => match ln_term(spec, h, k + 1, lnz)? {
                    TermLog::Value { ln_abs, sign, .. } => sign * (ln_abs - ln_scale).exp(),
                    TermLog::ZeroTransient => 0.0,
                    TermLog::ZeroForever => break,
                },
            };
            let partial = fam.value().abs();
            if term.abs() < SERIES_REL_TOL * partial {
                small_run += 1;
            } else {
                small_run = 0;
            }
            k += 1;
            if small_run >= SERIES_SMALL_RUN && next.abs() <= term.abs() {
                fam_err += next.abs();
                break;
            }
            if k - k0 >= MAX_TERMS {
                return Err(Error::Convergence {
                    what: "Meijer-G residue series",
                    partial: fam.value() * ln_scale.exp(),
                    terms: k - k0,
                });
            }
            term = next;
        }
        total.merge(&fam);
        abs_err += fam_err;
    }
    let sum = total.value();
    Ok(Scaled {
        ln_scale,
        sum,
        abs_err: abs_err + EPS * sum.abs(),
        terms,
    })
}

/// `ln|1/Γ(x)|` bounded from above for real `x`, smooth through the zeros
/// of `1/Γ` on the negative axis.
fn ln_recip_gamma_envelope(x: f64) -> f64 {
    if x >= 0.5 {
        -ln_gamma_signed(x).0
    } else {
        ln_gamma_signed(1.0 - x).0 - std::f64::consts::PI.ln()
    }
}

struct Contour<'a> {
    spec: &'a MeijerGSpec,
    lnz: f64,
}

impl Contour<'_> {
    fn strip(&self) -> (f64, f64) {
        let lo = self.spec.b[..self.spec.m]
            .iter()
            .map(|b| -b)
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = self.spec.a[..self.spec.n]
            .iter()
            .map(|a| 1.0 - a)
            .fold(f64::INFINITY, f64::min);
        (lo, hi)
    }

    /// Upper envelope of `ln|Φ(c) z^{-c}|` on the real axis.
    fn envelope(&self, c: f64) -> f64 {
        let s = self.spec;
        let mut v = -c * self.lnz;
        for b in &s.b[..s.m] {
            v += ln_gamma_signed(b + c).0;
        }
        for a in &s.a[..s.n] {
            v += ln_gamma_signed(1.0 - a - c).0;
        }
        for b in &s.b[s.m..] {
            v += ln_recip_gamma_envelope(1.0 - b - c);
        }
        for a in &s.a[s.n..] {
            v += ln_recip_gamma_envelope(a + c);
        }
        v
    }

    fn ln_integrand(&self, sv: Complex64) -> Complex64 {
        let s = self.spec;
        let mut v = -sv * self.lnz;
        for b in &s.b[..s.m] {
            v += ln_gamma_complex(sv + b);
        }
        for a in &s.a[..s.n] {
            v += ln_gamma_complex(1.0 - a - sv);
        }
        for b in &s.b[s.m..] {
            v -= ln_gamma_complex(1.0 - b - sv);
        }
        for a in &s.a[s.n..] {
            v -= ln_gamma_complex(sv + a);
        }
        v
    }

    /// Abscissa minimising the envelope inside `[lo, hi]` (golden section).
    fn saddle(&self, lo: f64, hi: f64) -> f64 {
        let mut hi = hi;
        if !hi.is_finite() {
            // Expand until the envelope turns upward.
            let mut step = 1.0;
            let mut prev = self.envelope(lo);
            loop {
                let nx = lo + step;
                let v = self.envelope(nx);
                if v > prev || step > 1e6 {
                    hi = nx;
                    break;
                }
                prev = v;
                step *= 2.0;
            }
        }
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut l, mut r) = (lo, hi);
        let mut x1 = r - g * (r - l);
        let mut x2 = l + g * (r - l);
        let (mut f1, mut f2) = (self.envelope(x1), self.envelope(x2));
        for _ in 0..80 {
            if f1 <= f2 {
                r = x2;
                x2 = x1;
                f2 = f1;
                x1 = r - g * (r - l);
                f1 = self.envelope(x1);
            } else {
                l = x1;
                x1 = x2;
                f1 = f2;
                x2 = l + g * (r - l);
                f2 = self.envelope(x2);
            }
            if (r - l).abs() < 1e-6 * (1.0 + l.abs()) {
                break;
            }
        }
        0.5 * (l + r)
    }
}

const CONTOUR_MAX_LEVELS: usize = 12;
const CONTOUR_MAX_T: f64 = 1e5;

fn contour_integral(spec: &MeijerGSpec, z: f64, abscissa: Option<f64>) -> Result<Scaled> {
    if spec.m == 0 {
        return Err(Error::ContourInfeasible("no left poles (m = 0)".into()));
    }
    let decay = (spec.m + spec.n) as f64 - 0.5 * (spec.p() + spec.q()) as f64;
    if decay <= 0.0 {
        return Err(Error::ContourInfeasible(
            "integrand does not decay along vertical lines".into(),
        ));
    }
    let contour = Contour { spec, lnz: z.ln() };
    let (lo, hi) = contour.strip();
    if !(lo < hi) {
        return Err(Error::ContourInfeasible(format!(
            "left poles reach {lo}, right poles start at {hi}"
        )));
    }
    let margin = if hi.is_finite() {
        (0.25 * (hi - lo)).min(0.25)
    } else {
        0.25
    };
    let c = match abscissa {
        Some(c) if c > lo && c < hi => c,
        Some(c) => {
            return Err(Error::ContourInfeasible(format!(
                "abscissa {c} outside admissible strip ({lo}, {hi})"
            )))
        }
        None => contour.saddle(lo + margin, hi - margin),
    };
    let dist = (c - lo).min(hi - c);
    let ln_ref = contour.envelope(c);
    let f = |t: f64| -> Complex64 { (contour.ln_integrand(Complex64::new(c, t)) - ln_ref).exp() };

    // Trapezoid on [0, T] of Re F (the integrand is conjugate-symmetric).
    let mut h = (0.5 * dist).min(0.5);
    let f0 = f(0.0);
    let mut peak = f0.norm();
    let mut sum = CompensatedSum::new();
    let mut abs_sum = 0.5 * f0.re.abs();
    sum.add(0.5 * f0.re);
    let mut k = 1usize;
    let mut quiet = 0.0;
    loop {
        let t = k as f64 * h;
        let v = f(t);
        let norm = v.norm();
        if !norm.is_finite() {
            return Err(Error::Convergence {
                what: "Mellin-Barnes contour integral (overflow)",
                partial: sum.value(),
                terms: k,
            });
        }
        peak = peak.max(norm);
        sum.add(v.re);
        abs_sum += v.re.abs();
        if norm < 1e-18 * peak {
            quiet += h;
        } else {
            quiet = 0.0;
        }
        if quiet >= 2.0 && t >= 1.0 {
            break;
        }
        if t > CONTOUR_MAX_T {
            return Err(Error::Convergence {
                what: "Mellin-Barnes contour integral (tail)",
                partial: sum.value(),
                terms: k,
            });
        }
        k += 1;
    }
    let t_end = k as f64 * h;
    let mut estimate = sum.value() * h;
    let mut evaluations = k + 1;
    let mut change = f64::INFINITY;
    for _ in 0..CONTOUR_MAX_LEVELS {
        let half = 0.5 * h;
        let mut mid = CompensatedSum::new();
        let mut t = half;
        while t < t_end {
            let v = f(t);
            mid.add(v.re);
            abs_sum += v.re.abs();
            evaluations += 1;
            t += h;
        }
        sum.merge(&mid);
        h = half;
        let refined = sum.value() * h;
        change = (refined - estimate).abs();
        estimate = refined;
        if change <= 1e-15 * abs_sum * h + 1e-14 * estimate.abs() {
            break;
        }
    }
    let l1 = abs_sum * h;
    let pi = std::f64::consts::PI;
    Ok(Scaled {
        ln_scale: ln_ref,
        sum: estimate / pi,
        abs_err: (change + 64.0 * EPS * l1 + 1e-18 * peak * t_end) / pi,
        terms: evaluations,
    })
}
