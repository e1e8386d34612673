//! Haar-random unitaries and Monte-Carlo checks of Haar integrals.
//!
//! Every check averages an integrand over `samples` unitaries drawn in
//! fixed-size chunks, each chunk with its own derived seed, so results do
//! not depend on the thread count.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::KahanSum;
use crate::sv::C64;

pub type CMatrix = DMatrix<C64>;

const CHUNK: usize = 1000;

/// Draws Haar unitaries of a fixed dimension from a seeded stream.
#[derive(Debug, Clone)]
pub struct HaarSampler {
    d: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl HaarSampler {
    pub fn new(d: usize, seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("Haar dimension must be at least 2"));
        }
        Ok(Self {
            d,
            rng: seed::rng(seed, &[seed::tag("haar"), d as u64]),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sample(&mut self) -> CMatrix {
        sample_haar(self.d, &mut self.rng)
    }
}

/// QR of a complex Ginibre matrix with the phases of diag(R) moved into Q.
pub fn sample_haar<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// max |(U†U − I)_ij|.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let d = u.nrows();
    let p = u.adjoint() * u;
    let mut e: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let t = if i == j { 1.0 } else { 0.0 };
            e = e.max((p[(i, j)] - t).norm());
        }
    }
    e
}

/// Random Hermitian (G + G†)/2 with standard complex Gaussian G.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    (&g + g.adjoint()).scale(0.5)
}

/// Running sums of real and imaginary parts and their squares.
#[derive(Debug, Clone, Default)]
struct Accum {
    re: KahanSum,
    im: KahanSum,
    re2: KahanSum,
    im2: KahanSum,
}

impl Accum {
    fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
        self.re2.add(z.re * z.re);
        self.im2.add(z.im * z.im);
    }

    fn merge(&mut self, o: &Accum) {
        self.re.add(o.re.value());
        self.im.add(o.im.value());
        self.re2.add(o.re2.value());
        self.im2.add(o.im2.value());
    }

    /// Mean and per-component standard errors.
    fn finish(&self, n: usize) -> (C64, f64, f64) {
        let nf = n as f64;
        let mr = self.re.value() / nf;
        let mi = self.im.value() / nf;
        let vr = ((self.re2.value() / nf - mr * mr) * nf / (nf - 1.0)).max(0.0);
        let vi = ((self.im2.value() / nf - mi * mi) * nf / (nf - 1.0)).max(0.0);
        (C64::new(mr, mi), (vr / nf).sqrt(), (vi / nf).sqrt())
    }
}

/// Monte-Carlo means of `k` complex integrands, also returning the largest
/// unitarity error seen.
fn monte_carlo<F>(d: usize, samples: usize, seed: u64, k: usize, f: F) -> (Vec<(C64, f64, f64)>, f64)
where
    F: Fn(&CMatrix, &mut rand_chacha::ChaCha8Rng, &mut [C64]) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(Vec<Accum>, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng(seed, &[seed::tag("haar-mc"), d as u64, c as u64]);
            let mut acc = vec![Accum::default(); k];
            let mut buf = vec![C64::new(0.0, 0.0); k];
            let mut worst: f64 = 0.0;
            let count = CHUNK.min(samples - c * CHUNK);
            for _ in 0..count {
                let u = sample_haar(d, &mut rng);
                worst = worst.max(unitarity_error(&u));
                f(&u, &mut rng, &mut buf);
                for (a, z) in acc.iter_mut().zip(&buf) {
                    a.add(*z);
                }
            }
            (acc, worst)
        })
        .collect();
    let mut total = vec![Accum::default(); k];
    let mut worst: f64 = 0.0;
    for (acc, w) in &parts {
        worst = worst.max(*w);
        for (t, a) in total.iter_mut().zip(acc) {
            t.merge(a);
        }
    }
    (total.iter().map(|a| a.finish(samples)).collect(), worst)
}

/// One Monte-Carlo estimate compared with its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub d: usize,
    pub estimate_re: f64,
    pub estimate_im: f64,
    pub oracle_re: f64,
    pub oracle_im: f64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    /// Deviation tolerance in standard errors.
    pub tolerance_se: f64,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, d: usize, est: (C64, f64, f64), oracle: C64, k: f64) -> Self {
        let (m, se_re, se_im) = est;
        let ok = |diff: f64, se: f64| diff.abs() <= k * se + 1e-9;
        Self {
            name: name.into(),
            d,
            estimate_re: m.re,
            estimate_im: m.im,
            oracle_re: oracle.re,
            oracle_im: oracle.im,
            std_error_re: se_re,
            std_error_im: se_im,
            tolerance_se: k,
            pass: ok(m.re - oracle.re, se_re) && ok(m.im - oracle.im, se_im),
        }
    }
}

/// Tuple-wise comparison of a moment tensor against its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub name: String,
    pub d: usize,
    pub samples: usize,
    pub tuples: usize,
    pub max_abs_error: f64,
    /// Reference standard error 1/√samples.
    pub std_error: f64,
    /// Largest |estimate − oracle| measured in per-tuple standard errors.
    pub max_z: f64,
    /// Mean of estimates on tuples where the oracle is nonzero.
    pub mean_nonzero_estimate: f64,
    pub tolerance_se: f64,
    pub pass: bool,
}

fn moment_report(name: &str, d: usize, samples: usize, est: &[(C64, f64, f64)], oracle: &[f64], k: f64) -> MomentReport {
    let mut max_err: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut nz = KahanSum::new();
    let mut nz_count = 0;
    for ((m, se_re, se_im), &o) in est.iter().zip(oracle) {
        let diff = *m - C64::new(o, 0.0);
        max_err = max_err.max(diff.norm());
        if *se_re > 0.0 {
            max_z = max_z.max(diff.re.abs() / se_re);
        }
        if *se_im > 0.0 {
            max_z = max_z.max(diff.im.abs() / se_im);
        }
        if o != 0.0 {
            nz.add(m.re);
            nz_count += 1;
        }
    }
    let se = 1.0 / (samples as f64).sqrt();
    MomentReport {
        name: name.into(),
        d,
        samples,
        tuples: est.len(),
        max_abs_error: max_err,
        std_error: se,
        max_z,
        mean_nonzero_estimate: nz.value() / nz_count.max(1) as f64,
        tolerance_se: k,
        pass: max_err < k * se,
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    Ok(())
}

/// E[U_ij U*_km] = δ_ik δ_jm / d over all d⁴ index tuples.
pub fn verify_first_moment(d: usize, samples: usize, seed: u64) -> Result<MomentReport> {
    check_samples(samples)?;
    HaarSampler::new(d, seed)?;
    let d2 = d * d;
    let (est, _) = monte_carlo(d, samples, seed::derive(seed, &[1]), d2 * d2, |u, _, out| {
        // index (i, j, k, m) ↦ ((i·d + j)·d + k)·d + m
        for i in 0..d {
            for j in 0..d {
                let a = u[(i, j)];
                for k in 0..d {
                    for m in 0..d {
                        out[((i * d + j) * d + k) * d + m] = a * u[(k, m)].conj();
                    }
                }
            }
        }
    });
    let mut oracle = vec![0.0; d2 * d2];
    for i in 0..d {
        for j in 0..d {
            oracle[((i * d + j) * d + i) * d + j] = 1.0 / d as f64;
        }
    }
    Ok(moment_report("first_moment", d, samples, &est, &oracle, 4.0))
}

/// Standard second moment E[U_{i1j1} U_{i2j2} U*_{k1m1} U*_{k2m2}] as a sum
/// over pairings with Weingarten weights 1/(d²−1) and −1/(d(d²−1)).
pub fn second_moment_oracle(d: usize, i: [usize; 2], j: [usize; 2], k: [usize; 2], m: [usize; 2]) -> f64 {
    let df = d as f64;
    let wg = |same: bool| {
        if same {
            1.0 / (df * df - 1.0)
        } else {
            -1.0 / (df * (df * df - 1.0))
        }
    };
    let perms = [[0usize, 1], [1, 0]];
    let mut total = 0.0;
    for s in perms {
        if i[0] != k[s[0]] || i[1] != k[s[1]] {
            continue;
        }
        for t in perms {
            if j[0] != m[t[0]] || j[1] != m[t[1]] {
                continue;
            }
            total += wg(s == t);
        }
    }
    total
}

/// Tuple-wise second-moment check; d⁸ tuples, so only small d is allowed.
pub fn verify_second_moment(d: usize, samples: usize, seed: u64) -> Result<MomentReport> {
    check_samples(samples)?;
    if d > 3 {
        return Err(Error::invalid("tuple-wise second moment limited to d <= 3"));
    }
    HaarSampler::new(d, seed)?;
    let n = d.pow(8);
    let idx = move |t: usize| -> [[usize; 2]; 4] {
        let digit = |p: u32| (t / d.pow(p)) % d;
        [[digit(7), digit(6)], [digit(5), digit(4)], [digit(3), digit(2)], [digit(1), digit(0)]]
    };
    let (est, _) = monte_carlo(d, samples, seed::derive(seed, &[2]), n, move |u, _, out| {
        for (t, o) in out.iter_mut().enumerate() {
            let [i, j, k, m] = idx(t);
            *o = u[(i[0], j[0])] * u[(i[1], j[1])] * u[(k[0], m[0])].conj() * u[(k[1], m[1])].conj();
        }
    });
    let oracle: Vec<f64> = (0..n)
        .map(|t| {
            let [i, j, k, m] = idx(t);
            second_moment_oracle(d, i, j, k, m)
        })
        .collect();
    Ok(moment_report("second_moment", d, samples, &est, &oracle, 4.0))
}

fn tr(m: &CMatrix) -> C64 {
    m.trace()
}

/// E Tr[U A U† B] = Tr A Tr B / d.
pub fn oracle_a4(a: &CMatrix, b: &CMatrix) -> C64 {
    tr(a) * tr(b) / a.nrows() as f64
}

/// E Tr[U A U† B U C U† D].
pub fn oracle_a5(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> C64 {
    let n = a.nrows() as f64;
    let (ta, tb, tc, td) = (tr(a), tr(b), tr(c), tr(d));
    let tac = tr(&(a * c));
    let tbd = tr(&(b * d));
    (ta * tc * tbd + tac * tb * td) / (n * n - 1.0) - (tac * tbd + ta * tb * tc * td) / (n * (n * n - 1.0))
}

/// E Tr[U A U† B] Tr[U C U† D].
pub fn oracle_a6(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> C64 {
    let n = a.nrows() as f64;
    let (ta, tb, tc, td) = (tr(a), tr(b), tr(c), tr(d));
    let tac = tr(&(a * c));
    let tbd = tr(&(b * d));
    (ta * tb * tc * td + tac * tbd) / (n * n - 1.0) - (tac * tb * td + ta * tc * tbd) / (n * (n * n - 1.0))
}

/// Test matrices for the trace identities.
#[derive(Debug, Clone)]
pub struct TraceOperands {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

impl TraceOperands {
    pub fn random_hermitian(d: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed, &[seed::tag("operands"), d as u64]);
        Self {
            a: random_hermitian(d, &mut rng),
            b: random_hermitian(d, &mut rng),
            c: random_hermitian(d, &mut rng),
            d: random_hermitian(d, &mut rng),
        }
    }

    fn check(&self) -> Result<usize> {
        let n = self.a.nrows();
        for m in [&self.a, &self.b, &self.c, &self.d] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::invalid("trace operands must be square of equal size"));
            }
        }
        Ok(n)
    }
}

/// Monte-Carlo checks of the three trace identities for the given operands.
pub fn verify_trace_identities(samples: usize, seed: u64, ops: &TraceOperands) -> Result<Vec<IdentityCheck>> {
    check_samples(samples)?;
    let d = ops.check()?;
    HaarSampler::new(d, seed)?;
    let (est, _) = monte_carlo(d, samples, seed::derive(seed, &[3]), 3, |u, _, out| {
        let ua = u * &ops.a * u.adjoint();
        let uc = u * &ops.c * u.adjoint();
        let uab = &ua * &ops.b;
        let ucd = &uc * &ops.d;
        out[0] = tr(&uab);
        out[1] = (&uab * &ucd).trace();
        out[2] = tr(&uab) * tr(&ucd);
    });
    Ok(vec![
        IdentityCheck::new("trace_a4", d, est[0], oracle_a4(&ops.a, &ops.b), 4.0),
        IdentityCheck::new("trace_a5", d, est[1], oracle_a5(&ops.a, &ops.b, &ops.c, &ops.d), 4.0),
        IdentityCheck::new("trace_a6", d, est[2], oracle_a6(&ops.a, &ops.b, &ops.c, &ops.d), 4.0),
    ])
}

/// Pauli Y/2 on qubit 0 and Z on qubit 0 of an n-qubit register, and
/// ρ = |0…0⟩⟨0…0|.
fn gradient_operands(n: usize) -> (CMatrix, CMatrix, CMatrix) {
    let d = 1 << n;
    let mut v = CMatrix::zeros(d, d);
    let mut o = CMatrix::zeros(d, d);
    for i in 0..d {
        // qubit 0 is the low bit
        let flipped = i ^ 1;
        // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
        v[(flipped, i)] = if i & 1 == 0 { C64::new(0.0, 0.5) } else { C64::new(0.0, -0.5) };
        o[(i, i)] = C64::new(if i & 1 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    let mut rho = CMatrix::zeros(d, d);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    (v, o, rho)
}

/// Closed-form Var of i·Tr[[V, U₊†OU₊] U₋ρU₋†] for independent Haar U₋, U₊:
/// (Tr ρ² − 1/d)/(d² − 1) · 2 (Tr V² Tr O² / d − E Tr[VWVW]).
pub fn gradient_variance_closed_form(v: &CMatrix, o: &CMatrix, rho: &CMatrix) -> f64 {
    let d = v.nrows() as f64;
    let purity = tr(&(rho * rho)).re;
    let vv = tr(&(v * v)).re;
    let oo = tr(&(o * o)).re;
    let vwvw = oracle_a5(v, o, v, o).re;
    (purity - 1.0 / d) / (d * d - 1.0) * 2.0 * (vv * oo / d - vwvw)
}

/// Sampled gradient statistics compared with their closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub num_qubits: usize,
    pub d: usize,
    pub samples: usize,
    pub mean: f64,
    pub mean_std_error: f64,
    pub mean_pass: bool,
    pub variance: f64,
    pub variance_std_error: f64,
    pub closed_form: f64,
    pub relative_error: f64,
    pub variance_pass: bool,
}

/// Samples the gradient integrand for V = Y/2 and O = Z on qubit 0 and
/// ρ = |0⟩⟨0| on `n` qubits.
pub fn variance_formula_check(n: usize, samples: usize, seed: u64) -> Result<VarianceReport> {
    check_samples(samples)?;
    if !(1..=3).contains(&n) {
        return Err(Error::TooManyQubits { what: "variance check", max: 3, actual: n });
    }
    let d = 1 << n;
    let (v, o, rho) = gradient_operands(n);
    let (est, _) = monte_carlo(d, samples, seed::derive(seed, &[4]), 2, |u_minus, rng, out| {
        let u_plus = sample_haar(d, rng);
        let w = u_plus.adjoint() * &o * &u_plus;
        let comm = &v * &w - &w * &v;
        let sigma = u_minus * &rho * u_minus.adjoint();
        let g = (C64::new(0.0, 1.0) * (comm * sigma).trace()).re;
        out[0] = C64::new(g, 0.0);
        out[1] = C64::new(g * g, 0.0);
    });
    let (mean, mean_se, _) = est[0];
    let (m2, m2_se, _) = est[1];
    let variance = (m2.re - mean.re * mean.re) * samples as f64 / (samples as f64 - 1.0);
    let closed = gradient_variance_closed_form(&v, &o, &rho);
    let rel = (variance - closed).abs() / closed;
    Ok(VarianceReport {
        num_qubits: n,
        d,
        samples,
        mean: mean.re,
        mean_std_error: mean_se,
        mean_pass: mean.re.abs() <= 4.0 * mean_se,
        variance,
        variance_std_error: m2_se,
        closed_form: closed,
        relative_error: rel,
        variance_pass: rel < 0.05,
    })
}

/// Checks E|Tr U|² = 1, E|Tr U²|² = 2 and E|Tr U|⁴ = 2 for both U and V·U
/// with a fixed unitary V (left invariance).
pub fn left_invariance_check(d: usize, samples: usize, seed: u64) -> Result<Vec<IdentityCheck>> {
    check_samples(samples)?;
    if d < 2 {
        return Err(Error::invalid("Haar dimension must be at least 2"));
    }
    let fixed = sample_haar(d, &mut seed::rng(seed, &[seed::tag("left-fixed")]));
    let (est, _) = monte_carlo(d, samples, seed::derive(seed, &[5]), 6, |u, _, out| {
        let vu = &fixed * u;
        for (k, m) in [u, &vu].into_iter().enumerate() {
            let t1 = m.trace().norm_sqr();
            let t2 = (m * m).trace().norm_sqr();
            out[3 * k] = C64::new(t1, 0.0);
            out[3 * k + 1] = C64::new(t2, 0.0);
            out[3 * k + 2] = C64::new(t1 * t1, 0.0);
        }
    });
    let exact = [1.0, 2.0, 2.0];
    let names = ["abs_tr_u_sq", "abs_tr_u2_sq", "abs_tr_u_4th"];
    let mut out = Vec::new();
    for (k, who) in ["u", "vu"].iter().enumerate() {
        for j in 0..3 {
            out.push(IdentityCheck::new(
                format!("{who}_{}", names[j]),
                d,
                est[3 * k + j],
                C64::new(exact[j], 0.0),
                4.0,
            ));
        }
    }
    Ok(out)
}

/// Everything `haar-verify` emits for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarReport {
    pub d: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_unitarity_error: f64,
    pub first_moment: MomentReport,
    pub second_moment: Option<MomentReport>,
    pub trace_identities: Vec<IdentityCheck>,
    pub identity_operands: Vec<IdentityCheck>,
    pub left_invariance: Vec<IdentityCheck>,
    pub gradient: Option<VarianceReport>,
}

impl HaarReport {
    pub fn pass(&self) -> bool {
        self.max_unitarity_error < 1e-10
            && self.first_moment.pass
            && self.second_moment.as_ref().is_none_or(|m| m.pass)
            && self.trace_identities.iter().all(|c| c.pass)
            && self.identity_operands.iter().all(|c| c.pass)
            && self.left_invariance.iter().all(|c| c.pass)
            && self.gradient.as_ref().is_none_or(|g| g.mean_pass && g.variance_pass)
    }
}

/// Runs every check for dimension `d` (a power of two for the gradient
/// check, which covers d ≤ 8).
pub fn verify_all(d: usize, samples: usize, seed: u64) -> Result<HaarReport> {
    let mut worst: f64 = 0.0;
    let mut sampler = HaarSampler::new(d, seed)?;
    for _ in 0..100 {
        worst = worst.max(unitarity_error(&sampler.sample()));
    }
    let first_moment = verify_first_moment(d, samples, seed)?;
    let second_moment = if d == 2 { Some(verify_second_moment(d, samples, seed)?) } else { None };
    let ops = TraceOperands::random_hermitian(d, seed);
    let trace_identities = verify_trace_identities(samples, seed, &ops)?;
    let eye = CMatrix::identity(d, d);
    let ident = TraceOperands {
        a: eye.clone(),
        b: eye.clone(),
        c: eye.clone(),
        d: eye,
    };
    let identity_operands = verify_trace_identities(samples.min(1000), seed, &ident)?;
    let left_invariance = left_invariance_check(d, samples, seed)?;
    let gradient = if d.is_power_of_two() && d <= 8 {
        Some(variance_formula_check(d.trailing_zeros() as usize, samples, seed)?)
    } else {
        None
    };
    Ok(HaarReport {
        d,
        samples,
        seed,
        max_unitarity_error: worst,
        first_moment,
        second_moment,
        trace_identities,
        identity_operands,
        left_invariance,
        gradient,
    })
}
